//! Surface cell problems: the phase-field surface density with a jump datum
//! and the interface density of a sign field, for a few normals.

use stochat::cellprob::*;
use stochat::energy::EnergyParams;
use stochat::graph::build_voronoi_edges;
use stochat::lattice::generate_random_parking;

fn main() -> stochat::Result<()> {
    let t = 16.0;
    let dom = sweep_domain(2, t, 1.0)?;
    let ps = generate_random_parking(&dom, 1.0, 2)?;
    let es = build_voronoi_edges(&ps)?;
    let p = EnergyParams::default();
    let budget = SearchBudget::default();
    for k in 0..4 {
        let a = k as f64 * std::f64::consts::PI / 8.0;
        let nu = vec![a.cos(), a.sin()];
        let cube = CubeSpec::new(dom.center(), nu, t, es.m)?;
        let r = surface_cell_problem(&ps, &es, &JumpDatum::default(), &cube, &p, &budget)?;
        let r7 = surface_cell_problem(&ps, &es, &JumpDatum::new(7.0, 0.0)?, &cube, &p, &budget)?;
        let s1 = s1_cell_problem(&ps, &es, &cube, &budget)?;
        println!(
            "angle {a:.3}: phi {:.5} ({}, {} flips accepted)  same with a=7: {}  s1 {:.5}",
            r.density,
            r.candidate.kind.as_str(),
            r.log.flips_accepted,
            r.density == r7.density,
            s1.density
        );
    }
    Ok(())
}
