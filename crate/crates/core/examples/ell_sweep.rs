//! Surface density as the lattice scale grows relative to eps, with the
//! lower and upper brackets in terms of the interface density.

use stochat::cellprob::*;
use stochat::graph::build_voronoi_edges;
use stochat::lattice::generate_periodic;

fn main() -> stochat::Result<()> {
    let t = 24.0;
    let dom = sweep_domain(2, t, 1.0)?;
    let ps = generate_periodic(&dom, 1.0)?;
    let es = build_voronoi_edges(&ps)?;
    let cube = CubeSpec::new(dom.center(), vec![1.0, 0.0], t, es.m)?;
    let rows = ell_sweep(
        &ps,
        &es,
        &cube,
        &[1.0, 2.0, 4.0, 8.0, 16.0],
        1.0,
        &SearchBudget::default(),
    )?;
    println!(
        "{:>4} {:>10} {:>8} {:>8} {:>8}  {:>12} {:>10}",
        "ell", "phi", "phi/ell", "lower", "upper", "lower gap", "planar gap"
    );
    for r in &rows {
        println!(
            "{:>4} {:>10.5} {:>8.4} {:>8.3} {:>8.3}  {:>12.4e} {:>10.4e}",
            r.ell,
            r.phi,
            r.phi / r.ell,
            r.lower,
            r.upper,
            r.min_lower_gap,
            r.planar_gap
        );
    }
    Ok(())
}
