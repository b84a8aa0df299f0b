//! Evaluate the phase-field energy of a field pair, its weak-membrane lower
//! bound and the interface energy of a sign field.

use stochat::energy::*;
use stochat::graph::build_voronoi_edges;
use stochat::lattice::{generate_random_parking, BoxDomain};

fn main() -> stochat::Result<()> {
    let ps = generate_random_parking(&BoxDomain::cube(2, 16.0)?, 1.0, 3)?;
    let es = build_voronoi_edges(&ps)?;
    let scope = Scope::new(&ps, &es)?;

    // a smooth bump with a jump along x = 8
    let u: Vec<f64> = ps
        .points()
        .map(|x| (x[1] / 4.0).sin() + if x[0] > 8.0 { 1.0 } else { 0.0 })
        .collect();
    let v = vec![1.0; ps.len()];
    let g: Vec<f64> = ps.points().map(|x| (x[1] / 4.0).sin()).collect();

    for ell in [1.0, 2.0, 4.0] {
        let p = EnergyParams::new(0.5, 1.0, 0.1, ell)?;
        let e = total_energy(&scope, &u, &v, Some(&g), &p)?;
        println!(
            "ell={ell}: bulk {:.4}  well {:.4}  vgrad {:.4}  fidelity {:.4}  total {:.4}",
            e.bulk, e.well, e.vgrad, e.fidelity, e.total
        );
    }

    let p = EnergyParams::new(0.5, 1.0, 0.0, 1.0)?;
    let vc = closed_form_v(&scope, &u, &p)?;
    let e = total_energy(&scope, &u, &vc, None, &p)?;
    let wm = weak_membrane_energy(&scope, &u, &p, p.beta)?;
    println!(
        "with the optimal v: bulk + well = {:.10}, weak membrane = {:.10}",
        e.bulk + e.well,
        wm
    );
    println!("min v = {:.4}", vc.iter().cloned().fold(1.0, f64::min));

    let w: Vec<f64> = ps.points().map(|x| if x[0] > 8.0 { 1.0 } else { -1.0 }).collect();
    println!(
        "interface energy of the cut x = 8: {:.4}",
        interface_energy(&scope, &w, &p, 1.0)?
    );
    Ok(())
}
