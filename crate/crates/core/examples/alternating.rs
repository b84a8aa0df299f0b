//! Alternating minimization of the phase-field energy against a noisy
//! two-region datum on a jittered lattice.

use rand::Rng;
use stochat::energy::*;
use stochat::graph::build_voronoi_edges;
use stochat::lattice::{generate_jittered, BoxDomain};
use stochat::rng::stream;
use stochat::solver::{alternating_minimize, AltOptions};

fn main() -> stochat::Result<()> {
    let ps = generate_jittered(&BoxDomain::cube(2, 24.0)?, 1.0, 0.25, 5)?;
    let es = build_voronoi_edges(&ps)?;
    let scope = Scope::new(&ps, &es)?;
    let mut rng = stream(5);
    let g: Vec<f64> = ps
        .points()
        .map(|x| {
            let inside = (x[0] - 12.0).powi(2) + (x[1] - 12.0).powi(2) < 49.0;
            (if inside { 0.8 } else { 0.2 }) + rng.gen_range(-0.05..0.05)
        })
        .collect();
    let p = EnergyParams::new(1.0, 0.1, 0.5, 1.0)?;
    let (u, v, trace) = alternating_minimize(
        &scope,
        &g,
        &vec![1.0; ps.len()],
        Some(&g),
        &p,
        None,
        None,
        &AltOptions::default(),
    )?;

    for (k, e) in trace.energy_per_iter.iter().enumerate().take(8) {
        println!("iter {k:>3}  energy {e:.8}");
    }
    println!(
        "{} iterations, converged: {}, residuals {:?}",
        trace.iterations, trace.converged, trace.final_residuals
    );
    let crack = v.iter().filter(|&&x| x < 0.5).count();
    let err = u.iter().zip(&g).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / g.len() as f64;
    println!(
        "{crack} of {} points have v < 1/2; mean squared distance to the datum {err:.5}",
        ps.len()
    );
    Ok(())
}
