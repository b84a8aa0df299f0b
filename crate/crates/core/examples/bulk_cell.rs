//! Bulk cell problem: the homogenized quadratic form, estimated on a cube of
//! a random parking lattice and of the square grid.

use stochat::cellprob::*;
use stochat::graph::build_voronoi_edges;
use stochat::lattice::{generate_periodic, generate_random_parking};

fn main() -> stochat::Result<()> {
    for t in [8.0, 16.0, 24.0] {
        let dom = sweep_domain(2, t, 1.0)?;
        for (name, ps) in [
            ("parking", generate_random_parking(&dom, 1.0, 11)?),
            ("periodic", generate_periodic(&dom, 1.0)?),
        ] {
            let es = build_voronoi_edges(&ps)?;
            let cube = CubeSpec::new(dom.center(), vec![1.0, 0.0], t, es.m)?;
            let f = |xi: [f64; 2]| bulk_cell_problem(&ps, &es, &xi, &cube).map(|r| r.density);
            // entries of the form from three evaluations
            let (a, c) = (f([1.0, 0.0])?, f([0.0, 1.0])?);
            let b = (f([1.0, 1.0])? - a - c) / 2.0;
            let affine = affine_energy(&ps, &es, &[1.0, 0.0], &cube)? / (t * t);
            println!("t={t:<3} {name:<9} A = [[{a:.5}, {b:.5}], [{b:.5}, {c:.5}]]  affine e1 candidate {affine:.5}");
        }
    }
    Ok(())
}
