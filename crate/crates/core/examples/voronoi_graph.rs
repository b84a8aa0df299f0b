//! Voronoi and k-nearest-neighbor graphs of a parking lattice.

use stochat::graph::*;
use stochat::lattice::{generate_random_parking, BoxDomain};

fn main() -> stochat::Result<()> {
    let ps = generate_random_parking(&BoxDomain::cube(2, 20.0)?, 1.0, 7)?;
    let vor = build_voronoi_edges(&ps)?;
    let knn = build_knn_edges(&ps, 9)?;
    for (name, es) in [("voronoi", &vor), ("knn k=9", &knn)] {
        println!(
            "{name:<8} edges={:<5} mean degree {:.3}  max degree {}  range M={:.4}",
            es.num_ordered() / 2,
            es.num_ordered() as f64 / ps.len() as f64,
            es.max_degree,
            max_edge_range(es, &ps)
        );
    }
    let missing = vor.undirected_pairs().filter(|&(i, j)| !knn.contains(i, j)).count();
    println!("voronoi edges outside the 9-NN graph: {missing}");

    let cells = voronoi_cell_areas(&ps)?;
    let (lo, hi) = cells
        .areas
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    println!(
        "cell areas in [{lo:.3}, {hi:.3}], total {:.6}",
        cells.areas.iter().sum::<f64>()
    );

    let region = Region::Box {
        lo: vec![6.0, 6.0],
        hi: vec![14.0, 14.0],
    };
    let sub = restrict_to_region(&ps, &vor, &region)?;
    println!(
        "box [6, 14]^2: {} points, {} induced edges",
        sub.indices.len(),
        sub.edges.num_ordered() / 2
    );
    Ok(())
}
