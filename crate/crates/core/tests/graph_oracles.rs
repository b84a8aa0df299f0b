mod common;

use common::*;
use rand::Rng;
use stochat::graph::*;
use stochat::lattice::*;

/// Length of the part of the bisector of `i` and `j` inside the box and
/// closer to `i` and `j` than to any other point.
fn shared_facet(ps: &PointSet, i: usize, j: usize) -> f64 {
    let (a, b) = (ps.point(i), ps.point(j));
    let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
    let dir = [-(b[1] - a[1]), b[0] - a[0]];
    // parametrize x = mid + s dir and intersect half-planes n.x <= c
    let (mut s0, mut s1) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut cut = |n: [f64; 2], c: f64| {
        let nd = n[0] * dir[0] + n[1] * dir[1];
        let r = c - (n[0] * mid[0] + n[1] * mid[1]);
        if nd.abs() < 1e-300 {
            if r < 0.0 {
                s0 = 1.0;
                s1 = 0.0;
            }
        } else if nd > 0.0 {
            s1 = s1.min(r / nd);
        } else {
            s0 = s0.max(r / nd);
        }
    };
    let (lo, hi) = (ps.domain().lo(), ps.domain().hi());
    for k in 0..2 {
        let mut n = [0.0; 2];
        n[k] = 1.0;
        cut(n, hi[k]);
        n[k] = -1.0;
        cut(n, -lo[k]);
    }
    for k in 0..ps.len() {
        if k == i || k == j {
            continue;
        }
        let c = ps.point(k);
        // |x - a|^2 <= |x - c|^2  <=>  2 (c - a).x <= |c|^2 - |a|^2
        let n = [2.0 * (c[0] - a[0]), 2.0 * (c[1] - a[1])];
        cut(n, c[0] * c[0] + c[1] * c[1] - a[0] * a[0] - a[1] * a[1]);
    }
    ((s1 - s0) * (dir[0] * dir[0] + dir[1] * dir[1]).sqrt()).max(0.0)
}

#[test]
fn voronoi_edges_match_cell_intersections() {
    let mut checked = 0;
    for seed in 0..30 {
        let (ps, es) = small_instance(seed);
        for i in 0..ps.len() {
            for j in (i + 1)..ps.len() {
                let len = shared_facet(&ps, i, j);
                if (1e-9..1e-6).contains(&len) {
                    continue;
                }
                assert_eq!(es.contains(i, j), len > 1e-6, "seed {seed} pair {i} {j} facet {len}");
                checked += 1;
            }
        }
    }
    assert!(checked > 2_000, "{checked}");
}

#[test]
fn jittered_grid_edges_match_cell_intersections() {
    for seed in 0..10 {
        let ps = generate_jittered(&BoxDomain::cube(2, 6.0).unwrap(), 1.0, 0.3, seed).unwrap();
        let es = build_voronoi_edges(&ps).unwrap();
        for i in 0..ps.len() {
            for j in (i + 1)..ps.len() {
                let len = shared_facet(&ps, i, j);
                if !(1e-9..1e-6).contains(&len) {
                    assert_eq!(es.contains(i, j), len > 1e-6);
                }
            }
        }
    }
}

#[test]
fn parking_graphs_have_planar_degrees_and_short_edges() {
    let mut degs = Vec::new();
    for seed in 0..64 {
        let ps = generate_random_parking(&BoxDomain::cube(2, 20.0).unwrap(), 1.0, seed).unwrap();
        let es = build_voronoi_edges(&ps).unwrap();
        degs.push(es.num_ordered() as f64 / ps.len() as f64);
        assert!(max_edge_range(&es, &ps) <= 2.0 * ps.big_r);
        assert!(es.max_degree <= MAX_DEGREE);
        // a planar triangulation has fewer than 3n edges
        assert!(es.num_ordered() < 6 * ps.len());
    }
    for d in &degs {
        assert!((5.5..=6.5).contains(d), "{d}");
    }
    let mean = degs.iter().sum::<f64>() / degs.len() as f64;
    assert!((5.5..=6.5).contains(&mean), "{mean}");
}

#[test]
fn nine_nearest_contain_the_voronoi_neighbors() {
    let mut hits = 0;
    for seed in 0..32 {
        let ps = generate_random_parking(&BoxDomain::cube(2, 15.0).unwrap(), 1.0, 1000 + seed).unwrap();
        let vor = build_voronoi_edges(&ps).unwrap();
        let knn = build_knn_edges(&ps, 9).unwrap();
        if vor.undirected_pairs().all(|(i, j)| knn.contains(i, j)) {
            hits += 1;
        }
    }
    assert!(hits * 100 >= 95 * 32, "{hits} of 32");
}

#[test]
fn knn_lists_are_the_true_nearest() {
    let mut r = rng(77);
    let ps = generate_random_parking(&BoxDomain::cube(2, 8.0).unwrap(), 1.0, 77).unwrap();
    for _ in 0..20 {
        let i = r.gen_range(0..ps.len());
        let k = r.gen_range(1..8);
        let got = nearest_neighbors(&ps, i, k);
        let d = |j: usize| {
            let (a, b) = (ps.point(i), ps.point(j));
            (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
        };
        let mut all: Vec<usize> = (0..ps.len()).filter(|&j| j != i).collect();
        all.sort_by(|&a, &b| d(a).partial_cmp(&d(b)).unwrap());
        assert_eq!(got.len(), k);
        let kth = d(all[k - 1]);
        assert!(got.iter().all(|&j| d(j) <= kth));
    }
}

#[test]
fn cell_areas_cover_the_box() {
    for seed in 0..8 {
        let (ps, _) = small_instance(seed);
        let cells = voronoi_cell_areas(&ps).unwrap();
        let total: f64 = cells.areas.iter().sum();
        assert!((total - ps.domain().volume()).abs() < 1e-9 * ps.domain().volume());
        // a Monte-Carlo sample of the box lands in each cell at the expected rate
        let mut r = rng(seed);
        let mut counts = vec![0usize; ps.len()];
        let m = 20_000;
        for _ in 0..m {
            let x = [
                r.gen_range(ps.domain().lo()[0]..ps.domain().hi()[0]),
                r.gen_range(ps.domain().lo()[1]..ps.domain().hi()[1]),
            ];
            let near = (0..ps.len())
                .min_by(|&a, &b| {
                    let da = (ps.point(a)[0] - x[0]).powi(2) + (ps.point(a)[1] - x[1]).powi(2);
                    let db = (ps.point(b)[0] - x[0]).powi(2) + (ps.point(b)[1] - x[1]).powi(2);
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap();
            counts[near] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            let want = cells.areas[i] / total;
            assert!((c as f64 / m as f64 - want).abs() < 0.02, "cell {i}");
        }
    }
}

#[test]
fn parking_density_is_stable() {
    let mut dens = Vec::new();
    for seed in 0..16 {
        let ps = generate_random_parking(&BoxDomain::cube(2, 50.0).unwrap(), 1.0, seed).unwrap();
        let rep = check_admissibility(&ps).unwrap();
        assert!(rep.pass_hardcore && rep.pass_covering);
        dens.push(ps.len() as f64 / 2500.0);
    }
    let mean = dens.iter().sum::<f64>() / dens.len() as f64;
    assert!((0.5..=0.8).contains(&mean), "{mean}");
}

#[test]
fn restriction_keeps_induced_edges() {
    let (ps, es) = small_instance(9);
    let region = Region::Box {
        lo: vec![1.0, 1.0],
        hi: vec![4.0, 3.5],
    };
    let rs = restrict_to_region(&ps, &es, &region).unwrap();
    let inside: Vec<usize> = (0..ps.len()).filter(|&i| region.contains(ps.point(i))).collect();
    assert_eq!(rs.indices, inside);
    let induced = es
        .undirected_pairs()
        .filter(|&(i, j)| region.contains(ps.point(i)) && region.contains(ps.point(j)))
        .count();
    assert_eq!(rs.edges.undirected_pairs().count(), induced);
}
