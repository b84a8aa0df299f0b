//! Independent reference implementations shared by the integration tests.
//! Nothing here calls the crate's energy, solver or cell-problem code.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use stochat::graph::{build_voronoi_edges, EdgeSet};
use stochat::lattice::{generate_random_parking, BoxDomain, PointSet};
use stochat::rng::{stream, Stream};

pub fn rng(seed: u64) -> Stream {
    stream(seed)
}

/// Small random parking lattice with Voronoi edges, `n <= 50`.
pub fn small_instance(seed: u64) -> (PointSet, EdgeSet) {
    let side = 4.5 + (seed % 4) as f64 * 0.5;
    let ps = generate_random_parking(&BoxDomain::cube(2, side).unwrap(), 1.0, seed).unwrap();
    assert!(ps.len() <= 50);
    let es = build_voronoi_edges(&ps).unwrap();
    (ps, es)
}

pub fn random_field(r: &mut Stream, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(lo..hi)).collect()
}

pub fn is_edge(es: &EdgeSet, i: usize, j: usize) -> bool {
    es.neighbors(i).contains(&j)
}

/// Scaled energy from the definitions, by a double loop over all point
/// pairs: lattice spacing `kappa = ell eps`,
/// bulk `1/2 sum kappa^d v_x^2 |du / kappa|^2`,
/// surface `beta/2 (sum kappa^d (v-1)^2 / eps + 1/2 sum eps kappa^d |dv / kappa|^2)`,
/// fidelity `gamma sum kappa^d (u - g)^2`.
#[allow(clippy::too_many_arguments)]
pub fn naive_energy(
    ps: &PointSet,
    es: &EdgeSet,
    u: &[f64],
    v: &[f64],
    g: Option<&[f64]>,
    eps: f64,
    beta: f64,
    gamma: f64,
    ell: f64,
) -> [f64; 4] {
    let d = ps.dim() as i32;
    let k = ell * eps;
    let n = ps.len();
    let (mut bulk, mut grad) = (0.0, 0.0);
    for x in 0..n {
        for y in 0..n {
            if x != y && is_edge(es, x, y) {
                bulk += 0.5 * k.powi(d) * v[x] * v[x] * ((u[x] - u[y]) / k).powi(2);
                grad += 0.5 * beta * 0.5 * eps * k.powi(d) * ((v[x] - v[y]) / k).powi(2);
            }
        }
    }
    let well: f64 = (0..n)
        .map(|x| 0.5 * beta * k.powi(d) * (v[x] - 1.0).powi(2) / eps)
        .sum();
    let fid = match g {
        Some(g) => (0..n).map(|x| gamma * k.powi(d) * (u[x] - g[x]).powi(2)).sum(),
        None => 0.0,
    };
    [bulk, well, grad, fid]
}

/// `1/2 sum eps^(d-1) f_alpha(eps sum_y |du / eps|^2)`.
pub fn naive_weak_membrane(ps: &PointSet, es: &EdgeSet, u: &[f64], eps: f64, alpha: f64) -> f64 {
    let d = ps.dim() as i32;
    (0..ps.len())
        .map(|x| {
            let t: f64 = es
                .neighbors(x)
                .iter()
                .map(|&y| eps * ((u[x] - u[y]) / eps).powi(2))
                .sum();
            0.5 * eps.powi(d - 1) * t / (1.0 + t / alpha)
        })
        .sum()
}

/// Dense Hessian and linear term of a quadratic `x -> 1/2 x^T H x - b^T x + c`
/// given by evaluating `f` (exact for quadratics).
pub fn dense_quadratic(n: usize, f: &dyn Fn(&[f64]) -> f64) -> (DMatrix<f64>, DVector<f64>) {
    let zero = vec![0.0; n];
    let f0 = f(&zero);
    let mut diag = vec![0.0; n];
    let mut b = DVector::zeros(n);
    let unit = |i: usize, s: f64| {
        let mut x = zero.clone();
        x[i] = s;
        x
    };
    for i in 0..n {
        let fp = f(&unit(i, 1.0));
        let fm = f(&unit(i, -1.0));
        diag[i] = fp + fm - 2.0 * f0;
        b[i] = -(fp - fm) / 2.0;
    }
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = diag[i];
        for j in (i + 1)..n {
            let mut x = zero.clone();
            x[i] = 1.0;
            x[j] = 1.0;
            let hij = f(&x) - f0 - (diag[i] / 2.0 - b[i]) - (diag[j] / 2.0 - b[j]);
            h[(i, j)] = hij;
            h[(j, i)] = hij;
        }
    }
    (h, b)
}

/// Minimize a strictly convex quadratic over the entries not in `fixed`.
pub fn dense_minimize(n: usize, fixed: &[Option<f64>], f: &dyn Fn(&[f64]) -> f64) -> Vec<f64> {
    let free: Vec<usize> = (0..n).filter(|&i| fixed[i].is_none()).collect();
    let base: Vec<f64> = (0..n).map(|i| fixed[i].unwrap_or(0.0)).collect();
    let g = |y: &[f64]| {
        let mut x = base.clone();
        for (k, &i) in free.iter().enumerate() {
            x[i] = y[k];
        }
        f(&x)
    };
    let (h, b) = dense_quadratic(free.len(), &g);
    let y = h.cholesky().expect("positive definite").solve(&b);
    let mut x = base;
    for (k, &i) in free.iter().enumerate() {
        x[i] = y[k];
    }
    x
}

/// A square cube with normal `nu` and its membership, layer and offset
/// predicates, written out from the definitions.
pub struct Cube {
    pub center: [f64; 2],
    pub nu: [f64; 2],
    pub side: f64,
}

impl Cube {
    fn coords(&self, p: &[f64]) -> (f64, f64) {
        let (dx, dy) = (p[0] - self.center[0], p[1] - self.center[1]);
        (dx * self.nu[0] + dy * self.nu[1], -dx * self.nu[1] + dy * self.nu[0])
    }

    pub fn inside(&self, p: &[f64]) -> bool {
        let (a, b) = self.coords(p);
        a.abs() < self.side / 2.0 && b.abs() < self.side / 2.0
    }

    pub fn to_boundary(&self, p: &[f64]) -> f64 {
        let (a, b) = self.coords(p);
        (self.side / 2.0 - a.abs()).min(self.side / 2.0 - b.abs())
    }

    pub fn offset(&self, p: &[f64]) -> f64 {
        self.coords(p).0
    }
}

/// Minimum of `F^s` over `v` vanishing on the cut of some `{a, 0}`-valued
/// `u` with planar data on the `delta`-layer and `v` planar on the `m`-layer,
/// by enumeration of every `u` and a dense solve per `u`. `None` if more
/// than `max_free` sites are free.
pub fn brute_force_surface(
    ps: &PointSet,
    es: &EdgeSet,
    cube: &Cube,
    delta: f64,
    m: f64,
    beta: f64,
    max_free: usize,
) -> Option<f64> {
    let inside: Vec<usize> = (0..ps.len()).filter(|&i| cube.inside(ps.point(i))).collect();
    let loc = |g: usize| inside.iter().position(|&x| x == g);
    let n = inside.len();
    let mut nbrs = vec![Vec::new(); n];
    for (a, &i) in inside.iter().enumerate() {
        for &j in es.neighbors(i) {
            if let Some(b) = loc(j) {
                nbrs[a].push(b);
            }
        }
    }
    let dist: Vec<f64> = inside.iter().map(|&i| cube.to_boundary(ps.point(i))).collect();
    let off: Vec<f64> = inside.iter().map(|&i| cube.offset(ps.point(i))).collect();
    let free: Vec<usize> = (0..n).filter(|&a| dist[a] > delta).collect();
    if free.len() > max_free {
        return None;
    }
    let energy = |v: &[f64]| -> f64 {
        let mut e = 0.0;
        for a in 0..n {
            e += 0.5 * beta * (v[a] - 1.0).powi(2);
            for &b in &nbrs[a] {
                e += 0.25 * beta * (v[a] - v[b]).powi(2);
            }
        }
        e
    };
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << free.len()) {
        let mut up: Vec<bool> = off.iter().map(|&o| o > 0.0).collect();
        for (k, &a) in free.iter().enumerate() {
            up[a] = mask >> k & 1 == 1;
        }
        let mut fixed: Vec<Option<f64>> = (0..n)
            .map(|a| (dist[a] <= m).then(|| if off[a].abs() <= m { 0.0 } else { 1.0 }))
            .collect();
        let mut ok = true;
        for a in 0..n {
            if nbrs[a].iter().any(|&b| up[b] != up[a]) {
                if fixed[a] == Some(1.0) {
                    ok = false;
                }
                fixed[a] = Some(0.0);
            }
        }
        if !ok {
            continue;
        }
        let v = if fixed.iter().all(|x| x.is_some()) {
            fixed.iter().map(|x| x.unwrap()).collect()
        } else {
            dense_minimize(n, &fixed, &energy)
        };
        best = best.min(energy(&v));
    }
    Some(best)
}
