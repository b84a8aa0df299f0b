//! Finite-size cell problems for the homogenized densities.
//!
//! * [`bulk_cell_problem`]: Dirichlet energy of the harmonic extension of an
//!   affine datum from the boundary layer of a cube, per unit volume.
//! * [`surface_cell_problem`]: surface energy of the best `v` compatible with
//!   some two-valued `u` that jumps across a plane, per unit area.
//! * [`s1_cell_problem`]: interface energy of the best `+-1` field with
//!   planar boundary data, per unit area.
//!
//! The surface problems are combinatorial in `u`. They are solved by
//! exhaustive enumeration when the number of free sites is small and by a
//! single-site flip local search from the planar configuration otherwise, in
//! which case the result is an upper bound for the finite-volume minimum.

use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::energy::{
    bulk_energy, interface_energy, surface_energy_ell, total_energy, weak_membrane_energy, EnergyParams, Field, Scope,
};
use crate::error::{invalid, Error, Result};
use crate::graph::{build_knn_edges, build_voronoi_edges, restrict_to_region, EdgeSet, Region, Restriction};
use crate::lattice::{generate_jittered, generate_periodic, generate_random_parking, BoxDomain, LatticeKind, PointSet};
use crate::linalg::LinearSolver;
use crate::numeric::dot;
use crate::rng::{replica_seed, stream};
use crate::solver::{solve_u_step, v_quadratic, DirichletSpec, SolveTrace, V_CLAMP_TOL};

const UNIT_TOL: f64 = 1e-12;

/// Orthonormal frame whose first row is `nu`.
pub fn orthonormal_frame(nu: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = dot(nu, nu).sqrt();
    if (n - 1.0).abs() > UNIT_TOL {
        return invalid(format!("normal must have unit length, got |nu| = {n}"));
    }
    match nu.len() {
        2 => Ok(vec![nu.to_vec(), vec![-nu[1], nu[0]]]),
        3 => {
            let k = (0..3)
                .min_by(|&a, &b| nu[a].abs().total_cmp(&nu[b].abs()))
                .expect("three axes");
            let mut a: Vec<f64> = (0..3).map(|i| -nu[k] * nu[i]).collect();
            a[k] += 1.0;
            let na = dot(&a, &a).sqrt();
            a.iter_mut().for_each(|x| *x /= na);
            let b = vec![
                nu[1] * a[2] - nu[2] * a[1],
                nu[2] * a[0] - nu[0] * a[2],
                nu[0] * a[1] - nu[1] * a[0],
            ];
            Ok(vec![nu.to_vec(), a, b])
        }
        d => Err(Error::Dimension(format!(
            "normals must have 2 or 3 components, got {d}"
        ))),
    }
}

/// Open cube `Q_nu(center, side)` with a boundary layer of width `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeSpec {
    pub center: Vec<f64>,
    pub nu: Vec<f64>,
    pub side: f64,
    pub delta: f64,
    frame: Vec<Vec<f64>>,
}

impl CubeSpec {
    pub fn new(center: Vec<f64>, nu: Vec<f64>, side: f64, delta: f64) -> Result<Self> {
        if center.len() != nu.len() {
            return Err(Error::Dimension(format!(
                "center has {} components, normal has {}",
                center.len(),
                nu.len()
            )));
        }
        if center.iter().any(|x| !x.is_finite()) {
            return invalid("cube center must be finite");
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return invalid(format!("boundary layer width must be positive, got {delta}"));
        }
        if !(side > 4.0 * delta) || !side.is_finite() {
            return invalid(format!("cube side {side} must exceed 4 * delta = {}", 4.0 * delta));
        }
        let frame = orthonormal_frame(&nu)?;
        Ok(Self {
            center,
            nu,
            side,
            delta,
            frame,
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn frame(&self) -> &[Vec<f64>] {
        &self.frame
    }

    pub fn region(&self) -> Region {
        Region::Cube {
            center: self.center.clone(),
            frame: self.frame.clone(),
            side: self.side,
        }
    }

    /// Signed distance `<x - center, nu>` to the mid-plane.
    pub fn offset(&self, x: &[f64]) -> f64 {
        self.nu
            .iter()
            .zip(x.iter().zip(&self.center))
            .map(|(n, (a, c))| n * (a - c))
            .sum()
    }

    /// Distance from an interior point to the cube boundary.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        self.frame
            .iter()
            .map(|axis| {
                let s: f64 = axis
                    .iter()
                    .zip(x.iter().zip(&self.center))
                    .map(|(e, (a, c))| e * (a - c))
                    .sum();
                0.5 * self.side - s.abs()
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn check_fits(&self, domain: &BoxDomain) -> Result<()> {
        if domain.dim() != self.dim() {
            return Err(Error::Dimension(format!(
                "cube is {}-dimensional, lattice is {}-dimensional",
                self.dim(),
                domain.dim()
            )));
        }
        let d = self.dim();
        for mask in 0..(1usize << d) {
            let corner: Vec<f64> = (0..d)
                .map(|k| {
                    self.center[k]
                        + (0..d)
                            .map(|a| {
                                let s = if mask >> a & 1 == 1 { 0.5 } else { -0.5 };
                                s * self.side * self.frame[a][k]
                            })
                            .sum::<f64>()
                })
                .collect();
            let inside = (0..d).all(|k| corner[k] >= domain.lo()[k] - 1e-12 && corner[k] <= domain.hi()[k] + 1e-12);
            if !inside {
                return invalid(format!(
                    "cube of side {} around {:?} leaves the domain",
                    self.side, self.center
                ));
            }
        }
        Ok(())
    }
}

/// Two-valued jump datum `a` above the mid-plane of a cube, `b` on and below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpDatum {
    pub a: f64,
    pub b: f64,
}

impl JumpDatum {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return invalid("jump values must be finite");
        }
        Ok(Self { a, b })
    }

    pub fn value(&self, cube: &CubeSpec, x: &[f64]) -> f64 {
        if cube.offset(x) > 0.0 {
            self.a
        } else {
            self.b
        }
    }
}

impl Default for JumpDatum {
    fn default() -> Self {
        Self { a: 1.0, b: 0.0 }
    }
}

/// Limits of the combinatorial search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBudget {
    /// Attempted flips per free site before the local search stops.
    pub flips_per_site: usize,
    /// Enumerate all configurations when there are at most this many free sites.
    pub exhaustive_limit: usize,
    /// Seed of the scan order.
    pub seed: u64,
    pub linear: LinearSolver,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            flips_per_site: 20,
            exhaustive_limit: 12,
            seed: 0,
            linear: LinearSolver::Pcg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CandidateKind {
    /// Exact minimizer of a quadratic problem.
    Harmonic,
    /// The planar configuration, not improved by the search.
    Planar,
    /// Result of the flip search.
    LocalSearch,
    /// Best of all configurations.
    Exhaustive,
}

impl CandidateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CandidateKind::Harmonic => "harmonic",
            CandidateKind::Planar => "planar",
            CandidateKind::LocalSearch => "local-search",
            CandidateKind::Exhaustive => "exhaustive",
        }
    }
}

/// Minimizing configuration on the points of the cube.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub kind: CandidateKind,
    /// True when the value is only an upper bound for the minimum.
    pub heuristic: bool,
    /// Global indices of the cube points; `u` and `v` are indexed alike.
    pub indices: Vec<usize>,
    pub u: Field,
    pub v: Field,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SearchLog {
    pub evaluations: usize,
    pub flips_tried: usize,
    pub flips_accepted: usize,
    pub passes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellProblemResult {
    /// `raw_energy / side^d` (bulk) or `raw_energy / side^(d-1)` (surface).
    pub density: f64,
    pub raw_energy: f64,
    pub cube: CubeSpec,
    pub candidate: Candidate,
    pub trace: Option<SolveTrace>,
    pub log: SearchLog,
}

struct Cell {
    sub: Restriction,
    layer: Vec<f64>,
}

impl Cell {
    fn new(ps: &PointSet, es: &EdgeSet, cube: &CubeSpec) -> Result<Self> {
        if es.num_points() != ps.len() {
            return Err(Error::SizeMismatch {
                expected: ps.len(),
                got: es.num_points(),
            });
        }
        cube.check_fits(ps.domain())?;
        let sub = restrict_to_region(ps, es, &cube.region())?;
        if sub.indices.is_empty() {
            return invalid("cube contains no lattice points");
        }
        let layer = sub.points.points().map(|x| cube.boundary_distance(x)).collect();
        Ok(Self { sub, layer })
    }

    fn scope(&self) -> Scope<'_> {
        Scope::new(&self.sub.points, &self.sub.edges).expect("consistent restriction")
    }

    fn len(&self) -> usize {
        self.sub.indices.len()
    }
}

/// Energy of `u` on the cube, at unit scale with `v = 1`.
fn unit_bulk(scope: &Scope, u: &[f64]) -> Result<f64> {
    bulk_energy(scope, u, &vec![1.0; u.len()], &EnergyParams::default())
}

fn affine_values(cell: &Cell, xi: &[f64], cube: &CubeSpec) -> Vec<f64> {
    cell.sub
        .points
        .points()
        .map(|x| {
            xi.iter()
                .zip(x.iter().zip(&cube.center))
                .map(|(a, (b, c))| a * (b - c))
                .sum()
        })
        .collect()
}

fn check_xi(xi: &[f64], cube: &CubeSpec) -> Result<()> {
    if xi.len() != cube.dim() {
        return Err(Error::Dimension(format!(
            "xi has {} components, expected {}",
            xi.len(),
            cube.dim()
        )));
    }
    if xi.iter().any(|x| !x.is_finite()) {
        return invalid("xi must be finite");
    }
    Ok(())
}

/// Energy of the affine function `<xi, x - center>` on the cube.
pub fn affine_energy(ps: &PointSet, es: &EdgeSet, xi: &[f64], cube: &CubeSpec) -> Result<f64> {
    check_xi(xi, cube)?;
    let cell = Cell::new(ps, es, cube)?;
    unit_bulk(&cell.scope(), &affine_values(&cell, xi, cube))
}

/// Minimize `F^b(u, 1)` over `u` equal to `<xi, x - center>` on the boundary
/// layer of width `cube.delta`.
pub fn bulk_cell_problem(ps: &PointSet, es: &EdgeSet, xi: &[f64], cube: &CubeSpec) -> Result<CellProblemResult> {
    check_xi(xi, cube)?;
    let cell = Cell::new(ps, es, cube)?;
    let scope = cell.scope();
    let affine = affine_values(&cell, xi, cube);
    let bc = DirichletSpec::from_pairs(
        (0..cell.len())
            .filter(|&i| cell.layer[i] <= cube.delta)
            .map(|i| (i, affine[i])),
    )?;
    let v = vec![1.0; cell.len()];
    let step = solve_u_step(
        &scope,
        &affine,
        &v,
        None,
        &EnergyParams::default(),
        Some(&bc),
        LinearSolver::Pcg,
    )?;
    let e0 = unit_bulk(&scope, &affine)?;
    let e = unit_bulk(&scope, &step.field)?;
    Ok(CellProblemResult {
        density: e / cube.side.powi(cube.dim() as i32),
        raw_energy: e,
        cube: cube.clone(),
        candidate: Candidate {
            kind: CandidateKind::Harmonic,
            heuristic: false,
            indices: cell.sub.indices.clone(),
            u: step.field,
            v: Field(v),
        },
        trace: Some(SolveTrace {
            iterations: 1,
            energy_per_iter: vec![e0, e],
            final_residuals: vec![step.residual],
            converged: true,
        }),
        log: SearchLog::default(),
    })
}

struct Outcome {
    labels: Vec<bool>,
    energy: f64,
    v: Vec<f64>,
    kind: CandidateKind,
    log: SearchLog,
}

/// Minimize `eval` over labelings that agree with `init` off `free`.
/// `eval` returns `None` for infeasible labelings.
fn search(
    scope: &Scope,
    free: &[usize],
    init: Vec<bool>,
    budget: &SearchBudget,
    mut eval: impl FnMut(&[bool], &[f64]) -> Result<Option<(f64, Vec<f64>)>>,
) -> Result<Outcome> {
    let mut log = SearchLog::default();
    let n = scope.len();
    let ones = vec![1.0; n];
    if free.len() <= budget.exhaustive_limit && free.len() < usize::BITS as usize - 1 {
        let mut best: Option<(Vec<bool>, f64, Vec<f64>)> = None;
        let mut labels = init;
        for mask in 0usize..(1 << free.len()) {
            for (k, &s) in free.iter().enumerate() {
                labels[s] = mask >> k & 1 == 1;
            }
            log.evaluations += 1;
            if let Some((e, v)) = eval(&labels, &ones)? {
                if best.as_ref().is_none_or(|b| e < b.1) {
                    best = Some((labels.clone(), e, v));
                }
            }
        }
        let (labels, energy, v) = best.ok_or_else(|| Error::Infeasible("no admissible configuration".into()))?;
        return Ok(Outcome {
            labels,
            energy,
            v,
            kind: CandidateKind::Exhaustive,
            log,
        });
    }

    let mut labels = init;
    log.evaluations += 1;
    let (mut energy, mut v) = eval(&labels, &ones)?
        .ok_or_else(|| Error::Infeasible("planar configuration violates the boundary data".into()))?;
    let cap = budget.flips_per_site.saturating_mul(free.len());
    let mut order = free.to_vec();
    let mut rng = stream(budget.seed);
    'outer: loop {
        log.passes += 1;
        order.shuffle(&mut rng);
        let mut improved = false;
        for &s in &order {
            if log.flips_tried >= cap {
                break 'outer;
            }
            // a site surrounded by its own label only gains constraints
            if scope.neighbors(s).all(|j| labels[j] == labels[s]) {
                continue;
            }
            log.flips_tried += 1;
            labels[s] = !labels[s];
            log.evaluations += 1;
            match eval(&labels, &v)? {
                Some((e, w)) if e < energy - 1e-12 * energy.abs().max(1.0) => {
                    energy = e;
                    v = w;
                    improved = true;
                    log.flips_accepted += 1;
                }
                _ => labels[s] = !labels[s],
            }
        }
        if !improved {
            break;
        }
    }
    let kind = if log.flips_accepted == 0 {
        CandidateKind::Planar
    } else {
        CandidateKind::LocalSearch
    };
    Ok(Outcome {
        labels,
        energy,
        v,
        kind,
        log,
    })
}

fn cut_vertices(scope: &Scope, labels: &[bool]) -> Vec<bool> {
    (0..scope.len())
        .map(|i| scope.neighbors(i).any(|j| labels[j] != labels[i]))
        .collect()
}

fn free_sites(cell: &Cell, delta: f64) -> Vec<usize> {
    (0..cell.len()).filter(|&i| cell.layer[i] > delta).collect()
}

/// Callback receiving the scope, `u` and `v` of an evaluated pair.
pub type PairObserver<'a> = dyn FnMut(&Scope, &[f64], &[f64]) + 'a;

/// [`surface_cell_problem`] that reports every feasible pair `(u, v)` it
/// evaluates, on the points of the cube.
pub fn surface_cell_problem_observed(
    ps: &PointSet,
    es: &EdgeSet,
    jump: &JumpDatum,
    cube: &CubeSpec,
    p: &EnergyParams,
    budget: &SearchBudget,
    observer: &mut PairObserver,
) -> Result<CellProblemResult> {
    p.validate()?;
    let m = es.m;
    if cube.delta < m {
        return Err(Error::Infeasible(format!(
            "boundary layer delta = {} is thinner than the edge range M = {m}",
            cube.delta
        )));
    }
    let cell = Cell::new(ps, es, cube)?;
    let scope = cell.scope();
    let n = cell.len();
    let pts = &cell.sub.points;
    // boundary values of v on the M-layer
    let v_fixed: Vec<Option<f64>> = (0..n)
        .map(|i| (cell.layer[i] <= m).then(|| if cube.offset(pts.point(i)).abs() <= m { 0.0 } else { 1.0 }))
        .collect();
    let init: Vec<bool> = (0..n).map(|i| cube.offset(pts.point(i)) > 0.0).collect();
    let free = free_sites(&cell, cube.delta);
    let q = v_quadratic(&scope, &vec![0.0; n], p, true);
    let jumps = jump.a != jump.b;
    let values = |labels: &[bool]| -> Vec<f64> { labels.iter().map(|&l| if l { jump.a } else { jump.b }).collect() };

    let eval = |labels: &[bool], start: &[f64]| -> Result<Option<(f64, Vec<f64>)>> {
        let mut fixed = v_fixed.clone();
        if jumps {
            for (i, c) in cut_vertices(&scope, labels).into_iter().enumerate() {
                if c {
                    if fixed[i] == Some(1.0) {
                        return Ok(None);
                    }
                    fixed[i] = Some(0.0);
                }
            }
        }
        let (mut v, _) = q.solve(&fixed, start, budget.linear)?;
        for (i, x) in v.iter_mut().enumerate() {
            if !(*x >= -V_CLAMP_TOL && *x <= 1.0 + V_CLAMP_TOL) {
                return Err(Error::Numerical(format!(
                    "surface v solve left [0, 1] at point {i}: {x}"
                )));
            }
            *x = x.clamp(0.0, 1.0);
        }
        let e = surface_energy_ell(&scope, &v, p)?;
        observer(&scope, &values(labels), &v);
        Ok(Some((e, v)))
    };
    let out = search(&scope, &free, init, budget, eval)?;
    let u = values(&out.labels);
    Ok(CellProblemResult {
        density: out.energy / cube.side.powi(cube.dim() as i32 - 1),
        raw_energy: out.energy,
        cube: cube.clone(),
        candidate: Candidate {
            kind: out.kind,
            heuristic: out.kind != CandidateKind::Exhaustive,
            indices: cell.sub.indices.clone(),
            u: Field(u),
            v: Field(out.v),
        },
        trace: None,
        log: out.log,
    })
}

/// Minimize the surface energy over `v` that vanish on the cut of some
/// two-valued `u` with planar boundary data on the `delta`-layer, and take
/// the planar profile on the `M`-layer.
pub fn surface_cell_problem(
    ps: &PointSet,
    es: &EdgeSet,
    jump: &JumpDatum,
    cube: &CubeSpec,
    p: &EnergyParams,
    budget: &SearchBudget,
) -> Result<CellProblemResult> {
    surface_cell_problem_observed(ps, es, jump, cube, p, budget, &mut |_, _, _| {})
}

/// Minimize the interface energy `I_{1,1}` over `+-1` fields with planar
/// boundary data on the `delta`-layer.
pub fn s1_cell_problem(
    ps: &PointSet,
    es: &EdgeSet,
    cube: &CubeSpec,
    budget: &SearchBudget,
) -> Result<CellProblemResult> {
    let cell = Cell::new(ps, es, cube)?;
    let scope = cell.scope();
    let n = cell.len();
    let pts = &cell.sub.points;
    let unit = EnergyParams::default();
    let init: Vec<bool> = (0..n).map(|i| cube.offset(pts.point(i)) > 0.0).collect();
    let free = free_sites(&cell, cube.delta);
    let signs = |labels: &[bool]| -> Vec<f64> { labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect() };
    let eval = |labels: &[bool], _: &[f64]| -> Result<Option<(f64, Vec<f64>)>> {
        let w = signs(labels);
        let v = cut_vertices(&scope, labels)
            .into_iter()
            .map(|c| if c { 0.0 } else { 1.0 })
            .collect();
        Ok(Some((interface_energy(&scope, &w, &unit, 1.0)?, v)))
    };
    let out = search(&scope, &free, init, budget, eval)?;
    Ok(CellProblemResult {
        density: out.energy / cube.side.powi(cube.dim() as i32 - 1),
        raw_energy: out.energy,
        cube: cube.clone(),
        candidate: Candidate {
            kind: out.kind,
            heuristic: out.kind != CandidateKind::Exhaustive,
            indices: cell.sub.indices.clone(),
            u: Field(signs(&out.labels)),
            v: Field(out.v),
        },
        trace: None,
        log: out.log,
    })
}

/// Recipe for a lattice on a box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    pub kind: LatticeKind,
    pub dim: usize,
    /// Hard-core distance (random parking) or spacing (periodic, jittered).
    pub scale: f64,
    /// Jitter amplitude as a fraction of the spacing.
    pub jitter: f64,
}

impl LatticeSpec {
    pub fn generate(&self, domain: &BoxDomain, seed: u64) -> Result<PointSet> {
        match self.kind {
            LatticeKind::RandomParking => generate_random_parking(domain, self.scale, seed),
            LatticeKind::Periodic => generate_periodic(domain, self.scale),
            LatticeKind::Jittered => generate_jittered(domain, self.scale, self.jitter, seed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeSpec {
    Voronoi,
    Knn(usize),
}

impl EdgeSpec {
    pub fn build(&self, ps: &PointSet) -> Result<EdgeSet> {
        match *self {
            EdgeSpec::Voronoi => build_voronoi_edges(ps),
            EdgeSpec::Knn(k) => build_knn_edges(ps, k),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            EdgeSpec::Voronoi => "voronoi",
            EdgeSpec::Knn(_) => "knn",
        }
    }
}

/// `count` unit normals at angles `k pi / count`, `k = 0..count`.
pub fn default_directions(count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|k| {
            let a = std::f64::consts::PI * k as f64 / count as f64;
            vec![a.cos(), a.sin()]
        })
        .collect()
}

/// Box `[0, L]^dim` with `L` the smallest odd integer that holds a cube of
/// the given side in every orientation, plus `margin` on each side.
pub fn sweep_domain(dim: usize, side: f64, margin: f64) -> Result<BoxDomain> {
    let need = side * (dim as f64).sqrt() + 2.0 * margin;
    let mut l = need.ceil();
    if l % 2.0 == 0.0 {
        l += 1.0;
    }
    BoxDomain::cube(dim, l)
}

/// One cell problem of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub lattice_kind: LatticeKind,
    pub seed: u64,
    pub nu: Vec<f64>,
    pub t: f64,
    pub ell: f64,
    pub density: f64,
    pub raw_energy: f64,
    pub candidate_kind: CandidateKind,
    pub flips_accepted: usize,
    /// Zero unless timing was requested.
    pub wall_ms: u64,
}

/// Replica statistics of one direction at one cube size.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionStat {
    pub t: f64,
    pub nu: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation; zero for a single replica.
    pub std: f64,
    pub replicas: usize,
}

/// Spread of the direction means at one cube size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSummary {
    pub t: f64,
    pub max_min_ratio: f64,
    /// Population standard deviation over mean of the direction means.
    pub cov: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnisotropyTable {
    pub rows: Vec<SweepRow>,
    pub stats: Vec<DirectionStat>,
    pub summary: Vec<SweepSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnisotropyConfig {
    pub lattice: LatticeSpec,
    pub edges: EdgeSpec,
    pub directions: Vec<Vec<f64>>,
    pub sides: Vec<f64>,
    pub replicas: usize,
    pub seed: u64,
    pub params: EnergyParams,
    pub budget: SearchBudget,
    /// Layer width; the edge range `M` of each lattice when absent.
    pub delta: Option<f64>,
    pub margin: f64,
    pub timing: bool,
}

impl AnisotropyConfig {
    pub fn new(
        lattice: LatticeSpec,
        edges: EdgeSpec,
        directions: Vec<Vec<f64>>,
        sides: Vec<f64>,
        replicas: usize,
    ) -> Self {
        Self {
            lattice,
            edges,
            directions,
            sides,
            replicas,
            seed: 0,
            params: EnergyParams::default(),
            budget: SearchBudget::default(),
            delta: None,
            margin: 1.0,
            timing: false,
        }
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Surface densities over directions, cube sizes and lattice replicas.
///
/// Replica `r` uses the lattice seed `replica_seed(seed, r)` at every cube
/// size, so sizes share their seed set. Rows are ordered by size, replica
/// and direction regardless of scheduling.
pub fn anisotropy_sweep(cfg: &AnisotropyConfig) -> Result<AnisotropyTable> {
    if cfg.directions.len() < 2 {
        return invalid(format!("need at least 2 directions, got {}", cfg.directions.len()));
    }
    if cfg.replicas == 0 {
        return invalid("need at least one replica");
    }
    if cfg.sides.is_empty() {
        return invalid("need at least one cube size");
    }
    for nu in &cfg.directions {
        orthonormal_frame(nu)?;
        if nu.len() != cfg.lattice.dim {
            return Err(Error::Dimension("direction and lattice dimension differ".into()));
        }
    }
    cfg.params.validate()?;

    let jobs: Vec<(usize, usize)> = (0..cfg.sides.len())
        .flat_map(|s| (0..cfg.replicas).map(move |r| (s, r)))
        .collect();
    let lattices: Vec<(PointSet, EdgeSet, u64)> = jobs
        .par_iter()
        .map(|&(s, r)| {
            let seed = replica_seed(cfg.seed, r as u64);
            let domain = sweep_domain(cfg.lattice.dim, cfg.sides[s], cfg.margin)?;
            let ps = cfg.lattice.generate(&domain, seed)?;
            let es = cfg.edges.build(&ps)?;
            Ok((ps, es, seed))
        })
        .collect::<Result<_>>()?;

    let tasks: Vec<(usize, usize)> = (0..jobs.len())
        .flat_map(|j| (0..cfg.directions.len()).map(move |d| (j, d)))
        .collect();
    let rows: Vec<SweepRow> = tasks
        .par_iter()
        .map(|&(j, d)| {
            let start = Instant::now();
            let (ps, es, seed) = &lattices[j];
            let t = cfg.sides[jobs[j].0];
            let nu = &cfg.directions[d];
            let cube = CubeSpec::new(ps.domain().center(), nu.clone(), t, cfg.delta.unwrap_or(es.m))?;
            let budget = SearchBudget {
                seed: replica_seed(*seed, d as u64),
                ..cfg.budget
            };
            let res = surface_cell_problem(ps, es, &JumpDatum::default(), &cube, &cfg.params, &budget)?;
            Ok(SweepRow {
                lattice_kind: cfg.lattice.kind,
                seed: *seed,
                nu: nu.clone(),
                t,
                ell: cfg.params.ell,
                density: res.density,
                raw_energy: res.raw_energy,
                candidate_kind: res.candidate.kind,
                flips_accepted: res.log.flips_accepted,
                wall_ms: if cfg.timing {
                    start.elapsed().as_millis() as u64
                } else {
                    0
                },
            })
        })
        .collect::<Result<_>>()?;

    let mut stats = Vec::new();
    let mut summary = Vec::new();
    for (s, &t) in cfg.sides.iter().enumerate() {
        let mut means = Vec::new();
        for (d, nu) in cfg.directions.iter().enumerate() {
            let xs: Vec<f64> = tasks
                .iter()
                .zip(&rows)
                .filter(|((j, dd), _)| jobs[*j].0 == s && *dd == d)
                .map(|(_, r)| r.density)
                .collect();
            let (mean, std) = mean_std(&xs);
            means.push(mean);
            stats.push(DirectionStat {
                t,
                nu: nu.clone(),
                mean,
                std,
                replicas: xs.len(),
            });
        }
        let max = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = means.iter().cloned().fold(f64::INFINITY, f64::min);
        let m = means.iter().sum::<f64>() / means.len() as f64;
        let pop = (means.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / means.len() as f64).sqrt();
        summary.push(SweepSummary {
            t,
            max_min_ratio: max / min,
            cov: pop / m,
        });
    }
    Ok(AnisotropyTable { rows, stats, summary })
}

/// One `ell` of an [`ell_sweep`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllRow {
    pub ell: f64,
    /// Surface density at lattice spacing `ell * eps`.
    pub phi: f64,
    pub raw_energy: f64,
    pub s1: f64,
    /// `beta ell s1`.
    pub lower: f64,
    /// `beta (ell + M / ell) s1`, with `M` at least the maximal degree.
    pub upper: f64,
    /// Smallest `F - G` over all evaluated feasible pairs.
    pub min_lower_gap: f64,
    /// `I - F^s` for the pair built from the best `+-1` field.
    pub planar_gap: f64,
    pub evaluations: usize,
    pub candidate_kind: CandidateKind,
    pub flips_accepted: usize,
}

/// Range constant used for the upper bracket: the graph range `M`, raised to
/// the maximal degree when that is larger.
pub fn effective_range(es: &EdgeSet) -> f64 {
    es.m.max(es.max_degree as f64)
}

/// Surface densities at `eps = 1 / ell` on the unit lattice, with the
/// candidate-level bounds that bracket them.
pub fn ell_sweep(
    ps: &PointSet,
    es: &EdgeSet,
    cube: &CubeSpec,
    ell_values: &[f64],
    beta: f64,
    budget: &SearchBudget,
) -> Result<Vec<EllRow>> {
    if ell_values.is_empty() {
        return invalid("need at least one ell");
    }
    if let Some(l) = ell_values.iter().find(|&&l| !(l > 0.0) || !l.is_finite()) {
        return invalid(format!("ell must be positive, got {l}"));
    }
    let unit = EnergyParams::new(1.0, beta, 0.0, 1.0)?;
    let s1 = s1_cell_problem(ps, es, cube, budget)?;
    let m_eff = effective_range(es);
    let cell = Cell::new(ps, es, cube)?;
    let scope = cell.scope();
    let w = &s1.candidate.u;
    let v_w = &s1.candidate.v;
    ell_values
        .iter()
        .map(|&ell| {
            let p = EnergyParams::new(1.0 / ell, beta, 0.0, ell)?;
            let mut min_gap = f64::INFINITY;
            let mut err: Option<Error> = None;
            let mut obs = |sc: &Scope, u: &[f64], v: &[f64]| {
                let r = total_energy(sc, u, v, None, &p)
                    .and_then(|f| Ok(f.total - weak_membrane_energy(sc, u, &unit, beta * ell)?));
                match r {
                    Ok(g) => min_gap = min_gap.min(g),
                    Err(e) => err = err.take().or(Some(e)),
                }
            };
            let res = surface_cell_problem_observed(ps, es, &JumpDatum::default(), cube, &p, budget, &mut obs)?;
            if let Some(e) = err {
                return Err(e);
            }
            let fs = surface_energy_ell(&scope, v_w, &p)?;
            let i = interface_energy(&scope, w, &unit, beta * (ell + m_eff / ell))?;
            Ok(EllRow {
                ell,
                phi: res.density,
                raw_energy: res.raw_energy,
                s1: s1.density,
                lower: beta * ell * s1.density,
                upper: beta * (ell + m_eff / ell) * s1.density,
                min_lower_gap: min_gap,
                planar_gap: i - fs,
                evaluations: res.log.evaluations,
                candidate_kind: res.candidate.kind,
                flips_accepted: res.log.flips_accepted,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z2(side: f64) -> (PointSet, EdgeSet) {
        let ps = generate_periodic(&BoxDomain::cube(2, side).unwrap(), 1.0).unwrap();
        let es = build_voronoi_edges(&ps).unwrap();
        (ps, es)
    }

    #[test]
    fn frames_are_orthonormal() {
        for nu in [vec![1.0, 0.0], vec![0.6, 0.8], vec![0.0, 0.6, 0.8], vec![1.0, 0.0, 0.0]] {
            let f = orthonormal_frame(&nu).unwrap();
            for a in 0..f.len() {
                for b in 0..f.len() {
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((dot(&f[a], &f[b]) - want).abs() < 1e-14);
                }
            }
        }
        assert!(orthonormal_frame(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn cube_validation() {
        assert!(CubeSpec::new(vec![0.0, 0.0], vec![1.0, 0.0], 4.0, 1.0).is_err());
        assert!(CubeSpec::new(vec![0.0, 0.0], vec![1.0, 0.0], 4.1, 1.0).is_ok());
        assert!(CubeSpec::new(vec![0.0, 0.0], vec![1.0, 0.0, 0.0], 8.0, 1.0).is_err());
        let (ps, es) = z2(10.0);
        let c = CubeSpec::new(vec![5.0, 5.0], vec![1.0, 0.0], 12.0, 1.1).unwrap();
        assert!(bulk_cell_problem(&ps, &es, &[1.0, 0.0], &c).is_err());
    }

    #[test]
    fn zero_slope_has_zero_density() {
        let (ps, es) = z2(17.0);
        let c = CubeSpec::new(vec![8.5, 8.5], vec![1.0, 0.0], 16.0, es.m).unwrap();
        let r = bulk_cell_problem(&ps, &es, &[0.0, 0.0], &c).unwrap();
        assert_eq!(r.raw_energy, 0.0);
        assert!(r.candidate.u.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn affine_is_optimal_on_the_square_lattice() {
        let (ps, es) = z2(17.0);
        let c = CubeSpec::new(vec![8.5, 8.5], vec![1.0, 0.0], 16.0, es.m).unwrap();
        let r = bulk_cell_problem(&ps, &es, &[1.0, 0.0], &c).unwrap();
        // 16 rows of 15 unit edges inside the open cube
        assert!((r.raw_energy - 240.0).abs() < 1e-8);
        assert!((r.density - 240.0 / 256.0).abs() < 1e-10);
        let a = affine_energy(&ps, &es, &[1.0, 0.0], &c).unwrap();
        assert!((r.raw_energy - a).abs() < 1e-8);
    }

    #[test]
    fn planar_interface_on_the_square_lattice() {
        let (ps, es) = z2(17.0);
        let c = CubeSpec::new(vec![8.5, 8.5], vec![1.0, 0.0], 16.0, es.m).unwrap();
        let r = s1_cell_problem(&ps, &es, &c, &SearchBudget::default()).unwrap();
        assert_eq!(r.density, 1.0);
        assert_eq!(r.candidate.kind, CandidateKind::Planar);
    }

    #[test]
    fn opening_does_not_matter() {
        let (ps, es) = z2(17.0);
        let c = CubeSpec::new(vec![8.5, 8.5], vec![0.8, 0.6], 10.0, es.m).unwrap();
        let p = EnergyParams::default();
        let b = SearchBudget::default();
        let r1 = surface_cell_problem(&ps, &es, &JumpDatum::new(1.0, 0.0).unwrap(), &c, &p, &b).unwrap();
        let r7 = surface_cell_problem(&ps, &es, &JumpDatum::new(7.0, 0.0).unwrap(), &c, &p, &b).unwrap();
        assert_eq!(r1.raw_energy, r7.raw_energy);
        assert!(r1.density > 0.0);
    }

    #[test]
    fn no_jump_baseline_is_positive() {
        let (ps, es) = z2(17.0);
        let c = CubeSpec::new(vec![8.5, 8.5], vec![1.0, 0.0], 10.0, es.m).unwrap();
        let r = surface_cell_problem(
            &ps,
            &es,
            &JumpDatum::new(0.0, 0.0).unwrap(),
            &c,
            &EnergyParams::default(),
            &SearchBudget::default(),
        )
        .unwrap();
        assert!(r.raw_energy > 0.0);
    }

    #[test]
    fn thin_layer_is_rejected() {
        let (ps, es) = z2(17.0);
        let c = CubeSpec::new(vec![8.5, 8.5], vec![1.0, 0.0], 10.0, 0.5).unwrap();
        let e = surface_cell_problem(
            &ps,
            &es,
            &JumpDatum::default(),
            &c,
            &EnergyParams::default(),
            &SearchBudget::default(),
        );
        assert!(matches!(e, Err(Error::Infeasible(_))));
    }

    #[test]
    fn sweep_needs_two_directions() {
        let spec = LatticeSpec {
            kind: LatticeKind::Periodic,
            dim: 2,
            scale: 1.0,
            jitter: 0.0,
        };
        let cfg = AnisotropyConfig::new(spec, EdgeSpec::Voronoi, default_directions(1), vec![8.0], 1);
        assert!(anisotropy_sweep(&cfg).is_err());
    }

    #[test]
    fn sweep_domain_is_odd() {
        let d = sweep_domain(2, 24.0, 1.0).unwrap();
        assert_eq!(d.side(0), 37.0);
        let d = sweep_domain(2, 12.0, 1.0).unwrap();
        assert_eq!(d.side(0), 19.0);
    }
}
