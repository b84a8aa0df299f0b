//! Alternating minimization of the phase-field energy.
//!
//! At fixed `v` the energy is a quadratic in `u` (a weighted graph Laplacian
//! plus the fidelity diagonal); at fixed `u` it is a quadratic in `v` with a
//! strictly positive diagonal from the single-well term. Each step solves its
//! quadratic exactly, so the total energy never increases.

use crate::energy::{check_unit_range, total_energy, Coefficients, EnergyParams, Field, Scope};
use crate::error::{invalid, Error, Result};
use crate::linalg::{LinearSolver, Quadratic};

/// Largest excursion of an unclamped `v` solution outside `[0, 1]` that is
/// attributed to rounding.
pub const V_CLAMP_TOL: f64 = 1e-6;

/// Fixed values on a set of point indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DirichletSpec {
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl DirichletSpec {
    pub fn new(indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::SizeMismatch {
                expected: indices.len(),
                got: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|x| !x.is_finite()) {
            return invalid(format!("boundary value for index {} is not finite", indices[k]));
        }
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return invalid("duplicate boundary index");
        }
        Ok(Self { indices, values })
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let (i, v) = pairs.into_iter().unzip();
        Self::new(i, v)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub(crate) fn fixed(&self, n: usize) -> Result<Vec<Option<f64>>> {
        let mut out = vec![None; n];
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            if i >= n {
                return invalid(format!("boundary index {i} out of range for {n} points"));
            }
            out[i] = Some(v);
        }
        Ok(out)
    }

    /// Overwrite the constrained entries of `f`.
    pub fn apply(&self, f: &mut [f64]) {
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            f[i] = v;
        }
    }
}

/// Solution of one quadratic step.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub field: Field,
    /// Relative residual of the linear solve (0 when nothing was solved).
    pub residual: f64,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Exact minimizer in `u` of `bulk + fidelity` at fixed `v`.
///
/// Points outside the scope and points in `bc` are held fixed (at `u_prev`
/// and at their boundary values). A connected component of the free points,
/// connected through positive weights, that has neither fidelity nor a
/// positive-weight link to a fixed point leaves the energy invariant under
/// shifts; it is set to the mean of `u_prev` over the component.
pub fn solve_u_step(
    scope: &Scope,
    u_prev: &[f64],
    v: &[f64],
    g: Option<&[f64]>,
    p: &EnergyParams,
    bc: Option<&DirichletSpec>,
    linear: LinearSolver,
) -> Result<Step> {
    p.validate()?;
    let n = scope.len();
    scope.check_len(u_prev)?;
    scope.check_len(v)?;
    check_unit_range(v)?;
    let c = Coefficients::new(p, scope.dim());
    let g = if p.gamma > 0.0 {
        let g = g.ok_or_else(|| Error::InvalidParameter("gamma > 0 requires a datum g".into()))?;
        scope.check_len(g)?;
        Some(g)
    } else {
        None
    };

    let mut fixed = match bc {
        Some(bc) => bc.fixed(n)?,
        None => vec![None; n],
    };
    for i in 0..n {
        if !scope.active(i) && fixed[i].is_none() {
            fixed[i] = Some(u_prev[i]);
        }
    }

    let mut q = Quadratic::new(scope.edges);
    for i in 0..n {
        let w = c.bulk * v[i] * v[i];
        if w > 0.0 {
            for j in scope.neighbors(i) {
                q.add_coupling(i, j, w);
            }
        }
        if let Some(g) = g {
            if scope.active(i) {
                q.diag[i] += c.fidelity;
                q.rhs[i] += c.fidelity * g[i];
            }
        }
    }

    // components of free points through positive couplings
    let mut parent: Vec<usize> = (0..n).collect();
    let mut anchored = vec![false; n];
    for i in 0..n {
        if fixed[i].is_some() {
            continue;
        }
        if g.is_some() {
            anchored[i] = true;
        }
        for j in scope.neighbors(i) {
            let w = c.bulk * (v[i] * v[i] + v[j] * v[j]);
            if w <= 0.0 {
                continue;
            }
            if fixed[j].is_some() {
                anchored[i] = true;
            } else {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut root_anchor = vec![false; n];
    let mut sums = vec![(0.0f64, 0usize); n];
    for i in 0..n {
        if fixed[i].is_none() {
            let r = find(&mut parent, i);
            root_anchor[r] |= anchored[i];
            sums[r].0 += u_prev[i];
            sums[r].1 += 1;
        }
    }
    for (i, f) in fixed.iter_mut().enumerate() {
        if f.is_none() {
            let r = find(&mut parent, i);
            if !root_anchor[r] {
                *f = Some(sums[r].0 / sums[r].1 as f64);
            }
        }
    }

    let (x, residual) = q.solve(&fixed, u_prev, linear)?;
    Ok(Step {
        field: Field(x),
        residual,
    })
}

/// Exact minimizer in `v` of `bulk + well` alone, i.e. with the gradient
/// term dropped. Points outside the scope get 1.
pub fn solve_v_step_decoupled(scope: &Scope, u: &[f64], p: &EnergyParams, linear: LinearSolver) -> Result<Step> {
    p.validate()?;
    scope.check_len(u)?;
    let n = scope.len();
    let fixed: Vec<Option<f64>> = (0..n).map(|i| (!scope.active(i)).then_some(1.0)).collect();
    let q = v_quadratic(scope, u, p, false);
    let (x, residual) = q.solve(&fixed, &vec![1.0; n], linear)?;
    Ok(Step {
        field: Field(x),
        residual,
    })
}

/// Quadratic in `v` of `bulk + well` (and `vgrad` if requested) at fixed `u`.
pub(crate) fn v_quadratic<'a>(scope: &Scope<'a>, u: &[f64], p: &EnergyParams, vgrad: bool) -> Quadratic<'a> {
    let c = Coefficients::new(p, scope.dim());
    let mut q = Quadratic::new(scope.edges);
    for i in 0..scope.len() {
        if !scope.active(i) {
            continue;
        }
        q.diag[i] += c.well;
        q.rhs[i] += c.well;
        for j in scope.neighbors(i) {
            let du = u[i] - u[j];
            q.diag[i] += c.bulk * du * du;
            if vgrad {
                q.add_coupling(i, j, c.vgrad);
            }
        }
    }
    q
}

/// Exact minimizer in `v` of `bulk + well + vgrad` at fixed `u`, clamped to
/// `[0, 1]`. The unclamped solution must already lie within
/// [`V_CLAMP_TOL`] of the interval.
pub fn solve_v_step(
    scope: &Scope,
    u: &[f64],
    v_prev: &[f64],
    p: &EnergyParams,
    bc: Option<&DirichletSpec>,
    linear: LinearSolver,
) -> Result<Step> {
    p.validate()?;
    let n = scope.len();
    scope.check_len(u)?;
    scope.check_len(v_prev)?;
    let mut fixed = match bc {
        Some(bc) => bc.fixed(n)?,
        None => vec![None; n],
    };
    for i in 0..n {
        if !scope.active(i) && fixed[i].is_none() {
            fixed[i] = Some(v_prev[i]);
        }
    }
    let q = v_quadratic(scope, u, p, true);
    let start: Vec<f64> = v_prev.iter().map(|x| x.clamp(0.0, 1.0)).collect();
    let (mut x, residual) = q.solve(&fixed, &start, linear)?;
    for (i, xi) in x.iter_mut().enumerate() {
        if !(*xi >= -V_CLAMP_TOL && *xi <= 1.0 + V_CLAMP_TOL) {
            return Err(Error::Numerical(format!("v step left [0, 1] at point {i}: {xi}")));
        }
        *xi = xi.clamp(0.0, 1.0);
    }
    Ok(Step {
        field: Field(x),
        residual,
    })
}

/// Stopping rule and linear solver for [`alternating_minimize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AltOptions {
    /// Stop when the relative energy decrease of an iteration drops below this.
    pub tol: f64,
    pub max_iter: usize,
    pub linear: LinearSolver,
}

impl Default for AltOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            linear: LinearSolver::Pcg,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace {
    pub iterations: usize,
    /// Total energy at the start and after every iteration.
    pub energy_per_iter: Vec<f64>,
    /// Residuals of the last `u` and `v` solves.
    pub final_residuals: Vec<f64>,
    pub converged: bool,
}

/// Alternate exact `u` and `v` steps from `(u0, v0)`.
#[allow(clippy::too_many_arguments)]
pub fn alternating_minimize(
    scope: &Scope,
    u0: &[f64],
    v0: &[f64],
    g: Option<&[f64]>,
    p: &EnergyParams,
    bc_u: Option<&DirichletSpec>,
    bc_v: Option<&DirichletSpec>,
    opts: &AltOptions,
) -> Result<(Field, Field, SolveTrace)> {
    if !(opts.tol > 0.0) {
        return invalid(format!("tolerance must be positive, got {}", opts.tol));
    }
    let mut u = Field(u0.to_vec());
    let mut v = Field(v0.to_vec());
    scope.check_len(&u)?;
    scope.check_len(&v)?;
    if let Some(bc) = bc_u {
        bc.fixed(u.len())?;
        bc.apply(&mut u);
    }
    if let Some(bc) = bc_v {
        bc.fixed(v.len())?;
        bc.apply(&mut v);
    }
    let mut energies = vec![total_energy(scope, &u, &v, g, p)?.total];
    let mut residuals = vec![0.0, 0.0];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let su = solve_u_step(scope, &u, &v, g, p, bc_u, opts.linear)?;
        u = su.field;
        let sv = solve_v_step(scope, &u, &v, p, bc_v, opts.linear)?;
        v = sv.field;
        residuals = vec![su.residual, sv.residual];
        let e = total_energy(scope, &u, &v, g, p)?.total;
        let prev = *energies.last().expect("nonempty");
        energies.push(e);
        let decrease = prev - e;
        if prev == 0.0 || decrease <= opts.tol * prev.abs() {
            converged = true;
            break;
        }
    }
    Ok((
        u,
        v,
        SolveTrace {
            iterations,
            energy_per_iter: energies,
            final_residuals: residuals,
            converged,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeSet;
    use crate::lattice::{BoxDomain, LatticeKind, PointSet};

    fn path(n: usize) -> (PointSet, EdgeSet) {
        let pts: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64, 0.0]).collect();
        let ps = PointSet::from_points(
            BoxDomain::new(vec![0.0, 0.0], vec![n as f64, 1.0]).unwrap(),
            &pts,
            1.0,
            1.0,
            0,
            LatticeKind::Periodic,
        )
        .unwrap();
        let pairs: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
        let es = EdgeSet::from_undirected(&ps, &pairs).unwrap();
        (ps, es)
    }

    #[test]
    fn fidelity_only_returns_datum() {
        let (ps, es) = path(5);
        let s = Scope::new(&ps, &es).unwrap();
        let p = EnergyParams::new(1.0, 1.0, 0.7, 1.0).unwrap();
        let g = [0.1, 0.9, 0.3, 0.3, 1.0];
        for lin in [LinearSolver::Pcg, LinearSolver::Dense] {
            let st = solve_u_step(&s, &[0.0; 5], &[0.0; 5], Some(&g), &p, None, lin).unwrap();
            for (x, y) in st.field.iter().zip(&g) {
                assert!((x - y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn harmonic_on_a_path() {
        let (ps, es) = path(6);
        let s = Scope::new(&ps, &es).unwrap();
        let p = EnergyParams::default();
        let bc = DirichletSpec::new(vec![0, 5], vec![0.0, 1.0]).unwrap();
        let st = solve_u_step(&s, &[0.0; 6], &[1.0; 6], None, &p, Some(&bc), LinearSolver::Pcg).unwrap();
        for k in 0..6 {
            assert!((st.field[k] - k as f64 / 5.0).abs() < 1e-10);
        }
        assert_eq!(st.field[0], 0.0);
        assert_eq!(st.field[5], 1.0);
    }

    #[test]
    fn free_components_keep_their_mean() {
        let (ps, es) = path(4);
        let s = Scope::new(&ps, &es).unwrap();
        let p = EnergyParams::default();
        // v = 0 on points 1 and 2 cuts the path between 1 and 2
        let v = [1.0, 0.0, 0.0, 1.0];
        let u0 = [0.0, 2.0, 5.0, 7.0];
        let st = solve_u_step(&s, &u0, &v, None, &p, None, LinearSolver::Pcg).unwrap();
        assert_eq!(st.field.0, vec![1.0, 1.0, 6.0, 6.0]);
    }

    #[test]
    fn constant_u_gives_unit_v() {
        let (ps, es) = path(5);
        let s = Scope::new(&ps, &es).unwrap();
        let st = solve_v_step(
            &s,
            &[3.0; 5],
            &[0.5; 5],
            &EnergyParams::default(),
            None,
            LinearSolver::Pcg,
        )
        .unwrap();
        for x in st.field.iter() {
            assert!((x - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn isolated_node_gets_half() {
        // point 0 linked to 1 with |du|^2 = beta / eps; v-coupling removed by
        // fixing the neighbor, leaving the closed-form balance at point 0
        let (ps, es) = path(2);
        let s = Scope::new(&ps, &es).unwrap();
        let p = EnergyParams::new(1.0, 2.0, 0.0, 1.0).unwrap();
        let u = [0.0, 2f64.sqrt()];
        let st = solve_v_step(&s, &u, &[1.0; 2], &p, None, LinearSolver::Dense).unwrap();
        // symmetric pair: each has neighbor sum 2 = beta / eps; coupling is
        // symmetric so both values agree and equal the decoupled value 1/2
        assert!((st.field[0] - 0.5).abs() < 1e-14);
        assert!((st.field[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn dirichlet_is_bit_exact() {
        let (ps, es) = path(7);
        let s = Scope::new(&ps, &es).unwrap();
        let p = EnergyParams::new(1.0, 1.0, 0.2, 1.0).unwrap();
        let g = [0.0, 0.1, 0.5, 0.9, 1.0, 0.3, 0.2];
        let bc = DirichletSpec::new(vec![2, 6], vec![0.123456789, -0.987654321]).unwrap();
        let (u, _, tr) =
            alternating_minimize(&s, &g, &[1.0; 7], Some(&g), &p, Some(&bc), None, &AltOptions::default()).unwrap();
        assert_eq!(u[2], 0.123456789);
        assert_eq!(u[6], -0.987654321);
        assert!(tr.converged);
    }

    #[test]
    fn bad_boundary_specs() {
        assert!(DirichletSpec::new(vec![0, 0], vec![1.0, 2.0]).is_err());
        assert!(DirichletSpec::new(vec![0], vec![f64::NAN]).is_err());
        assert!(DirichletSpec::new(vec![0], vec![]).is_err());
        let (ps, es) = path(3);
        let s = Scope::new(&ps, &es).unwrap();
        let bc = DirichletSpec::new(vec![9], vec![1.0]).unwrap();
        assert!(solve_u_step(
            &s,
            &[0.0; 3],
            &[1.0; 3],
            None,
            &EnergyParams::default(),
            Some(&bc),
            LinearSolver::Pcg
        )
        .is_err());
    }
}
