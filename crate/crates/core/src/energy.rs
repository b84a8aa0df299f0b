//! Discrete phase-field energies on a lattice with edges.
//!
//! Stored coordinates are in units of the unscaled lattice; the scale
//! factors are applied analytically. With `ell = 1` the lattice scale
//! `kappa = ell * eps` equals `eps` and the energies are the standard
//! finite-difference Ambrosio-Tortorelli terms:
//!
//! ```text
//! bulk   = 1/2 sum_{(x,y)} eps^d v(x)^2 |(u(x) - u(y)) / eps|^2
//! well   = beta/2 sum_x eps^(d-1) (v(x) - 1)^2
//! vgrad  = beta/4 sum_{(x,y)} eps^(d-1) |v(x) - v(y)|^2
//! fid    = gamma sum_x eps^d |u(x) - g(x)|^2
//! ```
//!
//! Pair sums run over ordered pairs, so every unordered edge is visited
//! twice. Points and pairs are visited in ascending index order and
//! accumulated with compensated summation.

use std::ops::{Deref, DerefMut};

use crate::error::{invalid, Error, Result};
use crate::graph::{EdgeSet, Region};
use crate::lattice::PointSet;
use crate::numeric::KahanSum;

/// Tolerance on `v` leaving `[0, 1]` in input validation.
pub const V_RANGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams {
    /// Phase-field length scale.
    pub eps: f64,
    /// Surface weight.
    pub beta: f64,
    /// Fidelity weight.
    pub gamma: f64,
    /// Ratio of lattice spacing to `eps`.
    pub ell: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            eps: 1.0,
            beta: 1.0,
            gamma: 0.0,
            ell: 1.0,
        }
    }
}

impl EnergyParams {
    pub fn new(eps: f64, beta: f64, gamma: f64, ell: f64) -> Result<Self> {
        let p = Self { eps, beta, gamma, ell };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.eps, self.beta, self.gamma, self.ell]
            .iter()
            .all(|x| x.is_finite());
        if !finite || !(self.eps > 0.0) || !(self.beta > 0.0) || !(self.ell > 0.0) || !(self.gamma >= 0.0) {
            return invalid(format!("need eps, beta, ell > 0 and gamma >= 0, got {self:?}"));
        }
        Ok(())
    }

    /// Lattice spacing `kappa = ell * eps`.
    pub fn kappa(&self) -> f64 {
        self.ell * self.eps
    }
}

/// Scalar values indexed like a point set.
#[derive(Debug, Clone, PartialEq)]
pub struct Field(pub Vec<f64>);

impl Field {
    pub fn constant(n: usize, value: f64) -> Self {
        Field(vec![value; n])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for Field {
    fn from(v: Vec<f64>) -> Self {
        Field(v)
    }
}

impl Deref for Field {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Field {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// A lattice with edges and an optional localization region.
///
/// A point participates iff it lies in the region; an ordered pair
/// participates iff both endpoints do.
#[derive(Debug, Clone)]
pub struct Scope<'a> {
    pub points: &'a PointSet,
    pub edges: &'a EdgeSet,
    mask: Option<Vec<bool>>,
}

impl<'a> Scope<'a> {
    pub fn new(points: &'a PointSet, edges: &'a EdgeSet) -> Result<Self> {
        if edges.num_points() != points.len() {
            return Err(Error::SizeMismatch {
                expected: points.len(),
                got: edges.num_points(),
            });
        }
        Ok(Self {
            points,
            edges,
            mask: None,
        })
    }

    pub fn with_region(points: &'a PointSet, edges: &'a EdgeSet, region: &Region) -> Result<Self> {
        let mut s = Self::new(points, edges)?;
        if *region != Region::Whole {
            s.mask = Some(points.points().map(|p| region.contains(p)).collect());
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> i32 {
        self.points.dim() as i32
    }

    #[inline]
    pub fn active(&self, i: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[i])
    }

    /// Neighbors of `i` that participate, in ascending order. Empty if `i`
    /// itself does not participate.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let on = self.active(i);
        self.edges
            .neighbors(i)
            .iter()
            .copied()
            .filter(move |&j| on && self.active(j))
    }

    pub(crate) fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                got: f.len(),
            });
        }
        Ok(())
    }
}

pub(crate) fn check_unit_range(v: &[f64]) -> Result<()> {
    for (i, &x) in v.iter().enumerate() {
        if !(-V_RANGE_TOL..=1.0 + V_RANGE_TOL).contains(&x) {
            return Err(Error::OutOfRange(format!("v[{i}] = {x} outside [0, 1]")));
        }
    }
    Ok(())
}

fn check_finite(f: &[f64], name: &str) -> Result<()> {
    match f.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::OutOfRange(format!("{name}[{i}] is not finite"))),
        None => Ok(()),
    }
}

/// Per-term coefficients of the energy at lattice scale `kappa`:
/// bulk weight per ordered pair of `v(x)^2 (u(x) - u(y))^2`, well weight per
/// point of `(v - 1)^2`, gradient weight per ordered pair of `(v(x) - v(y))^2`,
/// and fidelity weight per point of `(u - g)^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub bulk: f64,
    pub well: f64,
    pub vgrad: f64,
    pub fidelity: f64,
}

impl Coefficients {
    pub fn new(p: &EnergyParams, dim: i32) -> Self {
        let k = p.kappa();
        Self {
            bulk: 0.5 * k.powi(dim - 2),
            well: 0.5 * p.beta * k.powi(dim) / p.eps,
            vgrad: 0.25 * p.beta * p.eps * k.powi(dim - 2),
            fidelity: p.gamma * k.powi(dim),
        }
    }
}

fn bulk_with(scope: &Scope, u: &[f64], v: &[f64], coef: f64) -> f64 {
    let mut acc = KahanSum::new();
    for i in 0..scope.len() {
        let vi2 = v[i] * v[i];
        for j in scope.neighbors(i) {
            let du = u[i] - u[j];
            acc.add(vi2 * du * du);
        }
    }
    coef * acc.value()
}

fn well_sum(scope: &Scope, v: &[f64]) -> f64 {
    (0..scope.len())
        .filter(|&i| scope.active(i))
        .map(|i| (v[i] - 1.0) * (v[i] - 1.0))
        .collect::<KahanSum>()
        .value()
}

fn vgrad_sum(scope: &Scope, v: &[f64]) -> f64 {
    let mut acc = KahanSum::new();
    for i in 0..scope.len() {
        for j in scope.neighbors(i) {
            let dv = v[i] - v[j];
            acc.add(dv * dv);
        }
    }
    acc.value()
}

/// Bulk term at lattice scale `kappa = ell * eps`.
pub fn bulk_energy(scope: &Scope, u: &[f64], v: &[f64], p: &EnergyParams) -> Result<f64> {
    p.validate()?;
    scope.check_len(u)?;
    scope.check_len(v)?;
    Ok(bulk_with(scope, u, v, Coefficients::new(p, scope.dim()).bulk))
}

/// Surface term at scale `eps`, split into its single-well and
/// `v`-gradient parts. Independent of `ell`.
pub fn surface_energy(scope: &Scope, v: &[f64], p: &EnergyParams) -> Result<(f64, f64)> {
    p.validate()?;
    scope.check_len(v)?;
    check_unit_range(v)?;
    let e = p.eps.powi(scope.dim() - 1);
    Ok((
        0.5 * p.beta * e * well_sum(scope, v),
        0.25 * p.beta * e * vgrad_sum(scope, v),
    ))
}

/// Surface term on the lattice of spacing `kappa = ell * eps`:
///
/// ```text
/// beta/2 [ sum_x kappa^d (v - 1)^2 / eps
///        + 1/2 sum_{(x,y)} eps kappa^d |(v(x) - v(y)) / kappa|^2 ]
/// ```
///
/// Returns `(well, vgrad)`; at `ell = 1` both parts equal those of
/// [`surface_energy`].
pub fn surface_energy_ell_parts(scope: &Scope, v: &[f64], p: &EnergyParams) -> Result<(f64, f64)> {
    p.validate()?;
    scope.check_len(v)?;
    check_unit_range(v)?;
    let c = Coefficients::new(p, scope.dim());
    Ok((c.well * well_sum(scope, v), c.vgrad * vgrad_sum(scope, v)))
}

/// Sum of the two parts of [`surface_energy_ell_parts`].
pub fn surface_energy_ell(scope: &Scope, v: &[f64], p: &EnergyParams) -> Result<f64> {
    let (w, g) = surface_energy_ell_parts(scope, v, p)?;
    Ok(w + g)
}

/// Components of the total energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub bulk: f64,
    pub well: f64,
    pub vgrad: f64,
    pub fidelity: f64,
    /// `((bulk + well) + vgrad) + fidelity`.
    pub total: f64,
}

/// Bulk, surface and fidelity terms at lattice scale `kappa = ell * eps`.
/// `g` is required when `gamma > 0` and ignored otherwise.
pub fn total_energy(
    scope: &Scope,
    u: &[f64],
    v: &[f64],
    g: Option<&[f64]>,
    p: &EnergyParams,
) -> Result<EnergyBreakdown> {
    p.validate()?;
    scope.check_len(u)?;
    scope.check_len(v)?;
    check_finite(u, "u")?;
    let c = Coefficients::new(p, scope.dim());
    let bulk = bulk_with(scope, u, v, c.bulk);
    let (well, vgrad) = surface_energy_ell_parts(scope, v, p)?;
    let fidelity = if p.gamma > 0.0 {
        let g = g.ok_or_else(|| Error::InvalidParameter("gamma > 0 requires a datum g".into()))?;
        scope.check_len(g)?;
        let s: KahanSum = (0..scope.len())
            .filter(|&i| scope.active(i))
            .map(|i| (u[i] - g[i]) * (u[i] - g[i]))
            .collect();
        c.fidelity * s.value()
    } else {
        0.0
    };
    Ok(EnergyBreakdown {
        bulk,
        well,
        vgrad,
        fidelity,
        total: ((bulk + well) + vgrad) + fidelity,
    })
}

/// Saturating interaction `f_alpha(t) = t / (1 + t / alpha)`.
pub fn f_alpha(t: f64, alpha: f64) -> f64 {
    if t.is_infinite() {
        return alpha;
    }
    t / (1.0 + t / alpha)
}

/// `eps * sum_y |(u(x) - u(y)) / eps|^2` over participating neighbors.
fn neighbor_sum(scope: &Scope, u: &[f64], i: usize, eps: f64) -> f64 {
    let s: KahanSum = scope
        .neighbors(i)
        .map(|j| {
            let du = u[i] - u[j];
            du * du
        })
        .collect();
    s.value() / eps
}

/// Weak-membrane energy
/// `1/2 sum_x eps^(d-1) f_alpha(eps sum_y |(u(x) - u(y)) / eps|^2)`.
pub fn weak_membrane_energy(scope: &Scope, u: &[f64], p: &EnergyParams, alpha: f64) -> Result<f64> {
    p.validate()?;
    scope.check_len(u)?;
    if !(alpha > 0.0) {
        return invalid(format!("alpha must be positive, got {alpha}"));
    }
    let e = p.eps.powi(scope.dim() - 1);
    let s: KahanSum = (0..scope.len())
        .filter(|&i| scope.active(i))
        .map(|i| f_alpha(neighbor_sum(scope, u, i, p.eps), alpha))
        .collect();
    Ok(0.5 * e * s.value())
}

/// Interface energy `alpha/4 sum_x eps^(d-1) max_y |w(x) - w(y)|` for
/// `w` with values in `{-1, +1}`.
pub fn interface_energy(scope: &Scope, w: &[f64], p: &EnergyParams, alpha: f64) -> Result<f64> {
    p.validate()?;
    scope.check_len(w)?;
    if let Some(i) = w.iter().position(|&x| x != 1.0 && x != -1.0) {
        return Err(Error::OutOfRange(format!("w[{i}] = {} is not +-1", w[i])));
    }
    if !(alpha > 0.0) {
        return invalid(format!("alpha must be positive, got {alpha}"));
    }
    let e = p.eps.powi(scope.dim() - 1);
    let s: KahanSum = (0..scope.len())
        .filter(|&i| scope.active(i))
        .map(|i| scope.neighbors(i).map(|j| (w[i] - w[j]).abs()).fold(0.0, f64::max))
        .collect();
    Ok(0.25 * alpha * e * s.value())
}

/// Pointwise minimizer of `bulk + well` over `v` at scale `eps`:
/// `v(x) = (1 + (eps / beta) sum_y |(u(x) - u(y)) / eps|^2)^-1`.
pub fn closed_form_v(scope: &Scope, u: &[f64], p: &EnergyParams) -> Result<Field> {
    p.validate()?;
    scope.check_len(u)?;
    Ok(Field(
        (0..scope.len())
            .map(|i| {
                if scope.active(i) {
                    1.0 / (1.0 + neighbor_sum(scope, u, i, p.eps) / p.beta)
                } else {
                    1.0
                }
            })
            .collect(),
    ))
}

/// Componentwise truncation to `[-k, k]`.
pub fn truncate_field(u: &[f64], k: f64) -> Result<Field> {
    if !(k >= 0.0) {
        return invalid(format!("truncation level must be nonnegative, got {k}"));
    }
    Ok(Field(u.iter().map(|&x| x.clamp(-k, k)).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{BoxDomain, LatticeKind};

    fn line(n: usize) -> (PointSet, EdgeSet) {
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

    fn params(eps: f64, beta: f64) -> EnergyParams {
        EnergyParams::new(eps, beta, 0.0, 1.0).unwrap()
    }

    #[test]
    fn bulk_prefactor() {
        let (ps, es) = line(2);
        let s = Scope::new(&ps, &es).unwrap();
        let e = bulk_energy(&s, &[0.0, 1.0], &[1.0, 1.0], &params(1.0, 1.0)).unwrap();
        assert_eq!(e, 1.0);
        assert_eq!(
            bulk_energy(&s, &[2.0, 2.0], &[0.3, 0.9], &params(1.0, 1.0)).unwrap(),
            0.0
        );
        assert_eq!(
            bulk_energy(&s, &[2.0, -5.0], &[0.0, 0.0], &params(1.0, 1.0)).unwrap(),
            0.0
        );
        assert!(bulk_energy(&s, &[0.0], &[1.0, 1.0], &params(1.0, 1.0)).is_err());
    }

    #[test]
    fn surface_prefactors() {
        let (ps, es) = line(2);
        let s = Scope::new(&ps, &es).unwrap();
        assert_eq!(surface_energy(&s, &[1.0, 1.0], &params(1.0, 2.0)).unwrap(), (0.0, 0.0));
        assert_eq!(surface_energy(&s, &[0.0, 1.0], &params(1.0, 2.0)).unwrap(), (1.0, 1.0));
        assert!(surface_energy(&s, &[0.0, 1.5], &params(1.0, 2.0)).is_err());
        let (ps1, es1) = line(1);
        let s1 = Scope::new(&ps1, &es1).unwrap();
        assert_eq!(surface_energy(&s1, &[0.0], &params(1.0, 2.0)).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn fidelity_cases() {
        let (ps, es) = line(4);
        let s = Scope::new(&ps, &es).unwrap();
        let p = EnergyParams::new(1.0, 1.0, 0.3, 1.0).unwrap();
        let u = [0.0; 4];
        let g = [1.0; 4];
        let b = total_energy(&s, &u, &[1.0; 4], Some(&g), &p).unwrap();
        assert!((b.fidelity - 0.3 * 4.0).abs() < 1e-15);
        let b = total_energy(&s, &g, &[1.0; 4], Some(&g), &p).unwrap();
        assert_eq!(b.fidelity, 0.0);
        assert!(total_energy(&s, &u, &[1.0; 4], None, &p).is_err());
        let p0 = params(1.0, 1.0);
        let b = total_energy(&s, &[0.0, 1.0, 3.0, 2.0], &[0.5, 0.1, 1.0, 0.7], None, &p0).unwrap();
        assert_eq!(b.fidelity, 0.0);
        assert_eq!(b.total, b.bulk + b.well + b.vgrad);
    }

    #[test]
    fn ell_scaled_surface() {
        let (ps, es) = line(4);
        let s = Scope::new(&ps, &es).unwrap();
        let v = [0.2, 0.9, 0.4, 1.0];
        let p1 = EnergyParams::new(0.5, 1.3, 0.0, 1.0).unwrap();
        let (w, g) = surface_energy(&s, &v, &p1).unwrap();
        let (wl, gl) = surface_energy_ell_parts(&s, &v, &p1).unwrap();
        assert_eq!(w, wl);
        assert!((g - gl).abs() <= 1e-15 * g);
        for ell in [0.5, 1.0, 2.0, 8.0] {
            let p = EnergyParams { ell, ..p1 };
            assert_eq!(surface_energy_ell(&s, &[1.0; 4], &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn membrane_limits() {
        assert_eq!(f_alpha(0.0, 2.0), 0.0);
        assert_eq!(f_alpha(2.0, 2.0), 1.0);
        assert!((f_alpha(1e12, 3.0) - 3.0).abs() < 1e-10);
        assert_eq!(f_alpha(f64::INFINITY, 3.0), 3.0);
        let (ps, es) = line(2);
        let s = Scope::new(&ps, &es).unwrap();
        assert_eq!(
            weak_membrane_energy(&s, &[4.0, 4.0], &params(1.0, 1.0), 1.0).unwrap(),
            0.0
        );
        // each point has neighbor sum 1 = alpha, so contributes 1/2 * 1/2
        let e = weak_membrane_energy(&s, &[0.0, 1.0], &params(1.0, 1.0), 1.0).unwrap();
        assert!((e - 0.5).abs() < 1e-15);
    }

    #[test]
    fn interface_cases() {
        let (ps, es) = line(2);
        let s = Scope::new(&ps, &es).unwrap();
        assert_eq!(interface_energy(&s, &[1.0, 1.0], &params(1.0, 1.0), 1.0).unwrap(), 0.0);
        assert_eq!(interface_energy(&s, &[1.0, -1.0], &params(1.0, 1.0), 1.0).unwrap(), 1.0);
        assert!(interface_energy(&s, &[1.0, 0.0], &params(1.0, 1.0), 1.0).is_err());
    }

    #[test]
    fn closed_form_cases() {
        let (ps, es) = line(3);
        let s = Scope::new(&ps, &es).unwrap();
        assert_eq!(closed_form_v(&s, &[1.0; 3], &params(1.0, 1.0)).unwrap().0, vec![1.0; 3]);
        // end point 0 has neighbor sum |1|^2 / eps = beta / eps with eps = 0.5, beta = 2
        let v = closed_form_v(&s, &[0.0, 1.0, 1.0], &params(0.5, 2.0)).unwrap();
        assert_eq!(v[0], 0.5);
    }

    #[test]
    fn truncation_cases() {
        assert_eq!(truncate_field(&[-3.0, 0.5, 2.0], 1.0).unwrap().0, vec![-1.0, 0.5, 1.0]);
        assert_eq!(truncate_field(&[-3.0, 0.5, 2.0], 5.0).unwrap().0, vec![-3.0, 0.5, 2.0]);
        assert!(truncate_field(&[1.0], -1.0).is_err());
    }

    #[test]
    fn region_masks_points_and_pairs() {
        let (ps, es) = line(4);
        let region = Region::Box {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 1.0],
        };
        let s = Scope::with_region(&ps, &es, &region).unwrap();
        let u = [0.0, 1.0, 5.0, 9.0];
        // only the pair (0,1) participates
        assert_eq!(bulk_energy(&s, &u, &[1.0; 4], &params(1.0, 1.0)).unwrap(), 1.0);
        let (w, _) = surface_energy(&s, &[0.0; 4], &params(1.0, 2.0)).unwrap();
        assert_eq!(w, 2.0);
    }
}
