//! Finite realizations of admissible point sets.
//!
//! Three generators are provided: saturated random sequential adsorption
//! ("random parking"), the periodic grid `spacing * Z^d`, and a jittered grid.
//! Every generator records the hard-core distance `r` and the covering radius
//! `R` it guarantees, and [`check_admissibility`] measures both.

use rand::Rng;
use serde::Deserialize;

use crate::error::{invalid, Error, Result};
use crate::grid::BinGrid;
use crate::numeric::{dist2, fmt_g17};
use crate::rng;

/// Tolerance for every geometric comparison, in length units.
pub const TOL_GEOM: f64 = 1e-9;

/// Axis-aligned closed box `[lo, hi]` in dimension 2 or 3.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::Dimension(format!(
                "lo has {} entries, hi has {}",
                lo.len(),
                hi.len()
            )));
        }
        if !(2..=3).contains(&lo.len()) {
            return Err(Error::Dimension(format!("unsupported dimension {}", lo.len())));
        }
        if lo.iter().chain(&hi).any(|x| !x.is_finite()) {
            return invalid("box corners must be finite");
        }
        if lo.iter().zip(&hi).any(|(a, b)| b <= a) {
            return invalid("box must satisfy hi > lo on every axis");
        }
        Ok(Self { lo, hi })
    }

    /// `[0, side]^dim`.
    pub fn cube(dim: usize, side: f64) -> Result<Self> {
        Self::new(vec![0.0; dim], vec![side; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn side(&self, k: usize) -> f64 {
        self.hi[k] - self.lo[k]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.side(k)).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().enumerate().all(|(k, &x)| x >= self.lo[k] && x <= self.hi[k])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeKind {
    RandomParking,
    Periodic,
    Jittered,
}

impl LatticeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LatticeKind::RandomParking => "RandomParking",
            LatticeKind::Periodic => "Periodic",
            LatticeKind::Jittered => "Jittered",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "RandomParking" | "parking" => Ok(LatticeKind::RandomParking),
            "Periodic" | "periodic" => Ok(LatticeKind::Periodic),
            "Jittered" | "jittered" => Ok(LatticeKind::Jittered),
            other => Err(Error::Format(format!("unknown lattice kind {other:?}"))),
        }
    }
}

/// Points of a lattice realization, with the admissibility constants the
/// generator guarantees.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    coords: Vec<f64>,
    domain: BoxDomain,
    /// Hard-core distance.
    pub r: f64,
    /// Covering radius bound.
    pub big_r: f64,
    pub seed: u64,
    pub kind: LatticeKind,
}

impl PointSet {
    /// Assemble a point set from explicit points. Fails if a point is outside
    /// the domain or has the wrong dimension.
    pub fn from_points(
        domain: BoxDomain,
        points: &[Vec<f64>],
        r: f64,
        big_r: f64,
        seed: u64,
        kind: LatticeKind,
    ) -> Result<Self> {
        let dim = domain.dim();
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(Error::Dimension(format!(
                    "point has {} coordinates, domain has dimension {dim}",
                    p.len()
                )));
            }
            if !domain.contains(p) {
                return invalid(format!("point {p:?} lies outside the domain"));
            }
            coords.extend_from_slice(p);
        }
        if !(r > 0.0) || !(big_r > 0.0) {
            return invalid("r and R must be positive");
        }
        Ok(Self {
            coords,
            domain,
            r,
            big_r,
            seed,
            kind,
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim())
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Apply `f` to every point, keeping the metadata. The caller is
    /// responsible for the result staying inside `domain`.
    pub fn mapped(&self, domain: BoxDomain, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Self> {
        let pts: Vec<Vec<f64>> = self.points().map(&mut f).collect();
        Self::from_points(domain, &pts, self.r, self.big_r, self.seed, self.kind)
    }

    /// JSON with every number printed to 17 significant digits.
    pub fn to_json(&self) -> String {
        let vec = |v: &[f64]| {
            let parts: Vec<String> = v.iter().map(|&x| fmt_g17(x)).collect();
            format!("[{}]", parts.join(","))
        };
        let pts: Vec<String> = self.points().map(vec).collect();
        format!(
            "{{\"dim\":{},\"lo\":{},\"hi\":{},\"r\":{},\"R\":{},\"seed\":{},\"kind\":\"{}\",\"points\":[{}]}}\n",
            self.dim(),
            vec(self.domain.lo()),
            vec(self.domain.hi()),
            fmt_g17(self.r),
            fmt_g17(self.big_r),
            self.seed,
            self.kind.as_str(),
            pts.join(",")
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            dim: usize,
            lo: Vec<f64>,
            hi: Vec<f64>,
            r: f64,
            #[serde(rename = "R")]
            big_r: f64,
            seed: u64,
            kind: String,
            points: Vec<Vec<f64>>,
        }
        let raw: Raw = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        let domain = BoxDomain::new(raw.lo, raw.hi)?;
        if domain.dim() != raw.dim {
            return Err(Error::Format(format!(
                "dim field {} disagrees with box dimension {}",
                raw.dim,
                domain.dim()
            )));
        }
        let kind = LatticeKind::parse(&raw.kind)?;
        Self::from_points(domain, &raw.points, raw.r, raw.big_r, raw.seed, kind)
    }
}

/// Saturated random sequential adsorption with hard-core distance `r`.
///
/// Darts are thrown into a list of active cells. A cell is retired once a
/// single accepted point covers it (all of its corners are within `r` of that
/// point); surviving cells are split into `2^d` children after every round.
/// The process ends when no active cell is left, so the result is saturated:
/// no location in the box is at distance `>= r` from every accepted point.
pub fn generate_random_parking(domain: &BoxDomain, r: f64, seed: u64) -> Result<PointSet> {
    if !(r > 0.0) || !r.is_finite() {
        return invalid(format!("hard-core distance must be positive, got {r}"));
    }
    let dim = domain.dim();
    if (0..dim).any(|k| domain.side(k) < 4.0 * r) {
        return invalid(format!(
            "degenerate domain: every side must be at least 4r = {}",
            4.0 * r
        ));
    }
    let mut stream = rng::stream(seed);
    let base = r / (dim as f64).sqrt();
    let mut pts = BinGrid::new(domain.lo(), domain.hi(), base);

    // Active cells: integer coordinates at the current refinement level.
    let counts: Vec<i64> = (0..dim).map(|k| (domain.side(k) / base).ceil() as i64).collect();
    let mut active: Vec<[i64; 3]> = Vec::new();
    let mut idx = [0i64; 3];
    loop {
        active.push(idx);
        let mut k = dim;
        let mut done = true;
        while k > 0 {
            k -= 1;
            idx[k] += 1;
            if idx[k] < counts[k] {
                done = false;
                break;
            }
            idx[k] = 0;
        }
        if done {
            break;
        }
    }

    let mut level = 0u32;
    let mut sample = vec![0.0; dim];
    while !active.is_empty() {
        let h = base * 0.5f64.powi(level as i32);
        let throws = active.len();
        for _ in 0..throws {
            let c = active[stream.gen_range(0..active.len())];
            let mut inside = true;
            for k in 0..dim {
                let x = domain.lo()[k] + (c[k] as f64 + stream.gen::<f64>()) * h;
                if x > domain.hi()[k] {
                    inside = false;
                }
                sample[k] = x;
            }
            if inside && !pts.any_within(&sample, r) {
                pts.insert(&sample);
            }
        }

        let covered = |c: &[i64; 3], h: f64, pts: &BinGrid| -> bool {
            let center: Vec<f64> = (0..dim).map(|k| domain.lo()[k] + (c[k] as f64 + 0.5) * h).collect();
            let half_diag = 0.5 * h * (dim as f64).sqrt();
            let r2 = r * r;
            let mut hit = false;
            pts.for_each_candidate(&center, r + half_diag, |id| {
                if hit {
                    return;
                }
                let p = pts.point(id);
                let all_corners = (0..(1usize << dim)).all(|mask| {
                    let mut d2 = 0.0;
                    for k in 0..dim {
                        let off = if mask >> k & 1 == 1 { 1.0 } else { 0.0 };
                        let x = domain.lo()[k] + (c[k] as f64 + off) * h;
                        d2 += (x - p[k]) * (x - p[k]);
                    }
                    d2 < r2
                });
                if all_corners {
                    hit = true;
                }
            });
            hit
        };
        let outside =
            |c: &[i64; 3], h: f64| -> bool { (0..dim).any(|k| domain.lo()[k] + c[k] as f64 * h > domain.hi()[k]) };

        active.retain(|c| !covered(c, h, &pts));
        if active.is_empty() {
            break;
        }
        if h < TOL_GEOM * 1e-3 {
            // Remaining cells are slivers far below the geometric tolerance.
            break;
        }
        let mut next = Vec::with_capacity(active.len() * (1 << dim));
        for c in &active {
            for mask in 0..(1usize << dim) {
                let mut child = [0i64; 3];
                for k in 0..dim {
                    child[k] = 2 * c[k] + (mask >> k & 1) as i64;
                }
                if !outside(&child, 0.5 * h) && !covered(&child, 0.5 * h, &pts) {
                    next.push(child);
                }
            }
        }
        active = next;
        level += 1;
    }

    let coords: Vec<f64> = (0..pts.len()).flat_map(|i| pts.point(i).to_vec()).collect();
    Ok(PointSet {
        coords,
        domain: domain.clone(),
        r,
        big_r: r + TOL_GEOM,
        seed,
        kind: LatticeKind::RandomParking,
    })
}

fn grid_sites(domain: &BoxDomain, spacing: f64) -> Vec<Vec<f64>> {
    let dim = domain.dim();
    let ranges: Vec<(i64, i64)> = (0..dim)
        .map(|k| {
            let a = ((domain.lo()[k] - TOL_GEOM) / spacing).ceil() as i64;
            let b = ((domain.hi()[k] + TOL_GEOM) / spacing).floor() as i64;
            (a, b)
        })
        .collect();
    let mut out = Vec::new();
    if ranges.iter().any(|(a, b)| b < a) {
        return out;
    }
    let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        let p: Vec<f64> = (0..dim)
            .map(|k| (idx[k] as f64 * spacing).clamp(domain.lo()[k], domain.hi()[k]))
            .collect();
        out.push(p);
        let mut k = dim;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if idx[k] < ranges[k].1 {
                idx[k] += 1;
                break;
            }
            idx[k] = ranges[k].0;
        }
    }
}

/// Grid points `spacing * Z^d` inside the closed box, in lexicographic order.
pub fn generate_periodic(domain: &BoxDomain, spacing: f64) -> Result<PointSet> {
    if !(spacing > 0.0) || !spacing.is_finite() {
        return invalid(format!("spacing must be positive, got {spacing}"));
    }
    let sites = grid_sites(domain, spacing);
    let dim = domain.dim() as f64;
    Ok(PointSet {
        coords: sites.concat(),
        domain: domain.clone(),
        r: spacing,
        big_r: spacing * dim.sqrt() / 2.0 + TOL_GEOM,
        seed: 0,
        kind: LatticeKind::Periodic,
    })
}

/// Grid points displaced by independent uniform offsets in
/// `[-jitter * spacing, jitter * spacing]^d`, clamped into the box.
pub fn generate_jittered(domain: &BoxDomain, spacing: f64, jitter: f64, seed: u64) -> Result<PointSet> {
    if !(spacing > 0.0) || !spacing.is_finite() {
        return invalid(format!("spacing must be positive, got {spacing}"));
    }
    if !(0.0..0.45).contains(&jitter) {
        return invalid(format!("jitter must lie in [0, 0.45), got {jitter}"));
    }
    let mut stream = rng::stream(seed);
    let amp = jitter * spacing;
    let mut coords = Vec::new();
    for site in grid_sites(domain, spacing) {
        for (k, x) in site.iter().enumerate() {
            let off = if amp > 0.0 { stream.gen_range(-amp..=amp) } else { 0.0 };
            coords.push((x + off).clamp(domain.lo()[k], domain.hi()[k]));
        }
    }
    let dim = domain.dim() as f64;
    Ok(PointSet {
        coords,
        domain: domain.clone(),
        r: spacing * (1.0 - 2.0 * jitter),
        big_r: spacing * dim.sqrt() * (0.5 + jitter) + TOL_GEOM,
        seed,
        kind: LatticeKind::Jittered,
    })
}

/// Measured admissibility constants of a point set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityReport {
    pub min_pair_dist: f64,
    pub max_cover_dist: f64,
    pub pass_hardcore: bool,
    pub pass_covering: bool,
}

/// Smallest distance between two distinct points, `+inf` for a single point.
pub fn min_pair_distance(ps: &PointSet) -> f64 {
    let n = ps.len();
    if n < 2 {
        return f64::INFINITY;
    }
    let dom = ps.domain();
    let diam = (0..ps.dim()).map(|k| dom.side(k).powi(2)).sum::<f64>().sqrt();
    let mut side = ps.r.min(diam).max(diam * 1e-6);
    loop {
        let grid = BinGrid::from_points(dom.lo(), dom.hi(), side, ps.coords());
        let mut best = f64::INFINITY;
        for i in 0..n {
            grid.for_each_candidate(ps.point(i), side, |j| {
                if j > i {
                    best = best.min(dist2(ps.point(i), ps.point(j)));
                }
            });
        }
        if best <= side * side || side >= diam {
            return best.sqrt();
        }
        side = (2.0 * side).min(diam);
    }
}

/// Measure the hard-core distance exactly and the covering radius on a test
/// grid of pitch at most `r / 4` spanning the whole box.
pub fn check_admissibility(ps: &PointSet) -> Result<AdmissibilityReport> {
    if ps.is_empty() {
        return invalid("empty point set");
    }
    let min_pair_dist = min_pair_distance(ps);
    let dom = ps.domain();
    let dim = ps.dim();
    let pitch_bound = ps.r / 4.0;
    let steps: Vec<usize> = (0..dim)
        .map(|k| (dom.side(k) / pitch_bound).ceil().max(1.0) as usize)
        .collect();
    let grid = BinGrid::from_points(dom.lo(), dom.hi(), ps.r.max(TOL_GEOM), ps.coords());
    let mut max_cover = 0.0f64;
    let mut idx = vec![0usize; dim];
    let mut q = vec![0.0; dim];
    loop {
        for k in 0..dim {
            q[k] = dom.lo()[k] + dom.side(k) * idx[k] as f64 / steps[k] as f64;
        }
        let (_, d) = grid.nearest(&q).expect("nonempty");
        max_cover = max_cover.max(d);
        let mut k = dim;
        let mut done = true;
        while k > 0 {
            k -= 1;
            if idx[k] < steps[k] {
                idx[k] += 1;
                done = false;
                break;
            }
            idx[k] = 0;
        }
        if done {
            break;
        }
    }
    Ok(AdmissibilityReport {
        min_pair_dist,
        max_cover_dist: max_cover,
        pass_hardcore: min_pair_dist >= ps.r - TOL_GEOM,
        pass_covering: max_cover < ps.big_r,
    })
}
