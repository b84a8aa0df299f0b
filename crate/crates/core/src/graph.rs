//! Admissible edge sets: Voronoi neighbors and symmetrized k-NN graphs.

use serde::Deserialize;
use spade::{DelaunayTriangulation, HasPosition, Point2, Triangulation};

use crate::error::{invalid, Error, Result};
use crate::grid::BinGrid;
use crate::lattice::{BoxDomain, PointSet, TOL_GEOM};
use crate::numeric::{dist2, dot, fmt_g17};

/// Hard cap on vertex degree for generated 2D edge sets.
pub const MAX_DEGREE: usize = 40;

/// Symmetric set of ordered pairs over point indices, stored in CSR form
/// sorted by `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSet {
    n: usize,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    /// Strict upper bound on edge length.
    pub m: f64,
    pub max_degree: usize,
}

impl EdgeSet {
    /// Build from unordered pairs; duplicates and orientation are ignored.
    /// `m` is set to the longest edge plus [`TOL_GEOM`].
    pub fn from_undirected(ps: &PointSet, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut es = Self::from_pairs_unchecked(ps.len(), pairs)?;
        es.m = max_edge_range(&es, ps) + TOL_GEOM;
        Ok(es)
    }

    fn from_pairs_unchecked(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut directed: Vec<(usize, usize)> = Vec::with_capacity(2 * pairs.len());
        for &(i, j) in pairs {
            if i >= n || j >= n {
                return invalid(format!("edge ({i}, {j}) out of range for {n} points"));
            }
            if i == j {
                return invalid(format!("self-loop at {i}"));
            }
            directed.push((i, j));
            directed.push((j, i));
        }
        directed.sort_unstable();
        directed.dedup();
        let mut offsets = vec![0usize; n + 1];
        for &(i, _) in &directed {
            offsets[i + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let max_degree = (0..n).map(|i| offsets[i + 1] - offsets[i]).max().unwrap_or(0);
        Ok(Self {
            n,
            offsets,
            targets: directed.into_iter().map(|(_, j)| j).collect(),
            m: TOL_GEOM,
            max_degree,
        })
    }

    pub fn num_points(&self) -> usize {
        self.n
    }

    /// Number of ordered pairs.
    pub fn num_ordered(&self) -> usize {
        self.targets.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// Ordered pairs in ascending `(i, j)` order.
    pub fn ordered_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| self.neighbors(i).iter().map(move |&j| (i, j)))
    }

    /// Each unordered pair once, as `(i, j)` with `i < j`.
    pub fn undirected_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.ordered_pairs().filter(|(i, j)| i < j)
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&j).is_ok()
    }

    /// Position of the ordered pair `(i, j)` in CSR storage.
    pub(crate) fn slot(&self, i: usize, j: usize) -> Option<usize> {
        self.neighbors(i).binary_search(&j).ok().map(|k| self.offsets[i] + k)
    }

    pub(crate) fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Same pairs plus one extra symmetric edge; `m` and the degree bound are
    /// recomputed.
    pub fn with_edge(&self, ps: &PointSet, i: usize, j: usize) -> Result<Self> {
        let mut pairs: Vec<(usize, usize)> = self.undirected_pairs().collect();
        pairs.push((i, j));
        Self::from_undirected(ps, &pairs)
    }

    /// JSON with each unordered pair stored once as `[i, j]`, `i < j`.
    pub fn to_json(&self) -> String {
        let pairs: Vec<String> = self.undirected_pairs().map(|(i, j)| format!("[{i},{j}]")).collect();
        format!(
            "{{\"M\":{},\"max_degree\":{},\"pairs\":[{}]}}\n",
            fmt_g17(self.m),
            self.max_degree,
            pairs.join(",")
        )
    }

    /// Parse the JSON produced by [`EdgeSet::to_json`] for a set of `n` points.
    pub fn from_json(text: &str, n: usize) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            #[serde(rename = "M")]
            m: f64,
            max_degree: usize,
            pairs: Vec<[usize; 2]>,
        }
        let raw: Raw = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        let pairs: Vec<(usize, usize)> = raw.pairs.iter().map(|p| (p[0], p[1])).collect();
        let mut es = Self::from_pairs_unchecked(n, &pairs)?;
        if es.max_degree != raw.max_degree {
            return Err(Error::Format(format!(
                "max_degree field {} disagrees with pairs ({})",
                raw.max_degree, es.max_degree
            )));
        }
        es.m = raw.m;
        Ok(es)
    }
}

#[derive(Clone, Copy)]
struct Site {
    pos: Point2<f64>,
    idx: usize,
}

impl HasPosition for Site {
    type Scalar = f64;
    fn position(&self) -> Point2<f64> {
        self.pos
    }
}

fn triangulate(ps: &PointSet) -> Result<DelaunayTriangulation<Site>> {
    if ps.dim() != 2 {
        return Err(Error::Dimension(format!(
            "Voronoi construction needs d = 2, got {}",
            ps.dim()
        )));
    }
    let mut tri: DelaunayTriangulation<Site> = DelaunayTriangulation::new();
    for (idx, p) in ps.points().enumerate() {
        let n_before = tri.num_vertices();
        tri.insert(Site {
            pos: Point2::new(p[0], p[1]),
            idx,
        })
        .map_err(|e| Error::Numerical(format!("triangulation insert failed: {e:?}")))?;
        if tri.num_vertices() == n_before {
            return invalid(format!("duplicate point at index {idx}"));
        }
    }
    Ok(tri)
}

/// Length of `{p + s d : s in [s0, s1]}` inside the closed box.
fn clipped_length(p: [f64; 2], d: [f64; 2], mut s0: f64, mut s1: f64, lo: &[f64], hi: &[f64]) -> f64 {
    for k in 0..2 {
        if d[k] == 0.0 {
            if p[k] < lo[k] || p[k] > hi[k] {
                return 0.0;
            }
            continue;
        }
        let a = (lo[k] - p[k]) / d[k];
        let b = (hi[k] - p[k]) / d[k];
        s0 = s0.max(a.min(b));
        s1 = s1.min(a.max(b));
    }
    if s1 <= s0 {
        0.0
    } else {
        (s1 - s0) * d[0].hypot(d[1])
    }
}

/// Voronoi neighbors in the domain: Delaunay edges whose dual Voronoi facet,
/// clipped to the domain box, has length above [`TOL_GEOM`]. Facets that
/// shrink to a point (cocircular configurations such as grid diagonals) and
/// hull facets that lie outside the box are dropped.
pub fn build_voronoi_edges(ps: &PointSet) -> Result<EdgeSet> {
    if ps.dim() != 2 {
        return Err(Error::Dimension(format!(
            "Voronoi construction needs d = 2, got {}",
            ps.dim()
        )));
    }
    if ps.len() < 3 {
        return invalid(format!("need at least 3 points, got {}", ps.len()));
    }
    let tri = triangulate(ps)?;
    let (lo, hi) = (ps.domain().lo(), ps.domain().hi());
    let mut pairs = Vec::with_capacity(tri.num_undirected_edges());
    for e in tri.undirected_edges() {
        let [a, b] = e.vertices();
        let (pa, pb) = (a.position(), b.position());
        let perp = [-(pb.y - pa.y), pb.x - pa.x];
        let d = e.as_directed();
        let len = match (d.face().as_inner(), d.rev().face().as_inner()) {
            (Some(f1), Some(f2)) => {
                let c1 = f1.circumcenter();
                let c2 = f2.circumcenter();
                clipped_length([c1.x, c1.y], [c2.x - c1.x, c2.y - c1.y], 0.0, 1.0, lo, hi)
            }
            (Some(f), None) | (None, Some(f)) => {
                // ray from the circumcenter away from the opposite vertex
                let c = f.circumcenter();
                let third = f
                    .vertices()
                    .into_iter()
                    .find(|v| v.fix() != a.fix() && v.fix() != b.fix())
                    .expect("triangle has a third vertex")
                    .position();
                let side = perp[0] * (third.x - pa.x) + perp[1] * (third.y - pa.y);
                let dir = if side > 0.0 { [-perp[0], -perp[1]] } else { perp };
                clipped_length([c.x, c.y], dir, 0.0, f64::INFINITY, lo, hi)
            }
            (None, None) => {
                let mid = [0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y)];
                clipped_length(mid, perp, f64::NEG_INFINITY, f64::INFINITY, lo, hi)
            }
        };
        if len > TOL_GEOM {
            pairs.push((a.data().idx, b.data().idx));
        }
    }
    let es = EdgeSet::from_undirected(ps, &pairs)?;
    if es.max_degree > MAX_DEGREE {
        return Err(Error::Numerical(format!(
            "degree {} exceeds the bound {MAX_DEGREE}",
            es.max_degree
        )));
    }
    Ok(es)
}

/// The `k` nearest points to point `i`, ties broken by smaller index.
pub fn nearest_neighbors(ps: &PointSet, i: usize, k: usize) -> Vec<usize> {
    let dom = ps.domain();
    let grid = BinGrid::from_points(dom.lo(), dom.hi(), ps.r, ps.coords());
    grid.knn(ps.point(i), k, Some(i)).into_iter().map(|(j, _)| j).collect()
}

/// Symmetrized k-nearest-neighbor graph: `(i, j)` is kept if either point
/// lists the other among its `k` nearest. Ties go to the smaller index.
pub fn build_knn_edges(ps: &PointSet, k: usize) -> Result<EdgeSet> {
    if k == 0 || k >= ps.len() {
        return invalid(format!("k must satisfy 1 <= k < {}, got {k}", ps.len()));
    }
    let dom = ps.domain();
    let n = ps.len() as f64;
    let side = (dom.volume() * k as f64 / n).powf(1.0 / ps.dim() as f64).max(ps.r);
    let grid = BinGrid::from_points(dom.lo(), dom.hi(), side, ps.coords());
    let mut pairs = Vec::with_capacity(ps.len() * k);
    for i in 0..ps.len() {
        for (j, _) in grid.knn(ps.point(i), k, Some(i)) {
            pairs.push((i.min(j), i.max(j)));
        }
    }
    let es = EdgeSet::from_undirected(ps, &pairs)?;
    if ps.dim() == 2 && es.max_degree > MAX_DEGREE {
        return Err(Error::Numerical(format!(
            "degree {} exceeds the bound {MAX_DEGREE}",
            es.max_degree
        )));
    }
    Ok(es)
}

/// Longest edge length, 0 for an empty set.
pub fn max_edge_range(es: &EdgeSet, ps: &PointSet) -> f64 {
    es.undirected_pairs()
        .map(|(i, j)| dist2(ps.point(i), ps.point(j)))
        .fold(0.0, f64::max)
        .sqrt()
}

/// Voronoi cell areas clipped to the domain box.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTable {
    pub areas: Vec<f64>,
}

fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for k in 0..n {
        let a = poly[k];
        let b = poly[(k + 1) % n];
        s += a[0] * b[1] - a[1] * b[0];
    }
    0.5 * s.abs()
}

/// Clip a convex polygon to the half-plane `normal . z <= offset`.
fn clip(poly: &[[f64; 2]], normal: [f64; 2], offset: f64) -> Vec<[f64; 2]> {
    let side = |p: &[f64; 2]| normal[0] * p[0] + normal[1] * p[1] - offset;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for k in 0..poly.len() {
        let a = poly[k];
        let b = poly[(k + 1) % poly.len()];
        let (sa, sb) = (side(&a), side(&b));
        if sa <= 0.0 {
            out.push(a);
        }
        if (sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0) {
            let t = sa / (sa - sb);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

/// Voronoi cell of point `i` clipped to the box, intersecting the bisector
/// half-planes of the candidate neighbors `nbrs`.
pub(crate) fn clipped_cell(ps: &PointSet, i: usize, nbrs: impl IntoIterator<Item = usize>) -> Vec<[f64; 2]> {
    let dom = ps.domain();
    let (lo, hi) = (dom.lo(), dom.hi());
    let mut poly = vec![[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]];
    let x = ps.point(i);
    for j in nbrs {
        let y = ps.point(j);
        let normal = [y[0] - x[0], y[1] - x[1]];
        let offset = 0.5 * (dot(y, y) - dot(x, x));
        poly = clip(&poly, normal, offset);
        if poly.is_empty() {
            break;
        }
    }
    poly
}

/// Areas of the Voronoi cells clipped to the domain. Used for rasterization
/// and interpolation only.
pub fn voronoi_cell_areas(ps: &PointSet) -> Result<CellTable> {
    if ps.dim() != 2 {
        return Err(Error::Dimension(format!("Voronoi cells need d = 2, got {}", ps.dim())));
    }
    let n = ps.len();
    if n == 0 {
        return Ok(CellTable { areas: Vec::new() });
    }
    let tri = triangulate(ps)?;
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in tri.undirected_edges() {
        let [a, b] = e.vertices();
        nbrs[a.data().idx].push(b.data().idx);
        nbrs[b.data().idx].push(a.data().idx);
    }
    let areas = (0..n)
        .map(|i| polygon_area(&clipped_cell(ps, i, nbrs[i].iter().copied())))
        .collect();
    Ok(CellTable { areas })
}

/// Subsets of space used to localize energies and cell problems.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// Every point.
    Whole,
    /// Closed axis-aligned box.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Open cube `center + side * Q_nu`, where `frame[0] = nu` and the
    /// remaining rows complete an orthonormal basis.
    Cube {
        center: Vec<f64>,
        frame: Vec<Vec<f64>>,
        side: f64,
    },
}

impl Region {
    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            Region::Whole => true,
            Region::Box { lo, hi } => p.iter().enumerate().all(|(k, &x)| x >= lo[k] && x <= hi[k]),
            Region::Cube { center, frame, side } => frame.iter().all(|axis| {
                let s: f64 = axis
                    .iter()
                    .zip(p.iter().zip(center))
                    .map(|(a, (x, c))| a * (x - c))
                    .sum();
                s.abs() < 0.5 * side
            }),
        }
    }

    /// Whether the region can contain a point of `domain`.
    pub fn meets(&self, domain: &BoxDomain) -> bool {
        match self {
            Region::Whole => true,
            Region::Box { lo, hi } => (0..domain.dim()).all(|k| lo[k] <= domain.hi()[k] && hi[k] >= domain.lo()[k]),
            Region::Cube { center, side, .. } => {
                let reach = 0.5 * side * (center.len() as f64).sqrt();
                (0..domain.dim()).all(|k| center[k] - reach <= domain.hi()[k] && center[k] + reach >= domain.lo()[k])
            }
        }
    }
}

/// Points inside a region, with the induced edge set in local indexing.
#[derive(Debug, Clone)]
pub struct Restriction {
    /// Global index of each local point, ascending.
    pub indices: Vec<usize>,
    /// Edges with both endpoints inside, over local indices.
    pub edges: EdgeSet,
    /// Local points with the original domain and metadata.
    pub points: PointSet,
}

impl Restriction {
    /// Local index of a global point, if it lies in the region.
    pub fn local(&self, global: usize) -> Option<usize> {
        self.indices.binary_search(&global).ok()
    }
}

/// Restrict a lattice and its edges to a region. An empty restriction is
/// valid and yields empty structures.
pub fn restrict_to_region(ps: &PointSet, es: &EdgeSet, region: &Region) -> Result<Restriction> {
    if es.num_points() != ps.len() {
        return Err(Error::SizeMismatch {
            expected: ps.len(),
            got: es.num_points(),
        });
    }
    let inside: Vec<bool> = ps.points().map(|p| region.contains(p)).collect();
    let indices: Vec<usize> = (0..ps.len()).filter(|&i| inside[i]).collect();
    let mut local = vec![usize::MAX; ps.len()];
    for (l, &g) in indices.iter().enumerate() {
        local[g] = l;
    }
    let pairs: Vec<(usize, usize)> = es
        .undirected_pairs()
        .filter(|&(i, j)| inside[i] && inside[j])
        .map(|(i, j)| (local[i], local[j]))
        .collect();
    let pts: Vec<Vec<f64>> = indices.iter().map(|&g| ps.point(g).to_vec()).collect();
    let points = PointSet::from_points(ps.domain().clone(), &pts, ps.r, ps.big_r, ps.seed, ps.kind)?;
    let edges = EdgeSet::from_undirected(&points, &pairs)?;
    Ok(Restriction { indices, edges, points })
}
