//! Uniform cell binning for neighbor queries on point clouds.

use crate::numeric::dist2;

/// Points binned into axis-aligned cells of a fixed side.
#[derive(Debug, Clone)]
pub(crate) struct BinGrid {
    dim: usize,
    lo: Vec<f64>,
    side: f64,
    counts: Vec<usize>,
    cells: Vec<Vec<u32>>,
    coords: Vec<f64>,
}

impl BinGrid {
    pub fn new(lo: &[f64], hi: &[f64], side: f64) -> Self {
        let dim = lo.len();
        let counts: Vec<usize> = (0..dim)
            .map(|k| (((hi[k] - lo[k]) / side).floor() as usize + 1).max(1))
            .collect();
        let total = counts.iter().product();
        Self {
            dim,
            lo: lo.to_vec(),
            side,
            counts,
            cells: vec![Vec::new(); total],
            coords: Vec::new(),
        }
    }

    pub fn from_points(lo: &[f64], hi: &[f64], side: f64, coords: &[f64]) -> Self {
        let mut g = Self::new(lo, hi, side);
        for p in coords.chunks_exact(lo.len()) {
            g.insert(p);
        }
        g
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    fn cell_coord(&self, x: f64, k: usize) -> isize {
        ((x - self.lo[k]) / self.side).floor() as isize
    }

    fn clamp_coord(&self, c: isize, k: usize) -> usize {
        c.clamp(0, self.counts[k] as isize - 1) as usize
    }

    fn flat(&self, idx: &[usize]) -> usize {
        let mut f = 0;
        for (c, i) in self.counts.iter().zip(idx).take(self.dim) {
            f = f * c + i;
        }
        f
    }

    pub fn insert(&mut self, p: &[f64]) -> usize {
        let id = self.len();
        let idx: Vec<usize> = (0..self.dim)
            .map(|k| self.clamp_coord(self.cell_coord(p[k], k), k))
            .collect();
        let f = self.flat(&idx);
        self.cells[f].push(id as u32);
        self.coords.extend_from_slice(p);
        id
    }

    /// Visit every stored point whose cell intersects the cube of half-width
    /// `radius` around `q`. Callers filter by exact distance.
    pub fn for_each_candidate(&self, q: &[f64], radius: f64, mut f: impl FnMut(usize)) {
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for k in 0..self.dim {
            lo[k] = self.clamp_coord(self.cell_coord(q[k] - radius, k), k);
            hi[k] = self.clamp_coord(self.cell_coord(q[k] + radius, k), k);
        }
        let mut cur = lo;
        loop {
            let f_idx = self.flat(&cur[..self.dim]);
            for &id in &self.cells[f_idx] {
                f(id as usize);
            }
            // odometer increment over the block
            let mut k = self.dim;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                if cur[k] < hi[k] {
                    cur[k] += 1;
                    break;
                }
                cur[k] = lo[k];
            }
        }
    }

    /// True if some stored point lies at distance `< radius` from `q`.
    pub fn any_within(&self, q: &[f64], radius: f64) -> bool {
        let r2 = radius * radius;
        let mut hit = false;
        self.for_each_candidate(q, radius, |id| {
            if !hit && dist2(self.point(id), q) < r2 {
                hit = true;
            }
        });
        hit
    }

    fn extent(&self) -> f64 {
        self.counts.iter().map(|&c| c as f64 * self.side).fold(0.0, f64::max)
    }

    /// The `k` nearest stored points to `q` (excluding `skip`), ordered by
    /// distance with ties broken by smaller index.
    pub fn knn(&self, q: &[f64], k: usize, skip: Option<usize>) -> Vec<(usize, f64)> {
        let available = self.len() - usize::from(skip.is_some());
        let k = k.min(available);
        if k == 0 {
            return Vec::new();
        }
        let mut radius = self.side;
        let max_radius = 2.0 * self.extent() + self.side;
        loop {
            let mut found: Vec<(usize, f64)> = Vec::new();
            self.for_each_candidate(q, radius, |id| {
                if Some(id) != skip {
                    found.push((id, dist2(self.point(id), q)));
                }
            });
            found.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            // the block search is exact for every distance <= radius
            if found.len() >= k && found[k - 1].1 <= radius * radius {
                found.truncate(k);
                return found.into_iter().map(|(i, d)| (i, d.sqrt())).collect();
            }
            if radius > max_radius {
                found.truncate(k);
                return found.into_iter().map(|(i, d)| (i, d.sqrt())).collect();
            }
            radius *= 2.0;
        }
    }

    pub fn nearest(&self, q: &[f64]) -> Option<(usize, f64)> {
        self.knn(q, 1, None).into_iter().next()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knn_matches_brute_force() {
        let pts: Vec<f64> = (0..200)
            .flat_map(|i| {
                let t = i as f64;
                [(t * 0.731).fract() * 10.0, (t * 0.377 + 0.1).fract() * 10.0]
            })
            .collect();
        let g = BinGrid::from_points(&[0.0, 0.0], &[10.0, 10.0], 0.7, &pts);
        for q in 0..200 {
            let got = g.knn(g.point(q), 5, Some(q));
            let mut all: Vec<(usize, f64)> = (0..200)
                .filter(|&j| j != q)
                .map(|j| (j, dist2(g.point(j), g.point(q))))
                .collect();
            all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            let want: Vec<usize> = all.iter().take(5).map(|x| x.0).collect();
            assert_eq!(got.iter().map(|x| x.0).collect::<Vec<_>>(), want);
        }
    }

    #[test]
    fn nearest_far_query() {
        let g = BinGrid::from_points(&[0.0, 0.0], &[100.0, 100.0], 1.0, &[99.0, 99.0]);
        let (i, d) = g.nearest(&[0.0, 0.0]).unwrap();
        assert_eq!(i, 0);
        assert!((d - 99.0 * 2f64.sqrt()).abs() < 1e-12);
    }
}
