use rayon::prelude::*;

use crate::geometry::{distance::nearest_on_ring, Point, RasterGrid};

/// Nearest-boundary feature per cell of the grid padded by one background ring.
pub(super) struct FeatureMap {
    /// Padded width and height.
    pw: usize,
    ph: usize,
    feat: Vec<Point>,
    /// Distance to the feature per unpadded cell, zero off the foreground.
    pub dist: Vec<f64>,
}

impl FeatureMap {
    fn padded_center(grid: &RasterGrid, pi: usize, pj: usize) -> Point {
        Point::new(
            grid.origin.x + (pi as f64 - 0.5) * grid.cell_size,
            grid.origin.y + (pj as f64 - 0.5) * grid.cell_size,
        )
    }

    fn finish(grid: &RasterGrid, pw: usize, ph: usize, feat: Vec<Point>) -> Self {
        let mut dist = vec![0.0; grid.width * grid.height];
        for j in 0..grid.height {
            for i in 0..grid.width {
                if grid.get(i, j) {
                    let f = feat[(j + 1) * pw + i + 1];
                    dist[j * grid.width + i] = f.dist(grid.cell_center(i, j));
                }
            }
        }
        FeatureMap { pw, ph, feat, dist }
    }

    /// Features are the nearest background cell centers (exact Euclidean transform).
    pub fn from_raster(grid: &RasterGrid) -> Self {
        let (pw, ph) = (grid.width + 2, grid.height + 2);
        let bg = |pi: usize, pj: usize| {
            pi == 0 || pj == 0 || pi == pw - 1 || pj == ph - 1 || !grid.get(pi - 1, pj - 1)
        };

        // Column pass: nearest background row per cell.
        let mut near_row = vec![0usize; pw * ph];
        let mut gsq = vec![f64::INFINITY; pw * ph];
        for pi in 0..pw {
            let mut last: Option<usize> = None;
            for pj in 0..ph {
                if bg(pi, pj) {
                    last = Some(pj);
                }
                if let Some(r) = last {
                    near_row[pj * pw + pi] = r;
                    gsq[pj * pw + pi] = ((pj - r) as f64).powi(2);
                }
            }
            let mut last: Option<usize> = None;
            for pj in (0..ph).rev() {
                if bg(pi, pj) {
                    last = Some(pj);
                }
                if let Some(r) = last {
                    let d = ((r - pj) as f64).powi(2);
                    if d < gsq[pj * pw + pi] {
                        gsq[pj * pw + pi] = d;
                        near_row[pj * pw + pi] = r;
                    }
                }
            }
        }

        // Row pass: lower envelope of parabolas.
        let mut feat = vec![Point::new(0.0, 0.0); pw * ph];
        feat.par_chunks_mut(pw).enumerate().for_each(|(pj, row)| {
            let f: Vec<f64> = (0..pw).map(|pi| gsq[pj * pw + pi]).collect();
            let arg = envelope_argmin(&f);
            for (pi, slot) in row.iter_mut().enumerate() {
                let q = arg[pi];
                *slot = Self::padded_center(grid, q, near_row[pj * pw + q]);
            }
        });
        Self::finish(grid, pw, ph, feat)
    }

    /// Features are exact nearest points on the polygon boundary.
    pub fn from_ring(grid: &RasterGrid, ring: &[Point]) -> Self {
        let (pw, ph) = (grid.width + 2, grid.height + 2);
        let mut feat = vec![Point::new(0.0, 0.0); pw * ph];
        feat.par_chunks_mut(pw).enumerate().for_each(|(pj, row)| {
            for (pi, slot) in row.iter_mut().enumerate() {
                *slot = nearest_on_ring(ring, Self::padded_center(grid, pi, pj)).2;
            }
        });
        Self::finish(grid, pw, ph, feat)
    }

    /// Foreground cells where the feature jumps by more than `jump` cells
    /// towards some 4-neighbour. Only the deeper cell of each jumping pair is
    /// marked (ties by index), keeping the ridge one cell thick.
    pub fn ridge_cells(&self, grid: &RasterGrid, jump: f64) -> Vec<bool> {
        let limit = jump * grid.cell_size;
        let mut out = vec![false; grid.width * grid.height];
        for j in 0..grid.height {
            for i in 0..grid.width {
                if !grid.get(i, j) {
                    continue;
                }
                let (pi, pj) = (i + 1, j + 1);
                let f = self.feat[pj * self.pw + pi];
                let k = j * grid.width + i;
                let deeper = |a: usize, b: usize| {
                    if a == 0
                        || b == 0
                        || a > grid.width
                        || b > grid.height
                        || !grid.get(a - 1, b - 1)
                    {
                        return true;
                    }
                    let q = (b - 1) * grid.width + a - 1;
                    (self.dist[k], k) > (self.dist[q], q)
                };
                let nb = [(pi + 1, pj), (pi - 1, pj), (pi, pj + 1), (pi, pj - 1)];
                out[k] = nb
                    .iter()
                    .filter(|(a, b)| *a < self.pw && *b < self.ph)
                    .any(|&(a, b)| self.feat[b * self.pw + a].dist(f) > limit && deeper(a, b));
            }
        }
        out
    }
}

/// For each x, the index q minimising (x - q)^2 + f[q] over finite f.
fn envelope_argmin(f: &[f64]) -> Vec<usize> {
    let n = f.len();
    let qs: Vec<usize> = (0..n).filter(|&q| f[q].is_finite()).collect();
    let mut out = vec![0usize; n];
    if qs.is_empty() {
        return out;
    }
    let mut v: Vec<usize> = Vec::with_capacity(qs.len());
    let mut z: Vec<f64> = Vec::with_capacity(qs.len() + 1);
    let inter = |a: usize, b: usize| {
        let (af, bf) = (a as f64, b as f64);
        ((f[b] + bf * bf) - (f[a] + af * af)) / (2.0 * (bf - af))
    };
    for &q in &qs {
        while let Some(&last) = v.last() {
            let s = inter(last, q);
            if v.len() > 1 && s <= z[z.len() - 1] {
                v.pop();
                z.pop();
            } else {
                break;
            }
        }
        if v.is_empty() {
            v.push(q);
            z.push(f64::NEG_INFINITY);
        } else {
            let s = inter(*v.last().unwrap(), q);
            v.push(q);
            z.push(s);
        }
    }
    let mut k = 0;
    for (x, slot) in out.iter_mut().enumerate() {
        while k + 1 < v.len() && z[k + 1] < x as f64 {
            k += 1;
        }
        *slot = v[k];
    }
    out
}
