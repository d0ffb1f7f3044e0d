//! Skeleton extraction and topological signatures of binary rasters.
//!
//! Thinning removes simple cells (cells whose deletion keeps the 8-connected
//! foreground and 4-connected background topology) in order of increasing
//! distance to the background. Cells on the medial ridge are found from jumps
//! of the nearest-boundary feature between 4-neighbours and are kept, so
//! branches running into convex corners survive. A final pass strips
//! remaining simple non-end cells to leave a one-cell-thin skeleton.

mod features;
mod signature;

pub use signature::{
    extract_signature, Branch, GraphNode, Junction, NodeKind, SignatureParams, SkeletonGraph,
    TopoSignature,
};

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{LensError, Result};
use crate::geometry::{Point, RasterGrid};

use features::FeatureMap;

/// 8-neighbour offsets in Yokoi order: E, NE, N, NW, W, SW, S, SE.
pub(crate) const N8: [(isize, isize); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

/// A one-cell-thin skeleton on the lattice of its source raster.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonImage {
    pub width: usize,
    pub height: usize,
    pub origin: Point,
    pub cell_size: f64,
    pub cells: Vec<bool>,
}

impl SkeletonImage {
    #[inline]
    pub fn get(&self, i: isize, j: isize) -> bool {
        if i < 0 || j < 0 || i as usize >= self.width || j as usize >= self.height {
            return false;
        }
        self.cells[j as usize * self.width + i as usize]
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.origin.x + (i as f64 + 0.5) * self.cell_size,
            self.origin.y + (j as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn center_of_index(&self, k: usize) -> Point {
        self.cell_center(k % self.width, k / self.width)
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|c| **c).count()
    }

    /// Number of skeletal 8-neighbours per cell (zero off the skeleton).
    pub fn neighbor_counts(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.cells.len()];
        for j in 0..self.height {
            for i in 0..self.width {
                if self.cells[j * self.width + i] {
                    out[j * self.width + i] = N8
                        .iter()
                        .filter(|(di, dj)| self.get(i as isize + di, j as isize + dj))
                        .count() as u8;
                }
            }
        }
        out
    }

    /// The skeleton viewed as a raster, e.g. to thin it again.
    pub fn to_raster(&self) -> RasterGrid {
        RasterGrid {
            width: self.width,
            height: self.height,
            origin: self.origin,
            cell_size: self.cell_size,
            bits: self.cells.clone(),
        }
    }

    /// Whether any 2x2 block is fully set.
    pub fn has_full_block(&self) -> bool {
        for j in 0..self.height.saturating_sub(1) {
            for i in 0..self.width.saturating_sub(1) {
                let (i, j) = (i as isize, j as isize);
                if self.get(i, j)
                    && self.get(i + 1, j)
                    && self.get(i, j + 1)
                    && self.get(i + 1, j + 1)
                {
                    return true;
                }
            }
        }
        false
    }
}

/// Ridge threshold: a feature jump larger than this many cells marks a medial cell.
const RIDGE_JUMP_CELLS: f64 = 1.5;

/// Thins an arbitrary binary raster. Nearest-boundary features are the
/// nearest background cell centers (cells outside the grid count as background).
pub fn skeletonize(grid: &RasterGrid) -> Result<SkeletonImage> {
    if grid.is_empty() {
        return Err(LensError::InvalidInput(
            "cannot skeletonize an empty grid".into(),
        ));
    }
    let features = FeatureMap::from_raster(grid);
    Ok(thin(grid, &features))
}

/// Thins the raster of a polygon using exact nearest points on the polygon
/// boundary as features. Produces cleaner ridges than `skeletonize` on slanted edges.
pub fn skeletonize_polygon(grid: &RasterGrid, ring: &[Point]) -> Result<SkeletonImage> {
    if grid.is_empty() {
        return Err(LensError::InvalidInput(
            "cannot skeletonize an empty grid".into(),
        ));
    }
    let features = FeatureMap::from_ring(grid, ring);
    Ok(thin(grid, &features))
}

struct Work<'a> {
    w: usize,
    h: usize,
    set: Vec<bool>,
    dist: &'a [f64],
}

impl Work<'_> {
    #[inline]
    fn get(&self, i: isize, j: isize) -> bool {
        if i < 0 || j < 0 || i as usize >= self.w || j as usize >= self.h {
            return false;
        }
        self.set[j as usize * self.w + i as usize]
    }

    fn ring(&self, k: usize) -> [bool; 8] {
        let (i, j) = ((k % self.w) as isize, (k / self.w) as isize);
        let mut x = [false; 8];
        for (n, (di, dj)) in N8.iter().enumerate() {
            x[n] = self.get(i + di, j + dj);
        }
        x
    }

    fn neighbours(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = ((k % self.w) as isize, (k / self.w) as isize);
        N8.iter().filter_map(move |(di, dj)| {
            let (a, b) = (i + di, j + dj);
            self.get(a, b).then(|| b as usize * self.w + a as usize)
        })
    }

    fn is_border(&self, k: usize) -> bool {
        let x = self.ring(k);
        !(x[0] && x[2] && x[4] && x[6])
    }
}

fn has_full_block(work: &Work) -> bool {
    (0..work.h as isize - 1).any(|j| {
        (0..work.w as isize - 1).any(|i| {
            work.get(i, j) && work.get(i + 1, j) && work.get(i, j + 1) && work.get(i + 1, j + 1)
        })
    })
}

/// Yokoi 8-connectivity number; a cell is simple iff it equals one.
pub(crate) fn connectivity_number(x: &[bool; 8]) -> i32 {
    let nb = |k: usize| if x[k % 8] { 0 } else { 1 };
    let mut c = 0;
    for k in [0usize, 2, 4, 6] {
        c += nb(k) - nb(k) * nb(k + 1) * nb(k + 2);
    }
    c
}

fn thin(grid: &RasterGrid, features: &FeatureMap) -> SkeletonImage {
    let (w, h) = (grid.width, grid.height);
    let mut anchors = features.ridge_cells(grid, RIDGE_JUMP_CELLS);
    let mut work = Work {
        w,
        h,
        set: grid.bits.clone(),
        dist: &features.dist,
    };
    // An input that is already thin keeps its line ends.
    if !has_full_block(&work) {
        for (k, a) in anchors.iter_mut().enumerate() {
            if work.set[k] && work.neighbours(k).count() == 1 {
                *a = true;
            }
        }
    }
    let key = |work: &Work, k: usize| Reverse((work.dist[k].to_bits(), k));

    // Distance-ordered removal of simple non-ridge cells.
    let mut heap = BinaryHeap::new();
    for k in 0..w * h {
        if work.set[k] && work.is_border(k) {
            heap.push(key(&work, k));
        }
    }
    while let Some(Reverse((_, k))) = heap.pop() {
        if !work.set[k] || anchors[k] {
            continue;
        }
        if connectivity_number(&work.ring(k)) != 1 {
            continue;
        }
        work.set[k] = false;
        let nbrs: Vec<usize> = work.neighbours(k).collect();
        for n in nbrs {
            heap.push(key(&work, n));
        }
    }

    // Cleanup: drop simple cells that are not line ends until stable, deepest
    // first so thick strands thin before their tips are visited.
    let mut order: Vec<usize> = (0..w * h).filter(|&k| work.set[k]).collect();
    order.sort_by(|&a, &b| work.dist[a].total_cmp(&work.dist[b]).then(a.cmp(&b)));
    loop {
        let mut changed = false;
        for &k in order.iter().rev() {
            if !work.set[k] {
                continue;
            }
            let x = work.ring(k);
            let count = x.iter().filter(|b| **b).count();
            if count >= 2 && connectivity_number(&x) == 1 {
                work.set[k] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    SkeletonImage {
        width: w,
        height: h,
        origin: grid.origin,
        cell_size: grid.cell_size,
        cells: work.set,
    }
}
