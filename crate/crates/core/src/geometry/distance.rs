use rayon::prelude::*;

use super::{closest_on_segment, FootprintPolygon, Point, RasterGrid};
use crate::error::{LensError, Result};

/// Exact distance-to-boundary samples on a raster lattice.
///
/// Values are computed geometrically per cell center, so the lattice is only
/// a sampling pattern; `exact` evaluates the same function anywhere.
/// Unoccupied cells hold zero.
#[derive(Debug, Clone)]
pub struct DistanceField {
    pub width: usize,
    pub height: usize,
    pub origin: Point,
    pub cell_size: f64,
    pub values: Vec<f64>,
    ring: Vec<Point>,
}

impl DistanceField {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.width + i]
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.origin.x + (i as f64 + 0.5) * self.cell_size,
            self.origin.y + (j as f64 + 0.5) * self.cell_size,
        )
    }

    /// Reference ring the distances are measured to.
    pub fn boundary(&self) -> &[Point] {
        &self.ring
    }

    /// Exact distance from `p` to the reference boundary.
    pub fn exact(&self, p: Point) -> f64 {
        self.nearest(p).0
    }

    /// Distance, nearest edge index and closest boundary point.
    pub fn nearest(&self, p: Point) -> (f64, usize, Point) {
        nearest_on_ring(&self.ring, p)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

pub(crate) fn nearest_on_ring(ring: &[Point], p: Point) -> (f64, usize, Point) {
    let n = ring.len();
    let mut best = (f64::INFINITY, 0, p);
    for k in 0..n {
        let (q, _) = closest_on_segment(p, ring[k], ring[(k + 1) % n]);
        let d = q.dist(p);
        if d < best.0 {
            best = (d, k, q);
        }
    }
    best
}

/// Exact Euclidean distance from every occupied cell center of `grid` to the
/// nearest boundary edge of `polygon`.
pub fn distance_field(polygon: &FootprintPolygon, grid: &RasterGrid) -> Result<DistanceField> {
    distance_field_for_ring(polygon.vertices(), grid)
}

pub(crate) fn distance_field_for_ring(ring: &[Point], grid: &RasterGrid) -> Result<DistanceField> {
    if grid.width == 0 || grid.height == 0 || grid.is_empty() {
        return Err(LensError::InvalidInput(
            "distance field of an empty grid".into(),
        ));
    }
    let w = grid.width;
    let mut values = vec![0.0; w * grid.height];
    values.par_chunks_mut(w).enumerate().for_each(|(j, row)| {
        for (i, v) in row.iter_mut().enumerate() {
            if grid.get(i, j) {
                *v = nearest_on_ring(ring, grid.cell_center(i, j)).0;
            }
        }
    });
    Ok(DistanceField {
        width: w,
        height: grid.height,
        origin: grid.origin,
        cell_size: grid.cell_size,
        values,
        ring: ring.to_vec(),
    })
}
