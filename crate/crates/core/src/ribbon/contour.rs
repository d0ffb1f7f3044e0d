use serde::{Deserialize, Serialize};

use super::rays::{boundary_crossing, bridge_gaps, trace_rays, Hit, Ray, Tracer};
use crate::error::{LensError, Result};
use crate::geometry::{DistanceField, Point};
use crate::scmap::DiskMap;

/// Part of one level set inside one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub node: usize,
    pub d_w: f64,
    /// Ordered by disk angle; open runs start and end on the node boundary.
    pub points: Vec<Point>,
    pub closed: bool,
}

impl Contour {
    pub fn first(&self) -> Option<Point> {
        self.points.first().copied()
    }

    pub fn last(&self) -> Option<Point> {
        self.points.last().copied()
    }
}

/// Splits the hits of level `li` into closed loops and boundary-to-boundary runs.
pub(crate) fn contours_from_rays(
    rays: &[Ray],
    li: usize,
    d_w: f64,
    node: usize,
    ring: &[Point],
    dist: &DistanceField,
    step: f64,
) -> Vec<Contour> {
    let n = rays.len();
    let is_root = |i: usize| matches!(rays[i % n].hits[li], Hit::Root { .. });
    let roots = (0..n).filter(|&i| is_root(i)).count();
    if roots == 0 {
        return Vec::new();
    }
    let max_gap = 2.0 * dist.cell_size;
    if roots == n {
        let points: Vec<Point> = rays.iter().filter_map(|r| r.hits[li].point()).collect();
        return vec![Contour {
            node,
            d_w,
            points: bridge_gaps(&points, dist, ring, d_w, max_gap, true),
            closed: true,
        }];
    }
    let start = (0..n).find(|&i| is_root(i) && !is_root(i + n - 1)).unwrap();
    let mut out = Vec::new();
    let mut i = start;
    let mut seen = 0;
    while seen < n {
        if !is_root(i) {
            i += 1;
            seen += 1;
            continue;
        }
        let before = &rays[(i + n - 1) % n];
        let mut points = Vec::new();
        if before.hits[li] == Hit::Boundary {
            points.extend(boundary_crossing(
                ring,
                dist,
                before.landing,
                rays[i % n].landing,
                d_w,
                step,
            ));
        }
        while is_root(i) && seen < n {
            points.extend(rays[i % n].hits[li].point());
            i += 1;
            seen += 1;
        }
        let after = &rays[i % n];
        if after.hits[li] == Hit::Boundary {
            points.extend(boundary_crossing(
                ring,
                dist,
                rays[(i + n - 1) % n].landing,
                after.landing,
                d_w,
                step,
            ));
        }
        out.push(Contour {
            node,
            d_w,
            points: bridge_gaps(&points, dist, ring, d_w, max_gap, false),
            closed: false,
        });
    }
    out
}

/// Level set d = `d_w` of the footprint distance inside the image of `map`.
///
/// `samples` radii are traced to start with; more are added where
/// neighbouring roots lie further apart than one cell of `dist`.
pub fn level_set(
    map: &DiskMap,
    dist: &DistanceField,
    d_w: f64,
    samples: usize,
) -> Result<Vec<Contour>> {
    if !(d_w > 0.0) {
        return Err(LensError::InvalidInput(format!(
            "level distance must be positive, got {d_w}"
        )));
    }
    if samples < 8 {
        return Err(LensError::InvalidInput(
            "at least 8 radial samples are required".into(),
        ));
    }
    let levels = [d_w];
    let tracer = Tracer::new(map, dist, &levels);
    let rays = trace_rays(&tracer, samples, &[], dist.cell_size);
    let skipped = rays.iter().filter(|r| r.hits[0] == Hit::Missing).count();
    if !rays.iter().any(|r| matches!(r.hits[0], Hit::Root { .. })) {
        let max_radius = dist.exact(map.center());
        return Err(LensError::EmptyContour { d_w, max_radius });
    }
    if skipped > 0 {
        crate::lens_warn!("level {d_w}: {skipped} radii without a bracketed root");
    }
    Ok(contours_from_rays(
        &rays,
        0,
        d_w,
        0,
        &map.vertices,
        dist,
        0.25 * dist.cell_size,
    ))
}
