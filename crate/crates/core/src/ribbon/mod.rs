//! Level-set ribbons and facade sectors built through the per-node disk maps,
//! stitched into one layout over the whole footprint.

mod contour;
mod rays;
mod sectors;
mod stitch;
mod svg;

pub use contour::{level_set, Contour};
pub use sectors::{boundary_theta, radial_curve, sector_curves, FacadeSpan, SectorCurve};
pub use stitch::{stitch, Ribbon};
pub use svg::layout_svg;

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LensError, Result};
use crate::geometry::{signed_area, DistanceField, FootprintPolygon, Point};
use crate::partition::PartitionGraph;
use crate::scmap::DiskMap;
use contour::contours_from_rays;
use rays::{boundary_crossing, bridge_gaps, trace_rays, Hit, Ray, Tracer};
use sectors::{node_wedges, Wedge};

pub const LAYOUT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutParams {
    /// Radii traced per node before refinement.
    pub rays: usize,
    /// Deepest level as a fraction of the smallest node-center distance.
    pub fill: f64,
    /// Allowed level error, in raster cells.
    pub eps_level_cells: f64,
    /// Allowed stitching gap, in raster cells.
    pub eps_stitch_cells: f64,
    /// Radial steps per sector curve.
    pub curve_samples: usize,
}

impl Default for LayoutParams {
    fn default() -> Self {
        LayoutParams {
            rays: 720,
            fill: 0.9,
            eps_level_cells: 0.5,
            eps_stitch_cells: 1.0,
            curve_samples: 64,
        }
    }
}

/// One (ribbon, facade) cell, possibly in several parts.
///
/// Each part is a ring whose first `outer_len[i]` points follow the outer
/// level and the rest return along the inner level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub ribbon: usize,
    pub facade: String,
    pub polygon: Vec<Vec<Point>>,
    #[serde(default)]
    pub outer_len: Vec<usize>,
}

impl Cell {
    pub fn area(&self) -> f64 {
        self.polygon.iter().map(|r| signed_area(r).abs()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeOutline {
    pub id: usize,
    pub polygon: Vec<Point>,
    pub center: Point,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LayoutStats {
    pub rays: Vec<usize>,
    /// Radii where some level had no bracketed root.
    pub skipped: usize,
    pub max_level_error: f64,
    pub max_stitch_gap: f64,
}

/// Ribbons crossed with facade sectors over one footprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RibbonLayout {
    pub schema_version: u32,
    pub footprint: Vec<Point>,
    /// Facade ids in boundary order.
    pub facades: Vec<String>,
    pub cell_size: f64,
    pub nodes: Vec<NodeOutline>,
    /// Index 0 is the outermost level.
    pub ribbons: Vec<Ribbon>,
    pub sectors: Vec<SectorCurve>,
    pub cells: Vec<Cell>,
    /// Region inside the deepest level.
    pub core: Vec<Vec<Point>>,
    pub stats: LayoutStats,
}

impl RibbonLayout {
    pub fn ribbon_count(&self) -> usize {
        self.ribbons.len()
    }

    pub fn cell(&self, ribbon: usize, facade: &str) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.ribbon == ribbon && c.facade == facade)
    }

    /// Distinct sector boundary curves, one per wedge start.
    pub fn sector_boundaries(&self) -> Vec<&[Point]> {
        self.sectors
            .iter()
            .filter_map(|s| s.curves.first().map(|c| c.as_slice()))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let layout: RibbonLayout = serde_json::from_str(s)?;
        if layout.schema_version != LAYOUT_SCHEMA_VERSION {
            return Err(LensError::InvalidInput(format!(
                "unsupported layout schema version {}",
                layout.schema_version
            )));
        }
        Ok(layout)
    }
}

/// Evenly spaced levels up to `fill` times the smallest distance at a node center.
pub fn level_schedule(
    maps: &[DiskMap],
    dist: &DistanceField,
    ribbon_count: usize,
    fill: f64,
) -> Result<Vec<f64>> {
    if ribbon_count == 0 {
        return Err(LensError::InvalidInput(
            "ribbon count must be at least 1".into(),
        ));
    }
    if !(fill > 0.0 && fill < 1.0) {
        return Err(LensError::InvalidInput(format!(
            "fill must lie in (0, 1), got {fill}"
        )));
    }
    let r_top = maps
        .iter()
        .map(|m| dist.exact(m.center()))
        .fold(f64::INFINITY, f64::min);
    if !(r_top > 0.0 && r_top.is_finite()) {
        return Err(LensError::Layout(
            "a subregion center lies on the footprint boundary".into(),
        ));
    }
    let step = fill * r_top / ribbon_count as f64;
    Ok((1..=ribbon_count).map(|l| l as f64 * step).collect())
}

struct NodeTrace {
    rays: Vec<Ray>,
    wedges: Vec<Wedge>,
}

/// Point of one ray on a level; `None` stands for the node boundary.
fn strip_point(ray: &Ray, level: Option<usize>) -> Point {
    match level.map(|l| ray.hits[l]) {
        Some(Hit::Root { point, .. }) => point,
        _ => ray.landing,
    }
}

fn strip_crossing(
    a: &Ray,
    b: &Ray,
    level: Option<usize>,
    levels: &[f64],
    ring: &[Point],
    dist: &DistanceField,
    step: f64,
) -> Option<Point> {
    let l = level?;
    match (a.hits[l], b.hits[l]) {
        (Hit::Root { .. }, Hit::Boundary) | (Hit::Boundary, Hit::Root { .. }) => {
            boundary_crossing(ring, dist, a.landing, b.landing, levels[l], step)
        }
        _ => None,
    }
}

fn push_distinct(out: &mut Vec<Point>, p: Point) {
    if out.last().is_none_or(|q| *q != p) {
        out.push(p);
    }
}

/// Parts of the band between `outer` and `inner` swept by consecutive rays.
#[allow(clippy::too_many_arguments)]
fn strip_parts(
    rays: &[&Ray],
    outer: Option<usize>,
    inner: usize,
    levels: &[f64],
    ring: &[Point],
    dist: &DistanceField,
    step: f64,
    min_area: f64,
) -> Vec<(Vec<Point>, usize)> {
    let m = rays.len();
    if m < 2 {
        return Vec::new();
    }
    let gaps: Vec<(Option<Point>, Option<Point>)> = (0..m - 1)
        .map(|k| {
            (
                strip_crossing(rays[k], rays[k + 1], outer, levels, ring, dist, step),
                strip_crossing(rays[k], rays[k + 1], Some(inner), levels, ring, dist, step),
            )
        })
        .collect();
    let flat = |k: usize| strip_point(rays[k], outer) == strip_point(rays[k], Some(inner));
    let empty = |k: usize| flat(k) && flat(k + 1) && gaps[k].0.is_none() && gaps[k].1.is_none();

    let mut parts = Vec::new();
    let mut k = 0;
    while k < m - 1 {
        if empty(k) {
            k += 1;
            continue;
        }
        let a = k;
        while k < m - 1 && !empty(k) {
            k += 1;
        }
        let b = k;
        let mut poly = Vec::new();
        for r in a..=b {
            push_distinct(&mut poly, strip_point(rays[r], outer));
            if r < b {
                if let Some(x) = gaps[r].0 {
                    push_distinct(&mut poly, x);
                }
            }
        }
        if let Some(l) = outer {
            poly = bridge_gaps(&poly, dist, ring, levels[l], 2.0 * dist.cell_size, false);
        }
        let outer_len = poly.len();
        let mut inner_chain = Vec::new();
        for r in (a..=b).rev() {
            push_distinct(&mut inner_chain, strip_point(rays[r], Some(inner)));
            if r > a {
                if let Some(x) = gaps[r - 1].1 {
                    push_distinct(&mut inner_chain, x);
                }
            }
        }
        let inner_chain = bridge_gaps(
            &inner_chain,
            dist,
            ring,
            levels[inner],
            2.0 * dist.cell_size,
            false,
        );
        poly.extend(inner_chain);
        if poly.len() >= 3 && signed_area(&poly).abs() > min_area {
            parts.push((poly, outer_len));
        }
    }
    parts
}

/// Rays of a node inside a wedge, lifted so angles increase.
fn wedge_rays<'a>(rays: &'a [Ray], w: &Wedge) -> Vec<&'a Ray> {
    let [t0, t1] = w.theta;
    let mut out: Vec<(f64, &Ray)> = Vec::new();
    for r in rays {
        for lift in [r.theta, r.theta + TAU] {
            if lift >= t0 && lift <= t1 {
                out.push((lift, r));
            }
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out.into_iter().map(|(_, r)| r).collect()
}

/// Builds the complete layout: levels, per-node tracing, stitching, sectors and cells.
pub fn assemble_layout(
    footprint: &FootprintPolygon,
    graph: &PartitionGraph,
    maps: &[DiskMap],
    dist: &DistanceField,
    ribbon_count: usize,
    params: &LayoutParams,
) -> Result<RibbonLayout> {
    if maps.len() != graph.nodes.len() {
        return Err(LensError::Layout(format!(
            "{} disk maps for {} subregions",
            maps.len(),
            graph.nodes.len()
        )));
    }
    if params.rays < 8 {
        return Err(LensError::InvalidInput(
            "at least 8 rays per node are required".into(),
        ));
    }
    let levels = level_schedule(maps, dist, ribbon_count, params.fill)?;
    let cs = dist.cell_size;
    let step = 0.25 * cs;

    let traces: Vec<NodeTrace> = graph
        .nodes
        .par_iter()
        .zip(maps.par_iter())
        .map(|(node, map)| {
            let wedges = node_wedges(map, node)?;
            let forced: Vec<f64> = wedges.iter().map(|w| w.theta[0]).collect();
            let tracer = Tracer::new(map, dist, &levels);
            let rays = trace_rays(&tracer, params.rays, &forced, cs);
            Ok(NodeTrace { rays, wedges })
        })
        .collect::<Result<_>>()?;

    let mut stats = LayoutStats {
        rays: traces.iter().map(|t| t.rays.len()).collect(),
        skipped: traces
            .iter()
            .flat_map(|t| &t.rays)
            .filter(|r| r.hits.contains(&Hit::Missing))
            .count(),
        ..LayoutStats::default()
    };
    if stats.skipped > 0 {
        crate::lens_warn!("{} radii without a bracketed root", stats.skipped);
    }

    let mut contours = Vec::new();
    for (li, &d_w) in levels.iter().enumerate() {
        for (k, t) in traces.iter().enumerate() {
            contours.extend(contours_from_rays(
                &t.rays,
                li,
                d_w,
                k,
                &maps[k].vertices,
                dist,
                step,
            ));
        }
        if !contours.iter().any(|c| c.d_w == d_w) {
            return Err(LensError::EmptyContour {
                d_w,
                max_radius: dist.max(),
            });
        }
    }
    let ribbons = stitch(graph, &contours, params.eps_stitch_cells * cs)?;
    stats.max_stitch_gap = ribbons.iter().map(|r| r.max_gap).fold(0.0, f64::max);
    stats.max_level_error = ribbons
        .iter()
        .flat_map(|r| {
            r.loops
                .iter()
                .flatten()
                .map(move |p| (dist.exact(*p) - r.d_w).abs())
        })
        .fold(0.0, f64::max);
    if stats.max_level_error > params.eps_level_cells * cs {
        return Err(LensError::Layout(format!(
            "level error {:.3e} exceeds {:.3e}",
            stats.max_level_error,
            params.eps_level_cells * cs
        )));
    }

    let mut sectors = Vec::new();
    for (k, t) in traces.iter().enumerate() {
        let spans: Vec<FacadeSpan> = t
            .wedges
            .iter()
            .map(|w| FacadeSpan {
                facade: w.facade.clone(),
                from: w.from,
                to: w.to,
            })
            .collect();
        for mut s in sector_curves(&maps[k], &spans, params.curve_samples)? {
            s.node = k;
            sectors.push(s);
        }
    }

    let facades: Vec<String> = footprint.facades().into_iter().map(|f| f.id).collect();
    let min_area = 1e-12 * footprint.diameter().powi(2);
    let mut cells = Vec::with_capacity(ribbon_count * facades.len());
    for r in 0..ribbon_count {
        let outer = r.checked_sub(1);
        for f in &facades {
            let mut polygon = Vec::new();
            let mut outer_len = Vec::new();
            for (k, t) in traces.iter().enumerate() {
                for w in t.wedges.iter().filter(|w| &w.facade == f) {
                    let rays = wedge_rays(&t.rays, w);
                    for (ring, n) in strip_parts(
                        &rays,
                        outer,
                        r,
                        &levels,
                        &maps[k].vertices,
                        dist,
                        step,
                        min_area,
                    ) {
                        polygon.push(ring);
                        outer_len.push(n);
                    }
                }
            }
            if polygon.is_empty() {
                return Err(LensError::EmptyCell {
                    ribbon: r,
                    facade: f.clone(),
                });
            }
            cells.push(Cell {
                ribbon: r,
                facade: f.clone(),
                polygon,
                outer_len,
            });
        }
    }

    let core = ribbons.last().map(|r| r.loops.clone()).unwrap_or_default();
    Ok(RibbonLayout {
        schema_version: LAYOUT_SCHEMA_VERSION,
        footprint: footprint.vertices().to_vec(),
        facades,
        cell_size: cs,
        nodes: graph
            .nodes
            .iter()
            .zip(maps)
            .map(|(n, m)| NodeOutline {
                id: n.id,
                polygon: n.polygon.clone(),
                center: m.center(),
            })
            .collect(),
        ribbons,
        sectors,
        cells,
        core,
        stats,
    })
}
