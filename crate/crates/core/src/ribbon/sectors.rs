use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::rays::{radial_images, radial_samples};
use crate::error::{LensError, Result};
use crate::geometry::{point_segment_distance, Point};
use crate::partition::{EdgeLabel, PartitionNode};
use crate::scmap::{pt, DiskMap};

/// One facade's share of a node boundary and the radial curves bounding it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorCurve {
    pub node: usize,
    pub facade: String,
    /// Boundary points where the wedge starts and ends (counter-clockwise).
    pub boundary: [Point; 2],
    /// Disk angles of the two boundary points.
    pub angles: [f64; 2],
    /// Images of the two radii, each from the node center out to the boundary.
    /// Empty when the facade owns the whole node.
    pub curves: Vec<Vec<Point>>,
}

/// A facade's stretch of a node boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct FacadeSpan {
    pub facade: String,
    pub from: Point,
    pub to: Point,
}

fn on_boundary(map: &DiskMap, w: Point) -> bool {
    let v = &map.vertices;
    let n = v.len();
    (0..n).any(|k| point_segment_distance(w, v[k], v[(k + 1) % n]) <= 1e-9 * map.diameter())
}

/// Disk angle in [0, 2π) of a boundary point, exact at vertices.
pub fn boundary_theta(map: &DiskMap, w: Point) -> Result<f64> {
    if !on_boundary(map, w) {
        return Err(LensError::InvalidInput(format!(
            "({}, {}) is not on the subregion boundary",
            w.x, w.y
        )));
    }
    if let Some(k) = map.vertices.iter().position(|&v| v == w) {
        return Ok(map.prevertices[k].rem_euclid(TAU));
    }
    map.boundary_angle(w)
}

/// Image of the radius at angle `theta`, from the center out to the boundary.
pub fn radial_curve(map: &DiskMap, theta: f64, samples: usize) -> Vec<Point> {
    radial_images(map, theta, &radial_samples(samples.max(2)))
        .into_iter()
        .map(|(_, w)| pt(w))
        .collect()
}

/// Sector curves for facade spans of one node, sampled with `samples` radii steps.
pub fn sector_curves(
    map: &DiskMap,
    spans: &[FacadeSpan],
    samples: usize,
) -> Result<Vec<SectorCurve>> {
    spans
        .iter()
        .map(|s| {
            let t0 = boundary_theta(map, s.from)?;
            let t1 = boundary_theta(map, s.to)?;
            let whole = s.from == s.to;
            let curves = if whole {
                Vec::new()
            } else {
                vec![
                    radial_curve(map, t0, samples),
                    radial_curve(map, t1, samples),
                ]
            };
            Ok(SectorCurve {
                node: 0,
                facade: s.facade.clone(),
                boundary: [s.from, s.to],
                angles: [t0, if whole { t0 + TAU } else { t1 }],
                curves,
            })
        })
        .collect()
}

/// Angular wedge of one facade inside one node.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Wedge {
    pub facade: String,
    pub from: Point,
    pub to: Point,
    /// Start angle in [0, 2π) and end angle in (start, start + 2π].
    pub theta: [f64; 2],
}

fn facade_before(labels: &[EdgeLabel], e: usize) -> Option<String> {
    let n = labels.len();
    (1..=n)
        .map(|s| &labels[(e + n - s) % n])
        .find_map(|l| l.facade().map(str::to_string))
}

fn facade_after(labels: &[EdgeLabel], e: usize) -> Option<String> {
    let n = labels.len();
    (1..=n)
        .map(|s| &labels[(e + s) % n])
        .find_map(|l| l.facade().map(str::to_string))
}

/// Splits a node boundary into facade wedges.
///
/// Facade edges keep their id. Each cutline edge is halved at its midpoint and
/// each half joins the nearest facade along the boundary on its side.
pub(crate) fn node_wedges(map: &DiskMap, node: &PartitionNode) -> Result<Vec<Wedge>> {
    let ring = &node.polygon;
    let labels = &node.edge_labels;
    let n = ring.len();
    // (start point, facade) of consecutive boundary pieces.
    let mut pieces: Vec<(Point, String)> = Vec::new();
    for e in 0..n {
        match &labels[e] {
            EdgeLabel::Facade(f) => pieces.push((ring[e], f.clone())),
            EdgeLabel::Cut(_) => {
                let before = facade_before(labels, e);
                let after = facade_after(labels, e);
                let (Some(b), Some(a)) = (before, after) else {
                    return Err(LensError::Layout(format!(
                        "node {} has no facade edge",
                        node.id
                    )));
                };
                pieces.push((ring[e], b));
                pieces.push((ring[e].lerp(ring[(e + 1) % n], 0.5), a));
            }
        }
    }
    let m = pieces.len();
    let breaks: Vec<usize> = (0..m)
        .filter(|&i| pieces[i].1 != pieces[(i + m - 1) % m].1)
        .collect();
    if breaks.is_empty() {
        let t = boundary_theta(map, pieces[0].0)?;
        return Ok(vec![Wedge {
            facade: pieces[0].1.clone(),
            from: pieces[0].0,
            to: pieces[0].0,
            theta: [t, t + TAU],
        }]);
    }
    let thetas: Vec<f64> = breaks
        .iter()
        .map(|&i| boundary_theta(map, pieces[i].0))
        .collect::<Result<_>>()?;
    let k = breaks.len();
    let mut wedges: Vec<Wedge> = (0..k)
        .map(|i| {
            let (a, b) = (breaks[i], breaks[(i + 1) % k]);
            let mut t1 = thetas[(i + 1) % k];
            if t1 <= thetas[i] {
                t1 += TAU;
            }
            Wedge {
                facade: pieces[a].1.clone(),
                from: pieces[a].0,
                to: pieces[b].0,
                theta: [thetas[i], t1],
            }
        })
        .collect();
    wedges.sort_by(|a, b| a.theta[0].total_cmp(&b.theta[0]));
    Ok(wedges)
}
