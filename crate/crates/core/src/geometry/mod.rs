//! Planar polygon model, rasterization and exact distance fields.

pub(crate) mod distance;
mod raster;

pub use distance::{distance_field, DistanceField};
pub use raster::{rasterize, rasterize_with_cell_size, RasterGrid};

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{LensError, Result};

/// A point in world space (meters unless stated otherwise).
///
/// Serialized as a two-element array `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Point { x: v[0], y: v[1] }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        self + (o - self) * t
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// Closest point on segment `a..b` to `p`, with the segment parameter in `[0, 1]`.
pub fn closest_on_segment(p: Point, a: Point, b: Point) -> (Point, f64) {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return (a, 0.0);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    (a + ab * t, t)
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    closest_on_segment(p, a, b).0.dist(p)
}

/// Proper or touching intersection test for two closed segments.
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    fn orient(p: Point, q: Point, r: Point) -> f64 {
        (q - p).cross(r - p)
    }
    fn on_segment(p: Point, q: Point, r: Point) -> bool {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    }
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Interior-only crossing: the segments cross at a single point interior to both.
pub fn segments_cross_properly(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = (d - c).cross(a - c);
    let d2 = (d - c).cross(b - c);
    let d3 = (b - a).cross(c - a);
    let d4 = (b - a).cross(d - a);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Signed shoelace area of a ring (positive for counter-clockwise).
pub fn signed_area(ring: &[Point]) -> f64 {
    let n = ring.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        s += a.x * b.y - b.x * a.y;
    }
    0.5 * s
}

/// Even-odd point containment for a ring.
pub fn ring_contains(ring: &[Point], p: Point) -> bool {
    let n = ring.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let a = ring[i];
        let b = ring[j];
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Minimum distance from `p` to the closed ring boundary, with the index of the nearest edge.
pub fn ring_distance(ring: &[Point], p: Point) -> (f64, usize) {
    let n = ring.len();
    let mut best = (f64::INFINITY, 0);
    for i in 0..n {
        let d = point_segment_distance(p, ring[i], ring[(i + 1) % n]);
        if d < best.0 {
            best = (d, i);
        }
    }
    best
}

pub fn ring_centroid(ring: &[Point]) -> Point {
    let n = ring.len();
    let mut a = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..n {
        let p = ring[i];
        let q = ring[(i + 1) % n];
        let c = p.x * q.y - q.x * p.y;
        a += c;
        cx += (p.x + q.x) * c;
        cy += (p.y + q.y) * c;
    }
    a *= 0.5;
    Point::new(cx / (6.0 * a), cy / (6.0 * a))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min: Point,
    pub max: Point,
}

impl BBox {
    pub fn of(points: &[Point]) -> BBox {
        let mut min = Point::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        BBox { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }
}

/// Whether a ring is simple: no two non-adjacent edges touch and adjacent
/// edges only share their common vertex.
pub fn ring_is_simple(ring: &[Point]) -> bool {
    let n = ring.len();
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        for j in (i + 1)..n {
            let (c, d) = (ring[j], ring[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // Adjacent edges fold back onto each other when collinear and opposed.
                let (shared, u, v) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                let e1 = u - shared;
                let e2 = v - shared;
                if e1.cross(e2).abs() <= 1e-12 * e1.norm() * e2.norm() && e1.dot(e2) > 0.0 {
                    return false;
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LengthUnit {
    #[default]
    Meters,
    Unitless,
}

/// The building footprint: a simple counter-clockwise ring with one facade id per edge.
///
/// Edge `i` runs from `vertices[i]` to `vertices[(i + 1) % n]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FootprintPolygon {
    vertices: Vec<Point>,
    facade_ids: Vec<String>,
    #[serde(default)]
    units: LengthUnit,
}

/// A maximal run of consecutive edges sharing one facade id.
#[derive(Debug, Clone, PartialEq)]
pub struct Facade {
    pub id: String,
    /// First edge of the run.
    pub first_edge: usize,
    /// Number of edges in the run.
    pub edge_count: usize,
}

impl FootprintPolygon {
    /// Builds a footprint with one facade per edge (`f0`, `f1`, ...).
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        let n = vertices.len();
        let ids = (0..n).map(|i| format!("f{i}")).collect();
        Self::with_facades(vertices, ids)
    }

    /// Builds and validates a footprint. A repeated closing vertex is dropped,
    /// clockwise input is reoriented (facade ids follow their edges).
    pub fn with_facades(mut vertices: Vec<Point>, mut facade_ids: Vec<String>) -> Result<Self> {
        if vertices.len() >= 2 && vertices.first() == vertices.last() {
            vertices.pop();
            if facade_ids.len() == vertices.len() + 1 {
                facade_ids.pop();
            }
        }
        if facade_ids.len() != vertices.len() {
            return Err(LensError::InvalidInput(format!(
                "{} facade ids for {} edges",
                facade_ids.len(),
                vertices.len()
            )));
        }
        // Drop consecutive duplicate vertices together with their zero-length edges.
        let mut i = 0;
        while vertices.len() > 1 && i < vertices.len() {
            let j = (i + 1) % vertices.len();
            if vertices[i] == vertices[j] {
                vertices.remove(j);
                facade_ids.remove(i);
            } else {
                i += 1;
            }
        }
        if vertices.len() < 3 {
            return Err(LensError::InvalidInput(
                "polygon needs at least 3 distinct vertices".into(),
            ));
        }
        if vertices
            .iter()
            .any(|p| !p.x.is_finite() || !p.y.is_finite())
        {
            return Err(LensError::InvalidInput("non-finite coordinate".into()));
        }
        let bb = BBox::of(&vertices);
        let scale = bb.width().max(bb.height());
        let area = signed_area(&vertices);
        if scale == 0.0 || area.abs() <= 1e-12 * scale * scale {
            return Err(LensError::InvalidInput(
                "degenerate polygon (zero area)".into(),
            ));
        }
        if area < 0.0 {
            let n = vertices.len();
            vertices.reverse();
            let old = facade_ids.clone();
            for j in 0..n {
                facade_ids[j] = old[(2 * n - 2 - j) % n].clone();
            }
        }
        if !ring_is_simple(&vertices) {
            return Err(LensError::InvalidInput("polygon is not simple".into()));
        }
        let poly = FootprintPolygon {
            vertices,
            facade_ids,
            units: LengthUnit::Meters,
        };
        poly.check_facade_runs()?;
        Ok(poly)
    }

    pub fn with_units(mut self, units: LengthUnit) -> Self {
        self.units = units;
        self
    }

    fn check_facade_runs(&self) -> Result<()> {
        let facades = self.facades();
        for (i, a) in facades.iter().enumerate() {
            if facades[i + 1..].iter().any(|b| b.id == a.id) {
                return Err(LensError::InvalidInput(format!(
                    "facade '{}' covers non-contiguous edges",
                    a.id
                )));
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn facade_ids(&self) -> &[String] {
        &self.facade_ids
    }

    pub fn units(&self) -> &LengthUnit {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge(&self, i: usize) -> (Point, Point) {
        let n = self.vertices.len();
        (self.vertices[i % n], self.vertices[(i + 1) % n])
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn centroid(&self) -> Point {
        ring_centroid(&self.vertices)
    }

    pub fn bbox(&self) -> BBox {
        BBox::of(&self.vertices)
    }

    /// Largest vertex-to-vertex distance.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                d = d.max(a.dist(*b));
            }
        }
        d
    }

    pub fn contains(&self, p: Point) -> bool {
        ring_contains(&self.vertices, p)
    }

    /// Exact Euclidean distance from `p` to the boundary polyline.
    pub fn distance_to_boundary(&self, p: Point) -> f64 {
        ring_distance(&self.vertices, p).0
    }

    /// Facade runs in boundary order. A run may wrap past the last edge.
    pub fn facades(&self) -> Vec<Facade> {
        let n = self.vertices.len();
        let ids = &self.facade_ids;
        // Start at an edge that begins a run, so wrapping runs stay whole.
        let start = (0..n).find(|&i| ids[i] != ids[(i + n - 1) % n]);
        let Some(start) = start else {
            return vec![Facade {
                id: ids[0].clone(),
                first_edge: 0,
                edge_count: n,
            }];
        };
        let mut out: Vec<Facade> = Vec::new();
        for k in 0..n {
            let e = (start + k) % n;
            match out.last_mut() {
                Some(f) if f.id == ids[e] => f.edge_count += 1,
                _ => out.push(Facade {
                    id: ids[e].clone(),
                    first_edge: e,
                    edge_count: 1,
                }),
            }
        }
        out.sort_by_key(|f| f.first_edge);
        out
    }

    /// Vertices where the facade id changes, as vertex indices in ring order.
    pub fn facade_breaks(&self) -> Vec<usize> {
        let n = self.vertices.len();
        (0..n)
            .filter(|&v| self.facade_ids[(v + n - 1) % n] != self.facade_ids[v])
            .collect()
    }
}
