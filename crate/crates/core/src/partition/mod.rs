//! Skeleton-guided decomposition of a footprint into near-parallelogram
//! subregions joined by cutlines.

mod export;
mod split;

pub use export::{to_dot, to_geojson};
pub use split::{split_ring, EdgeLabel};

use serde::{Deserialize, Serialize};

use crate::error::{LensError, Result};
use crate::geometry::{
    closest_on_segment, distance::nearest_on_ring, point_segment_distance,
    rasterize_with_cell_size, ring_contains, segments_cross_properly, signed_area, BBox,
    DistanceField, FootprintPolygon, Point,
};
use crate::skeleton::{
    extract_signature, skeletonize_polygon, Junction, NodeKind, SignatureParams, SkeletonImage,
    TopoSignature,
};

/// Two nearest sides must agree in distance within this many cells.
const TANGENCY_SLACK_CELLS: f64 = 1.5;
/// Minimum angle subtended at the cutpoint by the two tangency points.
const MIN_OPENING_DEG: f64 = 135.0;
/// Radii within this many cells of the minimum are treated as equal.
const RADIUS_TIE_CELLS: f64 = 0.25;
/// Tangency points this close to a vertex snap onto it.
const SNAP_CELLS: f64 = 1.5;
const MAX_CUTS: usize = 64;

/// A chord through a minimal inscribed circle on the skeleton.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cutline {
    pub cutpoint: Point,
    pub endpoints: [Point; 2],
    pub radius: f64,
    /// Skeletal cell centers of the junction-to-junction segment searched.
    #[serde(skip)]
    pub segment: Vec<Point>,
    /// Boundary ring of the region this cutline splits.
    #[serde(skip)]
    pub region: Vec<Point>,
}

impl Cutline {
    pub fn length(&self) -> f64 {
        self.endpoints[0].dist(self.endpoints[1])
    }

    pub fn midpoint(&self) -> Point {
        self.endpoints[0].lerp(self.endpoints[1], 0.5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionParams {
    /// Cells along the longest side of the footprint bounding box.
    pub resolution: usize,
    pub signature: SignatureParams,
}

impl Default for PartitionParams {
    fn default() -> Self {
        PartitionParams {
            resolution: 512,
            signature: SignatureParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionNode {
    pub id: usize,
    pub polygon: Vec<Point>,
    pub edge_labels: Vec<EdgeLabel>,
    pub area: f64,
    pub junctions: Vec<Junction>,
    pub endpoints: Vec<Point>,
    /// Whether the node shows the two-trifurcation parallelogram signature.
    pub double_y: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionEdge {
    pub from: usize,
    pub to: usize,
    pub cutline: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionGraph {
    pub nodes: Vec<PartitionNode>,
    pub edges: Vec<PartitionEdge>,
    pub cutlines: Vec<Cutline>,
}

impl PartitionGraph {
    /// Kahn order, smallest ready id first.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        topo_sort(self.nodes.len(), &self.edges)
            .ok_or_else(|| LensError::Partition("graph has a cycle".into()))
    }

    /// Nodes on either side of a cutline.
    pub fn cut_neighbours(&self, cut: usize) -> Vec<usize> {
        self.nodes
            .iter()
            .filter(|n| n.edge_labels.contains(&EdgeLabel::Cut(cut)))
            .map(|n| n.id)
            .collect()
    }
}

fn topo_sort(n: usize, edges: &[PartitionEdge]) -> Option<Vec<usize>> {
    let mut indeg = vec![0usize; n];
    for e in edges {
        indeg[e.to] += 1;
    }
    let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&k| indeg[k] == 0).collect();
    let mut out = Vec::with_capacity(n);
    while let Some(&k) = ready.iter().next() {
        ready.remove(&k);
        out.push(k);
        for e in edges.iter().filter(|e| e.from == k) {
            indeg[e.to] -= 1;
            if indeg[e.to] == 0 {
                ready.insert(e.to);
            }
        }
    }
    (out.len() == n).then_some(out)
}

/// Removes cycles by repeatedly dropping the cycle edge whose cutline has the
/// largest inscribed radius.
pub(crate) fn break_cycles(n: usize, edges: &mut Vec<PartitionEdge>, cutlines: &[Cutline]) {
    while topo_sort(n, edges).is_none() {
        let Some(cycle) = find_cycle(n, edges) else {
            break;
        };
        let worst = cycle
            .into_iter()
            .max_by(|&a, &b| {
                cutlines[edges[a].cutline]
                    .radius
                    .total_cmp(&cutlines[edges[b].cutline].radius)
                    .then(b.cmp(&a))
            })
            .unwrap();
        crate::lens_warn!(
            "dropping cycle edge {} -> {}",
            edges[worst].from,
            edges[worst].to
        );
        edges.remove(worst);
    }
}

/// Edge indices of some directed cycle.
fn find_cycle(n: usize, edges: &[PartitionEdge]) -> Option<Vec<usize>> {
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; n];
    let mut via: Vec<Option<usize>> = vec![None; n];
    fn dfs(
        u: usize,
        edges: &[PartitionEdge],
        state: &mut [u8],
        via: &mut [Option<usize>],
    ) -> Option<Vec<usize>> {
        state[u] = 1;
        for (ei, e) in edges.iter().enumerate().filter(|(_, e)| e.from == u) {
            if state[e.to] == 1 {
                let mut cyc = vec![ei];
                let mut cur = u;
                while cur != e.to {
                    let back = via[cur].unwrap();
                    cyc.push(back);
                    cur = edges[back].from;
                }
                return Some(cyc);
            }
            if state[e.to] == 0 {
                via[e.to] = Some(ei);
                if let Some(c) = dfs(e.to, edges, state, via) {
                    return Some(c);
                }
            }
        }
        state[u] = 2;
        None
    }
    (0..n).find_map(|s| {
        if state[s] == 0 {
            dfs(s, edges, &mut state, &mut via)
        } else {
            None
        }
    })
}

struct Analysis {
    skeleton: SkeletonImage,
    signature: TopoSignature,
}

fn analyze(ring: &[Point], cell: f64, anchor: Point, params: &SignatureParams) -> Result<Analysis> {
    let grid = rasterize_with_cell_size(ring, cell, anchor)?;
    let skeleton = skeletonize_polygon(&grid, ring)?;
    let signature = extract_signature(&skeleton, params)?;
    Ok(Analysis {
        skeleton,
        signature,
    })
}

fn edges_adjacent(n: usize, a: usize, b: usize) -> bool {
    a == b || (a + 1) % n == b || (b + 1) % n == a
}

/// Nearest edge, and nearest edge not adjacent to it, with tangency points.
fn two_sides(ring: &[Point], c: Point) -> Option<((f64, usize, Point), (f64, usize, Point))> {
    let n = ring.len();
    let first = nearest_on_ring(ring, c);
    let mut second: Option<(f64, usize, Point)> = None;
    for e in 0..n {
        if edges_adjacent(n, e, first.1) {
            continue;
        }
        let (q, _) = closest_on_segment(c, ring[e], ring[(e + 1) % n]);
        let d = q.dist(c);
        if second.is_none_or(|s| d < s.0) {
            second = Some((d, e, q));
        }
    }
    second.map(|s| (first, s))
}

/// Snaps tangency points to nearby vertices; a snapped end re-projects the other onto its edge.
fn snap_chord(
    ring: &[Point],
    a: (usize, Point),
    b: (usize, Point),
    tol: f64,
) -> Option<[Point; 2]> {
    let n = ring.len();
    let snap = |(e, p): (usize, Point)| -> Option<usize> {
        let (v0, v1) = (e, (e + 1) % n);
        let (d0, d1) = (ring[v0].dist(p), ring[v1].dist(p));
        if d0.min(d1) > tol {
            None
        } else if d0 <= d1 {
            Some(v0)
        } else {
            Some(v1)
        }
    };
    let project = |v: Point, e: usize| closest_on_segment(v, ring[e], ring[(e + 1) % n]).0;
    let (sa, sb) = (snap(a), snap(b));
    let (pa, pb) = match (sa, sb) {
        (Some(u), Some(v)) => {
            if u == v || (u + 1) % n == v || (v + 1) % n == u {
                return None;
            }
            (ring[u], ring[v])
        }
        (Some(u), None) => (ring[u], project(ring[u], b.0)),
        (None, Some(v)) => (project(ring[v], a.0), ring[v]),
        (None, None) => (a.1, b.1),
    };
    Some([pa, pb])
}

/// Edges touched by either end of the chord are skipped.
fn chord_is_interior(ring: &[Point], a: Point, b: Point, tol: f64) -> bool {
    if a.dist(b) <= 0.0 || !ring_contains(ring, a.lerp(b, 0.5)) {
        return false;
    }
    let n = ring.len();
    (0..n).all(|e| {
        let (p, q) = (ring[e], ring[(e + 1) % n]);
        point_segment_distance(a, p, q) <= tol
            || point_segment_distance(b, p, q) <= tol
            || !segments_cross_properly(a, b, p, q)
    })
}

/// Cutline candidates, one per junction-to-junction skeleton branch.
fn candidates(
    ring: &[Point],
    a: &Analysis,
    radius_at: &dyn Fn(Point) -> f64,
) -> Result<Vec<Cutline>> {
    let sk = &a.skeleton;
    let graph = &a.signature.graph;
    let cs = sk.cell_size;
    let mut out = Vec::new();
    let mut any_pair = false;
    for br in &graph.branches {
        if br.virtual_link || br.a == br.b {
            continue;
        }
        if graph.nodes[br.a].kind != NodeKind::Junction
            || graph.nodes[br.b].kind != NodeKind::Junction
        {
            continue;
        }
        any_pair = true;
        let segment: Vec<Point> = br.cells.iter().map(|&k| sk.center_of_index(k)).collect();
        let mut valid: Vec<(usize, f64, (usize, Point), (usize, Point))> = Vec::new();
        for (idx, &c) in segment.iter().enumerate() {
            let Some((s1, s2)) = two_sides(ring, c) else {
                continue;
            };
            if s2.0 - s1.0 > TANGENCY_SLACK_CELLS * cs {
                continue;
            }
            let (u, v) = (s1.2 - c, s2.2 - c);
            let cos = u.dot(v) / (u.norm() * v.norm()).max(f64::MIN_POSITIVE);
            if cos.clamp(-1.0, 1.0).acos().to_degrees() < MIN_OPENING_DEG {
                continue;
            }
            valid.push((idx, 0.5 * (s1.0 + s2.0), (s1.1, s1.2), (s2.1, s2.2)));
        }
        if valid.is_empty() {
            continue;
        }
        // Half-widths, unlike cell-center radii, do not wobble with the lattice.
        let rmin = valid.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
        let (ja, jb) = (graph.nodes[br.a].point, graph.nodes[br.b].point);
        let target = if radius_at(jb) > radius_at(ja) {
            jb
        } else {
            ja
        };
        let pick = valid
            .iter()
            .filter(|v| v.1 <= rmin + RADIUS_TIE_CELLS * cs)
            .min_by(|x, y| {
                segment[x.0]
                    .dist(target)
                    .total_cmp(&segment[y.0].dist(target))
                    .then(x.0.cmp(&y.0))
            })
            .unwrap();
        let Some(endpoints) = snap_chord(ring, pick.2, pick.3, SNAP_CELLS * cs) else {
            continue;
        };
        if !chord_is_interior(ring, endpoints[0], endpoints[1], 1e-9 * cs) {
            continue;
        }
        out.push(Cutline {
            cutpoint: segment[pick.0],
            endpoints,
            radius: radius_at(segment[pick.0]),
            segment,
            region: ring.to_vec(),
        });
    }
    if !any_pair {
        return Err(LensError::Topology(format!(
            "{} junctions but no skeletal path joins any two",
            a.signature.junctions.len()
        )));
    }
    Ok(out)
}

/// Recursive cutline search: cut the region at the candidate that leaves the
/// most finished pieces (at most two junctions), then recurse into both halves.
/// Cutlines are returned in application order.
pub fn compute_cutlines(
    polygon: &FootprintPolygon,
    skeleton: &SkeletonImage,
    signature: &TopoSignature,
    dist: &DistanceField,
) -> Result<Vec<Cutline>> {
    compute_cutlines_with(
        polygon,
        skeleton,
        signature,
        dist,
        &SignatureParams::default(),
    )
}

pub fn compute_cutlines_with(
    polygon: &FootprintPolygon,
    skeleton: &SkeletonImage,
    signature: &TopoSignature,
    dist: &DistanceField,
    params: &SignatureParams,
) -> Result<Vec<Cutline>> {
    if signature.junctions.len() < 2 {
        return Ok(Vec::new());
    }
    let cell = skeleton.cell_size;
    let anchor = skeleton.origin;
    let tol = 1e-9 * polygon.diameter();
    let mut out: Vec<Cutline> = Vec::new();
    let top = Analysis {
        skeleton: skeleton.clone(),
        signature: signature.clone(),
    };
    let mut stack: Vec<(Vec<Point>, Analysis, bool)> =
        vec![(polygon.vertices().to_vec(), top, true)];
    while let Some((ring, an, is_top)) = stack.pop() {
        if an.signature.junctions.len() <= 2 {
            continue;
        }
        if out.len() >= MAX_CUTS {
            return Err(LensError::Partition(format!(
                "more than {MAX_CUTS} cutlines needed"
            )));
        }
        let local = |p: Point| nearest_on_ring(&ring, p).0;
        let global = |p: Point| dist.exact(p);
        let radius_at: &dyn Fn(Point) -> f64 = if is_top { &global } else { &local };
        let cands = candidates(&ring, &an, radius_at)?;
        let labels = vec![(); ring.len()];
        let mut best: Option<((usize, f64, usize), Cutline, Vec<(Vec<Point>, Analysis)>)> = None;
        for (ci, c) in cands.into_iter().enumerate() {
            let Some(((r1, _), (r2, _))) =
                split_ring(&ring, &labels, c.endpoints[0], c.endpoints[1], (), tol)
            else {
                continue;
            };
            let halves = vec![
                (r1.clone(), analyze(&r1, cell, anchor, params)?),
                (r2.clone(), analyze(&r2, cell, anchor, params)?),
            ];
            let finished = halves
                .iter()
                .filter(|h| h.1.signature.junctions.len() <= 2)
                .count();
            let score = (usize::MAX - finished, c.radius, ci);
            let better = match &best {
                None => true,
                Some((s, _, _)) => {
                    score.0 < s.0
                        || (score.0 == s.0 && (score.1 < s.1 || (score.1 == s.1 && score.2 < s.2)))
                }
            };
            if better {
                best = Some((score, c, halves));
            }
        }
        match best {
            Some((_, cut, halves)) => {
                out.push(cut);
                for (r, a) in halves.into_iter().rev() {
                    stack.push((r, a, false));
                }
            }
            None => crate::lens_warn!(
                "no valid cutline for a region with {} junctions",
                an.signature.junctions.len()
            ),
        }
    }
    Ok(out)
}

/// Splits the footprint along the cutlines and assembles the partition graph.
pub fn partition(polygon: &FootprintPolygon, cutlines: &[Cutline]) -> Result<PartitionGraph> {
    partition_with(polygon, cutlines, &PartitionParams::default())
}

pub fn partition_with(
    polygon: &FootprintPolygon,
    cutlines: &[Cutline],
    params: &PartitionParams,
) -> Result<PartitionGraph> {
    for i in 0..cutlines.len() {
        for j in i + 1..cutlines.len() {
            let (a, b) = (&cutlines[i], &cutlines[j]);
            if segments_cross_properly(
                a.endpoints[0],
                a.endpoints[1],
                b.endpoints[0],
                b.endpoints[1],
            ) {
                return Err(LensError::CrossingCutlines {
                    first: i,
                    second: j,
                });
            }
        }
    }
    let tol = 1e-9 * polygon.diameter();
    let mut pieces: Vec<(Vec<Point>, Vec<EdgeLabel>)> = vec![(
        polygon.vertices().to_vec(),
        polygon
            .facade_ids()
            .iter()
            .cloned()
            .map(EdgeLabel::Facade)
            .collect(),
    )];
    for (ci, cut) in cutlines.iter().enumerate() {
        let mid = cut.midpoint();
        let host = pieces.iter().position(|(ring, _)| {
            ring_contains(ring, mid)
                && split::locate(ring, cut.endpoints[0], tol).is_some()
                && split::locate(ring, cut.endpoints[1], tol).is_some()
        });
        let Some(h) = host else {
            return Err(LensError::Partition(format!(
                "cutline {ci} does not lie across any region"
            )));
        };
        let (ring, labels) = &pieces[h];
        let Some((a, b)) = split_ring(
            ring,
            labels,
            cut.endpoints[0],
            cut.endpoints[1],
            EdgeLabel::Cut(ci),
            tol,
        ) else {
            return Err(LensError::Partition(format!(
                "cutline {ci} degenerates on the region boundary"
            )));
        };
        pieces[h] = a;
        pieces.push(b);
    }

    let bb = polygon.bbox();
    let cell = bb.width().max(bb.height()) / params.resolution as f64;
    let mut nodes = Vec::with_capacity(pieces.len());
    for (id, (ring, labels)) in pieces.into_iter().enumerate() {
        let an = analyze(&ring, cell, bb.min, &params.signature)?;
        let double_y = an.signature.is_double_y();
        if !double_y {
            log::info!(
                "node {id}: {} junctions, {} endpoints (not a parallelogram signature)",
                an.signature.junctions.len(),
                an.signature.endpoints.len()
            );
        }
        nodes.push(PartitionNode {
            id,
            area: signed_area(&ring),
            polygon: ring,
            edge_labels: labels,
            junctions: an.signature.junctions,
            endpoints: an.signature.endpoints,
            double_y,
        });
    }

    let mut edges = Vec::new();
    for ci in 0..cutlines.len() {
        let side: Vec<usize> = nodes
            .iter()
            .filter(|n| n.edge_labels.contains(&EdgeLabel::Cut(ci)))
            .map(|n| n.id)
            .collect();
        if side.len() != 2 {
            return Err(LensError::Partition(format!(
                "cutline {ci} borders {} regions",
                side.len()
            )));
        }
        let (a, b) = (side[0], side[1]);
        let (from, to) = if nodes[b].area > nodes[a].area {
            (b, a)
        } else {
            (a, b)
        };
        edges.push(PartitionEdge {
            from,
            to,
            cutline: ci,
        });
    }
    break_cycles(nodes.len(), &mut edges, cutlines);
    Ok(PartitionGraph {
        nodes,
        edges,
        cutlines: cutlines.to_vec(),
    })
}

/// Bounding box of all node polygons.
pub fn graph_bbox(graph: &PartitionGraph) -> BBox {
    let all: Vec<Point> = graph
        .nodes
        .iter()
        .flat_map(|n| n.polygon.iter().copied())
        .collect();
    BBox::of(&all)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycles_are_broken_at_the_widest_cut() {
        let cut = |r: f64| Cutline {
            cutpoint: Point::new(0.0, 0.0),
            endpoints: [Point::new(0.0, 0.0), Point::new(1.0, 0.0)],
            radius: r,
            segment: vec![],
            region: vec![],
        };
        let cutlines = vec![cut(1.0), cut(3.0), cut(2.0)];
        let mut edges = vec![
            PartitionEdge {
                from: 0,
                to: 1,
                cutline: 0,
            },
            PartitionEdge {
                from: 1,
                to: 2,
                cutline: 1,
            },
            PartitionEdge {
                from: 2,
                to: 0,
                cutline: 2,
            },
        ];
        break_cycles(3, &mut edges, &cutlines);
        assert_eq!(edges.len(), 2);
        assert!(edges.iter().all(|e| e.cutline != 1));
        assert!(topo_sort(3, &edges).is_some());
    }

    #[test]
    fn crossing_cutlines_are_reported() {
        let sq = FootprintPolygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 2.0),
            Point::new(0.0, 2.0),
        ])
        .unwrap();
        let mk = |a: Point, b: Point| Cutline {
            cutpoint: a.lerp(b, 0.5),
            endpoints: [a, b],
            radius: 1.0,
            segment: vec![],
            region: vec![],
        };
        let cuts = vec![
            mk(Point::new(1.0, 0.0), Point::new(1.0, 2.0)),
            mk(Point::new(0.0, 1.0), Point::new(2.0, 1.0)),
        ];
        match partition(&sq, &cuts) {
            Err(LensError::CrossingCutlines { first, second }) => {
                assert_eq!((first, second), (0, 1))
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
