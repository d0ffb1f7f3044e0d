use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{SkeletonImage, N8};
use crate::error::{LensError, Result};
use crate::geometry::Point;

/// Tunables of signature extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignatureParams {
    /// Endpoints closer than this many cells to their junction are pruned as spurs.
    pub endpoint_threshold_cells: f64,
    /// Split degree-4+ junctions into trifurcations.
    pub split_high_degree: bool,
}

impl Default for SignatureParams {
    fn default() -> Self {
        SignatureParams {
            endpoint_threshold_cells: 3.0,
            split_high_degree: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Junction,
    Endpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub kind: NodeKind,
    pub point: Point,
    /// Skeletal cell indices forming this node (empty for split halves).
    pub cells: Vec<usize>,
}

/// A skeleton path between two graph nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub a: usize,
    pub b: usize,
    /// Interior cell indices ordered from `a` to `b`.
    pub cells: Vec<usize>,
    /// Zero-length link between the two halves of a split junction.
    pub virtual_link: bool,
}

/// Junction/endpoint graph traced along the skeleton.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SkeletonGraph {
    pub nodes: Vec<GraphNode>,
    pub branches: Vec<Branch>,
}

impl SkeletonGraph {
    pub fn degree(&self, node: usize) -> usize {
        self.branches
            .iter()
            .map(|b| (b.a == node) as usize + (b.b == node) as usize)
            .sum()
    }

    pub fn junction_ids(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&k| self.nodes[k].kind == NodeKind::Junction)
            .collect()
    }

    /// Indices of branches joining `a` and `b` in either direction.
    pub fn branches_between(&self, a: usize, b: usize) -> Vec<usize> {
        (0..self.branches.len())
            .filter(|&k| {
                let br = &self.branches[k];
                (br.a == a && br.b == b) || (br.a == b && br.b == a)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Junction {
    pub point: Point,
    pub degree: usize,
}

/// Junctions, endpoints and the per-cell neighbour-count image of a skeleton.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopoSignature {
    pub junctions: Vec<Junction>,
    pub endpoints: Vec<Point>,
    pub width: usize,
    pub height: usize,
    pub neighbor_counts: Vec<u8>,
    pub graph: SkeletonGraph,
}

impl TopoSignature {
    /// Two trifurcations joined by a branch, with four endpoints.
    pub fn is_double_y(&self) -> bool {
        self.junctions.len() == 2
            && self.endpoints.len() == 4
            && self.junctions.iter().all(|j| j.degree == 3)
    }
}

/// Traces the skeleton into a junction/endpoint graph, prunes short spurs and
/// splits high-degree junctions.
pub fn extract_signature(
    skeleton: &SkeletonImage,
    params: &SignatureParams,
) -> Result<TopoSignature> {
    if skeleton.count() == 0 {
        return Err(LensError::InvalidInput("skeleton has no cells".into()));
    }
    let counts = skeleton.neighbor_counts();
    let mut graph = trace_graph(skeleton, &counts);
    prune(
        &mut graph,
        params.endpoint_threshold_cells * skeleton.cell_size,
    );
    if params.split_high_degree {
        split_high_degree(&mut graph, skeleton);
    }

    let junctions = graph
        .junction_ids()
        .into_iter()
        .map(|k| Junction {
            point: graph.nodes[k].point,
            degree: graph.degree(k),
        })
        .collect();
    let endpoints = (0..graph.nodes.len())
        .filter(|&k| graph.nodes[k].kind == NodeKind::Endpoint)
        .map(|k| graph.nodes[k].point)
        .collect();
    Ok(TopoSignature {
        junctions,
        endpoints,
        width: skeleton.width,
        height: skeleton.height,
        neighbor_counts: counts,
        graph,
    })
}

fn neighbours(s: &SkeletonImage, k: usize) -> impl Iterator<Item = usize> + '_ {
    let (i, j) = ((k % s.width) as isize, (k / s.width) as isize);
    N8.iter().filter_map(move |(di, dj)| {
        let (a, b) = (i + di, j + dj);
        s.get(a, b).then(|| b as usize * s.width + a as usize)
    })
}

fn centroid(s: &SkeletonImage, cells: &[usize]) -> Point {
    let mut acc = Point::new(0.0, 0.0);
    for &c in cells {
        acc = acc + s.center_of_index(c);
    }
    acc * (1.0 / cells.len() as f64)
}

fn trace_graph(s: &SkeletonImage, counts: &[u8]) -> SkeletonGraph {
    let n = s.cells.len();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    let mut graph = SkeletonGraph::default();

    // Junction clusters.
    for k in 0..n {
        if !s.cells[k] || counts[k] < 3 || owner[k].is_some() {
            continue;
        }
        let id = graph.nodes.len();
        let mut stack = vec![k];
        let mut cells = Vec::new();
        owner[k] = Some(id);
        while let Some(c) = stack.pop() {
            cells.push(c);
            for m in neighbours(s, c) {
                if counts[m] >= 3 && owner[m].is_none() {
                    owner[m] = Some(id);
                    stack.push(m);
                }
            }
        }
        cells.sort_unstable();
        graph.nodes.push(GraphNode {
            kind: NodeKind::Junction,
            point: centroid(s, &cells),
            cells,
        });
    }
    // Endpoints, including isolated cells.
    for k in 0..n {
        if s.cells[k] && counts[k] <= 1 {
            owner[k] = Some(graph.nodes.len());
            graph.nodes.push(GraphNode {
                kind: NodeKind::Endpoint,
                point: s.center_of_index(k),
                cells: vec![k],
            });
        }
    }

    // Branch tracing.
    let mut visited = vec![false; n];
    let mut direct: BTreeSet<(usize, usize)> = BTreeSet::new();
    for id in 0..graph.nodes.len() {
        let node_cells = graph.nodes[id].cells.clone();
        for &c in &node_cells {
            let starts: Vec<usize> = neighbours(s, c).collect();
            for start in starts {
                if owner[start] == Some(id) {
                    continue;
                }
                if let Some(other) = owner[start] {
                    let key = (c.min(start), c.max(start));
                    if direct.insert(key) {
                        graph.branches.push(Branch {
                            a: id,
                            b: other,
                            cells: Vec::new(),
                            virtual_link: false,
                        });
                    }
                    continue;
                }
                if visited[start] {
                    continue;
                }
                let mut path = Vec::new();
                let (mut prev, mut cur) = (c, start);
                let end = loop {
                    if let Some(o) = owner[cur] {
                        break Some(o);
                    }
                    visited[cur] = true;
                    path.push(cur);
                    let next = neighbours(s, cur)
                        .filter(|&m| m != prev && !path.contains(&m))
                        .filter(|&m| owner[m] != Some(id) || path.len() > 1)
                        .find(|&m| !visited[m] || owner[m].is_some());
                    match next {
                        Some(m) => {
                            prev = cur;
                            cur = m;
                        }
                        None => break None,
                    }
                };
                if let Some(b) = end {
                    graph.branches.push(Branch {
                        a: id,
                        b,
                        cells: path,
                        virtual_link: false,
                    });
                }
            }
        }
    }
    graph
}

fn remove_nodes(graph: &mut SkeletonGraph, dead: &BTreeSet<usize>) {
    let mut remap = HashMap::new();
    let mut nodes = Vec::new();
    for (k, node) in graph.nodes.drain(..).enumerate() {
        if !dead.contains(&k) {
            remap.insert(k, nodes.len());
            nodes.push(node);
        }
    }
    graph.nodes = nodes;
    graph
        .branches
        .retain(|b| remap.contains_key(&b.a) && remap.contains_key(&b.b));
    for b in &mut graph.branches {
        b.a = remap[&b.a];
        b.b = remap[&b.b];
    }
}

fn prune(graph: &mut SkeletonGraph, threshold: f64) {
    loop {
        let mut changed = false;

        // Short spurs hanging off a junction.
        let mut dead = BTreeSet::new();
        let mut dead_branches = BTreeSet::new();
        for (bi, br) in graph.branches.iter().enumerate() {
            for (e, j) in [(br.a, br.b), (br.b, br.a)] {
                if graph.nodes[e].kind == NodeKind::Endpoint
                    && graph.nodes[j].kind == NodeKind::Junction
                    && graph.nodes[e].point.dist(graph.nodes[j].point) < threshold
                    && !dead.contains(&j)
                {
                    dead.insert(e);
                    dead_branches.insert(bi);
                }
            }
        }
        if !dead.is_empty() {
            let mut k = 0;
            graph.branches.retain(|_| {
                k += 1;
                !dead_branches.contains(&(k - 1))
            });
            remove_nodes(graph, &dead);
            changed = true;
        }

        // Junctions left with fewer than three branches.
        for id in 0..graph.nodes.len() {
            if graph.nodes[id].kind != NodeKind::Junction {
                continue;
            }
            let inc: Vec<usize> = (0..graph.branches.len())
                .filter(|&b| graph.branches[b].a == id || graph.branches[b].b == id)
                .collect();
            let deg = graph.degree(id);
            if deg == 1 {
                graph.nodes[id].kind = NodeKind::Endpoint;
                changed = true;
            } else if deg == 2 && inc.len() == 2 {
                let (b1, b2) = (inc[0], inc[1]);
                let mut p1 = graph.branches[b1].clone();
                let mut p2 = graph.branches[b2].clone();
                if p1.b != id {
                    std::mem::swap(&mut p1.a, &mut p1.b);
                    p1.cells.reverse();
                }
                if p2.a != id {
                    std::mem::swap(&mut p2.a, &mut p2.b);
                    p2.cells.reverse();
                }
                let mut cells = p1.cells;
                cells.extend(graph.nodes[id].cells.iter().copied());
                cells.extend(p2.cells);
                let merged = Branch {
                    a: p1.a,
                    b: p2.b,
                    cells,
                    virtual_link: false,
                };
                graph.branches.retain(|b| b.a != id && b.b != id);
                graph.branches.push(merged);
                let dead: BTreeSet<usize> = [id].into_iter().collect();
                remove_nodes(graph, &dead);
                changed = true;
                break;
            }
        }
        if !changed {
            break;
        }
    }
}

/// Direction from node `id` along branch `b`, looking a few cells ahead.
fn branch_direction(graph: &SkeletonGraph, s: &SkeletonImage, id: usize, b: usize) -> Point {
    let br = &graph.branches[b];
    let origin = graph.nodes[id].point;
    let other = if br.a == id { br.b } else { br.a };
    let ahead = 5usize;
    let target = if br.cells.is_empty() {
        graph.nodes[other].point
    } else if br.a == id {
        s.center_of_index(br.cells[(ahead - 1).min(br.cells.len() - 1)])
    } else {
        s.center_of_index(br.cells[br.cells.len().saturating_sub(ahead)])
    };
    let d = target - origin;
    let n = d.norm();
    if n > 0.0 {
        d * (1.0 / n)
    } else {
        Point::new(1.0, 0.0)
    }
}

fn split_high_degree(graph: &mut SkeletonGraph, s: &SkeletonImage) {
    loop {
        let Some(id) = graph
            .junction_ids()
            .into_iter()
            .find(|&k| graph.degree(k) >= 4)
        else {
            break;
        };
        let inc: Vec<usize> = (0..graph.branches.len())
            .filter(|&b| graph.branches[b].a == id || graph.branches[b].b == id)
            .collect();
        let dirs: Vec<Point> = inc
            .iter()
            .map(|&b| branch_direction(graph, s, id, b))
            .collect();

        // Principal axis of the branch directions; isotropic sets use the x axis.
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for d in &dirs {
            sxx += d.x * d.x;
            sxy += d.x * d.y;
            syy += d.y * d.y;
        }
        let tr = sxx + syy;
        let disc = ((sxx - syy).powi(2) + 4.0 * sxy * sxy).sqrt();
        let axis = if disc <= 1e-9 * tr {
            Point::new(1.0, 0.0)
        } else {
            let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
            Point::new(theta.cos(), theta.sin())
        };

        let mut order: Vec<usize> = (0..inc.len()).collect();
        order.sort_by(|&p, &q| {
            dirs[p]
                .dot(axis)
                .total_cmp(&dirs[q].dot(axis))
                .then(dirs[p].cross(axis).total_cmp(&dirs[q].cross(axis)))
        });
        let half = order.len() / 2;
        let center = graph.nodes[id].point;
        let offset = axis * (0.5 * s.cell_size);
        let new_id = graph.nodes.len();
        graph.nodes[id].point = center - offset;
        graph.nodes.push(GraphNode {
            kind: NodeKind::Junction,
            point: center + offset,
            cells: Vec::new(),
        });
        for &o in &order[half..] {
            let br = &mut graph.branches[inc[o]];
            if br.a == id {
                br.a = new_id;
            } else {
                br.b = new_id;
            }
        }
        graph.branches.push(Branch {
            a: id,
            b: new_id,
            cells: Vec::new(),
            virtual_link: true,
        });
    }
}
