use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::contour::Contour;
use super::rays::locate_on_ring;
use crate::error::{LensError, Result};
use crate::geometry::Point;
use crate::partition::{EdgeLabel, PartitionGraph};

/// All closed loops of one level across the footprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ribbon {
    pub d_w: f64,
    pub loops: Vec<Vec<Point>>,
    /// Largest distance between joined run ends.
    #[serde(default)]
    pub max_gap: f64,
}

fn cut_at(graph: &PartitionGraph, node: usize, p: Point) -> Option<usize> {
    let n = graph.nodes.get(node)?;
    let (e, _) = locate_on_ring(&n.polygon, p);
    match n.edge_labels.get(e)? {
        EdgeLabel::Cut(c) => Some(*c),
        EdgeLabel::Facade(_) => None,
    }
}

/// Joins node-local runs into closed footprint-wide loops, level by level.
///
/// Run ends are paired with run starts on the same cutline in another node
/// by nearest neighbour. Returned ribbons are ordered by increasing distance.
pub fn stitch(
    graph: &PartitionGraph,
    contours: &[Contour],
    eps_stitch: f64,
) -> Result<Vec<Ribbon>> {
    let mut by_level: BTreeMap<u64, Vec<&Contour>> = BTreeMap::new();
    for c in contours {
        if !(c.d_w > 0.0) {
            return Err(LensError::InvalidInput(format!(
                "contour with non-positive level {}",
                c.d_w
            )));
        }
        by_level.entry(c.d_w.to_bits()).or_default().push(c);
    }
    by_level
        .values()
        .map(|cs| stitch_level(graph, cs, eps_stitch))
        .collect()
}

fn stitch_level(graph: &PartitionGraph, cs: &[&Contour], eps: f64) -> Result<Ribbon> {
    let d_w = cs[0].d_w;
    let mut loops: Vec<Vec<Point>> = Vec::new();
    let open: Vec<&Contour> = cs
        .iter()
        .copied()
        .filter(|c| !c.closed && !c.points.is_empty())
        .collect();
    loops.extend(
        cs.iter()
            .filter(|c| c.closed && c.points.len() >= 3)
            .map(|c| c.points.clone()),
    );

    let stitch_err = |from: usize, to: usize, message: String| LensError::Stitch {
        from,
        to,
        d_w,
        message,
    };
    let mut ends = Vec::with_capacity(open.len());
    let mut starts = Vec::with_capacity(open.len());
    for c in &open {
        let (s, e) = (c.first().unwrap(), c.last().unwrap());
        let cs = cut_at(graph, c.node, s)
            .ok_or_else(|| stitch_err(c.node, c.node, "run starts off any cutline".into()))?;
        let ce = cut_at(graph, c.node, e)
            .ok_or_else(|| stitch_err(c.node, c.node, "run ends off any cutline".into()))?;
        starts.push(cs);
        ends.push(ce);
    }
    // Runs leaving one side of a cutline must all enter the other side.
    let mut leaving: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut entering: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (i, c) in open.iter().enumerate() {
        *leaving.entry((ends[i], c.node)).or_default() += 1;
        *entering.entry((starts[i], c.node)).or_default() += 1;
    }
    for cut in 0..graph.cutlines.len() {
        if let [a, b] = graph.cut_neighbours(cut)[..] {
            let count = |m: &BTreeMap<(usize, usize), usize>, n: usize| {
                m.get(&(cut, n)).copied().unwrap_or(0)
            };
            for (x, y) in [(a, b), (b, a)] {
                if count(&leaving, x) != count(&entering, y) {
                    return Err(stitch_err(
                        x,
                        y,
                        format!(
                            "{} runs leave across cutline {cut} but {} enter",
                            count(&leaving, x),
                            count(&entering, y)
                        ),
                    ));
                }
            }
        }
    }

    let mut next = vec![usize::MAX; open.len()];
    let mut taken = vec![false; open.len()];
    let mut max_gap: f64 = 0.0;
    for i in 0..open.len() {
        let e = open[i].last().unwrap();
        let best = (0..open.len())
            .filter(|&j| !taken[j] && starts[j] == ends[i] && open[j].node != open[i].node)
            .map(|j| (open[j].first().unwrap().dist(e), j))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let Some((gap, j)) = best else {
            return Err(stitch_err(
                open[i].node,
                open[i].node,
                format!("run end on cutline {} has no partner", ends[i]),
            ));
        };
        if gap > eps {
            return Err(stitch_err(
                open[i].node,
                open[j].node,
                format!("gap {gap:.3e} exceeds {eps:.3e}"),
            ));
        }
        max_gap = max_gap.max(gap);
        taken[j] = true;
        next[i] = j;
    }

    let mut used = vec![false; open.len()];
    for s in 0..open.len() {
        if used[s] {
            continue;
        }
        let mut ring: Vec<Point> = Vec::new();
        let mut i = s;
        while !used[i] {
            used[i] = true;
            for &p in &open[i].points {
                if ring.last().is_none_or(|q: &Point| q.dist(p) > 0.0) {
                    ring.push(p);
                }
            }
            i = next[i];
        }
        if i != s {
            return Err(stitch_err(
                open[s].node,
                open[i].node,
                "runs do not close into a loop".into(),
            ));
        }
        if ring.len() > 1 && ring[0].dist(*ring.last().unwrap()) == 0.0 {
            ring.pop();
        }
        loops.push(ring);
    }
    Ok(Ribbon {
        d_w,
        loops,
        max_gap,
    })
}
