use serde::{Deserialize, Serialize};

use crate::geometry::{closest_on_segment, Point};

/// Origin of a subregion edge: part of a named facade, or a cutline.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeLabel {
    Facade(String),
    Cut(usize),
}

impl EdgeLabel {
    pub fn facade(&self) -> Option<&str> {
        match self {
            EdgeLabel::Facade(id) => Some(id),
            EdgeLabel::Cut(_) => None,
        }
    }
}

/// Position of `p` on the ring: an existing vertex or a point inside an edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum RingSpot {
    Vertex(usize),
    Edge(usize),
}

pub(crate) fn locate(ring: &[Point], p: Point, tol: f64) -> Option<RingSpot> {
    let n = ring.len();
    if let Some(v) = (0..n).find(|&v| ring[v].dist(p) <= tol) {
        return Some(RingSpot::Vertex(v));
    }
    let mut best: Option<(f64, usize)> = None;
    for e in 0..n {
        let (q, _) = closest_on_segment(p, ring[e], ring[(e + 1) % n]);
        let d = q.dist(p);
        if d <= tol && best.is_none_or(|b| d < b.0) {
            best = Some((d, e));
        }
    }
    best.map(|(_, e)| RingSpot::Edge(e))
}

/// Inserts `p` into the ring (splitting its edge) and returns its vertex index.
fn insert<L: Clone>(
    ring: &mut Vec<Point>,
    labels: &mut Vec<L>,
    p: Point,
    tol: f64,
) -> Option<usize> {
    match locate(ring, p, tol)? {
        RingSpot::Vertex(v) => Some(v),
        RingSpot::Edge(e) => {
            let (q, _) = closest_on_segment(p, ring[e], ring[(e + 1) % ring.len()]);
            ring.insert(e + 1, q);
            let l = labels[e].clone();
            labels.insert(e + 1, l);
            Some(e + 1)
        }
    }
}

/// Splits a ring along the chord `p`–`q`, both on its boundary within `tol`.
///
/// Edge `i` of a ring runs from vertex `i` to `i + 1` and carries `labels[i]`.
/// The chord becomes an edge labelled `cut` in both halves. The first half
/// walks the boundary from `p` to `q`.
#[allow(clippy::type_complexity)]
pub fn split_ring<L: Clone>(
    ring: &[Point],
    labels: &[L],
    p: Point,
    q: Point,
    cut: L,
    tol: f64,
) -> Option<((Vec<Point>, Vec<L>), (Vec<Point>, Vec<L>))> {
    let mut r = ring.to_vec();
    let mut l = labels.to_vec();
    let ip = insert(&mut r, &mut l, p, tol)?;
    let q_at = match locate(&r, q, tol)? {
        RingSpot::Vertex(v) => v,
        RingSpot::Edge(_) => {
            let at = insert(&mut r, &mut l, q, tol)?;
            // Inserting before `ip` shifts it.
            let ip_now = if at <= ip { ip + 1 } else { ip };
            return finish(&r, &l, ip_now, at, cut);
        }
    };
    finish(&r, &l, ip, q_at, cut)
}

#[allow(clippy::type_complexity)]
fn finish<L: Clone>(
    r: &[Point],
    l: &[L],
    ip: usize,
    iq: usize,
    cut: L,
) -> Option<((Vec<Point>, Vec<L>), (Vec<Point>, Vec<L>))> {
    let n = r.len();
    if ip == iq || (ip + 1) % n == iq || (iq + 1) % n == ip {
        return None;
    }
    let walk = |from: usize, to: usize| {
        let mut pts = Vec::new();
        let mut labs = Vec::new();
        let mut k = from;
        loop {
            pts.push(r[k]);
            if k == to {
                break;
            }
            labs.push(l[k].clone());
            k = (k + 1) % n;
        }
        labs.push(cut.clone());
        (pts, labs)
    };
    Some((walk(ip, iq), walk(iq, ip)))
}
