use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::geometry::{closest_on_segment, ring_contains, DistanceField, Point};
use crate::scmap::{cx, pt, DiskMap};

/// Radial samples per ray, clustered toward the circle.
pub(crate) const RADIAL_SAMPLES: usize = 48;
const MAX_ROUNDS: usize = 48;
const MAX_RAYS: usize = 200_000;

/// Where a level is met along one disk radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Hit {
    /// Outermost crossing of the level.
    Root { rho: f64, point: Point },
    /// The radius reaches the node boundary still deeper than the level.
    Boundary,
    /// The level is never reached, or bracketing failed.
    Missing,
}

impl Hit {
    pub fn point(&self) -> Option<Point> {
        match *self {
            Hit::Root { point, .. } => Some(point),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Ray {
    pub theta: f64,
    /// Image of e^{iθ} on the node boundary.
    pub landing: Point,
    pub hits: Vec<Hit>,
}

pub(crate) fn radial_samples(n: usize) -> Vec<f64> {
    (0..=n)
        .map(|j| {
            let s = 1.0 - j as f64 / n as f64;
            1.0 - s * s
        })
        .collect()
}

/// Images of `rho·e^{iθ}` along one radius, evaluated incrementally from the center.
pub(crate) fn radial_images(
    map: &DiskMap,
    theta: f64,
    rhos: &[f64],
) -> Vec<(Complex64, Complex64)> {
    let dir = Complex64::from_polar(1.0, theta);
    let mut out: Vec<(Complex64, Complex64)> = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        let z = dir * rho;
        let w = match out.last() {
            _ if rho >= 1.0 => cx(map.map_forward(dir)),
            Some(&(zp, wp)) => map.forward_from(zp, wp, z),
            None => cx(map.map_forward(z)),
        };
        out.push((z, w));
    }
    out
}

pub(crate) struct Tracer<'a> {
    pub map: &'a DiskMap,
    pub dist: &'a DistanceField,
    /// Increasing target distances.
    pub levels: &'a [f64],
    pub rhos: Vec<f64>,
}

impl<'a> Tracer<'a> {
    pub fn new(map: &'a DiskMap, dist: &'a DistanceField, levels: &'a [f64]) -> Self {
        Tracer {
            map,
            dist,
            levels,
            rhos: radial_samples(RADIAL_SAMPLES),
        }
    }

    pub fn trace(&self, theta: f64) -> Ray {
        let prof = radial_images(self.map, theta, &self.rhos);
        let d: Vec<f64> = prof.iter().map(|&(_, w)| self.dist.exact(pt(w))).collect();
        let last = prof.len() - 1;
        let tol = 1e-13 * self.map.diameter();
        let hits = self
            .levels
            .iter()
            .map(|&level| {
                if d[last] >= level {
                    return Hit::Boundary;
                }
                let Some(j) = (0..last).rev().find(|&j| d[j] > level) else {
                    return Hit::Missing;
                };
                if d[j + 1] == level {
                    return Hit::Root {
                        rho: self.rhos[j + 1],
                        point: pt(prof[j + 1].1),
                    };
                }
                self.refine(
                    theta,
                    &prof[j],
                    self.rhos[j],
                    self.rhos[j + 1],
                    d[j] - level,
                    d[j + 1] - level,
                    level,
                    tol,
                )
            })
            .collect();
        Ray {
            theta,
            landing: pt(prof[last].1),
            hits,
        }
    }

    /// Illinois iteration on g(ρ) = d(φ(ρe^{iθ})) − level, with g(a) > 0 > g(b).
    #[allow(clippy::too_many_arguments)]
    fn refine(
        &self,
        theta: f64,
        base: &(Complex64, Complex64),
        mut a: f64,
        mut b: f64,
        mut ga: f64,
        mut gb: f64,
        level: f64,
        tol: f64,
    ) -> Hit {
        let dir = Complex64::from_polar(1.0, theta);
        let eval = |rho: f64| {
            let w = self.map.forward_from(base.0, base.1, dir * rho);
            (w, self.dist.exact(pt(w)) - level)
        };
        let mut best = None;
        let mut side = 0i8;
        for _ in 0..100 {
            let rho = if (ga - gb).abs() > 0.0 {
                b - gb * (b - a) / (gb - ga)
            } else {
                0.5 * (a + b)
            };
            let rho = if rho > a && rho < b {
                rho
            } else {
                0.5 * (a + b)
            };
            let (w, g) = eval(rho);
            if !g.is_finite() {
                return Hit::Missing;
            }
            best = Some((rho, w));
            if g.abs() <= tol || b - a <= 1e-15 {
                break;
            }
            if g > 0.0 {
                a = rho;
                ga = g;
                if side == 1 {
                    gb *= 0.5;
                }
                side = 1;
            } else {
                b = rho;
                gb = g;
                if side == -1 {
                    ga *= 0.5;
                }
                side = -1;
            }
        }
        match best {
            Some((rho, w)) => Hit::Root { rho, point: pt(w) },
            None => Hit::Missing,
        }
    }
}

fn needs_split(a: &Ray, b: &Ray, spacing: f64) -> bool {
    a.hits.iter().zip(&b.hits).any(|(ha, hb)| match (ha, hb) {
        (Hit::Root { point: p, .. }, Hit::Root { point: q, .. }) => p.dist(*q) > spacing,
        (Hit::Root { point: p, .. }, Hit::Boundary) => {
            p.dist(b.landing) > spacing || a.landing.dist(b.landing) > spacing
        }
        (Hit::Boundary, Hit::Root { point: q, .. }) => {
            q.dist(a.landing) > spacing || a.landing.dist(b.landing) > spacing
        }
        _ => false,
    })
}

/// Rays of one node, sorted by angle in [0, 2π), refined until neighbouring
/// hits of every level are at most `spacing` apart.
pub(crate) fn trace_rays(
    tracer: &Tracer,
    initial: usize,
    forced: &[f64],
    spacing: f64,
) -> Vec<Ray> {
    let mut angles: Vec<f64> = (0..initial)
        .map(|i| TAU * i as f64 / initial as f64)
        .collect();
    angles.extend(forced.iter().map(|&t| t.rem_euclid(TAU)));
    angles.extend((0..tracer.map.len()).map(|k| tracer.map.prevertices[k].rem_euclid(TAU)));
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    let mut rays: Vec<Ray> = angles.par_iter().map(|&t| tracer.trace(t)).collect();
    for _ in 0..MAX_ROUNDS {
        let n = rays.len();
        let fresh: Vec<f64> = (0..n)
            .filter_map(|i| {
                let (a, b) = (&rays[i], &rays[(i + 1) % n]);
                let tb = if i + 1 == n { b.theta + TAU } else { b.theta };
                (tb - a.theta > 1e-12 && needs_split(a, b, spacing))
                    .then(|| (0.5 * (a.theta + tb)).rem_euclid(TAU))
            })
            .collect();
        if fresh.is_empty() {
            break;
        }
        if n + fresh.len() > MAX_RAYS {
            crate::lens_warn!("ray refinement stopped at {n} rays");
            break;
        }
        rays.extend(
            fresh
                .par_iter()
                .map(|&t| tracer.trace(t))
                .collect::<Vec<_>>(),
        );
        rays.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    }
    rays
}

/// Roots of d(p) = level along the segment, in a direction-independent parametrization.
pub(crate) fn segment_roots(
    dist: &DistanceField,
    p: Point,
    q: Point,
    level: f64,
    step: f64,
) -> Vec<Point> {
    let (a, b) = if (p.x, p.y) <= (q.x, q.y) {
        (p, q)
    } else {
        (q, p)
    };
    let len = a.dist(b);
    if len == 0.0 {
        return Vec::new();
    }
    let m = ((len / step).ceil() as usize).clamp(64, 8192);
    let h = |t: f64| dist.exact(a.lerp(b, t)) - level;
    let mut roots = Vec::new();
    let mut t0 = 0.0;
    let mut g0 = h(0.0);
    for i in 1..=m {
        let t1 = i as f64 / m as f64;
        let g1 = h(t1);
        if g0 == 0.0 {
            roots.push(a.lerp(b, t0));
        } else if g0 * g1 < 0.0 {
            roots.push(a.lerp(b, bisect(&h, t0, t1, g0)));
        }
        t0 = t1;
        g0 = g1;
    }
    if g0 == 0.0 {
        roots.push(b);
    }
    roots
}

fn bisect(h: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, ga: f64) -> f64 {
    let sa = ga.signum();
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let g = h(m);
        if g == 0.0 {
            return m;
        }
        if g.signum() == sa {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Edge index of the ring nearest to `p` and the position along it.
pub(crate) fn locate_on_ring(ring: &[Point], p: Point) -> (usize, f64) {
    let n = ring.len();
    let mut best = (f64::INFINITY, 0, 0.0);
    for k in 0..n {
        let (q, t) = closest_on_segment(p, ring[k], ring[(k + 1) % n]);
        let d = q.dist(p);
        if d < best.0 {
            best = (d, k, t);
        }
    }
    (best.1, best.2)
}

/// First point with d = level met walking counter-clockwise along the ring from `from` to `to`.
pub(crate) fn boundary_crossing(
    ring: &[Point],
    dist: &DistanceField,
    from: Point,
    to: Point,
    level: f64,
    step: f64,
) -> Option<Point> {
    let n = ring.len();
    let (mut e, ta) = locate_on_ring(ring, from);
    let (eb, tb) = locate_on_ring(ring, to);
    let mut t_lo = ta;
    for _ in 0..=n {
        let last = e == eb && (t_lo <= tb || n == 1);
        let t_hi = if last { tb } else { 1.0 };
        let (p, q) = (ring[e], ring[(e + 1) % n]);
        let len2 = (q - p).dot(q - p);
        let mut found: Vec<(f64, Point)> = segment_roots(dist, p, q, level, step)
            .into_iter()
            .map(|r| ((r - p).dot(q - p) / len2, r))
            .filter(|(t, _)| *t >= t_lo - 1e-12 && *t <= t_hi + 1e-12)
            .collect();
        found.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(&(_, r)) = found.first() {
            return Some(r);
        }
        if last {
            break;
        }
        e = (e + 1) % n;
        t_lo = 0.0;
    }
    None
}

/// Unit gradient of the distance at `p`, pointing away from the nearest boundary point.
fn gradient(dist: &DistanceField, p: Point) -> Option<(f64, Point)> {
    let (d, _, q) = dist.nearest(p);
    (d > 0.0).then(|| (d, (p - q) * (1.0 / d)))
}

fn project(dist: &DistanceField, mut p: Point, level: f64) -> Option<Point> {
    for _ in 0..4 {
        let (d, g) = gradient(dist, p)?;
        p = p + g * (level - d);
    }
    Some(p)
}

/// Follows d = level from `a` to `b` with the larger distances on the left
/// (`sign` = 1) or on the right (`sign` = −1).
fn walk(
    dist: &DistanceField,
    ring: &[Point],
    a: Point,
    b: Point,
    level: f64,
    step: f64,
    sign: f64,
) -> Option<Vec<Point>> {
    let budget = (3.0 * a.dist(b) / step).ceil() as usize + 8;
    let mut out = Vec::new();
    let mut p = a;
    for _ in 0..budget {
        let (_, g) = gradient(dist, p)?;
        let q = project(dist, p + Point::new(g.y, -g.x) * (sign * step), level)?;
        if q.dist(b) <= step {
            return Some(out);
        }
        if !ring_contains(ring, q) || (dist.exact(q) - level).abs() > 0.5 * step {
            return None;
        }
        out.push(q);
        p = q;
    }
    None
}

/// Fills gaps wider than `max_gap` between consecutive points on the level
/// by walking along the level curve inside `ring`.
pub(crate) fn bridge_gaps(
    points: &[Point],
    dist: &DistanceField,
    ring: &[Point],
    level: f64,
    max_gap: f64,
    closed: bool,
) -> Vec<Point> {
    let n = points.len();
    let on_level = |p: Point| (dist.exact(p) - level).abs() <= 1e-6 * dist.cell_size;
    let step = 0.25 * dist.cell_size;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (points[i], points[(i + 1) % n]);
        out.push(a);
        if (i + 1 == n && !closed) || a.dist(b) <= max_gap || !on_level(a) || !on_level(b) {
            continue;
        }
        let paths = [1.0, -1.0].map(|s| walk(dist, ring, a, b, level, step, s));
        if let Some(path) = paths.into_iter().flatten().min_by_key(|p| p.len()) {
            out.extend(path);
        }
    }
    out
}
