//! Schwarz–Christoffel maps from the unit disk onto polygons.
//!
//! φ(z) = A + C ∫₀^z Π (1 − ζ/z_k)^(α_k − 1) dζ with prevertices z_k on the
//! unit circle. The parameter problem is solved in a canonical frame (first
//! vertex at the origin, first edge along +x with unit length) so prevertices
//! depend only on shape.

mod integrate;
mod inverse;
pub mod quadrature;

use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LensError, Result};
use crate::geometry::{ring_centroid, ring_contains, ring_distance, signed_area, BBox, Point};

use integrate::{Integrand, Rules};

pub(crate) fn cx(p: Point) -> Complex64 {
    Complex64::new(p.x, p.y)
}

pub(crate) fn pt(z: Complex64) -> Point {
    Point::new(z.re, z.im)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScParams {
    pub quadrature_order: usize,
    /// Largest acceptable residual of the parameter problem.
    pub tolerance: f64,
    /// Prevertex gaps below this (radians) are reported as crowding.
    pub crowding_gap: f64,
    pub max_iterations: usize,
    pub max_vertices: usize,
}

impl Default for ScParams {
    fn default() -> Self {
        ScParams {
            quadrature_order: 8,
            tolerance: 1e-8,
            crowding_gap: 1e-12,
            max_iterations: 100,
            max_vertices: 32,
        }
    }
}

/// A solved disk map onto one polygon.
#[derive(Debug, Serialize, Deserialize)]
pub struct DiskMap {
    /// Target polygon after merging collinear vertices (counter-clockwise).
    pub vertices: Vec<Point>,
    /// Prevertex angles, strictly increasing, the last equal to 2π.
    pub prevertices: Vec<f64>,
    /// Interior angles divided by π.
    pub alphas: Vec<f64>,
    pub a: Complex64,
    pub c: Complex64,
    pub quadrature_order: usize,
    /// Final residual of the parameter problem (max norm).
    pub residual: f64,
    #[serde(skip)]
    cache: OnceLock<Cache>,
}

#[derive(Debug)]
struct Cache {
    z: Vec<Complex64>,
    betas: Vec<f64>,
    rules: Rules,
    diameter: f64,
    samples: OnceLock<Vec<(Complex64, Point)>>,
}

impl Clone for DiskMap {
    fn clone(&self) -> Self {
        DiskMap {
            vertices: self.vertices.clone(),
            prevertices: self.prevertices.clone(),
            alphas: self.alphas.clone(),
            a: self.a,
            c: self.c,
            quadrature_order: self.quadrature_order,
            residual: self.residual,
            cache: OnceLock::new(),
        }
    }
}

impl PartialEq for DiskMap {
    fn eq(&self, o: &Self) -> bool {
        self.vertices == o.vertices
            && self.prevertices == o.prevertices
            && self.alphas == o.alphas
            && self.a == o.a
            && self.c == o.c
            && self.quadrature_order == o.quadrature_order
    }
}

/// Interior angles / π of a counter-clockwise ring.
pub fn turning_alphas(ring: &[Point]) -> Vec<f64> {
    let n = ring.len();
    (0..n)
        .map(|k| {
            let prev = ring[(k + n - 1) % n];
            let next = ring[(k + 1) % n];
            let din = ring[k] - prev;
            let dout = next - ring[k];
            // Exterior turning angle in (-π, π).
            let turn = din.cross(dout).atan2(din.dot(dout));
            1.0 - turn / PI
        })
        .collect()
}

/// Drops vertices whose interior angle is within `tol`·π of a straight angle.
pub fn merge_collinear(ring: &[Point], tol: f64) -> Vec<Point> {
    let mut r = ring.to_vec();
    loop {
        let al = turning_alphas(&r);
        match (0..r.len()).find(|&k| (al[k] - 1.0).abs() < tol) {
            Some(k) if r.len() > 3 => {
                r.remove(k);
            }
            _ => return r,
        }
    }
}

struct Problem<'a> {
    w: Vec<Complex64>,
    center: Complex64,
    betas: Vec<f64>,
    rules: &'a Rules,
    sides: Vec<f64>,
}

fn angles_from(y: &[f64], n: usize) -> Vec<f64> {
    let mut lg = vec![0.0; n];
    for j in 0..n - 1 {
        lg[j + 1] = lg[j] - y[j];
    }
    let m = lg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let g: Vec<f64> = lg.iter().map(|l| (l - m).exp()).collect();
    let total: f64 = g.iter().sum();
    let mut theta = Vec::with_capacity(n);
    let mut acc = 0.0;
    for gi in &g {
        acc += gi / total * TAU;
        theta.push(acc);
    }
    theta[n - 1] = TAU;
    theta
}

fn on_circle(theta: &[f64]) -> Vec<Complex64> {
    theta
        .iter()
        .map(|&t| Complex64::from_polar(1.0, t))
        .collect()
}

/// ∫ over the boundary arc from prevertex k to k+1, via the arc midpoint.
fn side_integral(f: &Integrand, theta: &[f64], k: usize) -> Complex64 {
    let n = theta.len();
    let k1 = (k + 1) % n;
    let (t0, mut t1) = (theta[k], theta[k1]);
    if t1 <= t0 {
        t1 += TAU;
    }
    let mid = Complex64::from_polar(1.0, 0.5 * (t0 + t1));
    f.integrate(f.z[k], mid, Some(k)) - f.integrate(f.z[k1], mid, Some(k1))
}

impl Problem<'_> {
    fn residual(&self, y: &[f64]) -> DVector<f64> {
        let n = self.w.len();
        let theta = angles_from(y, n);
        let z = on_circle(&theta);
        let f = Integrand {
            z: &z,
            betas: &self.betas,
            rules: self.rules,
        };
        let mut r = DVector::zeros(n - 1);
        let i0 = side_integral(&f, &theta, 0).norm();
        for k in 1..n - 2 {
            let ik = side_integral(&f, &theta, k).norm();
            r[k - 1] = (ik / i0).ln() - (self.sides[k] / self.sides[0]).ln();
        }
        let f_first = -f.integrate(z[0], Complex64::new(0.0, 0.0), Some(0));
        let f_last = -f.integrate(z[n - 1], Complex64::new(0.0, 0.0), Some(n - 1));
        let ratio =
            (f_last / f_first) / ((self.w[n - 1] - self.center) / (self.w[0] - self.center));
        r[n - 3] = ratio.norm().ln();
        r[n - 2] = ratio.arg();
        r
    }
}

fn max_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Point deep inside the ring: its centroid when inside, otherwise the grid
/// point of largest boundary distance refined around the best candidate.
pub fn map_center(ring: &[Point]) -> Point {
    let c = ring_centroid(ring);
    if ring_contains(ring, c) && ring_distance(ring, c).0 > 0.0 {
        return c;
    }
    let bb = BBox::of(ring);
    let mut best = (f64::NEG_INFINITY, c);
    let mut step = bb.width().max(bb.height()) / 32.0;
    let mut lo = bb.min;
    let mut hi = bb.max;
    for _ in 0..12 {
        let nx = ((hi.x - lo.x) / step).ceil() as usize + 1;
        let ny = ((hi.y - lo.y) / step).ceil() as usize + 1;
        for j in 0..ny {
            for i in 0..nx {
                let p = Point::new(lo.x + i as f64 * step, lo.y + j as f64 * step);
                if ring_contains(ring, p) {
                    let d = ring_distance(ring, p).0;
                    if d > best.0 {
                        best = (d, p);
                    }
                }
            }
        }
        lo = Point::new(best.1.x - step, best.1.y - step);
        hi = Point::new(best.1.x + step, best.1.y + step);
        step /= 4.0;
    }
    best.1
}

pub fn solve_parameters(vertices: &[Point], quadrature_order: usize) -> Result<DiskMap> {
    solve_parameters_with(
        vertices,
        &ScParams {
            quadrature_order,
            ..ScParams::default()
        },
    )
}

pub fn solve_parameters_with(vertices: &[Point], params: &ScParams) -> Result<DiskMap> {
    if params.quadrature_order < 2 {
        return Err(LensError::InvalidInput(
            "quadrature order must be at least 2".into(),
        ));
    }
    let mut ring = merge_collinear(vertices, 1e-8);
    if signed_area(&ring) < 0.0 {
        ring.reverse();
    }
    let n = ring.len();
    if n < 3 || n > params.max_vertices {
        return Err(LensError::InvalidInput(format!(
            "subregion has {n} vertices after merging; supported range is 3..={}",
            params.max_vertices
        )));
    }
    let alphas = turning_alphas(&ring);
    if alphas.iter().any(|&a| !(a > 0.0 && a < 2.0)) {
        return Err(LensError::InvalidInput(
            "polygon angles out of range (0, 2π)".into(),
        ));
    }
    let betas: Vec<f64> = alphas.iter().map(|a| a - 1.0).collect();

    // Canonical frame.
    let w0 = cx(ring[0]);
    let e = cx(ring[1]) - w0;
    let to_canon = |p: Point| (cx(p) - w0) / e;
    let canon: Vec<Complex64> = ring.iter().map(|&p| to_canon(p)).collect();
    let canon_pts: Vec<Point> = canon.iter().map(|&z| pt(z)).collect();
    let center = cx(map_center(&canon_pts));
    let sides: Vec<f64> = (0..n)
        .map(|k| (canon[(k + 1) % n] - canon[k]).norm())
        .collect();

    let rules = Rules::new(params.quadrature_order, &betas);
    let problem = Problem {
        w: canon.clone(),
        center,
        betas: betas.clone(),
        rules: &rules,
        sides,
    };

    let mut y = vec![0.0; n - 1];
    let mut r = problem.residual(&y);
    let mut res = max_norm(&r);
    let mut iterations = 0;
    let fd = 1e-6;
    while res > 1e-13 && iterations < params.max_iterations {
        iterations += 1;
        let mut jac = DMatrix::zeros(n - 1, n - 1);
        for j in 0..n - 1 {
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[j] += fd;
            ym[j] -= fd;
            let col = (problem.residual(&yp) - problem.residual(&ym)) / (2.0 * fd);
            jac.set_column(j, &col);
        }
        let Some(step) = jac.lu().solve(&(-&r)) else {
            break;
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        let cur = r.norm();
        for _ in 0..40 {
            let trial: Vec<f64> = y
                .iter()
                .zip(step.iter())
                .map(|(a, s)| a + lambda * s)
                .collect();
            let rt = problem.residual(&trial);
            if rt.iter().all(|v| v.is_finite()) && rt.norm() < cur * (1.0 - 1e-4 * lambda) {
                y = trial;
                r = rt;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
        res = max_norm(&r);
    }
    log::debug!("sc solve: n = {n}, iterations = {iterations}, residual = {res:e}");
    if !(res <= params.tolerance) {
        return Err(LensError::Convergence {
            iterations,
            residual: res,
        });
    }

    let theta = angles_from(&y, n);
    for k in 0..n {
        let gap = if k == 0 {
            theta[0]
        } else {
            theta[k] - theta[k - 1]
        };
        if gap < params.crowding_gap {
            return Err(LensError::Crowding((k + n - 1) % n, k));
        }
    }

    // Constants in the canonical frame, then back to world coordinates.
    let z = on_circle(&theta);
    let f = Integrand {
        z: &z,
        betas: &betas,
        rules: &rules,
    };
    let f_first = -f.integrate(z[0], Complex64::new(0.0, 0.0), Some(0));
    let c_canon = (canon[0] - center) / f_first;
    let a = w0 + e * center;
    let c = e * c_canon;

    let map = DiskMap {
        vertices: ring,
        prevertices: theta,
        alphas,
        a,
        c,
        quadrature_order: params.quadrature_order,
        residual: res,
        cache: OnceLock::new(),
    };
    Ok(map)
}

impl DiskMap {
    fn cache(&self) -> &Cache {
        self.cache.get_or_init(|| {
            let betas: Vec<f64> = self.alphas.iter().map(|a| a - 1.0).collect();
            let bb = BBox::of(&self.vertices);
            Cache {
                z: on_circle(&self.prevertices),
                rules: Rules::new(self.quadrature_order, &betas),
                betas,
                diameter: bb.width().hypot(bb.height()),
                samples: OnceLock::new(),
            }
        })
    }

    fn integrand(&self) -> Integrand<'_> {
        let c = self.cache();
        Integrand {
            z: &c.z,
            betas: &c.betas,
            rules: &c.rules,
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn prevertex(&self, k: usize) -> Complex64 {
        self.cache().z[k]
    }

    /// Bounding-box diagonal of the target polygon.
    pub fn diameter(&self) -> f64 {
        self.cache().diameter
    }

    pub fn center(&self) -> Point {
        pt(self.a)
    }

    /// φ(z); points outside the closed disk are pulled onto the circle.
    pub fn map_forward(&self, z: Complex64) -> Point {
        pt(self.forward(z))
    }

    pub(crate) fn forward(&self, mut z: Complex64) -> Complex64 {
        let r = z.norm();
        if r > 1.0 {
            z /= r;
        }
        let f = self.integrand();
        let mut best: (f64, Option<usize>) = (z.norm(), None);
        for (k, zk) in f.z.iter().enumerate() {
            let d = (z - zk).norm();
            if d < best.0 {
                best = (d, Some(k));
            }
        }
        match best {
            (d, Some(k)) if d <= 1e-14 => cx(self.vertices[k]),
            (_, Some(k)) => cx(self.vertices[k]) + self.c * f.integrate(f.z[k], z, Some(k)),
            (_, None) => self.a + self.c * f.integrate(Complex64::new(0.0, 0.0), z, None),
        }
    }

    /// φ(zb) continued from a known image `wa` = φ(za) along the segment.
    pub(crate) fn forward_from(&self, za: Complex64, wa: Complex64, zb: Complex64) -> Complex64 {
        wa + self.c * self.integrand().integrate(za, zb, None)
    }

    /// φ'(z).
    pub fn derivative(&self, z: Complex64) -> Complex64 {
        self.c * self.integrand().eval(z)
    }

    /// Image of the boundary arc between prevertices k and k+1: C·∫ along the arc.
    pub fn side_image(&self, k: usize) -> Complex64 {
        self.c * side_integral(&self.integrand(), &self.prevertices, k)
    }

    /// Side images recomputed with a different quadrature order.
    pub fn side_images_with_order(&self, order: usize) -> Vec<Complex64> {
        let c = self.cache();
        let rules = Rules::new(order, &c.betas);
        let f = Integrand {
            z: &c.z,
            betas: &c.betas,
            rules: &rules,
        };
        (0..self.len())
            .map(|k| self.c * side_integral(&f, &self.prevertices, k))
            .collect()
    }

    /// Σ(1 − α_k), equal to 2 for a closed polygon.
    pub fn closure(&self) -> f64 {
        self.alphas.iter().map(|a| 1.0 - a).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(v: &[(f64, f64)]) -> Vec<Point> {
        v.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    #[test]
    fn alphas_of_l_shape() {
        let l = ring(&[(0., 0.), (3., 0.), (3., 1.), (1., 1.), (1., 3.), (0., 3.)]);
        let a = turning_alphas(&l);
        let expect = [0.5, 0.5, 0.5, 1.5, 0.5, 0.5];
        for (x, e) in a.iter().zip(expect) {
            assert!((x - e).abs() < 1e-15);
        }
        assert!((a.iter().map(|x| 1.0 - x).sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn collinear_vertices_are_merged() {
        let sq = ring(&[(0., 0.), (0.5, 0.), (1., 0.), (1., 1.), (0., 1.)]);
        assert_eq!(merge_collinear(&sq, 1e-8).len(), 4);
    }

    #[test]
    fn square_prevertices_are_equally_spaced() {
        let m = solve_parameters(&ring(&[(0., 0.), (1., 0.), (1., 1.), (0., 1.)]), 8).unwrap();
        for k in 0..4 {
            let gap = if k == 0 {
                m.prevertices[0]
            } else {
                m.prevertices[k] - m.prevertices[k - 1]
            };
            assert!((gap - PI / 2.0).abs() < 1e-9, "gap {k} = {gap}");
        }
        assert!((m.prevertices[3] - TAU).abs() == 0.0);
    }

    #[test]
    fn forward_hits_vertices_and_center() {
        let l = ring(&[(0., 0.), (3., 0.), (3., 1.), (1., 1.), (1., 3.), (0., 3.)]);
        let m = solve_parameters(&l, 8).unwrap();
        for k in 0..l.len() {
            let z = m.prevertex(k);
            assert_eq!(m.map_forward(z), l[k]);
        }
        assert!(m.map_forward(Complex64::new(0.0, 0.0)).dist(m.center()) < 1e-15);
    }
}
