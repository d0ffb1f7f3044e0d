use std::f64::consts::TAU;

use num_complex::Complex64;

use super::{cx, pt, DiskMap};
use crate::error::{LensError, Result};
use crate::geometry::{
    point_segment_distance, ring_contains, ring_distance, segments_cross_properly, Point,
};

const RADII: [f64; 10] = [0.0, 0.25, 0.5, 0.7, 0.82, 0.9, 0.95, 0.98, 0.993, 0.998];
const DIRECTIONS: usize = 72;
const ODE_STEPS: usize = 16;
const NEWTON_STEPS: usize = 60;

impl DiskMap {
    /// Disk samples and their images, built on first use.
    fn samples(&self) -> &[(Complex64, Point)] {
        self.cache().samples.get_or_init(|| {
            let mut zs = Vec::new();
            for &r in &RADII {
                if r == 0.0 {
                    zs.push(Complex64::new(0.0, 0.0));
                    continue;
                }
                for k in 0..DIRECTIONS {
                    zs.push(Complex64::from_polar(r, TAU * k as f64 / DIRECTIONS as f64));
                }
            }
            // Around each prevertex, where the map compresses the disk the most.
            for k in 0..self.len() {
                let zk = self.prevertex(k);
                for &eps in &[1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 1e-4] {
                    for &turn in &[-1.2, -0.6, 0.0, 0.6, 1.2] {
                        let z = zk * (1.0 - eps * Complex64::from_polar(1.0, turn));
                        if z.norm() < 1.0 {
                            zs.push(z);
                        }
                    }
                }
            }
            zs.into_iter().map(|z| (z, self.map_forward(z))).collect()
        })
    }

    /// Whether segment ab stays inside, ignoring edges that `b` lies on.
    fn visible(&self, a: Point, b: Point, tol: f64) -> bool {
        let v = &self.vertices;
        let n = v.len();
        (0..n).all(|e| {
            let (p, q) = (v[e], v[(e + 1) % n]);
            point_segment_distance(b, p, q) <= tol || !segments_cross_properly(a, b, p, q)
        })
    }

    /// Newton iteration on φ(z) = w, kept inside the closed disk. Steps that
    /// leave the disk are projected onto the circle and halved until the
    /// residual drops.
    fn newton(&self, w: Complex64, mut z: Complex64, tol: f64) -> Option<Complex64> {
        let mut err = (self.forward(z) - w).norm();
        for _ in 0..NEWTON_STEPS {
            if err <= tol {
                return Some(z);
            }
            let d = self.derivative(z);
            if !d.is_finite() || d.norm() == 0.0 {
                return None;
            }
            let step = (self.forward(z) - w) / d;
            let mut lambda = 1.0;
            let mut accepted = None;
            for _ in 0..30 {
                let mut next = z - step * lambda;
                if next.norm() > 1.0 {
                    next /= next.norm();
                }
                let e = (self.forward(next) - w).norm();
                if e < err {
                    accepted = Some((next, e));
                    break;
                }
                lambda *= 0.5;
            }
            match accepted {
                Some((next, e)) => {
                    z = next;
                    err = e;
                }
                None => break,
            }
        }
        (err <= tol).then_some(z)
    }

    /// Integrates dz/dt = (w − w₀)/φ'(z) from the sample (z₀, w₀) with RK4.
    fn ode_guess(&self, w: Complex64, z0: Complex64, w0: Complex64) -> Complex64 {
        let delta = w - w0;
        let h = 1.0 / ODE_STEPS as f64;
        let rhs = |z: Complex64| delta / self.derivative(z);
        let clamp = |z: Complex64| {
            if z.norm() > 1.0 {
                z / z.norm() * (1.0 - 1e-12)
            } else {
                z
            }
        };
        let mut z = z0;
        for _ in 0..ODE_STEPS {
            let k1 = rhs(z);
            let k2 = rhs(clamp(z + k1 * (h / 2.0)));
            let k3 = rhs(clamp(z + k2 * (h / 2.0)));
            let k4 = rhs(clamp(z + k3 * h));
            z = clamp(z + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0));
            if !z.is_finite() {
                return z0;
            }
        }
        z
    }

    /// Guess from the local expansion φ(z) ≈ w_k − C·P_k·z_k·u^α_k/α_k, u = 1 − z/z_k.
    fn vertex_guess(&self, w: Complex64, k: usize) -> Complex64 {
        let zk = self.prevertex(k);
        let alpha = self.alphas[k];
        let mut pk = Complex64::new(1.0, 0.0);
        for j in 0..self.len() {
            if j != k {
                pk *=
                    (Complex64::new(1.0, 0.0) - zk / self.prevertex(j)).powf(self.alphas[j] - 1.0);
            }
        }
        let rhs = -(w - cx(self.vertices[k])) * alpha / (self.c * pk * zk);
        let u = rhs.powf(1.0 / alpha);
        let z = zk * (Complex64::new(1.0, 0.0) - u);
        if z.norm() > 1.0 {
            z / z.norm()
        } else {
            z
        }
    }

    /// φ⁻¹(w) for w inside or on the boundary of the target polygon.
    pub fn map_inverse(&self, w: Point) -> Result<Complex64> {
        let diam = self.diameter();
        let (bd, _) = ring_distance(&self.vertices, w);
        let on_boundary = bd <= 1e-9 * diam;
        if !on_boundary && !ring_contains(&self.vertices, w) {
            return Err(LensError::InvalidInput(format!(
                "point ({}, {}) lies outside the subregion",
                w.x, w.y
            )));
        }
        for k in 0..self.len() {
            if self.vertices[k].dist(w) <= 1e-12 * diam {
                return Ok(self.prevertex(k));
            }
        }
        let wc = cx(w);
        let tol = 1e-12 * diam;
        let accept = 1e-8 * diam;

        let finish = |z: Complex64| -> Complex64 {
            if on_boundary && (z.norm() - 1.0).abs() < 1e-6 {
                let zb = z / z.norm();
                if (self.forward(zb) - wc).norm() <= (self.forward(z) - wc).norm() {
                    return zb;
                }
            }
            z
        };

        let mut guesses: Vec<Complex64> = Vec::new();
        // Near a vertex the map behaves like a power; use its local inverse.
        let (kv, dv) = (0..self.len())
            .map(|k| (k, self.vertices[k].dist(w)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let n = self.len();
        let side = self.vertices[kv]
            .dist(self.vertices[(kv + 1) % n])
            .min(self.vertices[kv].dist(self.vertices[(kv + n - 1) % n]));
        if dv < 0.1 * side {
            guesses.push(self.vertex_guess(wc, kv));
        }
        // ODE continuation from the nearest visible samples.
        let mut order: Vec<(f64, usize)> = self
            .samples()
            .iter()
            .enumerate()
            .map(|(i, (_, p))| (p.dist(w), i))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut tried = 0;
        for &(_, i) in &order {
            let (z0, w0) = self.samples()[i];
            if !self.visible(w0, w, 1e-9 * diam) {
                continue;
            }
            guesses.push(self.ode_guess(wc, z0, cx(w0)));
            guesses.push(z0);
            tried += 1;
            if tried >= 4 {
                break;
            }
        }

        let mut best: Option<(f64, Complex64)> = None;
        for g in guesses {
            if let Some(z) = self.newton(wc, g, tol) {
                return Ok(finish(z));
            }
            // Keep the best unpolished candidate in case the tight tolerance is out of reach.
            let z = self.newton(wc, g, accept).unwrap_or(g);
            let e = (self.forward(z) - wc).norm();
            if best.is_none_or(|b| e < b.0) {
                best = Some((e, z));
            }
        }
        match best {
            Some((e, z)) if e <= accept => Ok(finish(z)),
            _ => Err(LensError::InverseNonConvergence { x: w.x, y: w.y }),
        }
    }

    /// Polar angle of φ⁻¹(w) for a boundary point, using exact prevertices at vertices.
    pub fn boundary_angle(&self, w: Point) -> Result<f64> {
        let z = self.map_inverse(w)?;
        let t = z.arg();
        Ok(if t < 0.0 { t + TAU } else { t })
    }

    /// The forward image as a point, for symmetry with `map_inverse`.
    pub fn image(&self, z: Complex64) -> Point {
        pt(self.forward(z))
    }
}
