use num_complex::Complex64;

use super::quadrature::{gauss_jacobi, gauss_legendre, Rule};

const MAX_PIECES: usize = 400;

/// Quadrature tables: one Gauss–Jacobi rule per prevertex exponent plus Gauss–Legendre.
#[derive(Debug, Clone)]
pub(crate) struct Rules {
    pub jacobi: Vec<Rule>,
    pub legendre: Rule,
}

impl Rules {
    pub fn new(order: usize, betas: &[f64]) -> Self {
        Rules {
            jacobi: betas.iter().map(|&b| gauss_jacobi(order, 0.0, b)).collect(),
            legendre: gauss_legendre(order),
        }
    }
}

/// The SC integrand Π (1 - ζ/z_k)^β_k with its compound quadrature.
pub(crate) struct Integrand<'a> {
    pub z: &'a [Complex64],
    pub betas: &'a [f64],
    pub rules: &'a Rules,
}

impl Integrand<'_> {
    pub fn eval(&self, zeta: Complex64) -> Complex64 {
        self.eval_except(zeta, usize::MAX)
    }

    fn eval_except(&self, zeta: Complex64, skip: usize) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for (k, (&zk, &b)) in self.z.iter().zip(self.betas).enumerate() {
            if k != skip && b != 0.0 {
                acc *= (Complex64::new(1.0, 0.0) - zeta / zk).powf(b);
            }
        }
        acc
    }

    fn nearest_prevertex(&self, p: Complex64, skip: usize) -> f64 {
        self.z
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != skip)
            .map(|(_, &zk)| (zk - p).norm())
            .fold(f64::INFINITY, f64::min)
    }

    fn legendre_piece(&self, a: Complex64, b: Complex64) -> Complex64 {
        let half = (b - a) * 0.5;
        let mid = (a + b) * 0.5;
        let mut s = Complex64::new(0.0, 0.0);
        for (x, w) in self
            .rules
            .legendre
            .nodes
            .iter()
            .zip(&self.rules.legendre.weights)
        {
            s += self.eval(mid + half * *x) * *w;
        }
        s * half
    }

    /// Piece starting exactly at prevertex `j`, integrated with the Jacobi rule.
    fn jacobi_piece(&self, j: usize, b: Complex64) -> Complex64 {
        let a = self.z[j];
        let d = b - a;
        let len = d.norm();
        let beta = self.betas[j];
        // 1 - ζ/z_j = (1 + x)/2 · |b - a| · u along the piece.
        let u = -d / (a * len);
        let scale = u.powf(beta) * (len / 2.0).powf(beta) * d * 0.5;
        let rule = &self.rules.jacobi[j];
        let mut s = Complex64::new(0.0, 0.0);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let zeta = a + d * ((1.0 + x) / 2.0);
            s += self.eval_except(zeta, j) * *w;
        }
        s * scale
    }

    /// ∫ from `a` to `b` along the straight segment. `start` names the
    /// prevertex `a` coincides with, if any.
    pub fn integrate(&self, a: Complex64, b: Complex64, start: Option<usize>) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        let mut s = a;
        if let Some(j) = start {
            let remaining = (b - a).norm();
            if remaining == 0.0 {
                return total;
            }
            let h = remaining.min(0.5 * self.nearest_prevertex(a, j));
            let e = a + (b - a) * (h / remaining);
            total += self.jacobi_piece(j, e);
            s = e;
        }
        for _ in 0..MAX_PIECES {
            let remaining = (b - s).norm();
            if remaining <= 0.0 {
                break;
            }
            let h = remaining.min(0.5 * self.nearest_prevertex(s, usize::MAX));
            let e = if h >= remaining {
                b
            } else {
                s + (b - s) * (h / remaining)
            };
            total += self.legendre_piece(s, e);
            s = e;
        }
        total
    }
}
