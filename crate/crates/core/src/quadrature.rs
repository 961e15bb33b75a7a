//! Gauss–Legendre, Gauss–Jacobi and Gauss–Hermite rules (Golub–Welsch) and
//! an adaptive Gauss–Legendre integrator.

use crate::specialfn::gamma_any;
use crate::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and weights on the reference domain of the weight ([-1, 1], or the
/// real line for Hermite rules).
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Gauss–Legendre rule with `n` points.
    pub fn legendre(n: usize) -> GaussRule {
        Self::jacobi(n, 0.0, 0.0).expect("Legendre parameters are valid")
    }

    /// Gauss–Jacobi rule for the weight (1-x)^alpha (1+x)^beta.
    pub fn jacobi(n: usize, alpha: f64, beta: f64) -> Result<GaussRule> {
        if n == 0 {
            return Err(Error::param("n", "quadrature needs at least one node"));
        }
        if !(alpha > -1.0 && beta > -1.0) {
            return Err(Error::Domain(format!(
                "Jacobi exponents must exceed -1, got ({alpha}, {beta})"
            )));
        }
        let ab = alpha + beta;
        let mut jm = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            let kf = k as f64;
            let s = 2.0 * kf + ab;
            let diag = if k == 0 {
                (beta - alpha) / (ab + 2.0)
            } else {
                (beta * beta - alpha * alpha) / (s * (s + 2.0))
            };
            jm[(k, k)] = diag;
            if k + 1 < n {
                let m = kf + 1.0;
                let s = 2.0 * m + ab;
                let num = 4.0 * m * (m + alpha) * (m + beta) * (m + ab);
                let den = s * s * (s + 1.0) * (s - 1.0);
                let off = (num / den).sqrt();
                jm[(k, k + 1)] = off;
                jm[(k + 1, k)] = off;
            }
        }
        let mu0 = 2f64.powf(ab + 1.0) * gamma_any(alpha + 1.0) * gamma_any(beta + 1.0)
            / gamma_any(ab + 2.0);
        Ok(Self::from_jacobi_matrix(jm, mu0))
    }

    /// Gauss–Hermite rule for the standard normal density: Σ w_i f(x_i) ≈ E f(Z).
    pub fn hermite_normal(n: usize) -> Result<GaussRule> {
        if n == 0 {
            return Err(Error::param("n", "quadrature needs at least one node"));
        }
        let mut jm = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let off = (k as f64).sqrt();
            jm[(k - 1, k)] = off;
            jm[(k, k - 1)] = off;
        }
        Ok(Self::from_jacobi_matrix(jm, 1.0))
    }

    fn from_jacobi_matrix(jm: DMatrix<f64>, mu0: f64) -> GaussRule {
        let n = jm.nrows();
        let eig = SymmetricEigen::new(jm);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                (eig.eigenvalues[i], mu0 * v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        GaussRule {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    /// ∫_a^b f(x) dx for a rule built with alpha = beta = 0.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// ∫_a^b (b-x)^alpha (x-a)^beta f(x) dx for a Jacobi rule built with the same exponents.
    pub fn integrate_weighted<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        alpha: f64,
        beta: f64,
        mut f: F,
    ) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half.powf(1.0 + alpha + beta)
    }
}

/// Adaptive Gauss–Legendre integration by bisection, comparing 10- and 20-point rules.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64) -> f64 {
    let coarse = GaussRule::legendre(10);
    let fine = GaussRule::legendre(20);
    let mut stack = vec![(a, b, abs_tol, 0usize)];
    let mut total = 0.0;
    while let Some((lo, hi, tol, depth)) = stack.pop() {
        let c = coarse.integrate(lo, hi, &mut f);
        let r = fine.integrate(lo, hi, &mut f);
        // the local tolerance is floored at rounding level so halving cannot stall
        let floor = 64.0 * f64::EPSILON * r.abs().max(c.abs());
        if (r - c).abs() <= tol.max(floor) || depth >= 60 {
            total += r;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, 0.5 * tol, depth + 1));
            stack.push((mid, hi, 0.5 * tol, depth + 1));
        }
    }
    total
}
