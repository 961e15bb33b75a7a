//! The Volterra kernel `K_H(t, s)` of fractional Brownian motion, its
//! integrals, and exact joint sampling of `(B, B^H)` on a uniform grid.
//!
//! Two pointwise forms are provided: the hypergeometric form
//! [`kernel_hyp`] and the integral form [`kernel_alt`]. Integrals of the
//! kernel use the scaling `K_H(t, s) = t^(H-1/2) K_H(1, s/t)` together with
//! closed forms of the moments `∫_0^x v^m K_H(1, v) dv` in terms of
//! incomplete beta functions.

use crate::quadrature::{integrate_adaptive, GaussRule};
use crate::specialfn::{
    beta_fn, gamma_fn, hyp2f1, incomplete_beta, incomplete_beta_upper,
};
use crate::{Error, Result};
use nalgebra::{Cholesky, DMatrix, Dyn};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

/// Hurst exponent with its cached normalising constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hurst {
    h: f64,
    c_h: f64,
    kappa_h: f64,
}

impl Hurst {
    pub fn new(h: f64) -> Result<Hurst> {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::param("hurst", format!("must lie in (0, 1), got {h}")));
        }
        if h == 0.5 {
            return Ok(Hurst {
                h,
                c_h: 1.0,
                kappa_h: 1.0,
            });
        }
        let c2 = 2.0 * h * gamma_fn(1.5 - h)? / (gamma_fn(2.0 - 2.0 * h)? * gamma_fn(h + 0.5)?);
        let c_h = c2.sqrt();
        let kappa_h = c_h * beta_fn(1.5 - h, h + 0.5)? / (h + 0.5);
        Ok(Hurst { h, c_h, kappa_h })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// c_H = [2H Γ(3/2-H) / (Γ(2-2H) Γ(H+1/2))]^(1/2).
    pub fn c_h(&self) -> f64 {
        self.c_h
    }

    /// κ_H = c_H B(3/2-H, H+1/2) / (H+1/2), so that ∫_0^t K_H(t,u) du = κ_H t^(H+1/2).
    pub fn kappa_h(&self) -> f64 {
        self.kappa_h
    }

    /// H - 1/2.
    pub fn alpha(&self) -> f64 {
        self.h - 0.5
    }

    pub fn is_half(&self) -> bool {
        self.h == 0.5
    }

    /// Replace the cached κ_H. Only for fault-injection tests.
    #[doc(hidden)]
    pub fn with_kappa_override(mut self, kappa: f64) -> Hurst {
        self.kappa_h = kappa;
        self
    }
}

/// Uniform grid t_i = i T / n, i = 0..=n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_end: f64,
    n: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, n: usize) -> Result<TimeGrid> {
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::param("T", format!("horizon must be positive, got {t_end}")));
        }
        if n < 2 {
            return Err(Error::param("n", format!("grid needs at least 2 steps, got {n}")));
        }
        Ok(TimeGrid { t_end, n })
    }

    pub fn horizon(&self) -> f64 {
        self.t_end
    }

    /// Number of steps; there are `n + 1` nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.n as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n {
            self.t_end
        } else {
            self.t_end * i as f64 / self.n as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n).map(|i| self.node(i)).collect()
    }
}

fn check_pair(t: f64, s: f64) -> Result<()> {
    if !(s > 0.0 && s < t) || !t.is_finite() {
        return Err(Error::Domain(format!("kernel needs 0 < s < t, got s = {s}, t = {t}")));
    }
    Ok(())
}

/// K_H(t, s) = c_H (t-s)^(H-1/2) F(H-1/2, 1/2-H; H+1/2; 1 - t/s).
pub fn kernel_hyp(t: f64, s: f64, hurst: &Hurst) -> Result<f64> {
    check_pair(t, s)?;
    if hurst.is_half() {
        return Ok(1.0);
    }
    let a = hurst.alpha();
    let f = hyp2f1(a, -a, hurst.h + 0.5, 1.0 - t / s)?;
    Ok(hurst.c_h * (t - s).powf(a) * f)
}

/// K_H(t, s) = c_H [ (t/s)^(H-1/2) (t-s)^(H-1/2)
///                    - (H-1/2) s^(1/2-H) ∫_s^t u^(H-3/2) (u-s)^(H-1/2) du ].
///
/// The inner integral is evaluated on panels that double in length away
/// from u = s; the first panel uses a Gauss–Jacobi rule absorbing
/// (u-s)^(H-1/2).
pub fn kernel_alt(t: f64, s: f64, hurst: &Hurst) -> Result<f64> {
    check_pair(t, s)?;
    if hurst.is_half() {
        return Ok(1.0);
    }
    let a = hurst.alpha();
    let inner = |u: f64| u.powf(a - 1.0);
    let jac = GaussRule::jacobi(16, 0.0, a)?;
    let leg = GaussRule::legendre(16);
    let mut len = s.min(t - s);
    let mut acc = jac.integrate_weighted(s, s + len, 0.0, a, inner);
    let mut lo = s + len;
    while lo < t {
        let hi = (lo + len).min(t);
        acc += leg.integrate(lo, hi, |u| inner(u) * (u - s).powf(a));
        lo = hi;
        len *= 2.0;
    }
    let head = (t / s).powf(a) * (t - s).powf(a);
    Ok(hurst.c_h * (head - a * s.powf(-a) * acc))
}

/// R_H(s, t) = (s^(2H) + t^(2H) - |t-s|^(2H)) / 2.
pub fn autocovariance(s: f64, t: f64, hurst: &Hurst) -> f64 {
    let e = 2.0 * hurst.h;
    0.5 * (s.powf(e) + t.powf(e) - (t - s).abs().powf(e))
}

/// ∫_0^t K_H(t, u) du = κ_H t^(H+1/2).
pub fn kernel_total_integral(t: f64, hurst: &Hurst) -> f64 {
    hurst.kappa_h * t.powf(hurst.h + 0.5)
}

/// Moments (∫_0^x K_H(1,v) dv, ∫_0^x v K_H(1,v) dv) for x in [0, 1].
///
/// With p = 3/2-H, q = H+1/2, a = 1-2H and U(x) = ∫_x^1 w^(a-1)(1-w)^(q-1) dw:
/// `M_m(x) = c_H [ B_x(p+m, q)(1 - α/(q+m)) - α/(q+m) x^(q+m) U(x) ]`.
pub fn unit_kernel_moments(x: f64, hurst: &Hurst) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 0.0);
    }
    let x = x.min(1.0);
    if hurst.is_half() {
        return (x, 0.5 * x * x);
    }
    let h = hurst.h;
    let (p, q, a, al) = (1.5 - h, h + 0.5, 1.0 - 2.0 * h, h - 0.5);
    let bx0 = incomplete_beta(x, p, q);
    let boundary = if x < 1.0 { x.powf(p) * (1.0 - x).powf(q) } else { 0.0 };
    let bx1 = (p * bx0 - boundary) / (p + q);
    let u = incomplete_beta_upper(x, a, q);
    let xq = x.powf(q);
    let m0 = bx0 * (1.0 - al / q) - al / q * xq * u;
    let m1 = bx1 * (1.0 - al / (q + 1.0)) - al / (q + 1.0) * xq * x * u;
    (hurst.c_h * m0, hurst.c_h * m1)
}

/// ∫_0^tau K_H(t, u) du, from the closed-form moments.
pub fn kernel_partial_integral(tau: f64, t: f64, hurst: &Hurst) -> Result<f64> {
    if !(tau >= 0.0 && tau <= t) || !(t > 0.0) {
        return Err(Error::Domain(format!(
            "partial integral needs 0 <= tau <= t, got tau = {tau}, t = {t}"
        )));
    }
    if tau == t {
        return Ok(kernel_total_integral(t, hurst));
    }
    Ok(t.powf(hurst.h + 0.5) * unit_kernel_moments(tau / t, hurst).0)
}

/// ∫_0^tau K_H(t, u) du by quadrature of pointwise [`kernel_hyp`] values.
///
/// Panels are graded geometrically toward u = 0 with a Gauss–Jacobi rule on
/// the innermost panel absorbing u^(-|H-1/2|); when tau = t the last panel
/// uses a rule absorbing (t-u)^(H-1/2). Remaining panels use adaptive
/// Gauss–Legendre.
pub fn kernel_partial_integral_quadrature(tau: f64, t: f64, hurst: &Hurst) -> Result<f64> {
    if !(tau >= 0.0 && tau <= t) || !(t > 0.0) {
        return Err(Error::Domain(format!(
            "partial integral needs 0 <= tau <= t, got tau = {tau}, t = {t}"
        )));
    }
    if tau == 0.0 {
        return Ok(0.0);
    }
    if hurst.is_half() {
        return Ok(tau);
    }
    let a = hurst.alpha();
    let x = tau / t;
    let k = |v: f64| -> f64 {
        if v <= 0.0 || v >= 1.0 {
            return 0.0;
        }
        kernel_hyp(1.0, v, hurst).unwrap_or(f64::NAN)
    };
    const LEVELS: i32 = 60;
    let tol = 1e-15;
    let mut acc = 0.0;
    // innermost panel [0, x 2^-LEVELS]
    let eps = x * 2f64.powi(-LEVELS);
    let sing = -a.abs();
    let jac0 = GaussRule::jacobi(16, 0.0, sing)?;
    acc += jac0.integrate_weighted(0.0, eps, 0.0, sing, |v| k(v) * v.powf(-sing));
    let leg = GaussRule::legendre(20);
    for lvl in (1..LEVELS).rev() {
        let lo = x * 2f64.powi(-lvl - 1);
        let hi = x * 2f64.powi(-lvl);
        acc += leg.integrate(lo, hi, k);
    }
    // outermost panel [x/2, x]
    if x == 1.0 {
        let jac1 = GaussRule::jacobi(24, a, 0.0)?;
        acc += jac1.integrate_weighted(0.5, 1.0, a, 0.0, |v| k(v) * (1.0 - v).powf(-a));
    } else {
        acc += integrate_adaptive(k, 0.5 * x, x, tol);
    }
    Ok(t.powf(hurst.h + 0.5) * acc)
}

/// Covariance of (B_{t_1..t_n}, B^H_{t_1..t_n}) on the grid, ordered B first.
pub fn joint_cov_matrix(grid: &TimeGrid, hurst: &Hurst) -> DMatrix<f64> {
    let n = grid.n();
    let mut m = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        let ti = grid.node(i + 1);
        for j in 0..n {
            let tj = grid.node(j + 1);
            m[(i, j)] = ti.min(tj);
            m[(n + i, n + j)] = autocovariance(ti, tj, hurst);
            // Cov(B_ti, B^H_tj) = ∫_0^min(ti,tj) K_H(tj, u) du
            let c = if i >= j {
                kernel_total_integral(tj, hurst)
            } else {
                tj.powf(hurst.h + 0.5) * unit_kernel_moments((i + 1) as f64 / (j + 1) as f64, hurst).0
            };
            m[(i, n + j)] = c;
            m[(n + j, i)] = c;
        }
    }
    m
}

/// Cholesky factor with diagonal jitter ε·trace·I, ε doubling from 1e-14 to 1e-10.
///
/// Returns the lower factor and the absolute jitter that was added (0 if none).
pub fn cholesky_with_jitter(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    if let Some(c) = Cholesky::<f64, Dyn>::new(m.clone()) {
        return Ok((c.l(), 0.0));
    }
    let trace = m.trace().abs();
    let mut eps = 1e-14;
    while eps <= 1e-10 * (1.0 + 1e-12) {
        let mut j = m.clone();
        for i in 0..j.nrows() {
            j[(i, i)] += eps * trace;
        }
        if let Some(c) = Cholesky::<f64, Dyn>::new(j) {
            return Ok((c.l(), eps * trace));
        }
        eps *= 2.0;
    }
    Err(Error::NotPositiveDefinite {
        dim: m.nrows(),
        jitter: 1e-10 * trace,
    })
}

/// One sampled pair of paths, including the value 0 at t_0.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPath {
    pub b: Vec<f64>,
    pub bh: Vec<f64>,
}

/// Exact sampler of (B, B^H) at the grid nodes.
#[derive(Debug, Clone)]
pub struct JointSampler {
    n: usize,
    half: bool,
    /// Packed lower-triangular Cholesky factor, row-major.
    chol: Vec<f64>,
}

impl JointSampler {
    pub fn new(grid: &TimeGrid, hurst: &Hurst) -> Result<JointSampler> {
        let n = grid.n();
        if hurst.is_half() {
            return Ok(JointSampler {
                n,
                half: true,
                chol: Vec::new(),
            });
        }
        let (l, _) = cholesky_with_jitter(&joint_cov_matrix(grid, hurst))?;
        let dim = 2 * n;
        let mut chol = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for j in 0..=i {
                chol.push(l[(i, j)]);
            }
        }
        Ok(JointSampler { n, half: false, chol })
    }

    /// Number of standard normals consumed per path.
    pub fn normals_per_path(&self) -> usize {
        if self.half {
            self.n
        } else {
            2 * self.n
        }
    }

    /// Map standard normals `z` to node values; `b` and `bh` receive n + 1 entries.
    pub fn transform(&self, dt: f64, z: &[f64], b: &mut [f64], bh: &mut [f64]) {
        let n = self.n;
        b[0] = 0.0;
        bh[0] = 0.0;
        if self.half {
            let sd = dt.sqrt();
            let mut acc = 0.0;
            for i in 0..n {
                acc += sd * z[i];
                b[i + 1] = acc;
                bh[i + 1] = acc;
            }
            return;
        }
        let mut offset = 0;
        for i in 0..2 * n {
            let row = &self.chol[offset..offset + i + 1];
            let v: f64 = row.iter().zip(&z[..=i]).map(|(l, x)| l * x).sum();
            if i < n {
                b[i + 1] = v;
            } else {
                bh[i - n + 1] = v;
            }
            offset += i + 1;
        }
    }
}

/// Draw `count` joint paths with a ChaCha20 generator seeded by `seed`.
pub fn sample_joint_paths(
    grid: &TimeGrid,
    hurst: &Hurst,
    seed: u64,
    count: usize,
) -> Result<Vec<JointPath>> {
    if count < 1 {
        return Err(Error::param("count", "must be at least 1"));
    }
    let sampler = JointSampler::new(grid, hurst)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut z = vec![0.0; sampler.normals_per_path()];
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        for v in z.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let mut b = vec![0.0; grid.n() + 1];
        let mut bh = vec![0.0; grid.n() + 1];
        sampler.transform(grid.dt(), &z, &mut b, &mut bh);
        out.push(JointPath { b, bh });
    }
    Ok(out)
}

/// Volterra weights w_ij = ∫_{t_j}^{t_{j+1}} K_H(t_i, s) ds / Δt, for 1 <= i <= n, 0 <= j < i.
///
/// `Σ_j w_ij ΔB_j` has exactly the covariance with every `B_{t_k}` that
/// `B^H_{t_i}` has.
#[derive(Debug, Clone)]
pub struct VolterraWeights {
    n: usize,
    rows: Vec<f64>,
}

impl VolterraWeights {
    pub fn new(grid: &TimeGrid, hurst: &Hurst) -> VolterraWeights {
        let n = grid.n();
        let dt = grid.dt();
        let mut rows = Vec::with_capacity(n * (n + 1) / 2);
        for i in 1..=n {
            if hurst.is_half() {
                rows.extend(std::iter::repeat_n(1.0, i));
                continue;
            }
            let scale = grid.node(i).powf(hurst.h + 0.5) / dt;
            let mut prev = 0.0;
            for j in 0..i {
                let next = if j + 1 == i {
                    hurst.kappa_h
                } else {
                    unit_kernel_moments((j + 1) as f64 / i as f64, hurst).0
                };
                rows.push(scale * (next - prev));
                prev = next;
            }
        }
        VolterraWeights { n, rows }
    }

    /// Weights of row i (length i).
    pub fn row(&self, i: usize) -> &[f64] {
        assert!(i >= 1 && i <= self.n);
        let start = (i - 1) * i / 2;
        &self.rows[start..start + i]
    }
}
