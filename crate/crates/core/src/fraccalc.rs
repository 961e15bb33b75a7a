//! Riemann–Liouville integrals, Marchaud (Weyl) derivatives and the operator
//! `K_H f (t) = ∫_0^t K_H(t, s) f(s) ds` with its inverse, on uniform grids.
//!
//! Every operator here is a Volterra integral whose kernel is homogeneous
//! in `(t, s)`. Substituting `s = t v` turns row `i` of the discretised
//! operator into `scale(t_i) ∫_0^1 g(v) f(t_i v) dv`. With `f` piecewise
//! linear between nodes, the row weights only need the cumulative moments
//! `G_m(x) = ∫_0^x v^m g(v) dv` (m = 0, 1) at the ratios `j / i`; these
//! are available in closed form for every weight `g` used below, so the
//! weights are exact and do not depend on the horizon.
//!
//! Output at `t_0 = 0` of the singular operators (inverse, derivative) is
//! extrapolated linearly from the next two nodes.

use crate::fbm_kernel::{unit_kernel_moments, Hurst, TimeGrid};
use crate::specialfn::{beta_complete, gamma_fn, incomplete_beta};
use crate::{Error, Result};
use rayon::prelude::*;

/// Largest Hurst exponent for which the inverse operator is offered.
pub const MAX_INVERTIBLE_HURST: f64 = 0.95;

/// Values of a function at the nodes of a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<GridFunction> {
        if values.len() != grid.n() + 1 {
            return Err(Error::param(
                "values",
                format!("expected {} grid values, got {}", grid.n() + 1, values.len()),
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("grid value {i} is not finite")));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn<F: FnMut(f64) -> f64>(grid: TimeGrid, mut f: F) -> Result<GridFunction> {
        let values = grid.nodes().into_iter().map(&mut f).collect();
        GridFunction::new(grid, values)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Packed lower-triangular weights: row i has i + 1 entries (nodes 0..=i).
#[derive(Debug, Clone)]
struct RatioRule {
    rows: Vec<f64>,
}

impl RatioRule {
    fn from_rows(n: usize, rows: Vec<Vec<f64>>) -> RatioRule {
        let mut packed = Vec::with_capacity((n + 1) * (n + 2) / 2);
        for r in rows {
            packed.extend(r);
        }
        RatioRule { rows: packed }
    }

    fn build<F>(n: usize, row: F) -> RatioRule
    where
        F: Fn(usize) -> Vec<f64> + Sync + Send,
    {
        let rows: Vec<Vec<f64>> = (0..=n).into_par_iter().map(&row).collect();
        Self::from_rows(n, rows)
    }

    fn row(&self, i: usize) -> &[f64] {
        let start = i * (i + 1) / 2;
        &self.rows[start..start + i + 1]
    }

    fn dot(&self, i: usize, f: &[f64]) -> f64 {
        self.row(i).iter().zip(f).map(|(w, v)| w * v).sum()
    }
}

fn ratio(j: usize, i: usize) -> f64 {
    if j == i {
        1.0
    } else {
        j as f64 / i as f64
    }
}

/// Weights of ∫_0^1 g(v) f_lin(t_i v) dv over the cells `0..cells` of row i.
fn linear_row<G: Fn(f64) -> (f64, f64)>(i: usize, cells: usize, moments: &G) -> Vec<f64> {
    let mut w = vec![0.0; i + 1];
    let mut prev = moments(0.0);
    for j in 0..cells {
        let cur = moments(ratio(j + 1, i));
        let d0 = cur.0 - prev.0;
        let d1 = cur.1 - prev.1;
        let up = i as f64 * d1 - j as f64 * d0;
        w[j] += d0 - up;
        w[j + 1] += up;
        prev = cur;
    }
    w
}

/// Cell masses ∫_{x_j}^{x_{j+1}} g(v) dv of row i.
fn constant_row<G: Fn(f64) -> f64>(i: usize, moment: &G) -> Vec<f64> {
    let mut w = Vec::with_capacity(i + 1);
    let mut prev = moment(0.0);
    for j in 0..i {
        let cur = moment(ratio(j + 1, i));
        w.push(cur - prev);
        prev = cur;
    }
    w.push(0.0);
    w
}

/// (1 - x)^e - 1 without cancellation for small x.
fn pow1m_minus_one(x: f64, e: f64) -> f64 {
    if x >= 1.0 {
        return if e > 0.0 { -1.0 } else { f64::INFINITY };
    }
    (e * (-x).ln_1p()).exp_m1()
}

/// Moments of (1-v)^(a-1) for a in (0, 1]: elementary.
fn rl_moments(a: f64) -> impl Fn(f64) -> (f64, f64) {
    move |x| {
        let g0 = -pow1m_minus_one(x, a) / a;
        let g1 = g0 + pow1m_minus_one(x, a + 1.0) / (a + 1.0);
        (g0, g1)
    }
}

/// Moments of (1-v)^(-1-a) for a in (0, 1), x < 1.
fn marchaud_moments(a: f64) -> impl Fn(f64) -> (f64, f64) {
    move |x| {
        let g0 = pow1m_minus_one(x, -a) / a;
        let g1 = g0 + pow1m_minus_one(x, 1.0 - a) / (1.0 - a);
        (g0, g1)
    }
}

/// Row of the Marchaud part: t^(-a) [f(t) + a ∫_0^1 (f(t) - f(tv)) (1-v)^(-1-a) dv].
///
/// The last cell is integrated analytically since f(t) - f_lin(tv) is
/// proportional to (1 - v) there.
fn marchaud_row(i: usize, a: f64) -> Vec<f64> {
    if i == 0 {
        return vec![0.0];
    }
    let mom = marchaud_moments(a);
    let mut w = linear_row(i, i - 1, &mom);
    for v in w.iter_mut() {
        *v *= -a;
    }
    let ia = (i as f64).powf(a);
    w[i] += ia / (1.0 - a);
    w[i - 1] -= a * ia / (1.0 - a);
    w
}

fn extrapolate_origin(out: &mut [f64]) {
    if out.len() >= 3 {
        out[0] = 2.0 * out[1] - out[2];
    }
}

/// I^a_{0+} f for a in (0, 1], exact for piecewise-linear f.
pub fn rl_integral(f: &GridFunction, a: f64) -> Result<GridFunction> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::param("alpha", format!("must lie in (0, 1], got {a}")));
    }
    let grid = *f.grid();
    let n = grid.n();
    let mom = rl_moments(a);
    let rule = RatioRule::build(n, |i| linear_row(i, i, &mom));
    let g = gamma_fn(a)?;
    let out = (0..=n)
        .map(|i| {
            if i == 0 {
                0.0
            } else {
                grid.node(i).powf(a) / g * rule.dot(i, f.values())
            }
        })
        .collect();
    GridFunction::new(grid, out)
}

/// D^a_{0+} f for a in (0, 1) in Marchaud form
/// (1/Γ(1-a)) [f(t) t^(-a) + a ∫_0^t (f(t) - f(s)) (t-s)^(-1-a) ds].
pub fn weyl_derivative(f: &GridFunction, a: f64) -> Result<GridFunction> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::param("alpha", format!("must lie in (0, 1), got {a}")));
    }
    let grid = *f.grid();
    let n = grid.n();
    let rule = RatioRule::build(n, |i| marchaud_row(i, a));
    let g = gamma_fn(1.0 - a)?;
    let mut out: Vec<f64> = (0..=n)
        .map(|i| {
            if i == 0 {
                0.0
            } else {
                grid.node(i).powf(-a) / g * rule.dot(i, f.values())
            }
        })
        .collect();
    extrapolate_origin(&mut out);
    GridFunction::new(grid, out)
}

/// Discretised `K_H` on a fixed grid: `(K_H f)(t_i) = ∫_0^{t_i} K_H(t_i, s) f(s) ds`.
#[derive(Debug, Clone)]
pub struct KhOperator {
    grid: TimeGrid,
    hurst: Hurst,
    rule: Option<RatioRule>,
}

impl KhOperator {
    pub fn new(grid: &TimeGrid, hurst: &Hurst) -> KhOperator {
        let rule = if hurst.is_half() {
            None
        } else {
            let hu = *hurst;
            let mom = move |x: f64| unit_kernel_moments(x, &hu);
            Some(RatioRule::build(grid.n(), |i| linear_row(i, i, &mom)))
        };
        KhOperator {
            grid: *grid,
            hurst: *hurst,
            rule,
        }
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let n = self.grid.n();
        assert_eq!(f.len(), n + 1);
        match &self.rule {
            None => {
                let dt = self.grid.dt();
                let mut out = vec![0.0; n + 1];
                for i in 1..=n {
                    out[i] = out[i - 1] + 0.5 * dt * (f[i - 1] + f[i]);
                }
                out
            }
            Some(rule) => {
                let e = self.hurst.h() + 0.5;
                (0..=n)
                    .map(|i| {
                        if i == 0 {
                            0.0
                        } else {
                            self.grid.node(i).powf(e) * rule.dot(i, f)
                        }
                    })
                    .collect()
            }
        }
    }
}

/// `t ↦ ∫_0^t K_H(t, s) f(s) ds` on the grid of `f`, exact for piecewise-linear f.
pub fn apply_kh(f: &GridFunction, hurst: &Hurst) -> Result<GridFunction> {
    let op = KhOperator::new(f.grid(), hurst);
    GridFunction::new(*f.grid(), op.apply(f.values()))
}

/// Discretised inverse of `K_H`, acting on the integrand `h'` of `h = K_H ĥ`.
///
/// * H < 1/2: `ĥ = c⁻¹ t^(H-1/2) I^(1/2-H)[s^(1/2-H) h']`.
/// * H > 1/2: `ĥ = c⁻¹/Γ(3/2-H) (a(t) + b(t))` with
///   `a = t^(1/2-H) h'(t) + α ∫_0^t (h'(t) - h'(s)) (t-s)^(-1/2-H) ds` and
///   `b = α t^α ∫_0^t (t^(1/2-H) - s^(1/2-H)) h'(s) (t-s)^(-1/2-H) ds`, α = H-1/2.
/// * H = 1/2: `ĥ = h'`.
///
/// Here `c = c_H Γ(H+1/2)`, the normalisation under which the inverse of
/// `∫ K_H(t,s) f(s) ds` is obtained (so that `κ_H t^(H+1/2)` maps to 1).
#[derive(Debug, Clone)]
pub struct KhInverse {
    grid: TimeGrid,
    hurst: Hurst,
    linear: Option<RatioRule>,
    constant: Option<RatioRule>,
    prefactor: f64,
}

impl KhInverse {
    pub fn new(grid: &TimeGrid, hurst: &Hurst) -> Result<KhInverse> {
        let h = hurst.h();
        if h > MAX_INVERTIBLE_HURST {
            return Err(Error::Unsupported(format!(
                "inverse operator is offered for H <= {MAX_INVERTIBLE_HURST}, got H = {h}"
            )));
        }
        let n = grid.n();
        if hurst.is_half() {
            return Ok(KhInverse {
                grid: *grid,
                hurst: *hurst,
                linear: None,
                constant: None,
                prefactor: 1.0,
            });
        }
        let c = hurst.c_h() * gamma_fn(h + 0.5)?;
        if h < 0.5 {
            let b = 0.5 - h;
            let mom = move |x: f64| {
                let g0 = incomplete_beta(x, b + 1.0, b);
                let edge = if x < 1.0 { x.powf(b + 1.0) * (1.0 - x).powf(b) } else { 0.0 };
                let g1 = ((b + 1.0) * g0 - edge) / (2.0 * b + 1.0);
                (g0, g1)
            };
            let linear = RatioRule::build(n, |i| linear_row(i, i, &mom));
            let rl = rl_moments(b);
            let constant = RatioRule::build(n, |i| constant_row(i, &|x| rl(x).0));
            Ok(KhInverse {
                grid: *grid,
                hurst: *hurst,
                linear: Some(linear),
                constant: Some(constant),
                prefactor: 1.0 / (c * gamma_fn(b)?),
            })
        } else {
            let a = h - 0.5;
            let b1 = beta_complete(1.0 - a, -a);
            let omega = move |x: f64| -> (f64, f64) {
                // ∫_0^x v^m (1 - v^(-a)) (1-v)^(-1-a) dv, m = 0, 1
                if x >= 1.0 {
                    let l0 = -1.0 / a;
                    let l1 = -1.0 / (a * (1.0 - a));
                    let r1 = (1.0 - a) / (1.0 - 2.0 * a) * b1;
                    return (l0 - b1, l1 - r1);
                }
                let (l0, l1) = marchaud_moments(a)(x);
                let r0 = incomplete_beta(x, 1.0 - a, -a);
                let edge = x.powf(1.0 - a) * (1.0 - x).powf(-a);
                let r1 = ((1.0 - a) * r0 - edge) / (1.0 - 2.0 * a);
                (l0 - r0, l1 - r1)
            };
            let linear = RatioRule::build(n, |i| {
                let mut w = marchaud_row(i, a);
                if i > 0 {
                    let b = linear_row(i, i, &omega);
                    for (x, y) in w.iter_mut().zip(b) {
                        *x += a * y;
                    }
                }
                w
            });
            Ok(KhInverse {
                grid: *grid,
                hurst: *hurst,
                linear: Some(linear),
                constant: None,
                prefactor: 1.0 / (c * gamma_fn(1.0 - a)?),
            })
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    fn scale(&self, i: usize) -> f64 {
        // t^(1/2-H) for both branches
        self.prefactor * self.grid.node(i).powf(0.5 - self.hurst.h())
    }

    /// ĥ at the nodes from the nodal values of the integrand h'.
    pub fn apply_integrand(&self, hp: &[f64]) -> Vec<f64> {
        let n = self.grid.n();
        assert_eq!(hp.len(), n + 1);
        let Some(rule) = &self.linear else {
            return hp.to_vec();
        };
        let mut out: Vec<f64> = (0..=n)
            .map(|i| if i == 0 { 0.0 } else { self.scale(i) * rule.dot(i, hp) })
            .collect();
        extrapolate_origin(&mut out);
        out
    }

    /// ĥ at the nodes from the running integral h (h(0) = 0).
    ///
    /// For H < 1/2 the product s^(1/2-H) h'(s) is taken constant on each
    /// cell, matched to the cell increment of h; this is exact when h' is a
    /// multiple of s^(H-1/2), the behaviour of `K_H f` near 0 for f(0) != 0.
    /// Otherwise h' is recovered by central differences.
    pub fn apply_running(&self, h: &[f64]) -> Vec<f64> {
        let n = self.grid.n();
        assert_eq!(h.len(), n + 1);
        let dt = self.grid.dt();
        if let Some(rule) = &self.constant {
            let b = 0.5 - self.hurst.h();
            let e = 1.0 - b;
            let phi: Vec<f64> = (0..n)
                .map(|j| {
                    let mass = (self.grid.node(j + 1).powf(e) - self.grid.node(j).powf(e)) / e;
                    (h[j + 1] - h[j]) / mass
                })
                .collect();
            let mut out: Vec<f64> = (0..=n)
                .map(|i| {
                    if i == 0 {
                        0.0
                    } else {
                        let s: f64 = rule.row(i)[..i].iter().zip(&phi).map(|(w, v)| w * v).sum();
                        self.prefactor * s
                    }
                })
                .collect();
            extrapolate_origin(&mut out);
            return out;
        }
        let mut hp = vec![0.0; n + 1];
        hp[0] = (-3.0 * h[0] + 4.0 * h[1] - h[2]) / (2.0 * dt);
        for i in 1..n {
            hp[i] = (h[i + 1] - h[i - 1]) / (2.0 * dt);
        }
        hp[n] = (3.0 * h[n] - 4.0 * h[n - 1] + h[n - 2]) / (2.0 * dt);
        self.apply_integrand(&hp)
    }
}

fn check_origin(h: &GridFunction) -> Result<()> {
    let scale = h.values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if h.values()[0].abs() > 1e-12 * scale {
        return Err(Error::Domain(format!(
            "inverse operator needs h(0) = 0, got {}",
            h.values()[0]
        )));
    }
    Ok(())
}

/// `K_H⁻¹ h` for a running integral `h` given on the grid (h' recovered by differencing).
pub fn invert_kh(h: &GridFunction, hurst: &Hurst) -> Result<GridFunction> {
    check_origin(h)?;
    let inv = KhInverse::new(h.grid(), hurst)?;
    GridFunction::new(*h.grid(), inv.apply_running(h.values()))
}

/// `K_H⁻¹ h` where the caller supplies the integrand `h'` directly.
pub fn invert_kh_integrand(hp: &GridFunction, hurst: &Hurst) -> Result<GridFunction> {
    let inv = KhInverse::new(hp.grid(), hurst)?;
    GridFunction::new(*hp.grid(), inv.apply_integrand(hp.values()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specialfn::gamma_fn as g;
    use proptest::prelude::*;

    /// `K_H t^γ = C(γ) t^(γ+H+1/2)` from the factored representation
    /// `c_H Γ(H+1/2) I^(2H) s^(1/2-H) I^(1/2-H) s^(H-1/2)` acting on powers.
    fn kh_power_coeff(gamma: f64, hurst: &Hurst) -> f64 {
        let b = 0.5 - hurst.h();
        hurst.c_h() * g(hurst.h() + 0.5).unwrap() * g(1.0 + gamma - b).unwrap() * g(1.0 + gamma + b).unwrap()
            / (g(1.0 + gamma).unwrap() * g(gamma + hurst.h() + 1.5).unwrap())
    }

    /// K_H sin evaluated term by term on the Taylor series.
    fn kh_sin(t: f64, hurst: &Hurst) -> f64 {
        let mut acc = 0.0;
        let mut fact = 1.0;
        for k in 0..30 {
            let p = 2 * k + 1;
            fact *= if k == 0 { 1.0 } else { ((p - 1) * p) as f64 };
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign / fact * kh_power_coeff(p as f64, hurst) * t.powf(p as f64 + hurst.h() + 0.5);
        }
        acc
    }

    #[test]
    fn power_coefficient_reproduces_kappa() {
        for &hv in &[0.1, 0.3, 0.5, 0.7, 0.9] {
            let h = Hurst::new(hv).unwrap();
            assert!((kh_power_coeff(0.0, &h) - h.kappa_h()).abs() < 1e-13);
        }
    }

    #[test]
    fn apply_matches_closed_forms() {
        let grid = TimeGrid::new(2.0, 200).unwrap();
        for &hv in &[0.1, 0.3, 0.5, 0.7, 0.9] {
            let h = Hurst::new(hv).unwrap();
            let one = GridFunction::from_fn(grid, |_| 1.0).unwrap();
            let lin = GridFunction::from_fn(grid, |t| t).unwrap();
            let k1 = apply_kh(&one, &h).unwrap();
            let kt = apply_kh(&lin, &h).unwrap();
            for (i, t) in grid.nodes().into_iter().enumerate().skip(1) {
                let e1 = h.kappa_h() * t.powf(hv + 0.5);
                let et = kh_power_coeff(1.0, &h) * t.powf(hv + 1.5);
                assert!(((k1.values()[i] - e1) / e1).abs() < 1e-11, "H={hv} i={i}");
                assert!(((kt.values()[i] - et) / et).abs() < 1e-10, "H={hv} i={i}");
            }
        }
    }

    #[test]
    fn apply_sin_matches_series_route() {
        let h = Hurst::new(0.3).unwrap();
        let grid = TimeGrid::new(1.0, 400).unwrap();
        let f = GridFunction::from_fn(grid, f64::sin).unwrap();
        let out = apply_kh(&f, &h).unwrap();
        let err = grid
            .nodes()
            .into_iter()
            .enumerate()
            .map(|(i, t)| (out.values()[i] - kh_sin(t, &h)).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-5, "max error {err}");
    }

    #[test]
    fn inverse_maps_kappa_power_to_one() {
        let grid = TimeGrid::new(1.0, 400).unwrap();
        for &hv in &[0.1, 0.25, 0.5, 0.6, 0.75, 0.9] {
            let h = Hurst::new(hv).unwrap();
            let run = GridFunction::from_fn(grid, |t| h.kappa_h() * t.powf(hv + 0.5)).unwrap();
            let out = invert_kh(&run, &h).unwrap();
            let skip = grid.n() / 50;
            let err = out.values()[skip..].iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
            assert!(err < 5e-3, "H={hv}: {err}");
        }
    }

    #[test]
    fn inverse_of_power_images_from_integrand() {
        // h' = C(μ)(μ+H+1/2) t^(μ+H-1/2) is the derivative of K_H t^μ
        let grid = TimeGrid::new(1.5, 300).unwrap();
        for &hv in &[0.2, 0.5, 0.7, 0.9] {
            let h = Hurst::new(hv).unwrap();
            for &mu in &[1.0, 2.0] {
                let c = kh_power_coeff(mu, &h) * (mu + hv + 0.5);
                let hp = GridFunction::from_fn(grid, |t| c * t.powf(mu + hv - 0.5)).unwrap();
                let out = invert_kh_integrand(&hp, &h).unwrap();
                for (i, t) in grid.nodes().into_iter().enumerate().skip(6) {
                    let e = t.powf(mu);
                    assert!((out.values()[i] - e).abs() < 2e-3 * e.max(0.1), "H={hv} mu={mu} t={t}");
                }
            }
        }
    }

    #[test]
    fn half_is_differentiation() {
        let grid = TimeGrid::new(1.0, 100).unwrap();
        let h = Hurst::new(0.5).unwrap();
        let run = GridFunction::from_fn(grid, |t| 0.5 * t * t).unwrap();
        let out = invert_kh(&run, &h).unwrap();
        for (i, t) in grid.nodes().into_iter().enumerate() {
            assert!((out.values()[i] - t).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_rejects_nonzero_origin_and_large_h() {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let h = Hurst::new(0.3).unwrap();
        let run = GridFunction::from_fn(grid, |t| 1.0 + t).unwrap();
        assert!(matches!(invert_kh(&run, &h), Err(Error::Domain(_))));
        let big = Hurst::new(0.97).unwrap();
        let run = GridFunction::from_fn(grid, |t| t).unwrap();
        assert!(matches!(invert_kh(&run, &big), Err(Error::Unsupported(_))));
    }

    #[test]
    fn round_trip_converges() {
        let fs: [fn(f64) -> f64; 4] = [|_| 1.0, |t| t, f64::sin, f64::exp];
        for &hv in &[0.25, 0.75] {
            let h = Hurst::new(hv).unwrap();
            let mut errs = Vec::new();
            for &n in &[200usize, 400] {
                let grid = TimeGrid::new(1.0, n).unwrap();
                let op = KhOperator::new(&grid, &h);
                let inv = KhInverse::new(&grid, &h).unwrap();
                let mut worst = 0.0f64;
                for f in fs {
                    let fv: Vec<f64> = grid.nodes().into_iter().map(f).collect();
                    let back = inv.apply_running(&op.apply(&fv));
                    for i in n / 50..=n {
                        worst = worst.max((back[i] - fv[i]).abs());
                    }
                }
                errs.push(worst);
            }
            assert!(errs[0] < 1e-2, "H={hv}: {errs:?}");
            assert!(errs[1] < errs[0], "H={hv}: {errs:?}");
        }
    }

    #[test]
    fn rl_integral_of_powers() {
        let grid = TimeGrid::new(1.0, 100).unwrap();
        let f = GridFunction::from_fn(grid, |t| t).unwrap();
        for &a in &[0.2, 0.5, 1.0] {
            let out = rl_integral(&f, a).unwrap();
            for (i, t) in grid.nodes().into_iter().enumerate() {
                let e = t.powf(1.0 + a) / g(2.0 + a).unwrap();
                assert!((out.values()[i] - e).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn weyl_derivative_inverts_rl_integral() {
        let grid = TimeGrid::new(1.0, 400).unwrap();
        let f = GridFunction::from_fn(grid, |t| (2.0 * t).cos()).unwrap();
        for &a in &[0.2, 0.45, 0.7] {
            let back = weyl_derivative(&rl_integral(&f, a).unwrap(), a).unwrap();
            for i in 20..=grid.n() {
                assert!((back.values()[i] - f.values()[i]).abs() < 5e-3, "a={a} i={i}");
            }
        }
        // D^a t = t^(1-a)/Γ(2-a), exact for linear data
        let lin = GridFunction::from_fn(grid, |t| t).unwrap();
        let d = weyl_derivative(&lin, 0.3).unwrap();
        for (i, t) in grid.nodes().into_iter().enumerate().skip(1) {
            assert!((d.values()[i] - t.powf(0.7) / g(1.7).unwrap()).abs() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn rl_composition(a in 0.05f64..0.6, b in 0.05f64..0.4) {
            let grid = TimeGrid::new(1.0, 200).unwrap();
            let f = GridFunction::from_fn(grid, |t| t * (1.0 + (3.0 * t).sin())).unwrap();
            let ab = rl_integral(&rl_integral(&f, b).unwrap(), a).unwrap();
            let direct = rl_integral(&f, a + b).unwrap();
            for i in 0..=grid.n() {
                prop_assert!((ab.values()[i] - direct.values()[i]).abs() < 1e-4);
            }
        }

        #[test]
        fn rl_nonnegative(a in 0.05f64..1.0, seed in 0u64..1000) {
            let grid = TimeGrid::new(1.0, 60).unwrap();
            let vals: Vec<f64> = (0..=60).map(|i| (((i as u64 * 2654435761 + seed) % 97) as f64) / 97.0).collect();
            let f = GridFunction::new(grid, vals).unwrap();
            let out = rl_integral(&f, a).unwrap();
            for i in 0..=60 {
                prop_assert!(out.values()[i] >= -1e-15);
            }
        }

        #[test]
        fn rl_nondecreasing_for_nondecreasing_data(a in 0.05f64..1.0, seed in 0u64..1000) {
            let grid = TimeGrid::new(1.0, 60).unwrap();
            let mut acc = 0.0;
            let vals: Vec<f64> = (0..=60)
                .map(|i| {
                    acc += (((i as u64 * 2654435761 + seed) % 97) as f64) / 97.0;
                    acc
                })
                .collect();
            let f = GridFunction::new(grid, vals).unwrap();
            let out = rl_integral(&f, a).unwrap();
            for i in 1..=60 {
                prop_assert!(out.values()[i] >= out.values()[i - 1] - 1e-14);
            }
        }
    }
}
