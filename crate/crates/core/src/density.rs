//! Gaussian prefactor, drift functionals along the modal path and the
//! modal-path density approximation `p̂ = φ · exp(ω₁)`.

use crate::bridge::{modal_path, ModalPath};
use crate::driftspec::{DriftClass, ModelSpec};
use crate::fbm_kernel::TimeGrid;
use crate::fraccalc::{GridFunction, KhInverse};
use crate::{Error, Result};
use serde::Serialize;
use std::f64::consts::PI;

/// Density of the drift-free pair (X_T, Y_T) at displacement (dx, dy) from the start.
pub fn gaussian_prefactor(dx: f64, dy: f64, model: &ModelSpec) -> Result<f64> {
    let t = model.horizon();
    let h = model.h();
    let rb2 = model.rho_bar_h_sq();
    if !(rb2 > 0.0) {
        return Err(Error::param("rho", "1 - rho_H^2 must be positive"));
    }
    if !(t > 0.0) {
        return Err(Error::param("horizon", "must be positive"));
    }
    let rh = model.rho_h();
    let u = dx / t.sqrt();
    let v = dy / t.powf(h);
    let q = (u * u - 2.0 * rh * u * v + v * v) / (2.0 * rb2);
    Ok((-q).exp() / (2.0 * PI * t.powf(h + 0.5) * rb2.sqrt()))
}

/// Drifts along the modal path and their transforms, with time integrals over [0, T].
#[derive(Debug, Clone)]
pub struct DriftFunctionals {
    pub bar_h1: GridFunction,
    pub bar_h2: GridFunction,
    pub hat_h1: GridFunction,
    pub hat_h2: GridFunction,
    pub int_hat_h1: f64,
    pub int_hat_h2: f64,
    pub int_bar_h2: f64,
    pub int_hat_h1_sq: f64,
    pub int_hat_h2_sq: f64,
}

fn trapezoid(dt: f64, v: &[f64]) -> f64 {
    let n = v.len() - 1;
    let inner: f64 = v[1..n].iter().sum();
    dt * (inner + 0.5 * (v[0] + v[n]))
}

pub fn drift_functionals(model: &ModelSpec, path: &ModalPath) -> Result<DriftFunctionals> {
    let grid = path.grid;
    let nodes = grid.nodes();
    let mut bar1 = Vec::with_capacity(nodes.len());
    let mut bar2 = Vec::with_capacity(nodes.len());
    for (i, &t) in nodes.iter().enumerate() {
        let (x, y) = (path.x_path[i], path.y_path[i]);
        bar1.push(model.h1().eval(t, x, y)?);
        bar2.push(model.h2().eval(t, x, y)?);
    }
    let inv = KhInverse::new(&grid, model.hurst())?;
    let hat2 = inv.apply_integrand(&bar2);
    let (rho, rho_bar) = (model.rho(), model.rho_bar());
    let hat1: Vec<f64> = bar1.iter().zip(&hat2).map(|(b, h)| (b - rho * h) / rho_bar).collect();
    let dt = grid.dt();
    let sq = |v: &[f64]| v.iter().map(|x| x * x).collect::<Vec<_>>();
    Ok(DriftFunctionals {
        int_hat_h1: trapezoid(dt, &hat1),
        int_hat_h2: trapezoid(dt, &hat2),
        int_bar_h2: trapezoid(dt, &bar2),
        int_hat_h1_sq: trapezoid(dt, &sq(&hat1)),
        int_hat_h2_sq: trapezoid(dt, &sq(&hat2)),
        bar_h1: GridFunction::new(grid, bar1)?,
        bar_h2: GridFunction::new(grid, bar2)?,
        hat_h1: GridFunction::new(grid, hat1)?,
        hat_h2: GridFunction::new(grid, hat2)?,
    })
}

/// u = D'1 and the pieces shared by both forms of ω.
struct OmegaParts {
    a: f64,
    u2: f64,
    dx: f64,
    dy: f64,
}

fn omega_parts(f: &DriftFunctionals, model: &ModelSpec, endpoint: (f64, f64)) -> OmegaParts {
    let t = model.horizon();
    let th = t.powf(model.h());
    let u1 = model.rho_bar() * f.int_hat_h1 + model.rho() * f.int_hat_h2;
    let u2 = f.int_bar_h2;
    OmegaParts {
        a: u1 / t.sqrt() - model.rho_h() * u2 / th,
        u2,
        dx: endpoint.0 - model.x0(),
        dy: endpoint.1 - model.y0(),
    }
}

/// The part of ω linear in the displacement.
pub fn omega_1(f: &DriftFunctionals, model: &ModelSpec, endpoint: (f64, f64)) -> f64 {
    let p = omega_parts(f, model, endpoint);
    let t = model.horizon();
    let th = t.powf(model.h());
    let rb2 = model.rho_bar_h_sq();
    (p.a * (p.dx / t.sqrt()) - model.rho_h() * p.a * (p.dy / th) + rb2 * (p.u2 / th) * (p.dy / th)) / rb2
}

/// 1'DΣ⁻¹Δ - ½ 1'DΣ⁻¹D'1.
pub fn omega_full(f: &DriftFunctionals, model: &ModelSpec, endpoint: (f64, f64)) -> f64 {
    let p = omega_parts(f, model, endpoint);
    let th = model.horizon().powf(model.h());
    let rb2 = model.rho_bar_h_sq();
    let c = rb2.sqrt() * p.u2 / th;
    omega_1(f, model, endpoint) - 0.5 * (p.a * p.a + c * c) / rb2
}

/// Order exponent of the remainder; `f64::INFINITY` when the representation is exact.
pub fn alpha_exponent(model: &ModelSpec) -> Result<f64> {
    let h = model.h();
    match model.drift_class() {
        DriftClass::TimeOnly => Ok(f64::INFINITY),
        DriftClass::Linear => Ok(if h <= 0.5 { 2.0 * h } else { 2.0 - 2.0 * h }),
        DriftClass::General => {
            if h <= 0.5 {
                Ok(2.0 * h)
            } else if h < 0.75 {
                Ok(3.0 - 4.0 * h)
            } else {
                Err(Error::Unsupported(format!(
                    "the expansion for general drifts needs H < 3/4, got H = {h}"
                )))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityApprox {
    pub phi: f64,
    pub omega_full: f64,
    pub omega_1: f64,
    /// `None` stands for an exact representation (time-only drifts).
    pub alpha: Option<f64>,
    pub p_hat: f64,
    pub p_hat_full: f64,
    pub drift_class: DriftClass,
}

pub fn approx_density(model: &ModelSpec, endpoint: (f64, f64), n: usize) -> Result<DensityApprox> {
    let alpha = alpha_exponent(model)?;
    let grid = TimeGrid::new(model.horizon(), n)?;
    let path = modal_path(model, &grid, endpoint)?;
    let f = drift_functionals(model, &path)?;
    let phi = gaussian_prefactor(endpoint.0 - model.x0(), endpoint.1 - model.y0(), model)?;
    let w1 = omega_1(&f, model, endpoint);
    let wf = omega_full(&f, model, endpoint);
    Ok(DensityApprox {
        phi,
        omega_full: wf,
        omega_1: w1,
        alpha: alpha.is_finite().then_some(alpha),
        p_hat: phi * w1.exp(),
        p_hat_full: phi * wf.exp(),
        drift_class: model.drift_class(),
    })
}
