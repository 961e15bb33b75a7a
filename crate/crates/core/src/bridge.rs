//! Gaussian conditioning and the modal path of the pinned pair
//! `(x0 + B, y0 + B^H)` (drift removed), conditioned on its value at `T`.
//!
//! The modal path is the conditional mean
//! `(x_t, y_t)' = (x0, y0)' + Σ(t;T) Σ(T)⁻¹ (x - x0, y - y0)'`, written out
//! through the four coefficients `m11 .. m22`.

use crate::driftspec::ModelSpec;
use crate::fbm_kernel::{autocovariance, cholesky_with_jitter, kernel_partial_integral, TimeGrid};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector, Matrix2};
use std::collections::BTreeSet;

/// A Gaussian vector with some coordinates observed.
#[derive(Debug, Clone)]
pub struct GaussianConditioner {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub observed_indices: Vec<usize>,
    pub observed_values: DVector<f64>,
}

/// Regression of the free coordinates on the observed ones.
#[derive(Debug, Clone)]
pub struct ConditionalGain {
    /// Indices of the unobserved coordinates, ascending.
    pub free_indices: Vec<usize>,
    /// Σ_XY Σ_YY⁻¹, shape (free, observed).
    pub gain: DMatrix<f64>,
}

impl GaussianConditioner {
    fn validate(&self) -> Result<Vec<usize>> {
        let d = self.mean.len();
        if self.cov.nrows() != d || self.cov.ncols() != d {
            return Err(Error::param("cov", format!("expected {d}x{d} covariance")));
        }
        if self.observed_indices.len() != self.observed_values.len() {
            return Err(Error::param("observed_values", "length must match observed_indices"));
        }
        let set: BTreeSet<usize> = self.observed_indices.iter().copied().collect();
        if set.len() != self.observed_indices.len() || set.iter().any(|&i| i >= d) {
            return Err(Error::param("observed_indices", "must be distinct and in range"));
        }
        if set.is_empty() {
            return Err(Error::param("observed_indices", "at least one coordinate must be observed"));
        }
        Ok((0..d).filter(|i| !set.contains(i)).collect())
    }

    /// Σ_XY Σ_YY⁻¹ via a (jittered) Cholesky factor of Σ_YY.
    pub fn gain(&self) -> Result<ConditionalGain> {
        let free = self.validate()?;
        let obs = &self.observed_indices;
        let syy = self.cov.select_rows(obs).select_columns(obs);
        let (l, _) = cholesky_with_jitter(&syy)?;
        let sxy = self.cov.select_rows(&free).select_columns(obs);
        // gain' = Σ_YY⁻¹ Σ_YX
        let mut rhs = sxy.transpose();
        l.solve_lower_triangular_mut(&mut rhs);
        l.transpose().solve_upper_triangular_mut(&mut rhs);
        Ok(ConditionalGain {
            free_indices: free,
            gain: rhs.transpose(),
        })
    }
}

/// Conditional mean and covariance of the unobserved coordinates.
pub fn condition_gaussian(g: &GaussianConditioner) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let ConditionalGain { free_indices, gain } = g.gain()?;
    let obs = &g.observed_indices;
    let mu_x = g.mean.select_rows(&free_indices);
    let mu_y = g.mean.select_rows(obs);
    let mean = mu_x + &gain * (&g.observed_values - mu_y);
    let sxx = g.cov.select_rows(&free_indices).select_columns(&free_indices);
    let syx = g.cov.select_rows(obs).select_columns(&free_indices);
    let mut cov = sxx - &gain * syx;
    // symmetrise against rounding
    let c = cov.clone();
    cov = (c.clone() + c.transpose()) * 0.5;
    Ok((mean, cov))
}

/// Σ(T) and Σ(t;T) at every grid node.
#[derive(Debug, Clone)]
pub struct CovBlocks {
    /// Covariance of (x0 + B_T, y0 + B^H_T) with the correlated B.
    pub sigma_t: Matrix2<f64>,
    /// [[Cov(X_t,X_T), Cov(X_t,Y_T)], [Cov(Y_t,X_T), Cov(Y_t,Y_T)]] per node.
    pub sigma_tt: Vec<Matrix2<f64>>,
}

fn partial_integrals(model: &ModelSpec, grid: &TimeGrid) -> Result<Vec<f64>> {
    let t_end = model.horizon();
    grid.nodes()
        .into_iter()
        .map(|t| kernel_partial_integral(t.min(t_end), t_end, model.hurst()))
        .collect()
}

fn check_grid(model: &ModelSpec, grid: &TimeGrid) -> Result<()> {
    if (grid.horizon() - model.horizon()).abs() > 1e-12 * model.horizon() {
        return Err(Error::param(
            "grid",
            format!("grid horizon {} differs from model horizon {}", grid.horizon(), model.horizon()),
        ));
    }
    Ok(())
}

pub fn cov_blocks(model: &ModelSpec, grid: &TimeGrid) -> Result<CovBlocks> {
    check_grid(model, grid)?;
    let t_end = model.horizon();
    let h = model.h();
    let rho = model.rho();
    let rho_h = model.rho_h();
    let q = h + 0.5;
    let sigma_t = Matrix2::new(
        t_end,
        rho_h * t_end.powf(q),
        rho_h * t_end.powf(q),
        t_end.powf(2.0 * h),
    );
    let p = partial_integrals(model, grid)?;
    let sigma_tt = grid
        .nodes()
        .into_iter()
        .zip(p)
        .map(|(t, pt)| {
            Matrix2::new(
                t,
                rho * pt,
                rho_h * t.powf(q),
                autocovariance(t, t_end, model.hurst()),
            )
        })
        .collect();
    Ok(CovBlocks { sigma_t, sigma_tt })
}

/// The four modal-path coefficient arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalCoeffs {
    pub m11: Vec<f64>,
    pub m12: Vec<f64>,
    pub m21: Vec<f64>,
    pub m22: Vec<f64>,
}

/// With P(t) = ∫_0^t K_H(T,s) ds, q = H+1/2 and ρ̄_H² = 1 - ρ_H²:
///
/// ```text
/// m11 = (t/T - ρ ρ_H P/T^q) / ρ̄_H²
/// m12 = (-ρ_H t/T^q + ρ P/T^(2H)) / ρ̄_H²
/// m21 = ρ_H (t^q/T - R_H(t,T)/T^q) / ρ̄_H²
/// m22 = (-ρ_H² (t/T)^q + R_H(t,T)/T^(2H)) / ρ̄_H²
/// ```
pub fn modal_coeffs(model: &ModelSpec, grid: &TimeGrid) -> Result<ModalCoeffs> {
    check_grid(model, grid)?;
    let rbh2 = model.rho_bar_h_sq();
    if rbh2 <= 0.0 {
        return Err(Error::param("rho", "1 - rho_H^2 must be positive"));
    }
    let t_end = model.horizon();
    let h = model.h();
    let q = h + 0.5;
    let rho = model.rho();
    let rho_h = model.rho_h();
    let tq = t_end.powf(q);
    let t2h = t_end.powf(2.0 * h);
    let p = partial_integrals(model, grid)?;
    let n = grid.n();
    let mut c = ModalCoeffs {
        m11: Vec::with_capacity(n + 1),
        m12: Vec::with_capacity(n + 1),
        m21: Vec::with_capacity(n + 1),
        m22: Vec::with_capacity(n + 1),
    };
    for (t, pt) in grid.nodes().into_iter().zip(p) {
        let r = autocovariance(t, t_end, model.hurst());
        c.m11.push((t / t_end - rho * rho_h * pt / tq) / rbh2);
        c.m12.push((-rho_h * t / tq + rho * pt / t2h) / rbh2);
        c.m21.push(rho_h * (t.powf(q) / t_end - r / tq) / rbh2);
        c.m22.push((-rho_h * rho_h * (t / t_end).powf(q) + r / t2h) / rbh2);
    }
    Ok(c)
}

/// Conditional-mean path of the drift-free pair pinned at `endpoint` at time T.
#[derive(Debug, Clone)]
pub struct ModalPath {
    pub grid: TimeGrid,
    pub coeffs: ModalCoeffs,
    pub x_path: Vec<f64>,
    pub y_path: Vec<f64>,
    pub endpoint: (f64, f64),
}

pub fn modal_path(model: &ModelSpec, grid: &TimeGrid, endpoint: (f64, f64)) -> Result<ModalPath> {
    if !(endpoint.0.is_finite() && endpoint.1.is_finite()) {
        return Err(Error::param("endpoint", "must be finite"));
    }
    let coeffs = modal_coeffs(model, grid)?;
    let dx = endpoint.0 - model.x0();
    let dy = endpoint.1 - model.y0();
    let n = grid.n();
    let mut x_path = Vec::with_capacity(n + 1);
    let mut y_path = Vec::with_capacity(n + 1);
    for i in 0..=n {
        x_path.push(model.x0() + coeffs.m11[i] * dx + coeffs.m12[i] * dy);
        y_path.push(model.y0() + coeffs.m21[i] * dx + coeffs.m22[i] * dy);
    }
    Ok(ModalPath {
        grid: *grid,
        coeffs,
        x_path,
        y_path,
        endpoint,
    })
}
