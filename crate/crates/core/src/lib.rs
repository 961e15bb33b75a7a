//! Density approximation for a two-dimensional system driven by a Brownian
//! motion and a correlated fractional Brownian motion.
//!
//! The model is
//!
//! ```text
//! X_t = x0 + rho B_t + sqrt(1 - rho^2) W_t + int_0^t h1(s, X_s, Y_s) ds
//! Y_t = y0 + B^H_t + int_0^t h2(s, X_s, Y_s) ds
//! ```
//!
//! with `B^H_t = int_0^t K_H(t, s) dB_s`. The crate provides the Volterra
//! kernel and its operator, the Gaussian modal path of the pinned pair, the
//! small-time density approximation `phi * exp(omega_1)` built along that
//! path, and Monte Carlo estimators (forward Euler and bridge reweighting)
//! used to check it.
//!
//! Modules, bottom-up:
//!
//! * [`specialfn`]: gamma, beta, incomplete beta and Gauss `2F1`.
//! * [`quadrature`]: Gauss–Legendre / Gauss–Jacobi rules.
//! * [`fbm_kernel`]: the kernel `K_H`, its integrals and joint `(B, B^H)` sampling.
//! * [`fraccalc`]: fractional integrals/derivatives and the operator `K_H` with its inverse.
//! * [`driftspec`]: drift expression language and model specification.
//! * [`bridge`]: Gaussian conditioning, covariance blocks and modal paths.
//! * [`density`]: prefactor, drift functionals and the density approximation.
//! * [`mc`]: forward and bridge Monte Carlo.

pub mod bridge;
pub mod density;
pub mod driftspec;
mod error;
pub mod fbm_kernel;
pub mod fraccalc;
pub mod mc;
pub mod quadrature;
pub mod specialfn;

pub use error::{Error, Result};
