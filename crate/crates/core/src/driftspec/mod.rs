//! Drift specification: the expression language, the model parameters and
//! advisory checks of the regularity assumptions on the drifts.

mod expr;

pub use expr::{eval_drift, parse_drift, BinOp, DriftExpr, Func, Node, Var, MAX_DEPTH};

use crate::fbm_kernel::Hurst;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

/// Structural class of the drift pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DriftClass {
    /// Neither drift depends on `(x, y)`.
    TimeOnly,
    /// Both drifts are affine in `(x, y)` with time-dependent coefficients.
    Linear,
    General,
}

/// Plain model parameters as they appear in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub hurst: f64,
    pub rho: f64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub y0: f64,
    pub horizon: f64,
    #[serde(default = "zero_drift")]
    pub h1: String,
    #[serde(default = "zero_drift")]
    pub h2: String,
    #[serde(default)]
    pub holder_gamma: Option<f64>,
}

fn zero_drift() -> String {
    "0".to_string()
}

impl ModelParams {
    pub fn build(&self) -> Result<ModelSpec> {
        ModelSpec::new(self)
    }
}

/// Validated model.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    hurst: Hurst,
    rho: f64,
    x0: f64,
    y0: f64,
    horizon: f64,
    h1: DriftExpr,
    h2: DriftExpr,
    holder_gamma: Option<f64>,
    drift_class: DriftClass,
    params: ModelParams,
}

/// Smallest admissible 1 - ρ_H².
pub const MIN_RHO_BAR_H_SQ: f64 = 1e-10;

impl ModelSpec {
    pub fn new(p: &ModelParams) -> Result<ModelSpec> {
        let hurst = Hurst::new(p.hurst)?;
        if !(p.rho.abs() < 1.0) {
            return Err(Error::param("rho", format!("must satisfy |rho| < 1, got {}", p.rho)));
        }
        if !(p.horizon > 0.0) || !p.horizon.is_finite() {
            return Err(Error::param("horizon", format!("must be positive, got {}", p.horizon)));
        }
        if !p.x0.is_finite() {
            return Err(Error::param("x0", "must be finite"));
        }
        if !p.y0.is_finite() {
            return Err(Error::param("y0", "must be finite"));
        }
        let h1 = parse_drift(&p.h1).map_err(|e| Error::param("h1", e.to_string()))?;
        let h2 = parse_drift(&p.h2).map_err(|e| Error::param("h2", e.to_string()))?;
        let drift_class = classify_pair(&h1, &h2);
        let rh = p.rho * hurst.kappa_h();
        if 1.0 - rh * rh < MIN_RHO_BAR_H_SQ {
            return Err(Error::param(
                "rho",
                format!("1 - (rho kappa_H)^2 = {:e} is below {MIN_RHO_BAR_H_SQ:e}", 1.0 - rh * rh),
            ));
        }
        if let Some(g) = p.holder_gamma {
            if !g.is_finite() || g <= 0.0 {
                return Err(Error::param("holder_gamma", format!("must be positive, got {g}")));
            }
        }
        if p.hurst > 0.5 && drift_class != DriftClass::TimeOnly {
            let lo = p.hurst - 0.5;
            match p.holder_gamma {
                Some(g) if g > lo && g < 0.5 => {}
                Some(g) => {
                    return Err(Error::param(
                        "holder_gamma",
                        format!("must lie in ({lo}, 0.5) for H = {}, got {g}", p.hurst),
                    ))
                }
                None => {
                    return Err(Error::param(
                        "holder_gamma",
                        format!("required in ({lo}, 0.5) when H > 1/2 and drifts depend on the state"),
                    ))
                }
            }
        }
        Ok(ModelSpec {
            hurst,
            rho: p.rho,
            x0: p.x0,
            y0: p.y0,
            horizon: p.horizon,
            h1,
            h2,
            holder_gamma: p.holder_gamma,
            drift_class,
            params: p.clone(),
        })
    }

    pub fn hurst(&self) -> &Hurst {
        &self.hurst
    }

    pub fn h(&self) -> f64 {
        self.hurst.h()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// sqrt(1 - rho^2).
    pub fn rho_bar(&self) -> f64 {
        (1.0 - self.rho * self.rho).sqrt()
    }

    /// rho_H = rho kappa_H = corr(B_T, B^H_T).
    pub fn rho_h(&self) -> f64 {
        self.rho * self.hurst.kappa_h()
    }

    /// 1 - rho_H^2.
    pub fn rho_bar_h_sq(&self) -> f64 {
        let r = self.rho_h();
        1.0 - r * r
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn y0(&self) -> f64 {
        self.y0
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn h1(&self) -> &DriftExpr {
        &self.h1
    }

    pub fn h2(&self) -> &DriftExpr {
        &self.h2
    }

    pub fn holder_gamma(&self) -> Option<f64> {
        self.holder_gamma
    }

    pub fn drift_class(&self) -> DriftClass {
        self.drift_class
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Copy with a different horizon.
    pub fn with_horizon(&self, horizon: f64) -> Result<ModelSpec> {
        let mut p = self.params.clone();
        p.horizon = horizon;
        ModelSpec::new(&p)
    }

    /// Stable text identifying the model, recorded with simulation output.
    pub fn fingerprint(&self) -> String {
        format!(
            "H={:?};rho={:?};x0={:?};y0={:?};T={:?};h1={};h2={}",
            self.hurst.h(),
            self.rho,
            self.x0,
            self.y0,
            self.horizon,
            self.h1,
            self.h2
        )
    }
}

/// Sampling box for the assumption checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleBox {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl SampleBox {
    /// [x0 ± 15 sqrt(T)] × [y0 ± 15 T^H].
    pub fn default_for(model: &ModelSpec) -> SampleBox {
        let sx = 15.0 * model.horizon.sqrt();
        let sy = 15.0 * model.horizon.powf(model.h());
        SampleBox {
            x: (model.x0 - sx, model.x0 + sx),
            y: (model.y0 - sy, model.y0 + sy),
        }
    }
}

/// Sampled regularity constants of the drifts; advisory only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub lipschitz_estimate: f64,
    pub linear_growth_estimate: f64,
    pub contraction_horizon: f64,
    pub violations: Vec<String>,
}

const SPACINGS: [f64; 5] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];

/// Estimate Lipschitz and linear-growth constants of `h1`, `h2` on `sample_box`
/// by difference quotients, and check the declared time-Hölder order of `h2`.
///
/// Base points are an 11 × 11 lattice over the box (which contains its
/// centre) plus `samples` uniform random points. The estimates are lower
/// bounds of the true constants; findings are reported, never enforced.
pub fn validate_assumptions(model: &ModelSpec, sample_box: &SampleBox, samples: usize) -> Result<AssumptionReport> {
    let bx = sample_box;
    if !(bx.x.0.is_finite() && bx.x.1.is_finite() && bx.y.0.is_finite() && bx.y.1.is_finite())
        || bx.x.0 > bx.x.1
        || bx.y.0 > bx.y.1
    {
        return Err(Error::param("sample_box", "bounds must be finite and ordered"));
    }
    let t_end = model.horizon;
    let mut rng = ChaCha20Rng::seed_from_u64(0x5eed_a55e);
    let mut points = Vec::new();
    for i in 0..11 {
        for j in 0..11 {
            let x = bx.x.0 + (bx.x.1 - bx.x.0) * i as f64 / 10.0;
            let y = bx.y.0 + (bx.y.1 - bx.y.0) * j as f64 / 10.0;
            points.push((t_end * ((i + j) % 11) as f64 / 10.0, x, y));
        }
    }
    for _ in 0..samples {
        let t = rng.random::<f64>() * t_end;
        let x = bx.x.0 + (bx.x.1 - bx.x.0) * rng.random::<f64>();
        let y = bx.y.0 + (bx.y.1 - bx.y.0) * rng.random::<f64>();
        points.push((t, x, y));
    }
    let width = (bx.x.1 - bx.x.0).max(bx.y.1 - bx.y.0).max(1e-12);
    let mut violations = Vec::new();
    let mut lip: f64 = 0.0;
    let mut growth: f64 = 0.0;
    for (name, h) in [("h1", &model.h1), ("h2", &model.h2)] {
        let mut per_spacing = [0.0f64; SPACINGS.len()];
        let mut domain_note = None;
        for &(t, x, y) in &points {
            let base = match h.eval(t, x, y) {
                Ok(v) => v,
                Err(e) => {
                    domain_note.get_or_insert(format!("{name} undefined at (t={t}, x={x}, y={y}): {e}"));
                    continue;
                }
            };
            growth = growth.max(base.abs() / (1.0 + x.abs() + y.abs()));
            let theta: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            let (dx, dy) = (theta.cos(), theta.sin());
            for (k, &s) in SPACINGS.iter().enumerate() {
                let d = s * width;
                if let Ok(v) = h.eval(t, x + d * dx, y + d * dy) {
                    let q = (v - base).abs() / (d * (dx.abs() + dy.abs()));
                    per_spacing[k] = per_spacing[k].max(q);
                }
                // axis-aligned probes catch kinks along the coordinate lines
                for (ex, ey) in [(d, 0.0), (0.0, d)] {
                    if let Ok(v) = h.eval(t, x + ex, y + ey) {
                        per_spacing[k] = per_spacing[k].max((v - base).abs() / d);
                    }
                }
            }
        }
        if let Some(note) = domain_note {
            violations.push(note);
        }
        lip = lip.max(per_spacing.iter().cloned().fold(0.0, f64::max));
        let coarse = per_spacing[0];
        let fine = per_spacing[SPACINGS.len() - 1];
        let growing = per_spacing.windows(2).all(|w| w[1] >= w[0]);
        if growing && fine > 3.0 * coarse.max(1e-300) && fine > 1e-12 {
            violations.push(format!(
                "{name}: difference quotients grow as the spacing shrinks ({coarse:.3e} -> {fine:.3e}); not Lipschitz in (x, y) on the box"
            ));
        }
    }
    let contraction_horizon = if lip > 0.0 { 1.0 / (2.0 * lip) } else { f64::INFINITY };
    if model.drift_class != DriftClass::TimeOnly && t_end >= contraction_horizon {
        violations.push(format!(
            "horizon T = {t_end} is not below the contraction horizon 1/(2L) = {contraction_horizon:.4e}"
        ));
    }
    if model.h() > 0.5 && model.drift_class != DriftClass::TimeOnly {
        match model.holder_gamma {
            None => violations.push("holder_gamma not declared although H > 1/2".into()),
            Some(g) => {
                let mut per_spacing = [0.0f64; SPACINGS.len()];
                for &(t, x, y) in &points {
                    for (k, &s) in SPACINGS.iter().enumerate() {
                        let d = s * t_end;
                        let (a, b) = if t + d <= t_end { (t, t + d) } else { (t - d, t) };
                        if let (Ok(u), Ok(v)) = (model.h2.eval(a, x, y), model.h2.eval(b, x, y)) {
                            per_spacing[k] = per_spacing[k].max((v - u).abs() / d.powf(g));
                        }
                    }
                }
                let coarse = per_spacing[0];
                let fine = per_spacing[SPACINGS.len() - 1];
                if per_spacing.windows(2).all(|w| w[1] >= w[0]) && fine > 3.0 * coarse.max(1e-300) && fine > 1e-12 {
                    violations.push(format!(
                        "h2: time-Hölder quotients of order {g} grow as the spacing shrinks ({coarse:.3e} -> {fine:.3e})"
                    ));
                }
            }
        }
    }
    Ok(AssumptionReport {
        lipschitz_estimate: lip,
        linear_growth_estimate: growth,
        contraction_horizon,
        violations,
    })
}

/// Classify the drift pair of a model.
pub fn classify_drift(model: &ModelSpec) -> DriftClass {
    classify_pair(&model.h1, &model.h2)
}

fn classify_pair(h1: &DriftExpr, h2: &DriftExpr) -> DriftClass {
    if !h1.mentions_state() && !h2.mentions_state() {
        DriftClass::TimeOnly
    } else if state_degree(h1.root()).is_some() && state_degree(h2.root()).is_some() {
        DriftClass::Linear
    } else {
        DriftClass::General
    }
}

/// Polynomial degree in (x, y) when it is at most 1 structurally, else None.
fn state_degree(node: &Node) -> Option<u8> {
    let deg = match node {
        Node::Num(_) | Node::Var(Var::T) => 0,
        Node::Var(_) => 1,
        Node::Neg(a) => state_degree(a)?,
        Node::Call(_, a) => {
            if state_degree(a)? == 0 {
                0
            } else {
                return None;
            }
        }
        Node::Bin(op, a, b) => {
            let (da, db) = (state_degree(a)?, state_degree(b)?);
            match op {
                BinOp::Add | BinOp::Sub => da.max(db),
                BinOp::Mul => da + db,
                BinOp::Div => {
                    if db != 0 {
                        return None;
                    }
                    da
                }
                BinOp::Pow => {
                    if da == 0 && db == 0 {
                        0
                    } else if db == 0 && matches!(**b, Node::Num(v) if v == 1.0) {
                        da
                    } else {
                        return None;
                    }
                }
            }
        }
    };
    (deg <= 1).then_some(deg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(h: f64, h1: &str, h2: &str, gamma: Option<f64>) -> Result<ModelSpec> {
        ModelParams {
            hurst: h,
            rho: 0.3,
            x0: 0.0,
            y0: 0.0,
            horizon: 0.5,
            h1: h1.into(),
            h2: h2.into(),
            holder_gamma: gamma,
        }
        .build()
    }

    #[test]
    fn classification_examples() {
        assert_eq!(model(0.3, "sin(t)", "2", None).unwrap().drift_class(), DriftClass::TimeOnly);
        assert_eq!(model(0.3, "t*x + y + 1", "x - 2*y", None).unwrap().drift_class(), DriftClass::Linear);
        assert_eq!(model(0.3, "sin(x)", "0", None).unwrap().drift_class(), DriftClass::General);
        assert_eq!(model(0.3, "x*y", "0", None).unwrap().drift_class(), DriftClass::General);
        assert_eq!(model(0.3, "x/t", "exp(t)*y", None).unwrap().drift_class(), DriftClass::Linear);
        assert_eq!(model(0.3, "1/x", "0", None).unwrap().drift_class(), DriftClass::General);
    }

    #[test]
    fn time_only_is_constant_in_state() {
        let m = model(0.3, "sin(t) + t^2", "exp(-t)", None).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..50 {
            let t: f64 = rng.random();
            let a = m.h1().eval(t, rng.random::<f64>() * 10.0, -5.0).unwrap();
            let b = m.h1().eval(t, -3.0, rng.random::<f64>() * 7.0).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn invariants_enforced() {
        assert!(matches!(model(0.7, "x", "0", None), Err(Error::Parameter { .. })));
        assert!(matches!(model(0.7, "x", "0", Some(0.1)), Err(Error::Parameter { .. })));
        assert!(model(0.7, "x", "0", Some(0.3)).is_ok());
        assert!(model(0.7, "t", "1", None).is_ok());
        let bad_rho = ModelParams {
            hurst: 0.5,
            rho: 1.0,
            x0: 0.0,
            y0: 0.0,
            horizon: 1.0,
            h1: "0".into(),
            h2: "0".into(),
            holder_gamma: None,
        };
        assert!(bad_rho.build().is_err());
        match model(0.3, "z", "0", None) {
            Err(Error::Parameter { name, .. }) => assert_eq!(name, "h1"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn assumption_report_for_smooth_drifts() {
        let m = model(0.3, "0.5*sin(x)", "0.5*cos(y)", None).unwrap();
        let r = validate_assumptions(&m, &SampleBox::default_for(&m), 200).unwrap();
        assert!(r.lipschitz_estimate > 0.45 && r.lipschitz_estimate <= 0.5 + 1e-6, "{r:?}");
        assert!((r.contraction_horizon - 1.0 / (2.0 * r.lipschitz_estimate)).abs() < 1e-12);
        assert!(r.violations.is_empty(), "{:?}", r.violations);
    }

    #[test]
    fn assumption_report_flags_square_root() {
        let m = model(0.3, "0", "sqrt(abs(y))", None).unwrap();
        let r = validate_assumptions(&m, &SampleBox::default_for(&m), 100).unwrap();
        assert!(r.violations.iter().any(|v| v.contains("not Lipschitz")), "{:?}", r.violations);
    }

    #[test]
    fn contraction_horizon_warning() {
        let m = model(0.3, "3*x", "0", None).unwrap();
        let r = validate_assumptions(&m, &SampleBox::default_for(&m), 50).unwrap();
        assert!(r.violations.iter().any(|v| v.contains("contraction horizon")), "{:?}", r.violations);
    }
}
