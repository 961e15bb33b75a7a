//! The acceptance criteria as runnable checks, shared by the `validate`
//! subcommand and the `acceptance` test target.
//!
//! Every check runs at its full tolerance. The quick scale runs the cheap
//! checks only and marks the Monte Carlo and large-grid ones as skipped.

use crate::commands::{self, figure_grid, figure_grid_artifacts, FigureCurve};
use crate::config::{BridgeBlock, KernelBlock, SimulateBlock};
use crate::output::parse_csv;
use modalbridge::bridge::{condition_gaussian, modal_path, GaussianConditioner};
use modalbridge::density::approx_density;
use modalbridge::driftspec::{ModelParams, ModelSpec};
use modalbridge::fbm_kernel::{
    kernel_partial_integral_quadrature, kernel_total_integral, Hurst, TimeGrid,
};
use modalbridge::fraccalc::{KhInverse, KhOperator};
use modalbridge::mc::{estimate_density_at, simulate_forward, Estimator, SimConfig};
use modalbridge::quadrature::GaussRule;
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Full,
    Quick,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub scale: Scale,
    /// Multiplies the cached κ_H used by criterion 1. Fault injection only.
    pub kappa_fault: Option<f64>,
}

impl Options {
    pub fn full() -> Options {
        Options {
            scale: Scale::Full,
            kappa_fault: None,
        }
    }

    pub fn quick() -> Options {
        Options {
            scale: Scale::Quick,
            kappa_fault: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
    pub seconds: f64,
    pub time_limit_seconds: f64,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }

    /// One line for logs.
    pub fn line(&self) -> String {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        };
        format!(
            "criterion {:>2} [{tag}] {} ({:.1} s of {:.0} s): {}",
            self.id, self.name, self.seconds, self.time_limit_seconds, self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub scale: Scale,
    pub passed: bool,
    pub criteria: Vec<CriterionReport>,
}

pub const CRITERIA: [(u8, &str, f64); 11] = [
    (1, "kernel integral identity", 10.0),
    (2, "kernel form equivalence", 30.0),
    (3, "operator round trip", 60.0),
    (4, "modal path structure", 5.0),
    (5, "conditional Gaussian", 30.0),
    (6, "time-only exactness", 10.0),
    (7, "forward Monte Carlo vs prefactor", 180.0),
    (8, "bridge Monte Carlo vs exact", 300.0),
    (9, "small-time trend", 900.0),
    (10, "modal path figure grid", 10.0),
    (11, "determinism", 60.0),
];

const QUICK: [u8; 7] = [1, 2, 4, 5, 6, 10, 11];

/// Outcome of a check body: pass flag and a one-line summary.
type Outcome = Result<(bool, String), String>;

pub fn run_criterion(id: u8, opts: &Options) -> CriterionReport {
    let &(_, name, limit) = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .unwrap_or_else(|| panic!("no criterion {id}"));
    if opts.scale == Scale::Quick && !QUICK.contains(&id) {
        return CriterionReport {
            id,
            name,
            status: Status::Skipped,
            detail: "not part of the quick scale".into(),
            seconds: 0.0,
            time_limit_seconds: limit,
        };
    }
    let start = Instant::now();
    let outcome = match id {
        1 => kernel_identity(opts),
        2 => kernel_forms(),
        3 => round_trip(),
        4 => modal_structure(),
        5 => conditional_gaussian(),
        6 => time_only_exactness(),
        7 => forward_mc(),
        8 => bridge_vs_exact(),
        9 => small_time_trend(),
        10 => figure_checks(),
        11 => determinism(),
        _ => unreachable!(),
    };
    let elapsed = start.elapsed();
    let (mut ok, mut detail) = match outcome {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    if elapsed > Duration::from_secs_f64(limit) {
        ok = false;
        detail.push_str("; over the time limit");
    }
    CriterionReport {
        id,
        name,
        status: if ok { Status::Pass } else { Status::Fail },
        detail,
        seconds: elapsed.as_secs_f64(),
        time_limit_seconds: limit,
    }
}

pub fn run_all(opts: &Options) -> ValidationReport {
    let criteria: Vec<CriterionReport> = CRITERIA.iter().map(|c| run_criterion(c.0, opts)).collect();
    ValidationReport {
        scale: opts.scale,
        passed: criteria.iter().all(CriterionReport::passed),
        criteria,
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

const HURST_SET: [f64; 9] = [0.05, 0.1, 0.25, 0.4, 0.5, 0.6, 0.7, 0.75, 0.9];

fn model(hurst: f64, rho: f64, horizon: f64, h1: &str, h2: &str, x0: f64, y0: f64) -> Result<ModelSpec, String> {
    ModelParams {
        hurst,
        rho,
        x0,
        y0,
        horizon,
        h1: h1.into(),
        h2: h2.into(),
        holder_gamma: (hurst > 0.5).then_some(0.5 * hurst),
    }
    .build()
    .map_err(err)
}

fn kernel_identity(opts: &Options) -> Outcome {
    let mut worst = 0.0f64;
    let mut at = (0.0, 0.0);
    for &h in &HURST_SET {
        let mut hurst = Hurst::new(h).map_err(err)?;
        if let Some(f) = opts.kappa_fault {
            hurst = hurst.with_kappa_override(hurst.kappa_h() * f);
        }
        for &t in &[0.1, 1.0, 2.0] {
            let q = kernel_partial_integral_quadrature(t, t, &hurst).map_err(err)?;
            let e = kernel_total_integral(t, &hurst);
            let rel = (q - e).abs() / e.abs();
            if !(rel <= worst) {
                worst = rel;
                at = (h, t);
            }
        }
    }
    Ok((
        worst <= 1e-6,
        format!("max relative error {worst:.2e} (H = {}, t = {}), tolerance 1e-6", at.0, at.1),
    ))
}

fn kernel_forms() -> Outcome {
    let mut worst = 0.0f64;
    for &h in &HURST_SET {
        let csv = commands::kernel_csv(&KernelBlock {
            hurst: h,
            t_max: 2.0,
            n_t: 20,
            n_s: 20,
        })
        .map_err(err)?;
        let (_, rows) = parse_csv(&csv).ok_or("unparseable kernel table")?;
        if rows.len() != 400 {
            return Ok((false, format!("{} rows for H = {h}", rows.len())));
        }
        for r in rows {
            if !(r[4] <= worst) {
                worst = r[4];
            }
        }
    }
    Ok((worst <= 1e-8, format!("max |K_hyp - K_alt| / |K_hyp| = {worst:.2e}, tolerance 1e-8")))
}

/// Worst error of inverse(apply(f)) - f over nodes past the first 2% of [0, 1].
fn round_trip_errors(h: f64, n: usize, fs: &[fn(f64) -> f64]) -> Result<Vec<f64>, String> {
    let hurst = Hurst::new(h).map_err(err)?;
    let grid = TimeGrid::new(1.0, n).map_err(err)?;
    let op = KhOperator::new(&grid, &hurst);
    let inv = KhInverse::new(&grid, &hurst).map_err(err)?;
    let nodes = grid.nodes();
    Ok(fs
        .iter()
        .map(|f| {
            let fv: Vec<f64> = nodes.iter().map(|&t| f(t)).collect();
            let back = inv.apply_running(&op.apply(&fv));
            (n / 50..=n).map(|i| (back[i] - fv[i]).abs()).fold(0.0, f64::max)
        })
        .collect())
}

fn round_trip() -> Outcome {
    let fs: [fn(f64) -> f64; 4] = [|_| 1.0, |t| t, f64::sin, f64::exp];
    let names = ["1", "t", "sin t", "e^t"];
    let mut ok = true;
    let mut parts = Vec::new();
    for &h in &[0.25, 0.5, 0.75] {
        let coarse = round_trip_errors(h, 2000, &fs)?;
        let fine = round_trip_errors(h, 4000, &fs)?;
        for k in 0..fs.len() {
            let (a, b) = (coarse[k], fine[k]);
            // at roundoff level there is nothing left to improve
            let improves = a / b >= 1.5 || (a <= 1e-10 && b <= 1e-10);
            ok &= a <= 1e-3 && improves;
            parts.push(format!("H={h} f={}: {a:.1e}->{b:.1e}", names[k]));
        }
    }
    Ok((ok, parts.join(", ")))
}

fn modal_structure() -> Outcome {
    let mut pin = 0.0f64;
    let mut straight = 0.0f64;
    for &h in &[0.01, 0.25, 0.5, 0.75] {
        for &rho in &[0.0, 0.7, -0.9] {
            let m = model(h, rho, 0.8, "0", "0", 0.3, -0.2)?;
            let grid = TimeGrid::new(0.8, 200).map_err(err)?;
            let end = (1.1, 0.9);
            let p = modal_path(&m, &grid, end).map_err(err)?;
            pin = pin.max((p.x_path[200] - end.0).abs()).max((p.y_path[200] - end.1).abs());
            if h == 0.5 {
                for (i, t) in grid.nodes().into_iter().enumerate() {
                    let s = t / 0.8;
                    straight = straight
                        .max((p.x_path[i] - (0.3 + s * 0.8)).abs())
                        .max((p.y_path[i] - (-0.2 + s * 1.1)).abs());
                }
            }
        }
    }
    // rho = 0: x ignores the y target and the cross coefficients vanish
    let mut decoupled = true;
    for &h in &[0.01, 0.3, 0.75] {
        let m = model(h, 0.0, 1.0, "0", "0", 0.0, 0.0)?;
        let grid = TimeGrid::new(1.0, 100).map_err(err)?;
        let a = modal_path(&m, &grid, (1.0, 1.0)).map_err(err)?;
        let b = modal_path(&m, &grid, (1.0, -3.0)).map_err(err)?;
        decoupled &= a.x_path == b.x_path;
        decoupled &= a.coeffs.m12.iter().chain(&a.coeffs.m21).all(|&v| v == 0.0);
    }
    let m = model(0.01, 0.0, 1.0, "0", "0", 0.0, 0.0)?;
    let p = modal_path(&m, &TimeGrid::new(1.0, 200).map_err(err)?, (1.0, 1.0)).map_err(err)?;
    let jump = p.y_path[10];
    let ok = pin <= 1e-10 && straight <= 1e-12 && decoupled && jump > 0.45 && jump < 0.55;
    Ok((
        ok,
        format!("pinning {pin:.1e}, H=1/2 straightness {straight:.1e}, rho=0 decoupled {decoupled}, H=0.01 y(0.05) = {jump:.4}"),
    ))
}

fn normal(rng: &mut ChaCha20Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn conditional_gaussian() -> Outcome {
    // analytic bivariate case
    let (m0, m1, s11, s12, s22, v) = (0.3, -1.2, 2.0, 0.7, 1.5, 0.4);
    let g = GaussianConditioner {
        mean: DVector::from_vec(vec![m0, m1]),
        cov: DMatrix::from_row_slice(2, 2, &[s11, s12, s12, s22]),
        observed_indices: vec![1],
        observed_values: DVector::from_vec(vec![v]),
    };
    let (cm, cc) = condition_gaussian(&g).map_err(err)?;
    let exact_err = (cm[0] - (m0 + s12 / s22 * (v - m1)))
        .abs()
        .max((cc[(0, 0)] - (s11 - s12 * s12 / s22)).abs());

    // random 6x6 against least-squares regression on samples
    let dim = 6;
    let mut rng = ChaCha20Rng::seed_from_u64(0x6a55);
    let a = DMatrix::from_fn(dim, dim, |_, _| normal(&mut rng));
    let cov = &a * a.transpose() + DMatrix::identity(dim, dim) * 0.5;
    let mean = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
    let obs = [1usize, 4];
    let obs_vals: Vec<f64> = obs
        .iter()
        .zip([0.7, -0.4])
        .map(|(&i, z)| mean[i] + z * cov[(i, i)].sqrt())
        .collect();
    let g = GaussianConditioner {
        mean: mean.clone(),
        cov: cov.clone(),
        observed_indices: obs.to_vec(),
        observed_values: DVector::from_vec(obs_vals.clone()),
    };
    let (cm, cc) = condition_gaussian(&g).map_err(err)?;
    let free: Vec<usize> = (0..dim).filter(|i| !obs.contains(i)).collect();

    let l = cov.clone().cholesky().ok_or("test covariance not positive definite")?.l();
    let n = 1_000_000usize;
    let mut xtx = Matrix3::<f64>::zeros();
    let mut xty = vec![Vector3::<f64>::zeros(); free.len()];
    let mut yy = vec![0.0; free.len()];
    let mut z = DVector::zeros(dim);
    for _ in 0..n {
        for v in z.iter_mut() {
            *v = normal(&mut rng);
        }
        let x = &mean + &l * &z;
        let r = Vector3::new(1.0, x[obs[0]], x[obs[1]]);
        xtx += r * r.transpose();
        for (k, &i) in free.iter().enumerate() {
            xty[k] += r * x[i];
            yy[k] += x[i] * x[i];
        }
    }
    let inv = xtx.try_inverse().ok_or("singular design")?;
    let c = Vector3::new(1.0, obs_vals[0], obs_vals[1]);
    let mut worst_z = 0.0f64;
    for (k, _) in free.iter().enumerate() {
        let beta = inv * xty[k];
        let rss = yy[k] - beta.dot(&xty[k]);
        let s2 = rss / (n - 3) as f64;
        let pred = beta.dot(&c);
        let se_mean = (s2 * (c.transpose() * inv * c)[(0, 0)]).sqrt();
        let se_var = s2 * (2.0 / (n - 3) as f64).sqrt();
        worst_z = worst_z
            .max((pred - cm[k]).abs() / se_mean)
            .max((s2 - cc[(k, k)]).abs() / se_var);
    }
    let ok = exact_err <= 1e-12 && worst_z <= 3.0;
    Ok((
        ok,
        format!("bivariate error {exact_err:.1e}; 6x6 vs 1e6-sample regression: worst {worst_z:.2} s.e."),
    ))
}

/// Density of N(mean, Σ(T)) for the drift-free covariance of the model.
fn exact_gaussian(m: &ModelSpec, mean: (f64, f64), at: (f64, f64)) -> f64 {
    let t = m.horizon();
    let h = m.h();
    let sxx = t;
    let syy = t.powf(2.0 * h);
    let sxy = m.rho() * m.hurst().kappa_h() * t.powf(h + 0.5);
    let det = sxx * syy - sxy * sxy;
    let (dx, dy) = (at.0 - mean.0, at.1 - mean.1);
    let q = (syy * dx * dx - 2.0 * sxy * dx * dy + sxx * dy * dy) / det;
    (-0.5 * q).exp() / (2.0 * PI * det.sqrt())
}

// time-only drifts with closed-form integrals over [0, T]
const H1_TIME: &str = "0.3 + 0.5*t";
const H2_TIME: &str = "-0.2 + 0.4*t";

fn time_only_mean(m: &ModelSpec) -> (f64, f64) {
    let t = m.horizon();
    (m.x0() + 0.3 * t + 0.25 * t * t, m.y0() - 0.2 * t + 0.2 * t * t)
}

fn time_only_exactness() -> Outcome {
    let mut worst = 0.0f64;
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    for &(h, rho) in &[(0.5, 0.0), (0.5, 0.7), (0.3, 0.5), (0.7, -0.4)] {
        let m = model(h, rho, 0.5, H1_TIME, H2_TIME, 0.4, -0.3)?;
        let mean = time_only_mean(&m);
        for _ in 0..10 {
            let at = (
                mean.0 + 0.5f64.sqrt() * rng.random_range(-2.0..2.0),
                mean.1 + 0.5f64.powf(h) * rng.random_range(-2.0..2.0),
            );
            let d = approx_density(&m, at, 200).map_err(err)?;
            let e = exact_gaussian(&m, mean, at);
            worst = worst.max((d.p_hat_full - e).abs() / e);
        }
    }
    Ok((worst <= 1e-8, format!("max relative error {worst:.2e} over 40 endpoints, tolerance 1e-8")))
}

fn forward_mc() -> Outcome {
    let t = 0.1;
    let mut ok = true;
    let mut parts = Vec::new();
    for &h in &[0.3, 0.5, 0.7] {
        let m = model(h, 0.5, t, "0", "0", 0.0, 0.0)?;
        let (sx, sy) = (t.sqrt(), t.powf(h));
        let est = Estimator::Kde {
            bandwidth_x: 0.1 * sx,
            bandwidth_y: 0.1 * sy,
        };
        let cfg = SimConfig {
            n_paths: 500_000,
            n_steps: 128,
            seed: 7,
            estimator: est,
            chunk_size: 8192,
            keep_paths: false,
        };
        let ens = simulate_forward(&m, &cfg).map_err(err)?;
        for &(a, b) in &[(0.0, 0.0), (0.5, -0.5), (-1.0, 0.8)] {
            let at = (a * sx, b * sy);
            let phi = modalbridge::density::gaussian_prefactor(at.0, at.1, &m).map_err(err)?;
            let e = estimate_density_at(&ens, at, &est).map_err(err)?;
            let dev = (e.value - phi).abs();
            let tol = 3.0 * e.std_err + 0.05 * phi;
            ok &= dev <= tol;
            parts.push(format!("H={h} ({a},{b})sd: {:.3}/{:.3}", dev, tol));
        }
    }
    Ok((ok, format!("|estimate - phi| / allowance: {}", parts.join(", "))))
}

fn bridge_vs_exact() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for &(h, rho) in &[(0.5, 0.0), (0.5, 0.7)] {
        let m = model(h, rho, 0.5, H1_TIME, H2_TIME, 0.4, -0.3)?;
        let mean = time_only_mean(&m);
        for &(a, b) in &[(0.0, 0.0), (0.6, -0.8)] {
            let at = (mean.0 + a * 0.5f64.sqrt(), mean.1 + b * 0.5f64.powf(h));
            let exact = exact_gaussian(&m, mean, at);
            let r = commands::bridge_mc(
                &m,
                &BridgeBlock {
                    endpoint: [at.0, at.1],
                    n_paths: 100_000,
                    n_steps: 256,
                    seed: 8,
                    chunk_size: 4096,
                },
                None,
            )
            .map_err(err)?;
            let z = (r.estimate - exact).abs() / r.combined_std_err;
            ok &= z <= 2.0;
            parts.push(format!("(H={h}, rho={rho}) at ({a},{b})sd: {z:.2}"));
        }
    }
    Ok((ok, format!("|bridge - exact| in combined s.e.: {}", parts.join(", "))))
}

fn small_time_trend() -> Outcome {
    let gh = GaussRule::hermite_normal(8).map_err(err)?;
    let mut rs = Vec::new();
    let mut ses = Vec::new();
    for &t in &[0.4, 0.2, 0.1] {
        let h = 0.4;
        let m = model(h, 0.3, t, "0.5*sin(x)", "0.5*cos(y)", 0.0, 0.0)?;
        let at = (t.sqrt(), t.powf(h));
        let (bx, by) = (0.25 * t.sqrt(), 0.25 * t.powf(h));
        // the kernel estimator targets the density smoothed by its kernel
        let mut smoothed = 0.0;
        for (zi, wi) in gh.nodes.iter().zip(&gh.weights) {
            for (zj, wj) in gh.nodes.iter().zip(&gh.weights) {
                let d = approx_density(&m, (at.0 + bx * zi, at.1 + by * zj), 200).map_err(err)?;
                smoothed += wi * wj * d.p_hat;
            }
        }
        let est = Estimator::Kde {
            bandwidth_x: bx,
            bandwidth_y: by,
        };
        let cfg = SimConfig {
            n_paths: 1_000_000,
            n_steps: 128,
            seed: 9,
            estimator: est,
            chunk_size: 8192,
            keep_paths: false,
        };
        let ens = simulate_forward(&m, &cfg).map_err(err)?;
        let e = estimate_density_at(&ens, at, &est).map_err(err)?;
        rs.push((e.value / smoothed - 1.0).abs());
        ses.push(e.std_err / smoothed);
    }
    let mut ok = true;
    for k in 0..2 {
        ok &= rs[k + 1] <= rs[k] + 2.0 * (ses[k].powi(2) + ses[k + 1].powi(2)).sqrt();
    }
    let parts: Vec<String> = [0.4, 0.2, 0.1]
        .iter()
        .zip(rs.iter().zip(&ses))
        .map(|(t, (r, s))| format!("T={t}: {r:.4} +- {s:.4}"))
        .collect();
    Ok((ok, format!("|p_MC / p_hat - 1|: {}", parts.join(", "))))
}

/// Checks on the figure-grid curves as read back from their CSV files.
pub fn check_figure_grid(curves: &[FigureCurve]) -> Outcome {
    let artifacts = figure_grid_artifacts(curves);
    let csvs: Vec<_> = artifacts.iter().filter(|a| a.name.ends_with(".csv")).collect();
    let svgs = artifacts.iter().filter(|a| a.name.ends_with(".svg")).count();
    if csvs.len() != 16 || svgs != 4 || curves.len() != 16 {
        return Ok((false, format!("{} curves, {} svg", csvs.len(), svgs)));
    }
    let mut ok = true;
    let mut worst_jump = (0.0f64, 0.0f64);
    let mut pin = 0.0f64;
    let mut straight = 0.0f64;
    for (c, a) in curves.iter().zip(&csvs) {
        let (_, rows) = parse_csv(&a.contents).ok_or("unparseable figure csv")?;
        let mut jump = 0.0f64;
        for w in rows.windows(2) {
            jump = jump.max((w[1][1] - w[0][1]).abs()).max((w[1][2] - w[0][2]).abs());
        }
        if c.hurst < 0.25 {
            worst_jump.0 = worst_jump.0.max(jump);
            ok &= jump <= 0.6;
        } else {
            worst_jump.1 = worst_jump.1.max(jump);
            ok &= jump <= 0.05;
        }
        let (first, last) = (&rows[0], &rows[rows.len() - 1]);
        pin = pin
            .max(first[1].abs())
            .max(first[2].abs())
            .max((last[0] - 1.0).abs())
            .max((last[1] - 1.0).abs())
            .max((last[2] - 1.0).abs());
        if c.hurst == 0.49 {
            for r in &rows {
                straight = straight.max((r[1] - r[0]).abs()).max((r[2] - r[0]).abs());
            }
        }
    }
    ok &= pin <= 1e-10 && straight <= 0.05;
    Ok((
        ok,
        format!(
            "16 curves, 4 charts; max jump {:.3} (H=0.01), {:.4} (H>=0.25); pinning {pin:.1e}; H=0.49 deviation from the line {straight:.4}",
            worst_jump.0, worst_jump.1
        ),
    ))
}

fn figure_checks() -> Outcome {
    let curves = figure_grid().map_err(err)?;
    check_figure_grid(&curves)
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, String> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(err)?;
    Ok(pool.install(f))
}

fn determinism() -> Outcome {
    let m = model(0.3, 0.4, 0.5, "0.5*sin(x) - y", "cos(t + x)", 0.1, -0.1)?;
    let sim = SimulateBlock {
        point: [0.2, 0.0],
        n_paths: 20_000,
        n_steps: 64,
        seed: 11,
        estimator: Estimator::Bin {
            width_x: 0.2,
            width_y: 0.2,
        },
        chunk_size: 1000,
        write_terminals: true,
    };
    let bridge = BridgeBlock {
        endpoint: [0.3, 0.2],
        n_paths: 4000,
        n_steps: 32,
        seed: 12,
        chunk_size: 500,
    };
    let render = |threads: usize| -> Result<Vec<String>, String> {
        in_pool(threads, || -> Result<Vec<String>, String> {
            let (rep, term) = commands::simulate(&m, &sim, None).map_err(err)?;
            let br = commands::bridge_mc(&m, &bridge, None).map_err(err)?;
            let kernel = commands::kernel_csv(&KernelBlock {
                hurst: 0.3,
                t_max: 1.0,
                n_t: 5,
                n_s: 5,
            })
            .map_err(err)?;
            Ok(vec![
                commands::to_json(&rep),
                term.unwrap_or_default(),
                commands::to_json(&br),
                kernel,
            ])
        })?
    };
    let a = render(1)?;
    let b = render(1)?;
    let c = render(3)?;
    let repeat = a == b;
    let threads = a == c;
    Ok((
        repeat && threads,
        format!("repeated run identical: {repeat}; 1 vs 3 worker threads identical: {threads}"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_skips_heavy_criteria() {
        let r = run_criterion(9, &Options::quick());
        assert_eq!(r.status, Status::Skipped);
        assert!(r.passed());
    }

    #[test]
    fn kappa_fault_is_detected() {
        let opts = Options {
            scale: Scale::Quick,
            kappa_fault: Some(1.001),
        };
        let r = run_criterion(1, &opts);
        assert_eq!(r.status, Status::Fail, "{}", r.line());
    }
}
