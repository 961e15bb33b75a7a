//! The subcommands as pure functions from configuration to rendered output.
//! `main` only routes the results to files or stdout.

use crate::config::{BridgeBlock, DensityBlock, KernelBlock, ModalPathBlock, SimulateBlock};
use crate::error::{CliError, CliResult, Context};
use crate::output::{line_chart, Csv, Series};
use modalbridge::bridge::{modal_path, ModalPath};
use modalbridge::density::approx_density;
use modalbridge::driftspec::{DriftClass, ModelParams, ModelSpec};
use modalbridge::fbm_kernel::{kernel_alt, kernel_hyp, Hurst, TimeGrid};
use modalbridge::mc::{bridge_mc_density, estimate_density_at, simulate_forward};
use serde::Serialize;

/// A named output artefact.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn named(name: impl Into<String>, contents: String) -> Artifact {
        Artifact {
            name: name.into(),
            contents,
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serialises");
    s.push('\n');
    s
}

pub const KERNEL_HEADER: [&str; 5] = ["t", "s", "K_hyp", "K_alt", "abs_rel_diff"];

/// Both closed forms of K_H on t_i = t_max i / n_t, s_j = t_i j / (n_s + 1).
pub fn kernel_csv(block: &KernelBlock) -> CliResult<String> {
    let hurst = Hurst::new(block.hurst).context("kernel")?;
    if !(block.t_max > 0.0 && block.t_max.is_finite()) {
        return Err(CliError::Config(format!("kernel: `t_max` must be positive, got {}", block.t_max)));
    }
    if block.n_t == 0 || block.n_s == 0 {
        return Err(CliError::Config("kernel: `n_t` and `n_s` must be at least 1".into()));
    }
    let mut csv = Csv::new(&KERNEL_HEADER);
    for i in 1..=block.n_t {
        let t = block.t_max * i as f64 / block.n_t as f64;
        for j in 1..=block.n_s {
            let s = t * j as f64 / (block.n_s + 1) as f64;
            let kh = kernel_hyp(t, s, &hurst).context("kernel (hypergeometric form)")?;
            let ka = kernel_alt(t, s, &hurst).context("kernel (integral form)")?;
            csv.row(&[t, s, kh, ka, (kh - ka).abs() / kh.abs()]);
        }
    }
    Ok(csv.finish())
}

pub const MODAL_HEADER: [&str; 7] = ["t", "x_path", "y_path", "m11", "m12", "m21", "m22"];

pub fn modal_path_run(model: &ModelSpec, block: &ModalPathBlock) -> CliResult<ModalPath> {
    let grid = TimeGrid::new(model.horizon(), block.n).context("modal_path")?;
    modal_path(model, &grid, (block.endpoint[0], block.endpoint[1])).context("modal_path")
}

pub fn modal_path_csv(path: &ModalPath) -> String {
    let c = &path.coeffs;
    let mut csv = Csv::new(&MODAL_HEADER);
    for (i, t) in path.grid.nodes().into_iter().enumerate() {
        csv.row(&[t, path.x_path[i], path.y_path[i], c.m11[i], c.m12[i], c.m21[i], c.m22[i]]);
    }
    csv.finish()
}

/// Chart of x (solid) and y (dashed) against t for each labelled path.
pub fn modal_path_svg(title: &str, paths: &[(String, &ModalPath)]) -> String {
    let mut series = Vec::new();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut t_end: f64 = 0.0;
    for (label, p) in paths {
        let ts = thin(&p.grid.nodes());
        t_end = t_end.max(p.grid.horizon());
        for v in p.x_path.iter().chain(&p.y_path) {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
        series.push(Series {
            label: format!("{label} x"),
            xs: ts.clone(),
            ys: thin(&p.x_path),
            dashed: false,
        });
        series.push(Series {
            label: format!("{label} y"),
            xs: ts,
            ys: thin(&p.y_path),
            dashed: true,
        });
    }
    let pad = 0.05 * (hi - lo).max(1e-12);
    line_chart(title, (0.0, t_end), (lo - pad, hi + pad), &series)
}

pub const FIGURE_RHOS: [f64; 4] = [0.0, 0.7, -0.7, -0.9];
pub const FIGURE_HURSTS: [f64; 4] = [0.01, 0.25, 0.49, 0.75];
/// Fine enough that the steep ends of the rough (H = 0.01, 0.25) paths
/// move by less than the continuity bounds per step.
pub const FIGURE_STEPS: usize = 10_000;

/// Most points drawn per polyline.
const SVG_POINTS: usize = 1000;

/// Every k-th node, always keeping both ends.
fn thin(v: &[f64]) -> Vec<f64> {
    let k = v.len().div_ceil(SVG_POINTS).max(1);
    let mut out: Vec<f64> = v.iter().step_by(k).copied().collect();
    if (v.len() - 1) % k != 0 {
        out.push(v[v.len() - 1]);
    }
    out
}

#[derive(Debug, Clone)]
pub struct FigureCurve {
    pub rho: f64,
    pub hurst: f64,
    pub path: ModalPath,
}

fn tag(v: f64) -> String {
    let s = format!("{}", v.abs());
    if v < 0.0 {
        format!("m{s}")
    } else {
        s
    }
}

impl FigureCurve {
    pub fn file_name(&self) -> String {
        format!("modal_path_rho{}_H{}.csv", tag(self.rho), tag(self.hurst))
    }
}

/// Modal paths from (0, 0) to (1, 1) over [0, 1] without drift, for every
/// (rho, H) of the preset grid.
pub fn figure_grid() -> CliResult<Vec<FigureCurve>> {
    let mut out = Vec::new();
    for &rho in &FIGURE_RHOS {
        for &hurst in &FIGURE_HURSTS {
            let model = ModelParams {
                hurst,
                rho,
                x0: 0.0,
                y0: 0.0,
                horizon: 1.0,
                h1: "0".into(),
                h2: "0".into(),
                holder_gamma: None,
            }
            .build()
            .context("figure grid")?;
            let path = modal_path_run(
                &model,
                &ModalPathBlock {
                    endpoint: [1.0, 1.0],
                    n: FIGURE_STEPS,
                },
            )?;
            out.push(FigureCurve { rho, hurst, path });
        }
    }
    Ok(out)
}

/// 16 CSV files and one SVG per rho.
pub fn figure_grid_artifacts(curves: &[FigureCurve]) -> Vec<Artifact> {
    let mut out: Vec<Artifact> = curves
        .iter()
        .map(|c| Artifact::named(c.file_name(), modal_path_csv(&c.path)))
        .collect();
    for &rho in &FIGURE_RHOS {
        let paths: Vec<(String, &ModalPath)> = curves
            .iter()
            .filter(|c| c.rho == rho)
            .map(|c| (format!("H={}", c.hurst), &c.path))
            .collect();
        let svg = modal_path_svg(&format!("modal paths, rho = {rho}"), &paths);
        out.push(Artifact::named(format!("modal_paths_rho{}.svg", tag(rho)), svg));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityPoint {
    pub x: f64,
    pub y: f64,
    pub phi: f64,
    pub omega_1: f64,
    pub omega_full: f64,
    /// null when the representation is exact
    pub alpha: Option<f64>,
    pub p_hat_leading: f64,
    pub p_hat_full: f64,
    pub drift_class: DriftClass,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityReport {
    pub horizon: f64,
    pub n: usize,
    pub results: Vec<DensityPoint>,
}

pub fn density(model: &ModelSpec, block: &DensityBlock) -> CliResult<DensityReport> {
    if block.endpoints.is_empty() {
        return Err(CliError::Config("density: `endpoints` is empty".into()));
    }
    let mut results = Vec::with_capacity(block.endpoints.len());
    for e in &block.endpoints {
        let d = approx_density(model, (e[0], e[1]), block.n).context("density")?;
        results.push(DensityPoint {
            x: e[0],
            y: e[1],
            phi: d.phi,
            omega_1: d.omega_1,
            omega_full: d.omega_full,
            alpha: d.alpha,
            p_hat_leading: d.p_hat,
            p_hat_full: d.p_hat_full,
            drift_class: d.drift_class,
        });
    }
    Ok(DensityReport {
        horizon: model.horizon(),
        n: block.n,
        results,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateReport {
    pub estimate: f64,
    pub std_err: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub point: [f64; 2],
    pub n_effective: usize,
    pub warnings: Vec<String>,
}

pub const TERMINAL_HEADER: [&str; 2] = ["x_T", "y_T"];

/// Forward simulation and the density estimate at `point`; the CSV of
/// terminal samples is produced when requested.
pub fn simulate(model: &ModelSpec, block: &SimulateBlock, seed: Option<u64>) -> CliResult<(SimulateReport, Option<String>)> {
    let cfg = block.sim_config(seed);
    let ens = simulate_forward(model, &cfg).context("simulate")?;
    let point = (block.point[0], block.point[1]);
    let est = estimate_density_at(&ens, point, &cfg.estimator).context("simulate")?;
    let terminals = block.write_terminals.then(|| {
        let mut csv = Csv::new(&TERMINAL_HEADER);
        for (x, y) in ens.terminal_x.iter().zip(&ens.terminal_y) {
            csv.row(&[*x, *y]);
        }
        csv.finish()
    });
    Ok((
        SimulateReport {
            estimate: est.value,
            std_err: est.std_err,
            n_paths: ens.len(),
            seed: cfg.seed,
            point: block.point,
            n_effective: est.n_effective,
            warnings: ens.warnings,
        },
        terminals,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgeReport {
    pub estimate: f64,
    pub std_err: f64,
    pub discretization_bias_estimate: f64,
    pub combined_std_err: f64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub endpoint: [f64; 2],
}

pub fn bridge_mc(model: &ModelSpec, block: &BridgeBlock, seed: Option<u64>) -> CliResult<BridgeReport> {
    let cfg = block.sim_config(seed);
    let e = bridge_mc_density(model, (block.endpoint[0], block.endpoint[1]), &cfg).context("bridge_mc")?;
    Ok(BridgeReport {
        estimate: e.value,
        std_err: e.std_err,
        discretization_bias_estimate: e.discretization_bias_estimate,
        combined_std_err: e.combined_std_err,
        n_paths: cfg.n_paths,
        n_steps: cfg.n_steps,
        seed: cfg.seed,
        endpoint: block.endpoint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::output::parse_csv;

    #[test]
    fn thinning_keeps_the_ends() {
        let v: Vec<f64> = (0..=10_000).map(f64::from).collect();
        let t = thin(&v);
        assert!(t.len() <= SVG_POINTS + 1);
        assert_eq!((t[0], *t.last().unwrap()), (0.0, 10_000.0));
        let short = [1.0, 2.0, 3.0];
        assert_eq!(thin(&short), short);
    }

    #[test]
    fn kernel_half_is_one() {
        let csv = kernel_csv(&KernelBlock {
            hurst: 0.5,
            t_max: 1.0,
            n_t: 4,
            n_s: 3,
        })
        .unwrap();
        let (h, rows) = parse_csv(&csv).unwrap();
        assert_eq!(h, KERNEL_HEADER);
        assert_eq!(rows.len(), 12);
        for r in rows {
            assert_eq!((r[2], r[3], r[4]), (1.0, 1.0, 0.0));
        }
    }

    #[test]
    fn figure_names_are_distinct() {
        let c = figure_grid().unwrap();
        let a = figure_grid_artifacts(&c);
        assert_eq!(a.len(), 20);
        let mut names: Vec<_> = a.iter().map(|x| x.name.clone()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 20);
        assert!(names.contains(&"modal_path_rhom0.9_H0.01.csv".to_string()));
    }

    #[test]
    fn density_rejects_general_drift_above_three_quarters() {
        let m = ModelParams {
            hurst: 0.8,
            rho: 0.1,
            x0: 0.0,
            y0: 0.0,
            horizon: 0.5,
            h1: "sin(x)".into(),
            h2: "0".into(),
            holder_gamma: Some(0.4),
        }
        .build()
        .unwrap();
        let e = density(
            &m,
            &DensityBlock {
                endpoints: vec![[0.1, 0.1]],
                n: 50,
            },
        )
        .unwrap_err();
        assert_eq!(e.exit_code(), 4);
    }
}
