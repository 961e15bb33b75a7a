//! JSON run configuration. Every block rejects unknown keys.

use crate::error::{CliError, CliResult, Context};
use modalbridge::driftspec::{ModelParams, ModelSpec};
use modalbridge::mc::{Estimator, SimConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: Option<ModelParams>,
    #[serde(default)]
    pub kernel: Option<KernelBlock>,
    #[serde(default)]
    pub modal_path: Option<ModalPathBlock>,
    #[serde(default)]
    pub density: Option<DensityBlock>,
    #[serde(default)]
    pub simulate: Option<SimulateBlock>,
    #[serde(default)]
    pub bridge_mc: Option<BridgeBlock>,
}

/// Kernel comparison on the grid t_i = t_max i / n_t, s_j = t_i j / (n_s + 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelBlock {
    pub hurst: f64,
    #[serde(default = "one")]
    pub t_max: f64,
    #[serde(default = "twenty")]
    pub n_t: usize,
    #[serde(default = "twenty")]
    pub n_s: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModalPathBlock {
    pub endpoint: [f64; 2],
    #[serde(default = "default_path_steps")]
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityBlock {
    pub endpoints: Vec<[f64; 2]>,
    #[serde(default = "default_density_steps")]
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateBlock {
    pub point: [f64; 2],
    pub n_paths: usize,
    pub n_steps: usize,
    #[serde(default)]
    pub seed: u64,
    pub estimator: Estimator,
    #[serde(default = "default_chunk")]
    pub chunk_size: usize,
    /// Also write the terminal samples as CSV (needs `--out`).
    #[serde(default)]
    pub write_terminals: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeBlock {
    pub endpoint: [f64; 2],
    pub n_paths: usize,
    pub n_steps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_chunk")]
    pub chunk_size: usize,
}

fn one() -> f64 {
    1.0
}

fn twenty() -> usize {
    20
}

fn default_path_steps() -> usize {
    200
}

fn default_density_steps() -> usize {
    400
}

fn default_chunk() -> usize {
    4096
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<RunConfig> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn model(&self) -> CliResult<ModelSpec> {
        let p = self
            .model
            .as_ref()
            .ok_or_else(|| CliError::Config("missing `model` block".into()))?;
        p.build().context("model")
    }

    pub fn block<'a, T>(block: &'a Option<T>, name: &str) -> CliResult<&'a T> {
        block
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("missing `{name}` block")))
    }
}

impl SimulateBlock {
    pub fn sim_config(&self, seed: Option<u64>) -> SimConfig {
        SimConfig {
            n_paths: self.n_paths,
            n_steps: self.n_steps,
            seed: seed.unwrap_or(self.seed),
            estimator: self.estimator,
            chunk_size: self.chunk_size,
            keep_paths: false,
        }
    }
}

impl BridgeBlock {
    pub fn sim_config(&self, seed: Option<u64>) -> SimConfig {
        SimConfig {
            n_paths: self.n_paths,
            n_steps: self.n_steps,
            seed: seed.unwrap_or(self.seed),
            // unused by the bridge estimator
            estimator: Estimator::Kde {
                bandwidth_x: 1.0,
                bandwidth_y: 1.0,
            },
            chunk_size: self.chunk_size,
            keep_paths: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let e = RunConfig::from_json(r#"{"model": {"hurst": 0.3, "rho": 0, "horizon": 1, "sigma": 2}}"#).unwrap_err();
        assert!(e.to_string().contains("sigma"), "{e}");
        let e = RunConfig::from_json(r#"{"extra": 1}"#).unwrap_err();
        assert!(e.to_string().contains("extra"));
    }

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::from_json(
            r#"{"model": {"hurst": 0.3, "rho": 0.2, "horizon": 0.5, "h1": "sin(x)"},
                "kernel": {"hurst": 0.7},
                "simulate": {"point": [0, 0], "n_paths": 10, "n_steps": 4,
                             "estimator": {"kind": "bin", "width_x": 0.1, "width_y": 0.1}}}"#,
        )
        .unwrap();
        let m = c.model().unwrap();
        assert_eq!(m.h2().to_string(), "0");
        assert_eq!(c.kernel.unwrap().n_t, 20);
        let s = c.simulate.unwrap();
        assert_eq!(s.chunk_size, 4096);
        assert_eq!(s.sim_config(Some(9)).seed, 9);
    }

    #[test]
    fn bad_hurst_names_the_field() {
        let c = RunConfig::from_json(r#"{"model": {"hurst": 1.5, "rho": 0, "horizon": 1}}"#).unwrap();
        let e = c.model().unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("hurst"));
    }
}
