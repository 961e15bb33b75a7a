//! Command-line front end for `modalbridge`: configuration, the
//! subcommands, output writers and the acceptance checks.

pub mod commands;
pub mod config;
mod error;
pub mod output;
pub mod validation;

pub use error::{exit, CliError, CliResult};

use clap::{Parser, Subcommand, ValueEnum};
use commands::Artifact;
use config::RunConfig;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Parser)]
#[command(name = "modalbridge", version, about = "Small-time density approximation for mixed Brownian / fractional Brownian systems")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the seed of seeded commands.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for output files; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate both closed forms of the Volterra kernel.
    Kernel,
    /// Modal path and its coefficients.
    ModalPath {
        /// Run the preset grid of 16 (rho, H) pairs into --out.
        #[arg(long)]
        figure_grid: bool,
    },
    /// Density approximation at the configured endpoints.
    Density,
    /// Forward Monte Carlo and a pointwise density estimate.
    Simulate,
    /// Bridge Monte Carlo estimate of the density.
    BridgeMc,
    /// Run the acceptance checks.
    Validate {
        /// Cheap subset only.
        #[arg(long)]
        quick: bool,
        /// Scale κ_H by this factor in the kernel identity check.
        #[arg(long, hide = true)]
        fault_kappa_scale: Option<f64>,
    },
}

fn load(cli: &Cli) -> CliResult<RunConfig> {
    match &cli.config {
        Some(p) => RunConfig::load(p),
        None => Err(CliError::Config("this command needs --config".into())),
    }
}

fn format_or(cli: &Cli, default: Format, allowed: &[Format]) -> CliResult<Format> {
    let f = cli.format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(CliError::Config(format!("--format {f:?} is not available for this command").to_lowercase()))
    }
}

fn write_file(dir: &Path, a: &Artifact) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let p = dir.join(&a.name);
    std::fs::write(&p, a.contents.as_bytes()).map_err(|e| CliError::io(&p, e))
}

/// The first artefact goes to stdout when there is no --out; the others need --out.
fn emit(cli: &Cli, artifacts: &[Artifact]) -> CliResult<()> {
    match &cli.out {
        Some(dir) => artifacts.iter().try_for_each(|a| write_file(dir, a)),
        None => {
            if artifacts.len() > 1 {
                eprintln!("note: {} extra output file(s) need --out", artifacts.len() - 1);
            }
            if let Some(a) = artifacts.first() {
                let mut so = std::io::stdout().lock();
                so.write_all(a.contents.as_bytes())
                    .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
            }
            Ok(())
        }
    }
}

/// Execute a parsed command line and return the exit code.
pub fn run(cli: &Cli) -> CliResult<i32> {
    match &cli.command {
        Command::Kernel => {
            format_or(cli, Format::Csv, &[Format::Csv])?;
            let cfg = load(cli)?;
            let block = RunConfig::block(&cfg.kernel, "kernel")?;
            emit(cli, &[Artifact::named("kernel.csv", commands::kernel_csv(block)?)])?;
        }
        Command::ModalPath { figure_grid: true } => {
            format_or(cli, Format::Csv, &[Format::Csv, Format::Svg])?;
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
            let curves = commands::figure_grid()?;
            for a in commands::figure_grid_artifacts(&curves) {
                write_file(&dir, &a)?;
            }
        }
        Command::ModalPath { figure_grid: false } => {
            let fmt = format_or(cli, Format::Csv, &[Format::Csv, Format::Svg])?;
            let cfg = load(cli)?;
            let model = cfg.model()?;
            let block = RunConfig::block(&cfg.modal_path, "modal_path")?;
            let path = commands::modal_path_run(&model, block)?;
            let csv = Artifact::named("modal_path.csv", commands::modal_path_csv(&path));
            let svg = Artifact::named(
                "modal_path.svg",
                commands::modal_path_svg(
                    &format!("modal path, H = {}, rho = {}", model.h(), model.rho()),
                    &[(String::new(), &path)],
                ),
            );
            match fmt {
                Format::Svg => emit(cli, &[svg])?,
                _ => emit(cli, &[csv, svg])?,
            }
        }
        Command::Density => {
            format_or(cli, Format::Json, &[Format::Json])?;
            let cfg = load(cli)?;
            let model = cfg.model()?;
            let block = RunConfig::block(&cfg.density, "density")?;
            let rep = commands::density(&model, block)?;
            emit(cli, &[Artifact::named("density.json", commands::to_json(&rep))])?;
        }
        Command::Simulate => {
            format_or(cli, Format::Json, &[Format::Json])?;
            let cfg = load(cli)?;
            let model = cfg.model()?;
            let block = RunConfig::block(&cfg.simulate, "simulate")?;
            let (rep, terminals) = commands::simulate(&model, block, cli.seed)?;
            let mut out = vec![Artifact::named("simulate.json", commands::to_json(&rep))];
            if let Some(t) = terminals {
                out.push(Artifact::named("terminals.csv", t));
            }
            emit(cli, &out)?;
        }
        Command::BridgeMc => {
            format_or(cli, Format::Json, &[Format::Json])?;
            let cfg = load(cli)?;
            let model = cfg.model()?;
            let block = RunConfig::block(&cfg.bridge_mc, "bridge_mc")?;
            let rep = commands::bridge_mc(&model, block, cli.seed)?;
            emit(cli, &[Artifact::named("bridge_mc.json", commands::to_json(&rep))])?;
        }
        Command::Validate {
            quick,
            fault_kappa_scale,
        } => {
            format_or(cli, Format::Json, &[Format::Json])?;
            let opts = validation::Options {
                scale: if *quick {
                    validation::Scale::Quick
                } else {
                    validation::Scale::Full
                },
                kappa_fault: *fault_kappa_scale,
            };
            let mut criteria = Vec::new();
            for &(id, _, _) in &validation::CRITERIA {
                let r = validation::run_criterion(id, &opts);
                eprintln!("{}", r.line());
                criteria.push(r);
            }
            let rep = validation::ValidationReport {
                scale: opts.scale,
                passed: criteria.iter().all(validation::CriterionReport::passed),
                criteria,
            };
            emit(cli, &[Artifact::named("validate.json", commands::to_json(&rep))])?;
            if !rep.passed {
                return Ok(exit::VALIDATION);
            }
        }
    }
    Ok(exit::OK)
}
