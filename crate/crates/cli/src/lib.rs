//! `ashlab`: experiment driver for the spectral laboratory.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod svg;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{ExperimentConfig, Overrides};
use crate::error::{CliError, CliResult};
use crate::output::{RunContext, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "ashlab", version, about = "Spectral simulation and verification lab for the higher-order Schrödinger equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one trajectory and report invariants and modified energies.
    Simulate(CommonArgs),
    /// Run the structural and numerical check suites.
    Verify(VerifyArgs),
    /// Check that the Galilean gauge commutes with the flow.
    GaugeCheck(CommonArgs),
    /// Sweep the cutoff N and fit the decay of the modified-energy increment.
    EnergyScan(CommonArgs),
    /// Certify the rescaling search and the scaling laws of the norms.
    RescaleCheck(CommonArgs),
    /// Residual of a closed-form solution in the equation.
    ExactResidual(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON configuration file; defaults apply to omitted fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for the data-parallel kernels.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Number of Fourier modes.
    #[arg(long = "k")]
    pub modes: Option<usize>,
    #[arg(long)]
    pub box_length: Option<f64>,
    /// Comma-separated cutoffs N.
    #[arg(long, value_delimiter = ',')]
    pub n_cutoff: Option<Vec<f64>>,
    #[arg(long)]
    pub sobolev_s: Option<f64>,
    /// Skip SVG plots.
    #[arg(long)]
    pub no_svg: bool,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Perturb δ₄ to confirm the unit-symbol checks can fail.
    #[arg(long)]
    pub mutate_delta4: bool,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Verify(_) => "verify",
            Command::GaugeCheck(_) => "gauge-check",
            Command::EnergyScan(_) => "energy-scan",
            Command::RescaleCheck(_) => "rescale-check",
            Command::ExactResidual(_) => "exact-residual",
        }
    }

    fn common(&self) -> &CommonArgs {
        match self {
            Command::Verify(v) => &v.common,
            Command::Simulate(c) | Command::GaugeCheck(c) | Command::EnergyScan(c) | Command::RescaleCheck(c) | Command::ExactResidual(c) => c,
        }
    }
}

/// Effective configuration: file, then flags.
pub fn resolve_config(cmd: &Command) -> CliResult<ExperimentConfig> {
    let c = cmd.common();
    let mut cfg = ExperimentConfig::load(c.config.as_deref())?;
    cfg.apply(&Overrides {
        seed: c.seed,
        modes: c.modes,
        box_length: c.box_length,
        cutoffs: c.n_cutoff.clone(),
        sobolev_s: c.sobolev_s,
        mutate_delta4: matches!(cmd, Command::Verify(v) if v.mutate_delta4),
        no_svg: c.no_svg,
    });
    if c.workers == Some(0) {
        return Err(CliError::Config("--workers must be at least 1".into()));
    }
    Ok(cfg)
}

/// Run a parsed command and return the manifest; check failures are
/// reported through `manifest.passed`.
pub fn execute(cmd: &Command) -> CliResult<RunManifest> {
    let cfg = resolve_config(cmd)?;
    let common = cmd.common();
    let started = chrono::Utc::now().to_rfc3339();
    let mut ctx = RunContext::new(&common.out, cfg.output.svg)?;
    ctx.write_json("config.json", &cfg)?;
    ashlab_core::parallel::with_workers(common.workers, || -> CliResult<()> {
        use experiments::*;
        match cmd {
            Command::Simulate(_) => simulate::run(&cfg, &mut ctx),
            Command::Verify(_) => verify::run(&cfg, &mut ctx),
            Command::GaugeCheck(_) => gauge::run(&cfg, &mut ctx),
            Command::EnergyScan(_) => scan::run(&cfg, &mut ctx),
            Command::RescaleCheck(_) => rescale::run(&cfg, &mut ctx),
            Command::ExactResidual(_) => residual::run(&cfg, &mut ctx),
        }
    })?;
    ctx.finish(RunManifest {
        tool: "ashlab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: cmd.name().into(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        workers: common.workers,
        started,
        finished: String::new(),
        passed: false,
        checks: Vec::new(),
        files: Vec::new(),
    })
}

/// Exit code for a run: 0 all checks pass, 1 a check failed or the run
/// aborted, 2 configuration error.
pub fn run(cli: Cli) -> i32 {
    match execute(&cli.command) {
        Ok(m) => {
            for c in m.checks.iter().filter(|c| !c.passed) {
                eprintln!("FAIL {}/{}: value {:?} tolerance {:?} {}", c.suite, c.name, c.value, c.tolerance, c.detail);
            }
            println!("{}: {} checks, {}", m.command, m.checks.len(), if m.passed { "all passed" } else { "FAILED" });
            if m.passed {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
