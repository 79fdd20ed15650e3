//! Experiment drivers behind the subcommands.

pub mod gauge;
pub mod rescale;
pub mod residual;
pub mod scan;
pub mod simulate;
pub mod verify;

use ashlab_core::energies::{energy_report, increment_ledger, EnergyReport, IncrementLedger, ReportOptions};
use ashlab_core::multilinear::LAMBDA4_MAX_MODES;
use ashlab_core::solver::{integrate, Trajectory};
use ashlab_core::{EquationParams, Exec, MultiplierSymbol, SpectralField};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::output::{num, opt, RunContext};
use crate::svg::{line_plot, Axes, Series};

pub fn report_options(cfg: &ExperimentConfig) -> ReportOptions {
    ReportOptions {
        exec: Exec::Parallel,
        lambda6: cfg.energy.lambda6,
        galerkin: cfg.energy.galerkin,
        unit_k1: cfg.energy.unit_k1,
        epsilon0: cfg.energy.epsilon0,
    }
}

pub fn run_trajectory(cfg: &ExperimentConfig, u0: &SpectralField, params: &EquationParams) -> CliResult<Trajectory> {
    Ok(integrate(u0, params, &cfg.stepper)?)
}

#[derive(Serialize)]
struct EnergySummaryFile<'a> {
    params: &'a EquationParams,
    symbol: &'a MultiplierSymbol,
    unit_k1: bool,
    summary: &'a ashlab_core::energies::DriftSummary,
    ledger: Option<&'a IncrementLedger>,
}

/// Energy report with CSV, JSON summary and optional plot. `None` when the
/// grid exceeds the direct `Λ₄` budget.
pub fn emit_energy(
    cfg: &ExperimentConfig,
    ctx: &mut RunContext,
    traj: &Trajectory,
    sym: &MultiplierSymbol,
    stem: &str,
) -> CliResult<Option<(EnergyReport, Option<IncrementLedger>)>> {
    if traj.grid.modes() > LAMBDA4_MAX_MODES {
        return Ok(None);
    }
    let report = energy_report(traj, sym, &report_options(cfg))?;
    let rows = report.rows.iter().map(|r| {
        vec![num(r.t), num(r.i1), opt(r.i2), num(r.e1), num(r.e2), opt(r.de2_fd), opt(r.lambda6)]
    });
    ctx.write_csv(&format!("{stem}.csv"), &EnergyReport::CSV_HEADER, rows)?;
    let ledger = increment_ledger(&report.e2_series()).ok();
    if let Some(l) = &ledger {
        let rows = l.increments.iter().map(|i| vec![i.interval.to_string(), num(i.t_start), num(i.t_end), num(i.increment)]);
        ctx.write_csv(&format!("{stem}_ledger.csv"), &["interval", "t_start", "t_end", "increment"], rows)?;
    }
    ctx.write_json(
        &format!("{stem}_summary.json"),
        &EnergySummaryFile { params: &report.params, symbol: &report.symbol, unit_k1: cfg.energy.unit_k1, summary: &report.summary, ledger: ledger.as_ref() },
    )?;
    let first = report.rows[0];
    let mut series = vec![Series::new("E2(t) - E2(0)", report.rows.iter().map(|r| (r.t, r.e2 - first.e2)).collect())];
    if let Some(i2) = first.i2 {
        series.push(Series::new("I2(t) - I2(0)", report.rows.iter().map(|r| (r.t, r.i2.unwrap_or(i2) - i2)).collect()).dashed());
    }
    let axes = Axes { title: format!("energy trace, N = {}", sym.cutoff()), x_label: "t".into(), y_label: "change".into(), ..Default::default() };
    ctx.write_svg(&format!("{stem}.svg"), line_plot(&axes, &series))?;
    Ok(Some((report, ledger)))
}
