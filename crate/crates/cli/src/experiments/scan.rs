use ashlab_core::energies::{energy_report, EnergyReport, ReportOptions};
use ashlab_core::multilinear::LAMBDA4_MAX_MODES;
use ashlab_core::parallel::{map_blocks, Exec};
use ashlab_core::MultiplierSymbol;
use serde::Serialize;

use super::{report_options, run_trajectory};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{num, opt, RunContext};
use crate::svg::{line_plot, Axes, Series};

#[derive(Debug, Clone, Serialize)]
pub struct ScanPoint {
    pub cutoff: f64,
    /// `m ≡ 1` on every grid mode, so `E₂` is conserved.
    pub unit_symbol: bool,
    pub sup_increment: Option<f64>,
    pub scaled: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanFit {
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub ratio_spread: Option<f64>,
    pub fitted_points: usize,
    pub points: Vec<ScanPoint>,
}

/// Largest `|E₂(t) − E₂(t_j)|` over `t` in each unit interval `[t_j, t_j + 1]`.
pub fn sup_unit_increment(report: &EnergyReport) -> f64 {
    let t0 = report.rows[0].t;
    let mut best = 0.0f64;
    let mut start = report.rows[0].e2;
    let mut j = 0usize;
    for r in &report.rows {
        while r.t > t0 + (j + 1) as f64 + 1e-9 {
            j += 1;
        }
        if (r.t - (t0 + j as f64)).abs() <= 1e-9 {
            start = r.e2;
        }
        best = best.max((r.e2 - start).abs());
    }
    best
}

/// Least-squares line through `(ln x, ln y)`.
pub fn loglog_fit(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx;
    Some((slope, my - slope * mx))
}

pub fn run(cfg: &ExperimentConfig, ctx: &mut RunContext) -> CliResult<()> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    if grid.modes() > LAMBDA4_MAX_MODES {
        return Err(CliError::Config(format!(
            "energy-scan evaluates E2 directly and needs K <= {LAMBDA4_MAX_MODES}, got {}",
            grid.modes()
        )));
    }
    let cutoffs = &cfg.multiplier.cutoffs;
    if cutoffs.len() < 2 || cutoffs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Config("energy-scan needs at least two strictly increasing cutoffs".into()));
    }
    let xi_max = grid.max_wavenumber();
    let symbols = cutoffs.iter().map(|&n| MultiplierSymbol::new(n, cfg.multiplier.s)).collect::<Result<Vec<_>, _>>()?;
    let unit: Vec<bool> = cutoffs.iter().map(|&n| n >= xi_max).collect();

    let mut points: Vec<ScanPoint> =
        cutoffs.iter().zip(&unit).map(|(&n, &u)| ScanPoint { cutoff: n, unit_symbol: u, sup_increment: None, scaled: None }).collect();

    if unit.iter().all(|&u| u) {
        ctx.check("energy-scan", "scan", true, None, None, format!("every cutoff is >= the largest grid wavenumber {xi_max:e}; E2 is conserved"));
        write_outputs(ctx, &points, None, cfg)?;
        return Ok(());
    }

    let (u0, _) = cfg.initial.build(grid, &cfg.params, cfg.seed)?;
    let traj = run_trajectory(cfg, &u0, &cfg.params)?;
    let opts = ReportOptions { lambda6: false, ..report_options(cfg) };
    let active: Vec<usize> = (0..cutoffs.len()).filter(|&i| !unit[i]).collect();
    let reports = map_blocks(Exec::Parallel, active.len(), |j| energy_report(&traj, &symbols[active[j]], &opts));
    for (&i, report) in active.iter().zip(reports) {
        let report = report?;
        let inc = sup_unit_increment(&report);
        points[i].sup_increment = Some(inc);
        points[i].scaled = Some(inc * cutoffs[i].powi(3));
        let rows = report.rows.iter().map(|r| vec![num(r.t), num(r.i1), opt(r.i2), num(r.e1), num(r.e2), opt(r.de2_fd), opt(r.lambda6)]);
        ctx.write_csv(&format!("scan_energy_N{}.csv", cutoffs[i]), &EnergyReport::CSV_HEADER, rows)?;
    }
    let fit_pts: Vec<(f64, f64)> = points.iter().filter_map(|p| p.sup_increment.filter(|&v| v > 0.0).map(|v| (p.cutoff, v))).collect();
    let degenerate = fit_pts.is_empty();
    ctx.check("energy-scan", "nondegenerate increments", !degenerate, None, None, if degenerate { "all increments are zero" } else { "" });
    let fit = write_outputs(ctx, &points, loglog_fit(&fit_pts), cfg)?;
    if !degenerate {
        match fit.slope {
            Some(slope) => {
                ctx.check_le("energy-scan", "log-log slope", slope, cfg.tolerances.max_slope, format!("{} points", fit.fitted_points));
            }
            None => ctx.check("energy-scan", "log-log slope", false, None, Some(cfg.tolerances.max_slope), "fewer than two fit points"),
        }
        if let Some(spread) = fit.ratio_spread {
            ctx.check_le("energy-scan", "spread of increment*N^3", spread, cfg.tolerances.ratio_spread, "");
        }
    }
    Ok(())
}

fn write_outputs(ctx: &mut RunContext, points: &[ScanPoint], fit: Option<(f64, f64)>, cfg: &ExperimentConfig) -> CliResult<ScanFit> {
    let rows = points.iter().map(|p| vec![num(p.cutoff), p.unit_symbol.to_string(), opt(p.sup_increment), opt(p.scaled)]);
    ctx.write_csv("scan.csv", &["N", "unit_symbol", "sup_increment", "increment_times_N3"], rows)?;
    let scaled: Vec<f64> = points.iter().filter_map(|p| p.scaled).filter(|&v| v > 0.0).collect();
    let spread = (!scaled.is_empty()).then(|| {
        let hi = scaled.iter().cloned().fold(f64::MIN, f64::max);
        let lo = scaled.iter().cloned().fold(f64::MAX, f64::min);
        hi / lo
    });
    let out = ScanFit {
        slope: fit.map(|f| f.0),
        intercept: fit.map(|f| f.1),
        ratio_spread: spread,
        fitted_points: scaled.len(),
        points: points.to_vec(),
    };
    ctx.write_csv(
        "scan_fit.csv",
        &["slope", "intercept", "ratio_spread", "fitted_points"],
        vec![vec![opt(out.slope), opt(out.intercept), opt(out.ratio_spread), out.fitted_points.to_string()]],
    )?;
    ctx.write_json("scan_fit.json", &out)?;
    let measured: Vec<(f64, f64)> = points.iter().filter_map(|p| p.sup_increment.filter(|&v| v > 0.0).map(|v| (p.cutoff, v))).collect();
    let mut series = vec![Series::new("sup |E2 increment|", measured.clone())];
    if let Some(&(n0, v0)) = measured.first() {
        series.push(Series::new("N^-3 reference", cfg.multiplier.cutoffs.iter().map(|&n| (n, v0 * (n0 / n).powi(3))).collect()).dashed());
    }
    let title = match out.slope {
        Some(s) => format!("E2 increment vs N (slope {s:.3}, s = {})", cfg.multiplier.s),
        None => "E2 increment vs N".to_string(),
    };
    let axes = Axes { title, x_label: "N".into(), y_label: "sup increment over unit interval".into(), log_x: true, log_y: true };
    ctx.write_svg("scan.svg", line_plot(&axes, &series))?;
    Ok(out)
}
