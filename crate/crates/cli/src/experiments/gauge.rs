use ashlab_core::energies::i2_c3_free;
use ashlab_core::models::{gauge_transform, GaugeParams};
use ashlab_core::LabError;

use super::run_trajectory;
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{num, opt, RunContext};

/// Commuting square: evolve then gauge against gauge then evolve under the
/// gauged parameters.
pub fn run(cfg: &ExperimentConfig, ctx: &mut RunContext) -> CliResult<()> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let params = cfg.params;
    if cfg.gauge.lambdas.is_empty() {
        return Err(CliError::Config("gauge.lambdas is empty".into()));
    }
    let mut resolved = Vec::new();
    for choice in &cfg.gauge.lambdas {
        let lambda = choice.resolve(&params)?;
        if !grid.is_commensurate(lambda) {
            return Err(CliError::from_lab(LabError::IncommensurateGauge { lambda, length: grid.length() }));
        }
        resolved.push((choice.label(), lambda));
    }

    let (u0, _) = cfg.initial.build(grid, &params, cfg.seed)?;
    let traj_u = run_trajectory(cfg, &u0, &params)?;
    let mut rows = Vec::new();
    for (label, lambda) in resolved {
        let gp = params.gauged(lambda);
        let v0 = gauge_transform(&u0, GaugeParams { lambda }, &params, 0.0)?;
        let traj_v = run_trajectory(cfg, &v0, &gp)?;
        let has_i2 = gp.b * gp.e != 0.0;
        let i2_0 = if has_i2 { Some(i2_c3_free(&v0, &gp)?) } else { None };
        let (mut final_disc, mut i2_drift) = (0.0, 0.0f64);
        for ((t, u), (tv, v)) in traj_u.samples().iter().zip(traj_v.samples()) {
            debug_assert!((t - tv).abs() < 1e-12);
            let mapped = gauge_transform(u, GaugeParams { lambda }, &params, *t)?;
            let disc = mapped.physical().iter().zip(v.physical()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max) / v.max_abs();
            final_disc = disc;
            let drift = match i2_0 {
                Some(base) => {
                    let d = ((i2_c3_free(v, &gp)? - base) / base).abs();
                    i2_drift = i2_drift.max(d);
                    Some(d)
                }
                None => None,
            };
            rows.push(vec![label.clone(), num(lambda), num(*t), num(disc), opt(drift)]);
        }
        ctx.check_le(
            "gauge",
            &format!("{label}: commuting-square discrepancy at T"),
            final_disc,
            cfg.tolerances.gauge,
            format!("lambda = {lambda:e}, gauged (a, c) = ({:e}, {:e})", gp.a, gp.c),
        );
        let c3_scale = (3.0 * gp.b * gp.c).abs() + (gp.a * (gp.d + gp.e)).abs();
        if has_i2 && gp.c3().abs() <= 1e-12 * c3_scale.max(1.0) {
            ctx.check_le("gauge", &format!("{label}: c3-free I2 relative drift"), i2_drift, cfg.tolerances.i2_drift, "gauged c3 = 0");
        }
    }
    ctx.write_csv("gauge.csv", &["gauge", "lambda", "t", "discrepancy", "i2_c3_free_drift"], rows)?;
    Ok(())
}
