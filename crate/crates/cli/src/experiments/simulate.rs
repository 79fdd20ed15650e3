use ashlab_core::energies::{i1, i2};
use ashlab_core::snapshot::write_snapshot;

use super::{emit_energy, run_trajectory};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{num, opt, RunContext};

pub fn run(cfg: &ExperimentConfig, ctx: &mut RunContext) -> CliResult<()> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let params = cfg.params;
    let (u0, exact) = cfg.initial.build(grid, &params, cfg.seed)?;
    let traj = run_trajectory(cfg, &u0, &params)?;
    let has_i2 = params.b * params.e != 0.0;

    let i1_0 = i1(&u0);
    let i2_0 = if has_i2 { Some(i2(&u0, &params)?) } else { None };
    let mut rows = Vec::new();
    let (mut i1_drift, mut i2_drift, mut max_err) = (0.0f64, 0.0f64, 0.0f64);
    for (t, w) in traj.samples() {
        let a = i1(w);
        let b = if has_i2 { Some(i2(w, &params)?) } else { None };
        i1_drift = i1_drift.max(((a - i1_0) / i1_0).abs());
        if let (Some(b), Some(b0)) = (b, i2_0) {
            i2_drift = i2_drift.max(((b - b0) / b0).abs());
        }
        let err = exact.as_ref().map(|ex| {
            let reference = ex.sample(grid, *t);
            let diff = w.physical().iter().zip(reference.physical()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
            diff / reference.max_abs()
        });
        if let Some(e) = err {
            max_err = max_err.max(e);
        }
        rows.push(vec![num(*t), num(a), opt(b), num(w.max_abs()), opt(err)]);
    }
    ctx.write_csv("trajectory.csv", &["t", "I1", "I2", "max_abs", "exact_error"], rows)?;

    if cfg.output.snapshots {
        for (i, (t, w)) in traj.samples().iter().enumerate() {
            let mut bytes = Vec::new();
            write_snapshot(&mut bytes, w, *t, cfg.output.snapshot_dtype).map_err(CliError::from_lab)?;
            ctx.write_bytes(&format!("snapshot_{i:05}.bin"), &bytes)?;
        }
    }

    if !cfg.multiplier.cutoffs.is_empty() {
        emit_energy(cfg, ctx, &traj, &cfg.symbol()?, "energy")?;
    }

    let tol = &cfg.tolerances;
    let detail = format!("dt = {:e}, step-halving estimate {:e}", traj.dt, traj.error_estimate);
    ctx.check_le("simulate", "I1 relative drift", i1_drift, tol.i1_drift, detail.clone());
    if has_i2 {
        ctx.check_le("simulate", "I2 relative drift", i2_drift, tol.i2_drift, detail.clone());
    }
    if exact.is_some() {
        ctx.check_le("simulate", "relative max error vs closed form", max_err, tol.exact_error, detail);
    }
    Ok(())
}
