use ashlab_core::solver::residual;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{num, RunContext};

/// Residual of the closed-form solution in the equation at the sample times.
pub fn run(cfg: &ExperimentConfig, ctx: &mut RunContext) -> CliResult<()> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let (_, exact) = cfg.initial.build(grid, &cfg.params, cfg.seed)?;
    let exact = exact.ok_or_else(|| CliError::Config(format!("initial data '{}' has no closed form", cfg.initial.label())))?;
    let steps = (cfg.stepper.t_final / cfg.stepper.sample_every).round() as usize;
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for j in 0..=steps {
        let t = j as f64 * cfg.stepper.sample_every;
        let r = residual(|x, tt| exact.eval(x, tt), &cfg.params, grid, t);
        worst = worst.max(r);
        rows.push(vec![num(t), num(r)]);
    }
    ctx.write_csv("residual.csv", &["t", "residual_l2"], rows)?;
    ctx.check_le("exact-residual", "max L2 residual", worst, cfg.tolerances.residual, cfg.initial.label());
    Ok(())
}
