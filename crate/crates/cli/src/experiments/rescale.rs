use ashlab_core::models::{choose_lambda, rescale_data};
use ashlab_core::spectral::{fractional_derivative, i_operator, sobolev_norm};
use ashlab_core::MultiplierSymbol;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{num, RunContext};

/// Rescaling search and the scaling laws `‖D^σ φ_λ‖ = λ^{−1/2−σ} ‖D^σ φ‖`.
pub fn run(cfg: &ExperimentConfig, ctx: &mut RunContext) -> CliResult<()> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let s = cfg.multiplier.s;
    let c0 = cfg.rescale.c0;
    let mut rows = Vec::new();
    for (idx, data) in cfg.rescale.corpus_or_default().iter().enumerate() {
        let (phi, _) = data.build(grid, &cfg.params, cfg.seed.wrapping_add(idx as u64))?;
        // smallest configured cutoff above the admissibility floor
        let mut cutoffs = cfg.multiplier.cutoffs.clone();
        cutoffs.sort_by(f64::total_cmp);
        let floor = (phi.l2_norm() / c0).powf(2.0 * s / (1.0 - s));
        let Some(&n) = cutoffs.iter().find(|&&n| n > floor) else {
            return Err(CliError::Config(format!("{}: no cutoff exceeds the floor {floor:e}", data.label())));
        };
        let cert = choose_lambda(&phi, s, n, c0)?;
        let scaled = rescale_data(&phi, cert.lambda)?;
        let check_sym = MultiplierSymbol::new(n, s)?;
        let measured = sobolev_norm(&i_operator(&scaled, &check_sym), 1.0);
        let lam = cert.lambda;
        let l2 = (scaled.l2_norm() / phi.l2_norm() - lam.powf(-0.5)).abs() / lam.powf(-0.5);
        let hom = |sigma: f64| -> CliResult<f64> {
            let a = fractional_derivative(&scaled, sigma)?.l2_norm();
            let b = fractional_derivative(&phi, sigma)?.l2_norm();
            let expected = lam.powf(-0.5 - sigma);
            Ok((a / b - expected).abs() / expected)
        };
        let (hs, h1) = (hom(s)?, hom(1.0)?);
        let label = format!("{}#{idx}", data.label());
        ctx.check_le("rescale", &format!("{label}: smoothed H1 norm below c0"), measured, c0 * (1.0 - 1e-12), format!("lambda = {lam:e} after {} doublings", cert.doublings));
        let worst = l2.max(hs).max(h1);
        ctx.check_le("rescale", &format!("{label}: scaling exponents"), worst, cfg.tolerances.rescale_identity, "L2, H^s, H^1 ratios");
        rows.push(vec![
            label,
            num(n),
            num(lam),
            num(cert.initial_guess),
            cert.doublings.to_string(),
            num(measured),
            num(c0),
            num(l2),
            num(hs),
            num(h1),
        ]);
    }
    ctx.write_csv(
        "rescale.csv",
        &["data", "N", "lambda", "initial_guess", "doublings", "smoothed_h1", "c0", "l2_ratio_error", "hs_ratio_error", "h1_ratio_error"],
        rows,
    )?;
    Ok(())
}
