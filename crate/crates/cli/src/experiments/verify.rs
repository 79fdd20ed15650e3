use ashlab_core::energies::{centered_rate, e1, e2_with, i2, lambda6_delta6};
use ashlab_core::models::{Soliton, SolitonFamily, SolitonParams};
use ashlab_core::multilinear::{
    hyperplane_identities_hold, lambda_n, power_integral, random_hyperplane_tuples, sample_delta4_bound, sample_delta6_bound, Band,
    BoundSample, Constant, Delta4, Delta4Table, Delta6Generated, Delta6Printed, Multiplier,
};
use ashlab_core::solver::{integrate, residual, StepperConfig};
use ashlab_core::spectral::{i_operator, l_subadditivity_ratio, random_field};
use ashlab_core::{EquationParams, Exec, Grid, MultiplierSymbol, SpectralField};
use num_complex::Complex64;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::output::{num, opt, RunContext};

const EXEC: Exec = Exec::Parallel;

/// Suites of structural and numerical checks, deterministic for a fixed seed.
pub fn run(cfg: &ExperimentConfig, ctx: &mut RunContext) -> CliResult<()> {
    cfg.validate()?;
    let seed = cfg.seed;
    // the unit-symbol identities need a = c = 0
    let params = EquationParams { a: 0.0, c: 0.0, ..cfg.params };
    spectral(ctx, cfg, seed)?;
    hyperplane(ctx, cfg, seed);
    unit_symbol(ctx, cfg, &params, seed)?;
    normalization(ctx, cfg, seed)?;
    e1_dual_path(ctx, cfg, &params, seed)?;
    delta6_rates(ctx, &params)?;
    bounds(ctx, cfg, &params, seed)?;
    exact(ctx)?;
    ctx.write_checks_csv("verify_checks.csv")?;
    ctx.write_junit("junit.xml", "verify")?;
    Ok(())
}

fn spectral(ctx: &mut RunContext, cfg: &ExperimentConfig, seed: u64) -> CliResult<()> {
    let grid = Grid::new(64, 20.0)?;
    let mut worst = 0.0f64;
    let mut worst_i = 0.0f64;
    let sym = MultiplierSymbol::new(3.0, cfg.multiplier.s)?;
    for j in 0..20 {
        let w = random_field(grid, 0.1, 1.0, seed ^ (0x5eed_0000 + j));
        let direct = (w.physical().iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.dx()).sqrt();
        worst = worst.max((direct - w.l2_norm()).abs() / direct);
        let iw = i_operator(&w, &sym);
        for (i, (a, b)) in iw.spectral().iter().zip(w.spectral()).enumerate() {
            let expected = b * sym.m(grid.xi(i));
            worst_i = worst_i.max((a - expected).norm() / b.norm().max(1e-300));
        }
    }
    ctx.check_le("spectral", "Parseval", worst, 1e-13, "20 random fields, K = 64");
    ctx.check_le("spectral", "I acts as the Fourier multiplier m", worst_i, 1e-15, "");
    let sub = l_subadditivity_ratio(&sym, 1e3, 100_000, seed);
    ctx.check_le("spectral", "l subadditivity ratio", sub, 1.0 + 1e-12, "sup l(x+y)/(l(x)+l(y))");
    Ok(())
}

fn hyperplane(ctx: &mut RunContext, cfg: &ExperimentConfig, seed: u64) {
    let count = cfg.verify.hyperplane_tuples;
    let bad = random_hyperplane_tuples(4, 1 << 20, count, seed ^ 0x4859)
        .iter()
        .filter(|t| !hyperplane_identities_hold([t[0], t[1], t[2], t[3]]))
        .count();
    ctx.check("hyperplane", "factorisations hold in integers", bad == 0, Some(bad as f64), Some(0.0), format!("{count} tuples"));
}

fn unit_symbol(ctx: &mut RunContext, cfg: &ExperimentConfig, params: &EquationParams, seed: u64) -> CliResult<()> {
    let v = &cfg.verify;
    let unit = MultiplierSymbol::unit(cfg.multiplier.s);
    let expected = params.e * (params.d + params.e) / 2.0;
    let build = |dxi: f64| {
        let d = Delta4::new(*params, unit, dxi);
        if v.mutate_delta4 {
            d.mutated()
        } else {
            d
        }
    };
    let note = if v.mutate_delta4 { " (mutated delta4)" } else { "" };

    let d = build(1.0);
    let tuples = random_hyperplane_tuples(4, 10_000, v.unit_tuples, seed ^ 0x0d34);
    let bad = tuples.iter().filter(|t| d.eval_modes([t[0], t[1], t[2], t[3]]) != expected).count();
    ctx.check(
        "unit-symbol",
        "delta4 equals e(d+e)/2 exactly",
        bad == 0,
        Some(bad as f64),
        Some(0.0),
        format!("{} tuples{note}", tuples.len()),
    );

    let grid = Grid::new(64, 20.0)?;
    let d = build(grid.dxi());
    let mut worst = 0.0f64;
    for j in 0..v.unit_fields as u64 {
        let w = random_field(grid, 0.15, 0.5, seed ^ (0xe2_0000 + j));
        let e2 = e2_with(&w, &d, EXEC)?;
        let i2v = i2(&w, params)?;
        worst = worst.max((e2 + i2v).abs() / i2v.abs());
    }
    ctx.check_le("unit-symbol", "E2 = -I2", worst, 1e-10, format!("{} fields, K = 64{note}", v.unit_fields));

    let traj = integrate(&trajectory_data(Grid::new(16, 16.0)?), params, &StepperConfig::new(0.2, 0.02))?;
    let d = build(traj.grid.dxi());
    let table = Delta4Table::for_grid(&d, 16, EXEC);
    let mut worst = 0.0f64;
    for (_, w) in traj.samples() {
        let l6 = lambda6_delta6(w, &table, params, false, EXEC)?;
        worst = worst.max(l6.abs() / power_integral(w, 6));
    }
    ctx.check_le("unit-symbol", "Lambda6(delta6) vanishes", worst, 1e-10, format!("relative to the L6 norm^6, K = 16, {} samples{note}", traj.len()));
    Ok(())
}

fn trajectory_data(grid: Grid) -> SpectralField {
    SpectralField::from_fn(grid, |x| Complex64::new(0.8 / (1.3 * x).cosh(), 0.3 * x.sin() / x.cosh()))
}

fn normalization(ctx: &mut RunContext, cfg: &ExperimentConfig, seed: u64) -> CliResult<()> {
    for (n, k) in [(2usize, 32usize), (4, 32), (6, 24)] {
        let grid = Grid::new(k, 12.0)?;
        let one = Constant::one(n);
        let mut worst = 0.0f64;
        for j in 0..cfg.verify.normalization_fields as u64 {
            let w = random_field(grid, 0.3, 0.5, seed ^ (0x0a00_0000 + 1000 * n as u64 + j));
            let lat = lambda_n(&one, &w, EXEC)?;
            let exact = power_integral(&w, n);
            worst = worst.max((lat - exact).norm() / exact);
        }
        ctx.check_le(
            "normalization",
            &format!("Lambda{n}(1) equals the integral of |w|^{n}"),
            worst,
            1e-12,
            format!("{} fields, K = {k}", cfg.verify.normalization_fields),
        );
    }
    Ok(())
}

fn e1_dual_path(ctx: &mut RunContext, cfg: &ExperimentConfig, params: &EquationParams, seed: u64) -> CliResult<()> {
    let grid = Grid::new(32, 12.0)?;
    let sym = MultiplierSymbol::new(1.5, cfg.multiplier.s)?;
    let mut defects = 0usize;
    for j in 0..cfg.verify.e1_fields as u64 {
        let w = random_field(grid, 0.2, 0.5, seed ^ (0xe1_0000 + j));
        if e1(&w, &sym, params).is_err() {
            defects += 1;
        }
    }
    ctx.check(
        "e1",
        "lattice and physical-space E1 agree",
        defects == 0,
        Some(defects as f64),
        Some(0.0),
        format!("{} fields, K = 32", cfg.verify.e1_fields),
    );
    Ok(())
}

#[derive(Serialize)]
struct RateRow {
    t: f64,
    e2: f64,
    fd: Option<f64>,
    printed: Option<f64>,
    generated: Option<f64>,
}

#[derive(Serialize)]
struct Discrepancy<'a> {
    kind: &'static str,
    modes: usize,
    cutoff: f64,
    s: f64,
    fd_tolerance: f64,
    printed_tolerance: f64,
    worst_fd_mismatch: f64,
    worst_printed_mismatch: f64,
    rows: &'a [RateRow],
}

fn rel_gap(a: f64, b: f64, floor: f64) -> f64 {
    if a.abs() <= floor && b.abs() <= floor {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// `dE₂/dt` by finite differences against `Λ₆(δ₆)`, and the printed `δ₆`
/// against the one generated from `δ₄`.
fn delta6_rates(ctx: &mut RunContext, params: &EquationParams) -> CliResult<()> {
    const K: usize = 16;
    const FD_TOL: f64 = 1e-3;
    const PRINTED_TOL: f64 = 1e-10;
    let grid = Grid::new(K, 16.0)?;
    let sym = MultiplierSymbol::new(1.5, 0.4)?;
    let h = 0.0025;
    let traj = integrate(&trajectory_data(grid), params, &StepperConfig::new(0.05, h))?;
    let delta = Delta4::new(*params, sym, grid.dxi());
    let table = Delta4Table::for_grid(&delta, K, EXEC);
    let band = Band::for_modes(K);
    let printed = Delta6Printed::new(&table, *params).truncated(band);
    let generated = Delta6Generated::new(&table, *params).truncated(band);

    let samples = traj.samples();
    let e2: Vec<f64> = samples.iter().map(|(_, w)| e2_with(w, &delta, EXEC)).collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    let (mut fd_worst, mut pr_worst) = (0.0f64, 0.0f64);
    for (j, (t, w)) in samples.iter().enumerate() {
        let interior = j >= 2 && j + 2 < samples.len();
        let mut row = RateRow { t: *t, e2: e2[j], fd: None, printed: None, generated: None };
        if interior {
            let fd = centered_rate([e2[j - 2], e2[j - 1], e2[j], e2[j + 1], e2[j + 2]], h);
            let p = lambda_n(&printed, w, EXEC)?.re;
            fd_worst = fd_worst.max(rel_gap(fd, p, 1e-12));
            row.fd = Some(fd);
            row.printed = Some(p);
            if (j - 2) % 4 == 0 {
                let g = lambda_n(&generated, w, EXEC)?.re;
                pr_worst = pr_worst.max(rel_gap(p, g, 1e-12));
                row.generated = Some(g);
            }
        }
        rows.push(row);
    }
    ctx.write_csv(
        "delta6_rates.csv",
        &["t", "E2", "dE2_fd", "lambda6_printed", "lambda6_generated"],
        rows.iter().map(|r| vec![num(r.t), num(r.e2), opt(r.fd), opt(r.printed), opt(r.generated)]),
    )?;
    let fd_ok = ctx.check_le("delta6", "finite-difference dE2/dt matches Lambda6(delta6)", fd_worst, FD_TOL, "K = 16, Galerkin band");
    let pr_ok = ctx.check_le("delta6", "printed and generated delta6 agree", pr_worst, PRINTED_TOL, "K = 16, Galerkin band");
    if !(fd_ok && pr_ok) {
        let report = Discrepancy {
            kind: "delta6",
            modes: K,
            cutoff: sym.cutoff(),
            s: sym.s(),
            fd_tolerance: FD_TOL,
            printed_tolerance: PRINTED_TOL,
            worst_fd_mismatch: fd_worst,
            worst_printed_mismatch: pr_worst,
            rows: &rows,
        };
        ctx.write_json("delta6_discrepancy.json", &report)?;
    }
    Ok(())
}

fn bounds(ctx: &mut RunContext, cfg: &ExperimentConfig, params: &EquationParams, seed: u64) -> CliResult<()> {
    let sym = MultiplierSymbol::new(16.0, cfg.multiplier.s)?;
    let delta = Delta4::new(*params, sym, 1.0);
    let v = &cfg.verify;
    let d4 = [256i64, 512].map(|r| sample_delta4_bound(&delta, r, v.delta4_bound_samples, seed ^ 0xb4, EXEC));
    let d6 = [64i64, 128].map(|r| sample_delta6_bound(&delta, r, v.delta6_bound_samples, seed ^ 0xb6, EXEC));
    let mut rows = Vec::new();
    for (kind, pair) in [("delta4", &d4), ("delta6", &d6)] {
        for b in pair.iter() {
            for (c, rec) in b.chunk_maxima.iter().enumerate() {
                let modes: Vec<String> = rec.modes.iter().map(|m| m.to_string()).collect();
                rows.push(vec![kind.to_string(), b.range.to_string(), c.to_string(), modes.join(" "), num(rec.value), num(rec.ratio)]);
            }
        }
        stability(ctx, kind, pair);
    }
    ctx.write_csv("bound_samples.csv", &["kind", "range", "chunk", "modes", "value", "ratio"], rows)?;
    pair_family(ctx, params, &sym)
}

/// `|δ₆| / (N_s m²(N_s))` along tuples with one widening high pair and four
/// fixed modes near the cutoff. Reported only; the ratio is not bounded here.
fn pair_family(ctx: &mut RunContext, params: &EquationParams, sym: &MultiplierSymbol) -> CliResult<()> {
    let delta = Delta4::new(*params, *sym, 1.0);
    let d6 = Delta6Printed::new(&delta, *params);
    let rows = [0i64, 100, 300, 1000, 3000].iter().map(|&j| {
        let t = [24, 16, 108 + j, -15, -17, -116 - j];
        let ns = (116 + j) as f64;
        let v = d6.eval(&t).norm();
        let modes: Vec<String> = t.iter().map(|m| m.to_string()).collect();
        vec![modes.join(" "), num(ns), num(v), num(v / (ns * sym.m(ns).powi(2)))]
    });
    ctx.write_csv("delta6_pair_family.csv", &["modes", "N_s", "abs_delta6", "ratio"], rows)
}

fn stability(ctx: &mut RunContext, kind: &str, pair: &[BoundSample; 2]) {
    let (a, b) = (pair[0].sup_ratio, pair[1].sup_ratio);
    let growth = if a > 0.0 { b / a } else { f64::INFINITY };
    let passed = growth.is_finite() && (0.5..=2.0).contains(&growth);
    ctx.check(
        "bounds",
        &format!("{kind} sup ratio stable when the range doubles"),
        passed,
        Some(growth),
        Some(2.0),
        format!("range {} -> {}: {a:e} -> {b:e}", pair[0].range, pair[1].range),
    );
}

fn exact(ctx: &mut RunContext) -> CliResult<()> {
    let grid = Grid::new(512, 64.0)?;
    let cases = [
        ("two-parameter soliton", EquationParams::new(0.0, 1.0, 0.0, 1.0, 0.0), SolitonFamily::TwoParam, grid.snap(0.7).0),
        ("one-parameter soliton", EquationParams::new(0.6, 1.0, 0.6, 1.0, 0.5), SolitonFamily::OneParam, 0.0),
    ];
    for (name, params, family, carrier) in cases {
        let sol = Soliton::new(&params, &SolitonParams { eta: 1.0, carrier, family })?;
        let worst = [0.0, 0.5, 1.0].iter().map(|&t| residual(|x, tt| sol.eval(x, tt), &params, grid, t)).fold(0.0, f64::max);
        ctx.check_le("exact", &format!("{name} residual"), worst, 1e-10, "L2 residual at t = 0, 0.5, 1");
    }
    Ok(())
}
