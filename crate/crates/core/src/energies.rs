//! Conserved quantities `I₁, I₂` and the modified energies `E₁, E₂` along
//! trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::models::EquationParams;
use crate::multilinear::{lambda_n, m2_multiplier, Band, Delta4, Delta4Table, Delta6Printed, LAMBDA6_MAX_MODES};
use crate::parallel::{map_blocks, Exec};
use crate::solver::Trajectory;
use crate::spectral::{i_operator, MultiplierSymbol, SpectralField};

/// Relative tolerance of the two `E₁` evaluation paths.
pub const E1_DUAL_PATH_TOL: f64 = 1e-12;

/// `I₁ = ∫|u|²`.
pub fn i1(u: &SpectralField) -> f64 {
    u.l2_norm().powi(2)
}

/// `Im ∫ u ∂ₓū`.
pub fn momentum_term(u: &SpectralField) -> f64 {
    let grid = u.grid();
    let k = grid.modes() as f64;
    let sum: f64 = (0..grid.modes()).map(|i| -grid.xi(i) * u.spectral()[i].norm_sqr()).sum();
    sum * grid.length() / (k * k)
}

/// `I₂ = c₁∫|∂ₓu|² + c₂∫|u|⁴ + c₃ Im∫u∂ₓū`.
pub fn i2(u: &SpectralField, params: &EquationParams) -> Result<f64> {
    if params.b * params.e == 0.0 {
        return Err(LabError::InvalidParameter("I2 requires b*e != 0".into()));
    }
    let grad = u.derivative(1).l2_norm().powi(2);
    let quartic = u.integrate_padded(2, |v| v.norm_sqr().powi(2));
    let c3 = params.c3();
    let mom = if c3 != 0.0 { c3 * momentum_term(u) } else { 0.0 };
    Ok(params.c1() * grad + params.c2() * quartic + mom)
}

/// `I₂` without the `c₃` term; conserved once the gauge has removed `c₃`.
pub fn i2_c3_free(u: &SpectralField, params: &EquationParams) -> Result<f64> {
    i2(u, &EquationParams { c: params.a * (params.d + params.e) / (3.0 * params.b), ..*params })
}

/// `‖∂ₓIw‖²`.
pub fn smoothed_gradient_sq(w: &SpectralField, sym: &MultiplierSymbol) -> f64 {
    i_operator(w, sym).derivative(1).l2_norm().powi(2)
}

/// `E₁ = k₁Λ₂(M₂; w) = −k₁‖∂ₓIw‖²`, both paths evaluated.
pub fn e1(w: &SpectralField, sym: &MultiplierSymbol, params: &EquationParams) -> Result<f64> {
    let k1 = params.k1();
    let physical = -k1 * smoothed_gradient_sq(w, sym);
    let lattice = k1 * lambda_n(&m2_multiplier(*sym, w.grid().dxi()), w, Exec::Sequential)?.re;
    let scale = physical.abs().max(lattice.abs());
    if (physical - lattice).abs() > E1_DUAL_PATH_TOL * scale {
        return Err(LabError::Defect(format!("E1 paths disagree: {physical} vs {lattice}")));
    }
    Ok(physical)
}

/// `Λ₄(δ₄; w)`.
pub fn quartic_correction(w: &SpectralField, delta: &Delta4, exec: Exec) -> Result<f64> {
    Ok(lambda_n(delta, w, exec)?.re)
}

/// `E₂ = E₁ + Λ₄(δ₄; w)`.
pub fn e2(w: &SpectralField, sym: &MultiplierSymbol, params: &EquationParams, exec: Exec) -> Result<f64> {
    let delta = Delta4::new(*params, *sym, w.grid().dxi());
    e2_with(w, &delta, exec)
}

pub fn e2_with(w: &SpectralField, delta: &Delta4, exec: Exec) -> Result<f64> {
    Ok(e1(w, delta.symbol(), delta.params())? + quartic_correction(w, delta, exec)?)
}

/// `Λ₆(δ₆; w)` from the printed form. With `galerkin` the merged slots are
/// restricted to the grid band, which makes it the exact rate of `E₂` along
/// the truncated flow; without it the functional is the continuum one.
pub fn lambda6_delta6(w: &SpectralField, table: &Delta4Table, params: &EquationParams, galerkin: bool, exec: Exec) -> Result<f64> {
    let mut d6 = Delta6Printed::new(table, *params);
    if galerkin {
        d6 = d6.truncated(Band::for_modes(w.grid().modes()));
    }
    Ok(lambda_n(&d6, w, exec)?.re)
}

/// Fourth-order centered difference of five equally spaced values.
pub fn centered_rate(values: [f64; 5], h: f64) -> f64 {
    (values[0] - 8.0 * values[1] + 8.0 * values[3] - values[4]) / (12.0 * h)
}

/// `∂ₜE₂` at the centre of a five-sample window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSample {
    pub t: f64,
    pub fd: f64,
    pub lambda6: Option<f64>,
}

pub fn e2_rate(window: &[(f64, SpectralField)], delta: &Delta4, galerkin: bool, exec: Exec) -> Result<RateSample> {
    if window.len() != 5 {
        return Err(LabError::InvalidParameter(format!("rate window needs 5 samples, got {}", window.len())));
    }
    let h = window[1].0 - window[0].0;
    for pair in window.windows(2) {
        if ((pair[1].0 - pair[0].0) - h).abs() > 1e-9 * h.abs().max(1.0) {
            return Err(LabError::InvalidParameter("rate window is not equally spaced".into()));
        }
    }
    let mut e = [0.0; 5];
    for (slot, (_, w)) in e.iter_mut().zip(window) {
        *slot = e2_with(w, delta, exec)?;
    }
    let centre = &window[2].1;
    let lambda6 = if centre.grid().modes() <= LAMBDA6_MAX_MODES {
        let table = Delta4Table::for_grid(delta, centre.grid().modes(), exec);
        Some(lambda6_delta6(centre, &table, delta.params(), galerkin, exec)?)
    } else {
        None
    };
    Ok(RateSample { t: window[2].0, fd: centered_rate(e, h), lambda6 })
}

/// Options for building an [`EnergyReport`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ReportOptions {
    pub exec: Exec,
    /// Evaluate `Λ₆(δ₆)` directly where the grid allows it.
    pub lambda6: bool,
    /// Band-restricted `Λ₆`, matching the truncated flow.
    pub galerkin: bool,
    /// Report `E₁, E₂` with `k₁` normalized to one.
    pub unit_k1: bool,
    /// Threshold `ε₀` for the `‖∂ₓIu‖² ≤ 2ε₀²` monitor.
    pub epsilon0: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self { exec: Exec::Parallel, lambda6: true, galerkin: true, unit_k1: false, epsilon0: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub t: f64,
    pub i1: f64,
    pub i2: Option<f64>,
    pub e1: f64,
    pub e2: f64,
    pub de2_fd: Option<f64>,
    pub lambda6: Option<f64>,
    pub smoothed_gradient_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSummary {
    pub i1_rel: f64,
    pub i2_rel: Option<f64>,
    pub e2_abs: f64,
    pub e2_rel: f64,
    pub e2_sup_increment: f64,
    pub max_rate_mismatch: Option<f64>,
    pub it1_threshold: f64,
    pub it1_max: f64,
    pub it1_satisfied: bool,
}

/// Time series of conserved and modified energies along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub params: EquationParams,
    pub symbol: MultiplierSymbol,
    pub rows: Vec<EnergyRow>,
    pub summary: DriftSummary,
}

impl EnergyReport {
    pub const CSV_HEADER: [&'static str; 7] = ["t", "I1", "I2", "E1", "E2", "dE2_fd", "lambda6"];

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn e2_series(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.t, r.e2)).collect()
    }
}

fn rel(delta: f64, base: f64) -> f64 {
    if base == 0.0 {
        delta.abs()
    } else {
        (delta / base).abs()
    }
}

pub fn energy_report(traj: &Trajectory, sym: &MultiplierSymbol, opts: &ReportOptions) -> Result<EnergyReport> {
    let params = traj.params;
    let samples = traj.samples();
    if samples.is_empty() {
        return Err(LabError::InvalidParameter("empty trajectory".into()));
    }
    let delta = Delta4::new(params, *sym, traj.grid.dxi());
    let has_i2 = params.b * params.e != 0.0;
    let norm = if opts.unit_k1 { params.k1() } else { 1.0 };
    if norm == 0.0 {
        return Err(LabError::InvalidParameter("k1 = 3be vanishes; cannot normalize".into()));
    }
    let want_l6 = opts.lambda6 && traj.grid.modes() <= LAMBDA6_MAX_MODES;
    let table = if want_l6 { Some(Delta4Table::for_grid(&delta, traj.grid.modes(), opts.exec)) } else { None };

    let rows: Vec<Result<EnergyRow>> = map_blocks(opts.exec, samples.len(), |i| {
        let (t, w) = &samples[i];
        let e1v = e1(w, sym, &params)?;
        let e2v = e1v + quartic_correction(w, &delta, Exec::Sequential)?;
        let lambda6 = match &table {
            Some(tab) => Some(lambda6_delta6(w, tab, &params, opts.galerkin, Exec::Sequential)? / norm),
            None => None,
        };
        Ok(EnergyRow {
            t: *t,
            i1: i1(w),
            i2: if has_i2 { Some(i2(w, &params)?) } else { None },
            e1: e1v / norm,
            e2: e2v / norm,
            de2_fd: None,
            lambda6,
            smoothed_gradient_sq: smoothed_gradient_sq(w, sym),
        })
    });
    let mut rows = rows.into_iter().collect::<Result<Vec<_>>>()?;

    let n = rows.len();
    if n >= 5 {
        for i in 2..n - 2 {
            let h = rows[i].t - rows[i - 1].t;
            let uniform = (i - 2..i + 2).all(|j| ((rows[j + 1].t - rows[j].t) - h).abs() <= 1e-9 * h.max(1e-300));
            if uniform && h > 0.0 {
                let e = [rows[i - 2].e2, rows[i - 1].e2, rows[i].e2, rows[i + 1].e2, rows[i + 2].e2];
                rows[i].de2_fd = Some(centered_rate(e, h));
            }
        }
    }

    let first = rows[0];
    let i1_rel = rows.iter().map(|r| rel(r.i1 - first.i1, first.i1)).fold(0.0, f64::max);
    let i2_rel = first.i2.map(|base| rows.iter().map(|r| rel(r.i2.unwrap_or(base) - base, base)).fold(0.0, f64::max));
    let e2_abs = rows.iter().map(|r| (r.e2 - first.e2).abs()).fold(0.0, f64::max);
    let e2_sup_increment = rows.iter().filter(|r| r.t <= first.t + 1.0 + 1e-9).map(|r| (r.e2 - first.e2).abs()).fold(0.0, f64::max);
    let max_rate_mismatch = rows
        .iter()
        .filter_map(|r| Some((r.de2_fd?, r.lambda6?)))
        .map(|(fd, l6)| (fd - l6).abs())
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
    let it1_threshold = 2.0 * opts.epsilon0 * opts.epsilon0;
    let it1_max = rows.iter().map(|r| r.smoothed_gradient_sq).fold(0.0, f64::max);
    let summary = DriftSummary {
        i1_rel,
        i2_rel,
        e2_abs,
        e2_rel: rel(e2_abs, first.e2),
        e2_sup_increment,
        max_rate_mismatch,
        it1_threshold,
        it1_max,
        it1_satisfied: it1_max <= it1_threshold,
    };
    Ok(EnergyReport { params, symbol: *sym, rows, summary })
}

/// One unit-interval increment of `E₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Increment {
    pub interval: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub increment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementLedger {
    pub increments: Vec<Increment>,
    pub cumulative: f64,
    pub total: f64,
    pub reconciled: bool,
}

impl IncrementLedger {
    pub fn sup_increment(&self) -> f64 {
        self.increments.iter().map(|i| i.increment.abs()).fold(0.0, f64::max)
    }
}

/// Per-unit-interval increments `E₂(j) − E₂(j−1)` from an `E₂` time series.
pub fn increment_ledger(series: &[(f64, f64)]) -> Result<IncrementLedger> {
    let Some(&(t0, _)) = series.first() else {
        return Err(LabError::InvalidParameter("empty E2 series".into()));
    };
    let find = |t: f64| series.iter().find(|(s, _)| (s - t).abs() <= 1e-9 * t.abs().max(1.0)).map(|p| p.1);
    let mut increments = Vec::new();
    let mut j = 1;
    let mut prev = series[0].1;
    while let Some(e) = find(t0 + j as f64) {
        increments.push(Increment { interval: j, t_start: t0 + (j - 1) as f64, t_end: t0 + j as f64, increment: e - prev });
        prev = e;
        j += 1;
    }
    if increments.is_empty() {
        return Err(LabError::InvalidParameter("trajectory does not span a unit interval with samples at integer offsets".into()));
    }
    let mut acc = crate::parallel::CompensatedSum::default();
    for inc in &increments {
        acc.add(num_complex::Complex64::new(inc.increment, 0.0));
    }
    let cumulative = acc.value().re;
    let total = prev - series[0].1;
    let reconciled = (cumulative - total).abs() <= 1e-10 * total.abs().max(series[0].1.abs()).max(1e-300);
    Ok(IncrementLedger { increments, cumulative, total, reconciled })
}
