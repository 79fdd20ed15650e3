//! Equation coefficients, gauge and scaling symmetries, and the closed-form
//! solution families used as solver oracles.
//!
//! The equation is
//! `∂ₜu + i a ∂ₓ²u + b ∂ₓ³u + i c |u|²u + d |u|²∂ₓu + e u²∂ₓū = 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::spectral::{fractional_derivative, i_operator, sobolev_norm, Grid, MultiplierSymbol, SpectralField};

const FLAG_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquationParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

/// Which solution families and functionals are available for a parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capabilities {
    pub has_i2: bool,
    pub mkdv_reducible: bool,
    pub soliton2p_ok: bool,
    pub soliton1p_ok: bool,
    pub planewave_ok: bool,
}

impl EquationParams {
    pub const fn new(a: f64, b: f64, c: f64, d: f64, e: f64) -> Self {
        Self { a, b, c, d, e }
    }

    /// Coefficient of `∫|∂ₓu|²` in the second conserved quantity.
    pub fn c1(&self) -> f64 {
        3.0 * self.b * self.e
    }

    pub fn c2(&self) -> f64 {
        -self.e * (self.e + self.d) / 2.0
    }

    pub fn c3(&self) -> f64 {
        3.0 * self.b * self.c - self.a * (self.e + self.d)
    }

    /// Normalization of the first modified energy.
    pub fn k1(&self) -> f64 {
        3.0 * self.b * self.e
    }

    pub fn is_linear(&self) -> bool {
        self.c == 0.0 && self.d == 0.0 && self.e == 0.0
    }

    /// `a = c = 0`, where the correction multiplier has the closed analysis.
    pub fn is_certified_path(&self) -> bool {
        self.a == 0.0 && self.c == 0.0
    }

    pub fn validate(&self) -> Result<Capabilities> {
        let Self { a, b, c, d, e } = *self;
        for (name, v) in [("a", a), ("b", b), ("c", c), ("d", d), ("e", e)] {
            if !v.is_finite() {
                return Err(LabError::InvalidParameter(format!("{name} is not finite")));
            }
        }
        if b == 0.0 {
            return Err(LabError::InvalidParameter("b must be nonzero".into()));
        }
        Ok(Capabilities {
            has_i2: b * e != 0.0,
            mkdv_reducible: (c - (d - e) * a / (3.0 * b)).abs() <= FLAG_TOL,
            soliton2p_ok: e == 0.0 && b * d > 0.0 && (c - a * d / (3.0 * b)).abs() <= FLAG_TOL,
            soliton1p_ok: e != 0.0 && b * (d + e) > 0.0,
            planewave_ok: d != e,
        })
    }

    /// Coefficients of the equation satisfied by the gauge-transformed field.
    pub fn gauged(&self, lambda: f64) -> Self {
        Self {
            a: self.a - 3.0 * lambda * self.b,
            b: self.b,
            c: self.c - lambda * (self.d - self.e),
            d: self.d,
            e: self.e,
        }
    }

    /// Gauge frequency `a/3b` that removes the Schrödinger term.
    pub fn mkdv_gauge(&self) -> f64 {
        self.a / (3.0 * self.b)
    }

    /// Gauge frequency `-c₃/6be` that removes the `Im ∫ u ∂ₓū` term from `I₂`.
    pub fn c3_gauge(&self) -> f64 {
        -self.c3() / (6.0 * self.b * self.e)
    }
}

/// Gauge frequency `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaugeParams {
    pub lambda: f64,
}

/// `v(x,t) = exp(iλx + i(aλ² − 2bλ³)t) u(x + (2aλ − 3bλ²)t, t)`.
///
/// The translation is a spectral phase shift; the modulation is pointwise and
/// requires `λ` to sit on the wavenumber lattice.
pub fn gauge_transform(u: &SpectralField, gauge: GaugeParams, params: &EquationParams, t: f64) -> Result<SpectralField> {
    let lambda = gauge.lambda;
    let grid = u.grid();
    if !grid.is_commensurate(lambda) {
        return Err(LabError::IncommensurateGauge { lambda, length: grid.length() });
    }
    let EquationParams { a, b, .. } = *params;
    let shift = (2.0 * a * lambda - 3.0 * b * lambda * lambda) * t;
    let phase_t = (a * lambda * lambda - 2.0 * b * lambda.powi(3)) * t;
    let shifted = if shift == 0.0 { u.clone() } else { u.translate(shift) };
    if lambda == 0.0 && phase_t == 0.0 {
        return Ok(shifted);
    }
    Ok(shifted.map_physical(|x, v| v * Complex64::from_polar(1.0, lambda * x + phase_t)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolitonFamily {
    /// `e = 0`, `bd > 0`, `c = ad/3b`: scale and carrier are free.
    TwoParam,
    /// `e ≠ 0`, `b(d+e) > 0`: the carrier is fixed by the coefficients.
    OneParam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonParams {
    pub eta: f64,
    /// Carrier wavenumber; ignored (derived) for the one-parameter family.
    #[serde(default)]
    pub carrier: f64,
    pub family: SolitonFamily,
}

/// Envelope speed `ψ(η, N) = 2aN + 3bN² − η²b`.
pub fn envelope_speed(params: &EquationParams, eta: f64, n: f64) -> f64 {
    2.0 * params.a * n + 3.0 * params.b * n * n - eta * eta * params.b
}

/// Phase speed `φ(η, N) = aN² + bN³ − 3η²bN − aη²`.
pub fn phase_speed(params: &EquationParams, eta: f64, n: f64) -> f64 {
    let EquationParams { a, b, .. } = *params;
    a * n * n + b * n.powi(3) - 3.0 * eta * eta * b * n - a * eta * eta
}

/// Closed-form travelling soliton `η (A cosh(η(x+ψt)))⁻¹ exp i(wx + φt)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Soliton {
    pub eta: f64,
    pub amplitude_a: f64,
    pub carrier: f64,
    pub envelope_speed: f64,
    pub phase_speed: f64,
}

impl Soliton {
    pub fn new(params: &EquationParams, sp: &SolitonParams) -> Result<Self> {
        let caps = params.validate()?;
        if !(sp.eta > 0.0) {
            return Err(LabError::InvalidParameter(format!("soliton scale η must be positive, got {}", sp.eta)));
        }
        let EquationParams { a, b, c, d, e } = *params;
        let (amplitude_a, carrier) = match sp.family {
            SolitonFamily::TwoParam => {
                if !caps.soliton2p_ok {
                    return Err(LabError::FamilyPrecondition {
                        family: "two-parameter soliton",
                        reason: "needs e = 0, bd > 0 and c = ad/3b".into(),
                    });
                }
                ((d / (6.0 * b)).sqrt(), sp.carrier)
            }
            SolitonFamily::OneParam => {
                if !caps.soliton1p_ok {
                    return Err(LabError::FamilyPrecondition {
                        family: "one-parameter soliton",
                        reason: "needs e ≠ 0 and b(d+e) > 0".into(),
                    });
                }
                let amp = ((e + d) / (6.0 * b)).sqrt();
                (amp, (c - 2.0 * a * amp * amp) / (2.0 * e))
            }
        };
        Ok(Self {
            eta: sp.eta,
            amplitude_a,
            carrier,
            envelope_speed: envelope_speed(params, sp.eta, carrier),
            phase_speed: phase_speed(params, sp.eta, carrier),
        })
    }

    pub fn eval(&self, x: f64, t: f64) -> Complex64 {
        let y = self.eta * (x + self.envelope_speed * t);
        let envelope = self.eta / (self.amplitude_a * y.cosh());
        Complex64::from_polar(envelope, self.carrier * x + self.phase_speed * t)
    }

    pub fn sample(&self, grid: Grid, t: f64) -> SpectralField {
        SpectralField::from_fn(grid, |x| self.eval(x, t))
    }
}

pub fn soliton_two_param(x: f64, t: f64, params: &EquationParams, sp: &SolitonParams) -> Result<Complex64> {
    let sp = SolitonParams { family: SolitonFamily::TwoParam, ..*sp };
    Ok(Soliton::new(params, &sp)?.eval(x, t))
}

pub fn soliton_one_param(x: f64, t: f64, params: &EquationParams, sp: &SolitonParams) -> Result<Complex64> {
    let sp = SolitonParams { family: SolitonFamily::OneParam, ..*sp };
    Ok(Soliton::new(params, &sp)?.eval(x, t))
}

/// Plane wave `exp i(Cx + Dt + C₀)` with `C = c/(e−d)` snapped to the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneWave {
    pub wavenumber: f64,
    pub frequency: f64,
    pub phase: f64,
    pub snap_error: f64,
}

impl PlaneWave {
    pub fn new(params: &EquationParams, grid: &Grid, phase: f64) -> Result<Self> {
        if params.d == params.e {
            return Err(LabError::FamilyPrecondition { family: "plane wave", reason: "needs d ≠ e".into() });
        }
        let exact = params.c / (params.e - params.d);
        let (wavenumber, snap_error) = grid.snap(exact);
        let frequency = params.a * wavenumber * wavenumber + params.b * wavenumber.powi(3);
        Ok(Self { wavenumber, frequency, phase, snap_error })
    }

    pub fn eval(&self, x: f64, t: f64) -> Complex64 {
        Complex64::from_polar(1.0, self.wavenumber * x + self.frequency * t + self.phase)
    }

    pub fn sample(&self, grid: Grid, t: f64) -> SpectralField {
        SpectralField::from_fn(grid, |x| self.eval(x, t))
    }
}

pub fn plane_wave(x: f64, t: f64, params: &EquationParams, grid: &Grid, phase: f64) -> Result<Complex64> {
    Ok(PlaneWave::new(params, grid, phase)?.eval(x, t))
}

/// Any closed-form solution, as a sampler of `(x, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExactSolution {
    Soliton(Soliton),
    PlaneWave(PlaneWave),
}

impl ExactSolution {
    pub fn eval(&self, x: f64, t: f64) -> Complex64 {
        match self {
            Self::Soliton(s) => s.eval(x, t),
            Self::PlaneWave(p) => p.eval(x, t),
        }
    }

    pub fn sample(&self, grid: Grid, t: f64) -> SpectralField {
        SpectralField::from_fn(grid, |x| self.eval(x, t))
    }
}

/// Multiply by a unimodular constant.
pub fn phase_rotate(u: &SpectralField, alpha: Complex64) -> Result<SpectralField> {
    if (alpha.norm() - 1.0).abs() > 1e-12 {
        return Err(LabError::InvalidParameter(format!("|α| = {} but must be 1", alpha.norm())));
    }
    Ok(u.scale(alpha))
}

/// `φ_λ(x) = λ⁻¹ φ(x/λ)` on a box of length `λL` with the same mode count.
///
/// Grid points map onto grid points, so the rescaled samples are exact.
pub fn rescale_data(phi: &SpectralField, lambda: f64) -> Result<SpectralField> {
    if !(lambda >= 1.0) || !lambda.is_finite() {
        return Err(LabError::InvalidParameter(format!("rescaling factor must be ≥ 1, got {lambda}")));
    }
    if lambda == 1.0 {
        return Ok(phi.clone());
    }
    let grid = phi.grid().rescaled(lambda)?;
    let inv = 1.0 / lambda;
    SpectralField::from_physical(grid, phi.physical().iter().map(|v| v * inv).collect())
}

/// Outcome of the rescaling search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaCertificate {
    pub lambda: f64,
    pub initial_guess: f64,
    pub doublings: u32,
    /// Measured `‖Iφ_λ‖_{H¹}`.
    pub smoothed_norm: f64,
    pub c0: f64,
}

const MAX_DOUBLINGS: u32 = 64;

/// Pick `λ` so that `‖Iφ_λ‖_{H¹} < c₀`.
///
/// Starts from `N^{2(1−s)/(1+2s)} (‖D^s φ‖/c₀)^{2/(1+2s)}` and doubles until
/// the measured norm certifies the bound.
pub fn choose_lambda(phi: &SpectralField, s: f64, cutoff: f64, c0: f64) -> Result<LambdaCertificate> {
    if !(s > 0.25 && s < 1.0) {
        return Err(LabError::InvalidParameter(format!("s must lie in (1/4, 1), got {s}")));
    }
    if !(c0 > 0.0 && c0 < 1.0) {
        return Err(LabError::InvalidParameter(format!("c₀ must lie in (0, 1), got {c0}")));
    }
    let l2 = phi.l2_norm();
    let floor = (l2 / c0).powf(2.0 * s / (1.0 - s));
    if !(cutoff > floor) {
        return Err(LabError::InvalidParameter(format!(
            "cutoff N = {cutoff} must exceed (‖φ‖/c₀)^(2s/(1−s)) = {floor}"
        )));
    }
    let sym = MultiplierSymbol::new(cutoff, s)?;
    let measure = |lambda: f64| -> Result<f64> {
        let scaled = rescale_data(phi, lambda)?;
        Ok(sobolev_norm(&i_operator(&scaled, &sym), 1.0))
    };

    let ds_norm = fractional_derivative(phi, s)?.l2_norm();
    let guess = cutoff.powf(2.0 * (1.0 - s) / (1.0 + 2.0 * s)) * (ds_norm / c0).powf(2.0 / (1.0 + 2.0 * s));

    let at_one = measure(1.0)?;
    if at_one < c0 {
        return Ok(LambdaCertificate { lambda: 1.0, initial_guess: guess, doublings: 0, smoothed_norm: at_one, c0 });
    }
    let mut lambda = guess.max(1.0);
    for doublings in 0..=MAX_DOUBLINGS {
        let norm = measure(lambda)?;
        if norm < c0 {
            return Ok(LambdaCertificate { lambda, initial_guess: guess, doublings, smoothed_norm: norm, c0 });
        }
        lambda *= 2.0;
    }
    Err(LabError::Defect(format!("rescaling search did not certify ‖Iφ_λ‖ < {c0} after {MAX_DOUBLINGS} doublings")))
}
