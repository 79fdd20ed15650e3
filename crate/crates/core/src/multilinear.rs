//! Multilinear functionals `Λₙ(M; w)` on the zero-sum lattice and the
//! multipliers that enter the modified energies.
//!
//! `Λₙ(M; w) = (L/Kⁿ) Σ_{k₁+⋯+kₙ=0} M(ξ) ĝ₁(k₁)⋯ĝₙ(kₙ)` with `ĝ_j = ŵ` on odd
//! slots and `ĝ_j(k) = conj(ŵ(−k))` on even slots. Odd slots range over
//! `[−K/2, K/2−1]`, even slots over `[−K/2+1, K/2]`, so `Λₙ(1; w)` is exactly
//! `∫|w|ⁿ` for the trigonometric interpolant. The time derivative along the
//! Galerkin-truncated flow is reproduced exactly when the merged slot of every
//! generated term is restricted to its band, see [`AmeGenerated`].

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::models::EquationParams;
use crate::parallel::{map_blocks, reduce_blocks, CompensatedSum, Exec};
use crate::spectral::{MultiplierSymbol, SpectralField};

/// Largest grid for which `Λ₄` is evaluated directly.
pub const LAMBDA4_MAX_MODES: usize = 256;
/// Largest grid for which `Λ₆` is evaluated directly.
pub const LAMBDA6_MAX_MODES: usize = 24;

/// Relative threshold on `|Υ₄|` below which a tuple is treated as resonant.
pub const RESONANCE_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// An n-tuple of lattice modes on the zero-sum hyperplane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperplaneTuple {
    modes: Vec<i64>,
    dxi: f64,
}

impl HyperplaneTuple {
    pub fn new(modes: Vec<i64>, dxi: f64) -> Result<Self> {
        if modes.is_empty() || modes.len() % 2 != 0 {
            return Err(LabError::InvalidParameter(format!("arity must be even, got {}", modes.len())));
        }
        if modes.iter().sum::<i64>() != 0 {
            return Err(LabError::InvalidParameter(format!("modes {modes:?} do not sum to zero")));
        }
        Ok(Self { modes, dxi })
    }

    pub fn arity(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[i64] {
        &self.modes
    }

    pub fn xi(&self, j: usize) -> f64 {
        self.modes[j] as f64 * self.dxi
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        self.modes.iter().map(|&k| k as f64 * self.dxi).collect()
    }

    /// `N_s = max |ξ_j|`.
    pub fn largest(&self) -> f64 {
        self.modes.iter().map(|k| k.abs()).max().unwrap_or(0) as f64 * self.dxi
    }
}

/// A spatial multiplier evaluated on integer lattice modes.
pub trait Multiplier: Sync {
    fn arity(&self) -> usize;
    fn eval(&self, modes: &[i64]) -> Complex64;
}

impl<T: Multiplier + ?Sized> Multiplier for &T {
    fn arity(&self) -> usize {
        (**self).arity()
    }
    fn eval(&self, modes: &[i64]) -> Complex64 {
        (**self).eval(modes)
    }
}

/// Constant multiplier.
#[derive(Debug, Clone, Copy)]
pub struct Constant {
    pub arity: usize,
    pub value: Complex64,
}

impl Constant {
    pub fn one(arity: usize) -> Self {
        Self { arity, value: Complex64::new(1.0, 0.0) }
    }
}

impl Multiplier for Constant {
    fn arity(&self) -> usize {
        self.arity
    }
    fn eval(&self, _: &[i64]) -> Complex64 {
        self.value
    }
}

/// Multiplier from a closure over wavenumbers.
pub struct FnMultiplier<F> {
    arity: usize,
    dxi: f64,
    f: F,
}

impl<F: Fn(&[f64]) -> Complex64 + Sync> FnMultiplier<F> {
    pub fn new(arity: usize, dxi: f64, f: F) -> Self {
        Self { arity, dxi, f }
    }
}

impl<F: Fn(&[f64]) -> Complex64 + Sync> Multiplier for FnMultiplier<F> {
    fn arity(&self) -> usize {
        self.arity
    }
    fn eval(&self, modes: &[i64]) -> Complex64 {
        let xi: Vec<f64> = modes.iter().map(|&k| k as f64 * self.dxi).collect();
        (self.f)(&xi)
    }
}

/// `M₂(ξ₁, ξ₂) = ξ₁ξ₂ m(ξ₁)m(ξ₂)`.
#[derive(Debug, Clone, Copy)]
pub struct M2 {
    sym: MultiplierSymbol,
    dxi: f64,
}

pub fn m2_multiplier(sym: MultiplierSymbol, dxi: f64) -> M2 {
    M2 { sym, dxi }
}

impl M2 {
    pub fn eval_xi(&self, x1: f64, x2: f64) -> f64 {
        x1 * x2 * self.sym.m(x1) * self.sym.m(x2)
    }
}

impl Multiplier for M2 {
    fn arity(&self) -> usize {
        2
    }
    fn eval(&self, modes: &[i64]) -> Complex64 {
        Complex64::new(self.eval_xi(modes[0] as f64 * self.dxi, modes[1] as f64 * self.dxi), 0.0)
    }
}

/// `Υₙ = Σ_j ((−1)^{j−1} a ξ_j² + b ξ_j³)`.
pub fn upsilon(xi: &[f64], params: &EquationParams) -> f64 {
    xi.iter()
        .enumerate()
        .map(|(j, &x)| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * params.a * x * x + params.b * x * x * x
        })
        .sum()
}

pub fn upsilon_n(t: &HyperplaneTuple, params: &EquationParams) -> f64 {
    upsilon(&t.wavenumbers(), params)
}

/// `Υ₄` in factored form `ξ₁₂ξ₁₄(2a + 3bξ₁₃)`, valid on the hyperplane.
pub fn upsilon4_factored(xi: &[f64; 4], params: &EquationParams) -> f64 {
    let x12 = xi[0] + xi[1];
    let x13 = xi[0] + xi[2];
    let x14 = xi[0] + xi[3];
    x12 * x14 * (2.0 * params.a + 3.0 * params.b * x13)
}

/// The three hyperplane identities on `Γ₄`, checked exactly in integers.
pub fn hyperplane_identities_hold(k: [i64; 4]) -> bool {
    let k = k.map(|v| v as i128);
    if k.iter().sum::<i128>() != 0 {
        return false;
    }
    let k12 = k[0] + k[1];
    let k13 = k[0] + k[2];
    let k14 = k[0] + k[3];
    let cubes: i128 = k.iter().map(|v| v * v * v).sum();
    let squares = k[0] * k[0] - k[1] * k[1] + k[2] * k[2] - k[3] * k[3];
    let mixed = k[1] * k[3] * k[3] + k[3] * k[1] * k[1] + k[0] * k[2] * k[2] + k[2] * k[0] * k[0];
    let mixed_d = k[0] * k[3] * k[3] + k[3] * k[0] * k[0] + k[2] * k[1] * k[1] + k[1] * k[2] * k[2];
    cubes == 3 * k12 * k13 * k14
        && squares == 2 * k12 * k14
        && mixed == -k12 * k13 * k14
        && mixed_d == -k12 * k13 * k14
}

/// Evaluation of `δ₄` on lattice modes, either directly or from a table.
pub trait Delta4Source: Sync {
    fn delta4(&self, modes: [i64; 4]) -> f64;
    fn dxi(&self) -> f64;
}

/// The correction multiplier `δ₄ = numerator / Υ₄`.
#[derive(Debug, Clone)]
pub struct Delta4 {
    params: EquationParams,
    sym: MultiplierSymbol,
    dxi: f64,
    sign: f64,
    msq_cache: Vec<f64>,
    cache_half: i64,
}

/// Off-lattice probe directions (zero sum, generic against all three
/// resonance factors).
const PROBE_P: [f64; 4] = [1.0, -0.37, 0.21, -0.84];
const PROBE_Q: [f64; 4] = [-0.29, 1.0, -0.58, -0.13];
const PROBE_EPS: f64 = 1e-5;

impl Delta4 {
    pub fn new(params: EquationParams, sym: MultiplierSymbol, dxi: f64) -> Self {
        let cache_half: i64 = 4096;
        let msq_cache = (-cache_half..=cache_half).map(|k| sym.m(k as f64 * dxi).powi(2)).collect();
        Self { params, sym, dxi, sign: 1.0, msq_cache, cache_half }
    }

    /// Flip the sign of every value (mutation self-test).
    pub fn mutated(mut self) -> Self {
        self.sign = -self.sign;
        self
    }

    pub fn params(&self) -> &EquationParams {
        &self.params
    }

    pub fn symbol(&self) -> &MultiplierSymbol {
        &self.sym
    }

    /// `e(d+e)/2`, the value for `m ≡ 1`.
    pub fn unit_value(&self) -> f64 {
        self.params.e * (self.params.d + self.params.e) / 2.0
    }

    /// True when `δ₄` is the constant `e(d+e)/2` wherever `m ≡ 1`, i.e.
    /// `c = a(d+e)/3b` (in particular `a = c = 0`).
    pub fn has_constant_core(&self) -> bool {
        let p = &self.params;
        (p.c - p.a * (p.d + p.e) / (3.0 * p.b)).abs() <= 1e-12
    }

    fn numerator_with(&self, xi: &[f64; 4], msq: &[f64; 4]) -> f64 {
        let EquationParams { c, d, e, .. } = self.params;
        let q = [xi[0] * xi[0] * msq[0], xi[1] * xi[1] * msq[1], xi[2] * xi[2] * msq[2], xi[3] * xi[3] * msq[3]];
        let c_part = q[0] - q[1] + q[2] - q[3];
        let e_part = xi[1] * q[3] + xi[3] * q[1] + xi[0] * q[2] + xi[2] * q[0];
        let d_part = xi[0] * q[3] + xi[3] * q[0] + xi[2] * q[1] + xi[1] * q[2];
        0.5 * self.params.k1() * (c * c_part - e * e_part - d * d_part)
    }

    /// Right-hand side of `Υ₄ δ₄ = …`.
    pub fn numerator(&self, xi: &[f64; 4]) -> f64 {
        let msq = xi.map(|x| self.sym.m(x).powi(2));
        self.numerator_with(xi, &msq)
    }

    fn quotient(&self, xi: &[f64; 4]) -> f64 {
        self.numerator(xi) / upsilon4_factored(xi, &self.params)
    }

    /// Average of the quotient at four points straddling the resonant set.
    fn resonant_limit(&self, xi: &[f64; 4], scale: f64) -> f64 {
        let eps = PROBE_EPS * scale.max(self.dxi);
        let mut acc = 0.0;
        for dir in [PROBE_P, PROBE_Q] {
            for sgn in [1.0, -1.0] {
                let p = [
                    xi[0] + sgn * eps * dir[0],
                    xi[1] + sgn * eps * dir[1],
                    xi[2] + sgn * eps * dir[2],
                    xi[3] + sgn * eps * dir[3],
                ];
                acc += self.quotient(&p);
            }
        }
        acc / 4.0
    }

    fn eval_core(&self, xi: &[f64; 4], resonant: Option<bool>) -> f64 {
        let largest = xi.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if largest <= self.sym.cutoff() && self.has_constant_core() {
            return self.unit_value();
        }
        let ups = upsilon4_factored(xi, &self.params);
        let resonant =
            resonant.unwrap_or_else(|| ups.abs() < RESONANCE_TOL * self.params.b.abs() * largest.powi(3) || largest == 0.0);
        if resonant {
            return self.resonant_limit(xi, largest);
        }
        self.numerator(xi) / ups
    }

    /// `δ₄` at real wavenumbers on `Γ₄`.
    pub fn eval_xi(&self, xi: &[f64; 4]) -> f64 {
        self.sign * self.eval_core(xi, None)
    }

    /// `δ₄` at lattice modes. For `a = 0` resonance is decided exactly.
    pub fn eval_modes(&self, k: [i64; 4]) -> f64 {
        let xi = k.map(|v| v as f64 * self.dxi);
        let resonant = if self.params.a == 0.0 {
            Some((k[0] + k[1]) * (k[0] + k[2]) * (k[0] + k[3]) == 0)
        } else {
            None
        };
        let largest = xi.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if resonant == Some(false) && !(largest <= self.sym.cutoff() && self.has_constant_core()) {
            if k.iter().all(|v| v.abs() <= self.cache_half) {
                let msq = k.map(|v| self.msq_cache[(v + self.cache_half) as usize]);
                return self.sign * self.numerator_with(&xi, &msq) / upsilon4_factored(&xi, &self.params);
            }
        }
        self.sign * self.eval_core(&xi, resonant)
    }

    /// Plain quotient without resonance handling (for oracle comparisons).
    pub fn raw_quotient(&self, xi: &[f64; 4]) -> f64 {
        self.sign * self.quotient(xi)
    }
}

impl Delta4Source for Delta4 {
    fn delta4(&self, modes: [i64; 4]) -> f64 {
        self.eval_modes(modes)
    }
    fn dxi(&self) -> f64 {
        self.dxi
    }
}

impl Multiplier for Delta4 {
    fn arity(&self) -> usize {
        4
    }
    fn eval(&self, modes: &[i64]) -> Complex64 {
        Complex64::new(self.eval_modes([modes[0], modes[1], modes[2], modes[3]]), 0.0)
    }
}

pub fn delta4(t: &HyperplaneTuple, params: &EquationParams, sym: &MultiplierSymbol) -> Result<f64> {
    if t.arity() != 4 {
        return Err(LabError::InvalidParameter(format!("δ₄ needs a 4-tuple, got arity {}", t.arity())));
    }
    let d = Delta4::new(*params, *sym, t.dxi);
    let m = t.modes();
    let v = d.eval_modes([m[0], m[1], m[2], m[3]]);
    if !v.is_finite() {
        return Err(LabError::Defect(format!("δ₄ is not finite at {m:?}")));
    }
    Ok(v)
}

/// `δ₄` tabulated for modes `k₁, k₂, k₃ ∈ [−R, R]` (fourth mode implied).
#[derive(Debug, Clone)]
pub struct Delta4Table {
    half: i64,
    width: usize,
    dxi: f64,
    values: Vec<f64>,
}

impl Delta4Table {
    pub fn build(delta: &Delta4, half: i64, exec: Exec) -> Self {
        let width = (2 * half + 1) as usize;
        let rows = map_blocks(exec, width * width, |row| {
            let k1 = (row / width) as i64 - half;
            let k2 = (row % width) as i64 - half;
            (0..width)
                .map(|c| {
                    let k3 = c as i64 - half;
                    delta.eval_modes([k1, k2, k3, -(k1 + k2 + k3)])
                })
                .collect::<Vec<f64>>()
        });
        Self { half, width, dxi: delta.dxi, values: rows.concat() }
    }

    /// Table large enough for the elongated arguments of `δ₆` on a `K`-mode grid.
    pub fn for_grid(delta: &Delta4, modes: usize, exec: Exec) -> Self {
        Self::build(delta, 3 * (modes as i64) / 2 + 1, exec)
    }

    #[inline]
    fn index(&self, m: [i64; 4]) -> usize {
        debug_assert!(m[..3].iter().all(|v| v.abs() <= self.half), "mode outside δ₄ table: {m:?}");
        let w = self.width;
        ((m[0] + self.half) as usize * w + (m[1] + self.half) as usize) * w + (m[2] + self.half) as usize
    }
}

impl Delta4Source for Delta4Table {
    #[inline]
    fn delta4(&self, modes: [i64; 4]) -> f64 {
        self.values[self.index(modes)]
    }
    fn dxi(&self) -> f64 {
        self.dxi
    }
}

impl Multiplier for Delta4Table {
    fn arity(&self) -> usize {
        4
    }
    fn eval(&self, modes: &[i64]) -> Complex64 {
        Complex64::new(self.delta4([modes[0], modes[1], modes[2], modes[3]]), 0.0)
    }
}

/// Band restriction matching the Galerkin truncation on a `K`-mode grid:
/// odd slots in `[−K/2, K/2−1]`, even slots in `[−K/2+1, K/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Band {
    half: i64,
}

impl Band {
    pub fn for_modes(modes: usize) -> Self {
        Self { half: modes as i64 / 2 }
    }

    /// `slot` is zero-based: slot 0 is the first (odd) slot.
    #[inline]
    pub fn contains(&self, slot: usize, mode: i64) -> bool {
        if slot % 2 == 0 {
            mode >= -self.half && mode < self.half
        } else {
            mode > -self.half && mode <= self.half
        }
    }
}

/// Elongation `X_jᵏ(M)`: slot `j` (one-based) of `M` receives `ξ_j + ⋯ + ξ_{j+k}`.
pub struct Elongation<M> {
    inner: M,
    j: usize,
    k: usize,
}

pub fn elongate<M: Multiplier>(inner: M, j: usize, k: usize) -> Result<Elongation<M>> {
    let n = inner.arity();
    if j == 0 || j > n || k == 0 {
        return Err(LabError::InvalidParameter(format!("elongation X_{j}^{k} undefined for arity {n}")));
    }
    Ok(Elongation { inner, j, k })
}

fn merge_into(modes: &[i64], j: usize, k: usize, out: &mut [i64]) {
    // j is one-based
    let j0 = j - 1;
    out[..j0].copy_from_slice(&modes[..j0]);
    out[j0] = modes[j0..=j0 + k].iter().sum();
    out[j0 + 1..].copy_from_slice(&modes[j0 + k + 1..]);
}

impl<M: Multiplier> Multiplier for Elongation<M> {
    fn arity(&self) -> usize {
        self.inner.arity() + self.k
    }
    fn eval(&self, modes: &[i64]) -> Complex64 {
        let mut buf = [0i64; 16];
        let n = self.inner.arity();
        merge_into(modes, self.j, self.k, &mut buf[..n]);
        self.inner.eval(&buf[..n])
    }
}

/// `M · Υₙ`.
pub struct UpsilonProduct<M> {
    inner: M,
    params: EquationParams,
    dxi: f64,
}

impl<M: Multiplier> Multiplier for UpsilonProduct<M> {
    fn arity(&self) -> usize {
        self.inner.arity()
    }
    fn eval(&self, modes: &[i64]) -> Complex64 {
        let xi: Vec<f64> = modes.iter().map(|&k| k as f64 * self.dxi).collect();
        self.inner.eval(modes) * upsilon(&xi, &self.params)
    }
}

/// The `(n+2)`-multiplier produced by the nonlinearity in `∂ₜΛₙ(M)`:
/// `Σ_j [(−1)^{j−1}c + eξ_{j+1} + d w_j] X_j²(M)` with `w_j = ξ_j` on odd
/// slots and `w_j = ξ_{j+2}` on even slots.
pub struct AmeGenerated<M> {
    inner: M,
    params: EquationParams,
    dxi: f64,
    band: Option<Band>,
}

impl<M: Multiplier> AmeGenerated<M> {
    pub fn new(inner: M, params: EquationParams, dxi: f64) -> Self {
        Self { inner, params, dxi, band: None }
    }

    /// Drop terms whose merged mode leaves the grid band.
    pub fn truncated(mut self, band: Band) -> Self {
        self.band = Some(band);
        self
    }
}

impl<M: Multiplier> Multiplier for AmeGenerated<M> {
    fn arity(&self) -> usize {
        self.inner.arity() + 2
    }
    fn eval(&self, modes: &[i64]) -> Complex64 {
        let n = self.inner.arity();
        let EquationParams { c, d, e, .. } = self.params;
        let mut buf = [0i64; 16];
        let mut acc = ZERO;
        for j in 1..=n {
            let j0 = j - 1;
            merge_into(modes, j, 2, &mut buf[..n]);
            if let Some(band) = self.band {
                if !band.contains(j0, buf[j0]) {
                    continue;
                }
            }
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            let d_weight = if j % 2 == 1 { modes[j0] } else { modes[j0 + 2] };
            let weight = sign * c + (e * modes[j0 + 1] as f64 + d * d_weight as f64) * self.dxi;
            if weight != 0.0 {
                acc += self.inner.eval(&buf[..n]) * weight;
            }
        }
        acc
    }
}

/// Exact decomposition `∂ₜΛₙ(M; w) = iΛₙ(MΥₙ; w) − iΛ_{n+2}(G; w)`.
pub struct AmeDecomposition<M> {
    pub boundary: UpsilonProduct<M>,
    pub generated: AmeGenerated<M>,
}

pub fn apply_ame<M: Multiplier + Clone>(m: M, params: EquationParams, dxi: f64) -> Result<AmeDecomposition<M>> {
    if m.arity() % 2 != 0 {
        return Err(LabError::InvalidParameter(format!("arity must be even, got {}", m.arity())));
    }
    Ok(AmeDecomposition {
        boundary: UpsilonProduct { inner: m.clone(), params, dxi },
        generated: AmeGenerated::new(m, params, dxi),
    })
}

impl<M: Multiplier> AmeDecomposition<M> {
    pub fn truncated(mut self, band: Band) -> Self {
        self.generated = self.generated.truncated(band);
        self
    }

    /// `∂ₜΛₙ(M; w)` evaluated from the decomposition.
    pub fn rate(&self, w: &SpectralField, exec: Exec) -> Result<Complex64> {
        let i = Complex64::new(0.0, 1.0);
        let lin = lambda_n(&self.boundary, w, exec)?;
        let non = lambda_n(&self.generated, w, exec)?;
        Ok(i * lin - i * non)
    }
}

const SIXTH: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// `δ₆` as the 36-permutation double sum with four `δ₄` evaluations per term.
pub struct Delta6Printed<'a, D: Delta4Source> {
    delta4: &'a D,
    params: EquationParams,
    band: Option<Band>,
}

impl<'a, D: Delta4Source> Delta6Printed<'a, D> {
    pub fn new(delta4: &'a D, params: EquationParams) -> Self {
        Self { delta4, params, band: None }
    }

    pub fn truncated(mut self, band: Band) -> Self {
        self.band = Some(band);
        self
    }
}

impl<D: Delta4Source> Multiplier for Delta6Printed<'_, D> {
    fn arity(&self) -> usize {
        6
    }

    fn eval(&self, x: &[i64]) -> Complex64 {
        let EquationParams { d, e, .. } = self.params;
        let odd = [x[0], x[2], x[4]];
        let even = [x[1], x[3], x[5]];
        let keep = |slot: usize, mode: i64| self.band.map_or(true, |b| b.contains(slot, mode));
        let mut acc = 0.0;
        for po in SIXTH {
            let (k, m, o) = (odd[po[0]], odd[po[1]], odd[po[2]]);
            for pe in SIXTH {
                let (l, n, p) = (even[pe[0]], even[pe[1]], even[pe[2]]);
                let klm = k + l + m;
                let lmn = l + m + n;
                let mno = m + n + o;
                let nop = n + o + p;
                let d1 = if keep(0, klm) { self.delta4.delta4([klm, n, o, p]) } else { 0.0 };
                let d2 = if keep(1, lmn) { self.delta4.delta4([k, lmn, o, p]) } else { 0.0 };
                let d3 = if keep(2, mno) { self.delta4.delta4([k, l, mno, p]) } else { 0.0 };
                let d4 = if keep(3, nop) { self.delta4.delta4([k, l, m, nop]) } else { 0.0 };
                acc += e * (l as f64 * d1 + m as f64 * d2 + n as f64 * d3 + o as f64 * d4)
                    + d * (k as f64 * d1 + n as f64 * d2 + m as f64 * d3 + p as f64 * d4);
            }
        }
        Complex64::new(0.0, -acc * self.delta4.dxi() / 36.0)
    }
}

/// `δ₆ = −i G(δ₄)`, the 6-linear part of `∂ₜΛ₄(δ₄)`.
pub struct Delta6Generated<'a, D: Delta4Source> {
    generated: AmeGenerated<Delta4Ref<'a, D>>,
}

/// Adapter exposing a [`Delta4Source`] as a 4-multiplier.
pub struct Delta4Ref<'a, D: Delta4Source>(pub &'a D);

impl<D: Delta4Source> Clone for Delta4Ref<'_, D> {
    fn clone(&self) -> Self {
        Self(self.0)
    }
}

impl<D: Delta4Source> Multiplier for Delta4Ref<'_, D> {
    fn arity(&self) -> usize {
        4
    }
    #[inline]
    fn eval(&self, m: &[i64]) -> Complex64 {
        Complex64::new(self.0.delta4([m[0], m[1], m[2], m[3]]), 0.0)
    }
}

impl<'a, D: Delta4Source> Delta6Generated<'a, D> {
    pub fn new(delta4: &'a D, params: EquationParams) -> Self {
        Self { generated: AmeGenerated::new(Delta4Ref(delta4), params, delta4.dxi()) }
    }

    pub fn truncated(mut self, band: Band) -> Self {
        self.generated = self.generated.truncated(band);
        self
    }
}

impl<D: Delta4Source> Multiplier for Delta6Generated<'_, D> {
    fn arity(&self) -> usize {
        6
    }
    fn eval(&self, m: &[i64]) -> Complex64 {
        self.generated.eval(m) * Complex64::new(0.0, -1.0)
    }
}

/// `δ₆` at a single 6-tuple from the printed double sum.
pub fn delta6(t: &HyperplaneTuple, params: &EquationParams, sym: &MultiplierSymbol) -> Result<Complex64> {
    if t.arity() != 6 {
        return Err(LabError::InvalidParameter(format!("δ₆ needs a 6-tuple, got arity {}", t.arity())));
    }
    let d4 = Delta4::new(*params, *sym, t.dxi);
    Ok(Delta6Printed::new(&d4, *params).eval(t.modes()))
}

fn check_budget(n: usize, modes: usize) -> Result<()> {
    match n {
        2 => Ok(()),
        4 if modes <= LAMBDA4_MAX_MODES => Ok(()),
        6 if modes <= LAMBDA6_MAX_MODES => Ok(()),
        4 | 6 => Err(LabError::Budget(format!(
            "Λ{n} on {modes} modes exceeds the direct-sum budget (Λ4 ≤ {LAMBDA4_MAX_MODES}, Λ6 ≤ {LAMBDA6_MAX_MODES}); \
             use the finite-difference dE2/dt route instead"
        ))),
        _ => Err(LabError::Budget(format!("arity {n} is not supported (2, 4 or 6)"))),
    }
}

/// `Λₙ(M; w)` by direct lattice summation.
pub fn lambda_n<M: Multiplier + ?Sized>(m: &M, w: &SpectralField, exec: Exec) -> Result<Complex64> {
    let grid = w.grid();
    let k = grid.modes();
    let n = m.arity();
    check_budget(n, k)?;
    let half = k as i64 / 2;
    // odd[k + half] = ŵ(k), k ∈ [−half, half−1]; even[k + half − 1] = conj ŵ(−k), k ∈ [−half+1, half]
    let odd: Vec<Complex64> = (-half..half).map(|q| w.coefficient(q)).collect();
    let even: Vec<Complex64> = (-half + 1..=half).map(|q| w.coefficient(-q).conj()).collect();
    let even_at = |q: i64| -> Option<Complex64> {
        if q > -half && q <= half {
            Some(even[(q + half - 1) as usize])
        } else {
            None
        }
    };
    let norm = grid.length() / (k as f64).powi(n as i32);

    let total = match n {
        2 => reduce_blocks(exec, k, |i| {
            let k1 = i as i64 - half;
            match even_at(-k1) {
                Some(g2) => m.eval(&[k1, -k1]) * odd[i] * g2,
                None => ZERO,
            }
        }),
        4 => reduce_blocks(exec, k * k, |b| {
            let k1 = (b / k) as i64 - half;
            let k2 = (b % k) as i64 - half + 1;
            let p12 = odd[(k1 + half) as usize] * even[(k2 + half - 1) as usize];
            if p12 == ZERO {
                return ZERO;
            }
            let mut acc = CompensatedSum::default();
            let mut modes = [k1, k2, 0, 0];
            for k3 in -half..half {
                let g3 = odd[(k3 + half) as usize];
                let k4 = -(k1 + k2 + k3);
                if let Some(g4) = even_at(k4) {
                    modes[2] = k3;
                    modes[3] = k4;
                    acc.add(m.eval(&modes) * (p12 * g3 * g4));
                }
            }
            acc.value()
        }),
        6 => reduce_blocks(exec, k * k, |b| {
            let k1 = (b / k) as i64 - half;
            let k2 = (b % k) as i64 - half + 1;
            let p12 = odd[(k1 + half) as usize] * even[(k2 + half - 1) as usize];
            if p12 == ZERO {
                return ZERO;
            }
            let mut acc = CompensatedSum::default();
            let mut modes = [k1, k2, 0, 0, 0, 0];
            for k3 in -half..half {
                let p3 = p12 * odd[(k3 + half) as usize];
                modes[2] = k3;
                for k4 in -half + 1..=half {
                    let p4 = p3 * even[(k4 + half - 1) as usize];
                    modes[3] = k4;
                    for k5 in -half..half {
                        let k6 = -(k1 + k2 + k3 + k4 + k5);
                        if let Some(g6) = even_at(k6) {
                            modes[4] = k5;
                            modes[5] = k6;
                            acc.add(m.eval(&modes) * (p4 * odd[(k5 + half) as usize] * g6));
                        }
                    }
                }
            }
            acc.value()
        }),
        _ => unreachable!("budget check admits only 2, 4, 6"),
    };
    Ok(total * norm)
}

/// One sampled tuple in a bound report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRecord {
    pub modes: Vec<i64>,
    pub value: f64,
    pub ratio: f64,
}

/// Supremum of a sampled bound ratio with its worst tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSample {
    pub range: i64,
    pub samples: usize,
    pub sup_ratio: f64,
    pub worst: BoundRecord,
    /// Largest ratio within each consecutive chunk of samples.
    pub chunk_maxima: Vec<BoundRecord>,
}

fn random_tuple<R: Rng>(rng: &mut R, n: usize, range: i64) -> Vec<i64> {
    loop {
        let mut t: Vec<i64> = (0..n - 1).map(|_| rng.gen_range(-range..=range)).collect();
        let last = -t.iter().sum::<i64>();
        if last.abs() <= range {
            t.push(last);
            return t;
        }
    }
}

/// Uniform random `Γₙ` lattice tuples with entries in `[−range, range]`.
pub fn random_hyperplane_tuples(n: usize, range: i64, count: usize, seed: u64) -> Vec<Vec<i64>> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_tuple(&mut rng, n, range)).collect()
}

/// Samples per chunk; each chunk has its own seeded stream.
pub const BOUND_CHUNK: usize = 4096;

fn sample_bound<F>(n: usize, range: i64, samples: usize, seed: u64, exec: Exec, ratio: F) -> BoundSample
where
    F: Fn(&[i64]) -> (f64, f64) + Sync + Send,
{
    let chunks = samples.div_ceil(BOUND_CHUNK);
    let best = map_blocks(exec, chunks, |c| {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ (c as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let count = BOUND_CHUNK.min(samples - c * BOUND_CHUNK);
        let mut worst = BoundRecord { modes: vec![], value: 0.0, ratio: f64::NEG_INFINITY };
        for _ in 0..count {
            let t = random_tuple(&mut rng, n, range);
            let (value, r) = ratio(&t);
            if r > worst.ratio {
                worst = BoundRecord { modes: t, value, ratio: r };
            }
        }
        worst
    });
    let worst = best
        .iter()
        .cloned()
        .fold(BoundRecord { modes: vec![], value: 0.0, ratio: f64::NEG_INFINITY }, |a, b| if b.ratio > a.ratio { b } else { a });
    BoundSample { range, samples, sup_ratio: worst.ratio, worst, chunk_maxima: best }
}

/// Sampled `sup |δ₄| / m²(N_s)`.
pub fn sample_delta4_bound(delta: &Delta4, range: i64, samples: usize, seed: u64, exec: Exec) -> BoundSample {
    let sym = *delta.symbol();
    let dxi = delta.dxi;
    sample_bound(4, range, samples, seed, exec, |t| {
        let v = delta.eval_modes([t[0], t[1], t[2], t[3]]);
        let ns = t.iter().map(|k| k.abs()).max().unwrap_or(0) as f64 * dxi;
        (v, v.abs() / sym.m(ns).powi(2))
    })
}

/// Sampled `sup |δ₆| / (N_s m²(N_s))`.
pub fn sample_delta6_bound(delta: &Delta4, range: i64, samples: usize, seed: u64, exec: Exec) -> BoundSample {
    let sym = *delta.symbol();
    let dxi = delta.dxi;
    let d6 = Delta6Printed::new(delta, *delta.params());
    sample_bound(6, range, samples, seed, exec, |t| {
        let v = d6.eval(t);
        let ns = (t.iter().map(|k| k.abs()).max().unwrap_or(0) as f64 * dxi).max(dxi);
        (v.norm(), v.norm() / (ns * sym.m(ns).powi(2)))
    })
}

/// Ratio of `∫|w|ⁿ` computed two ways, for reporting.
pub fn power_integral(w: &SpectralField, n: usize) -> f64 {
    let pad = (n / 2 + 1).max(2);
    w.integrate_padded(pad, |u| u.norm_sqr().powi(n as i32 / 2))
}
