//! Periodic grid, synchronized physical/Fourier fields, Sobolev norms and the
//! smoothing multipliers `I` and `L`.
//!
//! Conventions: the forward transform carries no factor, the inverse carries
//! `1/K`. Spectral coefficients are stored in FFT order, so index `i` holds
//! mode `i` for `i < K/2` and mode `i - K` otherwise; the unpaired mode is
//! `-K/2`. A field is identified with the trigonometric polynomial
//! `u(x) = (1/K) Σ_k û_k exp(i ξ_k (x - x_0))` over those modes, which makes
//! `∫|u|² dx = (L/K²) Σ |û_k|²` exact.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use once_cell::sync::Lazy;
use parking_lot::Mutex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

static PLANS: Lazy<Mutex<(FftPlanner<f64>, HashMap<usize, Plans>)>> =
    Lazy::new(|| Mutex::new((FftPlanner::new(), HashMap::new())));

fn plans(n: usize) -> Plans {
    let mut guard = PLANS.lock();
    let (planner, cache) = &mut *guard;
    if let Some(p) = cache.get(&n) {
        return p.clone();
    }
    let p = (planner.plan_fft_forward(n), planner.plan_fft_inverse(n));
    cache.insert(n, p.clone());
    p
}

/// Unnormalized forward DFT in place.
pub fn fft_forward(data: &mut [Complex64]) {
    plans(data.len()).0.process(data);
}

/// Unnormalized inverse DFT in place (no `1/n`).
pub fn fft_inverse(data: &mut [Complex64]) {
    plans(data.len()).1.process(data);
}

/// Uniform periodic grid on `[-L/2, L/2)` with `K` modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    modes: usize,
    length: f64,
}

impl Grid {
    pub fn new(modes: usize, length: f64) -> Result<Self> {
        if modes < 8 || modes % 2 != 0 {
            return Err(LabError::InvalidGrid(format!(
                "mode count must be even and at least 8, got {modes}"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(LabError::InvalidGrid(format!("box length must be positive, got {length}")));
        }
        Ok(Self { modes, length })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.modes as f64
    }

    /// Lattice spacing in Fourier space, `2π/L`.
    pub fn dxi(&self) -> f64 {
        2.0 * PI / self.length
    }

    pub fn x_min(&self) -> f64 {
        -0.5 * self.length
    }

    /// Integer mode held at FFT index `i`.
    #[inline]
    pub fn mode_of(&self, i: usize) -> i64 {
        let k = self.modes as i64;
        let i = i as i64;
        if i < k / 2 {
            i
        } else {
            i - k
        }
    }

    /// FFT index of integer mode `m`, if it is on the grid.
    #[inline]
    pub fn index_of(&self, m: i64) -> Option<usize> {
        let half = self.modes as i64 / 2;
        if m < -half || m >= half {
            None
        } else if m >= 0 {
            Some(m as usize)
        } else {
            Some((m + self.modes as i64) as usize)
        }
    }

    /// Wavenumber at FFT index `i`.
    #[inline]
    pub fn xi(&self, i: usize) -> f64 {
        self.mode_of(i) as f64 * self.dxi()
    }

    /// Wavenumbers in increasing order, `ξ_k = 2πk/L` for `k = -K/2 .. K/2-1`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let half = self.modes as i64 / 2;
        (-half..half).map(|k| k as f64 * self.dxi()).collect()
    }

    /// Wavenumbers in FFT storage order.
    pub fn wavenumbers_fft_order(&self) -> Vec<f64> {
        (0..self.modes).map(|i| self.xi(i)).collect()
    }

    pub fn points(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.modes).map(|j| self.x_min() + j as f64 * dx).collect()
    }

    /// Largest wavenumber magnitude on the grid, `πK/L`.
    pub fn max_wavenumber(&self) -> f64 {
        PI * self.modes as f64 / self.length
    }

    /// Same mode count on a box scaled by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.modes, self.length * factor)
    }

    /// Snap a real wavenumber to the nearest lattice point. Returns the
    /// snapped value and the (signed) snap error.
    pub fn snap(&self, xi: f64) -> (f64, f64) {
        let snapped = (xi / self.dxi()).round() * self.dxi();
        (snapped, snapped - xi)
    }

    /// True when `xi` is a lattice wavenumber to within `1e-9` in mode units.
    pub fn is_commensurate(&self, xi: f64) -> bool {
        let q = xi / self.dxi();
        (q - q.round()).abs() <= 1e-9
    }
}

/// Complex field with synchronized physical samples and spectral coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    physical: Vec<Complex64>,
    spectral: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); grid.modes()];
        Self { grid, physical: z.clone(), spectral: z }
    }

    pub fn from_physical(grid: Grid, physical: Vec<Complex64>) -> Result<Self> {
        if physical.len() != grid.modes() {
            return Err(LabError::GridMismatch(format!(
                "{} samples for a {}-mode grid",
                physical.len(),
                grid.modes()
            )));
        }
        let mut spectral = physical.clone();
        fft_forward(&mut spectral);
        Ok(Self { grid, physical, spectral })
    }

    pub fn from_spectral(grid: Grid, spectral: Vec<Complex64>) -> Result<Self> {
        if spectral.len() != grid.modes() {
            return Err(LabError::GridMismatch(format!(
                "{} coefficients for a {}-mode grid",
                spectral.len(),
                grid.modes()
            )));
        }
        let mut physical = spectral.clone();
        fft_inverse(&mut physical);
        let inv = 1.0 / grid.modes() as f64;
        physical.iter_mut().for_each(|v| *v *= inv);
        Ok(Self { grid, physical, spectral })
    }

    /// Sample `f` at the grid points.
    pub fn from_fn<F: Fn(f64) -> Complex64>(grid: Grid, f: F) -> Self {
        let values = grid.points().into_iter().map(f).collect();
        Self::from_physical(grid, values).expect("sample count matches grid")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn physical(&self) -> &[Complex64] {
        &self.physical
    }

    pub fn spectral(&self) -> &[Complex64] {
        &self.spectral
    }

    pub fn into_spectral(self) -> Vec<Complex64> {
        self.spectral
    }

    /// Coefficient of integer mode `m` (zero off-grid).
    pub fn coefficient(&self, m: i64) -> Complex64 {
        self.grid
            .index_of(m)
            .map(|i| self.spectral[i])
            .unwrap_or_else(|| Complex64::new(0.0, 0.0))
    }

    /// New field with coefficient `i` replaced by `f(ξ_i, û_i)`.
    pub fn map_spectral<F: Fn(f64, Complex64) -> Complex64>(&self, f: F) -> Self {
        let spec = self
            .spectral
            .iter()
            .enumerate()
            .map(|(i, &c)| f(self.grid.xi(i), c))
            .collect();
        Self::from_spectral(self.grid, spec).expect("same grid")
    }

    /// New field with sample `j` replaced by `f(x_j, u_j)`.
    pub fn map_physical<F: Fn(f64, Complex64) -> Complex64>(&self, f: F) -> Self {
        let x0 = self.grid.x_min();
        let dx = self.grid.dx();
        let vals = self
            .physical
            .iter()
            .enumerate()
            .map(|(j, &u)| f(x0 + j as f64 * dx, u))
            .collect();
        Self::from_physical(self.grid, vals).expect("same grid")
    }

    /// Same samples reinterpreted on a different grid with equal mode count.
    pub fn with_grid(&self, grid: Grid) -> Result<Self> {
        if grid.modes() != self.grid.modes() {
            return Err(LabError::GridMismatch("mode counts differ".into()));
        }
        Ok(Self { grid, physical: self.physical.clone(), spectral: self.spectral.clone() })
    }

    pub fn scale(&self, a: Complex64) -> Self {
        Self {
            grid: self.grid,
            physical: self.physical.iter().map(|v| v * a).collect(),
            spectral: self.spectral.iter().map(|v| v * a).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(LabError::GridMismatch("cannot add fields on different grids".into()));
        }
        Ok(Self {
            grid: self.grid,
            physical: self.physical.iter().zip(&other.physical).map(|(a, b)| a + b).collect(),
            spectral: self.spectral.iter().zip(&other.spectral).map(|(a, b)| a + b).collect(),
        })
    }

    /// `∂ₓᵖ` applied spectrally.
    pub fn derivative(&self, order: u32) -> Self {
        self.map_spectral(|xi, c| c * Complex64::new(0.0, xi).powu(order))
    }

    /// Spatial translation `u(x) -> u(x + shift)`, exact for the interpolant.
    pub fn translate(&self, shift: f64) -> Self {
        self.map_spectral(|xi, c| c * Complex64::from_polar(1.0, xi * shift))
    }

    pub fn max_abs(&self) -> f64 {
        self.physical.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `‖u‖_{L²}` via Parseval.
    pub fn l2_norm(&self) -> f64 {
        sobolev_norm(self, 0.0)
    }

    /// Interpolant evaluated at `m ≥ K` equispaced points on the same box.
    pub fn padded_physical(&self, m: usize) -> Vec<Complex64> {
        let k = self.grid.modes();
        assert!(m >= k, "padding must not reduce resolution");
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (i, &c) in self.spectral.iter().enumerate() {
            let mode = self.grid.mode_of(i);
            let idx = if mode >= 0 { mode as usize } else { (mode + m as i64) as usize };
            buf[idx] = c;
        }
        fft_inverse(&mut buf);
        let inv = 1.0 / k as f64;
        buf.iter_mut().for_each(|v| *v *= inv);
        buf
    }

    /// Exact `∫ f(u) dx` for integrands that are polynomials of degree at most
    /// `2·pad` in `u, ū`, evaluated on a grid padded by `pad`.
    pub fn integrate_padded<F: Fn(Complex64) -> f64>(&self, pad: usize, f: F) -> f64 {
        let m = self.grid.modes() * pad.max(1);
        let vals = self.padded_physical(m);
        let dx = self.grid.length() / m as f64;
        vals.iter().map(|&u| f(u)).sum::<f64>() * dx
    }
}

/// Spectral coefficients on a `K`-mode grid from values of a trigonometric
/// polynomial sampled on `m ≥ K` points; modes outside the band are dropped.
pub fn truncate_from_padded(mut values: Vec<Complex64>, grid: &Grid) -> Vec<Complex64> {
    let m = values.len();
    let k = grid.modes();
    fft_forward(&mut values);
    let scale = k as f64 / m as f64;
    (0..k)
        .map(|i| {
            let mode = grid.mode_of(i);
            let idx = if mode >= 0 { mode as usize } else { (mode + m as i64) as usize };
            values[idx] * scale
        })
        .collect()
}

/// `⟨ξ⟩ = (1 + ξ²)^{1/2}`.
#[inline]
pub fn japanese(xi: f64) -> f64 {
    (1.0 + xi * xi).sqrt()
}

/// `D_x^σ`: multiplies coefficients by `|ξ|^σ`, zero mode mapped to zero.
pub fn fractional_derivative(f: &SpectralField, order: f64) -> Result<SpectralField> {
    if !(order >= 0.0) {
        return Err(LabError::InvalidParameter(format!("derivative order must be ≥ 0, got {order}")));
    }
    Ok(f.map_spectral(|xi, c| if xi == 0.0 { Complex64::new(0.0, 0.0) } else { c * xi.abs().powf(order) }))
}

/// `(Σ ⟨ξ⟩^{2σ} |f̂|² · L/K²)^{1/2}`.
pub fn sobolev_norm(f: &SpectralField, order: f64) -> f64 {
    let g = f.grid();
    let norm = g.length() / (g.modes() as f64).powi(2);
    let sum: f64 = f
        .spectral()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let w = if order == 0.0 { 1.0 } else { japanese(g.xi(i)).powf(2.0 * order) };
            w * c.norm_sqr()
        })
        .sum();
    (sum * norm).sqrt()
}

/// The smoothing symbol `m(ξ)` with cutoff `N` and regularity `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierSymbol {
    cutoff: f64,
    s: f64,
}

impl MultiplierSymbol {
    pub fn new(cutoff: f64, s: f64) -> Result<Self> {
        if !(cutoff > 0.0) {
            return Err(LabError::InvalidParameter(format!("cutoff N must be positive, got {cutoff}")));
        }
        if !(s > 0.25 && s < 1.0) {
            return Err(LabError::InvalidParameter(format!("s must lie in (1/4, 1), got {s}")));
        }
        Ok(Self { cutoff, s })
    }

    /// `m ≡ 1` (infinite cutoff).
    pub fn unit(s: f64) -> Self {
        Self { cutoff: f64::INFINITY, s }
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn is_unit(&self) -> bool {
        self.cutoff.is_infinite()
    }

    /// `m(ξ) = min(1, (N/|ξ|)^{1-s})`.
    #[inline]
    pub fn m(&self, xi: f64) -> f64 {
        let a = xi.abs();
        if a <= self.cutoff {
            1.0
        } else {
            (self.cutoff / a).powf(1.0 - self.s)
        }
    }

    /// `l(ξ) = m(ξ) ⟨ξ⟩^{1-s}`.
    #[inline]
    pub fn l(&self, xi: f64) -> f64 {
        self.m(xi) * japanese(xi).powf(1.0 - self.s)
    }
}

pub fn m_symbol(xi: f64, sym: &MultiplierSymbol) -> f64 {
    sym.m(xi)
}

pub fn i_operator(f: &SpectralField, sym: &MultiplierSymbol) -> SpectralField {
    f.map_spectral(|xi, c| c * sym.m(xi))
}

pub fn l_operator(f: &SpectralField, sym: &MultiplierSymbol) -> SpectralField {
    f.map_spectral(|xi, c| c * sym.l(xi))
}

/// Random field with independent uniform real and imaginary parts per mode,
/// damped by `exp(−decay·|k|)` in the mode index.
pub fn random_field(grid: Grid, decay: f64, amplitude: f64, seed: u64) -> SpectralField {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let k = grid.modes() as f64;
    let spectral = (0..grid.modes())
        .map(|i| {
            let w = amplitude * k * (-decay * (grid.mode_of(i) as f64).abs()).exp();
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * w
        })
        .collect();
    SpectralField::from_spectral(grid, spectral).expect("length matches grid")
}

/// Largest sampled `l(ξ₁+ξ₂) / (l(ξ₁)+l(ξ₂))` over `samples` uniform pairs in
/// `[-range, range]²`.
pub fn l_subadditivity_ratio(sym: &MultiplierSymbol, range: f64, samples: usize, seed: u64) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let a: f64 = rng.gen_range(-range..range);
        let b: f64 = rng.gen_range(-range..range);
        worst = worst.max(sym.l(a + b) / (sym.l(a) + sym.l(b)));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn random_field(grid: Grid, seed: u64) -> SpectralField {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let v = (0..grid.modes())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        SpectralField::from_physical(grid, v).unwrap()
    }

    #[test]
    fn grid_examples() {
        let g = Grid::new(8, 2.0 * PI).unwrap();
        let w = g.wavenumbers();
        for (k, xi) in (-4..4).zip(&w) {
            assert_relative_eq!(*xi, k as f64, epsilon = 1e-14);
        }
        let g = Grid::new(16, 4.0 * PI).unwrap();
        assert_relative_eq!(g.dxi(), 0.5, epsilon = 1e-15);
        assert!(Grid::new(7, 1.0).is_err());
        assert!(Grid::new(6, 1.0).is_err());
        assert!(Grid::new(8, 0.0).is_err());
        assert!(Grid::new(8, -1.0).is_err());
    }

    #[test]
    fn wavenumbers_strictly_increasing_and_index_roundtrip() {
        let g = Grid::new(32, 10.0).unwrap();
        let w = g.wavenumbers();
        assert!(w.windows(2).all(|p| p[1] > p[0]));
        for i in 0..32 {
            assert_eq!(g.index_of(g.mode_of(i)), Some(i));
        }
        assert_eq!(g.index_of(16), None);
        assert_eq!(g.mode_of(16), -16);
    }

    #[test]
    fn transform_roundtrip_and_parseval() {
        for &k in &[8usize, 16, 64, 256, 1024] {
            let g = Grid::new(k, 13.0).unwrap();
            let f = random_field(g, k as u64);
            let back = SpectralField::from_spectral(g, f.spectral().to_vec()).unwrap();
            let scale = f.physical().iter().map(|v| v.norm()).fold(0.0, f64::max);
            for (a, b) in f.physical().iter().zip(back.physical()) {
                assert!((a - b).norm() <= 1e-13 * scale);
            }
            let phys: f64 = f.physical().iter().map(|v| v.norm_sqr()).sum::<f64>() * g.dx();
            assert_relative_eq!(phys, f.l2_norm().powi(2), max_relative = 1e-13);
        }
    }

    #[test]
    fn fractional_derivative_examples() {
        let g = Grid::new(32, 2.0 * PI).unwrap();
        let f = random_field(g, 3);
        let d0 = fractional_derivative(&f, 0.0).unwrap();
        for i in 1..32 {
            assert_relative_eq!(d0.spectral()[i].re, f.spectral()[i].re, epsilon = 1e-12);
        }
        assert_eq!(d0.spectral()[0], Complex64::new(0.0, 0.0));

        let xi0 = 3.0;
        let wave = SpectralField::from_fn(g, |x| Complex64::from_polar(1.0, xi0 * x));
        let d2 = fractional_derivative(&wave, 2.0).unwrap();
        for (a, b) in d2.physical().iter().zip(wave.physical()) {
            assert!((a - b * 9.0).norm() < 1e-12);
        }

        // sech profile against an explicit loop over modes
        let g = Grid::new(128, 40.0).unwrap();
        let f = SpectralField::from_fn(g, |x| Complex64::new(1.0 / x.cosh(), 0.0));
        let d = fractional_derivative(&f, 0.5).unwrap();
        for i in 0..128 {
            let mut k = i as i64;
            if k >= 64 {
                k -= 128;
            }
            let xi = 2.0 * PI * k as f64 / 40.0;
            let expected = f.spectral()[i] * xi.abs().sqrt();
            assert!((d.spectral()[i] - expected).norm() < 1e-12);
        }
        assert!(fractional_derivative(&f, -1.0).is_err());
    }

    #[test]
    fn sobolev_norm_examples() {
        let g = Grid::new(64, 7.5).unwrap();
        assert_eq!(sobolev_norm(&SpectralField::zeros(g), 1.0), 0.0);
        let one = SpectralField::from_fn(g, |_| Complex64::new(1.0, 0.0));
        for s in [0.0, 0.3, 1.0, 2.5] {
            assert_relative_eq!(sobolev_norm(&one, s), 7.5f64.sqrt(), max_relative = 1e-13);
        }
        let f = random_field(g, 11);
        let quad: f64 = f.physical().iter().map(|v| v.norm_sqr()).sum::<f64>() * g.dx();
        assert_relative_eq!(sobolev_norm(&f, 0.0), quad.sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn m_symbol_examples() {
        let n = 5.0;
        let sym = MultiplierSymbol::new(n, 0.5).unwrap();
        assert_eq!(m_symbol(n / 2.0, &sym), 1.0);
        assert_relative_eq!(m_symbol(4.0 * n, &sym), 0.5, epsilon = 1e-15);
        assert_eq!(m_symbol(0.0, &sym), 1.0);
        assert!(MultiplierSymbol::new(0.0, 0.5).is_err());
        assert!(MultiplierSymbol::new(1.0, 0.25).is_err());
        assert!(MultiplierSymbol::new(1.0, 1.0).is_err());
    }

    #[test]
    fn i_operator_examples() {
        let g = Grid::new(64, 2.0 * PI).unwrap();
        let sym = MultiplierSymbol::new(4.0, 0.5).unwrap();
        // band-limited below N
        let low = SpectralField::from_fn(g, |x| Complex64::new(x.cos(), (3.0 * x).sin()));
        let i_low = i_operator(&low, &sym);
        for (a, b) in i_low.physical().iter().zip(low.physical()) {
            assert!((a - b).norm() < 1e-13);
        }
        // single mode at 4N
        let high = SpectralField::from_fn(g, |x| Complex64::from_polar(1.0, 16.0 * x));
        let i_high = i_operator(&high, &sym);
        assert_relative_eq!(i_high.max_abs(), 0.5, epsilon = 1e-13);
        // fields supported in |ξ| ≤ 2N: H¹ norm against an explicit mode sum
        let f = random_field(g, 5).map_spectral(|xi, c| if xi.abs() <= 8.0 { c } else { Complex64::new(0.0, 0.0) });
        let direct: f64 = (0..64)
            .map(|i| {
                let xi = g.xi(i);
                let m = if xi.abs() <= 4.0 { 1.0 } else { (4.0 / xi.abs()).sqrt() };
                (1.0 + xi * xi) * m * m * f.spectral()[i].norm_sqr()
            })
            .sum::<f64>()
            * g.length()
            / (64.0f64).powi(2);
        assert_relative_eq!(sobolev_norm(&i_operator(&f, &sym), 1.0), direct.sqrt(), max_relative = 1e-13);
        assert!(sobolev_norm(&i_operator(&f, &sym), 1.0) <= sobolev_norm(&f, 1.0));
    }

    #[test]
    fn l_operator_identity_and_zero_mode() {
        let g = Grid::new(128, 30.0).unwrap();
        let sym = MultiplierSymbol::new(3.0, 0.4).unwrap();
        assert_eq!(sym.l(0.0), 1.0);
        for seed in 0..1000 {
            let f = random_field(g, seed);
            let lhs = sobolev_norm(&i_operator(&f, &sym), 1.0);
            let rhs = sobolev_norm(&l_operator(&f, &sym), sym.s());
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
        }
    }

    #[test]
    fn l_symbol_bounds() {
        for &(n, s) in &[(1.0, 0.3), (8.0, 0.5), (64.0, 0.9)] {
            let sym = MultiplierSymbol::new(n, s).unwrap();
            let cap = 2f64.powf(1.0 - s) * n.powf(1.0 - s);
            for i in 0..10_000 {
                let xi = (i as f64 - 5000.0) * 0.37 * n;
                let l = sym.l(xi);
                assert!(l >= 1.0 - 1e-15 && l <= cap, "l({xi}) = {l}");
            }
        }
    }

    #[test]
    fn l_subadditivity_is_bounded_and_stable() {
        let sym = MultiplierSymbol::new(10.0, 0.3).unwrap();
        let small = l_subadditivity_ratio(&sym, 1e3, 1_000_000, 1);
        let large = l_subadditivity_ratio(&sym, 2e3, 1_000_000, 2);
        assert!(small.is_finite() && large.is_finite());
        assert!(small <= 1.0 + 1e-12 && large <= 1.0 + 1e-12, "{small} {large}");
        assert!((small / large).max(large / small) < 2.0);
    }

    #[test]
    fn padded_quadrature_is_exact_for_quartic() {
        // ∫|u|⁴ of a trigonometric polynomial computed on a padded grid equals
        // the value on an even finer grid.
        let g = Grid::new(16, 2.0 * PI).unwrap();
        let f = random_field(g, 9);
        let a = f.integrate_padded(2, |u| u.norm_sqr().powi(2));
        let b = f.integrate_padded(8, |u| u.norm_sqr().powi(2));
        assert_relative_eq!(a, b, max_relative = 1e-13);
    }

    proptest::proptest! {
        #[test]
        fn m_is_even_monotone_and_continuous(n in 0.5f64..50.0, s in 0.26f64..0.99, a in 0.0f64..500.0, b in 0.0f64..500.0) {
            let sym = MultiplierSymbol::new(n, s).unwrap();
            proptest::prop_assert_eq!(sym.m(a), sym.m(-a));
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            proptest::prop_assert!(sym.m(hi) <= sym.m(lo));
            proptest::prop_assert!(sym.m(hi) > 0.0 && sym.m(lo) <= 1.0);
            proptest::prop_assert!((sym.m(n * (1.0 + 1e-12)) - 1.0).abs() < 1e-10);
        }
    }
}
