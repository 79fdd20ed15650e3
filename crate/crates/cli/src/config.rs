//! Experiment configuration: one JSON document, overridden by command-line
//! flags.
//!
//! Precedence, lowest first: built-in defaults, the `--config` file, flags.

use std::f64::consts::PI;
use std::path::Path;

use ashlab_core::models::{ExactSolution, PlaneWave, Soliton, SolitonFamily, SolitonParams};
use ashlab_core::snapshot::Dtype;
use ashlab_core::solver::StepperConfig;
use ashlab_core::spectral::random_field;
use ashlab_core::{EquationParams, Grid, LabError, MultiplierSymbol, SpectralField};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub modes: usize,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiplierConfig {
    /// Cutoffs `N`; `energy-scan` sweeps all of them, other commands use the first.
    pub cutoffs: Vec<f64>,
    pub s: f64,
}

/// Initial data families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// `A sech((x − x₀)/w) e^{iκx}` with `κ` snapped to the lattice.
    Sech {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        width: f64,
        #[serde(default)]
        carrier: f64,
        #[serde(default)]
        center: f64,
    },
    /// Closed-form soliton of the chosen family.
    Soliton {
        family: SolitonFamily,
        eta: f64,
        #[serde(default)]
        carrier: f64,
    },
    /// Plane wave on the smallest positive lattice wavenumber.
    PlaneWave {
        #[serde(default)]
        phase: f64,
    },
    /// `A sech(x)` plus a tail with `|û| ∝ ⟨ξ⟩^{−p}` and seeded phases.
    SechPowerTail {
        #[serde(default = "one")]
        amplitude: f64,
        exponent: f64,
        tail_amplitude: f64,
        #[serde(default)]
        tail_cutoff: Option<f64>,
    },
    /// Seeded random modes damped by `exp(−decay·|k|)`.
    Random { decay: f64, amplitude: f64 },
}

fn one() -> f64 {
    1.0
}

impl InitialData {
    pub fn label(&self) -> &'static str {
        match self {
            InitialData::Sech { .. } => "sech",
            InitialData::Soliton { .. } => "soliton",
            InitialData::PlaneWave { .. } => "plane_wave",
            InitialData::SechPowerTail { .. } => "sech_power_tail",
            InitialData::Random { .. } => "random",
        }
    }

    /// Sample at `t = 0`, with the closed form when the data is an exact solution.
    pub fn build(&self, grid: Grid, params: &EquationParams, seed: u64) -> Result<(SpectralField, Option<ExactSolution>), LabError> {
        Ok(match *self {
            InitialData::Sech { amplitude, width, carrier, center } => {
                if !(width > 0.0) {
                    return Err(LabError::InvalidParameter(format!("sech width must be positive, got {width}")));
                }
                let (kappa, _) = grid.snap(carrier);
                let f = SpectralField::from_fn(grid, |x| {
                    Complex64::from_polar(amplitude / ((x - center) / width).cosh(), kappa * x)
                });
                (f, None)
            }
            InitialData::Soliton { family, eta, carrier } => {
                let (carrier, _) = grid.snap(carrier);
                let sol = Soliton::new(params, &SolitonParams { eta, carrier, family })?;
                (sol.sample(grid, 0.0), Some(ExactSolution::Soliton(sol)))
            }
            InitialData::PlaneWave { phase } => {
                let pw = PlaneWave::new(params, &grid, phase)?;
                (pw.sample(grid, 0.0), Some(ExactSolution::PlaneWave(pw)))
            }
            InitialData::SechPowerTail { amplitude, exponent, tail_amplitude, tail_cutoff } => {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let k = grid.modes() as f64;
                let weight = k * tail_amplitude * grid.dxi().sqrt();
                let base = SpectralField::from_fn(grid, |x| Complex64::new(amplitude / x.cosh(), 0.0));
                let phases: Vec<f64> = (0..grid.modes()).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
                let tail: Vec<Complex64> = (0..grid.modes())
                    .map(|i| {
                        let xi = grid.xi(i);
                        if tail_cutoff.is_some_and(|c| xi.abs() > c) {
                            return Complex64::new(0.0, 0.0);
                        }
                        Complex64::from_polar(weight * (1.0 + xi * xi).powf(-exponent / 2.0), phases[i])
                    })
                    .collect();
                let tail = SpectralField::from_spectral(grid, tail)?;
                (base.add(&tail)?, None)
            }
            InitialData::Random { decay, amplitude } => (random_field(grid, decay, amplitude, seed), None),
        })
    }
}

/// Gauge frequency selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GaugeChoice {
    Named(GaugeName),
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeName {
    /// `λ = a/3b`.
    Mkdv,
    /// `λ = −c₃/(6be)`.
    C3,
}

impl GaugeChoice {
    pub fn label(&self) -> String {
        match self {
            GaugeChoice::Named(GaugeName::Mkdv) => "mkdv".into(),
            GaugeChoice::Named(GaugeName::C3) => "c3".into(),
            GaugeChoice::Value(v) => format!("lambda={v}"),
        }
    }

    pub fn resolve(&self, params: &EquationParams) -> Result<f64, LabError> {
        match self {
            GaugeChoice::Named(GaugeName::Mkdv) => Ok(params.mkdv_gauge()),
            GaugeChoice::Named(GaugeName::C3) => {
                if params.b * params.e == 0.0 {
                    return Err(LabError::InvalidParameter("the c3 gauge needs b*e != 0".into()));
                }
                Ok(params.c3_gauge())
            }
            GaugeChoice::Value(v) => Ok(*v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyConfig {
    pub lambda6: bool,
    pub galerkin: bool,
    pub unit_k1: bool,
    pub epsilon0: f64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self { lambda6: true, galerkin: true, unit_k1: false, epsilon0: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaugeConfig {
    pub lambdas: Vec<GaugeChoice>,
}

impl Default for GaugeConfig {
    fn default() -> Self {
        Self { lambdas: vec![GaugeChoice::Named(GaugeName::Mkdv), GaugeChoice::Named(GaugeName::C3)] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RescaleConfig {
    pub c0: f64,
    /// Data to certify; empty selects the built-in corpus.
    pub corpus: Vec<InitialData>,
}

impl Default for RescaleConfig {
    fn default() -> Self {
        Self { c0: 0.5, corpus: Vec::new() }
    }
}

impl RescaleConfig {
    pub fn corpus_or_default(&self) -> Vec<InitialData> {
        if !self.corpus.is_empty() {
            return self.corpus.clone();
        }
        vec![
            InitialData::Sech { amplitude: 1.0, width: 1.0, carrier: 0.0, center: 0.0 },
            InitialData::Sech { amplitude: 2.0, width: 0.5, carrier: 1.0, center: 0.0 },
            InitialData::SechPowerTail { amplitude: 1.0, exponent: 1.0, tail_amplitude: 0.3, tail_cutoff: Some(40.0) },
            InitialData::Random { decay: 0.2, amplitude: 0.05 },
        ]
    }
}

/// Sample sizes of the `verify` suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Flip the sign of `δ₄` to confirm the oracles detect it.
    pub mutate_delta4: bool,
    pub hyperplane_tuples: usize,
    pub unit_tuples: usize,
    pub unit_fields: usize,
    pub normalization_fields: usize,
    pub e1_fields: usize,
    pub delta4_bound_samples: usize,
    pub delta6_bound_samples: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            mutate_delta4: false,
            hyperplane_tuples: 1_000_000,
            unit_tuples: 10_000,
            unit_fields: 100,
            normalization_fields: 100,
            e1_fields: 1_000,
            delta4_bound_samples: 1_000_000,
            delta6_bound_samples: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub exact_error: f64,
    pub residual: f64,
    pub i1_drift: f64,
    pub i2_drift: f64,
    pub gauge: f64,
    pub max_slope: f64,
    pub ratio_spread: f64,
    pub rescale_identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            exact_error: 1e-6,
            residual: 1e-10,
            i1_drift: 1e-10,
            i2_drift: 1e-8,
            gauge: 1e-6,
            max_slope: -2.0,
            ratio_spread: 10.0,
            rescale_identity: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub svg: bool,
    pub snapshots: bool,
    pub snapshot_dtype: Dtype,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { svg: true, snapshots: false, snapshot_dtype: Dtype::Complex128 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub params: EquationParams,
    pub grid: GridConfig,
    pub stepper: StepperConfig,
    pub multiplier: MultiplierConfig,
    pub initial: InitialData,
    pub seed: u64,
    pub energy: EnergyConfig,
    pub gauge: GaugeConfig,
    pub rescale: RescaleConfig,
    pub verify: VerifyConfig,
    pub tolerances: Tolerances,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            params: EquationParams::new(0.0, 1.0, 0.0, 1.0, 1.0),
            grid: GridConfig { modes: 256, length: 40.0 },
            stepper: StepperConfig::new(1.0, 0.1),
            multiplier: MultiplierConfig { cutoffs: vec![4.0, 8.0, 16.0, 32.0], s: 0.3 },
            initial: InitialData::Sech { amplitude: 1.0, width: 1.0, carrier: 0.5, center: 0.0 },
            seed: 0,
            energy: EnergyConfig::default(),
            gauge: GaugeConfig::default(),
            rescale: RescaleConfig::default(),
            verify: VerifyConfig::default(),
            tolerances: Tolerances::default(),
            output: OutputConfig::default(),
        }
    }
}

/// Flag values that override the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub modes: Option<usize>,
    pub box_length: Option<f64>,
    pub cutoffs: Option<Vec<f64>>,
    pub sobolev_s: Option<f64>,
    pub mutate_delta4: bool,
    pub no_svg: bool,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
            }
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.modes {
            self.grid.modes = v;
        }
        if let Some(v) = o.box_length {
            self.grid.length = v;
        }
        if let Some(v) = &o.cutoffs {
            self.multiplier.cutoffs = v.clone();
        }
        if let Some(v) = o.sobolev_s {
            self.multiplier.s = v;
        }
        if o.mutate_delta4 {
            self.verify.mutate_delta4 = true;
        }
        if o.no_svg {
            self.output.svg = false;
        }
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        Grid::new(self.grid.modes, self.grid.length).map_err(CliError::from_lab)
    }

    /// Symbol for the first cutoff.
    pub fn symbol(&self) -> Result<MultiplierSymbol, CliError> {
        let n = *self.multiplier.cutoffs.first().ok_or_else(|| CliError::Config("multiplier.cutoffs is empty".into()))?;
        MultiplierSymbol::new(n, self.multiplier.s).map_err(CliError::from_lab)
    }

    /// Checks shared by every command.
    pub fn validate(&self) -> Result<(), CliError> {
        self.params.validate().map_err(CliError::from_lab)?;
        self.grid()?;
        self.stepper.check().map_err(CliError::from_lab)?;
        if !(self.multiplier.s > 0.25 && self.multiplier.s < 1.0) {
            return Err(CliError::Config(format!("sobolev s must lie in (1/4, 1), got {}", self.multiplier.s)));
        }
        for &n in &self.multiplier.cutoffs {
            if !(n > 0.0 && n.is_finite()) {
                return Err(CliError::Config(format!("cutoff N must be positive, got {n}")));
            }
        }
        Ok(())
    }

    /// Stable hash of the effective configuration.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}
