//! Run configuration documents.

use std::path::PathBuf;

use fermiflow::initial_data::{fermi_ball, harmonic_trap, plane_wave_projection, trapped_slater};
use fermiflow::meanfield::{EvolutionConfig, MeanFieldKind, Scheme};
use fermiflow::{DensityMatrix, Lattice, ModelParams, Potential, PotentialSpec};
use serde::{Deserialize, Serialize};

use crate::error::RunnerError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Evolve,
    CompareHfHartree,
    ExactVsMeanfield,
    FockVerify,
    Fluctuation,
    Semiclassics,
    DiagnosticsOnly,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::Evolve,
        Scenario::CompareHfHartree,
        Scenario::ExactVsMeanfield,
        Scenario::FockVerify,
        Scenario::Fluctuation,
        Scenario::Semiclassics,
        Scenario::DiagnosticsOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Evolve => "evolve",
            Scenario::CompareHfHartree => "compare-hf-hartree",
            Scenario::ExactVsMeanfield => "exact-vs-meanfield",
            Scenario::FockVerify => "fock-verify",
            Scenario::Fluctuation => "fluctuation",
            Scenario::Semiclassics => "semiclassics",
            Scenario::DiagnosticsOnly => "diagnostics-only",
        }
    }

    pub fn parse(name: &str) -> Option<Scenario> {
        Scenario::ALL.into_iter().find(|s| s.name() == name)
    }

    fn needs_fock(self) -> bool {
        matches!(self, Scenario::ExactVsMeanfield | Scenario::FockVerify | Scenario::Fluctuation)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    #[serde(default = "one")]
    pub ds: usize,
    pub d: usize,
    #[serde(default = "unit_length")]
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n_particles: usize,
    #[serde(default)]
    pub hbar_override: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[derive(Default)]
pub enum PotentialConfig {
    #[default]
    Zero,
    Gaussian { lambda: f64, sigma: f64 },
    Cosine { lambda: f64, mode: u32 },
    Table { values: Vec<f64> },
}


impl PotentialConfig {
    fn spec(&self) -> PotentialSpec {
        match self {
            PotentialConfig::Zero => PotentialSpec::Zero,
            PotentialConfig::Gaussian { lambda, sigma } => PotentialSpec::Gaussian { lambda: *lambda, sigma: *sigma },
            PotentialConfig::Cosine { lambda, mode } => PotentialSpec::Cosine { lambda: *lambda, mode: *mode },
            PotentialConfig::Table { values } => PotentialSpec::Table(values.clone()),
        }
    }
}

/// Slater initial data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    /// Ground state of `-ħ²Δ + strength·|x - centre|²`, released at `t = 0`.
    Trapped { strength: f64 },
    FermiBall,
    /// Integer lattice momenta, one per particle.
    PlaneWaves { momenta: Vec<Vec<i64>> },
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig::Trapped { strength: 50.0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    #[default]
    MidpointExponential,
    EulerExponential,
    SplitMidpoint,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindName {
    #[default]
    HartreeFock,
    Hartree,
    Free,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "unit_length")]
    pub t_final: f64,
    #[serde(default)]
    pub scheme: SchemeName,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    #[serde(default)]
    pub kind: KindName,
}

impl Default for EvolutionSection {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            t_final: 1.0,
            scheme: SchemeName::default(),
            snapshot_stride: default_stride(),
            kind: KindName::default(),
        }
    }
}

impl EvolutionSection {
    pub fn config(&self) -> EvolutionConfig {
        let scheme = match self.scheme {
            SchemeName::MidpointExponential => Scheme::MidpointExponential,
            SchemeName::EulerExponential => Scheme::EulerExponential,
            SchemeName::SplitMidpoint => Scheme::SplitMidpoint,
        };
        EvolutionConfig::new(self.dt, self.t_final).with_stride(self.snapshot_stride).with_scheme(scheme)
    }

    pub fn kind(&self) -> MeanFieldKind {
        match self.kind {
            KindName::HartreeFock => MeanFieldKind::HartreeFock,
            KindName::Hartree => MeanFieldKind::Hartree,
            KindName::Free => MeanFieldKind::Free,
        }
    }
}

/// `"default"` or an explicit list of momentum vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PSetConfig {
    Named(String),
    Explicit(Vec<Vec<f64>>),
}

impl Default for PSetConfig {
    fn default() -> Self {
        PSetConfig::Named("default".into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockSection {
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Time window of the log-log slope fit.
    #[serde(default = "default_window")]
    pub fit_window: [f64; 2],
    /// Largest rate scanned by the double-exponential fit.
    #[serde(default = "default_max_rate")]
    pub max_rate: f64,
    #[serde(default = "default_moment")]
    pub moment: u32,
}

impl Default for FockSection {
    fn default() -> Self {
        Self {
            trials: default_trials(),
            fit_window: default_window(),
            max_rate: default_max_rate(),
            moment: default_moment(),
        }
    }
}

/// Values derived during validation, echoed in the summary.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Resolved {
    pub hbar: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub scenario: Option<Scenario>,
    pub lattice: LatticeConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub evolution: EvolutionSection,
    #[serde(default)]
    pub p_set: PSetConfig,
    #[serde(default)]
    pub fock: FockSection,
    /// Record the commutator diagnostics as trajectory hooks.
    #[serde(default)]
    pub commutators: bool,
    #[serde(default = "yes")]
    pub snapshots: bool,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(skip_deserializing, default)]
    pub resolved: Resolved,
}

fn one() -> usize {
    1
}
fn unit_length() -> f64 {
    1.0
}
fn default_dt() -> f64 {
    1e-3
}
fn default_stride() -> usize {
    100
}
fn default_trials() -> usize {
    200
}
fn default_window() -> [f64; 2] {
    [0.01, 0.1]
}
fn default_max_rate() -> f64 {
    10.0
}
fn default_moment() -> u32 {
    2
}
fn yes() -> bool {
    true
}
fn default_output() -> PathBuf {
    PathBuf::from("fermiflow-out")
}

fn invalid(key: &str, message: impl Into<String>) -> RunnerError {
    RunnerError::Validation { key: key.into(), message: message.into() }
}

/// Parses and validates a JSON document.
pub fn parse_config(text: &str) -> Result<RunConfig, RunnerError> {
    let mut config: RunConfig = serde_json::from_str(text).map_err(|e| RunnerError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    pub fn scenario(&self) -> Result<Scenario, RunnerError> {
        self.scenario.ok_or_else(|| invalid("scenario", "no scenario given"))
    }

    pub fn lattice(&self) -> Result<Lattice, RunnerError> {
        Lattice::new(self.lattice.ds, self.lattice.d, self.lattice.length).map_err(|e| invalid("lattice", e.to_string()))
    }

    pub fn params(&self) -> Result<ModelParams, RunnerError> {
        let n = self.model.n_particles;
        let params = match self.model.hbar_override {
            Some(h) => ModelParams::with_hbar(n, h),
            None => ModelParams::new(n, &self.lattice()?),
        };
        params.map_err(|e| invalid("model", e.to_string()))
    }

    pub fn potential(&self) -> Result<Potential, RunnerError> {
        Potential::build(&self.potential.spec(), &self.lattice()?).map_err(|e| invalid("potential", e.to_string()))
    }

    pub fn initial_state(&self) -> Result<DensityMatrix, RunnerError> {
        let lattice = self.lattice()?;
        let n = self.model.n_particles;
        let state = match &self.initial {
            InitialConfig::Trapped { strength } => {
                trapped_slater(&lattice, self.params()?.hbar(), &harmonic_trap(&lattice, *strength), n)
            }
            InitialConfig::FermiBall => fermi_ball(&lattice, n).and_then(|ks| plane_wave_projection(&lattice, &ks)),
            InitialConfig::PlaneWaves { momenta } => {
                let ks = momenta
                    .iter()
                    .map(|k| {
                        lattice
                            .momentum_index(k)
                            .ok_or_else(|| invalid("initial.momenta", format!("momentum {k:?} not on the lattice")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                plane_wave_projection(&lattice, &ks)
            }
        };
        state.map_err(|e| invalid("initial", e.to_string()))
    }

    pub fn p_set(&self) -> Result<Vec<Vec<f64>>, RunnerError> {
        match &self.p_set {
            PSetConfig::Named(name) if name == "default" => Ok(fermiflow::initial_data::default_p_set(&self.lattice()?)),
            PSetConfig::Named(name) => Err(invalid("p_set", format!("unknown momentum set {name:?}"))),
            PSetConfig::Explicit(ps) => {
                if ps.is_empty() {
                    return Err(invalid("p_set", "empty momentum set"));
                }
                if let Some(p) = ps.iter().find(|p| p.len() != self.lattice.ds) {
                    return Err(invalid("p_set", format!("momentum {p:?} has the wrong dimension")));
                }
                Ok(ps.clone())
            }
        }
    }

    /// Checks every field and resolves `ħ`.
    pub fn validate(&mut self) -> Result<(), RunnerError> {
        let lat = &self.lattice;
        if !(1..=3).contains(&lat.ds) {
            return Err(invalid("lattice.ds", format!("must be 1, 2 or 3, got {}", lat.ds)));
        }
        if lat.d < 2 {
            return Err(invalid("lattice.d", format!("need at least 2 sites per axis, got {}", lat.d)));
        }
        if !(lat.length > 0.0 && lat.length.is_finite()) {
            return Err(invalid("lattice.length", format!("must be positive, got {}", lat.length)));
        }
        let lattice = self.lattice()?;
        let n = self.model.n_particles;
        if n == 0 || n > lattice.site_count() {
            return Err(invalid(
                "model.n_particles",
                format!("must lie in 1..={}, got {n}", lattice.site_count()),
            ));
        }
        if let Some(h) = self.model.hbar_override {
            if !(h > 0.0 && h.is_finite()) {
                return Err(invalid("model.hbar_override", format!("must be positive, got {h}")));
            }
        }
        match &self.potential {
            PotentialConfig::Gaussian { sigma, .. } if !(*sigma > 0.0) => {
                return Err(invalid("potential.sigma", format!("must be positive, got {sigma}")));
            }
            PotentialConfig::Table { values } if values.len() != lattice.site_count() => {
                return Err(invalid(
                    "potential.values",
                    format!("expected {} samples, got {}", lattice.site_count(), values.len()),
                ));
            }
            _ => {}
        }
        self.potential()?;
        let ev = &self.evolution;
        if !(ev.dt > 0.0 && ev.dt.is_finite()) {
            return Err(invalid("evolution.dt", format!("dt must be positive, got {}", ev.dt)));
        }
        if !(ev.t_final >= ev.dt && ev.t_final.is_finite()) {
            return Err(invalid("evolution.t_final", format!("must be at least dt, got {}", ev.t_final)));
        }
        if ev.snapshot_stride == 0 {
            return Err(invalid("evolution.snapshot_stride", "must be at least 1"));
        }
        if let InitialConfig::Trapped { strength } = self.initial {
            if !(strength >= 0.0 && strength.is_finite()) {
                return Err(invalid("initial.strength", format!("must be non-negative, got {strength}")));
            }
        }
        if let InitialConfig::PlaneWaves { momenta } = &self.initial {
            if momenta.len() != n {
                return Err(invalid("initial.momenta", format!("expected {n} momenta, got {}", momenta.len())));
            }
        }
        if self.fock.trials == 0 {
            return Err(invalid("fock.trials", "must be at least 1"));
        }
        let [lo, hi] = self.fock.fit_window;
        if !(lo > 0.0 && hi > lo) {
            return Err(invalid("fock.fit_window", format!("need 0 < start < end, got [{lo}, {hi}]")));
        }
        if !(self.fock.max_rate > 0.0) {
            return Err(invalid("fock.max_rate", "must be positive"));
        }
        if !(1..=6).contains(&self.fock.moment) {
            return Err(invalid("fock.moment", format!("must lie in 1..=6, got {}", self.fock.moment)));
        }
        self.p_set()?;
        if let Some(scenario) = self.scenario {
            if scenario.needs_fock() && (lat.ds != 1 || lat.d > fermiflow::fock::MAX_SITES) {
                return Err(invalid(
                    "lattice.d",
                    format!("{} needs ds = 1 and at most {} sites", scenario.name(), fermiflow::fock::MAX_SITES),
                ));
            }
            if scenario == Scenario::Semiclassics && (lat.ds != 1 || !lat.d.is_multiple_of(2)) {
                return Err(invalid("lattice.d", "semiclassics needs ds = 1 and even d"));
            }
        }
        self.resolved = Resolved { hbar: self.params()?.hbar() };
        Ok(())
    }
}
