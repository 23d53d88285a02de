//! Scenario files: typed JSON with unknown keys rejected.

use std::collections::BTreeMap;
use std::path::Path;

use hybrid_thermal::checks::Tolerances;
use hybrid_thermal::models::{
    BuiltModel, ContinuumParams, DriftScheme, FokkerPlanck, Grid, LatticeScenario, LatticeVariant, Mechanism,
    TlsScenario,
};
use hybrid_thermal::{
    Complex64, ComplexMatrix, HybridGenerator, HybridHamiltonian, IntegratorConfig, Level, Method, Observable,
    TransitionSpec,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioType {
    Tls,
    Lattice,
    AltLattice,
    FokkerPlanck,
    Custom,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(rename = "type")]
    pub kind: ScenarioType,
    pub beta: f64,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub tls: Option<TlsBlock>,
    #[serde(default)]
    pub lattice: Option<LatticeBlock>,
    #[serde(default)]
    pub fokker_planck: Option<FpBlock>,
    #[serde(default)]
    pub custom: Option<CustomBlock>,
    #[serde(default)]
    pub initial: Option<InitialState>,
    #[serde(default)]
    pub integrator: Option<IntegratorBlock>,
    #[serde(default)]
    pub outputs: OutputsBlock,
    #[serde(default)]
    pub verify: VerifyBlock,
}

/// A matrix entry: a real number or a `[re, im]` pair.
#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    fn value(self) -> Complex64 {
        match self {
            Entry::Real(x) => Complex64::new(x, 0.0),
            Entry::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

pub type MatrixRows = Vec<Vec<Entry>>;

pub fn matrix(rows: &MatrixRows, what: &str) -> Result<ComplexMatrix, CliError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Input(format!("{what}: matrix must be square and non-empty")));
    }
    let data = rows.iter().flatten().map(|e| e.value()).collect();
    let m = ComplexMatrix::from_row_major(n, data).map_err(|e| CliError::Input(format!("{what}: {e}")))?;
    m.check_hermitian().map_err(|e| CliError::Input(format!("{what}: {e}")))?;
    Ok(m)
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TlsBlock {
    #[serde(default)]
    pub e_a: f64,
    #[serde(default)]
    pub e_b: f64,
    /// Splitting of `H_a = (ω_a/2)σ_z`; ignored when `h_a` is given.
    #[serde(default)]
    pub omega_a: Option<f64>,
    /// Splitting of `H_b = (ω_b/2)σ_x`; ignored when `h_b` is given.
    #[serde(default)]
    pub omega_b: Option<f64>,
    #[serde(default)]
    pub h_a: Option<MatrixRows>,
    #[serde(default)]
    pub h_b: Option<MatrixRows>,
    /// Letters of the enabled mechanisms, e.g. `"abcde"`.
    #[serde(default = "all_mechanisms")]
    pub mechanisms: String,
    #[serde(default = "one")]
    pub rate: f64,
    /// Per-mechanism rate overrides keyed by letter.
    #[serde(default)]
    pub rates: BTreeMap<String, f64>,
}

fn all_mechanisms() -> String {
    "abcde".into()
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeBlock {
    pub half_width: usize,
    #[serde(default)]
    pub omega0: f64,
    pub delta_omega: f64,
    #[serde(default)]
    pub e0: f64,
    pub delta_e: f64,
    #[serde(default = "one")]
    pub delta_x: f64,
    #[serde(default = "one")]
    pub kappa_th: f64,
    #[serde(default = "one")]
    pub kappa_plus: f64,
    #[serde(default = "one")]
    pub kappa_minus: f64,
    #[serde(default = "yes")]
    pub auto_truncate: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    #[default]
    Central,
    Upwind,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FpBlock {
    #[serde(default)]
    pub omega0: f64,
    pub delta_omega: f64,
    pub delta_e: f64,
    #[serde(default = "one")]
    pub delta_x: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "one")]
    pub kappa_th: f64,
    pub half_length: f64,
    pub cells: usize,
    #[serde(default)]
    pub scheme: SchemeName,
    /// Initial Gaussian profile `e^{−(x−center)²/(2σ²)}`.
    #[serde(default)]
    pub initial_center: f64,
    #[serde(default = "one")]
    pub initial_sigma: f64,
    /// Initial 2×2 qubit state; default `|+x⟩⟨+x|`.
    #[serde(default)]
    pub initial_rho: Option<MatrixRows>,
    /// Stationary-density agreement required by `verify`, relative to `max w`.
    #[serde(default = "fp_density_tol")]
    pub density_tol: f64,
}

fn fp_density_tol() -> f64 {
    1e-2
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionEntry {
    /// `[label, eigen-index]` of one end.
    pub a: [usize; 2],
    pub b: [usize; 2],
    pub rate: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CustomBlock {
    pub energies: Vec<f64>,
    /// Conditional quantum Hamiltonians, one per label.
    pub hamiltonians: Vec<MatrixRows>,
    pub transitions: Vec<TransitionEntry>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    Thermal,
    MaximallyMixed,
    /// Random state drawn from `--seed`.
    Random,
    /// A single label occupied by `rho`.
    Label { label: usize, rho: MatrixRows },
    /// A state previously written by `evolve`.
    Checkpoint { path: String },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Rk4,
    #[default]
    Rk45,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorBlock {
    #[serde(default)]
    pub method: MethodName,
    pub dt: Option<f64>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub t_max: Option<f64>,
    pub sample_interval: Option<f64>,
    pub convergence_spacing: Option<f64>,
    pub convergence_window: Option<usize>,
    pub convergence_tol: Option<f64>,
    pub stop_on_convergence: Option<bool>,
    pub max_steps: Option<usize>,
}

impl IntegratorBlock {
    pub fn config(&self) -> IntegratorConfig {
        let d = IntegratorConfig::default();
        IntegratorConfig {
            method: match self.method {
                MethodName::Rk4 => Method::Rk4,
                MethodName::Rk45 => Method::Rk45,
            },
            dt: self.dt,
            rel_tol: self.rel_tol.unwrap_or(d.rel_tol),
            abs_tol: self.abs_tol.unwrap_or(d.abs_tol),
            t_max: self.t_max,
            sample_interval: self.sample_interval,
            convergence_spacing: self.convergence_spacing,
            convergence_window: self.convergence_window.unwrap_or(d.convergence_window),
            convergence_tol: self.convergence_tol.unwrap_or(d.convergence_tol),
            stop_on_convergence: self.stop_on_convergence.unwrap_or(d.stop_on_convergence),
            max_steps: self.max_steps.unwrap_or(d.max_steps),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableEntry {
    Population { label: usize, index: usize },
    Coherence { label: usize, i: usize, j: usize },
}

impl ObservableEntry {
    pub fn observable(&self) -> Observable {
        match *self {
            ObservableEntry::Population { label, index } => Observable::Population(Level::new(label, index)),
            ObservableEntry::Coherence { label, i, j } => Observable::Coherence { label, i, j },
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsBlock {
    #[serde(default = "names::trajectory")]
    pub trajectory: String,
    #[serde(default = "names::thermal")]
    pub thermal: String,
    #[serde(default = "names::conditionals")]
    pub conditionals: String,
    #[serde(default = "names::profile")]
    pub profile: String,
    #[serde(default = "names::report")]
    pub report: String,
    #[serde(default = "names::checkpoint")]
    pub checkpoint: String,
    #[serde(default)]
    pub observables: Vec<ObservableEntry>,
}

mod names {
    pub fn trajectory() -> String {
        "trajectory.csv".into()
    }
    pub fn thermal() -> String {
        "thermal.json".into()
    }
    pub fn conditionals() -> String {
        "conditionals.csv".into()
    }
    pub fn profile() -> String {
        "profile.csv".into()
    }
    pub fn report() -> String {
        "verify.json".into()
    }
    pub fn checkpoint() -> String {
        "final_state.json".into()
    }
}

impl Default for OutputsBlock {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyBlock {
    #[serde(default = "verify_samples")]
    pub samples: usize,
    /// Multiplies every uphill rate; values other than 1 inject a detailed-balance fault.
    #[serde(default = "one")]
    pub uphill_rate_scale: f64,
    pub balance_tol: Option<f64>,
    pub equivalence_tol: Option<f64>,
    pub stationarity_tol: Option<f64>,
    pub stationary_distance_tol: Option<f64>,
    pub weight_tol: Option<f64>,
    pub bipartite_limit: Option<usize>,
}

fn verify_samples() -> usize {
    20
}

impl Default for VerifyBlock {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

impl VerifyBlock {
    pub fn tolerances(&self) -> Tolerances {
        let d = Tolerances::default();
        Tolerances {
            balance: self.balance_tol.unwrap_or(d.balance),
            equivalence: self.equivalence_tol.unwrap_or(d.equivalence),
            stationarity: self.stationarity_tol.unwrap_or(d.stationarity),
            stationary_distance: self.stationary_distance_tol.unwrap_or(d.stationary_distance),
            weights: self.weight_tol.unwrap_or(d.weights),
            bipartite_limit: self.bipartite_limit.unwrap_or(d.bipartite_limit),
        }
    }
}

/// A discrete model ready to run, or the continuum Fokker-Planck model.
pub enum Model {
    Discrete(BuiltModel),
    FokkerPlanck(Box<FokkerPlanck>),
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let s: ScenarioFile = serde_json::from_str(text).map_err(|e| CliError::Input(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_value(v: serde_json::Value) -> Result<Self, CliError> {
        let s: ScenarioFile = serde_json::from_value(v).map_err(|e| CliError::Input(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(CliError::Input("field `beta` must be finite and positive".into()));
        }
        let present = [
            ("tls", self.tls.is_some()),
            ("lattice", self.lattice.is_some()),
            ("fokker_planck", self.fokker_planck.is_some()),
            ("custom", self.custom.is_some()),
        ];
        let wanted = self.block_name();
        for (name, is_set) in present {
            if name == wanted && !is_set {
                return Err(CliError::Input(format!("type `{}` requires a `{name}` block", self.type_name())));
            }
            if name != wanted && is_set {
                return Err(CliError::Input(format!("block `{name}` does not apply to type `{}`", self.type_name())));
            }
        }
        Ok(())
    }

    fn block_name(&self) -> &'static str {
        match self.kind {
            ScenarioType::Tls => "tls",
            ScenarioType::Lattice | ScenarioType::AltLattice => "lattice",
            ScenarioType::FokkerPlanck => "fokker_planck",
            ScenarioType::Custom => "custom",
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self.kind {
            ScenarioType::Tls => "tls",
            ScenarioType::Lattice => "lattice",
            ScenarioType::AltLattice => "alt_lattice",
            ScenarioType::FokkerPlanck => "fokker_planck",
            ScenarioType::Custom => "custom",
        }
    }

    pub fn lattice_scenario(&self) -> Option<LatticeScenario> {
        let l = self.lattice.as_ref()?;
        let mut s = LatticeScenario::new(self.beta, l.half_width, l.omega0, l.delta_omega, l.delta_e);
        s.e0 = l.e0;
        s.delta_x = l.delta_x;
        s.kappa_th = l.kappa_th;
        s.kappa_plus = l.kappa_plus;
        s.kappa_minus = l.kappa_minus;
        s.auto_truncate = l.auto_truncate;
        Some(s)
    }

    pub fn build(&self) -> Result<Model, CliError> {
        let built = match self.kind {
            ScenarioType::Tls => self.build_tls()?,
            ScenarioType::Lattice | ScenarioType::AltLattice => {
                let variant =
                    if self.kind == ScenarioType::Lattice { LatticeVariant::Dephasing } else { LatticeVariant::Flip };
                self.lattice_scenario().expect("validated").build(variant).map_err(CliError::model)?
            }
            ScenarioType::Custom => self.build_custom()?,
            ScenarioType::FokkerPlanck => {
                let f = self.fokker_planck.as_ref().expect("validated");
                let params = ContinuumParams {
                    beta: self.beta,
                    omega0: f.omega0,
                    delta_omega: f.delta_omega,
                    delta_e: f.delta_e,
                    delta_x: f.delta_x,
                };
                let grid = Grid::symmetric(f.half_length, f.cells).map_err(CliError::model)?;
                let scheme = match f.scheme {
                    SchemeName::Central => DriftScheme::Central,
                    SchemeName::Upwind => DriftScheme::Upwind,
                };
                let fp = FokkerPlanck::new(params, f.gamma, f.kappa_th, grid, scheme).map_err(CliError::model)?;
                return Ok(Model::FokkerPlanck(Box::new(fp)));
            }
        };
        Ok(Model::Discrete(built))
    }

    fn build_tls(&self) -> Result<BuiltModel, CliError> {
        let t = self.tls.as_ref().expect("validated");
        let mut s = TlsScenario::sigma_zx(self.beta, t.omega_a.unwrap_or(2.0), t.omega_b.unwrap_or(1.0), t.e_a, t.e_b);
        if let Some(m) = &t.h_a {
            s.h_a = matrix(m, "tls.h_a")?;
        }
        if let Some(m) = &t.h_b {
            s.h_b = matrix(m, "tls.h_b")?;
        }
        let mut mechanisms = Vec::new();
        for c in t.mechanisms.chars() {
            let m = Mechanism::from_letter(c)
                .ok_or_else(|| CliError::Input(format!("tls.mechanisms: unknown mechanism `{c}`")))?;
            if mechanisms.iter().any(|&(x, _)| x == m) {
                return Err(CliError::Input(format!("tls.mechanisms: `{c}` listed twice")));
            }
            mechanisms.push((m, t.rate));
        }
        for (k, &r) in &t.rates {
            let mut chars = k.chars();
            let m = match (chars.next().and_then(Mechanism::from_letter), chars.next()) {
                (Some(m), None) => m,
                _ => return Err(CliError::Input(format!("tls.rates: unknown mechanism `{k}`"))),
            };
            match mechanisms.iter_mut().find(|(x, _)| *x == m) {
                Some(entry) => entry.1 = r,
                None => return Err(CliError::Input(format!("tls.rates: mechanism `{k}` is not enabled"))),
            }
        }
        s.mechanisms = mechanisms;
        s.build().map_err(CliError::model)
    }

    fn build_custom(&self) -> Result<BuiltModel, CliError> {
        let c = self.custom.as_ref().expect("validated");
        if c.energies.len() != c.hamiltonians.len() || c.energies.is_empty() {
            return Err(CliError::Input("custom: need one energy per Hamiltonian".into()));
        }
        let hs = c
            .hamiltonians
            .iter()
            .enumerate()
            .map(|(i, m)| matrix(m, &format!("custom.hamiltonians[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let h = HybridHamiltonian::from_conditionals(c.energies.clone(), hs).map_err(CliError::model)?;
        let specs: Vec<TransitionSpec> = c
            .transitions
            .iter()
            .map(|t| TransitionSpec::non_diagonal(Level::new(t.a[0], t.a[1]), Level::new(t.b[0], t.b[1]), t.rate))
            .collect();
        let generator = HybridGenerator::build(h, &specs, self.beta).map_err(CliError::model)?;
        let mut notes = Vec::new();
        if !specs.iter().any(|s| !s.is_diagonal()) && c.energies.len() > 1 {
            notes.push("no transition changes the classical label; stationary state is not unique".into());
        }
        Ok(BuiltModel { generator, plus: Vec::new(), minus: Vec::new(), notes })
    }
}
