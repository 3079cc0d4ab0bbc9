//! Scenario files: one TOML document per run, `kind` selects the schema.
//! Unknown keys are rejected everywhere.

use std::f64::consts::TAU;
use std::path::Path;

use emergent_core::microdynamics::{DriftDiffusionParams, FreeEnergyModel};
use emergent_core::thermo::{hbar_from_lambda, lambda_from_hbar, planck_from_mu, Branch};
use emergent_core::{Boundary, Grid, ScalarField};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scenario {
    Langevin(LangevinScenario),
    FokkerPlanck(FokkerPlanckScenario),
    Madelung(MadelungScenario),
    Schrodinger(SchrodingerScenario),
    ThermoPool(ThermoScenario),
    Measurement(MeasurementScenario),
    Compare(CompareScenario),
    Verify(VerifyScenario),
}

impl Scenario {
    pub fn kind(&self) -> &'static str {
        match self {
            Scenario::Langevin(_) => "langevin",
            Scenario::FokkerPlanck(_) => "fokker-planck",
            Scenario::Madelung(_) => "madelung",
            Scenario::Schrodinger(_) => "schrodinger",
            Scenario::ThermoPool(_) => "thermo-pool",
            Scenario::Measurement(_) => "measurement",
            Scenario::Compare(_) => "compare",
            Scenario::Verify(_) => "verify",
        }
    }

    fn seed_slot(&mut self) -> Option<&mut Option<u64>> {
        match self {
            Scenario::Langevin(s) => Some(&mut s.seed),
            Scenario::ThermoPool(s) => Some(&mut s.seed),
            Scenario::Measurement(s) => Some(&mut s.seed),
            _ => None,
        }
    }

    /// Applies a command-line seed and checks cross-field rules serde cannot
    /// express.
    pub fn finalize(&mut self, seed: Option<u64>) -> CliResult<()> {
        if let Some(slot) = self.seed_slot() {
            if seed.is_some() {
                *slot = seed;
            }
            if slot.is_none() {
                return Err(CliError::Config("missing field `seed` (required for stochastic scenarios)".into()));
            }
        }
        match self {
            Scenario::Langevin(s) => {
                s.grid.build()?;
                s.dynamics.params()?;
            }
            Scenario::FokkerPlanck(s) => {
                s.grid.build()?;
                s.dynamics.params()?;
            }
            Scenario::Madelung(s) => {
                s.grid.build()?;
                s.constants()?;
            }
            Scenario::Schrodinger(s) => {
                s.grid.build()?;
                s.constants()?;
            }
            Scenario::Compare(s) => {
                s.grid.build()?;
                s.constants()?;
            }
            Scenario::Measurement(s) => {
                if s.dim < 2 {
                    return Err(CliError::Config("`dim` must be at least 2".into()));
                }
            }
            Scenario::ThermoPool(_) | Scenario::Verify(_) => {}
        }
        Ok(())
    }
}

pub fn parse(text: &str) -> CliResult<Scenario> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))
}

pub fn load(path: &Path) -> CliResult<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundarySpec {
    Periodic,
    Reflecting,
    Absorbing,
}

impl From<BoundarySpec> for Boundary {
    fn from(b: BoundarySpec) -> Self {
        match b {
            BoundarySpec::Periodic => Boundary::Periodic,
            BoundarySpec::Reflecting => Boundary::Reflecting,
            BoundarySpec::Absorbing => Boundary::Absorbing,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub points: Vec<usize>,
    pub boundary: Vec<BoundarySpec>,
}

impl GridSpec {
    pub fn build(&self) -> CliResult<Grid> {
        let b: Vec<Boundary> = self.boundary.iter().map(|&b| b.into()).collect();
        Grid::build(&self.lower, &self.upper, &self.points, &b).map_err(|e| CliError::Config(format!("grid: {e}")))
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dynamics {
    pub gamma: f64,
    pub diffusion: f64,
    #[serde(default = "one")]
    pub epsilon: f64,
}

impl Dynamics {
    pub fn params(&self) -> CliResult<DriftDiffusionParams> {
        DriftDiffusionParams::new(self.gamma, self.diffusion, self.epsilon)
            .map_err(|e| CliError::Config(format!("dynamics: {e}")))
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchSpec {
    #[default]
    Positive,
    Negative,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FromMu {
    pub mu: f64,
    #[serde(default)]
    pub branch: BranchSpec,
}

/// Exactly one source of `ħ`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HbarSpec {
    pub from_mu: Option<FromMu>,
    pub from_lambda: Option<f64>,
    pub value: Option<f64>,
}

/// Resolved constants echoed in every report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub gamma: f64,
    pub diffusion: f64,
    pub epsilon: f64,
    pub mass: f64,
    pub hbar: f64,
    pub lambda: f64,
    pub source: &'static str,
}

impl Constants {
    pub fn resolve(dynamics: &Dynamics, hbar: &HbarSpec) -> CliResult<Self> {
        let params = dynamics.params()?;
        let given = [hbar.from_mu.is_some(), hbar.from_lambda.is_some(), hbar.value.is_some()];
        if given.iter().filter(|&&g| g).count() != 1 {
            return Err(CliError::Config(
                "hbar: give exactly one of `hbar.from_mu`, `hbar.from_lambda`, `hbar.value`".into(),
            ));
        }
        let bad = |e: emergent_core::Error| CliError::Config(format!("hbar: {e}"));
        let (value, source) = if let Some(m) = &hbar.from_mu {
            let branch = match m.branch {
                BranchSpec::Positive => Branch::Positive,
                BranchSpec::Negative => Branch::Negative,
            };
            (planck_from_mu(m.mu, params.epsilon, branch).map_err(bad)?, "from_mu")
        } else if let Some(l) = hbar.from_lambda {
            (hbar_from_lambda(params.diffusion, params.gamma, params.epsilon, l).map_err(bad)?, "from_lambda")
        } else {
            (hbar.value.unwrap(), "value")
        };
        if !(value.is_finite() && value != 0.0) {
            return Err(CliError::Config(format!("hbar: resolved value {value} is not usable")));
        }
        // propagation uses |ħ|; the sign only selects the branch of the phase
        let lambda = lambda_from_hbar(params.diffusion, params.gamma, params.epsilon, value.abs()).map_err(bad)?;
        Ok(Constants {
            gamma: params.gamma,
            diffusion: params.diffusion,
            epsilon: params.epsilon,
            mass: params.mass(),
            hbar: value,
            lambda,
            source,
        })
    }

    pub fn chemical_potential(&self) -> f64 {
        TAU * self.hbar.abs() / self.epsilon
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FreeEnergySpec {
    Constant { value: f64 },
    Quadratic { curvature: f64 },
    DoubleWell { depth: f64, radius: f64 },
    PlanePhase { wavevector: Vec<f64>, rate: f64 },
}

impl FreeEnergySpec {
    pub fn model(&self) -> FreeEnergyModel {
        match self {
            FreeEnergySpec::Constant { value } => FreeEnergyModel::Constant(*value),
            FreeEnergySpec::Quadratic { curvature } => FreeEnergyModel::Quadratic { curvature: *curvature },
            FreeEnergySpec::DoubleWell { depth, radius } => FreeEnergyModel::DoubleWell { depth: *depth, radius: *radius },
            FreeEnergySpec::PlanePhase { wavevector, rate } => {
                FreeEnergyModel::PlanePhase { wavevector: wavevector.clone(), rate: *rate }
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    Zero,
    Harmonic {
        omega: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    DoubleWell { depth: f64, radius: f64 },
}

impl PotentialSpec {
    pub fn on_grid(&self, grid: &Grid, mass: f64) -> ScalarField {
        match self {
            PotentialSpec::Zero => ScalarField::constant(grid, 0.0),
            PotentialSpec::Harmonic { omega, center } => {
                let c = center.clone().unwrap_or_else(|| vec![0.0; grid.dims()]);
                ScalarField::from_fn(grid, |q| {
                    0.5 * mass * omega * omega * q.iter().zip(&c).map(|(x, c)| (x - c).powi(2)).sum::<f64>()
                })
            }
            PotentialSpec::DoubleWell { depth, radius } => ScalarField::from_fn(grid, |q| {
                let r2 = q.iter().map(|x| x * x).sum::<f64>() / (radius * radius);
                depth * (r2 - 1.0).powi(2)
            }),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    /// `exp(-|q-c|²/4σ²) e^{ik·q}` (density width σ).
    Gaussian {
        center: Vec<f64>,
        width: f64,
        #[serde(default)]
        momentum: Option<Vec<f64>>,
    },
    /// Gaussian envelope times `r^|w| e^{iwθ}` around the centre (2-D).
    Vortex { center: Vec<f64>, width: f64, winding: i32 },
    Uniform,
    /// Stationary state number `index` (0 = ground state) of the potential.
    Eigenstate { index: usize },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub dt: f64,
    pub n_steps: usize,
    #[serde(default)]
    pub record_every: Option<usize>,
}

impl RunSpec {
    pub fn record_every(&self) -> usize {
        self.record_every.unwrap_or(self.n_steps).max(1)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleSpec {
    pub count: usize,
    /// Start every trajectory here; uniform over the domain when absent.
    #[serde(default)]
    pub point: Option<Vec<f64>>,
    /// Trajectories written to `trajectories.txt` at each record.
    #[serde(default)]
    pub write: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LangevinScenario {
    pub seed: Option<u64>,
    pub grid: GridSpec,
    pub dynamics: Dynamics,
    pub free_energy: FreeEnergySpec,
    pub particles: ParticleSpec,
    pub run: RunSpec,
    /// Kernel bandwidth for the density estimate; the grid spacing when absent.
    #[serde(default)]
    pub bandwidth: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeSpec {
    #[default]
    Explicit,
    Implicit,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FokkerPlanckRunSpec {
    pub dt: f64,
    pub n_steps: usize,
    #[serde(default)]
    pub record_every: Option<usize>,
    #[serde(default)]
    pub scheme: SchemeSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FokkerPlanckScenario {
    pub grid: GridSpec,
    pub dynamics: Dynamics,
    pub free_energy: FreeEnergySpec,
    pub initial: InitialSpec,
    pub run: FokkerPlanckRunSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopSpec {
    pub lower: [usize; 2],
    pub upper: [usize; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MadelungRunSpec {
    /// Fixed step; `0.4 min(h/max|u|, m h²/ħ)` of the initial state when absent.
    #[serde(default)]
    pub dt: Option<f64>,
    pub t_end: f64,
    #[serde(default)]
    pub records: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MadelungScenario {
    pub grid: GridSpec,
    pub dynamics: Dynamics,
    pub hbar: HbarSpec,
    pub potential: PotentialSpec,
    pub initial: InitialSpec,
    pub run: MadelungRunSpec,
    #[serde(default)]
    pub loops: Vec<LoopSpec>,
}

impl MadelungScenario {
    pub fn constants(&self) -> CliResult<Constants> {
        Constants::resolve(&self.dynamics, &self.hbar)
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropagatorSpec {
    #[default]
    Auto,
    SplitStep,
    CrankNicolson,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchrodingerMode {
    #[default]
    Evolve,
    Spectrum,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchrodingerScenario {
    pub grid: GridSpec,
    pub dynamics: Dynamics,
    pub hbar: HbarSpec,
    pub potential: PotentialSpec,
    #[serde(default)]
    pub mode: SchrodingerMode,
    #[serde(default)]
    pub initial: Option<InitialSpec>,
    #[serde(default)]
    pub run: Option<RunSpec>,
    #[serde(default)]
    pub propagator: PropagatorSpec,
    /// Number of stationary states in spectrum mode.
    #[serde(default)]
    pub states: Option<usize>,
}

impl SchrodingerScenario {
    pub fn constants(&self) -> CliResult<Constants> {
        Constants::resolve(&self.dynamics, &self.hbar)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolSpec {
    pub size: u32,
    pub activation: f64,
    pub temperature: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermoScenario {
    pub seed: Option<u64>,
    pub pool: PoolSpec,
    pub mu: Vec<f64>,
    pub sweeps: usize,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default = "default_chains")]
    pub chains: usize,
}

fn default_chains() -> usize {
    4
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MatrixSpec {
    Zero,
    /// `scale` times the exchange matrix between basis states 1 and 2.
    SigmaX { scale: f64 },
    /// `(B + B†)/2` with standard complex normal `B`.
    Random { scale: f64 },
    /// Grid Hamiltonian `-ħ²/2m ∇² + ½mω²q²` on `dim` nodes of `[-L, L]`.
    GridHarmonic { half_width: f64, omega: f64, mass: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSpec {
    pub hamiltonian: MatrixSpec,
    pub time: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OutcomeSpec {
    Projectors,
    RandomDiagonal { outcomes: usize },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementScenario {
    pub seed: Option<u64>,
    pub dim: usize,
    #[serde(default = "one")]
    pub hbar: f64,
    /// Position state `|q_j⟩` (1-based) fed to the pre-evolution.
    pub start: usize,
    pub pre: EvolutionSpec,
    pub main: EvolutionSpec,
    pub post: EvolutionSpec,
    pub operators: OutcomeSpec,
    pub draws: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareScenario {
    pub grid: GridSpec,
    pub dynamics: Dynamics,
    pub hbar: HbarSpec,
    pub potential: PotentialSpec,
    pub initial: InitialSpec,
    pub t_end: f64,
    pub samples: usize,
}

impl CompareScenario {
    pub fn constants(&self) -> CliResult<Constants> {
        Constants::resolve(&self.dynamics, &self.hbar)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    #[default]
    Fast,
    Full,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyScenario {
    #[serde(default)]
    pub tier: Option<Tier>,
}

#[cfg(test)]
mod tests {
    use super::*;

    const LANGEVIN: &str = r#"
kind = "langevin"
seed = 3
bandwidth = 0.1
[grid]
lower = [-3.0]
upper = [3.0]
points = [61]
boundary = ["reflecting"]
[dynamics]
gamma = 1.0
diffusion = 0.25
[free_energy]
preset = "quadratic"
curvature = 1.0
[particles]
count = 100
[run]
dt = 0.01
n_steps = 10
"#;

    #[test]
    fn parses_and_defaults() {
        let mut s = parse(LANGEVIN).unwrap();
        s.finalize(None).unwrap();
        let Scenario::Langevin(l) = &s else { panic!() };
        assert_eq!(l.dynamics.epsilon, 1.0);
        assert_eq!(l.run.record_every(), 10);
        assert_eq!(l.particles.point, None);
    }

    #[test]
    fn missing_and_unknown_fields_are_named() {
        let e = parse(&LANGEVIN.replace("gamma = 1.0\n", "")).unwrap_err();
        assert!(e.to_string().contains("gamma"), "{e}");
        let e = parse(&LANGEVIN.replace("diffusion = 0.25", "diffusion = 0.25\ngama = 2.0")).unwrap_err();
        assert!(e.to_string().contains("gama"), "{e}");
        let e = parse(&LANGEVIN.replace("kind = \"langevin\"", "kind = \"quantum\"")).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn seed_is_required_for_stochastic_kinds() {
        let mut s = parse(&LANGEVIN.replace("seed = 3\n", "")).unwrap();
        assert!(s.finalize(None).unwrap_err().to_string().contains("seed"));
        s.finalize(Some(9)).unwrap();
    }

    #[test]
    fn hbar_sources() {
        let d = Dynamics { gamma: 0.5, diffusion: 0.25, epsilon: 1.0 };
        let none = HbarSpec::default();
        assert!(Constants::resolve(&d, &none).is_err());
        let two = HbarSpec { from_lambda: Some(2.0), value: Some(1.0), ..Default::default() };
        assert!(Constants::resolve(&d, &two).is_err());
        let c = Constants::resolve(&d, &HbarSpec { value: Some(1.0), ..Default::default() }).unwrap();
        assert_eq!((c.mass, c.hbar, c.lambda), (1.0, 1.0, 2.0));
        let back = Constants::resolve(&d, &HbarSpec { from_lambda: Some(2.0), ..Default::default() }).unwrap();
        assert!((back.hbar - 1.0).abs() < 1e-15);
        let mu = HbarSpec { from_mu: Some(FromMu { mu: TAU, branch: BranchSpec::Positive }), ..Default::default() };
        let c = Constants::resolve(&d, &mu).unwrap();
        assert!((c.hbar - 1.0).abs() < 1e-15);
        assert!((c.chemical_potential() - TAU).abs() < 1e-14);
    }
}
