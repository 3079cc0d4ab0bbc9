//! Registered invariant checks. Every check reports measured values against
//! explicit tolerances; the fast tier uses coarser sweeps than the full tier.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use emergent_core::action::{
    action_real, entropy_production_terms, fisher_production, variational_residuals, ActionConfig,
    HistoryPF,
};
use emergent_core::grid::{divergence, gradient, integrate, laplacian};
use emergent_core::madelung::{circulation_quanta, madelung_run, madelung_step, max_curl, total_mass, MadelungState};
use emergent_core::measurement::{
    conjugated_operators, evolve_state, measure, measure_diagonal, random_diagonal_set, random_hermitian,
    random_state, unitarity_defect, unitary, DensityMatrix, MeasurementSet,
};
use emergent_core::microdynamics::{
    evolve_fokker_planck, probability_current, stationary_density, write_trajectories, DriftDiffusionParams,
    FokkerPlanckConfig, FreeEnergyModel, ParticleEnsemble, Scheme,
};
use emergent_core::schrodinger::{evolve, stationary_states, EvolveConfig, Propagator, WaveFunction};
use emergent_core::stats::{batch_standard_error, convergence_order, mean, std_with_error, variance};
use emergent_core::thermo::{
    mean_and_delta_n, phase_invariance_check, quantized_free_energy, sample_chains, NeuronPool,
};
use emergent_core::{Boundary, ComplexField, Grid, ScalarField, VectorField};
use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::config::Tier;
use crate::error::{CliResult, Context};

/// Number of invariants the module contracts document.
pub const DOCUMENTED_COUNT: usize = 25;

/// Deliberate defects for exercising the harness itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Reverses the drift `γ∇F` of the learning dynamics.
    DriftSignFlip,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub tier: Tier,
    pub fault: Option<Fault>,
}

impl Settings {
    fn full(&self) -> bool {
        self.tier == Tier::Full
    }

    /// The free energy seen by the drift term.
    fn drift(&self, model: FreeEnergyModel) -> FreeEnergyModel {
        match self.fault {
            Some(Fault::DriftSignFlip) => FreeEnergyModel::Scaled { factor: -1.0, inner: Box::new(model) },
            None => model,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub label: String,
    pub value: f64,
    pub bound: Bound,
}

impl Measurement {
    pub fn passed(&self) -> bool {
        match self.bound {
            Bound::AtMost(t) => self.value <= t,
            Bound::AtLeast(t) => self.value >= t,
        }
    }
}

fn at_most(label: impl Into<String>, value: f64, tol: f64) -> Measurement {
    Measurement { label: label.into(), value, bound: Bound::AtMost(tol) }
}

fn at_least(label: impl Into<String>, value: f64, tol: f64) -> Measurement {
    Measurement { label: label.into(), value, bound: Bound::AtLeast(tol) }
}

type Body = fn(&Settings) -> CliResult<Vec<Measurement>>;

pub struct Check {
    pub module: &'static str,
    pub name: &'static str,
    body: Body,
}

impl Check {
    pub fn id(&self) -> String {
        format!("{}/{}", self.module, self.name)
    }
}

const fn check(module: &'static str, name: &'static str, body: Body) -> Check {
    Check { module, name, body }
}

pub fn registry() -> Vec<Check> {
    vec![
        check("grid", "divergence-theorem", grid_divergence),
        check("grid", "summation-by-parts", grid_sbp),
        check("grid", "second-order-convergence", grid_order),
        check("microdynamics", "weak-convergence", micro_weak),
        check("microdynamics", "stationary-density", micro_stationary),
        check("microdynamics", "reproducibility", micro_repro),
        check("thermo", "fluctuation-derivative", thermo_fluctuation),
        check("thermo", "mean-count", thermo_mean),
        check("thermo", "psi-invariance", thermo_invariance),
        check("thermo", "quantized-jump", thermo_jump),
        check("action", "fisher-identity-order", action_fisher),
        check("action", "residual-convergence", action_residuals),
        check("action", "eigenstate-entropy", action_eigenstate),
        check("action", "constant-shift", action_shift),
        check("madelung", "mass-conservation", madelung_mass),
        check("madelung", "circulation-quantization", madelung_circulation),
        check("madelung", "curl-free", madelung_curl),
        check("schrodinger", "madelung-equivalence", schrodinger_equivalence),
        check("schrodinger", "energy-conservation", schrodinger_energy),
        check("schrodinger", "ehrenfest", schrodinger_ehrenfest),
        check("schrodinger", "variational-closure", schrodinger_closure),
        check("measurement", "unitarity", measurement_unitarity),
        check("measurement", "identity", measurement_identity),
        check("measurement", "purity", measurement_purity),
        check("measurement", "completeness", measurement_completeness),
    ]
}

pub struct CheckResult {
    pub id: String,
    pub measurements: Vec<Measurement>,
    pub error: Option<String>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.measurements.iter().all(Measurement::passed)
    }
}

pub struct SuiteReport {
    pub tier: Tier,
    pub results: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn failed(&self) -> usize {
        self.results.iter().filter(|r| !r.passed()).count()
    }

    pub fn failed_ids(&self) -> Vec<&str> {
        self.results.iter().filter(|r| !r.passed()).map(|r| r.id.as_str()).collect()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        writeln!(s, "scenario = verify").unwrap();
        writeln!(s, "tier = {:?}", self.tier).unwrap();
        writeln!(s, "checks = {}", self.results.len()).unwrap();
        writeln!(s, "failed = {}", self.failed()).unwrap();
        for r in &self.results {
            writeln!(s, "{} {}", if r.passed() { "PASS" } else { "FAIL" }, r.id).unwrap();
            for m in &r.measurements {
                let (op, tol) = match m.bound {
                    Bound::AtMost(t) => ("<=", t),
                    Bound::AtLeast(t) => (">=", t),
                };
                let mark = if m.passed() { "ok" } else { "violated" };
                writeln!(s, "    {} = {:.6e} (required {op} {:e}) {mark}", m.label, m.value, tol).unwrap();
            }
            if let Some(e) = &r.error {
                writeln!(s, "    error: {e}").unwrap();
            }
        }
        s
    }
}

/// Runs the checks whose id contains `filter` (all when `None`).
pub fn run_suite(settings: &Settings, filter: Option<&str>) -> SuiteReport {
    let results = registry()
        .into_iter()
        .filter(|c| filter.is_none_or(|f| c.id().contains(f)))
        .map(|c| {
            let id = c.id();
            match (c.body)(settings) {
                Ok(measurements) => CheckResult { id, measurements, error: None },
                Err(e) => CheckResult { id, measurements: Vec::new(), error: Some(e.to_string()) },
            }
        })
        .collect();
    SuiteReport { tier: settings.tier, results }
}

fn l2(a: &ScalarField, b: &ScalarField) -> f64 {
    integrate(&a.zip_map(b, |x, y| (x - y) * (x - y)).expect("same grid")).sqrt()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

// grid

fn periodic_square(n: usize) -> Grid {
    Grid::build(&[0.0, 0.0], &[TAU, TAU], &[n, n], &[Boundary::Periodic; 2]).expect("valid grid")
}

fn smooth_params(seed: u64, sets: usize) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = Uniform::new(-2.0, 2.0).expect("valid range");
    (0..sets).map(|_| [u.sample(&mut rng), u.sample(&mut rng), u.sample(&mut rng)]).collect()
}

fn smooth(a: [f64; 3]) -> impl Fn(&[f64]) -> f64 {
    move |q| (q[0] + a[0]).sin() * (2.0 * q[1] + a[1]).cos() + a[2] * (q[0] - q[1]).cos().exp()
}

fn grid_divergence(s: &Settings) -> CliResult<Vec<Measurement>> {
    let g = periodic_square(if s.full() { 64 } else { 32 });
    let mut worst: f64 = 0.0;
    for a in smooth_params(11, if s.full() { 20 } else { 5 }) {
        let (f1, f2) = (smooth(a), smooth([a[1], a[2], a[0]]));
        let v = VectorField::from_fn(&g, |q, out| {
            out[0] = f1(q);
            out[1] = f2(q);
        });
        worst = worst.max(integrate(&divergence(&v)).abs());
    }
    Ok(vec![at_most("max |∫div v|", worst, 1e-10)])
}

fn grid_sbp(s: &Settings) -> CliResult<Vec<Measurement>> {
    let g = periodic_square(if s.full() { 64 } else { 32 });
    let mut worst: f64 = 0.0;
    for a in smooth_params(12, if s.full() { 20 } else { 5 }) {
        let f = ScalarField::from_fn(&g, smooth(a));
        let h = ScalarField::from_fn(&g, smooth([a[2], -a[0], a[1]]));
        let lhs = integrate(&f.zip_map(&laplacian(&h), |x, y| x * y).context("grid")?);
        let rhs = integrate(&h.zip_map(&laplacian(&f), |x, y| x * y).context("grid")?);
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(vec![at_most("max |∫f∇²g - ∫g∇²f|", worst, 1e-10)])
}

fn grid_order(s: &Settings) -> CliResult<Vec<Measurement>> {
    let sizes: &[usize] = if s.full() { &[16, 32, 64, 128] } else { &[16, 32] };
    let (mut hs, mut e_grad, mut e_lap) = (Vec::new(), Vec::new(), Vec::new());
    for &n in sizes {
        let g = periodic_square(n);
        let f = ScalarField::from_fn(&g, |q| q[0].sin() * (2.0 * q[1]).cos());
        let grad = gradient(&f);
        let lap = laplacian(&f);
        let (mut eg, mut el): (f64, f64) = (0.0, 0.0);
        for i in 0..g.len() {
            let q = g.point(i);
            eg = eg.max((grad.component(0)[i] - q[0].cos() * (2.0 * q[1]).cos()).abs());
            eg = eg.max((grad.component(1)[i] + 2.0 * q[0].sin() * (2.0 * q[1]).sin()).abs());
            el = el.max((lap.values()[i] + 5.0 * f.values()[i]).abs());
        }
        hs.push(g.spacing(0));
        e_grad.push(eg);
        e_lap.push(el);
    }
    Ok(vec![
        at_least("gradient order", convergence_order(&hs, &e_grad), 1.8),
        at_least("laplacian order", convergence_order(&hs, &e_lap), 1.8),
    ])
}

// microdynamics

/// Confining `F = -q²/2` with `γ = 1`, `D = 1/4`: stationary `N(0, 1/4)`.
fn ou_params() -> DriftDiffusionParams {
    DriftDiffusionParams::new(1.0, 0.25, 1.0).expect("valid parameters")
}

fn ou_model() -> FreeEnergyModel {
    FreeEnergyModel::Quadratic { curvature: -1.0 }
}

fn micro_weak(s: &Settings) -> CliResult<Vec<Measurement>> {
    let params = ou_params();
    let model = s.drift(ou_model());
    let (x0, sigma0, t_end) = (1.0, 0.3, 1.0);
    let grid = Grid::line(-5.0, 5.0, 501, Boundary::Reflecting).context("grid")?;
    let p0 = ScalarField::from_fn(&grid, |q| (-(q[0] - x0).powi(2) / (2.0 * sigma0 * sigma0)).exp())
        .normalized()
        .context("grid")?;
    let fp_dt = 2e-4;
    let cfg = FokkerPlanckConfig::new(fp_dt, (t_end / fp_dt).round() as usize, Scheme::Explicit);
    let p_fp = evolve_fokker_planck(&p0, &model, &params, &cfg).context("microdynamics")?;
    let phi = |x: f64| x * x;
    let reference = integrate(&ScalarField::from_fn(&grid, |q| phi(q[0])).zip_map(p_fp.last(), |a, b| a * b).context("grid")?);

    let sizes: [usize; 2] = if s.full() { [10_000, 100_000] } else { [2_000, 8_000] };
    let normal = Normal::new(x0, sigma0).expect("valid normal");
    let mut out = Vec::new();
    for (j, &n) in sizes.iter().enumerate() {
        for dt in [0.04, 0.01] {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + j as u64);
            let start: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
            let mut ens = ParticleEnsemble::from_positions(&grid, start, 200 + j as u64).context("microdynamics")?;
            ens.run(&model, &params, dt, (t_end / dt).round() as usize).context("microdynamics")?;
            let vals: Vec<f64> = ens.coordinates(0).into_iter().map(phi).collect();
            let err = (mean(&vals) - reference).abs();
            let se = (variance(&vals) / vals.len() as f64).sqrt();
            // O(dt) bias with unit constant plus four standard errors
            out.push(at_most(format!("err/(dt + 4se) n={n} dt={dt}"), err / (dt + 4.0 * se), 1.0));
        }
    }
    Ok(out)
}

fn micro_stationary(s: &Settings) -> CliResult<Vec<Measurement>> {
    let params = ou_params();
    let grid = Grid::line(-4.0, 4.0, 201, Boundary::Reflecting).context("grid")?;
    let p = stationary_density(&grid, &ou_model(), &params, 0.0).context("microdynamics")?;
    let j = probability_current(&p, &s.drift(ou_model()), &params, 0.0).context("microdynamics")?;
    Ok(vec![at_most("max |J| on exp(γF/D)", j.max_abs(), 1e-6)])
}

fn micro_repro(s: &Settings) -> CliResult<Vec<Measurement>> {
    let params = ou_params();
    let model = s.drift(ou_model());
    let grid = Grid::build(&[-3.0, -3.0], &[3.0, 3.0], &[31, 31], &[Boundary::Reflecting, Boundary::Periodic])
        .context("grid")?;
    let trace = || -> CliResult<Vec<u8>> {
        let mut ens = ParticleEnsemble::at_point(&grid, &[0.5, -0.5], 500, 77).context("microdynamics")?;
        let mut bytes = Vec::new();
        for _ in 0..20 {
            ens.step(&model, &params, 0.01).context("microdynamics")?;
            write_trajectories(&mut bytes, &ens, usize::MAX).expect("in-memory write");
        }
        Ok(bytes)
    };
    let (a, b) = (trace()?, trace()?);
    let differing = a.iter().zip(&b).filter(|(x, y)| x != y).count() + a.len().abs_diff(b.len());
    Ok(vec![at_most("differing bytes between identical runs", differing as f64, 0.0)])
}

// thermo

struct PoolSample {
    mu: f64,
    z_mean: f64,
    z_std: f64,
}

fn pool_samples(s: &Settings) -> CliResult<Vec<PoolSample>> {
    let (size, activation, temperature) = (100, 0.0, 1.0);
    let sweeps = if s.full() { 20_000 } else { 5_000 };
    let (burn_in, chains) = (200, 4);
    let mut out = Vec::new();
    for (i, offset) in [-2.0, 0.0, 2.0].into_iter().enumerate() {
        let mu = activation + offset * temperature;
        let probe = NeuronPool::new(size, activation, temperature, mu, 0).context("thermo")?;
        let theory = mean_and_delta_n(&probe.model(), mu, temperature, None).context("thermo")?;
        let pool = NeuronPool::new(size, activation, temperature, mu, theory.mean.round() as u32).context("thermo")?;
        let seeds: Vec<u64> = (0..chains).map(|c| 1000 + 10 * i as u64 + c).collect();
        let runs = sample_chains(&pool, burn_in + sweeps, &seeds).context("thermo")?;
        let xs: Vec<f64> = runs.iter().flat_map(|r| r[burn_in..].iter().map(|&n| n as f64)).collect();
        let batches = 20 * chains as usize;
        let (sd, sd_err) = std_with_error(&xs, batches);
        let m_err = batch_standard_error(&xs, batches);
        out.push(PoolSample {
            mu,
            z_mean: (mean(&xs) - theory.mean).abs() / m_err,
            z_std: (sd - theory.delta).abs() / sd_err,
        });
    }
    Ok(out)
}

fn thermo_fluctuation(s: &Settings) -> CliResult<Vec<Measurement>> {
    Ok(pool_samples(s)?.iter().map(|p| at_most(format!("|std - ΔN|/se at μ-a={}", p.mu), p.z_std, 3.0)).collect())
}

fn thermo_mean(s: &Settings) -> CliResult<Vec<Measurement>> {
    Ok(pool_samples(s)?.iter().map(|p| at_most(format!("|mean - ⟨N⟩|/se at μ-a={}", p.mu), p.z_mean, 3.0)).collect())
}

fn thermo_invariance(_: &Settings) -> CliResult<Vec<Measurement>> {
    let g = Grid::line(-5.0, 5.0, 101, Boundary::Reflecting).context("grid")?;
    let p = ScalarField::from_fn(&g, |q| (-q[0] * q[0] / 2.0).exp()).normalized().context("grid")?;
    let f = ScalarField::from_fn(&g, |q| 0.3 * q[0] + 0.1 * q[0].sin());
    let (mu, eps) = (1.7, 1.0);
    let mut out = Vec::new();
    for k in [1.0, 2.0] {
        let hbar = mu * eps / (TAU * k);
        let mut worst: f64 = 0.0;
        for n in [1, 3, 7] {
            worst = worst.max(phase_invariance_check(&p, &f, mu, eps, hbar, n).context("thermo")?);
        }
        out.push(at_most(format!("max |ΔΨ| with ħ = με/2π·{k}"), worst, 1e-12));
    }
    let off = phase_invariance_check(&p, &f, mu, eps, mu * eps / (TAU * 0.73), 1).context("thermo")?;
    out.push(at_least("max |ΔΨ| with incommensurate ħ", off, 1e-3));
    Ok(out)
}

fn thermo_jump(_: &Settings) -> CliResult<Vec<Measurement>> {
    let mut worst: f64 = 0.0;
    for (omega, mu) in [(-1.5, 0.25), (3.0, 2.0), (0.0, 0.125), (-40.0, 1.7), (12.5, -0.6)] {
        for n in [0u32, 1, 7, 50, 99] {
            let jump = quantized_free_energy(omega, mu, n + 1) - quantized_free_energy(omega, mu, n);
            worst = worst.max((jump - mu).abs());
        }
    }
    Ok(vec![at_most("max |F(N+1) - F(N) - μ|", worst, 1e-12)])
}

// action

fn action_fisher(s: &Settings) -> CliResult<Vec<Measurement>> {
    let sizes: &[usize] = if s.full() { &[16, 32, 64, 128] } else { &[16, 32, 64] };
    let (mut hs, mut gaps) = (Vec::new(), Vec::new());
    for &n in sizes {
        let g = Grid::line(0.0, TAU, n, Boundary::Periodic).context("grid")?;
        let p = ScalarField::from_fn(&g, |q| (0.8 * q[0].cos() + 0.3 * (2.0 * q[0]).sin()).exp())
            .normalized()
            .context("grid")?;
        let zero = ScalarField::constant(&g, 0.0);
        let (log_form, _) = entropy_production_terms(&p, &zero, 0.25, 1.0).context("action")?;
        gaps.push((log_form - fisher_production(&p, 0.25)).abs());
        hs.push(g.spacing(0));
    }
    Ok(vec![at_least("order of the gap between the two forms", convergence_order(&hs, &gaps), 1.8)])
}

// ε = 1 and γ = ½ give m = 1; with ħ = 1 the learning constants are fixed.
const EPS: f64 = 1.0;
const GAMMA: f64 = 0.5;
const DIFF: f64 = 0.25;

fn cn_history(wf: &WaveFunction, v: &ScalarField, dt: f64, steps: usize) -> CliResult<HistoryPF> {
    let cfg = EvolveConfig::new(dt, steps).record_every(1).with_propagator(Propagator::CrankNicolson);
    let run = evolve(wf, v, &cfg).context("schrodinger")?;
    HistoryPF::from_wavefunctions(&run.states, &run.times, EPS).context("action")
}

struct ResidualSweep {
    h: Vec<f64>,
    /// Signed entropy residuals `S(T) - S(0)`.
    entropy: Vec<f64>,
    continuity: Vec<f64>,
    hamilton_jacobi: Vec<f64>,
}

/// Residuals for a displaced packet in `V(q)` on `[-10, 10]` over unit time,
/// refining space and time together.
fn residual_sweep(levels: &[(usize, f64)], potential: fn(f64) -> f64) -> CliResult<ResidualSweep> {
    let mut out = ResidualSweep { h: Vec::new(), entropy: Vec::new(), continuity: Vec::new(), hamilton_jacobi: Vec::new() };
    for &(n, dt) in levels {
        let g = Grid::line(-10.0, 10.0, n, Boundary::Reflecting).context("grid")?;
        let v = ScalarField::from_fn(&g, |q| potential(q[0]));
        let psi = ComplexField::from_fn(&g, |q| Complex64::new((-(q[0] - 1.5).powi(2) / 2.0).exp(), 0.0));
        let wf = WaveFunction::normalized(psi, 1.0, 1.0).context("schrodinger")?;
        let hist = cn_history(&wf, &v, dt, (1.0 / dt).round() as usize)?;
        let cfg = ActionConfig::from_hbar(GAMMA, DIFF, EPS, 1.0, v).context("action")?;
        let r = variational_residuals(&hist, &cfg).context("action")?;
        out.h.push(g.spacing(0));
        out.entropy.push(r.entropy);
        out.continuity.push(r.rms_continuity);
        out.hamilton_jacobi.push(r.rms_hamilton_jacobi);
    }
    Ok(out)
}

const COARSE_LEVELS: [(usize, f64); 2] = [(201, 0.02), (401, 0.01)];
const FINE_LEVELS: [(usize, f64); 3] = [(201, 0.02), (401, 0.01), (801, 0.005)];

fn action_residuals(s: &Settings) -> CliResult<Vec<Measurement>> {
    let levels: &[(usize, f64)] = if s.full() { &FINE_LEVELS } else { &COARSE_LEVELS };
    let r = residual_sweep(levels, |x| 0.5 * x * x)?;
    let entropy: Vec<f64> = r.entropy.iter().map(|e| e.abs()).collect();
    Ok(vec![
        at_least("entropy residual order", convergence_order(&r.h, &entropy), 1.0),
        at_least("continuity residual order", convergence_order(&r.h, &r.continuity), 1.0),
        at_least("hamilton-jacobi residual order", convergence_order(&r.h, &r.hamilton_jacobi), 1.0),
    ])
}

fn action_eigenstate(s: &Settings) -> CliResult<Vec<Measurement>> {
    let g = Grid::line(-8.0, 8.0, 321, Boundary::Reflecting).context("grid")?;
    let v = ScalarField::from_fn(&g, |q| 0.5 * q[0] * q[0]);
    let spec = stationary_states(&v, 1.0, 1.0, 1).context("schrodinger")?;
    let hist = cn_history(&spec.states[0], &v, 0.01, if s.full() { 400 } else { 100 })?;
    let cfg = ActionConfig::from_hbar(GAMMA, DIFF, EPS, 1.0, v).context("action")?;
    let r = variational_residuals(&hist, &cfg).context("action")?;
    Ok(vec![at_most("|total entropy production|", r.entropy.abs(), 1e-6)])
}

fn action_shift(_: &Settings) -> CliResult<Vec<Measurement>> {
    let g = Grid::line(0.0, TAU, 64, Boundary::Periodic).context("grid")?;
    let p = ScalarField::from_fn(&g, |q| 1.0 + 0.5 * q[0].cos()).normalized().context("grid")?;
    let fs: Vec<ScalarField> =
        (0..6).map(|n| ScalarField::from_fn(&g, |q| (q[0] + 0.1 * n as f64).sin() - 0.3 * n as f64)).collect();
    let v = ScalarField::from_fn(&g, |q| q[0].cos());
    let cfg = ActionConfig::from_hbar(GAMMA, DIFF, EPS, 1.0, v).context("action")?;
    let base = HistoryPF::new(0.0, 0.1, vec![p.clone(); 6], fs.clone()).context("action")?;
    let a = action_real(&base, &cfg).context("action")?;
    let mut worst: f64 = 0.0;
    for c in [1.0, -7.5, 42.0, 1e3] {
        let shifted =
            HistoryPF::new(0.0, 0.1, vec![p.clone(); 6], fs.iter().map(|f| f.map(|x| x + c)).collect()).context("action")?;
        worst = worst.max((action_real(&shifted, &cfg).context("action")? - a).abs() / a.abs().max(1.0));
    }
    Ok(vec![at_most("relative change of S under F → F + c", worst, 1e-12)])
}

// madelung

fn madelung_mass(s: &Settings) -> CliResult<Vec<Measurement>> {
    let g = Grid::line(-16.0, 16.0, 512, Boundary::Periodic).context("grid")?;
    let zero = ScalarField::constant(&g, 0.0);
    let psi = ComplexField::from_fn(&g, |q| Complex64::from_polar((-q[0] * q[0] / 4.0).exp(), 0.5 * q[0]));
    let wf = WaveFunction::normalized(psi, 1.0, 1.0).context("schrodinger")?;
    let mut st = MadelungState::from_wavefunction(&wf).context("madelung")?;
    let dt = st.stable_dt();
    let mut worst: f64 = 0.0;
    for _ in 0..if s.full() { 400 } else { 50 } {
        let next = madelung_step(&st, &zero, dt).context("madelung")?;
        worst = worst.max((total_mass(&next) - total_mass(&st)).abs());
        st = next;
    }
    Ok(vec![at_most("max per-step |Δ∫p|", worst, 1e-9)])
}

fn madelung_circulation(_: &Settings) -> CliResult<Vec<Measurement>> {
    let g = Grid::build(&[-4.0, -4.0], &[4.0, 4.0], &[40, 40], &[Boundary::Reflecting; 2]).context("grid")?;
    let loops = [([10, 10], [30, 30]), ([15, 12], [25, 29]), ([2, 3], [12, 14])];
    let mut worst: f64 = 0.0;
    for winding in [1i32, -1, 2] {
        let psi = ComplexField::from_fn(&g, |q| {
            let r2 = q[0] * q[0] + q[1] * q[1];
            let amp = r2.powf(winding.unsigned_abs() as f64 / 2.0) * (-r2 / 4.0).exp();
            Complex64::from_polar(amp, winding as f64 * q[1].atan2(q[0]))
        });
        let st = MadelungState::from_wavefunction(&WaveFunction::normalized(psi, 0.8, 1.3).context("schrodinger")?)
            .context("madelung")?;
        for (lo, hi) in loops {
            let path = g.rectangle_loop(0, 1, lo, hi, 0).context("grid")?;
            let k = circulation_quanta(&st, &path).context("madelung")?;
            worst = worst.max((k - k.round()).abs());
        }
    }
    // rigid rotation u = Ω(-y, x): Γ = 2Ω·area, not a multiple of 2πħ/m
    let p = ScalarField::from_fn(&g, |q| (-(q[0] * q[0] + q[1] * q[1]) / 2.0).exp()).normalized().context("grid")?;
    let omega = 0.1;
    let u = VectorField::from_fn(&g, |q, out| {
        out[0] = -omega * q[1];
        out[1] = omega * q[0];
    });
    let rigid = MadelungState::from_velocity(p, u, 1.0, 1.0).context("madelung")?;
    let path = g.rectangle_loop(0, 1, loops[0].0, loops[0].1, 0).context("grid")?;
    let k = circulation_quanta(&rigid, &path).context("madelung")?;
    Ok(vec![
        at_most("Schrödinger flows: max distance of Γ/(2πħ/m) to an integer", worst, 1e-3),
        at_least("rigid rotation: distance of Γ/(2πħ/m) to an integer", (k - k.round()).abs(), 0.05),
    ])
}

fn madelung_curl(s: &Settings) -> CliResult<Vec<Measurement>> {
    let g = Grid::build(&[-6.0, -6.0], &[6.0, 6.0], &[72, 72], &[Boundary::Reflecting; 2]).context("grid")?;
    let p = ScalarField::from_fn(&g, |q| (-(q[0] * q[0] + q[1] * q[1]) / 2.0).exp()).normalized().context("grid")?;
    let action = ScalarField::from_fn(&g, |q| 0.3 * q[0] + 0.1 * q[0] * q[1]);
    let v = ScalarField::from_fn(&g, |q| 0.5 * (q[0] * q[0] + q[1] * q[1]));
    let mut st = MadelungState::from_phase(p, action, None, 1.0, 1.0).context("madelung")?;
    let mut worst: f64 = 0.0;
    // the packet accelerates in the trap, so the step follows the flow
    for _ in 0..if s.full() { 200 } else { 40 } {
        st = madelung_step(&st, &v, st.stable_dt()).context("madelung")?;
        worst = worst.max(max_curl(&st).context("madelung")?);
    }
    Ok(vec![at_most("max discrete curl during evolution", worst, 1e-8)])
}

// schrodinger

fn free_packet_distance(points: usize) -> CliResult<f64> {
    let g = Grid::line(-16.0, 16.0, points, Boundary::Periodic).context("grid")?;
    let zero = ScalarField::constant(&g, 0.0);
    let psi = ComplexField::from_fn(&g, |q| Complex64::from_polar((-q[0] * q[0] / 4.0).exp(), 0.5 * q[0]));
    let wf = WaveFunction::normalized(psi, 1.0, 1.0).context("schrodinger")?;
    let t_end = 1.0;
    let hydro = MadelungState::from_wavefunction(&wf).context("madelung")?;
    let n = (t_end / hydro.stable_dt()).ceil() as usize;
    let dt = t_end / n as f64;
    let out = madelung_run(&hydro, &zero, dt, n).context("madelung")?;
    let quantum = evolve(&wf, &zero, &EvolveConfig::new(dt, n)).context("schrodinger")?;
    Ok(l2(out.density(), &quantum.last().density()))
}

fn schrodinger_equivalence(s: &Settings) -> CliResult<Vec<Measurement>> {
    let fine = free_packet_distance(512)?;
    let mut out = vec![at_most("L2 density distance (512 nodes)", fine, 1e-3)];
    if s.full() {
        let coarse = free_packet_distance(256)?;
        out.push(at_least("distance ratio 256 → 512 nodes", coarse / fine, 1.0));
    }
    Ok(out)
}

fn harmonic_packet(g: &Grid) -> CliResult<WaveFunction> {
    let psi = ComplexField::from_fn(g, |q| Complex64::from_polar((-(q[0] - 1.5).powi(2) / 2.56).exp(), 0.3 * q[0]));
    WaveFunction::normalized(psi, 1.0, 1.0).context("schrodinger")
}

fn schrodinger_energy(s: &Settings) -> CliResult<Vec<Measurement>> {
    let g = Grid::line(-8.0, 8.0, 161, Boundary::Reflecting).context("grid")?;
    let v = ScalarField::from_fn(&g, |q| 0.5 * q[0] * q[0]);
    let wf = harmonic_packet(&g)?;
    let steps = if s.full() { 40_000 } else { 10_000 };
    let ev = evolve(&wf, &v, &EvolveConfig::new(0.005, steps).record_every(steps / 10)).context("schrodinger")?;
    let e0 = wf.energy(&v).context("schrodinger")?;
    let mut drift: f64 = 0.0;
    for st in &ev.states {
        drift = drift.max((st.energy(&v).context("schrodinger")? - e0).abs() / e0.abs());
    }
    Ok(vec![at_most(format!("relative energy drift over {steps} steps"), drift, 1e-8)])
}

fn schrodinger_ehrenfest(s: &Settings) -> CliResult<Vec<Measurement>> {
    let points = if s.full() { 1281 } else { 641 };
    let g = Grid::line(-8.0, 8.0, points, Boundary::Reflecting).context("grid")?;
    let v = ScalarField::from_fn(&g, |q| 0.5 * q[0] * q[0]);
    let wf = harmonic_packet(&g)?;
    let dt = 0.002;
    let ev = evolve(&wf, &v, &EvolveConfig::new(dt, 1000).record_every(1)).context("schrodinger")?;
    let q: Vec<f64> = ev.states.iter().map(|st| st.mean_position()[0]).collect();
    let p: Vec<f64> = ev.states.iter().map(|st| st.mean_momentum()[0] / st.mass()).collect();
    let scale = max_abs(&p);
    let worst = (1..q.len() - 1).map(|n| ((q[n + 1] - q[n - 1]) / (2.0 * dt) - p[n]).abs()).fold(0.0, f64::max);
    Ok(vec![at_most("max |d⟨q⟩/dt - ⟨p⟩/m| / max|⟨p⟩/m|", worst / scale, 1e-3)])
}

/// Anharmonic history: the packet deforms, so its entropy changes and the
/// entropy residual tends to a nonzero limit; that limit must itself be
/// approached under refinement.
fn schrodinger_closure(_: &Settings) -> CliResult<Vec<Measurement>> {
    let r = residual_sweep(&FINE_LEVELS, |x| 0.5 * x * x + 0.05 * x.powi(4))?;
    let (d1, d2) = ((r.entropy[1] - r.entropy[0]).abs(), (r.entropy[2] - r.entropy[1]).abs());
    Ok(vec![
        at_least("continuity residual order", convergence_order(&r.h, &r.continuity), 1.0),
        at_least("hamilton-jacobi residual order", convergence_order(&r.h, &r.hamilton_jacobi), 1.0),
        at_least("entropy residual self-convergence order", (d1 / d2).log2(), 1.0),
    ])
}

// measurement

fn dims(s: &Settings) -> impl Iterator<Item = (usize, usize)> {
    let trials = if s.full() { 5 } else { 1 };
    (2..=16).flat_map(move |m| (0..trials).map(move |t| (m, t)))
}

fn measurement_unitarity(s: &Settings) -> CliResult<Vec<Measurement>> {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst: f64 = 0.0;
    for (m, _) in dims(s) {
        let h = random_hermitian(m, &mut rng);
        for t in [0.1, 0.7, 3.0] {
            worst = worst.max(unitarity_defect(&unitary(&h, t, 1.0).context("measurement")?));
        }
    }
    Ok(vec![at_most("max ‖U†U - I‖", worst, 1e-10)])
}

fn measurement_identity(s: &Settings) -> CliResult<Vec<Measurement>> {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let mut worst: f64 = 0.0;
    for (m, t) in dims(s) {
        let psi = random_state(m, &mut rng);
        let h = random_hermitian(m, &mut rng);
        let set = random_diagonal_set(m, 2 + (m + t) % 4, &mut rng);
        let time = 0.3 + 0.1 * t as f64;
        let direct = measure_diagonal(&evolve_state(&psi, &h, time, 1.0).context("measurement")?, &set)
            .context("measurement")?;
        let conj = measure(&psi, &conjugated_operators(&set, &h, time, 1.0).context("measurement")?)
            .context("measurement")?;
        worst = direct.iter().zip(&conj).fold(worst, |w, (a, b)| w.max((a - b).abs()));
    }
    Ok(vec![at_most("max |p(m) direct - p(m) conjugated|", worst, 1e-10)])
}

fn measurement_purity(s: &Settings) -> CliResult<Vec<Measurement>> {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let (mut pure_drift, mut mixed_drift, mut mixed_gap): (f64, f64, f64) = (0.0, 0.0, f64::INFINITY);
    for (m, _) in dims(s) {
        let us = (0..3)
            .map(|k| unitary(&random_hermitian(m, &mut rng), 0.5 + k as f64, 1.0))
            .collect::<emergent_core::Result<Vec<_>>>()
            .context("measurement")?;
        let weights: Vec<f64> = (1..=m).map(|k| k as f64).collect();
        let total: f64 = weights.iter().sum();
        let mut rhos = vec![
            DensityMatrix::pure(&random_state(m, &mut rng)),
            DensityMatrix::diagonal(&weights.iter().map(|w| w / total).collect::<Vec<_>>()).context("measurement")?,
        ];
        let start: Vec<f64> = rhos.iter().map(DensityMatrix::purity).collect();
        for u in &us {
            for rho in rhos.iter_mut() {
                *rho = rho.conjugate(u).context("measurement")?;
            }
        }
        pure_drift = pure_drift.max((rhos[0].purity() - start[0]).abs());
        mixed_drift = mixed_drift.max((rhos[1].purity() - start[1]).abs());
        mixed_gap = mixed_gap.min(1.0 - rhos[1].purity());
    }
    Ok(vec![
        at_most("pure state: |Δ tr ρ²|", pure_drift, 1e-10),
        at_most("mixed state: |Δ tr ρ²|", mixed_drift, 1e-10),
        at_least("mixed state: 1 - tr ρ² after evolution", mixed_gap, 1e-3),
    ])
}

fn measurement_completeness(s: &Settings) -> CliResult<Vec<Measurement>> {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let mut worst: f64 = 0.0;
    for (m, t) in dims(s) {
        let h = random_hermitian(m, &mut rng);
        for set in [MeasurementSet::projectors(m), random_diagonal_set(m, 2 + t % 3, &mut rng)] {
            let conj = conjugated_operators(&set, &h, 1.3, 1.0).context("measurement")?;
            worst = worst.max(conj.completeness_defect());
        }
    }
    Ok(vec![at_most("max ‖Σ O†O - I‖ after conjugation", worst, 1e-10)])
}
