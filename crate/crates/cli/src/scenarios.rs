//! One runner per scenario kind. Each returns its artifacts; nothing is
//! written until the caller finishes the [`Outputs`].

use std::fmt::Write as _;
use std::io;

use emergent_core::grid::integrate;
use emergent_core::grid::io::{write_complex, write_scalar, write_vector};
use emergent_core::madelung::{circulation, circulation_quanta, madelung_step, max_curl, total_mass, MadelungState};
use emergent_core::measurement::{
    conjugated_operators, evolve_state, grid_hamiltonian, measure, measure_diagonal, pre_evolve, random_diagonal_set,
    random_hermitian, sample_outcomes, unitarity_defect, unitary, CMatrix, MeasurementSet,
};
use emergent_core::microdynamics::{
    estimate_density, evolve_fokker_planck, probability_current, stationary_density, write_trajectories,
    FokkerPlanckConfig, ParticleEnsemble, Scheme,
};
use emergent_core::schrodinger::{evolve, stationary_states, EvolveConfig, Propagator, WaveFunction};
use emergent_core::stats::{batch_standard_error, ks_critical, ks_statistic, mean, std_with_error};
use emergent_core::thermo::{mean_and_delta_n, sample_chains, NeuronPool};
use emergent_core::{ComplexField, Grid, ScalarField};
use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::*;
use crate::error::{CliError, CliResult, Context};
use crate::output::{Outputs, Report, REPORT};

/// Largest Madelung–Schrödinger density distance a `compare` run may end with.
pub const COMPARE_TOLERANCE: f64 = 1e-3;

/// Batches used for the standard errors of Monte Carlo estimates.
const BATCHES: usize = 20;

fn buffer(write: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> Vec<u8> {
    let mut out = Vec::new();
    write(&mut out).expect("writing to memory cannot fail");
    out
}

fn l1(a: &ScalarField, b: &ScalarField) -> f64 {
    integrate(&a.zip_map(b, |x, y| (x - y).abs()).expect("same grid"))
}

fn l2(a: &ScalarField, b: &ScalarField) -> f64 {
    integrate(&a.zip_map(b, |x, y| (x - y) * (x - y)).expect("same grid")).sqrt()
}

/// Runs a non-verify scenario.
pub fn run(scenario: &Scenario) -> CliResult<Outputs> {
    match scenario {
        Scenario::Langevin(s) => langevin(s),
        Scenario::FokkerPlanck(s) => fokker_planck(s),
        Scenario::Madelung(s) => madelung(s),
        Scenario::Schrodinger(s) => schrodinger(s),
        Scenario::ThermoPool(s) => thermo_pool(s),
        Scenario::Measurement(s) => measurement(s),
        Scenario::Compare(s) => compare(s),
        Scenario::Verify(_) => Err(CliError::Config("verify scenarios run through the verify subcommand".into())),
    }
}

fn gaussian_amplitude(q: &[f64], center: &[f64], width: f64, momentum: Option<&[f64]>) -> Complex64 {
    let r2: f64 = q.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum();
    let phase = momentum.map_or(0.0, |k| q.iter().zip(k).map(|(x, k)| x * k).sum());
    Complex64::from_polar((-r2 / (4.0 * width * width)).exp(), phase)
}

fn check_len(name: &str, v: &[f64], grid: &Grid) -> CliResult<()> {
    if v.len() != grid.dims() {
        return Err(CliError::Config(format!("`{name}` has {} entries for a {}-D grid", v.len(), grid.dims())));
    }
    Ok(())
}

/// Initial wave function with `|ħ|` and the emergent mass.
fn initial_wavefunction(spec: &InitialSpec, grid: &Grid, v: &ScalarField, c: &Constants) -> CliResult<WaveFunction> {
    let hbar = c.hbar.abs();
    let psi = match spec {
        InitialSpec::Gaussian { center, width, momentum } => {
            check_len("initial.center", center, grid)?;
            if let Some(k) = momentum {
                check_len("initial.momentum", k, grid)?;
            }
            ComplexField::from_fn(grid, |q| gaussian_amplitude(q, center, *width, momentum.as_deref()))
        }
        InitialSpec::Vortex { center, width, winding } => {
            if grid.dims() != 2 {
                return Err(CliError::Config("`vortex` initial state needs a 2-D grid".into()));
            }
            check_len("initial.center", center, grid)?;
            ComplexField::from_fn(grid, |q| {
                let (x, y) = (q[0] - center[0], q[1] - center[1]);
                let r2 = x * x + y * y;
                let amp = r2.powf(winding.unsigned_abs() as f64 / 2.0) * (-r2 / (4.0 * width * width)).exp();
                Complex64::from_polar(amp, *winding as f64 * y.atan2(x))
            })
        }
        InitialSpec::Uniform => ComplexField::constant(grid, Complex64::new(1.0, 0.0)),
        InitialSpec::Eigenstate { index } => {
            let spec = stationary_states(v, c.mass, hbar, index + 1).context("schrodinger")?;
            return Ok(spec.states[*index].clone());
        }
    };
    WaveFunction::normalized(psi, hbar, c.mass).context("schrodinger")
}

fn initial_density(spec: &InitialSpec, grid: &Grid) -> CliResult<ScalarField> {
    let raw = match spec {
        InitialSpec::Gaussian { center, width, .. } => {
            check_len("initial.center", center, grid)?;
            ScalarField::from_fn(grid, |q| gaussian_amplitude(q, center, *width, None).norm_sqr())
        }
        InitialSpec::Uniform => ScalarField::constant(grid, 1.0),
        InitialSpec::Vortex { .. } | InitialSpec::Eigenstate { .. } => {
            return Err(CliError::Config("fokker-planck initial density must be `gaussian` or `uniform`".into()))
        }
    };
    raw.normalized().context("microdynamics")
}

/// Grid CDF of a 1-D density, linear between nodes.
fn grid_cdf(p: &ScalarField) -> impl Fn(f64) -> f64 + '_ {
    let grid = p.grid();
    let xs: Vec<f64> = (0..grid.len()).map(|i| grid.point(i)[0]).collect();
    let mut acc = vec![0.0; xs.len()];
    for i in 1..xs.len() {
        acc[i] = acc[i - 1] + 0.5 * (p.values()[i] + p.values()[i - 1]) * (xs[i] - xs[i - 1]);
    }
    let total = *acc.last().unwrap();
    move |x: f64| {
        if x <= xs[0] {
            return 0.0;
        }
        let j = xs.partition_point(|&v| v <= x);
        if j >= xs.len() {
            return 1.0;
        }
        let (x0, x1) = (xs[j - 1], xs[j]);
        let (p0, p1) = (p.values()[j - 1], p.values()[j]);
        let s = x - x0;
        let slope = (p1 - p0) / (x1 - x0);
        (acc[j - 1] + p0 * s + 0.5 * slope * s * s) / total
    }
}

fn langevin(s: &LangevinScenario) -> CliResult<Outputs> {
    let grid = s.grid.build()?;
    let params = s.dynamics.params()?;
    let model = s.free_energy.model();
    let seed = s.seed.expect("finalized");
    let mut ens = match &s.particles.point {
        Some(p) => {
            check_len("particles.point", p, &grid)?;
            ParticleEnsemble::at_point(&grid, p, s.particles.count, seed)
        }
        None => ParticleEnsemble::uniform(&grid, s.particles.count, seed),
    }
    .context("microdynamics")?;
    let bandwidth = s.bandwidth.unwrap_or_else(|| (0..grid.dims()).map(|k| grid.spacing(k)).fold(f64::INFINITY, f64::min));
    let every = s.run.record_every();

    let (mut density, mut traj) = (Vec::new(), Vec::new());
    let mut record = |ens: &ParticleEnsemble| -> CliResult<()> {
        let p = estimate_density(ens, &grid, bandwidth).context("microdynamics")?;
        density.extend(buffer(|w| write_scalar(w, &p, Some(ens.time()))));
        traj.extend(buffer(|w| write_trajectories(w, ens, s.particles.write)));
        Ok(())
    };
    record(&ens)?;
    for n in 1..=s.run.n_steps {
        ens.step(&model, &params, s.run.dt).context("microdynamics")?;
        if n % every == 0 || n == s.run.n_steps {
            record(&ens)?;
        }
    }

    let mut report = Report::new("langevin");
    report.line("seed", seed);
    report.line("gamma", params.gamma);
    report.line("diffusion", params.diffusion);
    report.line("epsilon", params.epsilon);
    report.line("mass", params.mass());
    report.section("ensemble");
    report.line("trajectories", s.particles.count);
    report.line("alive", ens.alive_positions().count());
    report.line("time", ens.time());
    report.line("bandwidth", bandwidth);
    for k in 0..grid.dims() {
        let x = ens.coordinates(k);
        if x.len() > 1 {
            report.line(&format!("mean_q{k}"), mean(&x));
            report.line(&format!("var_q{k}"), emergent_core::stats::variance(&x));
        }
    }
    if model.is_static() && params.diffusion > 0.0 {
        let stat = stationary_density(&grid, &model, &params, 0.0).context("microdynamics")?;
        let est = estimate_density(&ens, &grid, bandwidth).context("microdynamics")?;
        report.section("stationary");
        report.line("l1_to_stationary", l1(&est, &stat));
        if grid.dims() == 1 {
            let x = ens.coordinates(0);
            report.line("ks_distance", ks_statistic(&x, grid_cdf(&stat)));
            report.line("ks_critical_1pct", ks_critical(x.len(), 0.01));
        }
    }

    let mut out = Outputs::new();
    out.add("density.txt", density);
    if s.particles.write > 0 {
        out.add("trajectories.txt", traj);
    }
    out.add(REPORT, report.into_bytes());
    Ok(out)
}

fn fokker_planck(s: &FokkerPlanckScenario) -> CliResult<Outputs> {
    let grid = s.grid.build()?;
    let params = s.dynamics.params()?;
    let model = s.free_energy.model();
    let p0 = initial_density(&s.initial, &grid)?;
    let scheme = match s.run.scheme {
        SchemeSpec::Explicit => Scheme::Explicit,
        SchemeSpec::Implicit => Scheme::Implicit,
    };
    let mut cfg = FokkerPlanckConfig::new(s.run.dt, s.run.n_steps, scheme);
    cfg.record_every = s.run.record_every.unwrap_or(s.run.n_steps).max(1);
    let run = evolve_fokker_planck(&p0, &model, &params, &cfg).context("microdynamics")?;

    let density = buffer(|w| {
        run.times.iter().zip(&run.frames).try_for_each(|(t, p)| write_scalar(w, p, Some(*t)))
    });
    let t_end = *run.times.last().unwrap();
    let current = probability_current(run.last(), &model, &params, t_end).context("microdynamics")?;

    let mut report = Report::new("fokker-planck");
    report.line("gamma", params.gamma);
    report.line("diffusion", params.diffusion);
    report.line("epsilon", params.epsilon);
    report.line("mass", params.mass());
    report.section("run");
    report.line("scheme", format!("{scheme:?}").to_lowercase());
    report.line("time", t_end);
    report.line("clipped_steps", run.clipped);
    report.line("final_mass", integrate(run.last()));
    report.line("max_current", current.max_abs());
    if model.is_static() && params.diffusion > 0.0 {
        let stat = stationary_density(&grid, &model, &params, 0.0).context("microdynamics")?;
        report.line("l1_to_stationary", l1(run.last(), &stat));
    }

    let mut out = Outputs::new();
    out.add("density.txt", density);
    out.add("current.txt", buffer(|w| write_vector(w, &current, Some(t_end))));
    out.add(REPORT, report.into_bytes());
    Ok(out)
}

/// Splits `t_end` into equal steps no longer than `dt`.
fn steps_for(t_end: f64, dt: f64) -> CliResult<(usize, f64)> {
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(CliError::Config(format!("`t_end` must be non-negative, got {t_end}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(CliError::Config(format!("time step must be positive, got {dt}")));
    }
    let n = (t_end / dt).ceil() as usize;
    Ok((n, if n == 0 { dt } else { t_end / n as f64 }))
}

fn madelung(s: &MadelungScenario) -> CliResult<Outputs> {
    let grid = s.grid.build()?;
    let c = s.constants()?;
    let v = s.potential.on_grid(&grid, c.mass);
    let wf = initial_wavefunction(&s.initial, &grid, &v, &c)?;
    let mut state = MadelungState::from_wavefunction(&wf).context("madelung")?;
    let (n, dt) = steps_for(s.run.t_end, s.run.dt.unwrap_or_else(|| state.stable_dt()))?;
    let every = (n / s.run.records.unwrap_or(1).max(1)).max(1);
    let mass0 = total_mass(&state);

    let (mut density, mut velocity) = (Vec::new(), Vec::new());
    let mut record = |st: &MadelungState, t: f64| {
        density.extend(buffer(|w| write_scalar(w, st.density(), Some(t))));
        velocity.extend(buffer(|w| write_vector(w, &st.velocity(), Some(t))));
    };
    record(&state, 0.0);
    for k in 1..=n {
        state = madelung_step(&state, &v, dt).context("madelung")?;
        if k % every == 0 || k == n {
            record(&state, k as f64 * dt);
        }
    }

    let mut loops = String::from("# loop circulation quanta\n");
    for (id, l) in s.loops.iter().enumerate() {
        if grid.dims() != 2 {
            return Err(CliError::Config("circulation loops need a 2-D grid".into()));
        }
        let path = grid.rectangle_loop(0, 1, l.lower, l.upper, 0).context("grid")?;
        let gamma = circulation(&state, &path).context("madelung")?;
        let quanta = circulation_quanta(&state, &path).context("madelung")?;
        writeln!(loops, "{id} {gamma} {quanta}").unwrap();
    }

    let mut report = Report::new("madelung");
    report.constants(&c);
    report.section("run");
    report.line("dt", dt);
    report.line("steps", n);
    report.line("mass_drift", (total_mass(&state) - mass0).abs());
    if grid.dims() == 2 {
        report.line("max_curl", max_curl(&state).context("madelung")?);
    }

    let mut out = Outputs::new();
    out.add("density.txt", density);
    out.add("velocity.txt", velocity);
    if !s.loops.is_empty() {
        out.add("circulation.txt", loops.into_bytes());
    }
    out.add(REPORT, report.into_bytes());
    Ok(out)
}

fn observables(wf: &WaveFunction, v: &ScalarField, t: f64, out: &mut String) -> CliResult<f64> {
    let energy = wf.energy(v).context("schrodinger")?;
    write!(out, "{t} {} {energy}", wf.norm()).unwrap();
    for x in wf.mean_position().iter().chain(&wf.mean_momentum()) {
        write!(out, " {x}").unwrap();
    }
    out.push('\n');
    Ok(energy)
}

fn schrodinger(s: &SchrodingerScenario) -> CliResult<Outputs> {
    let grid = s.grid.build()?;
    let c = s.constants()?;
    let v = s.potential.on_grid(&grid, c.mass);
    let mut report = Report::new("schrodinger");
    report.constants(&c);
    let mut out = Outputs::new();
    match s.mode {
        SchrodingerMode::Spectrum => {
            let count = s.states.unwrap_or(4);
            let spec = stationary_states(&v, c.mass, c.hbar.abs(), count).context("schrodinger")?;
            let mut table = String::from("# n energy residual\n");
            for (n, (e, r)) in spec.energies.iter().zip(&spec.residuals).enumerate() {
                writeln!(table, "{n} {e} {r}").unwrap();
            }
            let states = buffer(|w| spec.states.iter().try_for_each(|st| write_complex(w, st.psi(), None)));
            report.section("spectrum");
            report.line("states", count);
            for (n, e) in spec.energies.iter().enumerate() {
                report.line(&format!("energy_{n}"), e);
            }
            report.line("max_residual", spec.residuals.iter().fold(0.0f64, |m, r| m.max(*r)));
            out.add("spectrum.txt", table.into_bytes());
            out.add("states.txt", states);
        }
        SchrodingerMode::Evolve => {
            let initial = s.initial.as_ref().ok_or_else(|| CliError::Config("missing field `initial`".into()))?;
            let run = s.run.as_ref().ok_or_else(|| CliError::Config("missing field `run`".into()))?;
            let wf = initial_wavefunction(initial, &grid, &v, &c)?;
            let mut cfg = EvolveConfig::new(run.dt, run.n_steps).record_every(run.record_every());
            cfg.propagator = match s.propagator {
                PropagatorSpec::Auto => None,
                PropagatorSpec::SplitStep => Some(Propagator::SplitStep),
                PropagatorSpec::CrankNicolson => Some(Propagator::CrankNicolson),
            };
            let ev = evolve(&wf, &v, &cfg).context("schrodinger")?;
            let mut table = String::from("# t norm energy <q..> <p..>\n");
            let mut energies = Vec::new();
            for (t, st) in ev.times.iter().zip(&ev.states) {
                energies.push(observables(st, &v, *t, &mut table)?);
            }
            let frames = buffer(|w| ev.times.iter().zip(&ev.states).try_for_each(|(t, st)| write_complex(w, st.psi(), Some(*t))));
            report.section("run");
            report.line("propagator", format!("{:?}", ev.propagator));
            report.line("time", ev.times.last().unwrap());
            report.line("norm_drift", (ev.last().norm() - wf.norm()).abs());
            let e0 = energies[0];
            let drift = energies.iter().fold(0.0f64, |m, e| m.max((e - e0).abs()));
            report.line("energy_initial", e0);
            report.line("relative_energy_drift", drift / e0.abs().max(f64::MIN_POSITIVE));
            out.add("wavefunction.txt", frames);
            out.add("observables.txt", table.into_bytes());
        }
    }
    out.add(REPORT, report.into_bytes());
    Ok(out)
}

/// Seed of chain `chain` at grid point `point`.
fn chain_seed(seed: u64, point: usize, chain: usize, chains: usize) -> u64 {
    seed.wrapping_add(((point * chains + chain) as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn thermo_pool(s: &ThermoScenario) -> CliResult<Outputs> {
    let seed = s.seed.expect("finalized");
    if s.chains == 0 || s.sweeps < BATCHES {
        return Err(CliError::Config(format!("need at least one chain and {BATCHES} sweeps")));
    }
    let mut table = String::from("# mu mc_mean mean_err mc_std std_err theory_mean theory_delta_n z_mean z_std\n");
    let mut worst: f64 = 0.0;
    for (i, &mu) in s.mu.iter().enumerate() {
        let t = s.pool.temperature;
        let probe = NeuronPool::new(s.pool.size, s.pool.activation, t, mu, 0).context("thermo")?;
        let theory = mean_and_delta_n(&probe.model(), mu, t, None).context("thermo")?;
        let start = theory.mean.round().clamp(0.0, s.pool.size as f64) as u32;
        let pool = NeuronPool::new(s.pool.size, s.pool.activation, t, mu, start).context("thermo")?;
        let seeds: Vec<u64> = (0..s.chains).map(|c| chain_seed(seed, i, c, s.chains)).collect();
        let chains = sample_chains(&pool, s.burn_in + s.sweeps, &seeds).context("thermo")?;
        let xs: Vec<f64> = chains.iter().flat_map(|c| c[s.burn_in..].iter().map(|&n| n as f64)).collect();
        let batches = BATCHES * s.chains;
        let (m, m_err) = (mean(&xs), batch_standard_error(&xs, batches));
        let (sd, sd_err) = std_with_error(&xs, batches);
        let z = |x: f64, y: f64, e: f64| if e > 0.0 { (x - y).abs() / e } else if x == y { 0.0 } else { f64::INFINITY };
        let (zm, zs) = (z(m, theory.mean, m_err), z(sd, theory.delta, sd_err));
        worst = worst.max(zm).max(zs);
        writeln!(table, "{mu} {m} {m_err} {sd} {sd_err} {} {} {zm} {zs}", theory.mean, theory.delta).unwrap();
    }
    let mut report = Report::new("thermo-pool");
    report.line("seed", seed);
    report.line("pool_size", s.pool.size);
    report.line("activation", s.pool.activation);
    report.line("temperature", s.pool.temperature);
    report.line("sweeps", s.sweeps);
    report.line("burn_in", s.burn_in);
    report.line("chains", s.chains);
    report.line("max_z", worst);

    let mut out = Outputs::new();
    out.add("fluctuations.txt", table.into_bytes());
    out.add(REPORT, report.into_bytes());
    Ok(out)
}

fn matrix(spec: &MatrixSpec, dim: usize, hbar: f64, rng: &mut ChaCha8Rng) -> CliResult<CMatrix> {
    Ok(match spec {
        MatrixSpec::Zero => CMatrix::zeros(dim, dim),
        MatrixSpec::SigmaX { scale } => {
            let mut h = CMatrix::zeros(dim, dim);
            h[(0, 1)] = Complex64::new(*scale, 0.0);
            h[(1, 0)] = Complex64::new(*scale, 0.0);
            h
        }
        MatrixSpec::Random { scale } => random_hermitian(dim, rng).scale(*scale),
        MatrixSpec::GridHarmonic { half_width, omega, mass } => {
            let grid = Grid::line(-half_width, *half_width, dim, emergent_core::Boundary::Periodic)
                .map_err(|e| CliError::Config(format!("grid-harmonic: {e}")))?;
            let v = ScalarField::from_fn(&grid, |q| 0.5 * mass * omega * omega * q[0] * q[0]);
            grid_hamiltonian(&v, *mass, hbar).context("measurement")?
        }
    })
}

fn measurement(s: &MeasurementScenario) -> CliResult<Outputs> {
    let seed = s.seed.expect("finalized");
    let m = s.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h_pre = matrix(&s.pre.hamiltonian, m, s.hbar, &mut rng)?;
    let h_main = matrix(&s.main.hamiltonian, m, s.hbar, &mut rng)?;
    let h_post = matrix(&s.post.hamiltonian, m, s.hbar, &mut rng)?;
    let set = match &s.operators {
        OutcomeSpec::Projectors => MeasurementSet::projectors(m),
        OutcomeSpec::RandomDiagonal { outcomes } => random_diagonal_set(m, *outcomes, &mut rng),
    };
    let psi0 = pre_evolve(s.start, &h_pre, s.pre.time, s.hbar).context("measurement")?;
    let psi = evolve_state(&psi0, &h_main, s.main.time, s.hbar).context("measurement")?;
    let after = evolve_state(&psi, &h_post, s.post.time, s.hbar).context("measurement")?;
    let p_theory = measure_diagonal(&after, &set).context("measurement")?;
    let conj = conjugated_operators(&set, &h_post, s.post.time, s.hbar).context("measurement")?;
    let p_conj = measure(&psi, &conj).context("measurement")?;
    let draws = sample_outcomes(&p_theory, s.draws, seed.wrapping_add(1)).context("measurement")?;
    let mut counts = vec![0usize; p_theory.len()];
    for d in draws {
        counts[d] += 1;
    }

    let mut table = String::from("# m p_theory p_conjugated p_empirical n_draws\n");
    let (mut gap, mut worst_z): (f64, f64) = (0.0, 0.0);
    for (k, (&a, &b)) in p_theory.iter().zip(&p_conj).enumerate() {
        let freq = if s.draws > 0 { counts[k] as f64 / s.draws as f64 } else { 0.0 };
        writeln!(table, "{} {a} {b} {freq} {}", k + 1, counts[k]).unwrap();
        gap = gap.max((a - b).abs());
        if s.draws > 0 {
            let se = (a * (1.0 - a) / s.draws as f64).sqrt();
            if se > 0.0 {
                worst_z = worst_z.max((freq - a).abs() / se);
            }
        }
    }
    let defect = [(&h_pre, s.pre.time), (&h_main, s.main.time), (&h_post, s.post.time)]
        .into_iter()
        .map(|(h, t)| unitary(h, t, s.hbar).map(|u| unitarity_defect(&u)))
        .collect::<emergent_core::Result<Vec<f64>>>()
        .context("measurement")?
        .into_iter()
        .fold(0.0f64, f64::max);

    let mut report = Report::new("measurement");
    report.line("seed", seed);
    report.line("dim", m);
    report.line("hbar", s.hbar);
    report.line("outcomes", set.len());
    report.line("max_unitarity_defect", defect);
    report.line("completeness_defect", set.completeness_defect());
    report.line("conjugated_completeness_defect", conj.completeness_defect());
    report.line("max_probability_gap", gap);
    report.line("draws", s.draws);
    report.line("max_sampling_z", worst_z);

    let mut out = Outputs::new();
    out.add("probabilities.txt", table.into_bytes());
    out.add(REPORT, report.into_bytes());
    Ok(out)
}

fn compare(s: &CompareScenario) -> CliResult<Outputs> {
    let grid = s.grid.build()?;
    let c = s.constants()?;
    let v = s.potential.on_grid(&grid, c.mass);
    let wf = initial_wavefunction(&s.initial, &grid, &v, &c)?;
    let samples = s.samples.max(1);
    let mut hydro = MadelungState::from_wavefunction(&wf).context("madelung")?;
    let (n, dt) = steps_for(s.t_end, hydro.stable_dt())?;
    // zero steps: only the wall convention is applied
    let mut psi = evolve(&wf, &v, &EvolveConfig::new(dt, 0)).context("schrodinger")?.states.remove(0);

    let mut series = String::from("# t l2_density\n");
    writeln!(series, "0 {}", l2(hydro.density(), &psi.density())).unwrap();
    let mut done = 0;
    let mut last = 0.0;
    for k in 1..=samples {
        let target = (k * n) / samples;
        if target == done {
            continue;
        }
        for _ in done..target {
            hydro = madelung_step(&hydro, &v, dt).context("madelung")?;
        }
        let ev = evolve(&psi, &v, &EvolveConfig::new(dt, target - done)).context("schrodinger")?;
        psi = ev.last().clone();
        done = target;
        last = l2(hydro.density(), &psi.density());
        writeln!(series, "{} {last}", done as f64 * dt).unwrap();
    }

    let mut report = Report::new("compare");
    report.constants(&c);
    report.section("run");
    report.line("dt", dt);
    report.line("steps", n);
    report.line("final_l2", last);
    report.line("tolerance", COMPARE_TOLERANCE);
    let pass = last <= COMPARE_TOLERANCE;
    report.line("status", if pass { "pass" } else { "fail" });

    let mut out = Outputs::new();
    out.add("l2.txt", series.into_bytes());
    out.add(REPORT, report.into_bytes());
    Ok(out)
}

/// True when a finished compare run stayed within tolerance.
pub fn compare_passed(out: &Outputs) -> bool {
    out.get(REPORT).is_some_and(|r| String::from_utf8_lossy(r).contains("status = pass"))
}
