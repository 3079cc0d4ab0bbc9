use super::{check_boundaries, GaugeData, WaveFunction};
use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid, ScalarField};
use crate::linalg::{solve_cyclic, solve_tridiagonal};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::TAU;
use std::sync::Arc;

/// Time integrator for the wave equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Propagator {
    /// Strang-split Fourier propagator; fully periodic grids only.
    SplitStep,
    /// Cayley (implicit midpoint) form. In one dimension the full
    /// Hamiltonian is inverted; otherwise the potential is split off and
    /// each axis is advanced in a symmetric sweep.
    CrankNicolson,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub record_every: usize,
    /// `None` picks split-step on fully periodic grids, Crank–Nicolson elsewhere.
    pub propagator: Option<Propagator>,
}

impl EvolveConfig {
    pub fn new(dt: f64, n_steps: usize) -> Self {
        EvolveConfig { dt, n_steps, record_every: n_steps.max(1), propagator: None }
    }

    pub fn record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn with_propagator(mut self, p: Propagator) -> Self {
        self.propagator = Some(p);
        self
    }
}

/// Recorded snapshots of a unitary evolution, starting with the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub times: Vec<f64>,
    pub states: Vec<WaveFunction>,
    pub propagator: Propagator,
}

impl Evolution {
    pub fn last(&self) -> &WaveFunction {
        self.states.last().expect("an evolution always holds the initial state")
    }
}

/// Evolves `wf` under `H = -ħ²/2m ∇² + V`.
pub fn evolve(wf: &WaveFunction, v: &ScalarField, cfg: &EvolveConfig) -> Result<Evolution> {
    let grid = wf.grid();
    let prop = cfg.propagator.unwrap_or(if grid.is_periodic() {
        Propagator::SplitStep
    } else {
        Propagator::CrankNicolson
    });
    match prop {
        Propagator::SplitStep => {
            if !grid.is_periodic() {
                return Err(Error::Boundary("split-step needs every axis periodic".into()));
            }
            let mut stepper = SplitStep::new(wf, v, cfg.dt)?;
            run(wf, cfg, prop, |psi| stepper.step(psi))
        }
        Propagator::CrankNicolson => {
            let stepper = CrankNicolson::new(wf, v, None, cfg.dt)?;
            run(wf, cfg, prop, |psi| stepper.step(psi))
        }
    }
}

/// Evolves `Ψ̃` under the minimally coupled kinetic operator
/// `-ħ²/2m (∇ + ieA/ħ)²` with `A = (ε/e)∇Ω₀`.
///
/// The covariant differences use link factors `exp(iε(Ω₀_j - Ω₀_i)/ħ)`, so
/// the result equals `exp(-iεΩ₀/ħ)` times the Crank–Nicolson evolution of
/// `Ψ = Ψ̃ exp(iεΩ₀/ħ)`.
pub fn evolve_gauged(wf: &WaveFunction, v: &ScalarField, gauge: &GaugeData, cfg: &EvolveConfig) -> Result<Evolution> {
    if cfg.propagator == Some(Propagator::SplitStep) {
        return Err(Error::Boundary("gauged evolution uses Crank–Nicolson".into()));
    }
    wf.grid().check(gauge.omega0.grid(), "gauge potential")?;
    let chi = gauge.omega0.map(|o| gauge.epsilon * o / wf.hbar());
    let stepper = CrankNicolson::new(wf, v, Some(&chi), cfg.dt)?;
    run(wf, cfg, Propagator::CrankNicolson, |psi| stepper.step(psi))
}

fn run(
    wf: &WaveFunction,
    cfg: &EvolveConfig,
    propagator: Propagator,
    mut step: impl FnMut(&mut [Complex64]),
) -> Result<Evolution> {
    if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
        return Err(Error::param("dt", format!("must be positive, got {}", cfg.dt)));
    }
    if cfg.record_every == 0 {
        return Err(Error::param("record_every", "must be at least 1"));
    }
    let grid = wf.grid().clone();
    let snapshot = |psi: &[Complex64]| -> Result<WaveFunction> {
        Ok(WaveFunction::from_parts_unchecked(ComplexField::new(grid.clone(), psi.to_vec())?, wf.hbar(), wf.mass()))
    };
    let mut psi = wf.psi().values().to_vec();
    for (i, z) in psi.iter_mut().enumerate() {
        if super::is_wall(&grid, i) {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    let mut out = Evolution { times: vec![0.0], states: vec![snapshot(&psi)?], propagator };
    for n in 1..=cfg.n_steps {
        step(&mut psi);
        if n % cfg.record_every == 0 || n == cfg.n_steps {
            if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::NonFinite("wave function"));
            }
            out.times.push(n as f64 * cfg.dt);
            out.states.push(snapshot(&psi)?);
        }
    }
    Ok(out)
}

/// `exp(-iVdt/2ħ) · F⁻¹ exp(-iħk²dt/2m) F · exp(-iVdt/2ħ)`.
struct SplitStep {
    grid: Grid,
    half_potential: Vec<Complex64>,
    kinetic: Vec<Complex64>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl SplitStep {
    fn new(wf: &WaveFunction, v: &ScalarField, dt: f64) -> Result<Self> {
        let grid = wf.grid().clone();
        grid.check(v.grid(), "potential")?;
        let (hbar, mass) = (wf.hbar(), wf.mass());
        let half_potential = v.values().iter().map(|&vi| Complex64::from_polar(1.0, -vi * dt / (2.0 * hbar))).collect();
        let wavenumbers: Vec<Vec<f64>> = grid
            .axes()
            .iter()
            .map(|a| {
                let n = a.points as i64;
                (0..n).map(|j| TAU * (if j <= n / 2 { j } else { j - n }) as f64 / a.extent()).collect()
            })
            .collect();
        let kinetic = (0..grid.len())
            .map(|flat| {
                let k2: f64 = (0..grid.dims()).map(|k| wavenumbers[k][grid.index_along(flat, k)].powi(2)).sum();
                Complex64::from_polar(1.0, -hbar * k2 * dt / (2.0 * mass))
            })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = grid.axes().iter().map(|a| planner.plan_fft_forward(a.points)).collect();
        let inverse = grid.axes().iter().map(|a| planner.plan_fft_inverse(a.points)).collect();
        Ok(SplitStep { grid, half_potential, kinetic, forward, inverse })
    }

    fn transform(&self, psi: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        let mut line = Vec::new();
        for (k, plan) in plans.iter().enumerate() {
            let n = self.grid.axis(k).points;
            let s = self.grid.stride(k);
            line.resize(n, Complex64::new(0.0, 0.0));
            for start in (0..self.grid.len()).filter(|&f| self.grid.index_along(f, k) == 0) {
                for (i, z) in line.iter_mut().enumerate() {
                    *z = psi[start + i * s];
                }
                plan.process(&mut line);
                for (i, z) in line.iter().enumerate() {
                    psi[start + i * s] = *z;
                }
            }
        }
    }

    fn step(&mut self, psi: &mut [Complex64]) {
        psi.iter_mut().zip(&self.half_potential).for_each(|(z, p)| *z *= p);
        self.transform(psi, &self.forward);
        let scale = 1.0 / self.grid.len() as f64;
        psi.iter_mut().zip(&self.kinetic).for_each(|(z, p)| *z *= p * scale);
        self.transform(psi, &self.inverse);
        psi.iter_mut().zip(&self.half_potential).for_each(|(z, p)| *z *= p);
    }
}

/// Cayley propagator with optional Peierls link phases `χ`.
struct CrankNicolson {
    grid: Grid,
    dt: f64,
    hbar: f64,
    mass: f64,
    potential: Vec<f64>,
    /// `exp(i(χ_j - χ_i))` from each node to its forward neighbor, per axis.
    links: Vec<Vec<Complex64>>,
    /// Sweep order `(axis, fraction of dt)`; empty in one dimension.
    sweeps: Vec<(usize, f64)>,
    half_potential: Vec<Complex64>,
}

impl CrankNicolson {
    fn new(wf: &WaveFunction, v: &ScalarField, chi: Option<&ScalarField>, dt: f64) -> Result<Self> {
        let grid = wf.grid().clone();
        grid.check(v.grid(), "potential")?;
        check_boundaries(&grid)?;
        let one = Complex64::new(1.0, 0.0);
        let links = (0..grid.dims())
            .map(|k| {
                (0..grid.len())
                    .map(|i| match (chi, grid.neighbor(i, k, true)) {
                        (Some(c), Some(j)) => Complex64::from_polar(1.0, c.values()[j] - c.values()[i]),
                        _ => one,
                    })
                    .collect()
            })
            .collect();
        let d = grid.dims();
        let mut sweeps: Vec<(usize, f64)> = Vec::new();
        if d > 1 {
            sweeps.extend((0..d - 1).map(|k| (k, 0.5)));
            sweeps.push((d - 1, 1.0));
            sweeps.extend((0..d - 1).rev().map(|k| (k, 0.5)));
        }
        let hbar = wf.hbar();
        let half_potential = v.values().iter().map(|&vi| Complex64::from_polar(1.0, -vi * dt / (2.0 * hbar))).collect();
        Ok(CrankNicolson {
            grid,
            dt,
            hbar,
            mass: wf.mass(),
            potential: v.values().to_vec(),
            links,
            sweeps,
            half_potential,
        })
    }

    fn step(&self, psi: &mut [Complex64]) {
        if self.sweeps.is_empty() {
            self.axis_step(psi, 0, self.dt, true);
            return;
        }
        psi.iter_mut().zip(&self.half_potential).for_each(|(z, p)| *z *= p);
        for &(k, frac) in &self.sweeps {
            self.axis_step(psi, k, frac * self.dt, false);
        }
        psi.iter_mut().zip(&self.half_potential).for_each(|(z, p)| *z *= p);
    }

    /// `(1 + iτH_k/2ħ) ψ' = (1 - iτH_k/2ħ) ψ` on every line along axis `k`.
    fn axis_step(&self, psi: &mut [Complex64], k: usize, tau: f64, with_potential: bool) {
        let axis = self.grid.axis(k);
        let n = axis.points;
        let s = self.grid.stride(k);
        let h = axis.spacing();
        let c = self.hbar * self.hbar / (2.0 * self.mass * h * h);
        let delta = Complex64::new(0.0, tau / (2.0 * self.hbar));
        let periodic = axis.is_periodic();
        // hard walls: only interior nodes are unknowns
        let (first, m) = if periodic { (0, n) } else { (1, n - 2) };
        let links = &self.links[k];
        let zero = Complex64::new(0.0, 0.0);
        let (mut lo, mut di, mut up, mut rhs) = (vec![zero; m], vec![zero; m], vec![zero; m], vec![zero; m]);
        for start in (0..self.grid.len()).filter(|&f| self.grid.index_along(f, k) == 0) {
            let on_other_wall = (0..self.grid.dims()).any(|j| {
                let a = self.grid.axis(j);
                let i = self.grid.index_along(start, j);
                j != k && !a.is_periodic() && (i == 0 || i + 1 == a.points)
            });
            if on_other_wall {
                continue;
            }
            for r in 0..m {
                let i = first + r;
                let flat = start + i * s;
                let prev = if i > 0 { flat - s } else { flat + (n - 1) * s };
                let next = if i + 1 < n { flat + s } else { flat - (n - 1) * s };
                // H ψ_i = -c (U_{i,i+1} ψ_{i+1} + U_{i,i-1} ψ_{i-1} - 2ψ_i) + V_i ψ_i
                let u_next = links[flat];
                let u_prev = links[prev].conj();
                let vi = if with_potential { self.potential[flat] } else { 0.0 };
                let h_diag = Complex64::new(2.0 * c + vi, 0.0);
                let h_lo = -u_prev * c;
                let h_up = -u_next * c;
                let h_psi = h_lo * psi[prev] + h_diag * psi[flat] + h_up * psi[next];
                rhs[r] = psi[flat] - delta * h_psi;
                lo[r] = delta * h_lo;
                up[r] = delta * h_up;
                di[r] = Complex64::new(1.0, 0.0) + delta * h_diag;
            }
            if periodic {
                solve_cyclic(&lo, &di, &up, &mut rhs);
            } else {
                solve_tridiagonal(&lo, &di, &up, &mut rhs);
            }
            for (r, z) in rhs.iter().enumerate() {
                psi[start + (first + r) * s] = *z;
            }
        }
    }
}
