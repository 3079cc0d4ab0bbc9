//! Quantum hydrodynamics in density/phase form, and circulation around
//! closed lattice loops.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::grid::{curl_2d, integrate, laplacian, Boundary, Grid, ScalarField, VectorField};
use crate::schrodinger::WaveFunction;
use crate::{DENSITY_FLOOR, MASK_FRACTION};

/// Courant limit for `max|u| dt / h`.
pub const CFL_LIMIT: f64 = 0.5;
const NORM_TOLERANCE: f64 = 1e-8;
/// Undershoots above `-NEGATIVE_TOLERANCE max p` are tail noise: they are
/// clipped and the lost mass is restored by rescaling. Deeper ones are errors.
const NEGATIVE_TOLERANCE: f64 = 1e-6;

/// How the flow is stored.
#[derive(Debug, Clone, PartialEq)]
pub enum Flow {
    /// Phase action `S = εF`; `u = ∇S/m`. With a period, `S` is defined only
    /// modulo it and differences are reduced to the principal interval.
    Phase { action: ScalarField, period: Option<f64> },
    /// Velocity field given directly; such states can be analysed but not
    /// stepped.
    Velocity(VectorField),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MadelungState {
    density: ScalarField,
    flow: Flow,
    mass: f64,
    hbar: f64,
}

fn check_constants(mass: f64, hbar: f64) -> Result<()> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::param("mass", "must be positive"));
    }
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(Error::param("hbar", "must be positive"));
    }
    Ok(())
}

fn check_grid(grid: &Grid) -> Result<()> {
    if grid.axes().iter().any(|a| a.boundary == Boundary::Absorbing) {
        return Err(Error::Boundary("hydrodynamic states need periodic or reflecting axes".into()));
    }
    Ok(())
}

impl MadelungState {
    pub fn from_phase(density: ScalarField, action: ScalarField, period: Option<f64>, mass: f64, hbar: f64) -> Result<Self> {
        check_constants(mass, hbar)?;
        check_grid(density.grid())?;
        density.grid().check(action.grid(), "phase action")?;
        density.check_density(NORM_TOLERANCE)?;
        if let Some(p) = period {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::param("period", "must be positive"));
            }
        }
        Ok(MadelungState { density, flow: Flow::Phase { action, period }, mass, hbar })
    }

    pub fn from_velocity(density: ScalarField, velocity: VectorField, mass: f64, hbar: f64) -> Result<Self> {
        check_constants(mass, hbar)?;
        check_grid(density.grid())?;
        density.grid().check(velocity.grid(), "velocity")?;
        density.check_density(NORM_TOLERANCE)?;
        Ok(MadelungState { density, flow: Flow::Velocity(velocity), mass, hbar })
    }

    /// `p = |ψ|²` and `S = ħ arg ψ`, defined modulo `2πħ`.
    pub fn from_wavefunction(wf: &WaveFunction) -> Result<Self> {
        let action = wf.psi().map(|z| wf.hbar() * z.arg());
        MadelungState::from_phase(wf.density(), action, Some(TAU * wf.hbar()), wf.mass(), wf.hbar())
    }

    pub fn grid(&self) -> &Grid {
        self.density.grid()
    }

    pub fn density(&self) -> &ScalarField {
        &self.density
    }

    pub fn flow(&self) -> &Flow {
        &self.flow
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn action(&self) -> Option<&ScalarField> {
        match &self.flow {
            Flow::Phase { action, .. } => Some(action),
            Flow::Velocity(_) => None,
        }
    }

    /// `u = ∇S/m` by central differences of the (reduced) phase, or the
    /// stored velocity.
    pub fn velocity(&self) -> VectorField {
        match &self.flow {
            Flow::Velocity(u) => u.clone(),
            Flow::Phase { action, period } => phase_gradient(action, *period).scaled(1.0 / self.mass),
        }
    }

    /// Nodes where `p < 10⁻⁸ max p`.
    pub fn mask(&self) -> Vec<bool> {
        mask(&self.density)
    }

    /// Largest stable step `0.4 min(h/max|u|, m h²/ħ)` over the unmasked nodes.
    pub fn stable_dt(&self) -> f64 {
        let h = (0..self.grid().dims()).map(|k| self.grid().spacing(k)).fold(f64::INFINITY, f64::min);
        let umax = max_speed(&self.velocity(), &self.mask());
        let advective = if umax > 0.0 { h / umax } else { f64::INFINITY };
        0.4 * advective.min(self.mass * h * h / self.hbar)
    }

    /// Quantum potential of the current density.
    pub fn quantum_potential(&self) -> ScalarField {
        quantum_potential(&self.density, self.hbar, self.mass)
    }
}

fn mask(p: &ScalarField) -> Vec<bool> {
    let cut = MASK_FRACTION * p.max();
    p.values().iter().map(|&v| v < cut).collect()
}

fn max_speed(u: &VectorField, masked: &[bool]) -> f64 {
    let n2 = u.norm_sqr();
    n2.values().iter().zip(masked).filter(|(_, &m)| !m).fold(0.0f64, |a, (v, _)| a.max(v.sqrt()))
}

fn reduce(d: f64, period: Option<f64>) -> f64 {
    match period {
        Some(p) => {
            let r = d - p * (d / p).round();
            if r <= -0.5 * p {
                r + p
            } else {
                r
            }
        }
        None => d,
    }
}

fn phase_gradient(s: &ScalarField, period: Option<f64>) -> VectorField {
    let grid = s.grid();
    let v = s.values();
    let components = (0..grid.dims())
        .map(|k| {
            let inv2h = 0.5 / grid.spacing(k);
            (0..v.len())
                .map(|i| match (grid.neighbor(i, k, false), grid.neighbor(i, k, true)) {
                    (Some(lo), Some(hi)) => (reduce(v[i] - v[lo], period) + reduce(v[hi] - v[i], period)) * inv2h,
                    _ => 0.0,
                })
                .collect()
        })
        .collect();
    VectorField::new(grid.clone(), components).expect("grid components")
}

/// `Q = -(ħ²/2m) ∇²√p / √p` on the floored density, zero on masked nodes.
pub fn quantum_potential(p: &ScalarField, hbar: f64, mass: f64) -> ScalarField {
    let masked = mask(p);
    let mut q = floored_quantum_potential(p, hbar, mass);
    q.values_mut().iter_mut().zip(&masked).filter(|(_, &m)| m).for_each(|(v, _)| *v = 0.0);
    q
}

fn floored_quantum_potential(p: &ScalarField, hbar: f64, mass: f64) -> ScalarField {
    let s = p.sqrt_floored(DENSITY_FLOOR);
    let lap = laplacian(&s);
    let c = -hbar * hbar / (2.0 * mass);
    s.zip_map(&lap, |a, b| c * b / a).expect("density grid")
}

/// Time derivatives of `(p, S)`.
fn rates(grid: &Grid, p: &[f64], s: &[f64], v: &[f64], period: Option<f64>, mass: f64, hbar: f64) -> (Vec<f64>, Vec<f64>) {
    let pf = ScalarField::new(grid.clone(), p.to_vec()).expect("grid");
    let q = floored_quantum_potential(&pf, hbar, mass);
    let masked = mask(&pf);
    // centred face density in the bulk, upwind next to masked nodes
    let face = |i: usize, j: usize, d: f64| {
        if masked[i] || masked[j] {
            if d > 0.0 {
                p[i]
            } else {
                p[j]
            }
        } else {
            0.5 * (p[i] + p[j])
        }
    };
    let n = p.len();
    let mut dp = vec![0.0; n];
    let mut ds = vec![0.0; n];
    for i in 0..n {
        let mut kinetic = 0.0;
        for k in 0..grid.dims() {
            let h = grid.spacing(k);
            let w = grid.axis(k).weight(grid.index_along(i, k));
            // mean of the squared face slopes; a wall mirrors the inner face
            let (mut sq, mut faces) = (0.0, 0.0);
            if let Some(j) = grid.neighbor(i, k, true) {
                let d = reduce(s[j] - s[i], period) / h;
                // flux p u from i to j across the face
                let flux = face(i, j, d) * d / mass;
                dp[i] -= flux / w;
                sq += d * d;
                faces += 1.0;
            }
            if let Some(j) = grid.neighbor(i, k, false) {
                let d = reduce(s[i] - s[j], period) / h;
                let flux = face(j, i, d) * d / mass;
                dp[i] += flux / w;
                sq += d * d;
                faces += 1.0;
            }
            kinetic += sq / faces;
        }
        ds[i] = -kinetic / (2.0 * mass) - v[i] - q.values()[i];
    }
    extend_into_mask(grid, &masked, &mut ds);
    (dp, ds)
}

/// The phase carries no information where the density is masked. Its rate
/// there is copied outward, layer by layer, from the unmasked region, so the
/// masked phase moves rigidly with the edge instead of developing a kink.
fn extend_into_mask(grid: &Grid, masked: &[bool], rate: &mut [f64]) {
    let mut known: Vec<bool> = masked.iter().map(|m| !m).collect();
    if !known.iter().any(|&k| k) {
        return;
    }
    let mut front: Vec<usize> = (0..rate.len()).filter(|&i| !known[i]).collect();
    while !front.is_empty() {
        let mut next = Vec::new();
        let mut assigned = Vec::new();
        for &i in &front {
            let (mut sum, mut count) = (0.0, 0.0);
            for k in 0..grid.dims() {
                for fw in [false, true] {
                    if let Some(j) = grid.neighbor(i, k, fw) {
                        if known[j] {
                            sum += rate[j];
                            count += 1.0;
                        }
                    }
                }
            }
            if count > 0.0 {
                assigned.push((i, sum / count));
            } else {
                next.push(i);
            }
        }
        if assigned.is_empty() {
            break;
        }
        for (i, r) in assigned {
            rate[i] = r;
            known[i] = true;
        }
        front = next;
    }
}

/// One RK4 step of the phase-form equations
/// `∂S/∂t = -|∇S|²/2m - V - Q`, `∂p/∂t = -∇·(p ∇S/m)`, with a conservative
/// face-flux update of the density.
pub fn madelung_step(state: &MadelungState, v: &ScalarField, dt: f64) -> Result<MadelungState> {
    let Flow::Phase { action, period } = &state.flow else {
        return Err(Error::param("state", "stepping needs a phase action, not a bare velocity field"));
    };
    let grid = state.grid();
    grid.check(v.grid(), "potential")?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", "must be positive"));
    }
    let h = (0..grid.dims()).map(|k| grid.spacing(k)).fold(f64::INFINITY, f64::min);
    let courant = max_speed(&state.velocity(), &state.mask()) * dt / h;
    if courant > CFL_LIMIT {
        return Err(Error::Cfl { courant, limit: CFL_LIMIT });
    }
    let stiffness: f64 = (0..grid.dims()).map(|k| 2.0 / grid.spacing(k).powi(2)).sum::<f64>() * state.hbar / state.mass;
    if stiffness * dt > 2.8 {
        return Err(Error::Unstable(format!("dispersive step ħ dt Σ2/(m h²) = {:.3} exceeds 2.8", stiffness * dt)));
    }
    let (m, hb, per) = (state.mass, state.hbar, *period);
    let p0 = state.density.values();
    let s0 = action.values();
    let vv = v.values();
    let axpy = |x: &[f64], k: &[f64], a: f64| -> Vec<f64> { x.iter().zip(k).map(|(x, k)| x + a * k).collect() };
    let (kp1, ks1) = rates(grid, p0, s0, vv, per, m, hb);
    let (kp2, ks2) = rates(grid, &axpy(p0, &kp1, 0.5 * dt), &axpy(s0, &ks1, 0.5 * dt), vv, per, m, hb);
    let (kp3, ks3) = rates(grid, &axpy(p0, &kp2, 0.5 * dt), &axpy(s0, &ks2, 0.5 * dt), vv, per, m, hb);
    let (kp4, ks4) = rates(grid, &axpy(p0, &kp3, dt), &axpy(s0, &ks3, dt), vv, per, m, hb);
    let combine = |x: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
        (0..x.len()).map(|i| x[i] + dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i])).collect()
    };
    let mut p1 = combine(p0, &kp1, &kp2, &kp3, &kp4);
    let s1 = combine(s0, &ks1, &ks2, &ks3, &ks4);
    if p1.iter().chain(&s1).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("hydrodynamic step"));
    }
    let pmax = p1.iter().cloned().fold(0.0, f64::max);
    let pmin = p1.iter().cloned().fold(f64::INFINITY, f64::min);
    if pmin < -NEGATIVE_TOLERANCE * pmax {
        return Err(Error::DensityFloor { min: pmin });
    }
    if pmin < 0.0 {
        let before = integrate(&ScalarField::new(grid.clone(), p1.clone())?);
        p1.iter_mut().for_each(|x| *x = x.max(0.0));
        let after = integrate(&ScalarField::new(grid.clone(), p1.clone())?);
        p1.iter_mut().for_each(|x| *x *= before / after);
    }
    Ok(MadelungState {
        density: ScalarField::new(grid.clone(), p1)?,
        flow: Flow::Phase { action: ScalarField::new(grid.clone(), s1)?, period: per },
        mass: m,
        hbar: hb,
    })
}

/// Runs `n_steps` steps of size `dt`.
pub fn madelung_run(state: &MadelungState, v: &ScalarField, dt: f64, n_steps: usize) -> Result<MadelungState> {
    let mut s = state.clone();
    for _ in 0..n_steps {
        s = madelung_step(&s, v, dt)?;
    }
    Ok(s)
}

/// Total probability `∫p`.
pub fn total_mass(state: &MadelungState) -> f64 {
    integrate(&state.density)
}

/// Velocity-form residual `∂u/∂t + (u·∇)u + ∇(V + Q)/m` between two
/// states a time `dt` apart, evaluated at the midpoint. Returns the
/// density-weighted RMS `√(∫p|r|²)` over nodes that are unmasked, have no
/// masked neighbour and sit at least two nodes from a reflecting wall.
pub fn euler_residual(before: &MadelungState, after: &MadelungState, v: &ScalarField, dt: f64) -> Result<f64> {
    let grid = before.grid();
    grid.check(after.grid(), "euler residual")?;
    let (u0, u1) = (before.velocity(), after.velocity());
    let mid_p = before.density.zip_map(&after.density, |a, b| 0.5 * (a + b))?;
    let q = floored_quantum_potential(&mid_p, before.hbar, before.mass);
    let pot = q.zip_map(v, |a, b| (a + b) / before.mass)?;
    let (m0, m1) = (before.mask(), after.mask());
    let mid: Vec<Vec<f64>> = (0..grid.dims())
        .map(|k| u0.component(k).iter().zip(u1.component(k)).map(|(a, b)| 0.5 * (a + b)).collect())
        .collect();
    let mut r2 = vec![0.0; grid.len()];
    for k in 0..grid.dims() {
        let grad_pot = pot.derivative(k);
        let um = ScalarField::new(grid.clone(), mid[k].clone())?;
        let mut adv = vec![0.0; grid.len()];
        for (j, uj) in mid.iter().enumerate() {
            let d = um.derivative(j);
            adv.iter_mut().zip(d.values()).zip(uj).for_each(|((a, d), u)| *a += u * d);
        }
        for i in 0..grid.len() {
            let r = (u1.component(k)[i] - u0.component(k)[i]) / dt + adv[i] + grad_pot.values()[i];
            r2[i] += r * r;
        }
    }
    for i in 0..grid.len() {
        if near_mask(grid, i, &m0) || near_mask(grid, i, &m1) || near_wall(grid, i) {
            r2[i] = 0.0;
        } else {
            r2[i] *= mid_p.values()[i];
        }
    }
    Ok(integrate(&ScalarField::new(grid.clone(), r2)?).sqrt())
}

fn near_mask(grid: &Grid, i: usize, masked: &[bool]) -> bool {
    masked[i]
        || (0..grid.dims()).any(|k| {
            [false, true].iter().any(|&fw| grid.neighbor(i, k, fw).is_some_and(|j| masked[j]))
        })
}

fn near_wall(grid: &Grid, i: usize) -> bool {
    (0..grid.dims()).any(|k| {
        let a = grid.axis(k);
        let n = grid.index_along(i, k);
        !a.is_periodic() && (n < 2 || n + 2 >= a.points)
    })
}

/// Largest discrete curl of the velocity (two-dimensional grids).
pub fn max_curl(state: &MadelungState) -> Result<f64> {
    let c = curl_2d(&state.velocity())?;
    let masked = state.mask();
    Ok(c.values().iter().zip(&masked).filter(|(_, &m)| !m).fold(0.0, |a, (v, _)| a.max(v.abs())))
}

/// Discrete line integral `Γ = Σ u·Δq` around a closed lattice path.
///
/// For phase flows each edge contributes the reduced phase difference over
/// `m`, which makes the sum exact; velocity flows use the trapezoid rule on
/// each edge.
pub fn circulation(state: &MadelungState, path: &[usize]) -> Result<f64> {
    let grid = state.grid();
    let steps = grid.loop_steps(path)?;
    match &state.flow {
        Flow::Phase { action, period } => {
            let s = action.values();
            Ok(path.windows(2).map(|w| reduce(s[w[1]] - s[w[0]], *period)).sum::<f64>() / state.mass)
        }
        Flow::Velocity(u) => Ok(path
            .windows(2)
            .zip(&steps)
            .map(|(w, &(k, forward))| {
                let h = grid.spacing(k);
                let sign = if forward { 1.0 } else { -1.0 };
                sign * 0.5 * h * (u.component(k)[w[0]] + u.component(k)[w[1]])
            })
            .sum()),
    }
}

/// `Γ / (2πħ/m)`.
pub fn circulation_quanta(state: &MadelungState, path: &[usize]) -> Result<f64> {
    Ok(circulation(state, path)? * state.mass / (TAU * state.hbar))
}
