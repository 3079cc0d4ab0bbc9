//! Emergent wave mechanics.
//!
//! A density `p` and free energy `F` combine into `Ψ = √p exp(iεF/ħ)`. The
//! evolution is implemented in the standard form
//! `iħ ∂Ψ/∂t = (-ħ²/2m ∇² + V) Ψ`. Reflecting axes are hard walls (`Ψ = 0`
//! on the end nodes); absorbing axes are not supported.
//!
//! Splitting the grand potential as `Ω = Ω₀(q) + Ω₁(t, q)` moves the static
//! part into a pure-gauge vector potential `A_k = (ε/e) ∂_k Ω₀` acting on
//! `Ψ̃ = √p exp(iεΩ₁/ħ)`.

mod propagate;
mod spectrum;

pub use propagate::{evolve, evolve_gauged, EvolveConfig, Evolution, Propagator};
pub use spectrum::{stationary_states, Spectrum};

use crate::error::{Error, Result};
use crate::grid::{curl_2d, gradient, integrate, Boundary, ComplexField, Grid, ScalarField, VectorField};
use crate::MASK_FRACTION;
use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

/// Normalized wave function together with the constants that give it meaning.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    psi: ComplexField,
    hbar: f64,
    mass: f64,
}

const NORM_TOLERANCE: f64 = 1e-9;

impl WaveFunction {
    pub fn new(psi: ComplexField, hbar: f64, mass: f64) -> Result<Self> {
        if !(hbar != 0.0 && hbar.is_finite()) {
            return Err(Error::param("hbar", format!("must be nonzero, got {hbar}")));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::param("mass", format!("must be positive, got {mass}")));
        }
        let norm = integrate(&psi.norm_sqr());
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { integral: norm });
        }
        Ok(WaveFunction { psi, hbar, mass })
    }

    /// Rescales `psi` to unit norm first.
    pub fn normalized(psi: ComplexField, hbar: f64, mass: f64) -> Result<Self> {
        let norm = integrate(&psi.norm_sqr());
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotNormalized { integral: norm });
        }
        let s = norm.sqrt().recip();
        WaveFunction::new(psi.map(|z| z * s), hbar, mass)
    }

    pub(crate) fn from_parts_unchecked(psi: ComplexField, hbar: f64, mass: f64) -> Self {
        WaveFunction { psi, hbar, mass }
    }

    pub fn psi(&self) -> &ComplexField {
        &self.psi
    }

    pub fn grid(&self) -> &Grid {
        self.psi.grid()
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn norm(&self) -> f64 {
        integrate(&self.psi.norm_sqr())
    }

    pub fn density(&self) -> ScalarField {
        self.psi.norm_sqr()
    }

    /// `⟨φ|ψ⟩` under the grid quadrature.
    pub fn overlap(&self, other: &WaveFunction) -> Result<Complex64> {
        Ok(integrate(&self.psi.zip_map(&other.psi, |a, b| a.conj() * b)?))
    }

    /// `⟨q_k⟩`.
    pub fn mean_position(&self) -> Vec<f64> {
        let p = self.density();
        let g = self.grid();
        (0..g.dims())
            .map(|k| integrate(&ScalarField::from_fn(g, |q| q[k]).zip_map(&p, |x, v| x * v).unwrap()))
            .collect()
    }

    /// `⟨p̂_k⟩ = ħ Im ∫ψ* ∂_kψ`.
    pub fn mean_momentum(&self) -> Vec<f64> {
        (0..self.grid().dims())
            .map(|k| {
                let d = self.psi.derivative(k);
                self.hbar * integrate(&self.psi.zip_map(&d, |a, b| a.conj() * b).unwrap()).im
            })
            .collect()
    }

    /// `⟨ψ|H|ψ⟩` for the discretized `H = -ħ²/2m ∇² + V`.
    pub fn energy(&self, v: &ScalarField) -> Result<f64> {
        let h = apply_hamiltonian(&self.psi, v, self.mass, self.hbar)?;
        Ok(integrate(&self.psi.zip_map(&h, |a, b| a.conj() * b)?).re)
    }
}

/// Checks the boundary kinds the wave solvers understand.
pub(crate) fn check_boundaries(grid: &Grid) -> Result<()> {
    if grid.axes().iter().any(|a| a.boundary == Boundary::Absorbing) {
        return Err(Error::Boundary(
            "wave evolution supports periodic axes and reflecting (hard-wall) axes only".into(),
        ));
    }
    Ok(())
}

/// True for end nodes of reflecting axes, where the wave function vanishes.
pub(crate) fn is_wall(grid: &Grid, flat: usize) -> bool {
    grid.on_boundary(flat)
}

/// `H ψ` with `H = -ħ²/2m ∇² + V`, three-point stencils and hard walls.
pub fn apply_hamiltonian(psi: &ComplexField, v: &ScalarField, mass: f64, hbar: f64) -> Result<ComplexField> {
    let grid = psi.grid();
    grid.check(v.grid(), "hamiltonian potential")?;
    check_boundaries(grid)?;
    let vals = psi.values();
    let out = (0..grid.len())
        .map(|i| {
            if is_wall(grid, i) {
                return Complex64::new(0.0, 0.0);
            }
            let mut lap = Complex64::new(0.0, 0.0);
            for k in 0..grid.dims() {
                let h = grid.spacing(k);
                let (lo, hi) = (grid.neighbor(i, k, false).unwrap(), grid.neighbor(i, k, true).unwrap());
                lap += (vals[lo] + vals[hi] - vals[i] * 2.0) / (h * h);
            }
            -lap * (hbar * hbar / (2.0 * mass)) + vals[i] * v.values()[i]
        })
        .collect();
    ComplexField::new(grid.clone(), out)
}

/// `Ψ = √p exp(iεF/ħ)`.
pub fn assemble(p: &ScalarField, f: &ScalarField, epsilon: f64, hbar: f64, mass: f64) -> Result<WaveFunction> {
    p.grid().check(f.grid(), "assemble")?;
    p.check_density(NORM_TOLERANCE)?;
    let scale = epsilon / hbar;
    let psi = p.zip_map(f, |pv, fv| Complex64::from_polar(pv.max(0.0).sqrt(), scale * fv))?;
    WaveFunction::new(psi, hbar, mass)
}

/// `Ψ̃ = √p exp(iεΩ₁/ħ)`.
pub fn gauge_assemble(p: &ScalarField, omega1: &ScalarField, epsilon: f64, hbar: f64, mass: f64) -> Result<WaveFunction> {
    assemble(p, omega1, epsilon, hbar, mass)
}

/// Phase difference reduced to `(-π, π]`.
pub fn wrap(d: f64) -> f64 {
    let r = d - TAU * (d / TAU).round();
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

/// Density, velocity and free energy recovered from a wave function.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub density: ScalarField,
    /// `u = (ħ/m) ∇θ` from branch-free phase differences.
    pub velocity: VectorField,
    /// `F = ħθ/ε` reduced to `[0, 2πħ/ε)`.
    pub free_energy: ScalarField,
    /// Phase unwrapped along axis-ordered lattice paths from node 0.
    pub unwrapped_phase: ScalarField,
    /// Nodes where `p < 10⁻⁸ max p`; their phase carries no information.
    pub mask: Vec<bool>,
    /// Plaquettes with nonzero winding (two-dimensional grids only):
    /// lower-left node and winding number. Plaquettes touching a masked
    /// node are skipped.
    pub vortices: Vec<(usize, i32)>,
    /// Period `2π|ħ|/ε` of the recovered free energy.
    pub period: f64,
}

/// Phase derivative along `axis` from wrapped differences, with the
/// boundary rules of the grid's difference operators.
fn phase_derivative(grid: &Grid, theta: &[f64], axis: usize) -> Vec<f64> {
    let a = grid.axis(axis);
    let s = grid.stride(axis);
    let inv2h = 0.5 / a.spacing();
    (0..theta.len())
        .map(|i| match (grid.neighbor(i, axis, false), grid.neighbor(i, axis, true)) {
            (Some(lo), Some(hi)) => (wrap(theta[i] - theta[lo]) + wrap(theta[hi] - theta[i])) * inv2h,
            _ if a.boundary == Boundary::Reflecting => 0.0,
            (None, _) => {
                let (d1, d2) = (wrap(theta[i + s] - theta[i]), wrap(theta[i + 2 * s] - theta[i + s]));
                (4.0 * d1 - (d1 + d2)) * inv2h
            }
            (_, None) => {
                let (d1, d2) = (wrap(theta[i] - theta[i - s]), wrap(theta[i - s] - theta[i - 2 * s]));
                (4.0 * d1 - (d1 + d2)) * inv2h
            }
        })
        .collect()
}

/// Inverse of [`assemble`]: `p = |ψ|²`, velocity and `F` modulo `2πħ/ε`.
pub fn decompose(wf: &WaveFunction, epsilon: f64) -> Result<Decomposition> {
    if !(epsilon > 0.0) {
        return Err(Error::param("epsilon", "must be positive"));
    }
    let grid = wf.grid();
    let density = wf.density();
    let cutoff = MASK_FRACTION * density.max();
    let mask: Vec<bool> = density.values().iter().map(|&p| p < cutoff).collect();
    let theta: Vec<f64> = wf.psi.values().iter().map(|z| z.arg()).collect();
    let scale = wf.hbar / wf.mass;
    let velocity = VectorField::new(
        grid.clone(),
        (0..grid.dims())
            .map(|k| phase_derivative(grid, &theta, k).into_iter().map(|d| scale * d).collect())
            .collect(),
    )?;

    let mut unwrapped = theta.clone();
    for flat in 1..grid.len() {
        let k = (0..grid.dims()).rev().find(|&k| grid.index_along(flat, k) > 0).unwrap();
        let parent = flat - grid.stride(k);
        unwrapped[flat] = unwrapped[parent] + wrap(theta[flat] - unwrapped[parent]);
    }

    let period = TAU * wf.hbar.abs() / epsilon;
    let f_scale = wf.hbar / epsilon;
    let free_energy = ScalarField::new(grid.clone(), theta.iter().map(|t| (f_scale * t).rem_euclid(period)).collect())?;

    let mut vortices = Vec::new();
    if grid.dims() == 2 {
        for flat in 0..grid.len() {
            let (Some(b), Some(d)) = (grid.neighbor(flat, 0, true), grid.neighbor(flat, 1, true)) else { continue };
            let c = grid.neighbor(b, 1, true).unwrap();
            if [flat, b, c, d].iter().any(|&i| mask[i]) {
                continue;
            }
            let circ = wrap(theta[b] - theta[flat]) + wrap(theta[c] - theta[b]) + wrap(theta[d] - theta[c])
                + wrap(theta[flat] - theta[d]);
            let w = (circ / TAU).round() as i32;
            if w != 0 {
                vortices.push((flat, w));
            }
        }
    }
    Ok(Decomposition {
        density,
        velocity,
        free_energy,
        unwrapped_phase: ScalarField::new(grid.clone(), unwrapped)?,
        mask,
        vortices,
        period,
    })
}

/// Phase accumulated around a closed lattice path, in units of `2π`.
pub fn phase_winding(wf: &WaveFunction, path: &[usize]) -> Result<f64> {
    wf.grid().loop_steps(path)?;
    let psi = wf.psi.values();
    Ok(path.windows(2).map(|w| wrap(psi[w[1]].arg() - psi[w[0]].arg())).sum::<f64>() / TAU)
}

/// Pure-gauge data `A_k = (ε/e) ∂_k Ω₀` with the static grand potential.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeData {
    pub omega0: ScalarField,
    pub charge: f64,
    pub epsilon: f64,
    pub potential: VectorField,
}

impl GaugeData {
    /// Largest discrete curl of `A` (two-dimensional grids), zero otherwise.
    pub fn max_curl(&self) -> f64 {
        match curl_2d(&self.potential) {
            Ok(c) => c.values().iter().fold(0.0, |m, v| m.max(v.abs())),
            Err(_) => 0.0,
        }
    }
}

pub fn vector_potential(omega0: &ScalarField, epsilon: f64, charge: f64) -> Result<GaugeData> {
    if !(charge != 0.0 && charge.is_finite()) {
        return Err(Error::param("charge", "must be nonzero"));
    }
    let potential = gradient(&omega0.map(|v| epsilon / charge * v));
    Ok(GaugeData { omega0: omega0.clone(), charge, epsilon, potential })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Grid {
        Grid::line(-6.0, 6.0, 121, Boundary::Reflecting).unwrap()
    }

    fn gaussian(g: &Grid) -> ScalarField {
        ScalarField::from_fn(g, |q| (-q.iter().map(|x| x * x).sum::<f64>()).exp()).normalized().unwrap()
    }

    #[test]
    fn assemble_basic_identities() {
        let g = Grid::line(0.0, 2.0, 20, Boundary::Periodic).unwrap();
        let p = ScalarField::constant(&g, 0.5);
        let wf = assemble(&p, &ScalarField::constant(&g, 0.0), 1.0, 1.0, 1.0).unwrap();
        assert!(wf.psi().values().iter().all(|z| z.im == 0.0 && (z.re - 0.5f64.sqrt()).abs() < 1e-15));

        let g = line();
        let p = gaussian(&g);
        let f = ScalarField::from_fn(&g, |q| 0.7 * q[0] - 0.1 * q[0] * q[0]);
        let (eps, hbar) = (0.8, 1.3);
        let a = assemble(&p, &f, eps, hbar, 1.0).unwrap();
        let b = assemble(&p, &f.map(|v| v + TAU * hbar / eps * 2.0), eps, hbar, 1.0).unwrap();
        for ((x, y), pv) in a.psi().values().iter().zip(b.psi().values()).zip(p.values()) {
            assert!((x - y).norm() < 1e-14);
            assert!((x.norm_sqr() - pv).abs() < 1e-14);
        }
        assert!(assemble(&p.map(|v| 2.0 * v), &f, eps, hbar, 1.0).is_err());
    }

    #[test]
    fn decompose_inverts_assemble_away_from_the_mask() {
        let g = line();
        let p = gaussian(&g);
        let f = ScalarField::from_fn(&g, |q| 2.0 * q[0] + 0.3 * q[0] * q[0]);
        let (eps, hbar, mass) = (1.0, 0.5, 2.0);
        let wf = assemble(&p, &f, eps, hbar, mass).unwrap();
        let d = decompose(&wf, eps).unwrap();
        let grad_f = gradient(&f);
        for i in 0..g.len() {
            assert_eq!(d.density.values()[i], wf.psi().values()[i].norm_sqr());
            if !d.mask[i] {
                let from_u = mass * d.velocity.component(0)[i] / eps;
                assert!((from_u - grad_f.component(0)[i]).abs() < 1e-10, "{i}");
            }
        }
    }

    #[test]
    fn plane_wave_velocity() {
        let g = Grid::line(0.0, TAU, 64, Boundary::Periodic).unwrap();
        let k = 3.0;
        let psi = ComplexField::from_fn(&g, |q| Complex64::from_polar(1.0, k * q[0]));
        let wf = WaveFunction::normalized(psi, 0.7, 1.4).unwrap();
        let d = decompose(&wf, 1.0).unwrap();
        for u in d.velocity.component(0) {
            assert!((u - 0.7 * k / 1.4).abs() < 1e-12);
        }
        assert!(d.vortices.is_empty());
        let path: Vec<usize> = (0..64).chain([0]).collect();
        assert!((phase_winding(&wf, &path).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn vortex_is_recorded_as_winding() {
        // core at a plaquette centre, away from any node
        let g = Grid::build(&[-4.0, -4.0], &[4.0, 4.0], &[40, 40], &[Boundary::Reflecting, Boundary::Reflecting]).unwrap();
        let psi = ComplexField::from_fn(&g, |q| {
            let r2 = q[0] * q[0] + q[1] * q[1];
            Complex64::new(q[0], q[1]) * (-r2 / 4.0).exp()
        });
        let wf = WaveFunction::normalized(psi, 1.0, 1.0).unwrap();
        let d = decompose(&wf, 1.0).unwrap();
        assert_eq!(d.vortices, vec![(g.ravel(&[19, 19]), 1)]);
        let path = g.rectangle_loop(0, 1, [10, 10], [30, 30], 0).unwrap();
        assert!((phase_winding(&wf, &path).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gauge_potential_examples() {
        let g = Grid::build(&[-1.0, -1.0], &[1.0, 1.0], &[11, 13], &[Boundary::Reflecting, Boundary::Periodic]).unwrap();
        let a = vector_potential(&ScalarField::constant(&g, 3.0), 0.5, 2.0).unwrap();
        assert_eq!(a.potential.max_abs(), 0.0);
        let g1 = line();
        let a = vector_potential(&ScalarField::from_fn(&g1, |q| 1.5 * q[0]), 0.5, 2.0).unwrap();
        for (i, v) in a.potential.component(0).iter().enumerate() {
            if !g1.on_boundary(i) {
                assert!((v - 0.5 * 1.5 / 2.0).abs() < 1e-13);
            }
        }
        let om = ScalarField::from_fn(&g, |q| (q[0] * 2.0).sin() * q[1] * q[1] + q[0].powi(3));
        assert!(vector_potential(&om, 0.7, 1.3).unwrap().max_curl() < 1e-10);
    }

    #[test]
    fn gauge_factorization() {
        let g = line();
        let p = gaussian(&g);
        let om0 = ScalarField::from_fn(&g, |q| 0.4 * q[0] * q[0]);
        let om1 = ScalarField::from_fn(&g, |q| -0.9 * q[0]);
        let (eps, hbar) = (1.0, 0.6);
        let full = assemble(&p, &om0.zip_map(&om1, |a, b| a + b).unwrap(), eps, hbar, 1.0).unwrap();
        let tilde = gauge_assemble(&p, &om1, eps, hbar, 1.0).unwrap();
        for i in 0..g.len() {
            let rebuilt = tilde.psi().values()[i] * Complex64::from_polar(1.0, om0.values()[i] * eps / hbar);
            assert!((rebuilt - full.psi().values()[i]).norm() < 1e-14);
        }
    }

    #[test]
    fn wrap_range() {
        for d in [-7.0, -PI, -1.0, 0.0, PI, 4.0, 100.0] {
            let w = wrap(d);
            assert!(w > -PI && w <= PI + 1e-15);
            assert!(((d - w) / TAU - ((d - w) / TAU).round()).abs() < 1e-12);
        }
    }
}
