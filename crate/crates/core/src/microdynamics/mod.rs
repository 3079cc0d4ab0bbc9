//! Short-time-scale dynamics of the trainable variables.
//!
//! The density obeys `∂p/∂t = Σ_k ∂_k(D ∂_k p - γ (∂_k F) p)`, which is the
//! Fokker–Planck equation of the Itô process `dq = γ∇F dt + √(2D) dW`. Both
//! faces are provided: [`ParticleEnsemble`] integrates trajectories with
//! Euler–Maruyama, [`evolve_fokker_planck`] integrates the density on a grid.
//! With zero probability current the stationary density is
//! `p ∝ exp(γF/D)` ([`stationary_density`]).

mod fokker_planck;
mod free_energy;
mod langevin;

pub use fokker_planck::{
    evolve_fokker_planck, probability_current, FokkerPlanckConfig, FokkerPlanckRun, Scheme,
};
pub use free_energy::{FreeEnergyModel, TabulatedFreeEnergy};
pub use langevin::{estimate_density, langevin_step, write_trajectories, ParticleEnsemble};

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

/// Constant drift and diffusion coefficients of the learning dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftDiffusionParams {
    /// Drift coefficient γ.
    pub gamma: f64,
    /// Diffusion coefficient D.
    pub diffusion: f64,
    /// Time-step parameter ε of the network.
    pub epsilon: f64,
}

impl DriftDiffusionParams {
    pub fn new(gamma: f64, diffusion: f64, epsilon: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::param("gamma", format!("must be positive, got {gamma}")));
        }
        if !(diffusion >= 0.0 && diffusion.is_finite()) {
            return Err(Error::param("diffusion", format!("must be non-negative, got {diffusion}")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::param("epsilon", format!("must be positive, got {epsilon}")));
        }
        Ok(DriftDiffusionParams { gamma, diffusion, epsilon })
    }

    /// Emergent mass `m = ε / 2γ`.
    pub fn mass(&self) -> f64 {
        self.epsilon / (2.0 * self.gamma)
    }
}

/// Normalized `exp(γF/D)` on the grid nodes at time `t`.
pub fn stationary_density(
    grid: &Grid,
    model: &FreeEnergyModel,
    params: &DriftDiffusionParams,
    t: f64,
) -> Result<ScalarField> {
    if params.diffusion <= 0.0 {
        return Err(Error::param("diffusion", "stationary density needs D > 0"));
    }
    let f = model.on_grid(grid, t)?;
    let fmax = f.max();
    let scale = params.gamma / params.diffusion;
    f.map(|v| (scale * (v - fmax)).exp()).normalized()
}
