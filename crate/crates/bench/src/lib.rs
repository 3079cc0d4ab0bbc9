//! Workloads shared by the benchmarks.

use emergent_core::madelung::MadelungState;
use emergent_core::microdynamics::{DriftDiffusionParams, FreeEnergyModel};
use emergent_core::schrodinger::WaveFunction;
use emergent_core::{Boundary, ComplexField, Grid, ScalarField};
use num_complex::Complex64;

/// `γ = 1`, `D = 1/4` in the confining quadratic free energy.
pub fn drift_diffusion() -> (DriftDiffusionParams, FreeEnergyModel) {
    let params = DriftDiffusionParams::new(1.0, 0.25, 1.0).expect("valid parameters");
    (params, FreeEnergyModel::Quadratic { curvature: -1.0 })
}

/// Square grid of `n` nodes per axis on `[-L, L]^dims`.
pub fn box_grid(dims: usize, n: usize, half_width: f64, boundary: Boundary) -> Grid {
    Grid::build(&vec![-half_width; dims], &vec![half_width; dims], &vec![n; dims], &vec![boundary; dims])
        .expect("valid grid")
}

pub fn harmonic(grid: &Grid) -> ScalarField {
    ScalarField::from_fn(grid, |q| 0.5 * q.iter().map(|x| x * x).sum::<f64>())
}

/// Displaced Gaussian packet with unit mass and `ħ = 1`.
pub fn packet(grid: &Grid) -> WaveFunction {
    let psi = ComplexField::from_fn(grid, |q| {
        let r2: f64 = q.iter().map(|x| (x - 0.5) * (x - 0.5)).sum();
        Complex64::from_polar((-r2 / 2.0).exp(), 0.3 * q[0])
    });
    WaveFunction::normalized(psi, 1.0, 1.0).expect("normalizable packet")
}

pub fn hydro(grid: &Grid) -> MadelungState {
    MadelungState::from_wavefunction(&packet(grid)).expect("packet has a hydrodynamic form")
}
