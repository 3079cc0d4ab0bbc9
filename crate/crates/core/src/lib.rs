//! Numerical laboratory for the emergent quantum dynamics of trainable
//! variables in a grand-canonical ensemble of neural networks.
//!
//! The crate follows the chain from microscopic learning dynamics to emergent
//! wave mechanics:
//!
//! * [`grid`]: discretized configuration space and discrete calculus.
//! * [`microdynamics`]: Langevin ensembles and the equivalent Fokker–Planck
//!   solver for drift `γ∇F` and diffusion `D`.
//! * [`thermo`]: the neuron pool, grand potential, neuron-count fluctuations
//!   and the emergent Planck constant `ħ = με/2π`.
//! * [`action`]: entropy, entropy production and the action functional with
//!   its three variational residuals.
//! * [`madelung`]: hydrodynamic (density/phase) solver and circulation.
//! * [`schrodinger`]: wavefunction assembly, unitary evolution (plain and
//!   gauged) and stationary states.
//! * [`measurement`]: finite-basis pre/post evolution and measurement.
//!
//! Units are natural: `ε` defaults to 1, mass is `m = ε/2γ`.

pub mod action;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod madelung;
pub mod measurement;
pub mod microdynamics;
pub mod schrodinger;
pub mod stats;
pub mod thermo;

pub use error::{Error, Result};
pub use grid::{Axis, Boundary, ComplexField, Grid, ScalarField, VectorField};

/// Pointwise floor applied wherever `1/p` or `1/√p` is needed.
pub const DENSITY_FLOOR: f64 = 1e-12;

/// Residuals and quantum potentials are masked where `p < MASK_FRACTION · max p`.
pub const MASK_FRACTION: f64 = 1e-8;
