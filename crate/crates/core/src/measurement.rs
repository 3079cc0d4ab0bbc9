//! Finite-basis states, unitary pre/main/post evolution, and generalized
//! measurements over the position basis `{|q₁⟩, …, |q_M⟩}`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::schrodinger::apply_hamiltonian;
use crate::{ComplexField, ScalarField};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const NORM_TOLERANCE: f64 = 1e-12;
const HERMITIAN_TOLERANCE: f64 = 1e-12;
const COMPLETENESS_TOLERANCE: f64 = 1e-10;

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

fn hermitian_deviation(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Unit-norm amplitudes over the position basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: CVector,
}

impl StateVector {
    pub fn new(amps: CVector) -> Result<Self> {
        let norm = amps.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { integral: norm * norm });
        }
        Ok(StateVector { amps })
    }

    pub fn normalized(amps: CVector) -> Result<Self> {
        let norm = amps.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotNormalized { integral: norm * norm });
        }
        Ok(StateVector { amps: amps.unscale(norm) })
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    /// `|ψ_i|²`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn overlap(&self, other: &StateVector) -> Complex64 {
        self.amps.dotc(&other.amps)
    }
}

/// `|q_j⟩` for `1 ≤ j ≤ M`.
pub fn position_state(j: usize, m: usize) -> Result<StateVector> {
    if j == 0 || j > m {
        return Err(Error::IndexOutOfRange { index: j, len: m });
    }
    let mut v = CVector::zeros(m);
    v[j - 1] = Complex64::new(1.0, 0.0);
    StateVector::new(v)
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    rho: CMatrix,
}

impl DensityMatrix {
    pub fn new(rho: CMatrix) -> Result<Self> {
        if !rho.is_square() {
            return Err(Error::Dimension("density matrix must be square".into()));
        }
        let dev = hermitian_deviation(&rho);
        if dev > HERMITIAN_TOLERANCE {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let trace = rho.trace();
        if (trace.re - 1.0).abs() > NORM_TOLERANCE || trace.im.abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { integral: trace.re });
        }
        let min = rho.clone().symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -1e-10 {
            return Err(Error::NegativeProbability(min));
        }
        Ok(DensityMatrix { rho })
    }

    /// `ρ = Σ p_i |q_i⟩⟨q_i|`.
    pub fn diagonal(p: &[f64]) -> Result<Self> {
        DensityMatrix::new(CMatrix::from_diagonal(&CVector::from_iterator(p.len(), p.iter().map(|&v| Complex64::new(v, 0.0)))))
    }

    pub fn pure(psi: &StateVector) -> Self {
        DensityMatrix { rho: &psi.amps * psi.amps.adjoint() }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    /// `tr ρ²`.
    pub fn purity(&self) -> f64 {
        (&self.rho * &self.rho).trace().re
    }

    /// `U ρ U†`.
    pub fn conjugate(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.dim() {
            return Err(Error::Dimension(format!("operator is {}×{}, state has dimension {}", u.nrows(), u.ncols(), self.dim())));
        }
        let rho = u * &self.rho * u.adjoint();
        // restore exact Hermiticity lost to rounding
        Ok(DensityMatrix { rho: (&rho + rho.adjoint()).scale(0.5) })
    }

    /// Diagonal of `ρ`.
    pub fn populations(&self) -> Vec<f64> {
        self.rho.diagonal().iter().map(|z| z.re).collect()
    }
}

/// Which evolution a Hamiltonian generates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Pre,
    Main,
    Post,
}

/// A Hermitian generator with its role and duration.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    matrix: CMatrix,
    pub role: Role,
    pub time: f64,
}

impl HamiltonianSpec {
    pub fn new(matrix: CMatrix, role: Role, time: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension("Hamiltonian must be square".into()));
        }
        let dev = hermitian_deviation(&matrix);
        if dev > HERMITIAN_TOLERANCE * max_abs(&matrix).max(1.0) {
            return Err(Error::NotHermitian { deviation: dev });
        }
        if !time.is_finite() {
            return Err(Error::param("time", "must be finite"));
        }
        Ok(HamiltonianSpec { matrix, role, time })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn unitary(&self, hbar: f64) -> Result<CMatrix> {
        unitary(&self.matrix, self.time, hbar)
    }
}

/// `exp(-itH/ħ)` from the Hermitian eigendecomposition of `H`.
pub fn unitary(h: &CMatrix, t: f64, hbar: f64) -> Result<CMatrix> {
    if !h.is_square() {
        return Err(Error::Dimension("Hamiltonian must be square".into()));
    }
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(Error::param("hbar", "must be positive"));
    }
    let dev = hermitian_deviation(h);
    if dev > HERMITIAN_TOLERANCE * max_abs(h).max(1.0) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let n = h.nrows();
    if t == 0.0 {
        return Ok(CMatrix::identity(n, n));
    }
    let eig = ((h + h.adjoint()).scale(0.5)).symmetric_eigen();
    let phases = CVector::from_iterator(n, eig.eigenvalues.iter().map(|&e| Complex64::from_polar(1.0, -t * e / hbar)));
    let v = &eig.eigenvectors;
    Ok(v * CMatrix::from_diagonal(&phases) * v.adjoint())
}

/// `‖U†U - I‖_max`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - CMatrix::identity(n, n)))
}

/// `e^{-itH/ħ}|ψ⟩`.
pub fn evolve_state(psi: &StateVector, h: &CMatrix, t: f64, hbar: f64) -> Result<StateVector> {
    if h.nrows() != psi.dim() {
        return Err(Error::Dimension(format!("Hamiltonian is {}×{}, state has dimension {}", h.nrows(), h.ncols(), psi.dim())));
    }
    let out = unitary(h, t, hbar)? * &psi.amps;
    // unitarity holds to ~1e-15; renormalize so the norm invariant stays exact
    StateVector::normalized(out)
}

/// `|Ψ(0)⟩ = e^{-it₋H₋/ħ}|q_j⟩`.
pub fn pre_evolve(j: usize, h: &CMatrix, t: f64, hbar: f64) -> Result<StateVector> {
    evolve_state(&position_state(j, h.nrows())?, h, t, hbar)
}

/// `ρ(0) = e^{-it₋H₋/ħ} ρ₀ e^{it₋H₋/ħ}`.
pub fn pre_evolve_mixed(rho: &DensityMatrix, h: &CMatrix, t: f64, hbar: f64) -> Result<DensityMatrix> {
    rho.conjugate(&unitary(h, t, hbar)?)
}

/// Measurement operators `{O_m}` with `Σ O_m†O_m = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    ops: Vec<CMatrix>,
    diagonal: bool,
}

impl MeasurementSet {
    pub fn new(ops: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = ops.first() else {
            return Err(Error::param("operators", "need at least one operator"));
        };
        let n = first.nrows();
        if ops.iter().any(|o| o.nrows() != n || o.ncols() != n) {
            return Err(Error::Dimension("measurement operators must be square and of equal size".into()));
        }
        let deviation = completeness_defect(&ops);
        if deviation > COMPLETENESS_TOLERANCE {
            return Err(Error::Incomplete { deviation });
        }
        let diagonal = ops.iter().all(|o| (0..n).all(|i| (0..n).all(|j| i == j || o[(i, j)] == Complex64::new(0.0, 0.0))));
        Ok(MeasurementSet { ops, diagonal })
    }

    /// `D_m = diag(d_m)` from one row of diagonal entries per outcome.
    pub fn from_diagonals(rows: &[Vec<Complex64>]) -> Result<Self> {
        MeasurementSet::new(
            rows.iter().map(|r| CMatrix::from_diagonal(&CVector::from_iterator(r.len(), r.iter().cloned()))).collect(),
        )
    }

    /// Position projectors `|q_m⟩⟨q_m|`.
    pub fn projectors(m: usize) -> Self {
        let rows: Vec<Vec<Complex64>> = (0..m)
            .map(|k| (0..m).map(|i| Complex64::new(if i == k { 1.0 } else { 0.0 }, 0.0)).collect())
            .collect();
        MeasurementSet::from_diagonals(&rows).expect("projectors are complete")
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.ops[0].nrows()
    }

    pub fn completeness_defect(&self) -> f64 {
        completeness_defect(&self.ops)
    }
}

fn completeness_defect(ops: &[CMatrix]) -> f64 {
    let n = ops[0].nrows();
    let mut sum = CMatrix::zeros(n, n);
    for o in ops {
        sum += o.adjoint() * o;
    }
    max_abs(&(sum - CMatrix::identity(n, n)))
}

fn check_dims(psi: &StateVector, set: &MeasurementSet) -> Result<()> {
    if psi.dim() != set.dim() {
        return Err(Error::Dimension(format!("state has dimension {}, operators {}", psi.dim(), set.dim())));
    }
    Ok(())
}

/// `p(m) = Σ_i |D_ii|² |ψ_i|²` for a diagonal set.
pub fn measure_diagonal(psi: &StateVector, set: &MeasurementSet) -> Result<Vec<f64>> {
    check_dims(psi, set)?;
    if !set.diagonal {
        return Err(Error::param("operators", "set is not diagonal"));
    }
    let prob = psi.probabilities();
    Ok(set.ops.iter().map(|d| (0..prob.len()).map(|i| d[(i, i)].norm_sqr() * prob[i]).sum()).collect())
}

/// `O_m = e^{it₊H₊/ħ} D_m e^{-it₊H₊/ħ}`.
pub fn conjugated_operators(set: &MeasurementSet, h: &CMatrix, t: f64, hbar: f64) -> Result<MeasurementSet> {
    if h.nrows() != set.dim() {
        return Err(Error::Dimension("Hamiltonian and operators differ in size".into()));
    }
    let u = unitary(h, t, hbar)?;
    let ud = u.adjoint();
    MeasurementSet::new(set.ops.iter().map(|d| &ud * d * &u).collect())
}

/// `p(m) = ⟨ψ|O_m†O_m|ψ⟩ = ‖O_m ψ‖²`.
pub fn measure(psi: &StateVector, set: &MeasurementSet) -> Result<Vec<f64>> {
    check_dims(psi, set)?;
    Ok(set.ops.iter().map(|o| (o * &psi.amps).norm_squared()).collect())
}

/// `p(m) = tr(O_m ρ O_m†)`.
pub fn measure_mixed(rho: &DensityMatrix, set: &MeasurementSet) -> Result<Vec<f64>> {
    if rho.dim() != set.dim() {
        return Err(Error::Dimension("density matrix and operators differ in size".into()));
    }
    Ok(set.ops.iter().map(|o| (o * &rho.rho * o.adjoint()).trace().re).collect())
}

fn weights(p: &[f64]) -> Result<Vec<f64>> {
    if let Some(&bad) = p.iter().find(|&&v| v < -1e-12 || !v.is_finite()) {
        return Err(Error::NegativeProbability(bad));
    }
    Ok(p.iter().map(|&v| v.max(0.0)).collect())
}

/// One categorical draw.
pub fn sample_outcome(p: &[f64], seed: u64) -> Result<usize> {
    Ok(sample_outcomes(p, 1, seed)?[0])
}

/// `n` independent categorical draws from one seeded stream.
pub fn sample_outcomes(p: &[f64], n: usize, seed: u64) -> Result<Vec<usize>> {
    let dist = WeightedIndex::new(weights(p)?).map_err(|e| Error::param("probabilities", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| dist.sample(&mut rng)).collect())
}

fn complex_normal<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// `(B + B†)/2` with i.i.d. standard complex normal `B`.
pub fn random_hermitian<R: Rng>(m: usize, rng: &mut R) -> CMatrix {
    let b = CMatrix::from_fn(m, m, |_, _| complex_normal(rng));
    (&b + b.adjoint()).scale(0.5)
}

/// Haar-like random pure state.
pub fn random_state<R: Rng>(m: usize, rng: &mut R) -> StateVector {
    StateVector::normalized(CVector::from_fn(m, |_, _| complex_normal(rng))).expect("nonzero with probability one")
}

/// Random complete diagonal set with `outcomes` operators: per basis index
/// the weights `|D_m,ii|²` are a random point of the simplex, and each entry
/// carries a random phase.
pub fn random_diagonal_set<R: Rng>(m: usize, outcomes: usize, rng: &mut R) -> MeasurementSet {
    let mut rows = vec![vec![Complex64::new(0.0, 0.0); m]; outcomes];
    for i in 0..m {
        let w: Vec<f64> = (0..outcomes).map(|_| -rng.random::<f64>().max(f64::MIN_POSITIVE).ln()).collect();
        let total: f64 = w.iter().sum();
        for (row, wk) in rows.iter_mut().zip(&w) {
            let phase = rng.random::<f64>() * std::f64::consts::TAU;
            row[i] = Complex64::from_polar((wk / total).sqrt(), phase);
        }
    }
    MeasurementSet::from_diagonals(&rows).expect("simplex weights are complete")
}

/// Dense matrix of the grid Hamiltonian `-ħ²/2m ∇² + V`, one column per
/// node, built by applying the discrete operator to basis vectors.
pub fn grid_hamiltonian(v: &ScalarField, mass: f64, hbar: f64) -> Result<CMatrix> {
    let grid = v.grid();
    let n = grid.len();
    let mut h = CMatrix::zeros(n, n);
    let mut basis = ComplexField::constant(grid, Complex64::new(0.0, 0.0));
    for j in 0..n {
        basis.values_mut()[j] = Complex64::new(1.0, 0.0);
        let col = apply_hamiltonian(&basis, v, mass, hbar)?;
        for (i, z) in col.values().iter().enumerate() {
            h[(i, j)] = *z;
        }
        basis.values_mut()[j] = Complex64::new(0.0, 0.0);
    }
    Ok(h)
}
