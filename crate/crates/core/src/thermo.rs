//! Grand-canonical pool of hidden neurons.
//!
//! The pool exchanges neurons with a reservoir at chemical potential `μ` and
//! temperature `T`. The grand potential `Ω(μ, T)` generates the count
//! statistics: `⟨N⟩ = -∂Ω/∂μ` and `ΔN² = T |∂²Ω/∂μ²|`. Because the number of
//! active neurons is not observable, the free energy is only defined modulo
//! `μ`, which fixes the emergent Planck constant `ħ = με/2π`.

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::schrodinger::assemble;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Grand potential `Ω(μ, T)` of the hidden sector.
#[derive(Debug, Clone, PartialEq)]
pub enum GrandPotentialModel {
    /// `M` independent two-state neurons with activation energy `a`:
    /// `Ω = -T M log(1 + exp((μ - a)/T))`.
    NeuronPool { size: f64, activation: f64 },
    /// `Ω(μ)` sampled at one temperature, natural cubic spline in between.
    Tabulated(TabulatedPotential),
}

impl GrandPotentialModel {
    pub fn neuron_pool(size: f64, activation: f64) -> Result<Self> {
        if !(size > 0.0 && size.is_finite()) {
            return Err(Error::param("pool_size", format!("must be positive, got {size}")));
        }
        if !activation.is_finite() {
            return Err(Error::param("activation", "must be finite"));
        }
        Ok(GrandPotentialModel::NeuronPool { size, activation })
    }

    pub fn omega(&self, mu: f64, temperature: f64) -> Result<f64> {
        let value = match self {
            GrandPotentialModel::NeuronPool { size, activation } => {
                if !(temperature > 0.0) {
                    return Err(Error::param("temperature", format!("must be positive, got {temperature}")));
                }
                -temperature * size * softplus((mu - activation) / temperature)
            }
            GrandPotentialModel::Tabulated(tab) => {
                if temperature != tab.temperature {
                    return Err(Error::param(
                        "temperature",
                        format!("table was built at T = {}, queried at {temperature}", tab.temperature),
                    ));
                }
                tab.spline.eval(mu)?
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::NonFinite("grand potential"))
        }
    }
}

/// `log(1 + eˣ)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedPotential {
    temperature: f64,
    spline: CubicSpline,
}

impl TabulatedPotential {
    pub fn new(temperature: f64, mu: Vec<f64>, omega: Vec<f64>) -> Result<Self> {
        if !(temperature > 0.0) {
            return Err(Error::param("temperature", "must be positive"));
        }
        Ok(TabulatedPotential { temperature, spline: CubicSpline::new(mu, omega)? })
    }
}

/// Natural cubic spline through strictly increasing knots.
#[derive(Debug, Clone, PartialEq)]
struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 3 || y.len() != n {
            return Err(Error::param("table", "need at least three (μ, Ω) pairs of equal length"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("table", "μ values must be strictly increasing"));
        }
        let mut lower = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut upper = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
            lower[i] = h0;
            diag[i] = 2.0 * (h0 + h1);
            upper[i] = h1;
            rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
        }
        crate::linalg::solve_tridiagonal(&lower, &diag, &upper, &mut rhs);
        Ok(CubicSpline { x, y, m: rhs })
    }

    fn eval(&self, t: f64) -> Result<f64> {
        let n = self.x.len();
        if !(self.x[0] <= t && t <= self.x[n - 1]) {
            return Err(Error::param("mu", format!("{t} outside the tabulated range")));
        }
        let i = self.x.partition_point(|&v| v <= t).clamp(1, n - 1) - 1;
        let h = self.x[i + 1] - self.x[i];
        let (a, b) = ((self.x[i + 1] - t) / h, (t - self.x[i]) / h);
        Ok(a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0)
    }
}

/// Neuron-count statistics from derivatives of `Ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountStatistics {
    pub mean: f64,
    /// `ΔN = √(T |∂²Ω/∂μ²|)`.
    pub delta: f64,
    pub second_derivative: f64,
    /// Finite-difference step actually used.
    pub dmu: f64,
}

/// `⟨N⟩ = -∂Ω/∂μ` and `ΔN = √(T |∂²Ω/∂μ²|)` by central differences.
///
/// The textbook identity is `Var N = -T ∂²Ω/∂μ²`; the magnitude is taken so
/// the result does not depend on the sign convention. The second difference
/// is recomputed with half the step and must agree to 0.1%.
pub fn mean_and_delta_n(
    model: &GrandPotentialModel,
    mu: f64,
    temperature: f64,
    dmu: Option<f64>,
) -> Result<CountStatistics> {
    let h = dmu.unwrap_or(1e-3 * temperature.max(mu.abs()));
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::param("dmu", format!("must be positive, got {h}")));
    }
    let om = |x: f64| model.omega(x, temperature);
    let (c, p, m) = (om(mu)?, om(mu + h)?, om(mu - h)?);
    let (p2, m2) = (om(mu + 0.5 * h)?, om(mu - 0.5 * h)?);
    let d2 = (p - 2.0 * c + m) / (h * h);
    let d2_half = (p2 - 2.0 * c + m2) / (0.25 * h * h);
    let roundoff = 64.0 * f64::EPSILON * c.abs().max(p.abs()).max(m.abs()) / (0.25 * h * h);
    let change = (d2 - d2_half).abs();
    if change > 1e-3 * d2_half.abs() + roundoff {
        return Err(Error::UnstableDerivative { relative: change / d2_half.abs().max(f64::MIN_POSITIVE) });
    }
    let mean = -(p2 - m2) / h;
    Ok(CountStatistics {
        mean,
        delta: (temperature * d2_half.abs()).sqrt(),
        second_derivative: d2_half,
        dmu: h,
    })
}

/// State of the auxiliary neuron pool.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronPool {
    pub size: u32,
    pub activation: f64,
    pub temperature: f64,
    pub mu: f64,
    /// Currently active neurons.
    pub active: u32,
}

impl NeuronPool {
    pub fn new(size: u32, activation: f64, temperature: f64, mu: f64, active: u32) -> Result<Self> {
        if size == 0 {
            return Err(Error::param("pool_size", "must be at least 1"));
        }
        if active > size {
            return Err(Error::param("active", format!("{active} exceeds pool size {size}")));
        }
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::param("temperature", format!("must be positive, got {temperature}")));
        }
        Ok(NeuronPool { size, activation, temperature, mu, active })
    }

    pub fn model(&self) -> GrandPotentialModel {
        GrandPotentialModel::NeuronPool { size: self.size as f64, activation: self.activation }
    }
}

/// Metropolis birth–death chain for the active count.
///
/// Each attempt picks a neuron uniformly and proposes to flip it; activation
/// is accepted with `min(1, e^{(μ-a)/T})`, deactivation with
/// `min(1, e^{-(μ-a)/T})`. One sweep is `M` attempts; the count after each
/// sweep is returned.
pub fn sample_pool(pool: &NeuronPool, n_sweeps: usize, seed: u64) -> Result<Vec<u32>> {
    if !(pool.temperature > 0.0) {
        return Err(Error::param("temperature", "must be positive"));
    }
    if n_sweeps == 0 {
        return Err(Error::param("n_sweeps", "must be at least 1"));
    }
    let x = (pool.mu - pool.activation) / pool.temperature;
    let p_on = x.exp().min(1.0);
    let p_off = (-x).exp().min(1.0);
    let size = pool.size;
    let mut n = pool.active;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut series = Vec::with_capacity(n_sweeps);
    for _ in 0..n_sweeps {
        for _ in 0..size {
            if rng.random_range(0..size) < n {
                if rng.random::<f64>() < p_off {
                    n -= 1;
                }
            } else if rng.random::<f64>() < p_on {
                n += 1;
            }
        }
        series.push(n);
    }
    Ok(series)
}

/// Independent chains with the given seeds, returned in seed order.
pub fn sample_chains(pool: &NeuronPool, n_sweeps: usize, seeds: &[u64]) -> Result<Vec<Vec<u32>>> {
    seeds.par_iter().map(|&s| sample_pool(pool, n_sweeps, s)).collect()
}

/// Quantized free energy `F = Ω + μN`.
pub fn quantized_free_energy(omega: f64, mu: f64, n: u32) -> f64 {
    omega + mu * n as f64
}

/// Sign branch of `ħ = ±με/2π`; the negative branch is a global complex
/// conjugation of the wave function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branch {
    #[default]
    Positive,
    Negative,
}

/// Emergent Planck constant `ħ = με/2π`.
pub fn planck_from_mu(mu: f64, epsilon: f64, branch: Branch) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::NoMultivaluedStructure { mu });
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::param("epsilon", format!("must be positive, got {epsilon}")));
    }
    let hbar = mu * epsilon / std::f64::consts::TAU;
    Ok(match branch {
        Branch::Positive => hbar,
        Branch::Negative => -hbar,
    })
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive, got {v}")))
    }
}

/// Lagrange multiplier `λ = 4Dε²/(γħ²)` that makes `ħ = ε√(4D/γλ)`.
pub fn lambda_from_hbar(diffusion: f64, gamma: f64, epsilon: f64, hbar: f64) -> Result<f64> {
    positive("diffusion", diffusion)?;
    positive("gamma", gamma)?;
    positive("epsilon", epsilon)?;
    if hbar == 0.0 || !hbar.is_finite() {
        return Err(Error::param("hbar", "must be nonzero"));
    }
    Ok(4.0 * diffusion * epsilon * epsilon / (gamma * hbar * hbar))
}

/// `ħ = ε√(4D/γλ)`.
pub fn hbar_from_lambda(diffusion: f64, gamma: f64, epsilon: f64, lambda: f64) -> Result<f64> {
    positive("diffusion", diffusion)?;
    positive("gamma", gamma)?;
    positive("epsilon", epsilon)?;
    positive("lambda", lambda)?;
    Ok(epsilon * (4.0 * diffusion / (gamma * lambda)).sqrt())
}

/// Largest pointwise `|Ψ(p, F + μn) - Ψ(p, F)|`.
///
/// Vanishes (to rounding) exactly when `εμn/ħ` is a multiple of `2π`.
pub fn phase_invariance_check(
    p: &ScalarField,
    f: &ScalarField,
    mu: f64,
    epsilon: f64,
    hbar: f64,
    n: i64,
) -> Result<f64> {
    let shifted = f.map(|v| v + mu * n as f64);
    // the mass does not enter the assembled amplitude
    let a = assemble(p, f, epsilon, hbar, 1.0)?;
    let b = assemble(p, &shifted, epsilon, hbar, 1.0)?;
    Ok(a.psi()
        .values()
        .iter()
        .zip(b.psi().values())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max))
}

/// Residuals `r_t = ΔF_t - μΔN_t` of the first law at fixed `μ`, `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstLawReport {
    pub residuals: Vec<f64>,
    pub max_abs: f64,
    pub mean: f64,
    pub rms: f64,
}

impl FirstLawReport {
    /// True when the largest residual exceeds five times `noise_floor`.
    pub fn violated(&self, noise_floor: f64) -> bool {
        self.max_abs > 5.0 * noise_floor
    }
}

pub fn first_law_residual(free_energy: &[f64], counts: &[u32], mu: f64) -> Result<FirstLawReport> {
    if free_energy.len() != counts.len() {
        return Err(Error::History("F and N series differ in length".into()));
    }
    if free_energy.len() < 2 {
        return Err(Error::History("need at least two samples".into()));
    }
    let residuals: Vec<f64> = free_energy
        .windows(2)
        .zip(counts.windows(2))
        .map(|(f, n)| (f[1] - f[0]) - mu * (n[1] as f64 - n[0] as f64))
        .collect();
    let k = residuals.len() as f64;
    Ok(FirstLawReport {
        max_abs: residuals.iter().fold(0.0, |m: f64, r| m.max(r.abs())),
        mean: residuals.iter().sum::<f64>() / k,
        rms: (residuals.iter().map(|r| r * r).sum::<f64>() / k).sqrt(),
        residuals,
    })
}

/// Entropy added by count fluctuations, `ΔS ≈ 2ΔN` (an order-of-magnitude
/// estimate).
pub fn added_entropy(delta_n: f64) -> Result<f64> {
    if !(delta_n >= 0.0) {
        return Err(Error::param("delta_n", format!("must be non-negative, got {delta_n}")));
    }
    Ok(2.0 * delta_n)
}
