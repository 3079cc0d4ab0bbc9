//! Entropy, entropy production and the action functional of the coupled
//! density/free-energy system, with the residuals of its stationarity
//! conditions.
//!
//! Throughout, `√p` and `log p` are evaluated on `max(p, 10⁻¹²)`, and
//! pointwise residuals are masked where `p < 10⁻⁸ max p`. Time derivatives
//! are central differences, second-order one-sided at the two ends; time
//! integrals use the trapezoid rule.

use crate::error::{Error, Result};
use crate::grid::{gradient, integrate, laplacian, Grid, ScalarField};
use crate::schrodinger::{decompose, wrap, WaveFunction};
use crate::thermo::lambda_from_hbar;
use crate::{DENSITY_FLOOR, MASK_FRACTION};

/// Constants of the action functional.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionConfig {
    pub lambda: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub diffusion: f64,
    pub hbar: f64,
    pub potential: ScalarField,
}

impl ActionConfig {
    /// Derives `λ = 4Dε²/(γħ²)` from `ħ`.
    pub fn from_hbar(gamma: f64, diffusion: f64, epsilon: f64, hbar: f64, potential: ScalarField) -> Result<Self> {
        let lambda = lambda_from_hbar(diffusion, gamma, epsilon, hbar)?;
        Ok(ActionConfig { lambda, epsilon, gamma, diffusion, hbar, potential })
    }

    /// Uses both `λ` and `ħ`; they must satisfy `λ = 4Dε²/(γħ²)` to 1e-10.
    pub fn new(gamma: f64, diffusion: f64, epsilon: f64, lambda: f64, hbar: f64, potential: ScalarField) -> Result<Self> {
        let expected = lambda_from_hbar(diffusion, gamma, epsilon, hbar)?;
        if (lambda - expected).abs() > 1e-10 * expected {
            return Err(Error::param("lambda", format!("{lambda} is inconsistent with ħ = {hbar} (expected {expected})")));
        }
        Ok(ActionConfig { lambda, epsilon, gamma, diffusion, hbar, potential })
    }

    /// `m = ε/2γ`.
    pub fn mass(&self) -> f64 {
        self.epsilon / (2.0 * self.gamma)
    }
}

/// Uniformly sampled series of `(p, F)` on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryPF {
    grid: Grid,
    t0: f64,
    dt: f64,
    p: Vec<ScalarField>,
    f: Vec<ScalarField>,
}

const HISTORY_NORM_TOLERANCE: f64 = 1e-8;

impl HistoryPF {
    pub fn new(t0: f64, dt: f64, p: Vec<ScalarField>, f: Vec<ScalarField>) -> Result<Self> {
        if p.len() != f.len() {
            return Err(Error::History(format!("{} densities but {} free energies", p.len(), f.len())));
        }
        if p.len() < 3 {
            return Err(Error::History("need at least three time slices".into()));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::History(format!("time step must be positive, got {dt}")));
        }
        let grid = p[0].grid().clone();
        for (a, b) in p.iter().zip(&f) {
            grid.check(a.grid(), "history density")?;
            grid.check(b.grid(), "history free energy")?;
            a.check_density(HISTORY_NORM_TOLERANCE)?;
        }
        Ok(HistoryPF { grid, t0, dt, p, f })
    }

    /// Builds the history of `p = |ψ|²` and `F = ħθ/ε` from evolution
    /// snapshots. The phase is unwrapped in space on the first slice and then
    /// node by node in time, so the phase change per sample must stay below π.
    pub fn from_wavefunctions(states: &[WaveFunction], times: &[f64], epsilon: f64) -> Result<Self> {
        if states.len() != times.len() || states.len() < 3 {
            return Err(Error::History("need at least three snapshots with matching times".into()));
        }
        let dt = times[1] - times[0];
        if times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs().max(1.0)) {
            return Err(Error::History("snapshots are not uniformly spaced in time".into()));
        }
        let hbar = states[0].hbar();
        let scale = hbar / epsilon;
        let mut theta = decompose(&states[0], epsilon)?.unwrapped_phase.into_values();
        let grid = states[0].grid().clone();
        let mut p = Vec::with_capacity(states.len());
        let mut f = Vec::with_capacity(states.len());
        for (n, s) in states.iter().enumerate() {
            if n > 0 {
                for (th, z) in theta.iter_mut().zip(s.psi().values()) {
                    *th += wrap(z.arg() - *th);
                }
            }
            p.push(s.density());
            f.push(ScalarField::new(grid.clone(), theta.iter().map(|t| scale * t).collect())?);
        }
        HistoryPF::new(times[0], dt, p, f)
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|n| self.t0 + n as f64 * self.dt).collect()
    }

    pub fn density(&self, n: usize) -> &ScalarField {
        &self.p[n]
    }

    pub fn free_energy(&self, n: usize) -> &ScalarField {
        &self.f[n]
    }
}

/// Pointwise time derivative of a series at slice `n`.
fn time_derivative(series: &[ScalarField], dt: f64, n: usize) -> ScalarField {
    let last = series.len() - 1;
    let (a, b, c, w) = if n == 0 {
        (&series[0], &series[1], &series[2], [-1.5, 2.0, -0.5])
    } else if n == last {
        (&series[last - 2], &series[last - 1], &series[last], [0.5, -2.0, 1.5])
    } else {
        (&series[n - 1], &series[n], &series[n + 1], [-0.5, 0.0, 0.5])
    };
    let vals = (0..a.values().len())
        .map(|i| (w[0] * a.values()[i] + w[1] * b.values()[i] + w[2] * c.values()[i]) / dt)
        .collect();
    ScalarField::new(a.grid().clone(), vals).expect("slices share a grid")
}

fn trapezoid(values: &[f64], dt: f64) -> f64 {
    let n = values.len();
    dt * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1]))
}

fn mask(p: &ScalarField) -> Vec<bool> {
    let cut = MASK_FRACTION * p.max();
    p.values().iter().map(|&v| v < cut).collect()
}

/// Differential Shannon entropy `S = -∫p log p`.
pub fn shannon_entropy(p: &ScalarField) -> Result<f64> {
    p.check_density(HISTORY_NORM_TOLERANCE)?;
    Ok(-integrate(&p.map(|v| if v > 0.0 { v * v.max(DENSITY_FLOOR).ln() } else { 0.0 })))
}

/// `(D∫p|∇log p|², γ∫p ∇log p·∇F)`; the entropy production is their
/// difference. Written through `∇log p` so that the two terms coincide to
/// rounding on the discrete stationary density `p ∝ exp(γF/D)`.
pub fn entropy_production_terms(p: &ScalarField, f: &ScalarField, diffusion: f64, gamma: f64) -> Result<(f64, f64)> {
    p.grid().check(f.grid(), "entropy production")?;
    let grad_log = gradient(&p.map(|v| v.max(DENSITY_FLOOR).ln()));
    let grad_f = gradient(f);
    let mut fisher = vec![0.0; p.values().len()];
    let mut learning = vec![0.0; p.values().len()];
    for (k, gl) in grad_log.components().iter().enumerate() {
        for i in 0..fisher.len() {
            let pv = p.values()[i];
            fisher[i] += pv * gl[i] * gl[i];
            learning[i] += pv * gl[i] * grad_f.component(k)[i];
        }
    }
    let g = p.grid().clone();
    Ok((
        diffusion * integrate(&ScalarField::new(g.clone(), fisher)?),
        gamma * integrate(&ScalarField::new(g, learning)?),
    ))
}

/// Fisher form of the diffusion production, `-4D∫√p ∇²√p`.
pub fn fisher_production(p: &ScalarField, diffusion: f64) -> f64 {
    let s = p.sqrt_floored(DENSITY_FLOOR);
    let lap = laplacian(&s);
    -4.0 * diffusion * integrate(&s.zip_map(&lap, |a, b| a * b).expect("same grid"))
}

/// `V = -⟨ε ∂F/∂t⟩`, averaging the central differences over the interior
/// slices.
pub fn potential_from_history(hist: &HistoryPF, epsilon: f64) -> ScalarField {
    let n = hist.len();
    let mut acc = vec![0.0; hist.grid.len()];
    for t in 1..n - 1 {
        let d = time_derivative(&hist.f, hist.dt, t);
        acc.iter_mut().zip(d.values()).for_each(|(a, v)| *a -= epsilon * v);
    }
    let count = (n - 2) as f64;
    ScalarField::new(hist.grid.clone(), acc.into_iter().map(|a| a / count).collect()).expect("history grid")
}

fn check_config(hist: &HistoryPF, cfg: &ActionConfig) -> Result<()> {
    hist.grid.check(cfg.potential.grid(), "action potential")
}

/// Real form of the action:
/// `(λ/ε) ∫dt ∫ √p (-ħ²/2m ∇² + ∂(εF)/∂t + (∇εF)²/2m + V) √p`.
pub fn action_real(hist: &HistoryPF, cfg: &ActionConfig) -> Result<f64> {
    check_config(hist, cfg)?;
    let m = cfg.mass();
    let eps = cfg.epsilon;
    let kin = cfg.hbar * cfg.hbar / (2.0 * m);
    let per_slice: Vec<f64> = (0..hist.len())
        .map(|n| {
            let p = &hist.p[n];
            let s = p.sqrt_floored(DENSITY_FLOOR);
            let lap = laplacian(&s);
            let dft = time_derivative(&hist.f, hist.dt, n);
            let grad_f = gradient(&hist.f[n]).norm_sqr();
            let vals = (0..p.values().len())
                .map(|i| {
                    let pv = p.values()[i];
                    -kin * s.values()[i] * lap.values()[i]
                        + pv * (eps * dft.values()[i] + eps * eps * grad_f.values()[i] / (2.0 * m) + cfg.potential.values()[i])
                })
                .collect();
            integrate(&ScalarField::new(hist.grid.clone(), vals).expect("history grid"))
        })
        .collect();
    Ok(cfg.lambda / eps * trapezoid(&per_slice, hist.dt))
}

/// Complex form of the action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexAction {
    pub real: f64,
    /// `-(λ/ε)(ħ/2)∫dt ∫∂p/∂t`; vanishes when the normalization is conserved.
    pub imag: f64,
}

/// `(λ/ε) ∫dt ∫ p (ħ²/2m ∇φ*·∇φ - iħ ∂φ/∂t + V)` with
/// `φ = log√p + iε(F + μn)/ħ`.
pub fn action_complex(hist: &HistoryPF, cfg: &ActionConfig, mu: f64, n: i64) -> Result<ComplexAction> {
    check_config(hist, cfg)?;
    let norms: Vec<f64> = hist.p.iter().map(integrate).collect();
    if norms.iter().any(|v| (v - norms[0]).abs() > HISTORY_NORM_TOLERANCE) {
        return Err(Error::History("normalization drifts along the history".into()));
    }
    let shift = mu * n as f64;
    let shifted: Vec<ScalarField> = hist.f.iter().map(|f| f.map(|v| v + shift)).collect();
    let m = cfg.mass();
    let eps = cfg.epsilon;
    let kin = cfg.hbar * cfg.hbar / (2.0 * m);
    let mut re = Vec::with_capacity(hist.len());
    let mut im = Vec::with_capacity(hist.len());
    for t in 0..hist.len() {
        let p = &hist.p[t];
        let grad_s = gradient(&p.sqrt_floored(DENSITY_FLOOR)).norm_sqr();
        let grad_f = gradient(&shifted[t]).norm_sqr();
        let dft = time_derivative(&shifted, hist.dt, t);
        let dpt = time_derivative(&hist.p, hist.dt, t);
        // p |∇log√p|² = |∇√p|²
        let vals = (0..p.values().len())
            .map(|i| {
                let pv = p.values()[i];
                kin * grad_s.values()[i]
                    + pv * (eps * eps * grad_f.values()[i] / (2.0 * m) + eps * dft.values()[i] + cfg.potential.values()[i])
            })
            .collect();
        re.push(integrate(&ScalarField::new(hist.grid.clone(), vals)?));
        im.push(-0.5 * cfg.hbar * integrate(&dpt));
    }
    let scale = cfg.lambda / eps;
    Ok(ComplexAction { real: scale * trapezoid(&re, hist.dt), imag: scale * trapezoid(&im, hist.dt) })
}

/// Shannon entropy of every slice and its rate of change.
pub fn entropy_history(hist: &HistoryPF) -> Result<(Vec<f64>, Vec<f64>)> {
    let s: Vec<f64> = hist.p.iter().map(shannon_entropy).collect::<Result<_>>()?;
    let fields: Vec<ScalarField> =
        s.iter().map(|&v| ScalarField::constant(&hist.grid, v)).collect();
    let rate = (0..s.len()).map(|n| time_derivative(&fields, hist.dt, n).values()[0]).collect();
    Ok((s, rate))
}

/// Residuals of the three stationarity conditions of the action.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalResiduals {
    /// Entropy conservation: `∫dt dS/dt` over the history.
    pub entropy: f64,
    /// `-(ħ/m)∫dt∫√p ∇²√p`, reported for reference; it equals `(ħ/m)∫dt ∫|∇√p|²`
    /// up to boundary terms and does not vanish.
    pub fisher_term: f64,
    /// Continuity `-∂p/∂t - (1/m)∇·(p ∇εF)` per slice (masked nodes hold 0).
    pub continuity: Vec<ScalarField>,
    /// Hamilton–Jacobi–Bohm `-(ħ²/2m)∇²√p/√p + ∂(εF)/∂t + |∇εF|²/2m + V`.
    pub hamilton_jacobi: Vec<ScalarField>,
    /// Largest |continuity| over interior slices and unmasked nodes.
    pub max_continuity: f64,
    /// Largest |Hamilton–Jacobi| over interior slices and unmasked nodes.
    pub max_hamilton_jacobi: f64,
    /// Density-weighted RMS `√(∫p r²)` averaged over interior slices.
    pub rms_continuity: f64,
    pub rms_hamilton_jacobi: f64,
}

pub fn variational_residuals(hist: &HistoryPF, cfg: &ActionConfig) -> Result<VariationalResiduals> {
    check_config(hist, cfg)?;
    let m = cfg.mass();
    let eps = cfg.epsilon;
    let kin = cfg.hbar * cfg.hbar / (2.0 * m);
    let (_, rate) = entropy_history(hist)?;
    let entropy = trapezoid(&rate, hist.dt);
    let mut fisher_slices = Vec::with_capacity(hist.len());
    let mut continuity = Vec::with_capacity(hist.len());
    let mut hamilton_jacobi = Vec::with_capacity(hist.len());
    let (mut max_c, mut max_h, mut rms_c, mut rms_h) = (0.0f64, 0.0f64, 0.0, 0.0);
    let last = hist.len() - 1;
    for t in 0..hist.len() {
        let p = &hist.p[t];
        let masked = mask(p);
        let s = p.sqrt_floored(DENSITY_FLOOR);
        let lap_s = laplacian(&s);
        fisher_slices.push(-(cfg.hbar / m) * integrate(&s.zip_map(&lap_s, |a, b| a * b)?));
        let dpt = time_derivative(&hist.p, hist.dt, t);
        let dft = time_derivative(&hist.f, hist.dt, t);
        let grad_f = gradient(&hist.f[t]);
        let flux = grad_f.scaled(eps / m);
        let mut div = vec![0.0; p.values().len()];
        for k in 0..hist.grid.dims() {
            let pf = ScalarField::new(
                hist.grid.clone(),
                flux.component(k).iter().zip(p.values()).map(|(u, pv)| u * pv).collect(),
            )?;
            div.iter_mut().zip(pf.derivative(k).values()).for_each(|(d, v)| *d += v);
        }
        let gf2 = grad_f.norm_sqr();
        let mut rc = vec![0.0; div.len()];
        let mut rh = vec![0.0; div.len()];
        for i in 0..div.len() {
            if masked[i] {
                continue;
            }
            rc[i] = -dpt.values()[i] - div[i];
            rh[i] = -kin * lap_s.values()[i] / s.values()[i]
                + eps * dft.values()[i]
                + eps * eps * gf2.values()[i] / (2.0 * m)
                + cfg.potential.values()[i];
        }
        if t > 0 && t < last {
            max_c = rc.iter().fold(max_c, |a, v| a.max(v.abs()));
            max_h = rh.iter().fold(max_h, |a, v| a.max(v.abs()));
            let wc = ScalarField::new(hist.grid.clone(), rc.iter().zip(p.values()).map(|(r, pv)| pv * r * r).collect())?;
            let wh = ScalarField::new(hist.grid.clone(), rh.iter().zip(p.values()).map(|(r, pv)| pv * r * r).collect())?;
            rms_c += integrate(&wc).sqrt();
            rms_h += integrate(&wh).sqrt();
        }
        continuity.push(ScalarField::new(hist.grid.clone(), rc)?);
        hamilton_jacobi.push(ScalarField::new(hist.grid.clone(), rh)?);
    }
    let interior = (hist.len() - 2) as f64;
    Ok(VariationalResiduals {
        entropy,
        fisher_term: trapezoid(&fisher_slices, hist.dt),
        continuity,
        hamilton_jacobi,
        max_continuity: max_c,
        max_hamilton_jacobi: max_h,
        rms_continuity: rms_c / interior,
        rms_hamilton_jacobi: rms_h / interior,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;
    use std::f64::consts::{E, TAU};

    fn gaussian(g: &Grid, sigma: f64) -> ScalarField {
        ScalarField::from_fn(g, |q| (-q[0] * q[0] / (2.0 * sigma * sigma)).exp()).normalized().unwrap()
    }

    #[test]
    fn entropy_of_reference_densities() {
        let g = Grid::line(0.0, 2.0, 101, Boundary::Reflecting).unwrap();
        let u = ScalarField::constant(&g, 0.5);
        assert!((shannon_entropy(&u).unwrap() - 2f64.ln()).abs() < 1e-10);
        let g = Grid::line(-8.0, 8.0, 801, Boundary::Reflecting).unwrap();
        let s = shannon_entropy(&gaussian(&g, 1.0)).unwrap();
        assert!((s - 0.5 * (TAU * E).ln()).abs() < 1e-6, "{s}");
        assert!(shannon_entropy(&u.map(|v| 2.0 * v)).is_err());
    }

    #[test]
    fn entropy_is_invariant_under_mirror_relabeling() {
        let g = Grid::line(-3.0, 3.0, 61, Boundary::Reflecting).unwrap();
        let p = ScalarField::from_fn(&g, |q| (q[0] + 0.3 * q[0].powi(3) * (-q[0] * q[0]).exp() + 4.0) / 10.0)
            .normalized()
            .unwrap();
        let mut rev = p.values().to_vec();
        rev.reverse();
        let mirrored = ScalarField::new(g, rev).unwrap();
        assert!((shannon_entropy(&p).unwrap() - shannon_entropy(&mirrored).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn production_terms() {
        let g = Grid::line(-6.0, 6.0, 241, Boundary::Reflecting).unwrap();
        let u = ScalarField::constant(&g, 1.0 / 12.0);
        let f = ScalarField::from_fn(&g, |q| -0.5 * q[0] * q[0]);
        assert_eq!(entropy_production_terms(&u, &f, 0.3, 1.0).unwrap(), (0.0, 0.0));
        let p = gaussian(&g, 1.0);
        let (d, l) = entropy_production_terms(&p, &ScalarField::constant(&g, 2.0), 0.3, 1.0).unwrap();
        assert_eq!(l, 0.0);
        assert!(d > 0.0);
        let (gamma, diff) = (1.0, 0.25);
        let stationary = f.map(|v| (gamma * v / diff).exp()).normalized().unwrap();
        let (d, l) = entropy_production_terms(&stationary, &f, diff, gamma).unwrap();
        assert!((d - l).abs() <= 1e-8 * d, "{d} {l}");
    }

    #[test]
    fn fisher_of_unit_gaussian() {
        let g = Grid::line(-10.0, 10.0, 2001, Boundary::Reflecting).unwrap();
        let p = gaussian(&g, 1.0);
        assert!((fisher_production(&p, 1.0) - 1.0).abs() < 1e-4);
        let (d, _) = entropy_production_terms(&p, &ScalarField::constant(&g, 0.0), 1.0, 1.0).unwrap();
        assert!((d - 1.0).abs() < 1e-4);
        assert!(fisher_production(&ScalarField::constant(&g, 0.05), 1.0).abs() < 1e-15);
    }

    fn history_of(g: &Grid, f: impl Fn(f64, &[f64]) -> f64, dt: f64, n: usize) -> HistoryPF {
        let p = ScalarField::constant(g, 1.0 / g.volume());
        let fs = (0..n).map(|k| ScalarField::from_fn(g, |q| f(k as f64 * dt, q))).collect();
        HistoryPF::new(0.0, dt, vec![p; n], fs).unwrap()
    }

    #[test]
    fn potentials_from_linear_histories() {
        let g = Grid::line(0.0, TAU, 32, Boundary::Periodic).unwrap();
        let eps = 0.5;
        let v = potential_from_history(&history_of(&g, |t, q| -1.7 * t / eps + q[0].sin(), 0.1, 5), eps);
        assert!(v.values().iter().all(|x| (x - 1.7).abs() < 1e-12));
        let v = potential_from_history(&history_of(&g, |_, q| q[0].cos(), 0.1, 5), eps);
        assert!(v.values().iter().all(|x| x.abs() < 1e-15));
        let v = potential_from_history(&history_of(&g, |t, q| -t * (1.0 + q[0].sin()) / eps, 0.1, 7), eps);
        for (x, q) in v.values().iter().zip(0..32) {
            let w = 1.0 + (q as f64 * TAU / 32.0).sin();
            assert!((x - w).abs() < 1e-10);
        }
    }

    #[test]
    fn history_validation() {
        let g = Grid::line(0.0, 1.0, 8, Boundary::Periodic).unwrap();
        let p = ScalarField::constant(&g, 1.0);
        assert!(HistoryPF::new(0.0, 0.1, vec![p.clone(); 2], vec![p.clone(); 2]).is_err());
        assert!(HistoryPF::new(0.0, 0.1, vec![p.clone(); 3], vec![p.clone(); 4]).is_err());
        assert!(HistoryPF::new(0.0, 0.0, vec![p.clone(); 3], vec![p.clone(); 3]).is_err());
        assert!(HistoryPF::new(0.0, 0.1, vec![p.map(|v| 2.0 * v); 3], vec![p; 3]).is_err());
    }

    #[test]
    fn uniform_static_history_has_zero_action_and_residuals() {
        let g = Grid::line(0.0, 2.0, 40, Boundary::Periodic).unwrap();
        let hist = history_of(&g, |_, _| 0.0, 0.1, 6);
        let cfg = ActionConfig::from_hbar(0.5, 0.25, 1.0, 1.0, ScalarField::constant(&g, 0.0)).unwrap();
        assert_eq!(action_real(&hist, &cfg).unwrap(), 0.0);
        let c = action_complex(&hist, &cfg, TAU, 3).unwrap();
        assert_eq!((c.real, c.imag), (0.0, 0.0));
        let r = variational_residuals(&hist, &cfg).unwrap();
        assert!(r.entropy.abs() < 1e-15);
        assert_eq!(r.max_continuity, 0.0);
        assert_eq!(r.max_hamilton_jacobi, 0.0);
    }

    #[test]
    fn action_scales_with_lambda_and_ignores_constant_shifts() {
        let g = Grid::line(0.0, TAU, 64, Boundary::Periodic).unwrap();
        let p = ScalarField::from_fn(&g, |q| 1.0 + 0.5 * q[0].cos()).normalized().unwrap();
        let fs: Vec<ScalarField> = (0..5).map(|n| ScalarField::from_fn(&g, |q| (q[0] + 0.1 * n as f64).sin() - 0.3 * n as f64)).collect();
        let hist = HistoryPF::new(0.0, 0.1, vec![p.clone(); 5], fs.clone()).unwrap();
        let shifted = HistoryPF::new(0.0, 0.1, vec![p; 5], fs.iter().map(|f| f.map(|v| v + 42.0)).collect()).unwrap();
        let v = ScalarField::from_fn(&g, |q| q[0].cos());
        let cfg = ActionConfig::from_hbar(0.5, 0.25, 1.0, 1.0, v).unwrap();
        let mut doubled = cfg.clone();
        doubled.lambda *= 2.0;
        let a = action_real(&hist, &cfg).unwrap();
        assert!((action_real(&hist, &doubled).unwrap() - 2.0 * a).abs() < 1e-13 * a.abs());
        assert!((action_real(&shifted, &cfg).unwrap() - a).abs() < 1e-12 * a.abs().max(1.0));
        assert!(ActionConfig::new(0.5, 0.25, 1.0, 3.0, 1.0, ScalarField::constant(&g, 0.0)).is_err());
        assert!((cfg.mass() - 1.0).abs() < 1e-15);
    }
}
