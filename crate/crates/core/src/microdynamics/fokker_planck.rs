use super::{DriftDiffusionParams, FreeEnergyModel};
use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid, ScalarField, VectorField};
use crate::linalg::{solve_cyclic, solve_tridiagonal};

/// Time-stepping scheme of the grid solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Forward Euler; requires `Σ_k D dt / h_k² ≤ 1/4`.
    #[default]
    Explicit,
    /// Backward Euler with one line solve per axis; unconditionally stable.
    Implicit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FokkerPlanckConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub scheme: Scheme,
    /// Store every `record_every`-th step (the initial field is always stored).
    pub record_every: usize,
}

impl FokkerPlanckConfig {
    pub fn new(dt: f64, n_steps: usize, scheme: Scheme) -> Self {
        FokkerPlanckConfig { dt, n_steps, scheme, record_every: n_steps.max(1) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FokkerPlanckRun {
    pub times: Vec<f64>,
    pub frames: Vec<ScalarField>,
    /// Steps in which negative density had to be clipped.
    pub clipped: usize,
}

impl FokkerPlanckRun {
    pub fn last(&self) -> &ScalarField {
        self.frames.last().expect("a run always holds the initial field")
    }
}

const EXPLICIT_LIMIT: f64 = 0.25;
const NEGATIVE_TOLERANCE: f64 = 1e-12;

/// Bernoulli function `x / (eˣ - 1)`.
fn bernoulli(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - 0.5 * x
    } else {
        x / x.exp_m1()
    }
}

/// Face fluxes `G = α p_i - β p_j` from node `i` to its forward neighbor `j`
/// along each axis (exponentially fitted, exact for `p ∝ exp(γF/D)`).
struct Faces {
    alpha: Vec<Vec<f64>>,
    beta: Vec<Vec<f64>>,
}

impl Faces {
    fn new(grid: &Grid, f: &[f64], params: &DriftDiffusionParams) -> Faces {
        let (g, d) = (params.gamma, params.diffusion);
        let mut alpha = Vec::with_capacity(grid.dims());
        let mut beta = Vec::with_capacity(grid.dims());
        for k in 0..grid.dims() {
            let h = grid.spacing(k);
            let mut a = vec![0.0; grid.len()];
            let mut b = vec![0.0; grid.len()];
            for i in 0..grid.len() {
                let Some(j) = grid.neighbor(i, k, true) else { continue };
                let df = f[j] - f[i];
                if d > 0.0 {
                    let w = g * df / d;
                    a[i] = d / h * bernoulli(-w);
                    b[i] = d / h * bernoulli(w);
                } else {
                    let v = g * df / h;
                    a[i] = v.max(0.0);
                    b[i] = (-v).max(0.0);
                }
            }
            alpha.push(a);
            beta.push(b);
        }
        Faces { alpha, beta }
    }

    /// Largest outflow rate `Σ (outgoing coefficients) / w` over all nodes.
    fn max_outflow(&self, grid: &Grid) -> f64 {
        (0..grid.len())
            .map(|i| {
                (0..grid.dims())
                    .map(|k| {
                        let w = grid.axis(k).weight(grid.index_along(i, k));
                        let fwd = self.alpha[k][i];
                        let back = grid.neighbor(i, k, false).map_or(0.0, |l| self.beta[k][l]);
                        (fwd + back) / w
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

fn absorbing_nodes(grid: &Grid) -> Vec<usize> {
    (0..grid.len())
        .filter(|&i| {
            grid.axes().iter().enumerate().any(|(k, a)| {
                let j = grid.index_along(i, k);
                a.boundary == Boundary::Absorbing && (j == 0 || j + 1 == a.points)
            })
        })
        .collect()
}

fn explicit_step(grid: &Grid, faces: &Faces, p: &mut [f64], dt: f64) {
    let mut dp = vec![0.0; p.len()];
    for k in 0..grid.dims() {
        let axis = grid.axis(k);
        for i in 0..p.len() {
            let Some(j) = grid.neighbor(i, k, true) else { continue };
            let flux = faces.alpha[k][i] * p[i] - faces.beta[k][i] * p[j];
            dp[i] -= flux / axis.weight(grid.index_along(i, k));
            dp[j] += flux / axis.weight(grid.index_along(j, k));
        }
    }
    p.iter_mut().zip(&dp).for_each(|(v, d)| *v += dt * d);
}

fn implicit_step(grid: &Grid, faces: &Faces, p: &mut [f64], dt: f64) {
    for k in 0..grid.dims() {
        let axis = grid.axis(k);
        let n = axis.points;
        let s = grid.stride(k);
        let periodic = axis.is_periodic();
        let absorbing = axis.boundary == Boundary::Absorbing;
        let (mut lo, mut di, mut up, mut rhs) =
            (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        // every line along axis k starts at a node whose index along k is 0
        for start in (0..grid.len()).filter(|&f| grid.index_along(f, k) == 0) {
            for i in 0..n {
                let flat = start + i * s;
                let w = axis.weight(i);
                let back = if i > 0 { Some(flat - s) } else if periodic { Some(flat + (n - 1) * s) } else { None };
                let (al, bl) = back.map_or((0.0, 0.0), |b| (faces.alpha[k][b], faces.beta[k][b]));
                let (ar, br) = (faces.alpha[k][flat], faces.beta[k][flat]);
                lo[i] = -dt * al / w;
                up[i] = -dt * br / w;
                di[i] = 1.0 + dt * (bl + ar) / w;
                rhs[i] = p[flat];
                if absorbing && (i == 0 || i + 1 == n) {
                    lo[i] = 0.0;
                    up[i] = 0.0;
                    di[i] = 1.0;
                    rhs[i] = 0.0;
                }
            }
            if periodic {
                solve_cyclic(&lo, &di, &up, &mut rhs);
            } else {
                solve_tridiagonal(&lo, &di, &up, &mut rhs);
            }
            for (i, v) in rhs.iter().enumerate() {
                p[start + i * s] = *v;
            }
        }
    }
}

/// Integrates `∂p/∂t = Σ_k ∂_k(D ∂_k p - γ(∂_k F) p)` on the grid of `p0`.
///
/// Conservative finite volumes with exponentially fitted fluxes: the nodal
/// `exp(γF/D)` is an exact fixed point for time-independent `F`. Absorbing
/// boundary nodes are held at zero.
pub fn evolve_fokker_planck(
    p0: &ScalarField,
    model: &FreeEnergyModel,
    params: &DriftDiffusionParams,
    cfg: &FokkerPlanckConfig,
) -> Result<FokkerPlanckRun> {
    let grid = p0.grid().clone();
    let dt = cfg.dt;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("must be positive, got {dt}")));
    }
    if cfg.record_every == 0 {
        return Err(Error::param("record_every", "must be at least 1"));
    }
    p0.check_density(1e-9)?;
    if cfg.scheme == Scheme::Explicit {
        let courant: f64 =
            grid.axes().iter().map(|a| params.diffusion * dt / (a.spacing() * a.spacing())).sum();
        if courant > EXPLICIT_LIMIT {
            return Err(Error::Unstable(format!(
                "Σ D dt/h² = {courant:.4} exceeds {EXPLICIT_LIMIT}; reduce dt or use the implicit scheme"
            )));
        }
    }
    let pinned = absorbing_nodes(&grid);
    let mut p = p0.values().to_vec();
    pinned.iter().for_each(|&i| p[i] = 0.0);

    let faces_at = |t: f64| -> Result<Faces> {
        let f = model.on_grid(&grid, t)?;
        if f.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("free energy"));
        }
        Ok(Faces::new(&grid, f.values(), params))
    };
    let static_model = model.is_static();
    let mut faces = faces_at(0.0)?;
    let check_outflow = |faces: &Faces| -> Result<()> {
        if cfg.scheme == Scheme::Explicit {
            let rate = faces.max_outflow(&grid) * dt;
            if rate > 1.0 {
                return Err(Error::Unstable(format!("outflow fraction per step {rate:.3} exceeds 1")));
            }
        }
        Ok(())
    };
    check_outflow(&faces)?;

    let weights = grid.weights();
    let mut run = FokkerPlanckRun {
        times: vec![0.0],
        frames: vec![ScalarField::new(grid.clone(), p.clone())?],
        clipped: 0,
    };
    for step in 1..=cfg.n_steps {
        let t_prev = (step - 1) as f64 * dt;
        let t = step as f64 * dt;
        match cfg.scheme {
            Scheme::Explicit => {
                if !static_model {
                    faces = faces_at(t_prev)?;
                    check_outflow(&faces)?;
                }
                explicit_step(&grid, &faces, &mut p, dt);
            }
            Scheme::Implicit => {
                if !static_model {
                    faces = faces_at(t)?;
                }
                implicit_step(&grid, &faces, &mut p, dt);
            }
        }
        pinned.iter().for_each(|&i| p[i] = 0.0);
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("density"));
        }
        if p.iter().any(|&v| v < -NEGATIVE_TOLERANCE) {
            let mass: f64 = p.iter().zip(&weights).map(|(v, w)| v * w).sum();
            p.iter_mut().for_each(|v| *v = v.max(0.0));
            let clipped: f64 = p.iter().zip(&weights).map(|(v, w)| v * w).sum();
            p.iter_mut().for_each(|v| *v *= mass / clipped);
            run.clipped += 1;
        }
        if step % cfg.record_every == 0 || step == cfg.n_steps {
            run.times.push(t);
            run.frames.push(ScalarField::new(grid.clone(), p.clone())?);
        }
    }
    Ok(run)
}

/// Probability current `J_k = D ∂_k p - γ(∂_k F) p` evaluated on the faces
/// of the finite-volume scheme; component `k` at node `i` holds the face
/// between `i` and its forward neighbor (zero past a non-periodic end).
/// With this sign `∂p/∂t = ∇·J`.
pub fn probability_current(
    p: &ScalarField,
    model: &FreeEnergyModel,
    params: &DriftDiffusionParams,
    t: f64,
) -> Result<VectorField> {
    let grid = p.grid();
    let f = model.on_grid(grid, t)?;
    let faces = Faces::new(grid, f.values(), params);
    let pv = p.values();
    let components = (0..grid.dims())
        .map(|k| {
            (0..grid.len())
                .map(|i| match grid.neighbor(i, k, true) {
                    Some(j) => faces.beta[k][i] * pv[j] - faces.alpha[k][i] * pv[i],
                    None => 0.0,
                })
                .collect()
        })
        .collect();
    VectorField::new(grid.clone(), components)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::integrate;
    use crate::microdynamics::stationary_density;

    fn gaussian(grid: &Grid, centre: f64, sigma: f64) -> ScalarField {
        ScalarField::from_fn(grid, |q| (-(q[0] - centre).powi(2) / (2.0 * sigma * sigma)).exp())
            .normalized()
            .unwrap()
    }

    fn variance(p: &ScalarField) -> f64 {
        let g = p.grid();
        let m = integrate(&ScalarField::from_fn(g, |q| q[0]).zip_map(p, |x, v| x * v).unwrap());
        integrate(&ScalarField::from_fn(g, |q| q[0] * q[0]).zip_map(p, |x, v| x * v).unwrap()) - m * m
    }

    #[test]
    fn bernoulli_is_smooth_at_zero() {
        assert_eq!(bernoulli(0.0), 1.0);
        assert!((bernoulli(1e-6) - bernoulli(1e-9)).abs() < 1e-6);
        assert!((bernoulli(1.0) - 1.0 / (std::f64::consts::E - 1.0)).abs() < 1e-15);
        assert!(bernoulli(800.0) == 0.0 && (bernoulli(-800.0) - 800.0).abs() < 1e-9);
    }

    #[test]
    fn stationary_density_is_an_exact_fixed_point() {
        let g = Grid::line(-4.0, 4.0, 81, Boundary::Reflecting).unwrap();
        let params = DriftDiffusionParams::new(1.0, 0.25, 1.0).unwrap();
        let model = FreeEnergyModel::Quadratic { curvature: -1.0 };
        let p = stationary_density(&g, &model, &params, 0.0).unwrap();
        let j = probability_current(&p, &model, &params, 0.0).unwrap();
        assert!(j.max_abs() < 1e-12 * p.max());
        for scheme in [Scheme::Explicit, Scheme::Implicit] {
            let run = evolve_fokker_planck(&p, &model, &params, &FokkerPlanckConfig::new(0.01, 50, scheme))
                .unwrap();
            let drift = run.last().values().iter().zip(p.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(drift < 1e-12, "{scheme:?}: {drift}");
        }
    }

    #[test]
    fn mass_is_conserved_every_step() {
        let g = Grid::line(-3.0, 3.0, 61, Boundary::Reflecting).unwrap();
        let params = DriftDiffusionParams::new(2.0, 0.1, 1.0).unwrap();
        let model = FreeEnergyModel::DoubleWell { depth: 1.0, radius: 1.5 };
        let p0 = gaussian(&g, 0.7, 0.3);
        for (scheme, dt) in [(Scheme::Explicit, 0.0005), (Scheme::Implicit, 0.005)] {
            let mut cfg = FokkerPlanckConfig::new(dt, 200, scheme);
            cfg.record_every = 1;
            let run = evolve_fokker_planck(&p0, &model, &params, &cfg).unwrap();
            for f in &run.frames {
                assert!((integrate(f) - 1.0).abs() < 1e-10);
            }
            assert_eq!(run.clipped, 0);
        }
    }

    #[test]
    fn free_diffusion_spreads_as_heat_kernel() {
        let g = Grid::line(-10.0, 10.0, 401, Boundary::Reflecting).unwrap();
        let params = DriftDiffusionParams::new(1.0, 0.5, 1.0).unwrap();
        let p0 = gaussian(&g, 0.0, 0.5);
        let cfg = FokkerPlanckConfig::new(0.001, 2000, Scheme::Explicit);
        let run = evolve_fokker_planck(&p0, &FreeEnergyModel::Constant(0.0), &params, &cfg).unwrap();
        let expected = 0.25 + 2.0 * 0.5 * 2.0;
        let rel = (variance(run.last()) - expected).abs() / expected;
        assert!(rel < 0.005, "relative variance error {rel}");
    }

    #[test]
    fn explicit_stability_limit_is_enforced() {
        let g = Grid::line(-1.0, 1.0, 41, Boundary::Periodic).unwrap();
        let params = DriftDiffusionParams::new(1.0, 1.0, 1.0).unwrap();
        let p0 = ScalarField::constant(&g, 0.5);
        let cfg = FokkerPlanckConfig::new(0.01, 1, Scheme::Explicit);
        assert!(matches!(
            evolve_fokker_planck(&p0, &FreeEnergyModel::Constant(0.0), &params, &cfg),
            Err(Error::Unstable(_))
        ));
        let cfg = FokkerPlanckConfig::new(0.01, 1, Scheme::Implicit);
        assert!(evolve_fokker_planck(&p0, &FreeEnergyModel::Constant(0.0), &params, &cfg).is_ok());
    }

    #[test]
    fn absorbing_walls_drain_probability() {
        let g = Grid::line(-1.0, 1.0, 41, Boundary::Absorbing).unwrap();
        let params = DriftDiffusionParams::new(1.0, 0.2, 1.0).unwrap();
        let p0 = gaussian(&g, 0.0, 0.2);
        let cfg = FokkerPlanckConfig::new(0.001, 500, Scheme::Implicit);
        let run = evolve_fokker_planck(&p0, &FreeEnergyModel::Constant(0.0), &params, &cfg).unwrap();
        let m = integrate(run.last());
        assert!(m < 0.99 && m > 0.0);
    }

    #[test]
    fn implicit_two_dimensional_relaxation() {
        let g = Grid::build(&[-3.0, -3.0], &[3.0, 3.0], &[41, 41], &[Boundary::Reflecting, Boundary::Periodic]).unwrap();
        let params = DriftDiffusionParams::new(1.0, 0.5, 1.0).unwrap();
        let model = FreeEnergyModel::Quadratic { curvature: -1.0 };
        let p0 = ScalarField::constant(&g, 1.0).normalized().unwrap();
        let cfg = FokkerPlanckConfig::new(0.05, 200, Scheme::Implicit);
        let run = evolve_fokker_planck(&p0, &model, &params, &cfg).unwrap();
        assert!((integrate(run.last()) - 1.0).abs() < 1e-10);
        // periodic axis keeps a kink at the seam, so compare only symmetric moments
        let p = run.last();
        let mean0 = integrate(&ScalarField::from_fn(&g, |q| q[0]).zip_map(p, |x, v| x * v).unwrap());
        assert!(mean0.abs() < 1e-10);
    }
}
