use super::{DriftDiffusionParams, FreeEnergyModel};
use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid, ScalarField};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use std::io::{self, Write};

/// Independent trajectories of the trainable variables.
///
/// Trajectory `i` draws from its own ChaCha8 stream `(seed, i)`, so results
/// do not depend on how the work is scheduled across threads.
#[derive(Debug, Clone)]
pub struct ParticleEnsemble {
    domain: Grid,
    positions: Vec<f64>,
    alive: Vec<bool>,
    time: f64,
    rngs: Vec<ChaCha8Rng>,
}

fn stream(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

impl ParticleEnsemble {
    /// `n` trajectories all starting at `point`.
    pub fn at_point(domain: &Grid, point: &[f64], n: usize, seed: u64) -> Result<Self> {
        if point.len() != domain.dims() {
            return Err(Error::Dimension("starting point".into()));
        }
        Self::from_positions(domain, point.repeat(n), seed)
    }

    /// Trajectories from a flat `n × K` position array.
    pub fn from_positions(domain: &Grid, positions: Vec<f64>, seed: u64) -> Result<Self> {
        let k = domain.dims();
        if positions.len() % k != 0 {
            return Err(Error::Dimension("positions must be a multiple of K".into()));
        }
        let n = positions.len() / k;
        let mut ens = ParticleEnsemble {
            domain: domain.clone(),
            positions,
            alive: vec![true; n],
            time: 0.0,
            rngs: (0..n).map(|i| stream(seed, i)).collect(),
        };
        let domain = ens.domain.clone();
        for (q, alive) in ens.positions.chunks_mut(k).zip(ens.alive.iter_mut()) {
            *alive = confine(&domain, q);
        }
        Ok(ens)
    }

    /// `n` trajectories placed uniformly over the domain.
    pub fn uniform(domain: &Grid, n: usize, seed: u64) -> Result<Self> {
        let k = domain.dims();
        let mut rng = stream(seed, usize::MAX);
        let mut positions = Vec::with_capacity(n * k);
        for _ in 0..n {
            for a in domain.axes() {
                let u = Uniform::new(a.lower, a.upper).map_err(|e| Error::param("domain", e.to_string()))?;
                positions.push(u.sample(&mut rng));
            }
        }
        Self::from_positions(domain, positions, seed)
    }

    pub fn len(&self) -> usize {
        self.alive.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alive.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.domain.dims()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn domain(&self) -> &Grid {
        &self.domain
    }

    pub fn position(&self, i: usize) -> &[f64] {
        let k = self.dims();
        &self.positions[i * k..(i + 1) * k]
    }

    pub fn is_alive(&self, i: usize) -> bool {
        self.alive[i]
    }

    /// Positions of trajectories that have not been absorbed.
    pub fn alive_positions(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.positions.chunks(self.dims()).zip(&self.alive).filter(|(_, &a)| a).map(|(q, _)| q)
    }

    /// Component `k` of every surviving trajectory.
    pub fn coordinates(&self, k: usize) -> Vec<f64> {
        self.alive_positions().map(|q| q[k]).collect()
    }

    /// One Euler–Maruyama step `q ← q + γ∇F dt + √(2D dt) η`.
    pub fn step(
        &mut self,
        model: &FreeEnergyModel,
        params: &DriftDiffusionParams,
        dt: f64,
    ) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        let k = self.dims();
        let t = self.time;
        let noise = (2.0 * params.diffusion * dt).sqrt();
        let half_extent =
            0.5 * self.domain.axes().iter().map(|a| a.extent()).fold(f64::INFINITY, f64::min);
        let domain = &self.domain;
        self.positions
            .par_chunks_mut(k)
            .zip(self.rngs.par_iter_mut())
            .zip(self.alive.par_iter_mut())
            .try_for_each_init(
                || vec![0.0; k],
                |grad, ((q, rng), alive)| {
                    if !*alive {
                        return Ok(());
                    }
                    model.gradient_into(t, q, grad);
                    let drift_len =
                        params.gamma * dt * grad.iter().map(|g| g * g).sum::<f64>().sqrt();
                    if !drift_len.is_finite() || drift_len > half_extent {
                        return Err(Error::StepTooLarge(format!(
                            "drift displacement {drift_len:.3e} exceeds half the domain ({half_extent:.3e})"
                        )));
                    }
                    for (x, g) in q.iter_mut().zip(grad.iter()) {
                        let eta: f64 = StandardNormal.sample(rng);
                        *x += params.gamma * g * dt + noise * eta;
                    }
                    *alive = confine(domain, q);
                    Ok(())
                },
            )?;
        self.time += dt;
        Ok(())
    }

    /// Runs `n_steps` steps.
    pub fn run(
        &mut self,
        model: &FreeEnergyModel,
        params: &DriftDiffusionParams,
        dt: f64,
        n_steps: usize,
    ) -> Result<()> {
        for _ in 0..n_steps {
            self.step(model, params, dt)?;
        }
        Ok(())
    }
}

/// Applies the boundary rule; returns false when the trajectory is absorbed.
fn confine(domain: &Grid, q: &mut [f64]) -> bool {
    for (x, a) in q.iter_mut().zip(domain.axes()) {
        let l = a.extent();
        match a.boundary {
            _ if (a.lower..a.upper).contains(x) => {}
            Boundary::Periodic => *x = a.lower + (*x - a.lower).rem_euclid(l),
            Boundary::Reflecting => {
                let s = (*x - a.lower).rem_euclid(2.0 * l);
                *x = a.lower + if s > l { 2.0 * l - s } else { s };
            }
            Boundary::Absorbing => {
                if *x < a.lower || *x > a.upper {
                    return false;
                }
            }
        }
    }
    true
}

/// Consumes an ensemble and returns it advanced by one step.
pub fn langevin_step(
    mut ens: ParticleEnsemble,
    model: &FreeEnergyModel,
    params: &DriftDiffusionParams,
    dt: f64,
) -> Result<ParticleEnsemble> {
    ens.step(model, params, dt)?;
    Ok(ens)
}

const DEPOSIT_CHUNKS: usize = 64;

/// Density estimate of the surviving trajectories on `grid`.
///
/// A bandwidth equal to the spacing gives a nearest-node histogram; a wider
/// bandwidth gives a Gaussian product-kernel estimate. Either way the
/// result is normalized under the grid quadrature.
pub fn estimate_density(ens: &ParticleEnsemble, grid: &Grid, bandwidth: f64) -> Result<ScalarField> {
    if grid.dims() != ens.dims() {
        return Err(Error::Dimension("density grid and ensemble differ in K".into()));
    }
    let hmax = grid.axes().iter().map(|a| a.spacing()).fold(0.0, f64::max);
    if !(bandwidth >= hmax * (1.0 - 1e-9)) {
        return Err(Error::param("bandwidth", format!("{bandwidth} is below the spacing {hmax}")));
    }
    let samples: Vec<&[f64]> = ens.alive_positions().collect();
    if samples.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let histogram = bandwidth <= hmax * (1.0 + 1e-9);
    let chunk = samples.len().div_ceil(DEPOSIT_CHUNKS);
    let partial: Vec<Vec<f64>> = samples
        .par_chunks(chunk)
        .map(|part| {
            let mut acc = vec![0.0; grid.len()];
            for q in part {
                if histogram {
                    acc[nearest_node(grid, q)] += 1.0;
                } else {
                    deposit_kernel(grid, q, bandwidth, &mut acc);
                }
            }
            acc
        })
        .collect();
    let mut counts = vec![0.0; grid.len()];
    for part in &partial {
        counts.iter_mut().zip(part).for_each(|(c, v)| *c += v);
    }
    let weights = grid.weights();
    let total: f64 = counts.iter().zip(&weights).map(|(c, w)| c * w).sum();
    if total <= 0.0 {
        return Err(Error::EmptyEnsemble);
    }
    ScalarField::new(grid.clone(), counts.into_iter().map(|c| c / total).collect())
}

fn nearest_node(grid: &Grid, q: &[f64]) -> usize {
    grid.axes()
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let s = ((q[k] - a.lower) / a.spacing()).round();
            let i = if a.boundary == Boundary::Periodic {
                (s as i64).rem_euclid(a.points as i64) as usize
            } else {
                s.clamp(0.0, (a.points - 1) as f64) as usize
            };
            i * grid.stride(k)
        })
        .sum()
}

fn deposit_kernel(grid: &Grid, q: &[f64], b: f64, acc: &mut [f64]) {
    // per-axis (index, weight) lists within 5 bandwidths, then tensor product
    let per_axis: Vec<Vec<(usize, f64)>> = grid
        .axes()
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let h = a.spacing();
            let reach = (5.0 * b / h).ceil() as i64;
            let centre = ((q[k] - a.lower) / h).round() as i64;
            let n = a.points as i64;
            (centre - reach..=centre + reach)
                .filter_map(|j| {
                    let (idx, x) = if a.boundary == Boundary::Periodic {
                        (j.rem_euclid(n) as usize, a.lower + j as f64 * h)
                    } else if (0..n).contains(&j) {
                        (j as usize, a.coord(j as usize))
                    } else {
                        return None;
                    };
                    let d = (x - q[k]) / b;
                    Some((idx * grid.stride(k), (-0.5 * d * d).exp()))
                })
                .collect()
        })
        .collect();
    let mut stack = vec![(0usize, 1.0f64)];
    for list in &per_axis {
        stack = stack
            .iter()
            .flat_map(|&(f, w)| list.iter().map(move |&(g, v)| (f + g, w * v)))
            .collect();
    }
    for (flat, w) in stack {
        acc[flat] += w;
    }
}

/// Writes one row `time id q0 [q1 ..]` per surviving trajectory among the
/// first `limit`.
pub fn write_trajectories<W: Write>(w: &mut W, ens: &ParticleEnsemble, limit: usize) -> io::Result<()> {
    for (i, q) in ens.positions.chunks(ens.dims()).enumerate().take(limit) {
        if !ens.alive[i] {
            continue;
        }
        write!(w, "{} {}", ens.time, i)?;
        for x in q {
            write!(w, " {x}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::integrate;
    use crate::stats;

    fn line(b: Boundary) -> Grid {
        Grid::line(-5.0, 5.0, 101, b).unwrap()
    }

    #[test]
    fn noiseless_step_drifts_up_the_gradient() {
        let params = DriftDiffusionParams::new(1.0, 0.0, 1.0).unwrap();
        let model = FreeEnergyModel::Quadratic { curvature: 1.0 };
        let ens = ParticleEnsemble::at_point(&line(Boundary::Reflecting), &[1.0], 3, 1).unwrap();
        let ens = langevin_step(ens, &model, &params, 0.01).unwrap();
        for i in 0..3 {
            assert_eq!(ens.position(i)[0], 1.01);
        }
    }

    #[test]
    fn one_step_variance_is_two_d_dt() {
        let params = DriftDiffusionParams::new(1.0, 0.5, 1.0).unwrap();
        let n = 100_000;
        let mut ens = ParticleEnsemble::at_point(&line(Boundary::Periodic), &[0.0], n, 7).unwrap();
        ens.step(&FreeEnergyModel::Constant(0.0), &params, 0.01).unwrap();
        let xs = ens.coordinates(0);
        let m = stats::mean(&xs);
        let var = xs.iter().map(|x| x * x).sum::<f64>() / n as f64 - m * m;
        // Var of the sample variance of a Gaussian: 2σ⁴/n
        let se = (2.0f64 / n as f64).sqrt() * 0.01;
        assert!((var - 0.01).abs() < 3.0 * se, "var {var}, se {se}");
    }

    #[test]
    fn oversized_drift_is_rejected() {
        let params = DriftDiffusionParams::new(1.0, 0.0, 1.0).unwrap();
        let model = FreeEnergyModel::PlanePhase { wavevector: vec![100.0], rate: 0.0 };
        let mut ens = ParticleEnsemble::at_point(&line(Boundary::Reflecting), &[0.0], 4, 1).unwrap();
        assert!(matches!(ens.step(&model, &params, 0.1), Err(Error::StepTooLarge(_))));
        assert!(ens.step(&model, &params, -1.0).is_err());
    }

    #[test]
    fn boundary_rules_keep_positions_in_domain() {
        let params = DriftDiffusionParams::new(1.0, 4.0, 1.0).unwrap();
        for b in [Boundary::Periodic, Boundary::Reflecting, Boundary::Absorbing] {
            let mut ens = ParticleEnsemble::at_point(&line(b), &[4.5], 2000, 3).unwrap();
            ens.run(&FreeEnergyModel::Constant(0.0), &params, 0.01, 50).unwrap();
            for q in ens.alive_positions() {
                assert!((-5.0..=5.0).contains(&q[0]));
            }
            if b == Boundary::Absorbing {
                assert!(ens.alive_positions().count() < 2000);
            }
        }
    }

    #[test]
    fn same_seed_gives_bit_identical_trajectories() {
        let params = DriftDiffusionParams::new(1.0, 0.25, 1.0).unwrap();
        let model = FreeEnergyModel::Quadratic { curvature: -1.0 };
        let run = |seed| {
            let mut ens = ParticleEnsemble::at_point(&line(Boundary::Reflecting), &[0.5], 5000, seed).unwrap();
            ens.run(&model, &params, 0.01, 20).unwrap();
            let mut out = Vec::new();
            write_trajectories(&mut out, &ens, usize::MAX).unwrap();
            out
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11), run(12));
    }

    #[test]
    fn histogram_of_a_point_mass_is_one_bin() {
        let g = line(Boundary::Reflecting);
        let ens = ParticleEnsemble::at_point(&g, &[1.0], 100, 0).unwrap();
        let p = estimate_density(&ens, &g, g.spacing(0)).unwrap();
        let nonzero: Vec<usize> = (0..g.len()).filter(|&i| p.values()[i] > 0.0).collect();
        assert_eq!(nonzero, vec![60]);
        assert!((integrate(&p) - 1.0).abs() < 1e-12);
        let kde = estimate_density(&ens, &g, 3.0 * g.spacing(0)).unwrap();
        let argmax = (0..g.len()).max_by(|&a, &b| kde.values()[a].total_cmp(&kde.values()[b])).unwrap();
        assert_eq!(argmax, 60);
        assert!((integrate(&kde) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_samples_give_a_flat_histogram() {
        let g = Grid::line(0.0, 1.0, 50, Boundary::Periodic).unwrap();
        let n = 200_000;
        let ens = ParticleEnsemble::uniform(&g, n, 5).unwrap();
        let p = estimate_density(&ens, &g, g.spacing(0)).unwrap();
        let per_bin = n as f64 / 50.0;
        let tol = 4.0 / per_bin.sqrt();
        for v in p.values() {
            assert!((v - 1.0).abs() < tol, "{v}");
        }
    }

    #[test]
    fn density_errors() {
        let g = line(Boundary::Reflecting);
        let ens = ParticleEnsemble::at_point(&g, &[1.0], 0, 0).unwrap();
        assert_eq!(estimate_density(&ens, &g, 0.1), Err(Error::EmptyEnsemble));
        let ens = ParticleEnsemble::at_point(&g, &[1.0], 3, 0).unwrap();
        assert!(estimate_density(&ens, &g, 0.01).is_err());
    }
}
