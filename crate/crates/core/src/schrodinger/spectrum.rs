use super::{apply_hamiltonian, check_boundaries, is_wall, WaveFunction};
use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid, ScalarField};
use crate::linalg::{solve_cyclic, solve_tridiagonal, tridiagonal_eigen};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Lowest eigenpairs of the discretized Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub energies: Vec<f64>,
    pub states: Vec<WaveFunction>,
    /// `‖Hφ - Eφ‖` of each returned pair.
    pub residuals: Vec<f64>,
}

pub const MAX_STATES: usize = 10;
const MAX_ITERATIONS: usize = 200_000;

/// Lowest `count` eigenpairs of `-ħ²/2m ∇² + V` with the wall conventions of
/// the evolution. One-dimensional hard-wall problems are solved directly by
/// bisection; everything else relaxes in imaginary time with deflation and
/// a final Rayleigh–Ritz rotation.
pub fn stationary_states(v: &ScalarField, mass: f64, hbar: f64, count: usize) -> Result<Spectrum> {
    if count == 0 || count > MAX_STATES {
        return Err(Error::param("count", format!("must be in 1..={MAX_STATES}, got {count}")));
    }
    if !(mass > 0.0 && hbar > 0.0) {
        return Err(Error::param("mass", "mass and ħ must be positive"));
    }
    let grid = v.grid();
    check_boundaries(grid)?;
    let vectors = if grid.dims() == 1 && !grid.is_periodic() {
        direct_1d(grid, v, mass, hbar, count)
    } else {
        let rough = relax(grid, v, mass, hbar, count)?;
        polish(grid, v, mass, hbar, rough)?
    };
    let vectors = rayleigh_ritz(grid, v, mass, hbar, vectors)?;
    let mut energies = Vec::with_capacity(count);
    let mut states = Vec::with_capacity(count);
    let mut residuals = Vec::with_capacity(count);
    for mut phi in vectors {
        fix_sign(&mut phi);
        let psi = ComplexField::new(grid.clone(), phi.iter().map(|&x| Complex64::new(x, 0.0)).collect())?;
        let wf = WaveFunction::normalized(psi, hbar, mass)?;
        let e = wf.energy(v)?;
        let hphi = apply_hamiltonian(wf.psi(), v, mass, hbar)?;
        let r = hphi
            .zip_map(wf.psi(), |a, b| a - b * e)?
            .values()
            .iter()
            .zip(grid.weights())
            .map(|(z, w)| z.norm_sqr() * w)
            .sum::<f64>()
            .sqrt();
        energies.push(e);
        states.push(wf);
        residuals.push(r);
    }
    Ok(Spectrum { energies, states, residuals })
}

fn fix_sign(phi: &mut [f64]) {
    let big = phi.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if big < 0.0 {
        phi.iter_mut().for_each(|x| *x = -*x);
    }
}

fn direct_1d(grid: &Grid, v: &ScalarField, mass: f64, hbar: f64, count: usize) -> Vec<Vec<f64>> {
    let n = grid.len();
    let h = grid.spacing(0);
    let c = hbar * hbar / (2.0 * mass * h * h);
    let d: Vec<f64> = (1..n - 1).map(|i| 2.0 * c + v.values()[i]).collect();
    let e = vec![-c; n - 3];
    let (_, vecs) = tridiagonal_eigen(&d, &e, count);
    vecs.into_iter()
        .map(|u| {
            let mut full = vec![0.0; n];
            full[1..n - 1].copy_from_slice(&u);
            full
        })
        .collect()
}

fn real_hamiltonian(grid: &Grid, v: &ScalarField, mass: f64, hbar: f64, phi: &[f64]) -> Result<Vec<f64>> {
    let psi = ComplexField::new(grid.clone(), phi.iter().map(|&x| Complex64::new(x, 0.0)).collect())?;
    Ok(apply_hamiltonian(&psi, v, mass, hbar)?.values().iter().map(|z| z.re).collect())
}

fn dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum()
}

fn rayleigh_ritz(grid: &Grid, v: &ScalarField, mass: f64, hbar: f64, vectors: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    let w = grid.weights();
    let k = vectors.len();
    let hv: Vec<Vec<f64>> = vectors.iter().map(|x| real_hamiltonian(grid, v, mass, hbar, x)).collect::<Result<_>>()?;
    let small = DMatrix::from_fn(k, k, |i, j| 0.5 * (dot(&w, &vectors[i], &hv[j]) + dot(&w, &vectors[j], &hv[i])));
    let eig = small.symmetric_eigen();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    Ok(order
        .into_iter()
        .map(|col| {
            let mut out = vec![0.0; grid.len()];
            for (i, x) in vectors.iter().enumerate() {
                let c = eig.eigenvectors[(i, col)];
                out.iter_mut().zip(x).for_each(|(o, xi)| *o += c * xi);
            }
            out
        })
        .collect())
}

/// Block residual refinement: Rayleigh–Ritz on the span of the current
/// vectors and their residuals `Hφ - Eφ` until the residuals stall.
fn polish(grid: &Grid, v: &ScalarField, mass: f64, hbar: f64, mut vectors: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    let w = grid.weights();
    let count = vectors.len();
    for _ in 0..200 {
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(2 * count);
        let mut worst = 0.0f64;
        let mut extra = Vec::with_capacity(count);
        for x in &vectors {
            let hx = real_hamiltonian(grid, v, mass, hbar, x)?;
            let e = dot(&w, x, &hx) / dot(&w, x, x);
            let r: Vec<f64> = hx.iter().zip(x).map(|(a, b)| a - e * b).collect();
            worst = worst.max(dot(&w, &r, &r).sqrt() / e.abs().max(1e-300));
            extra.push(r);
        }
        if worst < 1e-10 {
            break;
        }
        for x in vectors.iter().chain(&extra) {
            let mut y = x.clone();
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(&w, b, &y);
                    y.iter_mut().zip(b).for_each(|(yi, bi)| *yi -= c * bi);
                }
            }
            let norm = dot(&w, &y, &y).sqrt();
            if norm > 1e-12 {
                y.iter_mut().for_each(|yi| *yi /= norm);
                basis.push(y);
            }
        }
        vectors = rayleigh_ritz(grid, v, mass, hbar, basis)?;
        vectors.truncate(count);
    }
    Ok(vectors)
}

/// One backward-Euler imaginary-time factor `(1 + τT_k)⁻¹` along each axis,
/// sandwiched between half potential factors.
struct Relaxer<'a> {
    grid: &'a Grid,
    tau: f64,
    hbar2_2m: f64,
    half_potential: Vec<f64>,
    walls: Vec<bool>,
}

impl Relaxer<'_> {
    fn apply(&self, phi: &mut [f64]) {
        phi.iter_mut().zip(&self.half_potential).for_each(|(x, p)| *x *= p);
        for k in 0..self.grid.dims() {
            let axis = self.grid.axis(k);
            let n = axis.points;
            let s = self.grid.stride(k);
            let h = axis.spacing();
            let c = self.tau * self.hbar2_2m / (h * h);
            let periodic = axis.is_periodic();
            let (first, m) = if periodic { (0, n) } else { (1, n - 2) };
            let lo = vec![-c; m];
            let up = vec![-c; m];
            let di = vec![1.0 + 2.0 * c; m];
            let mut rhs = vec![0.0; m];
            for start in (0..self.grid.len()).filter(|&f| self.grid.index_along(f, k) == 0) {
                for (r, x) in rhs.iter_mut().enumerate() {
                    *x = phi[start + (first + r) * s];
                }
                if periodic {
                    solve_cyclic(&lo, &di, &up, &mut rhs);
                } else {
                    solve_tridiagonal(&lo, &di, &up, &mut rhs);
                }
                for (r, x) in rhs.iter().enumerate() {
                    phi[start + (first + r) * s] = *x;
                }
            }
        }
        phi.iter_mut().zip(&self.half_potential).for_each(|(x, p)| *x *= p);
        phi.iter_mut().zip(&self.walls).for_each(|(x, &w)| if w { *x = 0.0 });
    }
}

fn relax(grid: &Grid, v: &ScalarField, mass: f64, hbar: f64, count: usize) -> Result<Vec<Vec<f64>>> {
    let w = grid.weights();
    let walls: Vec<bool> = (0..grid.len()).map(|i| is_wall(grid, i)).collect();
    let hbar2_2m = hbar * hbar / (2.0 * mass);
    let hmin = grid.axes().iter().map(|a| a.spacing()).fold(f64::INFINITY, f64::min);
    let vmin = v.min();
    let scale = hbar2_2m / (hmin * hmin) + (v.max() - vmin).max(0.0).min(hbar2_2m / (hmin * hmin));
    let mut found: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut iterations = 0;
    for n in 0..count {
        let mut phi: Vec<f64> = (0..grid.len())
            .map(|i| if walls[i] { 0.0 } else { 1.0 + 0.5 * (((i * 2654435761 + n * 40503) % 1000) as f64 / 1000.0 - 0.5) })
            .collect();
        for stage in 0..3 {
            let tau = 1.0 / (scale * 5f64.powi(stage));
            let relaxer = Relaxer {
                grid,
                tau,
                hbar2_2m,
                half_potential: v.values().iter().map(|&vi| (-0.5 * tau * (vi - vmin)).exp()).collect(),
                walls: walls.clone(),
            };
            let mut last = f64::INFINITY;
            loop {
                for _ in 0..10 {
                    relaxer.apply(&mut phi);
                    for prev in &found {
                        let c = dot(&w, prev, &phi);
                        phi.iter_mut().zip(prev).for_each(|(x, p)| *x -= c * p);
                    }
                    let norm = dot(&w, &phi, &phi).sqrt();
                    phi.iter_mut().for_each(|x| *x /= norm);
                }
                iterations += 10;
                let e = dot(&w, &phi, &real_hamiltonian(grid, v, mass, hbar, &phi)?);
                if (e - last).abs() <= 1e-12 * e.abs().max(scale * hmin * hmin) {
                    break;
                }
                if iterations > MAX_ITERATIONS {
                    return Err(Error::NoConvergence { what: "imaginary-time relaxation", iterations });
                }
                last = e;
            }
        }
        found.push(phi);
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;

    #[test]
    fn harmonic_spectrum_direct() {
        let g = Grid::line(-10.0, 10.0, 801, Boundary::Reflecting).unwrap();
        let v = ScalarField::from_fn(&g, |q| 0.5 * q[0] * q[0]);
        let s = stationary_states(&v, 1.0, 1.0, 4).unwrap();
        for (n, e) in s.energies.iter().enumerate() {
            let exact = n as f64 + 0.5;
            assert!((e - exact).abs() / exact < 0.005, "E{n} = {e}");
        }
        for i in 0..4 {
            for j in 0..4 {
                let o = s.states[i].overlap(&s.states[j]).unwrap();
                assert!((o.re - if i == j { 1.0 } else { 0.0 }).abs() < 1e-8);
            }
            assert!(s.residuals[i] < 1e-8);
        }
    }

    #[test]
    fn box_spectrum_ratio() {
        let g = Grid::line(0.0, 1.0, 201, Boundary::Reflecting).unwrap();
        let v = ScalarField::constant(&g, 0.0);
        let s = stationary_states(&v, 1.0, 1.0, 2).unwrap();
        assert!((s.energies[1] / s.energies[0] - 4.0).abs() / 4.0 < 0.01);
    }

    #[test]
    fn relaxation_in_two_dimensions() {
        let g = Grid::build(&[-6.0, -6.0], &[6.0, 6.0], &[49, 49], &[Boundary::Reflecting, Boundary::Reflecting]).unwrap();
        let v = ScalarField::from_fn(&g, |q| 0.5 * (q[0] * q[0] + q[1] * q[1]));
        let s = stationary_states(&v, 1.0, 1.0, 3).unwrap();
        // discrete oscillator: levels 1, 2, 2
        for (e, exact) in s.energies.iter().zip([1.0, 2.0, 2.0]) {
            assert!((e - exact).abs() / exact < 0.01, "{e}");
        }
        for i in 0..3 {
            for j in 0..3 {
                let o = s.states[i].overlap(&s.states[j]).unwrap();
                assert!((o.re - if i == j { 1.0 } else { 0.0 }).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn periodic_ring_relaxes() {
        let g = Grid::line(0.0, std::f64::consts::TAU, 64, Boundary::Periodic).unwrap();
        let v = ScalarField::from_fn(&g, |q| 1.0 - q[0].cos());
        let s = stationary_states(&v, 1.0, 1.0, 2).unwrap();
        assert!(s.energies[0] < s.energies[1]);
        assert!(s.residuals[0] < 1e-5, "{:?}", s.residuals);
    }

    #[test]
    fn count_is_bounded() {
        let g = Grid::line(0.0, 1.0, 20, Boundary::Reflecting).unwrap();
        let v = ScalarField::constant(&g, 0.0);
        assert!(stationary_states(&v, 1.0, 1.0, 11).is_err());
        assert!(stationary_states(&v, 1.0, 1.0, 0).is_err());
    }
}
