use crate::error::{Error, Result};
use crate::grid::{gradient, Boundary, Grid, ScalarField, VectorField};

/// Free energy `F(t, q)` of the hidden variables, with its gradient.
///
/// The trainable variables drift up the gradient, so maxima of `F` attract.
#[derive(Debug, Clone, PartialEq)]
pub enum FreeEnergyModel {
    Constant(f64),
    /// `F = c/2 |q|²`; `c < 0` confines.
    Quadratic { curvature: f64 },
    /// `F = -depth (|q|²/radius² - 1)²`, maxima on the shell `|q| = radius`.
    DoubleWell { depth: f64, radius: f64 },
    /// `F = k·q - rate·t`.
    PlanePhase { wavevector: Vec<f64>, rate: f64 },
    Tabulated(TabulatedFreeEnergy),
    /// Sum of a time-independent part and a time-dependent part.
    Composite { stationary: Box<FreeEnergyModel>, dynamic: Box<FreeEnergyModel> },
    /// `factor · F_inner`.
    Scaled { factor: f64, inner: Box<FreeEnergyModel> },
}

impl FreeEnergyModel {
    pub fn value(&self, t: f64, q: &[f64]) -> f64 {
        match self {
            FreeEnergyModel::Constant(c) => *c,
            FreeEnergyModel::Quadratic { curvature } => 0.5 * curvature * norm_sqr(q),
            FreeEnergyModel::DoubleWell { depth, radius } => {
                let s = norm_sqr(q) / (radius * radius) - 1.0;
                -depth * s * s
            }
            FreeEnergyModel::PlanePhase { wavevector, rate } => {
                wavevector.iter().zip(q).map(|(k, x)| k * x).sum::<f64>() - rate * t
            }
            FreeEnergyModel::Tabulated(tab) => tab.value(t, q),
            FreeEnergyModel::Composite { stationary, dynamic } => {
                stationary.value(t, q) + dynamic.value(t, q)
            }
            FreeEnergyModel::Scaled { factor, inner } => factor * inner.value(t, q),
        }
    }

    /// Writes `∇F(t, q)` into `out`.
    pub fn gradient_into(&self, t: f64, q: &[f64], out: &mut [f64]) {
        match self {
            FreeEnergyModel::Constant(_) => out.iter_mut().for_each(|g| *g = 0.0),
            FreeEnergyModel::Quadratic { curvature } => {
                out.iter_mut().zip(q).for_each(|(g, x)| *g = curvature * x)
            }
            FreeEnergyModel::DoubleWell { depth, radius } => {
                let r2 = radius * radius;
                let s = norm_sqr(q) / r2 - 1.0;
                let c = -4.0 * depth * s / r2;
                out.iter_mut().zip(q).for_each(|(g, x)| *g = c * x)
            }
            FreeEnergyModel::PlanePhase { wavevector, .. } => {
                out.iter_mut().zip(wavevector).for_each(|(g, k)| *g = *k)
            }
            FreeEnergyModel::Tabulated(tab) => tab.gradient_into(t, q, out),
            FreeEnergyModel::Composite { stationary, dynamic } => {
                let mut tmp = vec![0.0; out.len()];
                stationary.gradient_into(t, q, out);
                dynamic.gradient_into(t, q, &mut tmp);
                out.iter_mut().zip(&tmp).for_each(|(g, d)| *g += d);
            }
            FreeEnergyModel::Scaled { factor, inner } => {
                inner.gradient_into(t, q, out);
                out.iter_mut().for_each(|g| *g *= factor);
            }
        }
    }

    /// True when `F` does not depend on time.
    pub fn is_static(&self) -> bool {
        match self {
            FreeEnergyModel::PlanePhase { rate, .. } => *rate == 0.0,
            FreeEnergyModel::Tabulated(tab) => tab.frames.len() == 1,
            FreeEnergyModel::Composite { stationary, dynamic } => {
                stationary.is_static() && dynamic.is_static()
            }
            FreeEnergyModel::Scaled { inner, .. } => inner.is_static(),
            _ => true,
        }
    }

    /// Node values at time `t`.
    pub fn on_grid(&self, grid: &Grid, t: f64) -> Result<ScalarField> {
        if let FreeEnergyModel::PlanePhase { wavevector, .. } = self {
            if wavevector.len() != grid.dims() {
                return Err(Error::Dimension("plane-phase wavevector length".into()));
            }
        }
        Ok(ScalarField::from_fn(grid, |q| self.value(t, q)))
    }
}

fn norm_sqr(q: &[f64]) -> f64 {
    q.iter().map(|x| x * x).sum()
}

/// Free energy given as a uniformly spaced time series of grid fields,
/// interpolated multilinearly in space and linearly in time.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedFreeEnergy {
    grid: Grid,
    t0: f64,
    dt: f64,
    frames: Vec<ScalarField>,
    gradients: Vec<VectorField>,
}

impl TabulatedFreeEnergy {
    pub fn new(t0: f64, dt: f64, frames: Vec<ScalarField>) -> Result<Self> {
        let first = frames.first().ok_or_else(|| Error::param("frames", "empty series"))?;
        let grid = first.grid().clone();
        for f in &frames {
            grid.check(f.grid(), "tabulated free energy")?;
        }
        if frames.len() > 1 && !(dt > 0.0) {
            return Err(Error::param("dt", "must be positive"));
        }
        let gradients = frames.iter().map(gradient).collect();
        Ok(TabulatedFreeEnergy { grid, t0, dt, frames, gradients })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn time_weights(&self, t: f64) -> (usize, usize, f64) {
        let last = self.frames.len() - 1;
        if last == 0 {
            return (0, 0, 0.0);
        }
        let s = ((t - self.t0) / self.dt).clamp(0.0, last as f64);
        let i = (s.floor() as usize).min(last - 1);
        (i, i + 1, s - i as f64)
    }

    fn interpolate(&self, values: impl Fn(usize, usize) -> f64, t: f64, q: &[f64]) -> f64 {
        let (a, b, wt) = self.time_weights(t);
        let corners = spatial_corners(&self.grid, q);
        let at = |frame: usize| corners.iter().map(|&(flat, w)| w * values(frame, flat)).sum::<f64>();
        if wt == 0.0 {
            at(a)
        } else {
            (1.0 - wt) * at(a) + wt * at(b)
        }
    }

    pub fn value(&self, t: f64, q: &[f64]) -> f64 {
        self.interpolate(|f, i| self.frames[f].values()[i], t, q)
    }

    pub fn gradient_into(&self, t: f64, q: &[f64], out: &mut [f64]) {
        for (k, g) in out.iter_mut().enumerate() {
            *g = self.interpolate(|f, i| self.gradients[f].component(k)[i], t, q);
        }
    }
}

/// Multilinear interpolation stencil: (flat node, weight) pairs.
fn spatial_corners(grid: &Grid, q: &[f64]) -> Vec<(usize, f64)> {
    let mut corners = vec![(0usize, 1.0f64)];
    for (k, axis) in grid.axes().iter().enumerate() {
        let h = axis.spacing();
        let n = axis.points;
        let s = (q[k] - axis.lower) / h;
        let (i0, i1, w) = if axis.boundary == Boundary::Periodic {
            let s = s.rem_euclid(n as f64);
            let i = (s.floor() as usize) % n;
            (i, (i + 1) % n, s - s.floor())
        } else {
            let s = s.clamp(0.0, (n - 1) as f64);
            let i = (s.floor() as usize).min(n - 2);
            (i, i + 1, s - i as f64)
        };
        let stride = grid.stride(k);
        corners = corners
            .into_iter()
            .flat_map(|(flat, wt)| {
                [(flat + i0 * stride, wt * (1.0 - w)), (flat + i1 * stride, wt * w)]
            })
            .collect();
    }
    corners
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_gradient_error(model: &FreeEnergyModel, q: &[f64], h: f64) -> f64 {
        let mut g = vec![0.0; q.len()];
        model.gradient_into(0.3, q, &mut g);
        (0..q.len())
            .map(|k| {
                let mut a = q.to_vec();
                let mut b = q.to_vec();
                a[k] += h;
                b[k] -= h;
                let fd = (model.value(0.3, &a) - model.value(0.3, &b)) / (2.0 * h);
                (fd - g[k]).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn preset_gradients_agree_with_finite_differences_at_second_order() {
        let presets = [
            FreeEnergyModel::Quadratic { curvature: -1.3 },
            FreeEnergyModel::DoubleWell { depth: 0.7, radius: 1.2 },
            FreeEnergyModel::PlanePhase { wavevector: vec![0.5, -2.0], rate: 1.0 },
            FreeEnergyModel::Composite {
                stationary: Box::new(FreeEnergyModel::Quadratic { curvature: 2.0 }),
                dynamic: Box::new(FreeEnergyModel::DoubleWell { depth: 1.0, radius: 0.8 }),
            },
        ];
        let q = [0.37, -0.81];
        for m in &presets {
            let e1 = fd_gradient_error(m, &q, 1e-2);
            let e2 = fd_gradient_error(m, &q, 5e-3);
            assert!(e1 < 1e-3, "{m:?}: {e1}");
            // polynomial presets: either exact (roundoff) or 4x drop
            assert!(e1 < 1e-9 || (e1 / e2 - 4.0).abs() < 0.1, "{m:?}: {e1} {e2}");
        }
    }

    #[test]
    fn tabulated_reproduces_nodes_and_interpolates_in_time() {
        let g = Grid::line(-1.0, 1.0, 21, Boundary::Reflecting).unwrap();
        let f0 = ScalarField::from_fn(&g, |q| q[0]);
        let f1 = ScalarField::from_fn(&g, |q| 3.0 * q[0]);
        let tab = TabulatedFreeEnergy::new(0.0, 1.0, vec![f0, f1]).unwrap();
        assert!((tab.value(0.0, &[0.3]) - 0.3).abs() < 1e-12);
        assert!((tab.value(0.5, &[0.3]) - 0.6).abs() < 1e-12);
        let mut grad = [0.0];
        tab.gradient_into(1.0, &[0.25], &mut grad);
        assert!((grad[0] - 3.0).abs() < 1e-12);
    }
}
