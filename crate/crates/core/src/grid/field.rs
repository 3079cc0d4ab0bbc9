use super::{Boundary, Grid};
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::ops::{Add, Mul, Sub};

/// Values that the difference and quadrature operators act on.
pub trait FieldValue:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
}

impl FieldValue for f64 {}
impl FieldValue for Complex64 {}

/// Values indexed by grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    grid: Grid,
    values: Vec<T>,
}

pub type ScalarField = Field<f64>;
pub type ComplexField = Field<Complex64>;

impl<T: FieldValue> Field<T> {
    pub fn new(grid: Grid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Field { grid, values })
    }

    pub fn constant(grid: &Grid, value: T) -> Self {
        Field { grid: grid.clone(), values: vec![value; grid.len()] }
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut(&[f64]) -> T) -> Self {
        let mut q = vec![0.0; grid.dims()];
        let values = (0..grid.len())
            .map(|flat| {
                grid.point_into(flat, &mut q);
                f(&q)
            })
            .collect();
        Field { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn map<U: FieldValue>(&self, f: impl Fn(T) -> U) -> Field<U> {
        Field { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map<U: FieldValue, V: FieldValue>(
        &self,
        other: &Field<U>,
        f: impl Fn(T, U) -> V,
    ) -> Result<Field<V>> {
        self.grid.check(&other.grid, "zip_map")?;
        Ok(Field {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// First derivative along `axis`.
    pub fn derivative(&self, axis: usize) -> Field<T> {
        Field { grid: self.grid.clone(), values: derivative(&self.grid, &self.values, axis) }
    }

    /// Second derivative along `axis`.
    pub fn second_derivative(&self, axis: usize) -> Field<T> {
        Field {
            grid: self.grid.clone(),
            values: second_derivative(&self.grid, &self.values, axis),
        }
    }
}

impl ScalarField {
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Rescales to unit integral.
    pub fn normalized(&self) -> Result<ScalarField> {
        let total = integrate(self);
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::NotNormalized { integral: total });
        }
        Ok(self.map(|v| v / total))
    }

    /// Checks the probability-density invariant: non-negative and unit mass.
    pub fn check_density(&self, tol: f64) -> Result<()> {
        let total = integrate(self);
        if (total - 1.0).abs() > tol || self.min() < -1e-12 {
            return Err(Error::NotNormalized { integral: total });
        }
        Ok(())
    }

    /// `sqrt(max(p, floor))` pointwise.
    pub fn sqrt_floored(&self, floor: f64) -> ScalarField {
        self.map(|v| v.max(floor).sqrt())
    }
}

impl ComplexField {
    pub fn norm_sqr(&self) -> ScalarField {
        self.map(|z| z.norm_sqr())
    }
}

/// One component per dimension, each indexed by grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    components: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn new(grid: Grid, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.len() != grid.dims() || components.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::Dimension(format!(
                "vector field needs {} components of length {}",
                grid.dims(),
                grid.len()
            )));
        }
        Ok(VectorField { grid, components })
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut(&[f64], &mut [f64])) -> Self {
        let k = grid.dims();
        let mut components = vec![vec![0.0; grid.len()]; k];
        let mut q = vec![0.0; k];
        let mut v = vec![0.0; k];
        for flat in 0..grid.len() {
            grid.point_into(flat, &mut q);
            f(&q, &mut v);
            for d in 0..k {
                components[d][flat] = v[d];
            }
        }
        VectorField { grid: grid.clone(), components }
    }

    pub fn zeros(grid: &Grid) -> Self {
        VectorField { grid: grid.clone(), components: vec![vec![0.0; grid.len()]; grid.dims()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn component(&self, k: usize) -> &[f64] {
        &self.components[k]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn scaled(&self, factor: f64) -> VectorField {
        VectorField {
            grid: self.grid.clone(),
            components: self
                .components
                .iter()
                .map(|c| c.iter().map(|v| v * factor).collect())
                .collect(),
        }
    }

    /// Pointwise squared magnitude.
    pub fn norm_sqr(&self) -> ScalarField {
        let values = (0..self.grid.len())
            .map(|i| self.components.iter().map(|c| c[i] * c[i]).sum())
            .collect();
        Field { grid: self.grid.clone(), values }
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub(crate) fn derivative<T: FieldValue>(grid: &Grid, f: &[T], axis: usize) -> Vec<T> {
    let a = grid.axis(axis);
    let n = a.points;
    let s = grid.stride(axis);
    let inv2h = 0.5 / a.spacing();
    (0..f.len())
        .map(|flat| {
            let i = grid.index_along(flat, axis);
            match (grid.neighbor(flat, axis, false), grid.neighbor(flat, axis, true)) {
                (Some(lo), Some(hi)) => (f[hi] - f[lo]) * inv2h,
                _ => match a.boundary {
                    Boundary::Reflecting => T::default(),
                    _ if i == 0 => {
                        (f[flat + s] * 4.0 - f[flat] * 3.0 - f[flat + 2 * s]) * inv2h
                    }
                    _ => {
                        debug_assert_eq!(i, n - 1);
                        (f[flat] * 3.0 - f[flat - s] * 4.0 + f[flat - 2 * s]) * inv2h
                    }
                },
            }
        })
        .collect()
}

pub(crate) fn second_derivative<T: FieldValue>(grid: &Grid, f: &[T], axis: usize) -> Vec<T> {
    let a = grid.axis(axis);
    let s = grid.stride(axis);
    let h = a.spacing();
    let inv_h2 = 1.0 / (h * h);
    (0..f.len())
        .map(|flat| {
            let i = grid.index_along(flat, axis);
            match (grid.neighbor(flat, axis, false), grid.neighbor(flat, axis, true)) {
                (Some(lo), Some(hi)) => (f[hi] + f[lo] - f[flat] * 2.0) * inv_h2,
                (None, Some(hi)) => match a.boundary {
                    Boundary::Reflecting => (f[hi] - f[flat]) * (2.0 * inv_h2),
                    _ => {
                        debug_assert_eq!(i, 0);
                        (f[flat] * 2.0 - f[flat + s] * 5.0 + f[flat + 2 * s] * 4.0
                            - f[flat + 3 * s])
                            * inv_h2
                    }
                },
                (Some(lo), None) => match a.boundary {
                    Boundary::Reflecting => (f[lo] - f[flat]) * (2.0 * inv_h2),
                    _ => {
                        (f[flat] * 2.0 - f[flat - s] * 5.0 + f[flat - 2 * s] * 4.0
                            - f[flat - 3 * s])
                            * inv_h2
                    }
                },
                (None, None) => unreachable!("axes have at least four points"),
            }
        })
        .collect()
}

pub fn gradient(f: &ScalarField) -> VectorField {
    VectorField {
        grid: f.grid.clone(),
        components: (0..f.grid.dims()).map(|k| derivative(&f.grid, &f.values, k)).collect(),
    }
}

pub fn laplacian<T: FieldValue>(f: &Field<T>) -> Field<T> {
    let mut out = vec![T::default(); f.values.len()];
    for k in 0..f.grid.dims() {
        for (o, d) in out.iter_mut().zip(second_derivative(&f.grid, &f.values, k)) {
            *o = *o + d;
        }
    }
    Field { grid: f.grid.clone(), values: out }
}

pub fn divergence(v: &VectorField) -> ScalarField {
    let mut out = vec![0.0; v.grid.len()];
    for (k, c) in v.components.iter().enumerate() {
        for (o, d) in out.iter_mut().zip(derivative(&v.grid, c, k)) {
            *o += d;
        }
    }
    Field { grid: v.grid.clone(), values: out }
}

/// Discrete curl `∂_0 v_1 - ∂_1 v_0` of a two-dimensional field.
pub fn curl_2d(v: &VectorField) -> Result<ScalarField> {
    if v.grid.dims() != 2 {
        return Err(Error::Dimension("curl_2d needs a two-dimensional grid".into()));
    }
    let a = derivative(&v.grid, &v.components[1], 0);
    let b = derivative(&v.grid, &v.components[0], 1);
    Ok(Field { grid: v.grid.clone(), values: a.iter().zip(&b).map(|(x, y)| x - y).collect() })
}

/// Quadrature of a field over the whole domain.
pub fn integrate<T: FieldValue>(f: &Field<T>) -> T {
    let grid = &f.grid;
    let mut total = T::default();
    for (flat, &v) in f.values.iter().enumerate() {
        let w: f64 = grid
            .axes()
            .iter()
            .enumerate()
            .map(|(k, a)| a.weight(grid.index_along(flat, k)))
            .product();
        total = total + v * w;
    }
    total
}
