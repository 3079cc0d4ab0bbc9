//! Discretized configuration space of the trainable variables.
//!
//! A [`Grid`] is a tensor product of up to three uniform axes. Values are
//! stored row-major with axis 0 slowest. Periodic axes identify index 0 with
//! index `n` (no duplicated endpoint), so their spacing is `(upper - lower) / n`;
//! every other axis includes both endpoints and uses `(upper - lower) / (n - 1)`.
//!
//! Difference operators are second-order central stencils. At non-periodic
//! ends a reflecting axis mirrors its ghost node (`f[-1] = f[1]`) and an
//! absorbing axis switches to one-sided second-order stencils. Quadrature is
//! the rectangle rule on periodic axes and the trapezoid rule elsewhere; with
//! these choices the periodic Laplacian is self-adjoint under [`integrate`].

mod field;
pub mod io;

pub use field::{
    curl_2d, divergence, gradient, integrate, laplacian, ComplexField, Field, FieldValue,
    ScalarField, VectorField,
};

use crate::error::{Error, Result};
use std::fmt;
use std::str::FromStr;

/// Smallest number of points accepted on any axis.
pub const MIN_POINTS: usize = 4;
/// Largest supported number of dimensions.
pub const MAX_DIMS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Periodic,
    Reflecting,
    Absorbing,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Periodic => "periodic",
            Boundary::Reflecting => "reflecting",
            Boundary::Absorbing => "absorbing",
        })
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(Boundary::Periodic),
            "reflecting" => Ok(Boundary::Reflecting),
            "absorbing" => Ok(Boundary::Absorbing),
            other => Err(Error::InvalidGrid(format!("unknown boundary kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
    pub boundary: Boundary,
}

impl Axis {
    pub fn new(lower: f64, upper: f64, points: usize, boundary: Boundary) -> Self {
        Axis { lower, upper, points, boundary }
    }

    pub fn spacing(&self) -> f64 {
        let extent = self.upper - self.lower;
        match self.boundary {
            Boundary::Periodic => extent / self.points as f64,
            _ => extent / (self.points - 1) as f64,
        }
    }

    pub fn extent(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.lower + i as f64 * self.spacing()
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    /// Quadrature weight of node `i` along this axis.
    pub fn weight(&self, i: usize) -> f64 {
        let h = self.spacing();
        match self.boundary {
            Boundary::Periodic => h,
            _ if i == 0 || i + 1 == self.points => 0.5 * h,
            _ => h,
        }
    }

    fn validate(&self, k: usize) -> Result<()> {
        if !(self.lower.is_finite() && self.upper.is_finite()) {
            return Err(Error::InvalidGrid(format!("axis {k}: bounds must be finite")));
        }
        if self.upper <= self.lower {
            return Err(Error::InvalidGrid(format!(
                "axis {k}: degenerate extent [{}, {}]",
                self.lower, self.upper
            )));
        }
        if self.points < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "axis {k}: {} points, need at least {MIN_POINTS}",
                self.points
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axes: Vec<Axis>,
    strides: Vec<usize>,
    len: usize,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > MAX_DIMS {
            return Err(Error::InvalidGrid(format!(
                "{} dimensions requested, supported 1..={MAX_DIMS}",
                axes.len()
            )));
        }
        for (k, axis) in axes.iter().enumerate() {
            axis.validate(k)?;
        }
        let mut strides = vec![1; axes.len()];
        for k in (0..axes.len() - 1).rev() {
            strides[k] = strides[k + 1] * axes[k + 1].points;
        }
        let len = axes.iter().map(|a| a.points).product();
        Ok(Grid { axes, strides, len })
    }

    /// Builds a grid from per-dimension bounds, counts and boundary kinds.
    pub fn build(
        lower: &[f64],
        upper: &[f64],
        points: &[usize],
        boundary: &[Boundary],
    ) -> Result<Self> {
        let k = lower.len();
        if upper.len() != k || points.len() != k || boundary.len() != k {
            return Err(Error::InvalidGrid(
                "bounds, counts and boundary kinds must have equal length".into(),
            ));
        }
        Grid::new(
            (0..k)
                .map(|d| Axis::new(lower[d], upper[d], points[d], boundary[d]))
                .collect(),
        )
    }

    pub fn line(lower: f64, upper: f64, points: usize, boundary: Boundary) -> Result<Self> {
        Grid::new(vec![Axis::new(lower, upper, points, boundary)])
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    pub fn spacing(&self, k: usize) -> f64 {
        self.axes[k].spacing()
    }

    pub fn stride(&self, k: usize) -> usize {
        self.strides[k]
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.points).collect()
    }

    pub fn is_periodic(&self) -> bool {
        self.axes.iter().all(Axis::is_periodic)
    }

    /// Index along axis `k` of the flat node `flat`.
    #[inline]
    pub fn index_along(&self, flat: usize, k: usize) -> usize {
        (flat / self.strides[k]) % self.axes[k].points
    }

    pub fn unravel(&self, flat: usize) -> Vec<usize> {
        (0..self.dims()).map(|k| self.index_along(flat, k)).collect()
    }

    pub fn ravel(&self, index: &[usize]) -> usize {
        index.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Writes the coordinates of node `flat` into `out`.
    pub fn point_into(&self, flat: usize, out: &mut [f64]) {
        for (k, axis) in self.axes.iter().enumerate() {
            out[k] = axis.coord(self.index_along(flat, k));
        }
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut q = vec![0.0; self.dims()];
        self.point_into(flat, &mut q);
        q
    }

    /// Neighbor of `flat` one step along axis `k` in direction `forward`,
    /// wrapping on periodic axes; `None` past a non-periodic end.
    #[inline]
    pub fn neighbor(&self, flat: usize, k: usize, forward: bool) -> Option<usize> {
        let n = self.axes[k].points;
        let s = self.strides[k];
        let i = self.index_along(flat, k);
        match (forward, self.axes[k].is_periodic()) {
            (true, _) if i + 1 < n => Some(flat + s),
            (true, true) => Some(flat - (n - 1) * s),
            (false, _) if i > 0 => Some(flat - s),
            (false, true) => Some(flat + (n - 1) * s),
            _ => None,
        }
    }

    /// Quadrature weight of every node.
    pub fn weights(&self) -> Vec<f64> {
        (0..self.len)
            .map(|flat| {
                self.axes
                    .iter()
                    .enumerate()
                    .map(|(k, a)| a.weight(self.index_along(flat, k)))
                    .product()
            })
            .collect()
    }

    /// Total measure of the domain.
    pub fn volume(&self) -> f64 {
        self.axes.iter().map(Axis::extent).product()
    }

    /// True when node `flat` lies on a non-periodic boundary.
    pub fn on_boundary(&self, flat: usize) -> bool {
        self.axes.iter().enumerate().any(|(k, a)| {
            let i = self.index_along(flat, k);
            !a.is_periodic() && (i == 0 || i + 1 == a.points)
        })
    }

    /// Closed counter-clockwise loop in the plane of axes `(a, b)` around the
    /// index rectangle `[lo, hi]`; the first node is repeated at the end.
    pub fn rectangle_loop(&self, a: usize, b: usize, lo: [usize; 2], hi: [usize; 2], base: usize) -> Result<Vec<usize>> {
        if a >= self.dims() || b >= self.dims() || a == b {
            return Err(Error::Dimension(format!("loop plane ({a}, {b}) in {} dimensions", self.dims())));
        }
        if lo[0] >= hi[0] || lo[1] >= hi[1] || hi[0] >= self.axes[a].points || hi[1] >= self.axes[b].points {
            return Err(Error::OpenPath);
        }
        let (sa, sb) = (self.strides[a], self.strides[b]);
        let base = base - self.index_along(base, a) * sa - self.index_along(base, b) * sb;
        let node = |i: usize, j: usize| base + i * sa + j * sb;
        let mut path = Vec::new();
        path.extend((lo[0]..hi[0]).map(|i| node(i, lo[1])));
        path.extend((lo[1]..hi[1]).map(|j| node(hi[0], j)));
        path.extend((lo[0] + 1..=hi[0]).rev().map(|i| node(i, hi[1])));
        path.extend((lo[1] + 1..=hi[1]).rev().map(|j| node(lo[0], j)));
        path.push(node(lo[0], lo[1]));
        Ok(path)
    }

    /// For each edge of a closed lattice path, the axis and direction of the
    /// step. Fails unless the path returns to its start and every edge joins
    /// nearest neighbors.
    pub fn loop_steps(&self, path: &[usize]) -> Result<Vec<(usize, bool)>> {
        if path.len() < 3 || path.first() != path.last() || path.iter().any(|&f| f >= self.len) {
            return Err(Error::OpenPath);
        }
        path.windows(2)
            .map(|w| {
                (0..self.dims())
                    .flat_map(|k| [(k, true), (k, false)])
                    .find(|&(k, fwd)| self.neighbor(w[0], k, fwd) == Some(w[1]))
                    .ok_or(Error::OpenPath)
            })
            .collect()
    }

    pub(crate) fn check(&self, other: &Grid, what: &'static str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(what))
        }
    }
}
