//! Banded solvers shared by the implicit Fokker–Planck and Crank–Nicolson
//! propagators, plus a Sturm-sequence eigensolver for symmetric tridiagonal
//! matrices.

use num_complex::Complex64;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait TriScalar:
    Copy
    + Default
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn one() -> Self;
    fn magnitude(self) -> f64;
}

impl TriScalar for f64 {
    fn one() -> Self {
        1.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl TriScalar for Complex64 {
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Solves a tridiagonal system in place (Thomas algorithm).
///
/// Row `i` reads `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`;
/// `lower[0]` and `upper[n-1]` are ignored.
pub fn solve_tridiagonal<T: TriScalar>(lower: &[T], diag: &[T], upper: &[T], rhs: &mut [T]) {
    let n = diag.len();
    debug_assert!(lower.len() == n && upper.len() == n && rhs.len() == n);
    let mut c = vec![T::default(); n];
    let mut beta = diag[0];
    rhs[0] = rhs[0] / beta;
    for i in 1..n {
        c[i - 1] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * c[i - 1];
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] = rhs[i] - c[i] * next;
    }
}

/// Solves a cyclic tridiagonal system in place (Sherman–Morrison).
///
/// As [`solve_tridiagonal`], with `lower[0]` coupling row 0 to `x[n-1]` and
/// `upper[n-1]` coupling row `n-1` to `x[0]`.
pub fn solve_cyclic<T: TriScalar>(lower: &[T], diag: &[T], upper: &[T], rhs: &mut [T]) {
    let n = diag.len();
    let top_right = lower[0];
    let bottom_left = upper[n - 1];
    let gamma = -diag[0];
    let mut bb = diag.to_vec();
    bb[0] = diag[0] - gamma;
    bb[n - 1] = diag[n - 1] - bottom_left * top_right / gamma;
    solve_tridiagonal(lower, &bb, upper, rhs);
    let mut z = vec![T::default(); n];
    z[0] = gamma;
    z[n - 1] = bottom_left;
    solve_tridiagonal(lower, &bb, upper, &mut z);
    let fact = (rhs[0] + top_right * rhs[n - 1] / gamma)
        / (T::one() + z[0] + top_right * z[n - 1] / gamma);
    for (x, zi) in rhs.iter_mut().zip(&z) {
        *x = *x - fact * *zi;
    }
}

/// Number of eigenvalues below `x` of the symmetric tridiagonal matrix with
/// diagonal `d` and off-diagonal `e` (`e[i]` couples `i` and `i+1`).
pub fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..d.len() {
        let off = if i == 0 { 0.0 } else { e[i - 1] * e[i - 1] / q };
        q = d[i] - x - off;
        if q == 0.0 {
            q = -f64::EPSILON * (d[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Lowest `count` eigenpairs of a symmetric tridiagonal matrix, eigenvectors
/// normalized in the Euclidean norm.
pub fn tridiagonal_eigen(d: &[f64], e: &[f64], count: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = d.len();
    let count = count.min(n);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    let scale = hi.abs().max(lo.abs()).max(1.0);
    let mut values = Vec::with_capacity(count);
    for k in 0..count {
        let (mut a, mut b) = (lo, hi);
        while b - a > 4.0 * f64::EPSILON * scale {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if sturm_count(d, e, mid) > k {
                b = mid;
            } else {
                a = mid;
            }
        }
        values.push(0.5 * (a + b));
    }
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(count);
    for (k, &lambda) in values.iter().enumerate() {
        let shift = lambda + 1e-10 * scale * if k % 2 == 0 { 1.0 } else { -1.0 };
        let lower: Vec<f64> = (0..n).map(|i| if i > 0 { e[i - 1] } else { 0.0 }).collect();
        let upper: Vec<f64> = (0..n).map(|i| if i + 1 < n { e[i] } else { 0.0 }).collect();
        let diag: Vec<f64> = d.iter().map(|x| x - shift).collect();
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i * 7919 + k * 104729) % 97) as f64).collect();
        for _ in 0..4 {
            solve_tridiagonal(&lower, &diag, &upper, &mut v);
            for prev in &vectors {
                let dot: f64 = prev.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(prev).for_each(|(x, p)| *x -= dot * p);
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
        }
        // fix sign so the largest component is positive
        let (imax, _) = v
            .iter()
            .enumerate()
            .fold((0, 0.0), |(bi, bv), (i, &x)| if x.abs() > bv { (i, x.abs()) } else { (bi, bv) });
        if v[imax] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        vectors.push(v);
    }
    (values, vectors)
}
