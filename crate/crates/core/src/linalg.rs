//! Small dense complex linear algebra and complex random sampling.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

pub type C64 = Complex64;
pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is numerically singular (condition estimate {cond:e})")]
    Singular { cond: f64 },
    #[error("linear solve produced non-finite values")]
    NonFinite,
}

/// Power of two nearest to `1 / v`, so scaling is exact.
fn inverse_scale(v: f64) -> f64 {
    if v > 0.0 && v.is_finite() {
        (-v.log2().round()).exp2()
    } else {
        1.0
    }
}

/// Solves `a x = b` by LU with partial pivoting after scaling rows, then
/// columns, to unit maximum magnitude.
///
/// The condition estimate is the ratio of the largest to the smallest pivot
/// magnitude of the scaled matrix; the solve fails when it exceeds `cond_abort`.
pub fn solve(a: &CMatrix, b: &CVector, cond_abort: f64) -> Result<CVector, LinalgError> {
    let mut m = a.clone();
    let mut rhs = b.clone();
    for i in 0..m.nrows() {
        let r = inverse_scale(m.row(i).iter().fold(0.0f64, |acc, v| acc.max(v.norm())));
        m.row_mut(i).scale_mut(r);
        rhs[i] *= r;
    }
    let col_scale: Vec<f64> = (0..m.ncols())
        .map(|j| {
            let c = inverse_scale(m.column(j).iter().fold(0.0f64, |acc, v| acc.max(v.norm())));
            m.column_mut(j).scale_mut(c);
            c
        })
        .collect();
    let lu = m.lu();
    let u = lu.u();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..u.nrows().min(u.ncols()) {
        let p = u[(i, i)].norm();
        lo = lo.min(p);
        hi = hi.max(p);
    }
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(cond <= cond_abort) {
        return Err(LinalgError::Singular { cond });
    }
    let mut x = lu.solve(&rhs).ok_or(LinalgError::Singular { cond })?;
    for (v, c) in x.iter_mut().zip(&col_scale) {
        *v *= *c;
    }
    if x.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        Ok(x)
    } else {
        Err(LinalgError::NonFinite)
    }
}

/// Singular values in decreasing order.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Smallest singular value divided by the largest (0 for a zero matrix).
pub fn relative_smallest_singular_value(a: &CMatrix) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        _ => 0.0,
    }
}

pub fn inf_norm(v: &[C64]) -> f64 {
    v.iter().fold(0.0, |m, c| m.max(c.norm()))
}

pub fn inf_dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

pub fn is_finite(v: &[C64]) -> bool {
    v.iter().all(|c| c.re.is_finite() && c.im.is_finite())
}

/// Standard complex Gaussian with independent N(0,1) real and imaginary parts.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n).map(|_| complex_gaussian(rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let a = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(2.0, 0.0), C64::new(1.0, 1.0), C64::new(0.0, 1.0), C64::new(3.0, 0.0)],
        );
        let x = CVector::from_vec(vec![C64::new(1.0, -1.0), C64::new(0.5, 2.0)]);
        let b = &a * &x;
        let y = solve(&a, &b, 1e13).unwrap();
        assert!((y - x).norm() < 1e-12);
    }

    #[test]
    fn rejects_singular() {
        let a = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(2.0, 0.0), C64::new(4.0, 0.0)],
        );
        let b = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
        assert!(matches!(solve(&a, &b, 1e13), Err(LinalgError::Singular { .. })));
    }

    #[test]
    fn singular_values_of_diagonal() {
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![
            C64::new(0.0, 3.0),
            C64::new(-1.0, 0.0),
        ]));
        let s = singular_values(&a);
        assert!((s[0] - 3.0).abs() < 1e-12 && (s[1] - 1.0).abs() < 1e-12);
        assert!((relative_smallest_singular_value(&a) - 1.0 / 3.0).abs() < 1e-12);
    }
}
