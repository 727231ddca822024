//! Complex two- and three-view geometry helpers, numeric and symbolic.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;

use crate::expr::{Expr, C64};
use crate::linalg::complex_gaussian;

pub type M3 = Matrix3<C64>;
pub type V3 = Vector3<C64>;
pub type EM3 = [[Expr; 3]; 3];
pub type EV3 = [Expr; 3];

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn random_v3<R: Rng + ?Sized>(rng: &mut R) -> V3 {
    V3::new(complex_gaussian(rng), complex_gaussian(rng), complex_gaussian(rng))
}

/// Rotation from a generic complex quaternion, normalized by the complex
/// quadratic form so that `R^T R = I` and `det R = 1` hold identically.
pub fn rotation_from_quaternion(a: C64, b: C64, cq: C64, d: C64) -> M3 {
    let two = c(2.0);
    let m = M3::new(
        a * a + b * b - cq * cq - d * d,
        two * (b * cq - a * d),
        two * (b * d + a * cq),
        two * (b * cq + a * d),
        a * a - b * b + cq * cq - d * d,
        two * (cq * d - a * b),
        two * (b * d - a * cq),
        two * (cq * d + a * b),
        a * a - b * b - cq * cq + d * d,
    );
    m / (a * a + b * b + cq * cq + d * d)
}

pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> M3 {
    let q: Vec<C64> = (0..4).map(|_| complex_gaussian(rng)).collect();
    rotation_from_quaternion(q[0], q[1], q[2], q[3])
}

/// Bilinear (non-conjugating) dot product.
pub fn bdot(a: &V3, b: &V3) -> C64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn skew(t: &V3) -> M3 {
    let z = c(0.0);
    M3::new(z, -t[2], t[1], t[2], z, -t[0], -t[1], t[0], z)
}

/// Affine chart point: divides by the last coordinate.
pub fn dehomogenize(v: &V3) -> V3 {
    v / v[2]
}

/// Row-major entries.
pub fn entries(m: &M3) -> Vec<C64> {
    (0..3).flat_map(|i| (0..3).map(move |j| m[(i, j)])).collect()
}

pub fn from_entries(e: &[C64]) -> M3 {
    M3::from_row_slice(e)
}

/// Largest entry of `|R^T R - I|` and `|det R - 1|`.
pub fn rotation_defect(r: &M3) -> f64 {
    let e = r.transpose() * r - M3::identity();
    let orth = e.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    orth.max((r.determinant() - c(1.0)).norm())
}

// symbolic helpers

/// 3x3 matrix of unknowns `x[offset + 3 i + j]`.
pub fn var_matrix(offset: usize) -> EM3 {
    std::array::from_fn(|i| std::array::from_fn(|j| Expr::var(offset + 3 * i + j)))
}

pub fn var_vec(offset: usize) -> EV3 {
    std::array::from_fn(|i| Expr::var(offset + i))
}

pub fn param_vec2(offset: usize) -> EV3 {
    [Expr::param(offset), Expr::param(offset + 1), Expr::one()]
}

pub fn e_transpose(m: &EM3) -> EM3 {
    std::array::from_fn(|i| std::array::from_fn(|j| m[j][i].clone()))
}

pub fn e_mat_vec(m: &EM3, v: &EV3) -> EV3 {
    std::array::from_fn(|i| Expr::sum((0..3).map(|k| &m[i][k] * &v[k])))
}

pub fn e_mat_mul(a: &EM3, b: &EM3) -> EM3 {
    std::array::from_fn(|i| std::array::from_fn(|j| Expr::sum((0..3).map(|k| &a[i][k] * &b[k][j]))))
}

pub fn e_det3(m: &EM3) -> Expr {
    let minor = |r1: usize, r2: usize, c1: usize, c2: usize| &m[r1][c1] * &m[r2][c2] - &m[r1][c2] * &m[r2][c1];
    &m[0][0] * minor(1, 2, 1, 2) - &m[0][1] * minor(1, 2, 0, 2) + &m[0][2] * minor(1, 2, 0, 1)
}

pub fn e_cross(a: &EV3, b: &EV3) -> EV3 {
    [
        &a[1] * &b[2] - &a[2] * &b[1],
        &a[2] * &b[0] - &a[0] * &b[2],
        &a[0] * &b[1] - &a[1] * &b[0],
    ]
}

pub fn e_dot(a: &EV3, b: &EV3) -> Expr {
    Expr::sum((0..3).map(|k| &a[k] * &b[k]))
}

/// Upper triangle of `R^T R - I`.
pub fn orthogonality(r: &EM3) -> Vec<Expr> {
    let mut out = Vec::with_capacity(6);
    for i in 0..3 {
        for j in i..3 {
            let g = Expr::sum((0..3).map(|k| &r[k][i] * &r[k][j]));
            out.push(if i == j { g - 1.0 } else { g });
        }
    }
    out
}

/// Symbolic determinant by cofactor expansion along the first row.
pub fn e_det(m: &[Vec<Expr>]) -> Expr {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    Expr::sum((0..n).map(|j| {
        let sub: Vec<Vec<Expr>> = m[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, e)| e.clone()).collect())
            .collect();
        let term = &m[0][j] * e_det(&sub);
        if j % 2 == 0 {
            term
        } else {
            -term
        }
    }))
}
