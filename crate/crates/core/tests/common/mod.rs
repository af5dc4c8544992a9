//! Finite-difference oracles shared by the integration tests.

#![allow(dead_code)]

use nalgebra::{Matrix3, SymmetricEigen};
use vpid::Tensor2;

pub fn to_na(t: &Tensor2) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| t[(i, j)])
}

pub fn from_na(m: &Matrix3<f64>) -> Tensor2 {
    let mut t = Tensor2::zero();
    for i in 0..3 {
        for j in 0..3 {
            t.0[i][j] = m[(i, j)];
        }
    }
    t
}

/// `B^{-1/2} A B^{-1/2}`: symmetric and similar to `A B⁻¹`.
pub fn congruent(a: &Tensor2, b: &Tensor2) -> Tensor2 {
    let eig = SymmetricEigen::new(to_na(b));
    let d = Matrix3::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    let r = eig.eigenvectors * d * eig.eigenvectors.transpose();
    let out = r * to_na(a) * r;
    from_na(&((out + out.transpose()) * 0.5))
}

/// `2 ∂ψ/∂A` by central differences over the six independent components.
pub fn fd_gradient(a: &Tensor2, psi: impl Fn(&Tensor2) -> f64) -> Tensor2 {
    let h = 1e-6 * a.frobenius_norm();
    let mut out = Tensor2::zero();
    for i in 0..3 {
        for j in i..3 {
            let dir = if i == j {
                Tensor2::basis_dyad(i, i)
            } else {
                Tensor2::basis_dyad(i, j) + Tensor2::basis_dyad(j, i)
            };
            let d = (psi(&(*a + dir * h)) - psi(&(*a - dir * h))) / (2.0 * h);
            let v = if i == j { 2.0 * d } else { d };
            out.0[i][j] = v;
            out.0[j][i] = v;
        }
    }
    out
}

/// `FᵀF` with `F = 1 + amplitude · entries`.
pub fn spd(entries: [f64; 9], amplitude: f64) -> Tensor2 {
    let mut f = Tensor2::identity();
    for (k, e) in entries.iter().enumerate() {
        f.0[k / 3][k % 3] += amplitude * e;
    }
    f.transpose() * f
}

pub fn rel_err(a: &Tensor2, b: &Tensor2) -> f64 {
    (*a - *b).frobenius_norm() / b.frobenius_norm().max(1e-12)
}
