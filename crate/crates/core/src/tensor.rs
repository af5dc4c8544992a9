//! Dense 3×3 second-order tensors.
//!
//! Only what the constitutive equations need: products, inverse, determinant,
//! deviatoric and unimodular parts. Components are stored row-major.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

/// A second-order tensor in a fixed Cartesian basis.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Tensor2(pub [[f64; 3]; 3]);

impl Tensor2 {
    pub const fn zero() -> Self {
        Tensor2([[0.0; 3]; 3])
    }

    pub const fn identity() -> Self {
        Tensor2([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub const fn from_rows(rows: [[f64; 3]; 3]) -> Self {
        Tensor2(rows)
    }

    pub const fn diag(a: f64, b: f64, c: f64) -> Self {
        Tensor2([[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]])
    }

    /// Dyadic product of basis vectors, `e_i ⊗ e_j`.
    pub fn basis_dyad(i: usize, j: usize) -> Self {
        let mut t = Self::zero();
        t.0[i][j] = 1.0;
        t
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn det(&self) -> f64 {
        let a = &self.0;
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    }

    pub fn transpose(&self) -> Self {
        let a = &self.0;
        Tensor2([
            [a[0][0], a[1][0], a[2][0]],
            [a[0][1], a[1][1], a[2][1]],
            [a[0][2], a[1][2], a[2][2]],
        ])
    }

    /// Inverse via adjugate over determinant.
    pub fn inverse(&self) -> Result<Self> {
        let a = &self.0;
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::SingularTensor);
        }
        let r = 1.0 / det;
        Ok(Tensor2([
            [
                (a[1][1] * a[2][2] - a[1][2] * a[2][1]) * r,
                (a[0][2] * a[2][1] - a[0][1] * a[2][2]) * r,
                (a[0][1] * a[1][2] - a[0][2] * a[1][1]) * r,
            ],
            [
                (a[1][2] * a[2][0] - a[1][0] * a[2][2]) * r,
                (a[0][0] * a[2][2] - a[0][2] * a[2][0]) * r,
                (a[0][2] * a[1][0] - a[0][0] * a[1][2]) * r,
            ],
            [
                (a[1][0] * a[2][1] - a[1][1] * a[2][0]) * r,
                (a[0][1] * a[2][0] - a[0][0] * a[2][1]) * r,
                (a[0][0] * a[1][1] - a[0][1] * a[1][0]) * r,
            ],
        ]))
    }

    /// `A − (tr A / 3) 1`
    pub fn deviator(&self) -> Self {
        let p = self.trace() / 3.0;
        let mut d = *self;
        for i in 0..3 {
            d.0[i][i] -= p;
        }
        d
    }

    /// Volume-preserving part `(det A)^(-1/3) A`.
    pub fn unimodular(&self) -> Result<Self> {
        let det = self.det();
        if !(det > 0.0) {
            return Err(Error::NonPositiveDeterminant(det));
        }
        Ok(*self * det.cbrt().recip())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.ddot(self).sqrt()
    }

    /// Full contraction `A : B = Σ A_ij B_ij`.
    pub fn ddot(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += self.0[i][j] * other.0[i][j];
            }
        }
        s
    }

    /// `tr(A B)` without forming the product.
    pub fn trace_of_product(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for k in 0..3 {
                s += self.0[i][k] * other.0[k][i];
            }
        }
        s
    }

    pub fn symmetric_part(&self) -> Self {
        let mut s = *self;
        for i in 0..3 {
            for j in (i + 1)..3 {
                let m = 0.5 * (self.0[i][j] + self.0[j][i]);
                s.0[i][j] = m;
                s.0[j][i] = m;
            }
        }
        s
    }

    /// `‖A − Aᵀ‖`
    pub fn asymmetry(&self) -> f64 {
        (*self - self.transpose()).frobenius_norm()
    }

    /// Sylvester's criterion on the symmetric part. Callers are expected to
    /// pass tensors that are symmetric up to round-off.
    pub fn is_positive_definite(&self) -> bool {
        let a = &self.0;
        let m1 = a[0][0];
        let m2 = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        m1 > 0.0 && m2 > 0.0 && self.det() > 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for Tensor2 {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Tensor2 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.0[i][j]
    }
}

impl Add for Tensor2 {
    type Output = Tensor2;
    fn add(mut self, rhs: Tensor2) -> Tensor2 {
        self += rhs;
        self
    }
}

impl AddAssign for Tensor2 {
    fn add_assign(&mut self, rhs: Tensor2) {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] += rhs.0[i][j];
            }
        }
    }
}

impl Sub for Tensor2 {
    type Output = Tensor2;
    fn sub(mut self, rhs: Tensor2) -> Tensor2 {
        self -= rhs;
        self
    }
}

impl SubAssign for Tensor2 {
    fn sub_assign(&mut self, rhs: Tensor2) {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] -= rhs.0[i][j];
            }
        }
    }
}

impl Neg for Tensor2 {
    type Output = Tensor2;
    fn neg(self) -> Tensor2 {
        self * -1.0
    }
}

impl Mul<f64> for Tensor2 {
    type Output = Tensor2;
    fn mul(mut self, rhs: f64) -> Tensor2 {
        for v in self.0.iter_mut().flatten() {
            *v *= rhs;
        }
        self
    }
}

impl Mul<Tensor2> for f64 {
    type Output = Tensor2;
    fn mul(self, rhs: Tensor2) -> Tensor2 {
        rhs * self
    }
}

/// Matrix product.
impl Mul for Tensor2 {
    type Output = Tensor2;
    fn mul(self, rhs: Tensor2) -> Tensor2 {
        let mut c = [[0.0; 3]; 3];
        for (i, row) in c.iter_mut().enumerate() {
            for (j, cij) in row.iter_mut().enumerate() {
                *cij = self.0[i][0] * rhs.0[0][j]
                    + self.0[i][1] * rhs.0[1][j]
                    + self.0[i][2] * rhs.0[2][j];
            }
        }
        Tensor2(c)
    }
}
