//! Dense complex square matrices.
//!
//! Storage is always dense and row-major. Products scan both operands for
//! their nonzero band first, so multiplying by a diagonal or tridiagonal
//! spin operator costs O(dim^2) rather than O(dim^3) without any separate
//! sparse representation.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::C64;

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

/// Eigenvalues (ascending) and unit eigenvectors (as columns) of a
/// Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        CMatrix {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        CMatrix { dim, data }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries. Returns `None` unless
    /// `data.len()` is a perfect square.
    pub fn from_row_major(data: Vec<C64>) -> Option<Self> {
        let dim = isqrt(data.len())?;
        Some(CMatrix { dim, data })
    }

    /// |v><v| for a (not necessarily normalised) vector.
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        Self::from_fn(n, |i, j| self.data[j * n + i].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// Tr[self * rhs] without forming the product.
    pub fn trace_product(&self, rhs: &CMatrix) -> C64 {
        debug_assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                acc += self.data[i * n + k] * rhs.data[k * n + i];
            }
        }
        acc
    }

    /// Largest |i - j| over nonzero entries (0 for diagonal or empty).
    pub fn bandwidth(&self) -> usize {
        let n = self.dim;
        let mut bw = 0;
        for i in 0..n {
            for j in 0..n {
                let d = i.abs_diff(j);
                if d > bw && self.data[i * n + j] != C64::new(0.0, 0.0) {
                    bw = d;
                }
            }
        }
        bw
    }

    /// Matrix product restricted to the nonzero bands of both operands.
    pub fn matmul(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        let bl = self.bandwidth();
        let br = rhs.bandwidth();
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            let k_lo = i.saturating_sub(bl);
            let k_hi = (i + bl).min(n - 1);
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for k in k_lo..=k_hi {
                let a = self.data[i * n + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let j_lo = k.saturating_sub(br);
                let j_hi = (k + br).min(n - 1);
                let b_row = &rhs.data[k * n..(k + 1) * n];
                for j in j_lo..=j_hi {
                    out_row[j] += a * b_row[j];
                }
            }
        }
        out
    }

    /// AB - BA
    pub fn commutator(&self, rhs: &CMatrix) -> CMatrix {
        &self.matmul(rhs) - &rhs.matmul(self)
    }

    /// AB + BA
    pub fn anticommutator(&self, rhs: &CMatrix) -> CMatrix {
        &self.matmul(rhs) + &rhs.matmul(self)
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> CMatrix {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    /// self += s * other
    pub fn axpy(&mut self, s: C64, other: &CMatrix) {
        assert_eq!(self.dim, other.dim);
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// max |A - A^dagger| over entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let d = (self.data[i * n + j] - self.data[j * n + i].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Sum of |entries|^2, which equals Tr[A^2] when A is Hermitian.
    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// (A + A^dagger) / 2
    pub fn hermitian_part(&self) -> CMatrix {
        let n = self.dim;
        Self::from_fn(n, |i, j| {
            (self.data[i * n + j] + self.data[j * n + i].conj()) * 0.5
        })
    }

    /// U A U^dagger
    pub fn conjugate_by(&self, u: &CMatrix) -> CMatrix {
        u.matmul(self).matmul(&u.adjoint())
    }

    fn to_nalgebra(&self) -> DMatrix<C64> {
        let n = self.dim;
        DMatrix::from_fn(n, n, |i, j| self.data[i * n + j])
    }

    /// Eigendecomposition of the Hermitian part of `self`.
    pub fn hermitian_eigen(&self) -> HermitianEigen {
        let eig = SymmetricEigen::new(self.hermitian_part().to_nalgebra());
        let n = self.dim;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = Self::from_fn(n, |i, j| eig.eigenvectors[(i, order[j])]);
        HermitianEigen { values, vectors }
    }

    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = SymmetricEigen::new(self.hermitian_part().to_nalgebra())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Cheap positive-semidefiniteness test: succeeds iff the Hermitian part
    /// plus `tol * I` admits a Cholesky factorisation.
    pub fn is_psd_within(&self, tol: f64) -> bool {
        // Hand-rolled: a complex Cholesky built on ComplexField::try_sqrt
        // never fails, so pivots must be checked as reals.
        let n = self.dim;
        let mut l = self.hermitian_part();
        for i in 0..n {
            l[(i, i)] += C64::new(tol, 0.0);
        }
        for k in 0..n {
            let mut pivot = l[(k, k)].re;
            for p in 0..k {
                pivot -= l[(k, p)].norm_sqr();
            }
            if !(pivot > 0.0) {
                return false;
            }
            let d = libm::sqrt(pivot);
            l[(k, k)] = C64::new(d, 0.0);
            for i in k + 1..n {
                let mut v = l[(i, k)];
                for p in 0..k {
                    v -= l[(i, p)] * l[(k, p)].conj();
                }
                l[(i, k)] = v / d;
            }
        }
        true
    }
}

impl HermitianEigen {
    /// V diag(f(w)) V^dagger
    pub fn apply_fn(&self, mut f: impl FnMut(f64) -> C64) -> CMatrix {
        let n = self.vectors.dim();
        let fw: Vec<C64> = self.values.iter().map(|&w| f(w)).collect();
        let v = &self.vectors;
        CMatrix::from_fn(n, |i, j| {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                acc += v[(i, k)] * fw[k] * v[(j, k)].conj();
            }
            acc
        })
    }

    /// exp(-i * angle * A) for the Hermitian matrix A this decomposes.
    pub fn unitary(&self, angle: f64) -> CMatrix {
        self.apply_fn(|w| {
            let phase = -angle * w;
            C64::new(libm::cos(phase), libm::sin(phase))
        })
    }
}

/// Half the trace norm of a - b, for Hermitian arguments.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * (a - b)
        .hermitian_eigenvalues()
        .iter()
        .map(|x| x.abs())
        .sum::<f64>()
}

fn isqrt(n: usize) -> Option<usize> {
    let r = libm::sqrt(n as f64) as usize;
    (r.saturating_sub(1)..=r + 1).find(|&k| k * k == n)
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim);
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim);
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

impl Mul<C64> for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: C64) -> CMatrix {
        self.scale(rhs)
    }
}

impl Mul<f64> for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: f64) -> CMatrix {
        self.scale_real(rhs)
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale_real(-1.0)
    }
}

impl AddAssign<&CMatrix> for CMatrix {
    fn add_assign(&mut self, rhs: &CMatrix) {
        assert_eq!(self.dim, rhs.dim);
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&CMatrix> for CMatrix {
    fn sub_assign(&mut self, rhs: &CMatrix) {
        assert_eq!(self.dim, rhs.dim);
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn naive_matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
        let n = a.dim();
        CMatrix::from_fn(n, |i, j| (0..n).map(|k| a[(i, k)] * b[(k, j)]).sum())
    }

    #[test]
    fn banded_product_matches_naive() {
        let n = 7;
        let dense = CMatrix::from_fn(n, |i, j| {
            c((i * 3 + j) as f64 * 0.1, (i as f64) - (j as f64))
        });
        let tri = CMatrix::from_fn(n, |i, j| {
            if i.abs_diff(j) <= 1 {
                c(1.0 + i as f64, 0.5 * j as f64)
            } else {
                c(0.0, 0.0)
            }
        });
        let diag = CMatrix::from_real_diagonal(&[1.0, -2.0, 3.0, 0.0, 5.0, 6.0, -7.0]);
        for (a, b) in [
            (&dense, &tri),
            (&tri, &dense),
            (&diag, &dense),
            (&dense, &diag),
            (&tri, &tri),
        ] {
            assert!(a.matmul(b).max_abs_diff(&naive_matmul(a, b)) < 1e-12);
        }
        assert_eq!(tri.bandwidth(), 1);
        assert_eq!(diag.bandwidth(), 0);
    }

    #[test]
    fn trace_product_matches_product_trace() {
        let a = CMatrix::from_fn(4, |i, j| c(i as f64 + 0.3, j as f64 * 0.7));
        let b = CMatrix::from_fn(4, |i, j| c((i * j) as f64, 1.0 - i as f64));
        assert!((a.trace_product(&b) - a.matmul(&b).trace()).norm() < 1e-12);
    }

    #[test]
    fn eigen_of_pauli_x() {
        let x = CMatrix::from_fn(2, |i, j| if i != j { c(1.0, 0.0) } else { c(0.0, 0.0) });
        let e = x.hermitian_eigen();
        assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        let rebuilt = e.apply_fn(|w| c(w, 0.0));
        assert!(rebuilt.max_abs_diff(&x) < 1e-14);
    }

    #[test]
    fn trace_distance_of_orthogonal_projectors_is_one() {
        let p0 = CMatrix::from_real_diagonal(&[1.0, 0.0]);
        let p1 = CMatrix::from_real_diagonal(&[0.0, 1.0]);
        assert!((trace_distance(&p0, &p1) - 1.0).abs() < 1e-14);
        assert!(trace_distance(&p0, &p0) < 1e-14);
    }

    #[test]
    fn psd_check() {
        assert!(CMatrix::from_real_diagonal(&[0.5, 0.5, 0.0]).is_psd_within(1e-8));
        assert!(!CMatrix::from_real_diagonal(&[0.6, 0.5, -0.1]).is_psd_within(1e-8));
    }

    #[test]
    fn row_major_round_trip_requires_square_length() {
        assert!(CMatrix::from_row_major(vec![c(1.0, 0.0); 9]).is_some());
        assert!(CMatrix::from_row_major(vec![c(1.0, 0.0); 8]).is_none());
    }
}
