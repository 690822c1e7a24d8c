//! Independent reference implementations on nalgebra matrices, plus random
//! test states. Nothing here goes through the crate's own matrix code.
#![allow(dead_code)]

use nalgebra::DMatrix;
use qndsqueeze_core::linalg::CMatrix;
use qndsqueeze_core::spin::{DensityMatrix, SpinOperators, SpinSystem};
use qndsqueeze_core::C64;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

pub type M = DMatrix<C64>;

pub fn ops(n: u32) -> SpinOperators {
    SpinOperators::new(SpinSystem::new(n).unwrap())
}

pub fn to_na(m: &CMatrix) -> M {
    let d = m.dim();
    M::from_fn(d, d, |i, j| m[(i, j)])
}

pub fn from_na(m: &M) -> CMatrix {
    // nalgebra is column-major; the transpose's storage is our row-major.
    CMatrix::from_row_major(m.transpose().as_slice().to_vec()).unwrap()
}

pub struct RefSpin {
    pub jx: M,
    pub jy: M,
    pub jz: M,
}

/// Jz = diag(j..-j); Jx, Jy from <m+1|J+|m> = sqrt((j-m)(j+m+1)).
pub fn reference_spin(n: u32) -> RefSpin {
    let j = f64::from(n) / 2.0;
    let d = n as usize + 1;
    let m = |k: usize| j - k as f64;
    let mut jp = M::zeros(d, d);
    for k in 1..d {
        jp[(k - 1, k)] = C64::new(((j - m(k)) * (j + m(k) + 1.0)).sqrt(), 0.0);
    }
    let jm = jp.adjoint();
    RefSpin {
        jx: (&jp + &jm) * C64::new(0.5, 0.0),
        jy: (&jp - &jm) * C64::new(0.0, -0.5),
        jz: M::from_diagonal(&nalgebra::DVector::from_fn(d, |k, _| C64::new(m(k), 0.0))),
    }
}

pub fn lindblad_d(a: &M, rho: &M) -> M {
    let ad = a.adjoint();
    let ada = &ad * a;
    a * rho * &ad - (&ada * rho + rho * &ada) * C64::new(0.5, 0.0)
}

/// Term-by-term main-text generator in physical time:
/// M D[Jz] - i lambda [Jy, Jz rho + rho Jz] + lambda^2/(eta M) D[Jy].
pub fn reference_rhs(rho: &M, lambda: f64, m: f64, eta: f64, s: &RefSpin) -> M {
    let i = C64::new(0.0, 1.0);
    let anti = &s.jz * rho + rho * &s.jz;
    let comm = &s.jy * &anti - &anti * &s.jy;
    lindblad_d(&s.jz, rho) * C64::new(m, 0.0) - comm * (i * lambda)
        + lindblad_d(&s.jy, rho) * C64::new(lambda * lambda / (eta * m), 0.0)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss(r: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(r)
}

/// Random full-rank density matrix G G^dag / Tr.
pub fn random_state(dim: usize, r: &mut ChaCha8Rng) -> DensityMatrix {
    let g = M::from_fn(dim, dim, |_, _| C64::new(gauss(r), gauss(r)));
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    DensityMatrix::from_matrix(from_na(&(rho / tr))).unwrap()
}

/// Random Hermitian, unit-trace matrix (not necessarily positive).
pub fn random_hermitian_unit_trace(dim: usize, r: &mut ChaCha8Rng) -> CMatrix {
    let g = M::from_fn(dim, dim, |_, _| C64::new(gauss(r), gauss(r)));
    let mut h = (&g + g.adjoint()) * C64::new(0.5, 0.0);
    let shift = (C64::new(1.0, 0.0) - h.trace()) / dim as f64;
    for k in 0..dim {
        h[(k, k)] += shift;
    }
    from_na(&h)
}

pub fn max_abs(m: &M) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
