//! Fixed-j collective spin algebra in the Dicke basis.
//!
//! Basis ordering is m = +j (index 0) descending to m = -j (index N).
//! Every state dump and CSV consumer relies on this convention.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{CMatrix, HermitianEigen};
use crate::{Error, Result, C64};

/// Tolerances for [`DensityMatrix`] validation.
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-8;
/// Allowed anti-Hermitian residue of an operator flagged Hermitian.
pub const OPERATOR_HERMITIAN_TOL: f64 = 1e-12;

/// N spin-1/2 atoms restricted to the symmetric subspace j = N/2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SpinSystem {
    n_atoms: u32,
}

impl SpinSystem {
    pub fn new(n_atoms: u32) -> Result<Self> {
        if n_atoms == 0 {
            return Err(Error::invalid("n_atoms", "need at least one atom"));
        }
        Ok(SpinSystem { n_atoms })
    }

    #[inline]
    pub fn n_atoms(&self) -> u32 {
        self.n_atoms
    }

    /// 2j, kept as an integer so j itself stays exact.
    #[inline]
    pub fn twice_j(&self) -> u32 {
        self.n_atoms
    }

    #[inline]
    pub fn j(&self) -> f64 {
        f64::from(self.n_atoms) / 2.0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n_atoms as usize + 1
    }

    /// Magnetic quantum number of basis index `k`.
    #[inline]
    pub fn m(&self, k: usize) -> f64 {
        self.j() - k as f64
    }

    pub fn m_values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.dim()).map(move |k| self.m(k))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// A square operator on the Dicke space.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    matrix: CMatrix,
    hermitian: bool,
}

impl OperatorMatrix {
    /// Wraps `matrix`; with `hermitian_hint` set the matrix must be
    /// Hermitian to [`OPERATOR_HERMITIAN_TOL`].
    pub fn new(matrix: CMatrix, hermitian_hint: bool) -> Result<Self> {
        if hermitian_hint {
            let defect = matrix.hermiticity_defect();
            if defect > OPERATOR_HERMITIAN_TOL {
                return Err(Error::invalid(
                    "hermitian_hint",
                    format!("operator is not Hermitian (defect {defect:e})"),
                ));
            }
        }
        Ok(OperatorMatrix {
            matrix,
            hermitian: hermitian_hint,
        })
    }

    pub(crate) fn hermitian_unchecked(matrix: CMatrix) -> Self {
        OperatorMatrix {
            matrix,
            hermitian: true,
        }
    }

    #[inline]
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    #[inline]
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

/// A validated state: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        validate_state(&matrix)?;
        Ok(DensityMatrix { matrix })
    }

    /// Skips validation; callers own the invariants.
    pub(crate) fn from_matrix_unchecked(matrix: CMatrix) -> Self {
        DensityMatrix { matrix }
    }

    /// |psi><psi| / <psi|psi>
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidState(
                "zero or non-finite state vector".into(),
            ));
        }
        Ok(DensityMatrix {
            matrix: CMatrix::outer(psi).scale_real(1.0 / norm),
        })
    }

    /// The Dicke state |j, m> with basis index `k`.
    pub fn basis_state(sys: &SpinSystem, k: usize) -> Result<Self> {
        if k >= sys.dim() {
            return Err(Error::DimensionMismatch {
                expected: sys.dim(),
                found: k,
            });
        }
        let mut psi = vec![C64::new(0.0, 0.0); sys.dim()];
        psi[k] = C64::new(1.0, 0.0);
        Self::pure(&psi)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix {
            matrix: CMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    #[inline]
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Tr[rho^2]
    pub fn purity(&self) -> f64 {
        self.matrix.frobenius_norm_sqr()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix.hermitian_eigenvalues()[0]
    }

    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        crate::linalg::trace_distance(&self.matrix, &other.matrix)
    }
}

/// Checks the density-matrix invariants, naming the first one that fails.
pub fn validate_state(m: &CMatrix) -> Result<()> {
    if m.as_slice()
        .iter()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::InvalidState("non-finite entries".into()));
    }
    let herm = m.hermiticity_defect();
    if herm > HERMITIAN_TOL {
        return Err(Error::InvalidState(format!("Hermiticity defect {herm:e}")));
    }
    let tr = m.trace();
    if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
        return Err(Error::InvalidState(format!(
            "trace {} deviates from 1",
            tr.re
        )));
    }
    if !m.is_psd_within(POSITIVITY_TOL) {
        return Err(Error::InvalidState(format!(
            "eigenvalue below -{POSITIVITY_TOL:e}"
        )));
    }
    Ok(())
}

/// Jx, Jy, Jz, J+, J- for one [`SpinSystem`], built once and shared.
#[derive(Clone, Debug)]
pub struct SpinOperators {
    sys: SpinSystem,
    pub jx: OperatorMatrix,
    pub jy: OperatorMatrix,
    pub jz: OperatorMatrix,
    pub jp: OperatorMatrix,
    pub jm: OperatorMatrix,
    jz_sq: CMatrix,
    jy_sq: CMatrix,
    eig_x: HermitianEigen,
    eig_y: HermitianEigen,
    eig_z: HermitianEigen,
}

impl SpinOperators {
    pub fn new(sys: SpinSystem) -> Self {
        let n = sys.dim();
        let j = sys.j();
        let mut jp = CMatrix::zeros(n);
        // J+ |j,m> = sqrt(j(j+1) - m(m+1)) |j,m+1>; m+1 sits one row up.
        for k in 1..n {
            let m = sys.m(k);
            jp[(k - 1, k)] = C64::new(libm::sqrt(j * (j + 1.0) - m * (m + 1.0)), 0.0);
        }
        let jm = jp.adjoint();
        let jx = (&jp + &jm).scale_real(0.5);
        let jy = (&jp - &jm).scale(C64::new(0.0, -0.5));
        let m_diag: Vec<f64> = sys.m_values().collect();
        let jz = CMatrix::from_real_diagonal(&m_diag);

        let jz_sq = jz.matmul(&jz);
        let jy_sq = jy.matmul(&jy);
        let eig_x = jx.hermitian_eigen();
        let eig_y = jy.hermitian_eigen();
        let eig_z = HermitianEigen {
            values: m_diag.clone(),
            vectors: CMatrix::identity(n),
        };

        SpinOperators {
            sys,
            jx: OperatorMatrix::hermitian_unchecked(jx),
            jy: OperatorMatrix::hermitian_unchecked(jy),
            jz: OperatorMatrix::hermitian_unchecked(jz),
            jp: OperatorMatrix {
                matrix: jp,
                hermitian: false,
            },
            jm: OperatorMatrix {
                matrix: jm,
                hermitian: false,
            },
            jz_sq,
            jy_sq,
            eig_x,
            eig_y,
            eig_z,
        }
    }

    #[inline]
    pub fn system(&self) -> &SpinSystem {
        &self.sys
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.sys.dim()
    }

    pub fn axis(&self, axis: Axis) -> &OperatorMatrix {
        match axis {
            Axis::X => &self.jx,
            Axis::Y => &self.jy,
            Axis::Z => &self.jz,
        }
    }

    /// Jz^2
    pub fn jz_sq(&self) -> &CMatrix {
        &self.jz_sq
    }

    /// Jy^2
    pub fn jy_sq(&self) -> &CMatrix {
        &self.jy_sq
    }

    /// n . J for a (not necessarily unit) direction.
    pub fn along(&self, n: [f64; 3]) -> CMatrix {
        let mut out = self.jx.matrix().scale_real(n[0]);
        out.axpy(C64::new(n[1], 0.0), self.jy.matrix());
        out.axpy(C64::new(n[2], 0.0), self.jz.matrix());
        out
    }

    /// exp(-i angle J_axis)
    pub fn rotation(&self, axis: Axis, angle: f64) -> CMatrix {
        let eig = match axis {
            Axis::X => &self.eig_x,
            Axis::Y => &self.eig_y,
            Axis::Z => &self.eig_z,
        };
        eig.unitary(angle)
    }

    /// exp(-i angle Jy) as a row-major real matrix. Jy is imaginary and
    /// antisymmetric in the Dicke basis, so this rotation is real orthogonal.
    pub fn rotation_y_real(&self, angle: f64) -> Vec<f64> {
        let v = &self.eig_y.vectors;
        let n = v.dim();
        // W = V diag(e^{-i angle w}); U = Re(W V^dagger).
        let phases: Vec<C64> = self
            .eig_y
            .values
            .iter()
            .map(|&w| C64::new(libm::cos(angle * w), -libm::sin(angle * w)))
            .collect();
        let mut w = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                w[i * n + k] = v[(i, k)] * phases[k];
            }
        }
        let mut u = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    let (a, b) = (w[i * n + k], v[(j, k)]);
                    // Re(a * conj(b))
                    acc += a.re * b.re + a.im * b.im;
                }
                u[i * n + j] = acc;
            }
        }
        u
    }

    /// Coherent spin state polarised along +x: |j, j> rotated by pi/2 about y.
    pub fn css_x(&self) -> DensityMatrix {
        let up = DensityMatrix::basis_state(&self.sys, 0).expect("index 0 always exists");
        self.rotate(&up, Axis::Y, core::f64::consts::FRAC_PI_2)
    }

    /// U rho U^dagger with U = exp(-i angle J_axis).
    pub fn rotate(&self, state: &DensityMatrix, axis: Axis, angle: f64) -> DensityMatrix {
        let u = self.rotation(axis, angle);
        DensityMatrix::from_matrix_unchecked(state.matrix().conjugate_by(&u).hermitian_part())
    }

    /// Re <J_axis>
    pub fn mean(&self, axis: Axis, state: &CMatrix) -> f64 {
        self.axis(axis).matrix().trace_product(state).re
    }
}

/// Tr[A rho]
pub fn expectation(op: &OperatorMatrix, state: &DensityMatrix) -> Result<C64> {
    if op.dim() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            found: state.dim(),
        });
    }
    Ok(op.matrix().trace_product(state.matrix()))
}
