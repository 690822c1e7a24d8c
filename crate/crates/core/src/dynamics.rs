//! Unconditional measurement-plus-feedback master equation.
//!
//! Time is dimensionless, tau = M t. The generator divided by M is
//!
//! ```text
//! D[Jz] rho - i r [Jy, Jz rho + rho Jz] + (r^2 / eta) D[Jy] rho,   r = lambda / M
//! ```
//!
//! integrated with classical fixed-step RK4. Each user step `dt` is split
//! into equal substeps small enough for RK4 stability, since the dissipator
//! D[Jz] alone has eigenvalues down to -N^2/2.

use alloc::format;

use crate::design::HBAR;
use crate::feedback::{FeedbackKind, FeedbackLaw};
use crate::linalg::CMatrix;
use crate::observables::{ObservableSeries, Sample};
use crate::spin::{validate_state, DensityMatrix, OperatorMatrix, SpinOperators};
use crate::{Error, Result, C64};

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_SAMPLE_EVERY: usize = 10;
pub const MAX_DT: f64 = 1e-2;
/// RK4 substeps satisfy `h * stiffness <= RK4_STABILITY_BUDGET` (real-axis limit 2.785).
pub const RK4_STABILITY_BUDGET: f64 = 2.5;
/// Warn when `kappa / (chi |beta| sqrt(N))` falls below this.
pub const CAVITY_ELIMINATION_RATIO: f64 = 10.0;
/// Warn when `theta sqrt(N)` reaches this.
pub const FREESPACE_PHASE_BOUND: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeParams {
    /// M, in 1/time. Zero freezes the dynamics.
    pub measurement_strength: f64,
    /// eta in (0, 1].
    pub efficiency: f64,
    /// Step in units of Mt.
    pub dt: f64,
    /// Final Mt.
    pub t_max: f64,
    /// Record a sample every this many steps.
    pub sample_every: usize,
}

impl Default for MeParams {
    fn default() -> Self {
        MeParams {
            measurement_strength: 1.0,
            efficiency: 1.0,
            dt: DEFAULT_DT,
            t_max: 2.0,
            sample_every: DEFAULT_SAMPLE_EVERY,
        }
    }
}

impl MeParams {
    pub fn validate(&self) -> Result<()> {
        let m = self.measurement_strength;
        if !(m >= 0.0) || !m.is_finite() {
            return Err(Error::invalid(
                "measurement_strength",
                "must be finite and >= 0",
            ));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::invalid("efficiency", "must lie in (0, 1]"));
        }
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(Error::invalid("dt", format!("must lie in (0, {MAX_DT}]")));
        }
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(Error::invalid("t_max", "must be finite and > 0"));
        }
        if self.sample_every == 0 {
            return Err(Error::invalid("sample_every", "must be >= 1"));
        }
        Ok(())
    }

    /// Number of `dt` steps needed to reach `t_max`.
    pub fn n_steps(&self) -> usize {
        libm::ceil(self.t_max / self.dt - 1e-9) as usize
    }

    pub fn sample_spacing(&self) -> f64 {
        self.dt * self.sample_every as f64
    }

    /// Step indices at which samples are recorded (always includes the last).
    pub fn is_sample_step(&self, k: usize) -> bool {
        k.is_multiple_of(self.sample_every) || k == self.n_steps()
    }
}

/// D[a] rho = a rho a^dag - (a^dag a rho + rho a^dag a) / 2 for Hermitian `a`
/// with `a_sq = a^2`.
fn dissipator_hermitian(a: &CMatrix, a_sq: &CMatrix, rho: &CMatrix) -> CMatrix {
    let a_rho = a.matmul(rho);
    let mut out = a_rho.matmul(a);
    let left = a_sq.matmul(rho);
    // rho a^2 = (a^2 rho)^dag when rho is Hermitian; rho need not be here.
    let right = rho.matmul(a_sq);
    out.axpy(C64::new(-0.5, 0.0), &left);
    out.axpy(C64::new(-0.5, 0.0), &right);
    out
}

/// General D[a] rho.
fn dissipator(a: &CMatrix, rho: &CMatrix) -> CMatrix {
    let a_dag = a.adjoint();
    let ada = a_dag.matmul(a);
    let mut out = a.matmul(rho).matmul(&a_dag);
    out.axpy(C64::new(-0.5, 0.0), &ada.matmul(rho));
    out.axpy(C64::new(-0.5, 0.0), &rho.matmul(&ada));
    out
}

/// d rho / d tau with r = lambda / M.
pub(crate) fn scaled_rhs(
    rho: &CMatrix,
    ratio: f64,
    efficiency: f64,
    ops: &SpinOperators,
) -> CMatrix {
    let jz = ops.jz.matrix();
    let mut out = dissipator_hermitian(jz, ops.jz_sq(), rho);
    if ratio != 0.0 {
        let jy = ops.jy.matrix();
        let anti = &jz.matmul(rho) + &rho.matmul(jz);
        let comm = &jy.matmul(&anti) - &anti.matmul(jy);
        out.axpy(C64::new(0.0, -ratio), &comm);
        let d_y = dissipator_hermitian(jy, ops.jy_sq(), rho);
        out.axpy(C64::new(ratio * ratio / efficiency, 0.0), &d_y);
    }
    out
}

fn check_feedback(lambda: f64, params: &MeParams) -> Result<()> {
    if !lambda.is_finite() {
        return Err(Error::invalid("lambda", "must be finite"));
    }
    if params.measurement_strength == 0.0 && lambda != 0.0 {
        return Err(Error::FeedbackWithoutMeasurement);
    }
    Ok(())
}

/// d rho / dt = M D[Jz] rho - i lambda [Jy, Jz rho + rho Jz] + lambda^2/(eta M) D[Jy] rho.
pub fn me_rhs(
    rho: &CMatrix,
    lambda: f64,
    params: &MeParams,
    ops: &SpinOperators,
) -> Result<CMatrix> {
    check_feedback(lambda, params)?;
    let m = params.measurement_strength;
    if m == 0.0 {
        return Ok(CMatrix::zeros(rho.dim()));
    }
    Ok(scaled_rhs(rho, lambda / m, params.efficiency, ops).scale_real(m))
}

/// The same generator in Lindblad form,
/// `-i/2 [c^dag F + F c, rho] + D[c - iF] rho + ((1 - eta)/eta) D[F] rho`
/// with `c = sqrt(M) Jz`, `F = lambda Jy / sqrt(M)`.
pub fn me_rhs_lindblad(
    rho: &CMatrix,
    lambda: f64,
    params: &MeParams,
    ops: &SpinOperators,
) -> Result<CMatrix> {
    check_feedback(lambda, params)?;
    let m = params.measurement_strength;
    if m == 0.0 {
        return Ok(CMatrix::zeros(rho.dim()));
    }
    let eta = params.efficiency;
    let sqrt_m = libm::sqrt(m);
    let c = ops.jz.matrix().scale_real(sqrt_m);
    let f = ops.jy.matrix().scale_real(lambda / sqrt_m);

    let h = effective_hamiltonian_matrix(&c, &f);
    let mut out = h.commutator(rho).scale(C64::new(0.0, -1.0));
    let jump = &c - &f.scale(C64::new(0.0, 1.0));
    out += &dissipator(&jump, rho);
    if eta < 1.0 {
        out.axpy(C64::new((1.0 - eta) / eta, 0.0), &dissipator(&f, rho));
    }
    Ok(out)
}

/// (c^dag F + F c) / 2
fn effective_hamiltonian_matrix(c: &CMatrix, f: &CMatrix) -> CMatrix {
    (&c.adjoint().matmul(f) + &f.matmul(c)).scale_real(0.5)
}

/// Reversible part of the Lindblad form: `lambda (Jz Jy + Jy Jz) / 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveHamiltonian {
    pub matrix: OperatorMatrix,
    pub lambda: f64,
}

pub fn effective_hamiltonian(lambda: f64, ops: &SpinOperators) -> Result<EffectiveHamiltonian> {
    if !lambda.is_finite() {
        return Err(Error::invalid("lambda", "must be finite"));
    }
    let anti = ops.jz.matrix().anticommutator(ops.jy.matrix());
    Ok(EffectiveHamiltonian {
        matrix: OperatorMatrix::new(anti.scale_real(0.5 * lambda).hermitian_part(), true)?,
        lambda,
    })
}

/// Upper estimate of the generator's spectral radius in tau units.
fn stiffness(ratio: f64, efficiency: f64, ops: &SpinOperators) -> f64 {
    let j = ops.system().j();
    let r = ratio.abs();
    2.0 * j * j * ((1.0 + r) * (1.0 + r) + r + (1.0 - efficiency) / efficiency * r * r)
}

/// Evolves `rho0` under the master equation, calling `on_sample` with
/// (tau, lambda, state) at every sample step. Returns the final state.
pub fn evolve_me<F>(
    rho0: &DensityMatrix,
    params: &MeParams,
    law: &FeedbackLaw,
    ops: &SpinOperators,
    mut on_sample: F,
) -> Result<DensityMatrix>
where
    F: FnMut(f64, f64, &DensityMatrix) -> Result<()>,
{
    params.validate()?;
    if rho0.dim() != ops.dim() {
        return Err(Error::DimensionMismatch {
            expected: ops.dim(),
            found: rho0.dim(),
        });
    }
    let m = params.measurement_strength;
    let eta = params.efficiency;
    if m == 0.0 {
        if let FeedbackKind::Constant(l) = law.kind() {
            if l * law.scale() != 0.0 {
                return Err(Error::FeedbackWithoutMeasurement);
            }
        }
    }
    let ratio_at = |tau: f64, rho: &CMatrix| -> Result<f64> {
        if m == 0.0 {
            return Ok(0.0);
        }
        Ok(law.lambda(tau, m, rho, ops)? / m)
    };

    let n_steps = params.n_steps();
    let mut rho = rho0.matrix().clone();
    let mut r_now = ratio_at(0.0, &rho)?;
    on_sample(0.0, r_now * m, rho0)?;

    for k in 0..n_steps {
        let t0 = k as f64 * params.dt;
        let t1 = (k + 1) as f64 * params.dt;
        if m != 0.0 {
            // Peak |r| over the step; the analytic law falls then rises, so the ends bound it.
            let r_end = match law.kind() {
                FeedbackKind::Analytic => ratio_at(t1, &rho)?,
                _ => r_now,
            };
            let s = stiffness(r_now.abs().max(r_end.abs()), eta, ops);
            let n_sub = libm::ceil(params.dt * s / RK4_STABILITY_BUDGET).max(1.0) as usize;
            let h = params.dt / n_sub as f64;
            for sub in 0..n_sub {
                let t = t0 + sub as f64 * h;
                rho = rk4_step(&rho, t, h, eta, ops, &ratio_at)?;
            }
        }
        let step = k + 1;
        r_now = ratio_at(t1, &rho)?;
        if params.is_sample_step(step) {
            validate_state(&rho).map_err(|e| Error::InvariantViolation {
                tau: t1,
                detail: format!("{e}; step too large for this N"),
            })?;
            let state = DensityMatrix::from_matrix_unchecked(rho.clone());
            on_sample(t1, r_now * m, &state)?;
        }
    }
    validate_state(&rho).map_err(|e| Error::InvariantViolation {
        tau: n_steps as f64 * params.dt,
        detail: format!("{e}"),
    })?;
    Ok(DensityMatrix::from_matrix_unchecked(rho))
}

fn rk4_step(
    rho: &CMatrix,
    t: f64,
    h: f64,
    eta: f64,
    ops: &SpinOperators,
    ratio_at: &dyn Fn(f64, &CMatrix) -> Result<f64>,
) -> Result<CMatrix> {
    let half = C64::new(0.5 * h, 0.0);
    let k1 = scaled_rhs(rho, ratio_at(t, rho)?, eta, ops);
    let mut y = rho.clone();
    y.axpy(half, &k1);
    let k2 = scaled_rhs(&y, ratio_at(t + 0.5 * h, &y)?, eta, ops);
    let mut y = rho.clone();
    y.axpy(half, &k2);
    let k3 = scaled_rhs(&y, ratio_at(t + 0.5 * h, &y)?, eta, ops);
    let mut y = rho.clone();
    y.axpy(C64::new(h, 0.0), &k3);
    let k4 = scaled_rhs(&y, ratio_at(t + h, &y)?, eta, ops);

    let mut out = rho.clone();
    out.axpy(C64::new(h / 6.0, 0.0), &k1);
    out.axpy(C64::new(h / 3.0, 0.0), &k2);
    out.axpy(C64::new(h / 3.0, 0.0), &k3);
    out.axpy(C64::new(h / 6.0, 0.0), &k4);
    Ok(out)
}

/// Integrates the master equation and records the observable series.
pub fn integrate_me(
    rho0: &DensityMatrix,
    params: &MeParams,
    law: &FeedbackLaw,
    ops: &SpinOperators,
) -> Result<(ObservableSeries, DensityMatrix)> {
    let mut series = ObservableSeries::new(ops.system().n_atoms());
    let last = evolve_me(rho0, params, law, ops, |tau, lambda, state| {
        series.push(Sample::measure(tau, lambda, state.matrix(), ops));
        Ok(())
    })?;
    Ok((series, last))
}

/// Cavity readout: `M = 8 chi^2 P / (hbar omega kappa^2)` (SI).
pub fn m_from_cavity(chi: f64, power: f64, omega: f64, kappa: f64) -> Result<f64> {
    for (name, v) in [
        ("chi", chi),
        ("power", power),
        ("omega", omega),
        ("kappa", kappa),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::invalid(name, "must be finite and > 0"));
        }
    }
    Ok(8.0 * chi * chi * power / (HBAR * omega * kappa * kappa))
}

/// Adiabatic-elimination margin `kappa / (chi |beta| sqrt(N))`; below
/// [`CAVITY_ELIMINATION_RATIO`] the reduced description is questionable.
pub fn cavity_elimination_ratio(kappa: f64, chi: f64, beta_abs: f64, n_atoms: f64) -> f64 {
    kappa / (chi * beta_abs * libm::sqrt(n_atoms))
}

/// Free-space readout: `M = P theta^2 / (hbar omega)` (SI).
pub fn m_from_freespace(theta: f64, power: f64, omega: f64) -> Result<f64> {
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(Error::invalid("theta", "must be finite and >= 0"));
    }
    for (name, v) in [("power", power), ("omega", omega)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::invalid(name, "must be finite and > 0"));
        }
    }
    Ok(power * theta * theta / (HBAR * omega))
}

/// False once `theta sqrt(N)` reaches [`FREESPACE_PHASE_BOUND`].
pub fn freespace_phase_ok(theta: f64, n_atoms: f64) -> bool {
    theta * libm::sqrt(n_atoms) < FREESPACE_PHASE_BOUND
}
