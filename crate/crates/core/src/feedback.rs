//! Feedback-strength policies lambda(t).

use crate::linalg::CMatrix;
use crate::spin::{Axis, DensityMatrix, OperatorMatrix, SpinOperators};
use crate::{Error, Result, C64};

/// Below this fraction of j the conditional law refuses to divide by <Jx>.
pub const MEAN_SPIN_COLLAPSE_FRACTION: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FeedbackKind {
    Off,
    /// Fixed lambda, in units of 1/time.
    Constant(f64),
    /// `M e^{Mt/2} / (1 + eta N M t)`
    Analytic,
    /// `2 M <Jz^2> / <Jx>` from the current (conditional or ensemble) state.
    Conditional,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeedbackLaw {
    kind: FeedbackKind,
    scale: f64,
    efficiency: f64,
    n_atoms: u32,
}

impl FeedbackLaw {
    pub fn off() -> Self {
        FeedbackLaw {
            kind: FeedbackKind::Off,
            scale: 1.0,
            efficiency: 1.0,
            n_atoms: 1,
        }
    }

    pub fn constant(lambda0: f64) -> Result<Self> {
        if !(lambda0 >= 0.0) || !lambda0.is_finite() {
            return Err(Error::invalid(
                "lambda0",
                "constant feedback must be finite and >= 0",
            ));
        }
        Ok(FeedbackLaw {
            kind: FeedbackKind::Constant(lambda0),
            ..Self::off()
        })
    }

    pub fn analytic(n_atoms: u32, efficiency: f64) -> Result<Self> {
        check_efficiency(efficiency)?;
        if n_atoms == 0 {
            return Err(Error::invalid("n_atoms", "need at least one atom"));
        }
        Ok(FeedbackLaw {
            kind: FeedbackKind::Analytic,
            scale: 1.0,
            efficiency,
            n_atoms,
        })
    }

    pub fn conditional() -> Self {
        FeedbackLaw {
            kind: FeedbackKind::Conditional,
            ..Self::off()
        }
    }

    /// Multiplies lambda by `scale` (miscalibration experiments).
    pub fn with_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(Error::invalid("scale", "must be finite and >= 0"));
        }
        self.scale = scale;
        Ok(self)
    }

    pub fn kind(&self) -> FeedbackKind {
        self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    pub fn n_atoms(&self) -> u32 {
        self.n_atoms
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FeedbackKind::Off => "off",
            FeedbackKind::Constant(_) => "constant",
            FeedbackKind::Analytic => "analytic",
            FeedbackKind::Conditional => "conditional",
        }
    }

    /// lambda at dimensionless time `tau` for the state `rho` (which may be
    /// an intermediate Runge-Kutta stage rather than a valid state).
    pub fn lambda(&self, tau: f64, m: f64, rho: &CMatrix, ops: &SpinOperators) -> Result<f64> {
        let raw = match self.kind {
            FeedbackKind::Off => 0.0,
            FeedbackKind::Constant(l) => l,
            FeedbackKind::Analytic => analytic_lambda(tau, m, self.n_atoms, self.efficiency, 1.0),
            FeedbackKind::Conditional => conditional_lambda_raw(rho, m, ops)?,
        };
        Ok(self.scale * raw)
    }
}

fn check_efficiency(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::invalid("efficiency", "must lie in (0, 1]"));
    }
    Ok(())
}

/// `scale * M * e^{tau/2} / (1 + eta * N * tau)`, tau = Mt.
pub fn analytic_lambda(tau: f64, m: f64, n_atoms: u32, efficiency: f64, scale: f64) -> f64 {
    scale * m * libm::exp(tau / 2.0) / (1.0 + efficiency * f64::from(n_atoms) * tau)
}

/// `2 M <Jz^2> / <Jx>` evaluated on `state`.
pub fn conditional_lambda(state: &DensityMatrix, m: f64, ops: &SpinOperators) -> Result<f64> {
    conditional_lambda_raw(state.matrix(), m, ops)
}

fn conditional_lambda_raw(rho: &CMatrix, m: f64, ops: &SpinOperators) -> Result<f64> {
    let jx = ops.mean(Axis::X, rho);
    let threshold = MEAN_SPIN_COLLAPSE_FRACTION * ops.system().j();
    if !(jx.abs() >= threshold) {
        return Err(Error::MeanSpinCollapse {
            mean_spin: jx,
            threshold,
        });
    }
    let jz2 = ops.jz_sq().trace_product(rho).re;
    Ok(2.0 * m * jz2 / jx)
}

/// `(lambda / sqrt(M)) * I_c dt * Jy`, the generator of the per-step feedback
/// unitary. `charge` is the photocurrent integrated over the step.
pub fn feedback_generator(
    lambda: f64,
    charge: f64,
    m: f64,
    ops: &SpinOperators,
) -> Result<OperatorMatrix> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid("lambda", "feedback strength must be >= 0"));
    }
    if lambda == 0.0 || charge == 0.0 {
        return Ok(OperatorMatrix::hermitian_unchecked(CMatrix::zeros(
            ops.dim(),
        )));
    }
    if !(m > 0.0) {
        return Err(Error::FeedbackWithoutMeasurement);
    }
    let coeff = lambda / libm::sqrt(m) * charge;
    Ok(OperatorMatrix::hermitian_unchecked(
        ops.jy.matrix().scale(C64::new(coeff, 0.0)),
    ))
}
