//! Order-of-magnitude experimental budgets in SI units: atom loss, attainable
//! squeezing, probe power and feedback latency.
//!
//! The underlying relations are scaling estimates, so every value here is a
//! point estimate meant to be read to within a factor of ten.

use crate::{Error, Result};

/// Reduced Planck constant, J s (CODATA 2018).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Ratio below which "much less than" is considered satisfied.
pub const MUCH_LESS_THRESHOLD: f64 = 0.1;

const SIXTEEN_PI_SQ: f64 = 16.0 * core::f64::consts::PI * core::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Cavity,
    FreeSpace,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExperimentalParams {
    pub regime: Regime,
    pub n_atoms: f64,
    /// Spontaneous emission rate, 1/s (used as quoted, no 2 pi).
    pub gamma: f64,
    /// Cavity decay rate, 1/s.
    pub kappa: Option<f64>,
    /// One-photon Rabi frequency, rad/s.
    pub coupling_g: Option<f64>,
    /// Beam cross-section, m^2.
    pub area: Option<f64>,
    /// Probe wavelength, m.
    pub wavelength: f64,
    /// Probe power, W.
    pub power: f64,
    /// Probe detuning, rad/s (used as quoted).
    pub detuning: f64,
    /// Probe angular frequency; defaults to 2 pi c / wavelength.
    pub omega: Option<f64>,
    /// Achievable feedback latency, s.
    pub feedback_delay: Option<f64>,
}

impl ExperimentalParams {
    /// Caesium D-line numbers: 852 nm, gamma = 5 MHz, N = 1e7, 1 fW at 1 GHz
    /// detuning, 100 ns feedback latency. Free space with the diffraction-scale
    /// beam area by default.
    pub fn cesium() -> Self {
        let wavelength = 852e-9;
        ExperimentalParams {
            regime: Regime::FreeSpace,
            n_atoms: 1e7,
            gamma: 5e6,
            kappa: None,
            coupling_g: None,
            area: Some(wavelength * wavelength / SIXTEEN_PI_SQ),
            wavelength,
            power: 1e-15,
            detuning: 1e9,
            omega: None,
            feedback_delay: Some(1e-7),
        }
    }

    pub fn omega(&self) -> f64 {
        self.omega
            .unwrap_or(2.0 * core::f64::consts::PI * SPEED_OF_LIGHT / self.wavelength)
    }

    pub fn validate(&self) -> Result<()> {
        let required = [
            ("n_atoms", self.n_atoms),
            ("gamma", self.gamma),
            ("wavelength", self.wavelength),
            ("power", self.power),
            ("detuning", self.detuning),
            ("omega", self.omega()),
        ];
        for (name, v) in required {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, "must be finite and > 0"));
            }
        }
        let optional = [
            ("kappa", self.kappa),
            ("g", self.coupling_g),
            ("area", self.area),
            ("feedback_delay", self.feedback_delay),
        ];
        for (name, v) in optional {
            if let Some(v) = v {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::invalid(name, "must be finite and > 0"));
                }
            }
        }
        Ok(())
    }
}

/// The area at which the free-space alpha equals one, `lambda^2 / 16 pi^2`.
pub fn diffraction_area(wavelength: f64) -> f64 {
    wavelength * wavelength / SIXTEEN_PI_SQ
}

/// Loss-per-measurement ratio: `kappa gamma / g^2` (cavity) or
/// `16 pi^2 A / lambda^2` (free space).
pub fn alpha(params: &ExperimentalParams) -> Result<f64> {
    match params.regime {
        Regime::Cavity => {
            let kappa = params.kappa.ok_or(Error::MissingParameter("kappa"))?;
            let g = params.coupling_g.ok_or(Error::MissingParameter("g"))?;
            Ok(kappa * params.gamma / (g * g))
        }
        Regime::FreeSpace => {
            let area = params.area.ok_or(Error::MissingParameter("area"))?;
            Ok(SIXTEEN_PI_SQ * area / (params.wavelength * params.wavelength))
        }
    }
}

/// Single-atom phase shift `gamma lambda^2 / (16 pi^2 A Delta)`, from
/// `theta = hbar omega gamma^2 / (8 A Delta I_sat)` with
/// `I_sat = 2 pi^2 hbar omega gamma / lambda^2`.
pub fn phase_shift_per_atom(params: &ExperimentalParams) -> Result<f64> {
    let area = params.area.ok_or(Error::MissingParameter("area"))?;
    let omega = params.omega();
    let i_sat = 2.0 * core::f64::consts::PI * core::f64::consts::PI * HBAR * omega * params.gamma
        / (params.wavelength * params.wavelength);
    Ok(HBAR * omega * params.gamma * params.gamma / (8.0 * area * params.detuning * i_sat))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossBudget {
    /// Gamma = alpha M, 1/s.
    pub loss_rate: f64,
    /// Delta N = alpha M N t.
    pub atoms_lost: f64,
    /// Delta N >= N.
    pub total_loss: bool,
}

pub fn loss_rate_and_budget(alpha: f64, m: f64, n_atoms: f64, t: f64) -> Result<LossBudget> {
    for (name, v) in [("alpha", alpha), ("m", m), ("n_atoms", n_atoms), ("t", t)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::invalid(name, "must be finite and >= 0"));
        }
    }
    let loss_rate = alpha * m;
    let atoms_lost = loss_rate * n_atoms * t;
    Ok(LossBudget {
        loss_rate,
        atoms_lost,
        total_loss: n_atoms > 0.0 && atoms_lost >= n_atoms,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SqueezingClass {
    /// alpha of order 1/N: xi^2 ~ 1/N reachable.
    Heisenberg,
    /// alpha of order 1: xi^2 ~ 1/sqrt(N).
    SqrtN,
    /// Between sqrt(N)-level and no squeezing.
    Weak,
    /// alpha >= N.
    None,
}

impl SqueezingClass {
    pub fn label(&self) -> &'static str {
        match self {
            SqueezingClass::Heisenberg => "Heisenberg",
            SqueezingClass::SqrtN => "√N-level",
            SqueezingClass::Weak => "weak",
            SqueezingClass::None => "none",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SqueezingEstimate {
    /// sqrt(alpha / N), capped at 1.
    pub xi2: f64,
    pub class: SqueezingClass,
}

/// `xi^2 ~ sqrt(alpha / N)` under atom loss, classified by which of
/// alpha ~ 1/N, 1, N it is nearest on a log scale.
pub fn attainable_squeezing(alpha: f64, n_atoms: f64) -> Result<SqueezingEstimate> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::invalid("alpha", "must be finite and >= 0"));
    }
    if !(n_atoms > 1.0) || !n_atoms.is_finite() {
        return Err(Error::invalid("n_atoms", "must be finite and > 1"));
    }
    let xi2 = libm::sqrt(alpha / n_atoms).min(1.0);
    let class = if alpha >= n_atoms {
        SqueezingClass::None
    } else if alpha == 0.0 {
        SqueezingClass::Heisenberg
    } else {
        let x = libm::log(alpha) / libm::log(n_atoms);
        if x <= -0.5 {
            SqueezingClass::Heisenberg
        } else if x < 0.5 {
            SqueezingClass::SqrtN
        } else {
            SqueezingClass::Weak
        }
    };
    Ok(SqueezingEstimate { xi2, class })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaserConstraints {
    pub alpha: f64,
    /// `gamma^2 P / (hbar omega Delta^2 alpha^2)`, 1/s.
    pub measurement_strength: f64,
    /// Upper bound on P / Delta^2: `hbar omega alpha / gamma`, W s^2.
    pub power_bound: f64,
    /// (P / Delta^2) / power_bound.
    pub power_ratio: f64,
    /// power_ratio < [`MUCH_LESS_THRESHOLD`].
    pub far_detuned_ok: bool,
    /// Required feedback timescale 1 / (N M), s.
    pub feedback_time: f64,
    /// Latency <= feedback_time; `None` without a latency figure.
    pub delay_ok: Option<bool>,
    pub threshold: f64,
}

/// Probe-power and feedback-latency requirements for a given alpha.
pub fn laser_constraints_for_alpha(
    params: &ExperimentalParams,
    alpha: f64,
) -> Result<LaserConstraints> {
    params.validate()?;
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::invalid("alpha", "must be finite and > 0"));
    }
    let omega = params.omega();
    let (p, gamma, delta) = (params.power, params.gamma, params.detuning);
    let m = gamma * gamma * p / (HBAR * omega * delta * delta * alpha * alpha);
    let power_bound = HBAR * omega * alpha / gamma;
    let power_ratio = p / (delta * delta) / power_bound;
    let feedback_time = 1.0 / (params.n_atoms * m);
    Ok(LaserConstraints {
        alpha,
        measurement_strength: m,
        power_bound,
        power_ratio,
        far_detuned_ok: power_ratio < MUCH_LESS_THRESHOLD,
        feedback_time,
        delay_ok: params.feedback_delay.map(|d| d <= feedback_time),
        threshold: MUCH_LESS_THRESHOLD,
    })
}

pub fn laser_constraints(params: &ExperimentalParams) -> Result<LaserConstraints> {
    laser_constraints_for_alpha(params, alpha(params)?)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingleShotFloor {
    /// `epsilon^2 N / 4`
    pub err_variance: f64,
    /// `epsilon^2`
    pub xi2_floor: f64,
}

/// Squeezing floor for one-shot feedback with relative gain error `epsilon`.
pub fn single_shot_floor(epsilon: f64, n_atoms: f64) -> Result<SingleShotFloor> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::invalid("epsilon", "must be finite and >= 0"));
    }
    Ok(SingleShotFloor {
        err_variance: epsilon * epsilon * n_atoms / 4.0,
        xi2_floor: epsilon * epsilon,
    })
}
