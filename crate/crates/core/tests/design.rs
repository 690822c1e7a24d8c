//! Dimensional checks for the budget calculators. Only hbar and c are
//! hard-coded, so a change of units that fixes hbar's number (kg and s
//! scaled together, metres kept) must rescale every output by its dimension.
//! omega is passed explicitly so c never enters.

use qndsqueeze_core::design::{
    alpha, attainable_squeezing, laser_constraints, loss_rate_and_budget, phase_shift_per_atom,
    ExperimentalParams, Regime,
};

fn base(regime: Regime) -> ExperimentalParams {
    let mut p = ExperimentalParams::cesium();
    p.regime = regime;
    p.omega = Some(2.2e15);
    p.area = Some(3.0e-12);
    p.kappa = Some(4.0e7);
    p.coupling_g = Some(2.0e6);
    p.feedback_delay = Some(1e-7);
    p
}

/// Same physics in a unit system whose second and kilogram are `c` times
/// the SI ones: rates x c, power (kg m^2 s^-3) x c^2, hbar unchanged.
fn rescaled(p: &ExperimentalParams, c: f64) -> ExperimentalParams {
    let mut q = *p;
    q.gamma *= c;
    q.detuning *= c;
    q.omega = p.omega.map(|w| w * c);
    q.kappa = p.kappa.map(|k| k * c);
    q.coupling_g = p.coupling_g.map(|g| g * c);
    q.power *= c * c;
    q.feedback_delay = p.feedback_delay.map(|d| d / c);
    q
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn outputs_carry_their_units() {
    for regime in [Regime::Cavity, Regime::FreeSpace] {
        for c in [1e-3, 7.0, 2.5e4] {
            let p = base(regime);
            let q = rescaled(&p, c);
            let (a, b) = (
                laser_constraints(&p).unwrap(),
                laser_constraints(&q).unwrap(),
            );
            assert!(rel(b.alpha, a.alpha) < 1e-12, "alpha is dimensionless");
            assert!(
                rel(b.measurement_strength, a.measurement_strength * c) < 1e-12,
                "M in 1/s"
            );
            assert!(
                rel(b.feedback_time, a.feedback_time / c) < 1e-12,
                "tau_fb in s"
            );
            assert!(
                rel(b.power_bound, a.power_bound) < 1e-12,
                "W s^2 = kg m^2 / s"
            );
            assert!(rel(b.power_ratio, a.power_ratio) < 1e-12);
            assert_eq!(a.delay_ok, b.delay_ok);

            let la = loss_rate_and_budget(
                a.alpha,
                a.measurement_strength,
                p.n_atoms,
                1.0 / a.measurement_strength,
            )
            .unwrap();
            let lb = loss_rate_and_budget(
                b.alpha,
                b.measurement_strength,
                q.n_atoms,
                1.0 / b.measurement_strength,
            )
            .unwrap();
            assert!(
                rel(lb.loss_rate, la.loss_rate * c) < 1e-12,
                "loss rate in 1/s"
            );
            assert!(rel(lb.atoms_lost, la.atoms_lost) < 1e-12);
        }
    }
}

#[test]
fn phase_shift_is_dimensionless() {
    let p = base(Regime::FreeSpace);
    let t = phase_shift_per_atom(&p).unwrap();
    let u = phase_shift_per_atom(&rescaled(&p, 123.0)).unwrap();
    assert!(rel(u, t) < 1e-12);
}

#[test]
fn lengths_enter_only_through_ratios_for_alpha() {
    // alpha = 16 pi^2 A / lambda^2: scaling all lengths leaves it fixed.
    let p = base(Regime::FreeSpace);
    let mut q = p;
    q.wavelength *= 3.0;
    q.area = p.area.map(|a| a * 9.0);
    assert!(rel(alpha(&q).unwrap(), alpha(&p).unwrap()) < 1e-12);
}

#[test]
fn measurement_strength_grows_with_power_and_falls_with_detuning() {
    let p = base(Regime::FreeSpace);
    let m0 = laser_constraints(&p).unwrap().measurement_strength;
    let mut q = p;
    q.power *= 2.0;
    let m_power = laser_constraints(&q).unwrap().measurement_strength;
    assert!(rel(m_power, 2.0 * m0) < 1e-12);
    let mut q = p;
    q.detuning *= 2.0;
    let m_det = laser_constraints(&q).unwrap().measurement_strength;
    assert!(rel(m_det, m0 / 4.0) < 1e-12);
}

#[test]
fn more_atoms_need_faster_feedback() {
    let mut p = base(Regime::FreeSpace);
    let mut last = f64::INFINITY;
    for n in [1e3, 1e5, 1e7, 1e9] {
        p.n_atoms = n;
        let t = laser_constraints(&p).unwrap().feedback_time;
        assert!(t < last);
        last = t;
    }
}

#[test]
fn attainable_squeezing_worsens_with_loss() {
    let n = 1e6;
    let mut last = 0.0;
    for a in [1e-6, 1e-3, 1.0, 1e3, 1e6, 1e8] {
        let e = attainable_squeezing(a, n).unwrap();
        assert!(e.xi2 >= last);
        assert!(e.xi2 <= 1.0);
        last = e.xi2;
    }
    assert_eq!(attainable_squeezing(1e8, n).unwrap().xi2, 1.0);
}

#[test]
fn power_bound_is_linear_in_alpha() {
    let mut p = base(Regime::Cavity);
    let b0 = laser_constraints(&p).unwrap();
    p.kappa = p.kappa.map(|k| k * 10.0);
    let b1 = laser_constraints(&p).unwrap();
    assert!(rel(b1.alpha, 10.0 * b0.alpha) < 1e-12);
    assert!(rel(b1.power_bound, 10.0 * b0.power_bound) < 1e-12);
}
