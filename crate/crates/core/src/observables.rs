//! Squeezing metrics, closed-form predictions, minimum finding and scaling fits.

use alloc::vec::Vec;

use crate::linalg::CMatrix;
use crate::spin::{Axis, DensityMatrix, SpinOperators};
use crate::{Error, Result};

/// Smallest |<Jx>| for which `xi2_z` is defined.
pub const XI2_MEAN_SPIN_FLOOR: f64 = 1e-9;

/// One row of an [`ObservableSeries`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub tau: f64,
    pub jx: f64,
    pub jy2: f64,
    pub jz2: f64,
    /// N <Jz^2> / <Jx>^2, NaN where <Jx> vanishes.
    pub xi2: f64,
    pub purity: f64,
    pub lambda: f64,
}

impl Sample {
    pub fn measure(tau: f64, lambda: f64, rho: &CMatrix, ops: &SpinOperators) -> Self {
        let jx = ops.mean(Axis::X, rho);
        let jy2 = ops.jy_sq().trace_product(rho).re;
        let jz2 = ops.jz_sq().trace_product(rho).re;
        let n = f64::from(ops.system().n_atoms());
        let xi2 = if jx.abs() >= XI2_MEAN_SPIN_FLOOR {
            n * jz2 / (jx * jx)
        } else {
            f64::NAN
        };
        Sample {
            tau,
            jx,
            jy2,
            jz2,
            xi2,
            purity: rho.frobenius_norm_sqr(),
            lambda,
        }
    }
}

/// Time-indexed record of collective-spin moments.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ObservableSeries {
    pub n_atoms: u32,
    pub tau: Vec<f64>,
    pub jx: Vec<f64>,
    pub jy2: Vec<f64>,
    pub jz2: Vec<f64>,
    pub xi2: Vec<f64>,
    pub purity: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl ObservableSeries {
    pub fn new(n_atoms: u32) -> Self {
        ObservableSeries {
            n_atoms,
            ..Default::default()
        }
    }

    pub fn push(&mut self, s: Sample) {
        self.tau.push(s.tau);
        self.jx.push(s.jx);
        self.jy2.push(s.jy2);
        self.jz2.push(s.jz2);
        self.xi2.push(s.xi2);
        self.purity.push(s.purity);
        self.lambda.push(s.lambda);
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn sample(&self, i: usize) -> Sample {
        Sample {
            tau: self.tau[i],
            jx: self.jx[i],
            jy2: self.jy2[i],
            jz2: self.jz2[i],
            xi2: self.xi2[i],
            purity: self.purity[i],
            lambda: self.lambda[i],
        }
    }

    pub fn samples(&self) -> impl Iterator<Item = Sample> + '_ {
        (0..self.len()).map(move |i| self.sample(i))
    }
}

/// `N <Jz^2> / <Jx>^2` (second moment, not variance).
pub fn xi2_z(state: &DensityMatrix, ops: &SpinOperators) -> Result<f64> {
    let rho = state.matrix();
    let jx = ops.mean(Axis::X, rho);
    if !(jx.abs() >= XI2_MEAN_SPIN_FLOOR) {
        return Err(Error::MeanSpinCollapse {
            mean_spin: jx,
            threshold: XI2_MEAN_SPIN_FLOOR,
        });
    }
    let jz2 = ops.jz_sq().trace_product(rho).re;
    Ok(f64::from(ops.system().n_atoms()) * jz2 / (jx * jx))
}

/// `N (Delta J_n1)^2 / (<J_n2>^2 + <J_n3>^2)` for an orthonormal frame.
pub fn xi2_general(
    state: &DensityMatrix,
    n1: [f64; 3],
    n2: [f64; 3],
    n3: [f64; 3],
    ops: &SpinOperators,
) -> Result<f64> {
    let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let frame = [n1, n2, n3];
    for (a, u) in frame.iter().enumerate() {
        for (b, v) in frame.iter().enumerate() {
            let target = if a == b { 1.0 } else { 0.0 };
            if (dot(*u, *v) - target).abs() > 1e-10 {
                return Err(Error::invalid("frame", "vectors must be orthonormal"));
            }
        }
    }
    let rho = state.matrix();
    let j1 = ops.along(n1);
    let mean1 = j1.trace_product(rho).re;
    let second1 = j1.matmul(&j1).trace_product(rho).re;
    let mean2 = ops.along(n2).trace_product(rho).re;
    let mean3 = ops.along(n3).trace_product(rho).re;
    let denom = mean2 * mean2 + mean3 * mean3;
    if !(denom >= 1e-12) {
        return Err(Error::MeanSpinCollapse {
            mean_spin: libm::sqrt(denom),
            threshold: 1e-6,
        });
    }
    let variance = second1 - mean1 * mean1;
    Ok(f64::from(ops.system().n_atoms()) * variance / denom)
}

/// Closed-form moment approximations for the analytic feedback law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticPrediction {
    pub jz2: f64,
    pub jx: f64,
    pub xi2: f64,
    pub tau_star: f64,
    pub xi2_min: f64,
}

/// Closed forms at dimensionless time `tau`; `tau_star` and `xi2_min` are the
/// large-N estimates `1/eta` and `e^{1/eta}/N`.
pub fn analytic_predictions(tau: f64, n_atoms: u32, efficiency: f64) -> AnalyticPrediction {
    let n = f64::from(n_atoms);
    let j = n / 2.0;
    AnalyticPrediction {
        jz2: 1.0 / (4.0 * efficiency * tau + 2.0 / j),
        jx: j * libm::exp(-tau / 2.0),
        xi2: closed_form_xi2(tau, n, efficiency),
        tau_star: 1.0 / efficiency,
        xi2_min: libm::exp(1.0 / efficiency) / n,
    }
}

fn closed_form_xi2(tau: f64, n: f64, eta: f64) -> f64 {
    libm::exp(tau) / (1.0 + eta * n * tau)
}

/// Location and value of the squeezing minimum of a series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SqueezingMinimum {
    pub tau_star: f64,
    pub xi2_min: f64,
    /// Purity interpolated at `tau_star` with the same three points.
    pub purity: f64,
    pub grid_index: usize,
}

/// Grid argmin of xi2 refined by a parabola through its neighbours.
pub fn find_minimum(series: &ObservableSeries) -> Result<SqueezingMinimum> {
    let xi2 = &series.xi2;
    let mut best: Option<usize> = None;
    for (i, &v) in xi2.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        if best.is_none_or(|b| v < xi2[b]) {
            best = Some(i);
        }
    }
    let i = best.ok_or(Error::BoundaryMinimum { index: 0 })?;
    if i == 0 || i + 1 >= xi2.len() || xi2[i - 1].is_nan() || xi2[i + 1].is_nan() {
        return Err(Error::BoundaryMinimum { index: i });
    }
    let t = [series.tau[i - 1], series.tau[i], series.tau[i + 1]];
    let (tau_star, xi2_min) = parabola_vertex(t, [xi2[i - 1], xi2[i], xi2[i + 1]]);
    let purity = lagrange3(
        t,
        [series.purity[i - 1], series.purity[i], series.purity[i + 1]],
        tau_star,
    );
    Ok(SqueezingMinimum {
        tau_star,
        xi2_min,
        purity,
        grid_index: i,
    })
}

fn parabola_vertex(t: [f64; 3], y: [f64; 3]) -> (f64, f64) {
    // Divided differences: p(x) = y0 + d1 (x - t0) + d2 (x - t0)(x - t1).
    let d01 = (y[1] - y[0]) / (t[1] - t[0]);
    let d12 = (y[2] - y[1]) / (t[2] - t[1]);
    let d2 = (d12 - d01) / (t[2] - t[0]);
    if !(d2 > 0.0) {
        return (t[1], y[1]);
    }
    let x = 0.5 * (t[0] + t[1]) - d01 / (2.0 * d2);
    (x, lagrange3(t, y, x))
}

fn lagrange3(t: [f64; 3], y: [f64; 3], x: f64) -> f64 {
    let l0 = (x - t[1]) * (x - t[2]) / ((t[0] - t[1]) * (t[0] - t[2]));
    let l1 = (x - t[0]) * (x - t[2]) / ((t[1] - t[0]) * (t[1] - t[2]));
    let l2 = (x - t[0]) * (x - t[1]) / ((t[2] - t[0]) * (t[2] - t[1]));
    y[0] * l0 + y[1] * l1 + y[2] * l2
}

/// Power-law summary of (N, xi2_min) points.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingFit {
    /// Log-log slope over the largest-N half of the points.
    pub exponent: f64,
    /// Asymptotic value `a` of `N xi2_min = a + b/N`, fitted on the largest-N half.
    pub coefficient: f64,
    /// The `b` of that fit.
    pub correction: f64,
    /// `exp(intercept)` of the log-log fit on the largest-N half.
    pub prefactor: f64,
    /// Log-log slope using every point.
    pub exponent_all: f64,
    /// RMS residual of the largest-N log-log fit.
    pub residual: f64,
    pub points: Vec<(u32, f64)>,
}

impl ScalingFit {
    /// N * xi2_min for each point.
    pub fn scaled(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.points.iter().map(|&(n, x)| (n, f64::from(n) * x))
    }
}

/// Fits `xi2_min ~ N^exponent` and the asymptotic coefficient of `1/N`.
pub fn fit_inverse_scaling(points: &[(u32, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::invalid(
            "points",
            "need at least three (N, xi2_min) points",
        ));
    }
    for w in points.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::invalid("points", "N must be strictly increasing"));
        }
    }
    if points.iter().any(|&(n, x)| n == 0 || !(x > 0.0)) {
        return Err(Error::invalid("points", "N and xi2_min must be positive"));
    }
    let upper = &points[points.len() / 2..];

    let logs = |pts: &[(u32, f64)]| -> Vec<(f64, f64)> {
        pts.iter()
            .map(|&(n, x)| (libm::log(f64::from(n)), libm::log(x)))
            .collect()
    };
    let (slope, intercept, residual) = least_squares(&logs(upper));
    let (slope_all, _, _) = least_squares(&logs(points));

    let asym: Vec<(f64, f64)> = upper
        .iter()
        .map(|&(n, x)| (1.0 / f64::from(n), f64::from(n) * x))
        .collect();
    let (b, a, _) = least_squares(&asym);

    Ok(ScalingFit {
        exponent: slope,
        coefficient: a,
        correction: b,
        prefactor: libm::exp(intercept),
        exponent_all: slope_all,
        residual,
        points: points.to_vec(),
    })
}

/// Ordinary least squares y = slope x + intercept; returns RMS residual too.
fn least_squares(xy: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xy
        .iter()
        .map(|p| {
            let r = p.1 - (slope * p.0 + intercept);
            r * r
        })
        .sum();
    (slope, intercept, libm::sqrt(ss / n))
}

/// Smallest tau with `e^tau / (1 + eta N tau) = xi2_target`.
pub fn stop_time_for_target(xi2_target: f64, n_atoms: u32, efficiency: f64) -> Result<f64> {
    if !(efficiency > 0.0 && efficiency <= 1.0) {
        return Err(Error::invalid("efficiency", "must lie in (0, 1]"));
    }
    if !(xi2_target > 0.0 && xi2_target <= 1.0) {
        return Err(Error::invalid("xi2_target", "must lie in (0, 1]"));
    }
    if xi2_target == 1.0 {
        return Ok(0.0);
    }
    let n = f64::from(n_atoms);
    let a = efficiency * n;
    // The closed form decreases on [0, 1 - 1/a] and rises afterwards.
    let tau_min = if a > 1.0 { 1.0 - 1.0 / a } else { 0.0 };
    let f = |t: f64| closed_form_xi2(t, n, efficiency);
    let minimum = f(tau_min);
    if xi2_target < minimum || tau_min == 0.0 {
        return Err(Error::UnreachableTarget {
            target: xi2_target,
            minimum,
        });
    }
    let (mut lo, mut hi) = (0.0, tau_min);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > xi2_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::SpinSystem;
    use crate::C64;

    fn ops(n: u32) -> SpinOperators {
        SpinOperators::new(SpinSystem::new(n).unwrap())
    }

    const Z: [f64; 3] = [0.0, 0.0, 1.0];
    const X: [f64; 3] = [1.0, 0.0, 0.0];
    const Y: [f64; 3] = [0.0, 1.0, 0.0];

    #[test]
    fn css_is_unsqueezed_in_every_transverse_frame() {
        for n in [1, 4, 17] {
            let o = ops(n);
            let css = o.css_x();
            assert!((xi2_z(&css, &o).unwrap() - 1.0).abs() < 1e-10);
            assert!((xi2_general(&css, Z, X, Y, &o).unwrap() - 1.0).abs() < 1e-10);
            assert!((xi2_general(&css, Y, X, Z, &o).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn z_polarised_state_has_no_x_mean() {
        let o = ops(6);
        let up = DensityMatrix::basis_state(o.system(), 0).unwrap();
        assert!(matches!(
            xi2_z(&up, &o),
            Err(Error::MeanSpinCollapse { .. })
        ));
    }

    #[test]
    fn frame_must_be_orthonormal() {
        let o = ops(3);
        let skew = [0.0, 0.6, 0.8];
        assert!(xi2_general(&o.css_x(), Z, X, [0.0, 1.0, 0.1], &o).is_err());
        assert!(xi2_general(&o.css_x(), skew, X, Z, &o).is_err());
    }

    #[test]
    fn general_form_uses_variance_not_second_moment() {
        let o = ops(8);
        // Tilt the CSS toward +z: <Jz> != 0.
        let rho = o.rotate(&o.css_x(), Axis::Y, -0.3);
        let m = rho.matrix();
        let jz = o.mean(Axis::Z, m);
        let jz2 = o.jz_sq().trace_product(m).re;
        let jx = o.mean(Axis::X, m);
        let jy = o.mean(Axis::Y, m);
        assert!(jz.abs() > 0.1);
        let general = xi2_general(&rho, Z, X, Y, &o).unwrap();
        let expect = 8.0 * (jz2 - jz * jz) / (jx * jx + jy * jy);
        assert!((general - expect).abs() < 1e-10);
        let second_moment = xi2_z(&rho, &o).unwrap();
        assert!((second_moment - 8.0 * jz2 / (jx * jx)).abs() < 1e-10);
        assert!(second_moment > general);
    }

    #[test]
    fn co_rotated_frame_leaves_xi2_invariant() {
        let o = ops(9);
        // A squeezed-ish, asymmetric test state.
        let mut psi: Vec<C64> = (0..10)
            .map(|k| C64::new(1.0 / (1.0 + k as f64), 0.1 * k as f64))
            .collect();
        psi[3] = C64::new(-0.4, 0.2);
        let rho = DensityMatrix::pure(&psi).unwrap();
        let theta: f64 = 0.7;
        let rotated = o.rotate(&rho, Axis::X, theta);
        let (c, s) = (libm::cos(theta), libm::sin(theta));
        let rot = |v: [f64; 3]| [v[0], c * v[1] - s * v[2], s * v[1] + c * v[2]];
        let before = xi2_general(&rho, Z, X, Y, &o).unwrap();
        let after = xi2_general(&rotated, rot(Z), rot(X), rot(Y), &o).unwrap();
        assert!((before - after).abs() < 1e-10, "{before} vs {after}");
    }

    #[test]
    fn analytic_predictions_at_origin() {
        let p = analytic_predictions(0.0, 20, 1.0);
        assert!((p.jz2 - 5.0).abs() < 1e-14);
        assert!((p.jx - 10.0).abs() < 1e-14);
        assert!((p.xi2 - 1.0).abs() < 1e-14);
        assert_eq!(p.tau_star, 1.0);
        assert!((p.xi2_min * 20.0 - core::f64::consts::E).abs() < 1e-14);
        let half = analytic_predictions(0.0, 20, 0.5);
        assert_eq!(half.tau_star, 2.0);
        assert!((half.xi2_min * 20.0 - libm::exp(2.0)).abs() < 1e-12);
    }

    #[test]
    fn closed_form_interior_minimum() {
        // Exact minimiser of e^tau/(1+N tau) is (N-1)/N.
        for n in [10u32, 100, 1000] {
            let nf = f64::from(n);
            let t = (nf - 1.0) / nf;
            let f = |x: f64| analytic_predictions(x, n, 1.0).xi2;
            assert!(f(t) < f(t - 1e-3) && f(t) < f(t + 1e-3));
        }
    }

    fn series_from(tau: &[f64], xi2: &[f64]) -> ObservableSeries {
        let mut s = ObservableSeries::new(1);
        for (&t, &x) in tau.iter().zip(xi2) {
            s.push(Sample {
                tau: t,
                jx: 1.0,
                jy2: 0.0,
                jz2: 0.0,
                xi2: x,
                purity: 1.0,
                lambda: 0.0,
            });
        }
        s
    }

    #[test]
    fn monotone_series_has_boundary_minimum() {
        let tau: Vec<f64> = (0..10).map(|k| k as f64 * 0.1).collect();
        let inc: Vec<f64> = tau.iter().map(|t| 1.0 + t).collect();
        assert!(matches!(
            find_minimum(&series_from(&tau, &inc)),
            Err(Error::BoundaryMinimum { .. })
        ));
        let dec: Vec<f64> = tau.iter().map(|t| 1.0 - t).collect();
        assert!(matches!(
            find_minimum(&series_from(&tau, &dec)),
            Err(Error::BoundaryMinimum { .. })
        ));
    }

    #[test]
    fn parabola_vertex_recovered_exactly() {
        let tau: Vec<f64> = (0..21).map(|k| k as f64 * 0.05).collect();
        let xi2: Vec<f64> = tau
            .iter()
            .map(|t| 0.3 + 2.0 * (t - 0.4137) * (t - 0.4137))
            .collect();
        let m = find_minimum(&series_from(&tau, &xi2)).unwrap();
        assert!((m.tau_star - 0.4137).abs() < 1e-10);
        assert!((m.xi2_min - 0.3).abs() < 1e-10);
    }

    #[test]
    fn exact_power_law_fit() {
        let pts: Vec<(u32, f64)> = (1..=10)
            .map(|k| (10 * k, 5.0 / f64::from(10 * k)))
            .collect();
        let fit = fit_inverse_scaling(&pts).unwrap();
        assert!((fit.exponent + 1.0).abs() < 1e-10);
        assert!((fit.exponent_all + 1.0).abs() < 1e-10);
        assert!((fit.coefficient - 5.0).abs() < 1e-10);
        assert!((fit.prefactor - 5.0).abs() < 1e-10);
        assert!(fit.residual < 1e-10);
        assert!(fit.scaled().all(|(_, v)| (v - 5.0).abs() < 1e-12));
    }

    #[test]
    fn asymptotic_coefficient_sees_through_finite_size_correction() {
        let pts: Vec<(u32, f64)> = (1..=10)
            .map(|k| {
                let n = f64::from(10 * k);
                (10 * k, (3.3 - 7.0 / n) / n)
            })
            .collect();
        let fit = fit_inverse_scaling(&pts).unwrap();
        assert!((fit.coefficient - 3.3).abs() < 1e-10);
        assert!((fit.correction + 7.0).abs() < 1e-9);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(fit_inverse_scaling(&[(10, 0.1), (20, 0.05)]).is_err());
        assert!(fit_inverse_scaling(&[(10, 0.1), (10, 0.05), (30, 0.03)]).is_err());
        assert!(fit_inverse_scaling(&[(10, 0.1), (20, 0.0), (30, 0.03)]).is_err());
    }

    #[test]
    fn stop_time_edges() {
        assert_eq!(stop_time_for_target(1.0, 50, 1.0).unwrap(), 0.0);
        let e = core::f64::consts::E;
        assert!(matches!(
            stop_time_for_target(0.5 * e / 50.0, 50, 1.0),
            Err(Error::UnreachableTarget { .. })
        ));
        assert!(matches!(
            stop_time_for_target(0.9 * libm::exp(2.0) / 50.0 * 0.5, 50, 0.5),
            Err(Error::UnreachableTarget { .. })
        ));
    }

    #[test]
    fn stop_time_solves_closed_form() {
        let t = stop_time_for_target(0.3, 40, 1.0).unwrap();
        assert!((analytic_predictions(t, 40, 1.0).xi2 - 0.3).abs() < 1e-10);
    }
}
