//! Plain-text plus `key=value` report for the experimental-budget calculators.

use std::fmt::Write as _;

use qndsqueeze_core::design::{
    alpha, attainable_squeezing, laser_constraints_for_alpha, loss_rate_and_budget,
    phase_shift_per_atom, single_shot_floor, ExperimentalParams, Regime, MUCH_LESS_THRESHOLD,
};
use qndsqueeze_core::dynamics::freespace_phase_ok;
use qndsqueeze_core::Result;

#[derive(Clone, Copy, Debug)]
pub struct DesignInputs {
    pub params: ExperimentalParams,
    /// Replaces the regime formula for alpha.
    pub alpha_override: Option<f64>,
    /// Relative error of a single-shot feedback comparison.
    pub epsilon: f64,
}

/// Every number the report prints, in the order of the key=value block.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignReport {
    pub values: Vec<(&'static str, String)>,
    pub text: String,
}

impl DesignReport {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.values
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key)?.parse().ok()
    }

    pub fn render(&self) -> String {
        let mut out = self.text.clone();
        out.push_str("\n[values]\n");
        for (k, v) in &self.values {
            writeln!(out, "{k}={v}").unwrap();
        }
        out
    }
}

pub fn design_report(inputs: &DesignInputs) -> Result<DesignReport> {
    let p = &inputs.params;
    p.validate()?;
    let a = match inputs.alpha_override {
        Some(a) => a,
        None => alpha(p)?,
    };
    let n = p.n_atoms;
    let squeeze = attainable_squeezing(a, n)?;
    let laser = laser_constraints_for_alpha(p, a)?;
    let any = laser_constraints_for_alpha(p, n)?;
    let heisenberg = laser_constraints_for_alpha(p, 1.0 / n)?;
    let budget = loss_rate_and_budget(
        a,
        laser.measurement_strength,
        n,
        1.0 / laser.measurement_strength,
    )?;
    let floor = single_shot_floor(inputs.epsilon, n)?;

    let mut v: Vec<(&'static str, String)> = Vec::new();
    let mut num = |k: &'static str, x: f64| v.push((k, format!("{x:e}")));
    num("n_atoms", n);
    num("alpha", a);
    num("xi2_attainable", squeeze.xi2);
    num("measurement_strength_per_s", laser.measurement_strength);
    num("loss_rate_per_s", budget.loss_rate);
    num("atoms_lost_by_1_over_m", budget.atoms_lost);
    num(
        "power_over_detuning_sq",
        p.power / (p.detuning * p.detuning),
    );
    num("power_bound_w_s2", laser.power_bound);
    num("power_ratio", laser.power_ratio);
    num("power_bound_any_squeezing_w_s2", any.power_bound);
    num("power_bound_heisenberg_w_s2", heisenberg.power_bound);
    num("tau_fb_required_s", laser.feedback_time);
    num(
        "tau_fb_times_n_over_alpha_sq_s",
        laser.feedback_time * n / (a * a),
    );
    num("single_shot_epsilon", inputs.epsilon);
    num("single_shot_err_variance", floor.err_variance);
    num("single_shot_xi2_floor", floor.xi2_floor);
    num("much_less_threshold", MUCH_LESS_THRESHOLD);
    let theta = match p.regime {
        Regime::FreeSpace if p.area.is_some() => Some(phase_shift_per_atom(p)?),
        _ => None,
    };
    if let Some(t) = theta {
        num("theta_per_atom_rad", t);
    }
    v.push(("squeezing_class", squeeze.class.label().to_string()));
    v.push(("far_detuned_ok", laser.far_detuned_ok.to_string()));
    v.push((
        "delay_ok",
        laser
            .delay_ok
            .map_or("unknown".to_string(), |b| b.to_string()),
    ));
    v.push((
        "regime",
        match p.regime {
            Regime::Cavity => "cavity",
            Regime::FreeSpace => "freespace",
        }
        .to_string(),
    ));
    if let Some(t) = theta {
        v.push(("phase_small", freespace_phase_ok(t, n).to_string()));
    }
    v.push(("estimate", "order-of-magnitude".to_string()));

    let mut t = String::new();
    let regime = match p.regime {
        Regime::Cavity => "cavity",
        Regime::FreeSpace => "free space",
    };
    writeln!(
        t,
        "Experimental budget ({regime}), order-of-magnitude estimates"
    )
    .unwrap();
    writeln!(
        t,
        "  N = {n:e} atoms, gamma = {:e} /s (used as quoted, no 2 pi)",
        p.gamma
    )
    .unwrap();
    let source = if inputs.alpha_override.is_some() {
        "override"
    } else {
        "regime formula"
    };
    writeln!(t, "  loss per measurement alpha = {a:e} ({source})").unwrap();
    writeln!(
        t,
        "  attainable xi^2 ~ sqrt(alpha/N) = {:e}: {}",
        squeeze.xi2,
        squeeze.class.label()
    )
    .unwrap();
    writeln!(
        t,
        "  M = {:e} /s, loss rate alpha M = {:e} /s",
        laser.measurement_strength, budget.loss_rate
    )
    .unwrap();
    writeln!(
        t,
        "  atoms lost by t = 1/M: {:e}{}",
        budget.atoms_lost,
        if budget.total_loss {
            " (total loss)"
        } else {
            ""
        }
    )
    .unwrap();
    writeln!(
        t,
        "  P/Delta^2 = {:e} vs bound hbar omega alpha/gamma = {:e} W s^2: ratio {:e}, {} (threshold {MUCH_LESS_THRESHOLD})",
        p.power / (p.detuning * p.detuning),
        laser.power_bound,
        laser.power_ratio,
        if laser.far_detuned_ok { "ok" } else { "violated" }
    )
    .unwrap();
    writeln!(
        t,
        "  bound for any squeezing (alpha = N): P << {:e} Delta^2",
        any.power_bound
    )
    .unwrap();
    writeln!(
        t,
        "  bound for Heisenberg scaling (alpha = 1/N): P << {:e} Delta^2",
        heisenberg.power_bound
    )
    .unwrap();
    let delay = match (p.feedback_delay, laser.delay_ok) {
        (Some(d), Some(ok)) => format!(
            "latency {d:e} s is {}",
            if ok { "fast enough" } else { "too slow" }
        ),
        _ => "no latency given".to_string(),
    };
    writeln!(
        t,
        "  feedback must act within 1/(N M) = {:e} s; {delay}",
        laser.feedback_time
    )
    .unwrap();
    writeln!(
        t,
        "  single-shot feedback with {} relative error: variance {:e}, xi^2 floor {:e}",
        inputs.epsilon, floor.err_variance, floor.xi2_floor
    )
    .unwrap();
    if let Some(th) = theta {
        writeln!(
            t,
            "  phase shift per atom theta = {th:e} rad; theta sqrt(N) small: {}",
            freespace_phase_ok(th, n)
        )
        .unwrap();
    }
    Ok(DesignReport { values: v, text: t })
}
