//! CSV emission. Numbers use Rust's shortest round-trip `Debug` form (`1.0`,
//! `0.25`, `3.1e-7`, `NaN`), so output is locale-independent and parses back
//! to the identical `f64`.
//! Lines end in `\n`. Footer lines start with `# ` and hold `key=value`.

use std::fmt::Write as _;

use qndsqueeze_core::observables::{ObservableSeries, ScalingFit, SqueezingMinimum};
use qndsqueeze_core::stochastic::{EnsembleResult, TrajectoryRecord};

pub const SERIES_HEADER: &str = "tau,jx,jy2,jz2,xi2,purity,lambda";
pub const TRAJECTORY_HEADER: &str = "tau,Ic_dt,Jx_c,Jz_c,Jz2_c,purity_c";
pub const ENSEMBLE_HEADER: &str = "tau,jx,jy2,jz2,xi2,purity,lambda,trace_dist_to_me,stat_scale";
pub const SWEEP_HEADER: &str = "n,tau_star,xi2_min,n_xi2_min";

fn row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{v:?}").expect("writing to a String cannot fail");
    }
    out.push('\n');
}

fn footer(out: &mut String, key: &str, value: impl std::fmt::Display) {
    writeln!(out, "# {key}={value}").expect("writing to a String cannot fail");
}

fn footer_num(out: &mut String, key: &str, value: f64) {
    writeln!(out, "# {key}={value:?}").expect("writing to a String cannot fail");
}

fn series_rows(out: &mut String, s: &ObservableSeries, extra: impl Fn(usize) -> Vec<f64>) {
    for i in 0..s.len() {
        let mut v = vec![
            s.tau[i],
            s.jx[i],
            s.jy2[i],
            s.jz2[i],
            s.xi2[i],
            s.purity[i],
            s.lambda[i],
        ];
        v.extend(extra(i));
        row(out, &v);
    }
}

/// Series rows followed by the squeezing-minimum footer.
pub fn series_csv(series: &ObservableSeries, minimum: Option<&SqueezingMinimum>) -> String {
    let mut out = String::new();
    out.push_str(SERIES_HEADER);
    out.push('\n');
    series_rows(&mut out, series, |_| Vec::new());
    minimum_footer(&mut out, minimum);
    out
}

fn minimum_footer(out: &mut String, minimum: Option<&SqueezingMinimum>) {
    match minimum {
        Some(m) => {
            footer_num(out, "tau_star", m.tau_star);
            footer_num(out, "xi2_min", m.xi2_min);
            footer_num(out, "purity_at_min", m.purity);
        }
        None => footer(out, "minimum", "boundary"),
    }
}

pub fn trajectory_csv(rec: &TrajectoryRecord) -> String {
    let mut out = String::new();
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for i in 0..rec.len() {
        let c = rec.cond_means[i];
        row(
            &mut out,
            &[
                rec.times[i],
                rec.charge[i],
                c.jx,
                c.jz,
                c.jz2,
                rec.cond_purity[i],
            ],
        );
    }
    out
}

pub fn ensemble_csv(res: &EnsembleResult) -> String {
    let mut out = String::new();
    out.push_str(ENSEMBLE_HEADER);
    out.push('\n');
    series_rows(&mut out, &res.series, |i| {
        vec![res.trace_distance[i], res.stat_scale]
    });
    footer(&mut out, "k", res.k);
    footer_num(&mut out, "max_trace_dist", res.max_trace_distance());
    out
}

/// One sweep row per atom number; failures are listed as footer lines.
pub struct SweepRow {
    pub n: u32,
    pub outcome: Result<SqueezingMinimum, String>,
}

pub fn sweep_csv(rows: &[SweepRow], fit: Option<&ScalingFit>, fit_error: Option<&str>) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        if let Ok(m) = &r.outcome {
            write!(out, "{},", r.n).expect("writing to a String cannot fail");
            row(&mut out, &[m.tau_star, m.xi2_min, f64::from(r.n) * m.xi2_min]);
        }
    }
    for r in rows {
        if let Err(e) = &r.outcome {
            footer(&mut out, &format!("error_n{}", r.n), e);
        }
    }
    if let Some(f) = fit {
        footer_num(&mut out, "fit_exponent", f.exponent);
        footer_num(&mut out, "fit_coefficient", f.coefficient);
        footer_num(&mut out, "fit_correction", f.correction);
        footer_num(&mut out, "fit_prefactor", f.prefactor);
        footer_num(&mut out, "fit_exponent_all", f.exponent_all);
        footer_num(&mut out, "fit_residual", f.residual);
    }
    if let Some(e) = fit_error {
        footer(&mut out, "fit_error", e);
    }
    out
}
