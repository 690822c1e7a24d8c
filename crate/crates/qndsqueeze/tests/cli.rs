use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qndsqueeze::cli::{evolve_config, DynamicsArgs, LawArg};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qndsqueeze"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok_stdout(args: &[&str]) -> String {
    let out = bin(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn columns(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn flags_override_file_which_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.cfg",
        "# comment\nn = 12\neta = 0.5\nlaw = off\n",
    );

    let defaults = evolve_config(&DynamicsArgs::default()).unwrap();
    assert_eq!(defaults.n, 20);
    assert_eq!(defaults.params.efficiency, 1.0);
    assert_eq!(defaults.law, LawArg::Analytic);

    let from_file = evolve_config(&DynamicsArgs {
        config: Some(cfg.clone().into()),
        ..Default::default()
    })
    .unwrap();
    assert_eq!(from_file.n, 12);
    assert_eq!(from_file.params.efficiency, 0.5);
    assert_eq!(from_file.law, LawArg::Off);
    assert_eq!(from_file.params.t_max, 2.0);

    let flagged = evolve_config(&DynamicsArgs {
        config: Some(cfg.into()),
        n: Some(4),
        law: Some(LawArg::Constant),
        ..Default::default()
    })
    .unwrap();
    assert_eq!(flagged.n, 4);
    assert_eq!(flagged.law, LawArg::Constant);
    assert_eq!(flagged.params.efficiency, 0.5);
}

#[test]
fn precedence_reaches_the_binary_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", "n = 6\nt_max = 0.05\n");
    let from_file = ok_stdout(&["evolve", "--config", &cfg]);
    assert!(
        (columns(&from_file)[0][1] - 3.0).abs() < 1e-12,
        "Jx of the CSS is N/2"
    );
    let flagged = ok_stdout(&["evolve", "--config", &cfg, "--n", "8"]);
    assert!((columns(&flagged)[0][1] - 4.0).abs() < 1e-12);
    assert_eq!(columns(&flagged).len(), 6);
}

#[test]
fn csv_is_plain_lf_with_exact_header() {
    let out = ok_stdout(&["evolve", "--n", "4", "--t-max", "0.03"]);
    assert!(!out.contains('\r'));
    assert!(out.starts_with("tau,jx,jy2,jz2,xi2,purity,lambda\n0.0,"));
    assert!(out.ends_with('\n'));
}

#[test]
fn evolve_without_feedback_keeps_jz2_and_zero_lambda() {
    let out = ok_stdout(&["evolve", "--n", "10", "--law", "off", "--t-max", "0.5"]);
    let rows = columns(&out);
    for r in &rows {
        assert!((r[3] - 2.5).abs() < 1e-9, "Jz^2 = N/4 is conserved");
        assert_eq!(r[6], 0.0);
    }
}

#[test]
fn evolve_with_zero_strength_is_frozen() {
    let out = ok_stdout(&["evolve", "--n", "10", "--m", "0", "--t-max", "0.1"]);
    let rows = columns(&out);
    for r in &rows[1..] {
        assert_eq!(&r[1..6], &rows[0][1..6]);
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = ok_stdout(&["trajectory", "--n", "6", "--t-max", "0.2", "--seed", "42"]);
    let b = ok_stdout(&["trajectory", "--n", "6", "--t-max", "0.2", "--seed", "42"]);
    assert_eq!(a, b);
    let c = ok_stdout(&["trajectory", "--n", "6", "--t-max", "0.2", "--seed", "43"]);
    assert_ne!(a, c);
}

#[test]
fn ensemble_output_does_not_depend_on_threads() {
    let base = [
        "ensemble", "--n", "6", "--k", "20", "--t-max", "0.2", "--seed", "9",
    ];
    let one = ok_stdout(&[&base[..], &["--threads", "1"]].concat());
    let four = ok_stdout(&[&base[..], &["--threads", "4"]].concat());
    let three = ok_stdout(&[&base[..], &["--threads", "3"]].concat());
    assert_eq!(one, four);
    assert_eq!(one, three);
    assert!(one.contains("# k=20\n"));
}

#[test]
fn single_member_dump_matches_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let common = ["--n", "5", "--t-max", "0.3", "--seed", "11"];
    ok_stdout(&[&["ensemble", "--k", "1", "--dump-dir", d][..], &common[..]].concat());
    let dumped = fs::read_to_string(dir.path().join("traj_00000.csv")).unwrap();
    let single = ok_stdout(&[&["trajectory", "--index", "0"][..], &common[..]].concat());
    assert_eq!(dumped, single);

    // Member i of a larger ensemble is trajectory index i.
    ok_stdout(&[&["ensemble", "--k", "10", "--dump-dir", d][..], &common[..]].concat());
    let dumped = fs::read_to_string(dir.path().join("traj_00007.csv")).unwrap();
    let single = ok_stdout(&[&["trajectory", "--index", "7"][..], &common[..]].concat());
    assert_eq!(dumped, single);
}

#[test]
fn output_flag_writes_the_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.csv");
    let args = ["evolve", "--n", "3", "--t-max", "0.05"];
    let stdout = ok_stdout(&args);
    ok_stdout(&[&args[..], &["-o", path.to_str().unwrap()]].concat());
    assert_eq!(fs::read_to_string(path).unwrap(), stdout);
}

#[test]
fn exit_codes() {
    assert_eq!(bin(&["evolve", "--bogus"]).status.code(), Some(2));
    assert_eq!(bin(&["evolve", "--eta", "0"]).status.code(), Some(2));
    assert_eq!(bin(&["evolve", "--n", "0"]).status.code(), Some(2));
    assert_eq!(bin(&["ensemble", "--k", "0"]).status.code(), Some(2));
    assert_eq!(bin(&["sweep", "--n-list", "20,10"]).status.code(), Some(2));
    assert_eq!(
        bin(&["design"]).status.code(),
        Some(2),
        "free space needs an area"
    );

    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.cfg", "n = 4\nspin = 3\n");
    let out = bin(&["evolve", "--config", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("2: unknown key"));

    let missing = dir.path().join("nope.cfg");
    assert_eq!(
        bin(&["evolve", "--config", missing.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );

    // An unwritable output path is an i/o failure.
    let blocked = dir.path().join("no_dir").join("e.csv");
    let out = bin(&[
        "evolve",
        "--n",
        "2",
        "--t-max",
        "0.01",
        "-o",
        blocked.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));

    // The minimum lies past t_max for every N: a numerical failure, after output.
    let out = bin(&["sweep", "--n-list", "10,20", "--t-max", "0.1"]);
    assert_eq!(out.status.code(), Some(3));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# error_n10="));
    assert!(text.contains("# fit_error="));
}

#[test]
fn sweep_rows_and_fit_footer() {
    let out = ok_stdout(&["sweep", "--n-list", "10..40:10", "--t-max", "1.3"]);
    let rows = columns(&out);
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert!((r[3] - r[0] * r[2]).abs() < 1e-12);
        assert!(r[2] < 1.0);
    }
    assert!(rows.windows(2).all(|w| w[1][2] < w[0][2]));
    assert!(out.contains("# fit_exponent="));
    assert!(out.contains("# fit_coefficient="));
}

fn report_value(text: &str, key: &str) -> String {
    let block = text.split("\n[values]\n").nth(1).expect("values block");
    block
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("missing {key}"))
        .to_string()
}

#[test]
fn design_preset_bounds() {
    let out = ok_stdout(&["design", "--preset", "cs"]);
    let any: f64 = report_value(&out, "power_bound_any_squeezing_w_s2")
        .parse()
        .unwrap();
    let heis: f64 = report_value(&out, "power_bound_heisenberg_w_s2")
        .parse()
        .unwrap();
    assert!(any > 1e-19 && any < 1e-17, "{any}");
    assert!(heis > 1e-34 && heis < 1e-32, "{heis}");
    let tau: f64 = report_value(&out, "tau_fb_times_n_over_alpha_sq_s")
        .parse()
        .unwrap();
    assert!(tau > 1.0 && tau < 100.0);
    assert_eq!(report_value(&out, "estimate"), "order-of-magnitude");
}

#[test]
fn design_alpha_override_classifies_sqrt_n() {
    let out = ok_stdout(&[
        "design",
        "--preset",
        "cs",
        "--alpha-override",
        "1",
        "--n",
        "100",
    ]);
    let xi2: f64 = report_value(&out, "xi2_attainable").parse().unwrap();
    assert!((xi2 - 0.1).abs() < 1e-12);
    assert_eq!(report_value(&out, "squeezing_class"), "√N-level");
}

#[test]
fn design_minimum_area_gives_unit_alpha() {
    let out = ok_stdout(&["design", "--regime", "freespace", "--area-min"]);
    let a: f64 = report_value(&out, "alpha").parse().unwrap();
    assert!((a - 1.0).abs() < 1e-12);
}

#[test]
fn design_cavity_needs_its_parameters() {
    assert_eq!(
        bin(&["design", "--regime", "cavity"]).status.code(),
        Some(2)
    );
    let out = ok_stdout(&[
        "design", "--regime", "cavity", "--kappa", "1e7", "--g", "1e6",
    ]);
    assert_eq!(report_value(&out, "regime"), "cavity");
}

#[test]
fn design_config_file_is_layered() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "d.cfg", "preset = cs\nn = 1e4\n");
    let out = ok_stdout(&["design", "--config", &cfg]);
    assert_eq!(report_value(&out, "n_atoms"), "1e4");
    let out = ok_stdout(&["design", "--config", &cfg, "--n", "1e5"]);
    assert_eq!(report_value(&out, "n_atoms"), "1e5");
}
