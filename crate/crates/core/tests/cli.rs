use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use extpulse::cli::config_from_header;
use extpulse::spin_model::read_bath;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/five_h.bath")
}

fn run(dir: &Path, args: &[&str], config: &str) -> Output {
    let cfg = dir.join("run.ini");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_extpulse"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn body(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

fn five_h(extra: &str) -> String {
    five_h_reps(40, extra)
}

fn five_h_reps(reps: usize, extra: &str) -> String {
    format!(
        "[system]\nb_field = 1 T\nbath = {}\n[sequence]\nharmonic = 13\ntarget = H2\nrepetitions = {reps}\n\
         scan_from = -0.35 kHz\nscan_to = 0.65 kHz\n{extra}",
        fixture().display()
    )
}

#[test]
fn design_writes_waveform_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["design", "--no-timestamp"], &five_h("[pulse]\nt_pi = 6\nwidth = 0.07\n"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let coeffs = fs::read_to_string(dir.path().join("out/coefficients.tsv")).unwrap();
    let area: f64 = coeffs
        .lines()
        .find_map(|l| l.strip_prefix("# pulse_area = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((area - std::f64::consts::PI).abs() < 1e-6);
    let rows = body(&coeffs);
    assert_eq!(rows[0], "t_pi_over_T_l\tf_modulated\tf_top_hat\tf_instantaneous\tfeasible");
    assert_eq!(rows.len(), 162);
    // f_m stays inside the instantaneous envelope, f_th decays
    let parsed: Vec<Vec<f64>> = rows[1..]
        .iter()
        .map(|r| r.split('\t').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert!(parsed.iter().all(|r| r[1].abs() <= 0.0979416));
    assert!(parsed.last().unwrap()[2].abs() < 0.01);
    let wave = fs::read_to_string(dir.path().join("out/waveform.tsv")).unwrap();
    assert!(body(&wave).len() > 2600);
}

#[test]
fn invalid_width_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["design"], "[sequence]\ntarget_frequency = 42.577 MHz\n[pulse]\nt_pi = 6\nwidth = -0.07\n");
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 5") && err.contains("pulse.width"), "{err}");
}

#[test]
fn bound_violation_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["design"], "[sequence]\ntarget_frequency = 42.577 MHz\n[pulse]\nt_pi = 2.2\nwidth = 0.07\n");
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("modulation leaves"));
}

#[test]
fn missing_config_and_bad_flags() {
    let out = Command::new(env!("CARGO_BIN_EXE_extpulse"))
        .args(["scan", "--config", "/nonexistent/run.ini"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_extpulse"))
        .args(["scan", "--threads", "many"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_extpulse")).arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn single_point_scan_has_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = five_h("points = 1\n[pulse]\nfamily = instantaneous\n");
    let out = run(dir.path(), &["scan", "--threads", "2"], &cfg);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("out/spectrum.tsv")).unwrap();
    let rows: Vec<_> = body(&text)
        .into_iter()
        .filter(|l| !l.starts_with("resonance") && !l.starts_with("dip"))
        .collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(body(&text).iter().filter(|l| l.starts_with("resonance")).count(), 5);
}

#[test]
fn echoed_config_reproduces_scan() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = five_h_reps(4, "points = 4\n[pulse]\nt_pi = 6\nrabi_error = 0.01\nrabi_noise = 0.001\n[simulation]\nmode = product\n");
    let out = run(dir.path(), &["scan", "--seed", "11"], &cfg);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let first = fs::read_to_string(dir.path().join("out/spectrum.tsv")).unwrap();
    assert!(first.lines().any(|l| l.starts_with("# generated_unix")));

    let again = tempfile::tempdir().unwrap();
    let out = run(again.path(), &["scan"], &config_from_header(&first));
    assert_eq!(out.status.code(), Some(0));
    let second = fs::read_to_string(again.path().join("out/spectrum.tsv")).unwrap();
    let strip = |t: &str| t.lines().filter(|l| !l.starts_with("# generated_unix")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&first), strip(&second));
    assert!(first.contains("#! seed = 11"));
}

#[test]
fn bath_generation_is_deterministic() {
    let cfg = "[system]\nb_field = 500 G\ngenerator = c13\ncount = 40\nmin_distance = 0.4 nm\nmax_distance = 2 nm\n";
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = run(d.path(), &["bath", "--seed", "7", "--no-timestamp"], cfg);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let fa = fs::read(a.path().join("out/bath.txt")).unwrap();
    let fb = fs::read(b.path().join("out/bath.txt")).unwrap();
    assert_eq!(fa, fb);
    let bath = read_bath(&a.path().join("out/bath.txt")).unwrap();
    assert_eq!(bath.nuclei.len(), 40);
    assert_eq!(bath.b_field, 0.05);

    let c = tempfile::tempdir().unwrap();
    run(c.path(), &["bath", "--seed", "8", "--no-timestamp"], cfg);
    assert_ne!(fs::read(c.path().join("out/bath.txt")).unwrap(), fa);
}

#[test]
fn energy_of_dark_and_clear_pulses() {
    for (pulse, expect) in [("t_pi = 6\n", 18.2), ("target_coefficient = 0.0326\nbranch = 6\n", 4.68)] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = format!("[system]\nb_field = 1 T\n[sequence]\ntarget_frequency = 42.577 MHz\n[pulse]\n{pulse}");
        let out = run(dir.path(), &["energy"], &cfg);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let text = fs::read_to_string(dir.path().join("out/energy.txt")).unwrap();
        let get = |k: &str| -> f64 {
            text.lines()
                .find_map(|l| l.strip_prefix(k))
                .unwrap()
                .trim_start_matches(" = ")
                .parse()
                .unwrap()
        };
        assert!((get("equivalent_rabi_MHz") / expect - 1.0).abs() < 0.05);
        assert!(get("cross_term_fraction") < 1e-2);
    }
}

#[test]
fn check_reports_margins_for_the_cluster() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["check", "--no-timestamp"], &five_h("[pulse]\ntarget_coefficient = 0.0326\nbranch = 6\n"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("out/rwa.tsv")).unwrap();
    let rows = body(&text);
    // 4 spectators plus 5 nuclei x 38 other harmonics
    assert_eq!(rows.len(), 1 + 4 + 5 * 38);
    assert!(text.contains("# overlap = 0"));
}
