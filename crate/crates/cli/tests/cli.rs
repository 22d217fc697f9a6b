use std::process::{Command, Output};

fn papr_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_papr-lab")).args(args).output().unwrap()
}

fn stdout_lines(out: &Output) -> Vec<String> {
    String::from_utf8(out.stdout.clone()).unwrap().lines().map(str::to_owned).collect()
}

#[test]
fn reduce_writes_blocks_and_summary() {
    let out = papr_lab(&["reduce", "--n", "16", "--shots", "4", "--blocks", "20", "--seed", "3"]);
    assert!(out.status.success());
    let lines = stdout_lines(&out);
    assert_eq!(lines[0], "block_id,papr0_db,papr1_db");
    assert_eq!(lines.len(), 22);
    assert!(lines[21].starts_with("summary,"));
    for (i, line) in lines[1..21].iter().enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[0], i.to_string());
        assert!(f[1..].iter().all(|x| x.parse::<f64>().unwrap().is_finite()));
    }
}

#[test]
fn single_block_falls_back_to_the_sample_maximum() {
    let out = papr_lab(&["reduce", "--n", "8", "--shots", "2", "--blocks", "1", "--seed", "1"]);
    assert!(out.status.success());
    let lines = stdout_lines(&out);
    let row: Vec<&str> = lines[1].split(',').collect();
    let summary: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(row[1..], summary[1..]);
}

#[test]
fn explicit_level_with_too_few_blocks_is_an_error() {
    let out = papr_lab(&["reduce", "--n", "8", "--blocks", "50", "--level", "0.001", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("capacity"));
}

#[test]
fn invalid_settings_exit_nonzero() {
    for args in [
        &["reduce", "--n", "1", "--seed", "1"][..],
        &["reduce", "--mod", "8psk", "--seed", "1"],
        &["reduce", "--start-index", "64", "--seed", "1"],
        &["reduce", "--n", "8"],
        &["bound", "--level", "2", "--seed", "1"],
    ] {
        let out = papr_lab(args);
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error:"), "{args:?}");
    }
}

#[test]
fn bound_row() {
    let out = papr_lab(&["bound", "--n", "16", "--blocks", "500", "--seed", "2"]);
    assert!(out.status.success());
    let lines = stdout_lines(&out);
    assert_eq!(lines[0], "mu,alpha,level,bound_db");
    let v: Vec<f64> = lines[1].split(',').map(|x| x.parse().unwrap()).collect();
    assert!((v[1] - 4.986_8).abs() < 1e-3);
    assert!((v[3] - 20.0 * (v[0] + v[1]).log10()).abs() < 1e-9);
}

#[test]
fn ccdf_curves_are_monotone() {
    let out = papr_lab(&["ccdf", "--n", "16", "--shots", "8", "--blocks", "100", "--z-index", "0,4", "--seed", "5"]);
    assert!(out.status.success());
    let lines = stdout_lines(&out);
    assert_eq!(lines[0], "curve,gamma_db,ccdf");
    let mut curves: std::collections::BTreeMap<String, Vec<(f64, f64)>> = Default::default();
    for l in &lines[1..] {
        let f: Vec<&str> = l.split(',').collect();
        curves.entry(f[0].into()).or_default().push((f[1].parse().unwrap(), f[2].parse().unwrap()));
    }
    let names: Vec<&str> = curves.keys().map(String::as_str).collect();
    assert_eq!(names, ["mcdiarmid", "reduced_m1", "unreduced", "z0", "z4"]);
    for pts in curves.values() {
        assert!(pts.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 <= w[0].1));
        assert!(pts.iter().all(|p| (0.0..=1.0).contains(&p.1)));
    }
}

#[test]
fn config_file_supplies_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "n = 8\nshots = 3\nblocks = 5\nseed = 11\n").unwrap();
    let a = papr_lab(&["reduce", "--config", cfg.to_str().unwrap()]);
    let b = papr_lab(&["reduce", "--n", "8", "--shots", "3", "--blocks", "5", "--seed", "11"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}
