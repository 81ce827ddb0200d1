use std::process::{Command, Output};

fn sqkd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqkd")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn threshold_prints_csv_with_reference() {
    let o = sqkd(&["threshold", "--d", "3", "--mubs", "3", "--scenario", "dependent"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("d,n_mubs,scenario,convention,q_star,paper_reference,abs_diff"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..4], &["3", "3", "dependent", "per-outcome"]);
    assert_eq!(row[5], "0.0689");
    let q: f64 = row[4].parse().unwrap();
    let diff: f64 = row[6].parse().unwrap();
    assert!(((q - 0.0689).abs() - diff).abs() < 1e-8);
    assert!(lines.next().is_none());
}

#[test]
fn zero_noise_ququart_rate() {
    let o = sqkd(&["keyrate", "--d", "4", "--mubs", "5", "--q", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().any(|l| l == "r = 2.000000"));
}

#[test]
fn sweep_grid_is_inclusive() {
    let o = sqkd(&["sweep", "--d", "3", "--mubs", "3", "--scenario", "independent", "--q", "0:0.06:0.001"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "d,n_mubs,scenario,convention,Q,r,t1,t2,t3,t4,lambda1,warnings");
    assert_eq!(lines.len(), 62);
    assert!(lines[1].starts_with("3,3,independent,per-outcome,0,1.5849625,"));
    assert!(lines[61].starts_with("3,3,independent,per-outcome,0.06,"));
}

#[test]
fn sweep_svg_output() {
    let o = sqkd(&["sweep", "--d", "4", "--mubs", "2", "--q", "0:0.05:0.01", "--format", "svg"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("<svg") && out.contains("<polyline"));
}

#[test]
fn usage_errors_exit_one_on_a_single_line() {
    for args in [
        &["keyrate", "--d", "5", "--q", "0"][..],
        &["keyrate", "--d", "3", "--q", "0.5"],
        &["keyrate", "--d", "3", "--mubs", "5", "--q", "0"],
        &["sweep", "--q", "0.2:0.1:0.01"],
        &["bogus"],
    ] {
        let o = sqkd(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        let err = stderr(&o);
        assert_eq!(err.lines().count(), 1, "{args:?}: {err}");
        assert!(err.starts_with("error[usage]: "), "{err}");
    }
}

#[test]
fn numeric_errors_exit_two() {
    let o = sqkd(&["simulate", "--q", "0.02", "--rounds", "10", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error[numeric]: "));
}

#[test]
fn help_and_version_exit_zero() {
    for flag in ["--help", "--version"] {
        let o = sqkd(&[flag]);
        assert_eq!(o.status.code(), Some(0));
        assert!(!stdout(&o).is_empty());
    }
}

#[test]
fn output_is_reproducible() {
    for args in [
        &["threshold", "--all"][..],
        &["simulate", "--d", "4", "--mubs", "3", "--q", "0.01", "--rounds", "50000", "--seed", "9"],
        &["verify-algebra"],
        &["mub-check"],
    ] {
        let (a, b) = (sqkd(args), sqkd(args));
        assert_eq!(a.status.code(), Some(0), "{args:?}: {}", stderr(&a));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let o = sqkd(&["threshold", "--d", "4", "--mubs", "2", "--scenario", "independent", "--output", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("d,n_mubs,scenario,convention,q_star"));
    assert!(text.contains("4,2,independent,per-outcome,"));
}
