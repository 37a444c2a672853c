use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_schwarz-pc"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("failed to launch binary")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn coeffs_tables() {
    let out = run(&["coeffs", "--k", "3", "--m", "3", "--eta", "2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.lines().any(|l| l == "pred_coarse: 6 -8 3"), "{text}");
    assert!(text.lines().any(|l| l == "corr_fine[1]: 0.375 0.75 -0.125"));

    let out = run(&["coeffs", "--k", "1", "--m", "1", "--eta", "1"]);
    assert!(stdout(&out).lines().any(|l| l == "beta: 1 -1"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(
        run(&["coeffs", "--k", "4", "--m", "1", "--eta", "1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["coeffs", "--k", "2", "--m", "3"]).status.code(),
        Some(1)
    );
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["radius", "--k", "1"]).status.code(), Some(1));
    assert_eq!(
        run(&["radius", "--k", "1", "--m", "1", "--q", "0", "--s", "-1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

fn radius(args: &[&str]) -> (f64, bool) {
    let mut full = vec!["radius"];
    full.extend_from_slice(args);
    let out = run(&full);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    let field = |name: &str| -> String {
        text.split_whitespace()
            .find_map(|t| t.strip_prefix(&format!("{name}=")).map(str::to_string))
            .unwrap()
    };
    (
        field("rho").parse().unwrap(),
        field("stable").parse().unwrap(),
    )
}

#[test]
fn radius_reports_stability() {
    for s in ["0.5", "1000", "1e6"] {
        assert!(radius(&["--k", "1", "--m", "1", "--q", "0", "--s", s]).1);
    }
    let (rho, _) = radius(&["--k", "2", "--m", "2", "--q", "1", "--s", "1e-8"]);
    assert!((rho - 1.0).abs() < 1e-6);
    let (_, even) = radius(&["--k", "3", "--m", "3", "--q", "2", "--s", "300"]);
    let (_, odd) = radius(&["--k", "3", "--m", "3", "--q", "1", "--s", "300"]);
    assert!(!even && odd);
}

#[test]
fn sweep_csv_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |p: &std::path::Path| {
        vec![
            "sweep".to_string(),
            "--k=2,3".into(),
            "--m=2,3".into(),
            "--q=0,1,2".into(),
            "--gamma=1,0.5".into(),
            "--eta=1,2".into(),
            "--n=8".into(),
            "--overlap=2".into(),
            "--points=4".into(),
            "--s-max=100".into(),
            format!("--out={}", p.display()),
        ]
    };
    assert!(bin().args(args(&a)).status().unwrap().success());
    assert!(bin().args(args(&b)).status().unwrap().success());
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());

    let rows = schwarz_pc::sweep::read_csv(text.as_bytes()).unwrap();
    // (2,2), (3,2), (3,3) x 3 Q x 2 gamma x 2 eta x 4 s
    assert_eq!(rows.len(), 3 * 3 * 2 * 2 * 4);
    for r in rows.iter().step_by(7) {
        let (rho, stable) = radius(&[
            &format!("--k={}", r.k),
            &format!("--m={}", r.m),
            &format!("--q={}", r.q),
            &format!("--gamma={}", r.gamma),
            &format!("--eta={}", r.eta),
            &format!("--n={}", r.n),
            &format!("--overlap={}", r.overlap),
            &format!("--s={}", r.s),
        ]);
        assert!((rho - r.rho).abs() < 1e-10);
        assert_eq!(stable, r.stable);
    }
}

#[test]
fn sweep_to_unwritable_path_fails() {
    let out = run(&[
        "sweep",
        "--points",
        "2",
        "--n",
        "6",
        "--overlap",
        "1",
        "--out",
        "/nonexistent/dir/x.csv",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_reports_rate_and_radius() {
    let out = run(&[
        "simulate", "--k", "1", "--m", "1", "--q", "1", "--s", "10", "--steps", "256",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let tail = |key: &str| -> String {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("# {key}=")).map(str::to_string))
            .unwrap()
    };
    let rate: f64 = tail("empirical_rate").parse().unwrap();
    let rho: f64 = tail("rho").parse().unwrap();
    assert!((rate / rho - 1.0).abs() < 0.02, "{rate} vs {rho}");
    assert_eq!(tail("overflowed"), "0");
    assert_eq!(
        text.lines().filter(|l| !l.starts_with('#')).count(),
        1 + 257
    );

    let out = run(&[
        "simulate", "--k", "2", "--m", "2", "--q", "1", "--s", "10", "--steps", "20", "--zero",
        "--eta", "2",
    ]);
    let text = stdout(&out);
    assert!(text.contains("# empirical_rate=NA"));

    let out = run(&[
        "simulate", "--k", "3", "--m", "3", "--q", "0", "--s", "500", "--steps", "100000",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("# overflowed=1"));
}

#[test]
fn repro_writes_bundle_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "repro",
        "--bundle",
        "fig8",
        "--points",
        "3",
        "--s-max",
        "10",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.path().join("fig8.csv")).unwrap();
    let rows = schwarz_pc::sweep::read_csv(text.as_bytes()).unwrap();
    assert_eq!(rows.len(), 2 * 8 * 3);
    assert_eq!(run(&["repro", "--bundle", "fig9"]).status.code(), Some(1));
}
