use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nsdual"))
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str], out: &Path) -> Output {
    bin()
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("NSDUAL_OUT_DIR")
        .output()
        .unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn bundled_scenarios_exit_zero() {
    let out = tempfile::tempdir().unwrap();
    let dir = crate_dir().join("scenarios");
    let o = run(&["--scenario", dir.to_str().unwrap()], out.path());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}{}", String::from_utf8_lossy(&o.stderr));
    let n = std::fs::read_dir(&dir).unwrap().count();
    assert_eq!(stdout.lines().count(), n);
    for line in stdout.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["exit_code"], 0);
        let d = PathBuf::from(v["out_dir"].as_str().unwrap());
        for f in [
            "report.json",
            "atoms.csv",
            "ladder.csv",
            "dual_curve.csv",
            "scatter.csv",
            "market.csv",
        ] {
            assert!(d.join(f).is_file(), "{} missing {f}", d.display());
        }
    }
}

#[test]
fn trinomial_duality_report_has_small_gap() {
    let out = tempfile::tempdir().unwrap();
    let s = crate_dir().join("scenarios/trinomial_exponential.json");
    let o = run(&["--scenario", s.to_str().unwrap()], out.path());
    assert_eq!(o.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_str(&read(&out.path().join("trinomial_exponential/report.json"))).unwrap();
    let run = &r["runs"][0];
    let v = -(2f64.powf(1.0 / 3.0) + 1.0 + 2f64.powf(-2.0 / 3.0)) / 3.0;
    assert!((run["solve"]["primal_value"].as_f64().unwrap() - v).abs() < 1e-9);
    assert!(run["solve"]["verification"]["relative_gap"].as_f64().unwrap() <= 1e-6);
    assert_eq!(r["passed"], true);
    let atoms = read(&out.path().join("trinomial_exponential/atoms.csv"));
    assert_eq!(atoms.lines().next().unwrap(), "x,atom,prob,claim,x_star,y_star,utility,conjugate");
    assert_eq!(atoms.lines().count(), 4);
}

#[test]
fn ladder_task_reports_a_monotone_trace() {
    let out = tempfile::tempdir().unwrap();
    let s = crate_dir().join("scenarios/trinomial_ladder.json");
    assert_eq!(run(&["--scenario", s.to_str().unwrap()], out.path()).status.code(), Some(0));
    let text = read(&out.path().join("trinomial_ladder/ladder.csv"));
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    // two capitals × five levels
    assert_eq!(rows.len(), 10);
    for pair in rows.windows(2).filter(|p| p[0][0] == p[1][0]) {
        assert!(pair[0][3] <= pair[1][3]);
    }
}

#[test]
fn dual_curve_is_convex() {
    let out = tempfile::tempdir().unwrap();
    let s = crate_dir().join("scenarios/trinomial_audit.json");
    assert_eq!(run(&["--scenario", s.to_str().unwrap()], out.path()).status.code(), Some(0));
    let text = read(&out.path().join("trinomial_audit/dual_curve.csv"));
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert!(!rows.is_empty());
    for w in rows.windows(3).filter(|w| w[0][0] == w[2][0]) {
        let chord = w[0][2] + (w[2][2] - w[0][2]) * (w[1][1] - w[0][1]) / (w[2][1] - w[0][1]);
        assert!(w[1][2] <= chord + 1e-9 * (1.0 + chord.abs()));
    }
}

#[test]
fn arbitrage_is_a_validation_error() {
    let out = tempfile::tempdir().unwrap();
    let s = crate_dir().join("tests/fixtures/arbitrage.json");
    let o = run(&["--scenario", s.to_str().unwrap()], out.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stdout).contains("M^e(S) = ∅"));
    let e: serde_json::Value = serde_json::from_str(&read(&out.path().join("arbitrage/error.json"))).unwrap();
    assert_eq!(e["kind"], "validation");
    assert_eq!(e["exit_code"], 3);
}

#[test]
fn exit_codes_for_parse_solver_and_verifier_failures() {
    let out = tempfile::tempdir().unwrap();
    let fx = crate_dir().join("tests/fixtures");
    let o = run(&["--scenario", fx.join("malformed.json").to_str().unwrap()], out.path());
    assert_eq!(o.status.code(), Some(2));
    let o = run(
        &["--scenario", fx.join("truncated_negative_capital.json").to_str().unwrap()],
        out.path(),
    );
    assert_eq!(o.status.code(), Some(4));
    let s = crate_dir().join("scenarios/trinomial_exponential.json");
    let o = run(
        &["--scenario", s.to_str().unwrap(), "--tol", "solve=1e-300", "--tol", "budget=1e-300"],
        out.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["--scenario", s.to_str().unwrap(), "--tol", "nonsense=1"], out.path());
    assert_eq!(o.status.code(), Some(2));
    // a directory mixing outcomes reports the most severe one
    let o = run(&["--scenario", fx.to_str().unwrap()], out.path());
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn task_override_and_environment_output_directory() {
    let out = tempfile::tempdir().unwrap();
    let s = crate_dir().join("scenarios/trinomial_exponential.json");
    let o = bin()
        .args(["--scenario", s.to_str().unwrap(), "--task", "audit"])
        .env("NSDUAL_OUT_DIR", out.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r: serde_json::Value = serde_json::from_str(&read(&out.path().join("trinomial_exponential/report.json"))).unwrap();
    assert_eq!(r["task"], "audit");
    assert_eq!(r["runs"][0]["audit"]["vertices_checked"], 2);
}

#[test]
fn identical_seeds_give_identical_reports() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let dir = crate_dir().join("scenarios");
    for out in [&a, &b] {
        assert_eq!(
            run(&["--scenario", dir.to_str().unwrap(), "--seed", "42"], out.path())
                .status
                .code(),
            Some(0)
        );
    }
    for entry in std::fs::read_dir(a.path()).unwrap() {
        let sub = entry.unwrap().path();
        for f in std::fs::read_dir(&sub).unwrap() {
            let f = f.unwrap().path();
            let twin = b.path().join(sub.file_name().unwrap()).join(f.file_name().unwrap());
            assert_eq!(std::fs::read(&f).unwrap(), std::fs::read(&twin).unwrap(), "{} differs", f.display());
        }
    }
}
