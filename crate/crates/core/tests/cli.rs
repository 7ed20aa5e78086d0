//! Binary-level integration tests: exit codes, output formats, env override,
//! and the solve → check round trip.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_extremal-shape"));
    c.env_remove("EXTREMAL_SHAPE_OUT");
    c
}

#[test]
fn usage_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    // p below 2
    let out = bin()
        .args(["solve", "--p", "1.5", "--domain", "ball", "--N", "3", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    // p above the critical exponent
    let out = bin()
        .args(["solve", "--p", "7", "--domain", "ball", "--N", "3", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    // unknown flag
    let out = bin().args(["solve", "--nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    // missing field file for check
    let out = bin()
        .args(["check", "/nonexistent/field.csv", "--p", "3", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_writes_one_record_per_exponent() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "sweep", "--p", "2:0.5:6", "--domain", "disc", "--mr", "24", "--mtheta", "32",
            "--out",
        ])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(tmp.path().join("sweep.jsonl")).unwrap();
    let records: Vec<serde_json::Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(records.len(), 9);
    for r in &records {
        assert!(r["config"]["seed"].is_u64(), "config echo missing: {r}");
        assert!(r["lambda"].is_f64());
    }
}

#[test]
fn env_var_overrides_out_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let ignored = tmp.path().join("ignored");
    let actual = tmp.path().join("actual");
    let out = bin()
        .args(["oracle", "--domain", "disc", "--out"])
        .arg(&ignored)
        .env("EXTREMAL_SHAPE_OUT", &actual)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(actual.join("oracle.json").exists());
    assert!(!ignored.exists());
}

fn leaf_numbers(v: &serde_json::Value, out: &mut Vec<(String, f64)>, prefix: String) {
    match v {
        serde_json::Value::Number(n) => out.push((prefix, n.as_f64().unwrap())),
        serde_json::Value::Object(m) => {
            for (k, x) in m {
                leaf_numbers(x, out, format!("{prefix}/{k}"));
            }
        }
        _ => {}
    }
}

#[test]
fn solve_then_check_round_trips_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    let solve_dir = tmp.path().join("solve");
    let check_dir = tmp.path().join("check");
    let common = [
        "--domain", "disc", "--p", "3", "--mr", "48", "--mtheta", "64", "--seed", "11",
    ];
    let out = bin()
        .arg("solve")
        .args(common)
        .arg("--out")
        .arg(&solve_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = bin()
        .arg("check")
        .arg(solve_dir.join("field.csv"))
        .args(common)
        .arg("--out")
        .arg(&check_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let load = |p: &Path| -> serde_json::Value {
        serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
    };
    let a = load(&solve_dir.join("report.json"));
    let b = load(&check_dir.join("report.json"));
    let (mut la, mut lb) = (Vec::new(), Vec::new());
    leaf_numbers(&a["report"], &mut la, String::new());
    leaf_numbers(&b["report"], &mut lb, String::new());
    assert_eq!(la.len(), lb.len());
    for ((ka, va), (kb, vb)) in la.iter().zip(&lb) {
        assert_eq!(ka, kb);
        assert!(
            (va - vb).abs() <= 1e-12 * va.abs().max(1.0),
            "{ka}: {va} vs {vb}"
        );
    }
    // config echoes agree too
    assert_eq!(a["config"], b["config"]);
}
