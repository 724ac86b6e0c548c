use std::process::{Command, Output};

const DOC: &str = "system bit
  states zero one
  temperature 1

dist known
  over bit
  probs 1 0

dist half
  over bit
  probs 0.5 0.5

channel erase
  over bit
  from zero: zero 1
  from one: zero 1

channel mix
  over bit
  from zero: zero 0.75 one 0.25
  from one: zero 0.25 one 0.75

protocol relax
  start known
  check-correspondence
  apply mix
  audit 20
  report json
";

fn thermobit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thermobit"))
        .args(args)
        .env_remove("THERMOBIT_SEED")
        .output()
        .expect("binary runs")
}

fn doc() -> tempfile::NamedTempFile {
    let f = tempfile::Builder::new().suffix(".tb").tempfile().unwrap();
    std::fs::write(f.path(), DOC).unwrap();
    f
}

fn path(f: &tempfile::NamedTempFile) -> &str {
    f.path().to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn check_a_known_bit() {
    let f = doc();
    let out = thermobit(&["check", path(&f), "known", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["divergence"]["bits"], 1.0);

    let out = thermobit(&["check", "--energies", "0,-1.5,2", "--probs", "0.2,0.3,0.5", "--temperature", "0.7"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("pass"));
}

#[test]
fn audit_exit_codes() {
    let f = doc();
    assert_eq!(thermobit(&["audit", path(&f), "mix", "known"]).status.code(), Some(0));
    let bad = thermobit(&["audit", path(&f), "erase", "half", "--reference", "half", "--steps", "3"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn audit_writes_a_trajectory() {
    let f = doc();
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("traj.csv");
    let out = thermobit(&["audit", path(&f), "mix", "known", "--steps", "5", "--csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 7, "{text}");
}

#[test]
fn bitop_ledger() {
    let out = thermobit(&["bitop", "erase"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["direction"], "COSTS_AT_LEAST");
    assert_eq!(v["delta_h"]["nats"], -std::f64::consts::LN_2);
    assert_eq!(thermobit(&["bitop", "erase", "--probs", "1,0"]).status.code(), Some(1));
    assert_eq!(thermobit(&["bitop", "frobnicate"]).status.code(), Some(1));
}

#[test]
fn szilard_and_demon() {
    let out = thermobit(&["szilard", "--steps", "1e4", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("N,work,abs_error,error_ratio\n"));
    for m in ["szilard", "landauer", "none"] {
        assert_eq!(thermobit(&["demon", "--measurement", m]).status.code(), Some(0), "{m}");
    }
}

#[test]
fn sweep_pass_and_fault() {
    let ok = thermobit(&["sweep", "--instances", "200", "--max-states", "8"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    let bad = thermobit(&["sweep", "--instances", "200", "--max-states", "8", "--inject-fault"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn seed_comes_from_the_environment() {
    let run = |seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_thermobit"))
            .args(["sweep", "--instances", "50", "--format", "json"])
            .env("THERMOBIT_SEED", seed)
            .output()
            .unwrap()
    };
    let v: serde_json::Value = serde_json::from_slice(&run("0x10").stdout).unwrap();
    assert_eq!(v["seed"], 16);
    assert_eq!(run("not-a-seed").status.code(), Some(1));
}

#[test]
fn run_and_fmt() {
    let f = doc();
    let out = thermobit(&["run", path(&f)]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], true);

    let out = thermobit(&["fmt", path(&f)]);
    assert_eq!(out.status.code(), Some(0));
    let again = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(again.path(), &out.stdout).unwrap();
    assert_eq!(thermobit(&["fmt", path(&again)]).stdout, out.stdout);
}

#[test]
fn input_errors_exit_one() {
    let f = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(f.path(), "system s\n  states a\n  temperature zero\n").unwrap();
    let out = thermobit(&["fmt", path(&f)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains(":3:15: error:"), "{err}");

    assert_eq!(thermobit(&["run", "/nonexistent/doc.tb"]).status.code(), Some(1));
    assert_eq!(thermobit(&["teleport"]).status.code(), Some(1));
    assert_eq!(thermobit(&["--help"]).status.code(), Some(0));
}
