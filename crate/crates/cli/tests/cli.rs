use std::path::Path;
use std::process::{Command, Output};

fn mrec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mrec")).args(args).output().expect("mrec runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn lists_every_experiment() {
    let out = mrec(&["--list-experiments"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["entropy", "minreturn", "pressure", "theoremC", "suspension", "oracle", "check-spec"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "missing {name}");
    }
}

#[test]
fn config_errors_exit_2_with_a_path() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"experiment":"entropy","sytem":{}}"#, "sytem"),
        (r#"{"experiment":"entropy","system":{"type":"full_shift","alphabet":2},"measure":{"type":"uniform"},"n_grid":[0]}"#, "n_grid"),
        (r#"{"experiment":"nope"}"#, "experiment"),
        (r#"{"experiment":"suspension","system":{"type":"beta","beta":2.0},"measure":{"type":"lebesgue"},"roof":{"affine":{"c":1,"d":1}},"n_grid":[3],"epsilon_grid":[0.1]}"#, "integer slopes"),
    ];
    for (i, (text, field)) in cases.iter().enumerate() {
        let config = write(dir.path(), &format!("bad{i}.json"), text);
        let out = mrec(&["--config", &config]);
        assert_eq!(out.status.code(), Some(2), "case {i}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.contains(field), "case {i}: {err}");
    }
}

#[test]
fn entropy_run_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "e.json",
        r#"{"experiment":"entropy","system":{"type":"full_shift","alphabet":2},"measure":{"type":"uniform"},
            "mistake":{"family":"constant","c":1},"n_grid":[6,8],"samples":10,"master_seed":4}"#,
    );
    let csv = dir.path().join("e.csv");
    let out = mrec(&["--config", &config, "--out", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("experiment_id,system,measure,n,epsilon,g_spec"));
    assert_eq!(lines.count(), 20);
    assert!(dir.path().join("e.csv.summary.txt").exists());
}

#[test]
fn seed_flag_changes_output_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "m.json",
        r#"{"experiment":"minreturn","system":{"type":"golden_mean"},"measure":{"type":"equilibrium"},
            "potential":{"depth1":[0,0]},"mistake":{"family":"power","scale":1,"theta":0.5},"n_grid":[50,100],"samples":8}"#,
    );
    let run = |seed: &str, name: &str| {
        let csv = dir.path().join(name);
        let out = mrec(&["--config", &config, "--out", csv.to_str().unwrap(), "--seed", seed]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(csv).unwrap()
    };
    assert_eq!(run("9", "a.csv"), run("9", "b.csv"));
    assert_ne!(run("9", "a.csv"), run("10", "c.csv"));
}

#[test]
fn check_spec_on_golden_mean_passes() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "s.json",
        r#"{"experiment":"check-spec","system":{"type":"golden_mean"},"mistake":{"family":"constant","c":1},
            "n_grid":[1,2,3,4],"m_grid":[1,2,3,4]}"#,
    );
    let out = mrec(&["--config", &config, "--out", dir.path().join("s.csv").to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
