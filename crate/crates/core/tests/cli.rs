use std::process::Command;

fn concavia(dir: &std::path::Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_concavia"))
        .args(args)
        .current_dir(dir)
        .env("CONCAVIA_THREADS", "2")
        .output()
        .expect("binary runs")
}

#[test]
fn exit_zero_when_everything_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = concavia(dir.path(), &["verify", "--suite", "atlas"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(dir.path().join("outputs/report_atlas.json").exists());
}

#[test]
fn exit_one_on_verification_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = concavia(dir.path(), &["verify", "--suite", "family", "--knobs.eps2=0.02"]);
    assert_eq!(out.status.code(), Some(1));
    let text = std::fs::read_to_string(dir.path().join("outputs/report_family.json")).unwrap();
    assert!(text.contains("infeasible"), "{text}");
}

#[test]
fn exit_two_on_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"params": {"rho1": 0.9}}"#).unwrap();
    let out = concavia(dir.path(), &["params", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing"));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let o = format!("--outputs={sub}");
        assert_eq!(concavia(dir.path(), &["verify", "--suite", "openbook", "--seed=5", &o]).status.code(), Some(0));
        std::fs::read(dir.path().join(sub).join("report_openbook.json")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_concavia"))
        .arg("params")
        .current_dir(dir.path())
        .env("CONCAVIA_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
