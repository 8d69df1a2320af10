use super::*;

fn run_args(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(args.iter().map(|s| s.to_string()).collect(), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn overrides_split_from_clap_args() {
    let args = ["verify", "--suite", "atlas", "--knobs.eps2=0.006", "--seed=4", "--config", "x.json"];
    let (rest, over) = split_overrides(args.iter().map(|s| s.to_string()).collect());
    assert_eq!(rest, vec!["verify", "--suite", "atlas", "--config", "x.json"]);
    assert_eq!(over, vec![("knobs.eps2".to_string(), "0.006".to_string()), ("seed".into(), "4".into())]);
}

#[test]
fn dotted_keys_set_nested_values() {
    let mut v = serde_json::json!({"knobs": {"eps2": 0.005}});
    set_dotted(&mut v, "knobs.eps2", "0.006").unwrap();
    set_dotted(&mut v, "outputs", "some/dir").unwrap();
    set_dotted(&mut v, "a.b.c", "[1, 2]").unwrap();
    assert_eq!(v["knobs"]["eps2"], 0.006);
    assert_eq!(v["outputs"], "some/dir");
    assert_eq!(v["a"]["b"]["c"], serde_json::json!([1, 2]));
    assert!(set_dotted(&mut v, "knobs..eps2", "1").is_err());
    assert!(set_dotted(&mut v, "knobs.eps2.deeper", "1").is_err());
}

#[test]
fn default_config_round_trips() {
    let cfg = RunConfig::load(None, &[]).unwrap();
    assert_eq!(cfg, RunConfig::default());
    assert_eq!(cfg.knobs.profile(), crate::profiles::ProfileKnobs::default());
    assert_eq!(cfg.knobs.family(), FamilyKnobs::default());
    assert_eq!(cfg.params().unwrap(), Params::defaults());
}

#[test]
fn config_errors() {
    let over = |k: &str, v: &str| RunConfig::load(None, &[(k.to_string(), v.to_string())]);
    assert!(matches!(over("knobs.no_such_knob", "1"), Err(Error::Config(_))));
    assert!(matches!(over("knobs.n_tau", "4"), Err(Error::Config(_))));
    assert!(matches!(over("knobs.eps1", "-1"), Err(Error::Config(_))));
    let cfg = over("knobs.eps2", "0.006").unwrap();
    assert_eq!(cfg.knobs.eps2, 0.006);
    let mut missing = RunConfig::default();
    missing.params.as_object_mut().unwrap().remove("rho1");
    assert!(matches!(missing.params(), Err(Error::MissingField(f)) if f == "rho1"));
}

#[test]
fn params_command() {
    let (code, out, _) = run_args(&["params"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["a"], 1.04);
    let (code, _, err) = run_args(&["params", "--params.rho2=1.2"]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("rho2"));
    let (code, _, _) = run_args(&["frobnicate"]);
    assert_eq!(code, EXIT_CONFIG);
}

#[test]
fn verify_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let outputs = format!("--outputs={}", dir.path().display());
    let (code, out, _) = run_args(&["verify", "--suite", "openbook", &outputs]);
    assert_eq!(code, EXIT_OK, "{out}");
    let text = std::fs::read_to_string(dir.path().join("report_openbook.json")).unwrap();
    let rep: VerifyReport = serde_json::from_str(&text).unwrap();
    assert!(rep.pass);
    let conj = rep.suites[0].certificates.iter().find(|c| c.name.contains("conjugate")).unwrap();
    assert!(conj.margin > 0.0 && conj.samples == 10_000);
}

#[test]
fn export_binding_and_family() {
    let dir = tempfile::tempdir().unwrap();
    let outputs = format!("--outputs={}", dir.path().display());
    assert_eq!(run_args(&["export", "--what", "binding", &outputs]).0, EXIT_OK);
    let text = std::fs::read_to_string(dir.path().join("binding.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "part,u1_re,u1_im,u2_re,u2_im,chart,z1_re,z1_im,z2_re,z2_im");
    assert!(text.lines().skip(1).all(|l| l.split(',').count() == 10));
    assert_eq!(run_args(&["export", "--what", "family", &outputs]).0, EXIT_OK);
    let n = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("family_tau_"))
        .count();
    assert_eq!(n, FamilyKnobs::default().n_tau);
}
