//! Command-line front end: configuration, suites, reports and exports.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::atlas::{raw_from_json, validate_params, Params};
use crate::error::{Error, Result};
use crate::family::{FamilyKnobs, VerifyKnobs};
use crate::profiles::ProfileKnobs;

mod export;
mod suites;

pub use export::*;
pub use suites::*;

/// Every tunable of a run. Absent `knobs` fields take their defaults;
/// `params` must list every raw parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: Value,
    #[serde(default)]
    pub knobs: Knobs,
    #[serde(default = "default_outputs")]
    pub outputs: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_outputs() -> PathBuf {
    PathBuf::from("outputs")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Knobs {
    pub eps1: f64,
    pub eps2: f64,
    pub x_switch: f64,
    pub x_lo: f64,
    pub target_slope: f64,
    pub knots: usize,
    pub n_tau: usize,
    pub tau_max: f64,
    pub share1: f64,
    pub share2: f64,
    pub eta1_ratio: f64,
    pub lambda_taus: Vec<f64>,
    pub grid_per_piece: usize,
    pub lambda_max: f64,
    pub samples: usize,
    pub binding_points: usize,
    pub regularity_tol: f64,
    /// Samples for the twist conjugation and the injectivity sweep.
    pub twist_samples: usize,
    pub seam_samples: usize,
    /// Profiles and samples per profile in the profile/Levi comparison.
    pub agreement_profiles: usize,
    pub agreement_samples: usize,
    /// Points per exported CSV.
    pub export_points: usize,
}

impl Default for Knobs {
    fn default() -> Self {
        let p = ProfileKnobs::default();
        let f = FamilyKnobs::default();
        let v = VerifyKnobs::default();
        Knobs {
            eps1: p.eps1,
            eps2: p.eps2,
            x_switch: p.x_switch,
            x_lo: p.x_lo,
            target_slope: p.target_slope,
            knots: p.knots,
            n_tau: f.n_tau,
            tau_max: f.tau_max,
            share1: f.share1,
            share2: f.share2,
            eta1_ratio: f.eta1_ratio,
            lambda_taus: v.lambda_taus,
            grid_per_piece: v.grid_per_piece,
            lambda_max: v.lambda_max,
            samples: v.samples,
            binding_points: v.binding_points,
            regularity_tol: v.regularity_tol,
            twist_samples: 10_000,
            seam_samples: 1000,
            agreement_profiles: 24,
            agreement_samples: 200,
            export_points: 2000,
        }
    }
}

impl Knobs {
    pub fn profile(&self) -> ProfileKnobs {
        ProfileKnobs {
            x_lo: self.x_lo,
            eps1: self.eps1,
            eps2: self.eps2,
            x_switch: self.x_switch,
            target_slope: self.target_slope,
            knots: self.knots,
        }
    }

    pub fn family(&self) -> FamilyKnobs {
        FamilyKnobs {
            n_tau: self.n_tau,
            tau_max: self.tau_max,
            share1: self.share1,
            share2: self.share2,
            eta1_ratio: self.eta1_ratio,
        }
    }

    pub fn verify(&self) -> VerifyKnobs {
        VerifyKnobs {
            lambda_taus: self.lambda_taus.clone(),
            grid_per_piece: self.grid_per_piece,
            lambda_max: self.lambda_max,
            samples: self.samples,
            binding_points: self.binding_points,
            regularity_tol: self.regularity_tol,
        }
    }

    fn check(&self) -> Result<()> {
        let positive = [
            ("eps1", self.eps1),
            ("eps2", self.eps2),
            ("lambda_max", self.lambda_max),
            ("regularity_tol", self.regularity_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("knobs.{name} must be positive, got {v}")));
            }
        }
        let minimums = [
            ("n_tau", self.n_tau, 8),
            ("knots", self.knots, 4),
            ("grid_per_piece", self.grid_per_piece, 4),
            ("samples", self.samples, 100),
            ("binding_points", self.binding_points, 8),
            ("twist_samples", self.twist_samples, 100),
            ("seam_samples", self.seam_samples, 100),
            ("agreement_profiles", self.agreement_profiles, 1),
            ("agreement_samples", self.agreement_samples, 10),
            ("export_points", self.export_points, 100),
        ];
        for (name, v, min) in minimums {
            if v < min {
                return Err(Error::Config(format!("knobs.{name} = {v} is below {min}")));
            }
        }
        Ok(())
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: serde_json::to_value(Params::default_raw()).expect("raw params serialize"),
            knobs: Knobs::default(),
            outputs: default_outputs(),
            seed: 0,
        }
    }
}

impl RunConfig {
    /// Reads `path` (or the defaults) and applies `key=value` overrides.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig> {
        let mut v = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => serde_json::to_value(RunConfig::default()).expect("config serialize"),
        };
        for (key, val) in overrides {
            set_dotted(&mut v, key, val)?;
        }
        let cfg: RunConfig = serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))?;
        cfg.knobs.check()?;
        Ok(cfg)
    }

    pub fn params(&self) -> Result<Params> {
        validate_params(&raw_from_json(&self.params)?)
    }
}

/// Sets `a.b.c` in a JSON object; the value is read as JSON when it parses,
/// as a string otherwise.
pub fn set_dotted(root: &mut Value, key: &str, val: &str) -> Result<()> {
    let parsed: Value = serde_json::from_str(val).unwrap_or_else(|_| Value::String(val.to_string()));
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(Error::Config(format!("bad override key `{key}`")));
        }
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("override `{key}`: `{part}` is not inside an object")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), parsed);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

/// Splits `--a.b=v` style overrides (and `--seed=`, `--outputs=`) from the
/// arguments clap should see.
pub fn split_overrides(args: Vec<String>) -> (Vec<String>, Vec<(String, String)>) {
    let mut rest = Vec::new();
    let mut over = Vec::new();
    for a in args {
        let kv = a
            .strip_prefix("--")
            .and_then(|s| s.split_once('='))
            .filter(|(k, _)| k.contains('.') || *k == "seed" || *k == "outputs");
        match kv {
            Some((k, v)) => over.push((k.to_string(), v.to_string())),
            None => rest.push(a),
        }
    }
    (rest, over)
}

#[derive(Debug, Parser)]
#[command(name = "concavia", version, about = "Build and verify the pseudoconcave sphere family")]
pub struct Cli {
    /// JSON run configuration; fields can be overridden with --key.sub=value.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate the parameters and print them with the derived radii.
    Params,
    /// Run certificate suites and write a JSON report.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
    },
    /// Write CSV point clouds or field sweeps.
    Export {
        #[arg(long, value_enum)]
        what: ExportKind,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Atlas,
    Openbook,
    Profiles,
    Levi,
    Family,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum ExportKind {
    M1,
    Pages,
    Binding,
    Corners,
    Family,
    LeviField,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Runs the CLI on `args` (without the program name), writing human output
/// to `out` and diagnostics to `err`; returns the exit code.
pub fn run(args: Vec<String>, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32 {
    let (rest, overrides) = split_overrides(args);
    let cli = match Cli::try_parse_from(std::iter::once("concavia".to_string()).chain(rest)) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    let cfg = match RunConfig::load(cli.config.as_deref(), &overrides) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    let res = match cli.command {
        Command::Params => cmd_params(&cfg, out),
        Command::Verify { suite } => cmd_verify(&cfg, suite, out),
        Command::Export { what } => cmd_export(&cfg, what, out),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_CONFIG
        }
    }
}

pub fn cmd_params(cfg: &RunConfig, out: &mut dyn std::io::Write) -> Result<i32> {
    let p = cfg.params()?;
    writeln!(out, "{}", pretty(&p.to_json()))?;
    Ok(EXIT_OK)
}

pub fn cmd_verify(cfg: &RunConfig, suite: Suite, out: &mut dyn std::io::Write) -> Result<i32> {
    let params = cfg.params()?;
    let report = run_suites(&params, cfg, suite);
    std::fs::create_dir_all(&cfg.outputs)?;
    let name = format!("report_{}.json", suite_tag(suite));
    std::fs::write(cfg.outputs.join(&name), pretty(&serde_json::to_value(&report).expect("report serializes")))?;
    for s in &report.suites {
        writeln!(out, "[{}] {}", if s.pass { "PASS" } else { "FAIL" }, s.suite)?;
        for c in s.certificates.iter().filter(|c| !c.pass) {
            writeln!(out, "    {}", c.summary())?;
        }
        if let Some(e) = &s.error {
            writeln!(out, "    error: {e}")?;
        }
    }
    writeln!(out, "report: {}", cfg.outputs.join(name).display())?;
    Ok(if report.pass { EXIT_OK } else { EXIT_FAIL })
}

pub fn cmd_export(cfg: &RunConfig, what: ExportKind, out: &mut dyn std::io::Write) -> Result<i32> {
    let params = cfg.params()?;
    std::fs::create_dir_all(&cfg.outputs)?;
    for (name, body) in export(&params, cfg, what)? {
        let path = cfg.outputs.join(&name);
        std::fs::write(&path, body)?;
        writeln!(out, "wrote {}", path.display())?;
    }
    Ok(EXIT_OK)
}

pub(crate) fn suite_tag(s: Suite) -> &'static str {
    match s {
        Suite::Atlas => "atlas",
        Suite::Openbook => "openbook",
        Suite::Profiles => "profiles",
        Suite::Levi => "levi",
        Suite::Family => "family",
        Suite::All => "all",
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json value prints")
}

/// Caps rayon's global pool from `CONCAVIA_THREADS` when set.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("CONCAVIA_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("CONCAVIA_THREADS = `{v}` is not a thread count")))?;
        if n == 0 {
            return Err(Error::Config("CONCAVIA_THREADS must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests;
