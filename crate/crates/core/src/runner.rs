//! Batch runner behind the `lamperti run` command.
//!
//! A run reads one JSON config, performs one computation, and writes its
//! artifacts plus `manifest.json` into the output directory. Every file is
//! written to a temporary name and renamed into place. The manifest is
//! written even when the computation fails.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | i/o failure (unreadable config, unwritable output) |
//! | 2 | config schema violation, invalid model or argument |
//! | 3 | unmet precondition or unsupported model |
//! | 4 | numerical or internal consistency failure |

use crate::digest::sha256_hex;
use crate::error::{Error, Result};
use crate::explosion::{
    estimate_lambda, moment_recursion, prop46_checks, verify_thm1, verify_thm2, ConvergenceTable, Regime, SpeedTable,
    VerifyConfig,
};
use crate::levy_model::{LevyModel, ModelSpec};
use crate::numeric::fmt_g12;
use crate::omega_scale::{
    check_h0_h1_h2, classify_boundaries, solve_w_omega, OmegaGrid, RateFunction, RateSpec, Verdict,
};
use crate::scale_functions::{compute_scale, default_grid, InversionMethod, ScaleOptions};
use crate::simulation::{monte_carlo, ExperimentSpec, SimConfig};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::fs;
use std::path::{Path, PathBuf};

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "LAMPERTI_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Scale,
    Omega,
    Moments,
    Simulate,
    VerifyThm1,
    VerifyThm2,
    Classify,
    Prop46,
}

impl Kind {
    pub fn is_stochastic(self) -> bool {
        matches!(self, Kind::Simulate | Kind::VerifyThm1 | Kind::VerifyThm2)
    }

    fn name(self) -> &'static str {
        match self {
            Kind::Scale => "scale",
            Kind::Omega => "omega",
            Kind::Moments => "moments",
            Kind::Simulate => "simulate",
            Kind::VerifyThm1 => "verify-thm1",
            Kind::VerifyThm2 => "verify-thm2",
            Kind::Classify => "classify",
            Kind::Prop46 => "prop46",
        }
    }
}

/// One run. Fields not used by `kind` must be absent or are ignored only
/// when they carry defaults; unknown fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub model: ModelSpec,
    #[serde(default)]
    pub rate: Option<RateSpec>,
    /// Evaluation points (`scale`, `moments`, `prop46`).
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
    /// Killing rate for `scale`.
    #[serde(default)]
    pub q: f64,
    #[serde(default)]
    pub method: InversionMethod,
    /// Triangle for `omega`.
    #[serde(default)]
    pub omega: Option<OmegaSettings>,
    /// Highest moment order for `moments`.
    #[serde(default)]
    pub order: Option<usize>,
    #[serde(default)]
    pub sim: Option<SimConfig>,
    #[serde(default)]
    pub experiment: Option<ExperimentSpec>,
    #[serde(default)]
    pub verify: Option<VerifyConfig>,
    /// Levels for `verify-thm1`.
    #[serde(default)]
    pub levels: Option<Vec<f64>>,
    /// Remaining times for `verify-thm2`.
    #[serde(default)]
    pub t_grid: Option<Vec<f64>>,
    /// Exponent for `prop46`.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaSettings {
    #[serde(default)]
    pub lo: f64,
    pub x_max: f64,
    pub step: f64,
    /// Keep every `stride`-th node in the CSV.
    #[serde(default = "one")]
    pub stride: usize,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    /// Parse and validate, reporting the JSON path of the first problem.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(if path == "." { "$".to_string() } else { path }, e.into_inner().to_string())
        })?;
        Ok(cfg)
    }

    fn require<'a, T>(&self, value: &'a Option<T>, field: &str) -> Result<&'a T> {
        value
            .as_ref()
            .ok_or_else(|| Error::config(field, format!("required for kind `{}`", self.kind.name())))
    }

    fn rate(&self) -> Result<RateFunction> {
        RateFunction::new(self.require(&self.rate, "rate")?.clone())
    }

    fn model(&self) -> Result<LevyModel> {
        LevyModel::new(self.model)
    }
}

/// Overrides from the command line.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

/// `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    /// `"ok"` or `"error"`.
    pub status: String,
    pub exit_code: i32,
    pub kind: Option<String>,
    pub seed: Option<u64>,
    pub config_sha256: Option<String>,
    pub error: Option<String>,
    pub outputs: Vec<ManifestEntry>,
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Domain(_) | Error::Model(_) => 2,
        Error::Precondition { .. } | Error::Unsupported(_) => 3,
        Error::Numeric(_) | Error::Consistency(_) => 4,
        Error::Io(_) => 1,
    }
}

/// Outcome of [`run`].
#[derive(Debug, Clone)]
pub struct RunReport {
    pub exit_code: i32,
    pub out_dir: PathBuf,
    pub manifest: Manifest,
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, dir.join(name))?;
    Ok(())
}

struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    fn new() -> Self {
        Artifacts { files: Vec::new() }
    }

    fn text(&mut self, name: &str, body: String) {
        self.files.push((name.to_string(), body.into_bytes()));
    }

    fn json(&mut self, name: &str, value: &Value) {
        let mut body = serde_json::to_string_pretty(value).expect("serialisable");
        body.push('\n');
        self.text(name, body);
    }
}

fn thread_count(opts: &RunOptions) -> Result<Option<usize>> {
    if let Some(n) = opts.threads {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Error::config(THREADS_ENV, format!("not a thread count: {v:?}"))),
        Err(_) => Ok(None),
    }
}

/// Run the config at `path`. Never panics on bad input; the returned exit
/// code follows the table in the module docs.
pub fn run(path: &Path, opts: &RunOptions) -> RunReport {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())));
    let parsed = text.as_ref().map_err(Clone::clone).and_then(|t| ExperimentConfig::from_json(t));
    let out_dir = opts
        .out
        .clone()
        .or_else(|| parsed.as_ref().ok().and_then(|c| c.out.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    let config_sha = text.as_ref().ok().map(|t| sha256_hex(t.as_bytes()));
    let kind = parsed.as_ref().ok().map(|c| c.kind.name().to_string());

    let mut seed = None;
    let result = parsed.and_then(|mut cfg| {
        if let Some(s) = opts.seed {
            cfg.seed = Some(s);
        }
        seed = cfg.seed;
        if cfg.kind.is_stochastic() && cfg.seed.is_none() {
            return Err(Error::config("seed", "a seed is required for stochastic kinds"));
        }
        let threads = thread_count(opts)?;
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            builder = builder.num_threads(n);
        }
        let pool = builder.build().map_err(|e| Error::config("threads", e.to_string()))?;
        pool.install(|| execute(&cfg))
    });

    let (status, code, error, artifacts) = match result {
        Ok(a) => ("ok", 0, None, a),
        Err(e) => ("error", exit_code(&e), Some(e.to_string()), Artifacts::new()),
    };
    let mut manifest = Manifest {
        status: status.into(),
        exit_code: code,
        kind,
        seed,
        config_sha256: config_sha,
        error,
        outputs: Vec::new(),
    };
    let written = (|| -> Result<()> {
        fs::create_dir_all(&out_dir)?;
        for (name, bytes) in &artifacts.files {
            write_atomic(&out_dir, name, bytes)?;
            manifest.outputs.push(ManifestEntry {
                file: name.clone(),
                sha256: sha256_hex(bytes),
                bytes: bytes.len(),
            });
        }
        Ok(())
    })();
    if let Err(e) = written {
        manifest.status = "error".into();
        manifest.exit_code = 1;
        manifest.error = Some(e.to_string());
    }
    let mut body = serde_json::to_string_pretty(&manifest).expect("serialisable");
    body.push('\n');
    let manifest_written = fs::create_dir_all(&out_dir).is_ok() && write_atomic(&out_dir, "manifest.json", body.as_bytes()).is_ok();
    let exit_code = if manifest_written { manifest.exit_code } else { 1 };
    RunReport {
        exit_code,
        out_dir,
        manifest,
    }
}

fn execute(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let model = cfg.model()?;
    let mut a = Artifacts::new();
    match cfg.kind {
        Kind::Scale => {
            let grid = cfg.grid.clone().unwrap_or_else(default_grid);
            let opts = ScaleOptions {
                method: cfg.method,
                ..ScaleOptions::default()
            };
            let table = compute_scale(&model, cfg.q, &grid, &opts)?;
            a.text("scale.csv", table.to_csv());
            a.json(
                "summary.json",
                &json!({
                    "kind": "scale",
                    "q": cfg.q,
                    "phi_q": table.kernel().phi_q(),
                    "p": model.p(),
                    "gamma": model.gamma(),
                    "model_fingerprint": table.fingerprint(),
                    "max_error_estimate": table.error_estimates().iter().copied().fold(0.0, f64::max),
                }),
            );
        }
        Kind::Omega => {
            let rate = cfg.rate()?;
            let o = cfg.require(&cfg.omega, "omega")?;
            let grid = OmegaGrid::new(o.lo, o.x_max, o.step)?;
            let table = solve_w_omega(&model, rate, &grid, cfg.method)?;
            let forms = table.check_forms()?;
            a.text("omega.csv", table.to_csv(o.stride));
            a.json(
                "summary.json",
                &json!({"kind": "omega", "nodes": grid.len() + 1, "form_check": forms}),
            );
        }
        Kind::Moments => {
            let rate = cfg.rate()?;
            let grid = cfg.require(&cfg.grid, "grid")?;
            let order = *cfg.require(&cfg.order, "order")?;
            let tables = moment_recursion(&model, &rate, order, grid)?;
            let mut csv = String::from("x,order,value,quadrature_bound,factorial_bound\n");
            for t in &tables {
                for (i, x) in t.grid.iter().enumerate() {
                    csv.push_str(&format!(
                        "{},{},{},{},{}\n",
                        fmt_g12(*x),
                        t.order,
                        fmt_g12(t.values[i]),
                        fmt_g12(t.quadrature_bound[i]),
                        fmt_g12(t.factorial_bound)
                    ));
                }
            }
            a.text("moments.csv", csv);
            let within: Vec<bool> = tables.iter().map(|t| t.within_factorial_bound()).collect();
            a.json(
                "summary.json",
                &json!({"kind": "moments", "order": order, "within_factorial_bound": within}),
            );
        }
        Kind::Simulate => {
            let rate = cfg.rate()?;
            let mut sim = cfg.require(&cfg.sim, "sim")?.clone();
            sim.seed = cfg.seed.expect("checked by run");
            let spec = cfg.require(&cfg.experiment, "experiment")?;
            let report = monte_carlo(&model, &rate, spec, &sim)?;
            let mut csv = String::from("estimator,replicates,accepted,mean,std_error,ci_low,ci_high\n");
            let (m, se, lo, hi) = report
                .summary
                .map_or((f64::NAN, f64::NAN, f64::NAN, f64::NAN), |s| (s.mean, s.std_error, s.ci95[0], s.ci95[1]));
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                report.estimator,
                report.replicates,
                report.accepted,
                fmt_g12(m),
                fmt_g12(se),
                fmt_g12(lo),
                fmt_g12(hi)
            ));
            a.text("simulate.csv", csv);
            a.json("summary.json", &json!({"kind": "simulate", "report": report}));
        }
        Kind::VerifyThm1 => {
            let rate = cfg.rate()?;
            let mut v = cfg.require(&cfg.verify, "verify")?.clone();
            v.sim.seed = cfg.seed.expect("checked by run");
            let levels = cfg.require(&cfg.levels, "levels")?;
            let table = verify_thm1(&model, &rate, levels, &v)?;
            a.text("convergence.csv", table.to_csv());
            a.json(
                "summary.json",
                &json!({"kind": "verify-thm1", "table": table, "checks": convergence_checks(&table)}),
            );
        }
        Kind::VerifyThm2 => {
            let rate = cfg.rate()?;
            let mut v = cfg.require(&cfg.verify, "verify")?.clone();
            v.sim.seed = cfg.seed.expect("checked by run");
            let ts = cfg.require(&cfg.t_grid, "t_grid")?;
            let table = verify_thm2(&model, &rate, ts, &v)?;
            a.text("speed.csv", table.to_csv());
            a.json(
                "summary.json",
                &json!({"kind": "verify-thm2", "table": table, "checks": speed_checks(&table)}),
            );
        }
        Kind::Classify => {
            let rate = cfg.rate()?;
            let boundaries = classify_boundaries(&model, &rate)?;
            let conditions = check_h0_h1_h2(&model, &rate)?;
            let regime = if conditions.h0 == Verdict::Yes && model.gamma() > 0.0 && model.gamma().is_finite() {
                Some(estimate_lambda(&rate, model.gamma())?)
            } else {
                None
            };
            a.json(
                "summary.json",
                &json!({
                    "kind": "classify",
                    "p": model.p(),
                    "gamma": model.gamma(),
                    "extinction": boundaries.extinction.as_str(),
                    "explosion": boundaries.explosion.as_str(),
                    "h0": conditions.h0.as_str(),
                    "h1": conditions.h1.as_str(),
                    "lambda": regime.as_ref().and_then(|r| r.lambda),
                    "regime": regime.as_ref().and_then(|r| r.regime),
                }),
            );
        }
        Kind::Prop46 => {
            let rate = cfg.rate()?;
            let gamma = model.require_finite_gamma()?;
            let alpha = *cfg.require(&cfg.alpha, "alpha")?;
            let xs = cfg.require(&cfg.grid, "grid")?;
            let t = prop46_checks(&rate, gamma, alpha, xs)?;
            let mut csv = String::from("case,argument,ratio,double_ratio\n");
            for r in &t.rows {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    serde_json::to_value(r.case).expect("serialisable").as_str().unwrap_or_default(),
                    fmt_g12(r.argument),
                    fmt_g12(r.ratio),
                    r.double_ratio.map(fmt_g12).unwrap_or_default()
                ));
            }
            a.text("prop46.csv", csv);
            a.json(
                "summary.json",
                &json!({"kind": "prop46", "lambda": t.lambda, "alpha": t.alpha, "trend_ok": t.trend_ok}),
            );
        }
    }
    Ok(a)
}

fn check(name: &str, pass: bool, value: f64, threshold: &str) -> Value {
    json!({"name": name, "pass": pass, "value": value, "threshold": threshold})
}

/// Pass/fail of the desk-scale acceptance rules for a convergence table.
pub fn convergence_checks(t: &ConvergenceTable) -> Vec<Value> {
    let mut out = Vec::new();
    match t.regime {
        Some(Regime::A) => {
            let probs: Vec<f64> = t.rows.iter().map(|r| r.exceed_prob).collect();
            let decreasing = probs.windows(2).all(|w| w[1] < w[0]);
            out.push(check("exceedance decreasing", decreasing, probs.last().copied().unwrap_or(f64::NAN), "strict"));
            let last = probs.last().copied().unwrap_or(f64::NAN);
            out.push(check("final exceedance", last <= 0.15, last, "<= 0.15"));
        }
        Some(Regime::B) => {
            if let Some(r) = t.rows.last() {
                let ks = r.ks_time.unwrap_or(f64::NAN);
                out.push(check("KS distance at top level", ks <= 0.1, ks, "<= 0.1"));
            }
        }
        None => {}
    }
    out
}

/// Pass/fail of the speed rule at the smallest resolvable `t`.
pub fn speed_checks(t: &SpeedTable) -> Vec<Value> {
    let band = match t.regime {
        Some(Regime::A) => (0.8, 1.2),
        Some(Regime::B) => (0.85, 1.15),
        None => return Vec::new(),
    };
    match t.smallest_resolvable.and_then(|s| t.row_at(s)) {
        Some(r) => vec![check(
            "median ratio at smallest resolvable t",
            r.median_ratio >= band.0 && r.median_ratio <= band.1,
            r.median_ratio,
            &format!("[{}, {}]", band.0, band.1),
        )],
        None => vec![check("resolvable t exists", false, f64::NAN, "some t")],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_fields_are_rejected_with_path() {
        let e = ExperimentConfig::from_json(r#"{"kind":"scale","model":{"sigma2":2,"mu":1,"bogus":1}}"#).unwrap_err();
        match e {
            Error::Config { path, .. } => assert_eq!(path, "model.bogus"),
            other => panic!("{other:?}"),
        }
        let e = ExperimentConfig::from_json(r#"{"kind":"nope","model":{"sigma2":2,"mu":1}}"#).unwrap_err();
        assert!(matches!(e, Error::Config { ref path, .. } if path == "kind"), "{e:?}");
    }

    #[test]
    fn exit_codes_are_stable() {
        assert_eq!(exit_code(&Error::config("a", "b")), 2);
        assert_eq!(exit_code(&Error::Domain("x".into())), 2);
        assert_eq!(exit_code(&Error::precondition("H1", "x")), 3);
        assert_eq!(exit_code(&Error::Numeric("x".into())), 4);
        assert_eq!(exit_code(&Error::Io("x".into())), 1);
    }

    #[test]
    fn kinds_parse_in_kebab_case() {
        for k in ["scale", "omega", "moments", "simulate", "verify-thm1", "verify-thm2", "classify", "prop46"] {
            let kind: Kind = serde_json::from_str(&format!("\"{k}\"")).unwrap();
            assert_eq!(kind.name(), k);
        }
    }
}
