//! Experiment runner behind the `qsc` binary.
//!
//! `qsc run` evaluates one experiment and writes a CSV or JSON table in which
//! every measured quantity sits next to its bound and slack. `qsc suite` runs a
//! preset list of checks and reports the worst slack of each.

pub mod instance;
pub mod suite;
pub mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::channels::CQEnsemble;
use crate::cqcover::{self, EstimateMode};
use crate::decouple::{self, DecoupleInstance};
use crate::entropic::audit::{audit_many, AUDIT_TOL};
use crate::entropic::LemmaId;
use crate::error::{Error, Result};
use crate::qcover;

pub use instance::InstanceSpec;
pub use suite::{suite, Preset, SuiteCheck, SuiteReport};
pub use table::{Cell, Table};

/// Negative slack tolerated before a row counts as a violation.
pub const SLACK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    AuditLemmas,
    CoverQuantum,
    CoverCq,
    CoverClassical,
    Decouple,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::AuditLemmas => "audit-lemmas",
            Mode::CoverQuantum => "cover-quantum",
            Mode::CoverCq => "cover-cq",
            Mode::CoverClassical => "cover-classical",
            Mode::Decouple => "decouple",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "qsc", version, about = "Relative-entropy soft covering and decoupling experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment.
    Run(RunArgs),
    /// Run a preset list of checks and report the worst slack of each.
    Suite(SuiteArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Instance as inline JSON or a path to a JSON file.
    #[arg(long)]
    pub instance: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub theta: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct SuiteArgs {
    #[arg(long, value_enum, default_value_t = Preset::Smoke)]
    pub preset: Preset,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// A check fails when its worst slack is below `-tolerance`.
    #[arg(long, default_value_t = SLACK_TOL, allow_negative_numbers = true)]
    pub tolerance: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// Config file layout; every field is optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub mode: Option<Mode>,
    /// Inline instance object or a path to one.
    pub instance: Option<Value>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub theta: Option<usize>,
    pub epsilon: Option<f64>,
    pub eta: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub instance: InstanceSpec,
    pub theta: usize,
    pub trials: usize,
    pub epsilon: f64,
    pub eta: f64,
    pub master_seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
}

fn config_error(source: &str, message: impl Into<String>) -> Error {
    Error::Config { source_name: source.to_string(), message: message.into() }
}

fn parse_instance(v: &Value, source: &str) -> Result<InstanceSpec> {
    match v {
        Value::String(s) => load_instance(s),
        other => serde_json::from_value(other.clone()).map_err(|e| config_error(source, format!("instance: {e}"))),
    }
}

fn load_instance(arg: &str) -> Result<InstanceSpec> {
    let (text, source) = if arg.trim_start().starts_with('{') {
        (arg.to_string(), "--instance".to_string())
    } else {
        (std::fs::read_to_string(arg).map_err(|e| config_error(arg, e.to_string()))?, arg.to_string())
    };
    serde_json::from_str(&text).map_err(|e| config_error(&source, e.to_string()))
}

impl ExperimentConfig {
    /// Merges the config file (if any) with command-line flags and validates the result.
    pub fn from_args(args: &RunArgs) -> Result<Self> {
        let (file, source) = match &args.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| config_error(&p.display().to_string(), e.to_string()))?;
                let f: ConfigFile =
                    serde_json::from_str(&text).map_err(|e| config_error(&p.display().to_string(), e.to_string()))?;
                (f, p.display().to_string())
            }
            None => (ConfigFile::default(), "command line".to_string()),
        };
        let mode = args
            .mode
            .or(file.mode)
            .ok_or_else(|| config_error(&source, "no mode given (use --mode or \"mode\")"))?;
        let instance = match (&args.instance, &file.instance) {
            (Some(s), _) => load_instance(s)?,
            (None, Some(v)) => parse_instance(v, &source)?,
            (None, None) => InstanceSpec::default(),
        };
        let default_trials = if mode == Mode::AuditLemmas { 100 } else { 200 };
        let cfg = ExperimentConfig {
            mode,
            instance,
            theta: args.theta.or(file.theta).unwrap_or(2),
            trials: args.trials.or(file.trials).unwrap_or(default_trials),
            epsilon: args.epsilon.or(file.epsilon).unwrap_or(0.01),
            eta: args.eta.or(file.eta).unwrap_or(0.01),
            master_seed: args.seed.or(file.seed).unwrap_or(0),
            out: args.out.clone().or(file.out),
            format: args.format.or(file.format).unwrap_or_default(),
        };
        cfg.validate(&source)?;
        Ok(cfg)
    }

    pub fn validate(&self, source: &str) -> Result<()> {
        let err = |m: String| Err(config_error(source, m));
        if self.theta == 0 {
            return err("theta must be at least 1".into());
        }
        let (eps_max, eta_max) = match self.mode {
            Mode::CoverQuantum => (1.0 / 8.0, 1.0 / 8.0),
            Mode::CoverCq | Mode::CoverClassical => (1.0 / 24.0, 1.0 / 24.0),
            Mode::Decouple => (1.0 / 16.0, 1.0),
            Mode::AuditLemmas => (f64::INFINITY, f64::INFINITY),
        };
        if !(self.epsilon >= 0.0 && self.epsilon < eps_max) {
            return err(format!("epsilon = {} outside [0, {eps_max})", self.epsilon));
        }
        if !(self.eta > 0.0 && self.eta < eta_max) {
            return err(format!("eta = {} outside (0, {eta_max})", self.eta));
        }
        let min_trials = if self.mode == Mode::AuditLemmas { 1 } else { 2 };
        if self.trials < min_trials {
            return err(format!("trials must be at least {min_trials}"));
        }
        if let Some(names) = &self.instance.lemmas {
            for n in names {
                n.parse::<LemmaId>().map_err(|e| config_error(source, e.to_string()))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub table: Table,
    /// Theorem terms and other instance-level values, JSON output only.
    pub extra: Value,
    pub violations: Vec<String>,
}

impl RunReport {
    pub fn render(&self) -> Result<String> {
        match self.config.format {
            Format::Csv => self.table.to_csv(),
            Format::Json => {
                let doc = json!({
                    "mode": self.config.mode.name(),
                    "seed": self.config.master_seed,
                    "theta": self.config.theta,
                    "trials": self.config.trials,
                    "epsilon": self.config.epsilon,
                    "eta": self.config.eta,
                    "rows": self.table.json_rows(),
                    "instance": self.extra,
                    "violations": self.violations,
                });
                let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))?;
                s.push('\n');
                Ok(s)
            }
        }
    }
}

fn check_slack(violations: &mut Vec<String>, what: String, slack: f64) {
    if !(slack >= -SLACK_TOL) {
        violations.push(format!("{what}: slack {slack:e}"));
    }
}

fn to_json<T: Serialize>(v: &Result<T>) -> Value {
    match v {
        Ok(x) => serde_json::to_value(x).unwrap_or(Value::Null),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    match config.mode {
        Mode::AuditLemmas => run_audit(config),
        Mode::CoverQuantum => run_quantum(config),
        Mode::CoverCq => run_cq(config),
        Mode::CoverClassical => run_classical(config),
        Mode::Decouple => run_decouple(config),
    }
}

fn run_audit(cfg: &ExperimentConfig) -> Result<RunReport> {
    let ids: Vec<LemmaId> = match &cfg.instance.lemmas {
        Some(names) => names.iter().map(|n| n.parse()).collect::<Result<_>>()?,
        None => LemmaId::ALL.to_vec(),
    };
    let mut table = Table::new(&["lemma_id", "instance", "lhs", "rhs", "slack", "seed"]);
    let mut violations = Vec::new();
    for id in ids {
        for (i, r) in audit_many(id, cfg.master_seed, cfg.trials)?.into_iter().enumerate() {
            if r.slack < AUDIT_TOL {
                violations.push(format!("{} instance seed {}: slack {:e}", id.name(), r.instance_seed, r.slack));
            }
            table.push(vec![id.name().into(), i.into(), r.lhs.into(), r.rhs.into(), r.slack.into(), r.instance_seed.into()]);
        }
    }
    Ok(RunReport { config: cfg.clone(), table, extra: Value::Null, violations })
}

fn run_quantum(cfg: &ExperimentConfig) -> Result<RunReport> {
    let id = cfg.instance.id_or("quantum");
    let (rho_a, channel) = cfg.instance.quantum()?;
    let inst = qcover::build_instance(&rho_a, &channel)?;
    let d = inst.dim_a();
    if d % cfg.theta != 0 {
        return Err(Error::Precondition(format!("Θ = {} must divide D = {d}", cfg.theta)));
    }
    let m = d / cfg.theta;
    let q2 = qcover::q2_target(&inst)?;
    let bound = qcover::covering_bound(q2, cfg.theta);
    let rows = qcover::mc_trials(&inst, cfg.theta, cfg.trials, cfg.master_seed)?;
    let mut table = Table::new(&["instance_id", "D", "theta", "M", "trial", "d_value", "q2_target", "bound", "seed", "slack"]);
    let mut violations = Vec::new();
    for r in &rows {
        if r.chain_gap > qcover::CHAIN_TOL {
            violations.push(format!("trial {} seed {}: chain identity gap {:e}", r.trial, r.seed, r.chain_gap));
        }
        table.push(vec![
            id.clone().into(),
            d.into(),
            cfg.theta.into(),
            m.into(),
            r.trial.into(),
            r.d_value.into(),
            q2.into(),
            bound.into(),
            r.seed.into(),
            (bound - r.d_value).into(),
        ]);
    }
    let est = crate::stats::McEstimate::from_samples(&rows.iter().map(|r| r.d_value).collect::<Vec<_>>());
    let slack = bound + 3.0 * est.stderr - est.mean;
    check_slack(&mut violations, format!("mean over {} trials", rows.len()), slack);
    table.push(vec![
        id.into(),
        d.into(),
        cfg.theta.into(),
        m.into(),
        "mean".into(),
        est.mean.into(),
        q2.into(),
        bound.into(),
        cfg.master_seed.into(),
        slack.into(),
    ]);
    let extra = json!({
        "stderr": est.stderr,
        "resamples": rows.iter().map(|r| r.resamples as u64).sum::<u64>(),
        "theorem": to_json(&qcover::theorem1_terms(&inst, cfg.epsilon, cfg.eta)),
    });
    Ok(RunReport { config: cfg.clone(), table, extra, violations })
}

const CQ_COLUMNS: [&str; 7] = ["ensemble_id", "theta", "mode", "E_D", "bound", "slack", "seed"];

fn run_cq(cfg: &ExperimentConfig) -> Result<RunReport> {
    let id = cfg.instance.id_or("ensemble");
    let ens: CQEnsemble = cfg.instance.ensemble()?;
    let q2 = cqcover::q2_cq(&ens)?;
    let bound = cqcover::covering_bound(q2, cfg.theta);
    let exact = match cfg.instance.estimate {
        instance::Estimate::Exact => Some(cqcover::exact_expectation(&ens, cfg.theta)?),
        instance::Estimate::Auto => match cqcover::exact_expectation(&ens, cfg.theta) {
            Ok(v) => Some(v),
            Err(Error::Resource(_)) => None,
            Err(e) => return Err(e),
        },
        instance::Estimate::Mc => None,
    };
    let (mode, value, slack, stderr) = match exact {
        Some(v) => (EstimateMode::Exact, v, bound - v, 0.0),
        None => {
            let e = cqcover::mc_expectation(&ens, cfg.theta, cfg.trials, cfg.master_seed)?;
            (EstimateMode::Mc, e.mean, bound + 3.0 * e.stderr - e.mean, e.stderr)
        }
    };
    let mut violations = Vec::new();
    check_slack(&mut violations, format!("{id} Θ = {}", cfg.theta), slack);
    let mut table = Table::new(&CQ_COLUMNS);
    table.push(vec![
        id.into(),
        cfg.theta.into(),
        mode.name().into(),
        value.into(),
        bound.into(),
        slack.into(),
        cfg.master_seed.into(),
    ]);
    let code = cqcover::sample_codebook(&ens, cfg.theta, cfg.master_seed)?;
    let extra = json!({
        "q2": q2,
        "stderr": stderr,
        "jensen_intermediate": to_json(&cqcover::jensen_intermediate(&ens, cfg.theta)),
        "theorem": to_json(&cqcover::theorem3_terms(&ens, cfg.epsilon, cfg.eta)),
        "converse": to_json(&cqcover::converse_certificate(&ens, &code)),
    });
    Ok(RunReport { config: cfg.clone(), table, extra, violations })
}

fn run_classical(cfg: &ExperimentConfig) -> Result<RunReport> {
    let id = cfg.instance.id_or("classical");
    let (w, q) = cfg.instance.classical()?;
    let b = cqcover::classical_bound(&w, &q, cfg.theta, cfg.trials, cfg.master_seed)?;
    let slack = b.d2_bound + 3.0 * b.stderr - b.expectation;
    let mut violations = Vec::new();
    check_slack(&mut violations, format!("{id} Θ = {}", cfg.theta), slack);
    let mut table = Table::new(&CQ_COLUMNS);
    table.push(vec![
        id.into(),
        cfg.theta.into(),
        b.mode.name().into(),
        b.expectation.into(),
        b.d2_bound.into(),
        slack.into(),
        cfg.master_seed.into(),
    ]);
    let extra = json!({ "stderr": b.stderr });
    Ok(RunReport { config: cfg.clone(), table, extra, violations })
}

fn run_decouple(cfg: &ExperimentConfig) -> Result<RunReport> {
    let id = cfg.instance.id_or("decouple");
    let (rho_ae, channel) = cfg.instance.decouple()?;
    let inst = DecoupleInstance::new(rho_ae, channel)?;
    let pb = decouple::q2_product_bound(&inst)?;
    let rows = decouple::mc_trials(&inst, cfg.trials, cfg.master_seed)?;
    let (d_a, d_b, d_e) = (inst.dim_a(), inst.dim_b(), inst.dim_e());
    let mut table = Table::new(&[
        "instance_id", "d_A", "d_B", "d_E", "trial", "d_value", "bound", "excluded_flag", "seed", "slack",
    ]);
    let mut violations = Vec::new();
    for r in &rows {
        if !r.pinsker_holds() {
            violations.push(format!("trial {} seed {}: Pinsker cross-check fails", r.trial, r.seed));
        }
        table.push(vec![
            id.clone().into(),
            d_a.into(),
            d_b.into(),
            d_e.into(),
            r.trial.into(),
            r.d_value.into(),
            pb.bound.into(),
            r.excluded.into(),
            r.seed.into(),
            (pb.bound - r.d_value).into(),
        ]);
    }
    let finite: Vec<f64> = rows.iter().filter(|r| !r.excluded).map(|r| r.d_value).collect();
    if finite.is_empty() {
        return Err(Error::Numerical("every trial failed the support condition".into()));
    }
    let excluded = rows.len() - finite.len();
    if excluded as f64 > decouple::MAX_EXCLUSION_RATE * rows.len() as f64 {
        violations.push(format!("{excluded} of {} trials excluded for support failure", rows.len()));
    }
    let est = crate::stats::McEstimate::from_samples(&finite);
    let se = if est.stderr.is_finite() { est.stderr } else { 0.0 };
    let slack = pb.bound + 3.0 * se - est.mean;
    check_slack(&mut violations, format!("mean over {} trials", finite.len()), slack);
    table.push(vec![
        id.into(),
        d_a.into(),
        d_b.into(),
        d_e.into(),
        "mean".into(),
        est.mean.into(),
        pb.bound.into(),
        (excluded > 0).into(),
        cfg.master_seed.into(),
        slack.into(),
    ]);
    let extra = json!({
        "stderr": est.stderr,
        "excluded": excluded,
        "q2_tau": pb.q2_tau,
        "q2_rho": pb.q2_rho,
        "theorem": to_json(&decouple::theorem5_terms(&inst, cfg.epsilon)),
    });
    Ok(RunReport { config: cfg.clone(), table, extra, violations })
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => Ok(std::fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Exit status: 0 on success, 1 on a bound violation, 2 on errors.
pub fn main_with(cli: Cli) -> ExitCode {
    let result = match cli.command {
        Command::Run(args) => ExperimentConfig::from_args(&args).and_then(|cfg| {
            let report = run(&cfg)?;
            write_output(&cfg.out, &report.render()?)?;
            for v in &report.violations {
                eprintln!("violation: {v}");
            }
            Ok(report.violations.is_empty())
        }),
        Command::Suite(args) => suite(args.preset, args.seed, args.tolerance).and_then(|report| {
            let text = match args.format.unwrap_or_default() {
                Format::Csv => report.table().to_csv()?,
                Format::Json => {
                    let mut s = serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.to_string()))?;
                    s.push('\n');
                    s
                }
            };
            write_output(&args.out, &text)?;
            for c in report.checks.iter().filter(|c| !c.passed) {
                match &c.error {
                    Some(e) => eprintln!("FAIL {}: {e}", c.name),
                    None => eprintln!("FAIL {} (worst slack {:e}, seed {})", c.name, c.worst_slack, c.worst_seed),
                }
            }
            Ok(report.passed())
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
