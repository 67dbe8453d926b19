//! Commands behind the `worldplan` binary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use worldplan_core::domain::DomainError;
use worldplan_core::pipeline::{self, PipelineError, Prepared};
use worldplan_core::scenario::{self, Measurement, ScenarioError, Timing};
use worldplan_core::worlds::pstate_interval;
use worldplan_core::{fixtures, load_domain, superplan, DomainSpec, LinearPlan, PlanError};

#[derive(Debug, Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Planning(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Validation(_) => 1,
            Failure::Planning(_) => 2,
            Failure::Io { .. } => 3,
        }
    }
}

impl From<PlanError> for Failure {
    fn from(e: PlanError) -> Self {
        Failure::Planning(e.to_string())
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Worlds(w) => Failure::Validation(w.to_string()),
            PipelineError::Plan(p) => p.into(),
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        Failure::Usage(format!("cannot generate scenario: {e}"))
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|source| Failure::Io { path: path.to_path_buf(), source })
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|source| Failure::Io { path: path.to_path_buf(), source })
}

/// Loads a domain file, reporting problems as `file:line: message`.
pub fn load(path: &Path) -> Result<DomainSpec, Failure> {
    let text = read(path)?;
    load_domain(&text).map_err(|e| {
        let shown = path.display();
        let lines: Vec<String> = match e {
            DomainError::Invalid(issues) => issues
                .iter()
                .map(|i| match i.line {
                    Some(l) => format!("{shown}:{l}: {}", i.message),
                    None => format!("{shown}: {}", i.message),
                })
                .collect(),
            DomainError::Syntax { line: Some(l), message } => vec![format!("{shown}:{l}: {message}")],
            other => vec![format!("{shown}: {other}")],
        };
        Failure::Validation(lines.join("\n"))
    })
}

pub fn cmd_validate(path: &Path) -> Result<String, Failure> {
    let d = load(path)?;
    Ok(format!(
        "{}: ok ({} levels, {} frames, {} operators, {} knowledge-acquisition operators)\n",
        d.name,
        d.n_levels(),
        d.frames.len(),
        d.operators.len(),
        d.ka_operators.len()
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// reuse plans across worlds and merge them into a super-plan
    Uplan,
    /// one independent plan per world
    Cplan,
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    /// domain file (TOML)
    pub domain: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Uplan)]
    pub mode: Mode,
    /// skip the incompatibility screen (same plans, more reapplication)
    #[arg(long)]
    pub no_heuristic: bool,
    /// write planner events as TSV here
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// write the result here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// replace the domain's evidence with a synthetic scenario of this many worlds
    #[arg(long)]
    pub pstates: Option<usize>,
    /// how much synthetic worlds share abstract descriptions, 0 to 1
    #[arg(long, default_value_t = 0.5)]
    pub overlap: f64,
    /// seed for synthetic evidence; planning itself is deterministic
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub struct PlanReport {
    pub text: String,
    pub failures: usize,
}

fn write_plan(out: &mut String, plan: &LinearPlan, prepared: &Prepared) {
    let mass = superplan::plan_mass(plan, &prepared.worlds.joint);
    let _ = writeln!(out, "plan {} from {} (mass {mass:.4})", plan.name(), plan.source_pstate);
    let _ = writeln!(out, "  works for {}", plan.works_for.join(", "));
    for (i, key) in plan.step_keys().iter().enumerate() {
        let _ = writeln!(out, "  {:>3} {key}", i + 1);
    }
}

/// Plans for every world of the domain (or of a synthetic scenario).
///
/// The text holds no timings, so equal inputs give equal bytes. Worlds that
/// cannot be planned for are listed in the text and counted in `failures`.
pub fn cmd_plan(args: &PlanArgs) -> Result<PlanReport, Failure> {
    let domain = load(&args.domain)?;
    let evidence = match args.pstates {
        Some(n) => scenario::synthesize(&domain, n, args.overlap, args.seed)?.evidence,
        None => domain.evidence.clone(),
    };
    let prepared = pipeline::prepare(&domain, &evidence).map_err(|e| Failure::Validation(e.to_string()))?;
    let mut out = String::new();
    let mut trace = String::new();
    let failures = match args.mode {
        Mode::Uplan => {
            let report = pipeline::uplan(&prepared, &domain, !args.no_heuristic)?;
            let run = &report.run;
            let _ = writeln!(
                out,
                "# {} uplan: {} worlds, {} plans, {} failed",
                domain.name,
                prepared.order.len(),
                run.plans.len(),
                run.failures.len()
            );
            for plan in &run.plans {
                write_plan(&mut out, plan, &prepared);
            }
            for f in &run.failures {
                let _ = writeln!(out, "failed: {f}");
            }
            out.push_str(&superplan::render(&report.superplan));
            for h in &run.hierarchies {
                trace.push_str(&h.trace_tsv());
            }
            run.failures.len()
        }
        Mode::Cplan => {
            let report = pipeline::cplan(&prepared, &domain, true)?;
            let planned = report.entries.iter().filter(|e| e.plan.is_ok()).count();
            let failed = report.entries.len() - planned;
            let _ = writeln!(out, "# {} cplan: {} worlds, {planned} plans, {failed} failed", domain.name, prepared.order.len());
            for (entry, ps) in report.entries.iter().zip(&prepared.order) {
                if let Some(iv) = pstate_interval(&prepared.tree, ps) {
                    let _ = writeln!(out, "world {} [{:.4}, {:.4}]", entry.pstate, iv.support, iv.plausibility);
                }
                match &entry.plan {
                    Ok(plan) => write_plan(&mut out, plan, &prepared),
                    Err(f) => {
                        let _ = writeln!(out, "failed: {f}");
                    }
                }
                trace.push_str(&entry.hierarchy.trace_tsv());
            }
            failed
        }
    };
    if let Some(path) = &args.trace {
        write(path, &trace)?;
    }
    if let Some(path) = &args.out {
        write(path, &out)?;
    }
    Ok(PlanReport { text: out, failures })
}

/// One benchmark row; the CSV columns follow the field order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub pstate_count: u64,
    pub uplan_plans: u64,
    pub cplan_plans: u64,
    pub uplan_time_ms: u64,
    pub uplan_heuristic_time_ms: u64,
    pub cplan_time_ms: u64,
}

fn millis(d: std::time::Duration) -> u64 {
    (d.as_secs_f64() * 1000.0).round() as u64
}

impl From<&Measurement> for BenchmarkRow {
    fn from(m: &Measurement) -> Self {
        BenchmarkRow {
            pstate_count: m.pstate_count as u64,
            uplan_plans: m.uplan_plans as u64,
            cplan_plans: m.cplan_plans as u64,
            uplan_time_ms: millis(m.uplan_cpu),
            uplan_heuristic_time_ms: millis(m.uplan_heuristic_cpu),
            cplan_time_ms: millis(m.cplan_cpu),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TimingMode {
    /// CPU time of the planning phase
    Cpu,
    /// write zeros in the time columns
    Off,
}

fn parse_overlap(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(format!("{x} is outside [0, 1]"))
    }
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// world counts, one row each
    #[arg(long, value_delimiter = ',', default_values_t = [2, 4, 6, 8, 10, 12])]
    pub counts: Vec<usize>,
    /// how much worlds share abstract descriptions, 0 to 1
    #[arg(long, default_value_t = 0.5, value_parser = parse_overlap)]
    pub overlap: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// write CSV here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// use the combination-lock domain, where no plan works for two worlds
    #[arg(long, conflicts_with = "domain")]
    pub worst_case: bool,
    /// domain to benchmark; defaults to the bundled air-combat domain
    #[arg(long)]
    pub domain: Option<PathBuf>,
    /// runs per configuration; the fastest is reported
    #[arg(long, default_value_t = 5)]
    pub repetitions: usize,
    #[arg(long, value_enum, default_value_t = TimingMode::Cpu)]
    pub timing: TimingMode,
}

impl Default for BenchArgs {
    fn default() -> Self {
        BenchArgs {
            counts: vec![2, 4, 6, 8, 10, 12],
            overlap: 0.5,
            seed: 0,
            out: None,
            worst_case: false,
            domain: None,
            repetitions: 5,
            timing: TimingMode::Cpu,
        }
    }
}

/// Runs every configuration on one synthetic scenario per count.
pub fn run_bench(args: &BenchArgs) -> Result<Vec<Measurement>, Failure> {
    let domain = match (&args.domain, args.worst_case) {
        (Some(path), _) => load(path)?,
        (None, true) => load_domain(fixtures::WORST_CASE).map_err(|e| Failure::Validation(e.to_string()))?,
        (None, false) => load_domain(fixtures::AIR_COMBAT).map_err(|e| Failure::Validation(e.to_string()))?,
    };
    if args.counts.is_empty() {
        return Err(Failure::Usage("no world counts given".into()));
    }
    let timing = match args.timing {
        TimingMode::Cpu => Timing::Cpu { repetitions: args.repetitions },
        TimingMode::Off => Timing::Off,
    };
    args.counts
        .iter()
        .map(|&count| {
            let s = scenario::synthesize(&domain, count, args.overlap, args.seed)?;
            Ok(scenario::measure(&domain, &s, timing)?)
        })
        .collect()
}

pub fn to_csv(rows: &[BenchmarkRow]) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| Failure::Planning(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Planning(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::Planning(e.to_string()))
}

pub fn from_csv(text: &str) -> Result<Vec<BenchmarkRow>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().collect()
}

/// Benchmark CSV (header line plus one row per count), also written to `--out`.
pub fn cmd_bench(args: &BenchArgs) -> Result<String, Failure> {
    let rows: Vec<BenchmarkRow> = run_bench(args)?.iter().map(BenchmarkRow::from).collect();
    let text = to_csv(&rows)?;
    if let Some(path) = &args.out {
        write(path, &text)?;
    }
    Ok(text)
}
