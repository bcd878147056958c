//! Command-line front end.
//!
//! Exit codes: 0 ok, 2 invalid arguments or inputs, 3 I/O failure, 4 the
//! exhaustive search guard was exceeded.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generator::{gen_instance, gen_scenario, GenError, GenParams, SizePreset};
use crate::io::{
    self, app_manifests, content_hash, InstanceDoc, IoError, ReportDoc, RunDoc, ScenarioDoc,
    SolutionDoc,
};
use crate::metrics::{
    compare_runs, emit_plot_series, quantile_sorted, MetricsError, RunComparison,
};
use crate::model::{validate_instance, AppId, Instance};
use crate::simulator::{
    run_scenario_with, write_tick_table, MetricsLog, Policy, Proportional, SimConfig, SimError,
};
use crate::solver::{SelectorRegistry, Solution, SolveError};

pub const EXIT_INVALID: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_GUARD: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Guard(SolveError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Io(_) => EXIT_IO,
            CliError::Guard(_) => EXIT_GUARD,
        }
    }
}

impl From<GenError> for CliError {
    fn from(e: GenError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::SearchSpaceTooLarge { .. } => CliError::Guard(e),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Solve(s) => s.into(),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "sdv-orchestra",
    version,
    about = "AXIL-driven mode selection for in-vehicle services"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an instance, a request scenario and per-app manifests.
    Generate(GenerateArgs),
    /// Select modes for one request.
    Solve(SolveArgs),
    /// Replay a scenario under one policy.
    Simulate(SimulateArgs),
    /// Time the greedy selector across size presets.
    Bench(BenchArgs),
    /// Compare baseline and optimized runs.
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Table,
    Doc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Baseline,
    Optimized,
}

#[derive(Debug, Args)]
pub struct InstanceArgs {
    #[arg(long, value_parser = parse_preset)]
    pub preset: Option<SizePreset>,
    /// Overrides the preset's application count.
    #[arg(long)]
    pub apps: Option<usize>,
    /// Overrides the preset's maximum number of modes.
    #[arg(long)]
    pub modes: Option<u32>,
    /// Overrides the preset's dependency density.
    #[arg(long)]
    pub density: Option<f64>,
    /// CPU share reserved on every ECU for safety-critical work, in percent.
    #[arg(long = "sc-cpu", default_value_t = 0.0)]
    pub sc_cpu: f64,
}

impl InstanceArgs {
    pub fn params(&self, seed: u64) -> Result<GenParams, CliError> {
        let mut p = GenParams::from_preset(self.preset.unwrap_or(SizePreset::M), seed);
        if let Some(n) = self.apps {
            p.n_apps = n;
        }
        if let Some(m) = self.modes {
            p.m_max = m;
        }
        if let Some(d) = self.density {
            p.density = d;
        }
        p.sc_cpu_reserved_pct = self.sc_cpu;
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, default_value_t = 6)]
    pub states: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Comma-separated application ids (may be empty); defaults to every
    /// application.
    #[arg(long, conflicts_with = "state")]
    pub request: Option<String>,
    /// Take the request from this state of `--scenario`.
    #[arg(long, requires = "scenario")]
    pub state: Option<usize>,
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, default_value = "greedy")]
    pub solver: String,
    /// Use the exhaustive oracle (same as `--solver exact`).
    #[arg(long)]
    pub exact: bool,
    /// Scale the instance capacity uniformly, in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub capacity_scale: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long, default_value_t = 1.0)]
    pub tick: f64,
    #[arg(long, default_value = "greedy")]
    pub solver: String,
}

impl SimArgs {
    fn config(&self, seed: u64) -> SimConfig {
        SimConfig {
            tick_s: self.tick,
            seed,
            ..SimConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, value_enum)]
    pub policy: PolicyArg,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', value_parser = parse_preset, default_value = "XS,S,M,L,XL")]
    pub presets: Vec<SizePreset>,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    /// First seed; repeat `i` uses `seed + i`.
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Run document of a baseline simulation.
    #[arg(long, requires = "optimized", conflicts_with = "seed")]
    pub baseline: Option<PathBuf>,
    /// Run document of an optimized simulation.
    #[arg(long, requires = "baseline")]
    pub optimized: Option<PathBuf>,
    /// Generate the instance and scenario in place instead.
    #[arg(long, required_unless_present = "baseline")]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, default_value_t = 6)]
    pub states: usize,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub format: OutputFormat,
}

fn parse_preset(s: &str) -> Result<SizePreset, String> {
    s.parse().map_err(|e: GenError| e.to_string())
}

/// Parses `args` (including the program name), runs the command and returns
/// the text meant for stdout.
pub fn run<I, T>(args: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Invalid(e.to_string()))?;
    execute(cli.command)
}

pub fn execute(command: Command) -> Result<String, CliError> {
    match command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Report(a) => cmd_report(&a),
    }
}

/// Entry point for the binary: prints output or the error and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn generate(params: &GenParams, n_states: usize) -> Result<(InstanceDoc, ScenarioDoc), CliError> {
    let instance = gen_instance(params)?;
    let report = validate_instance(&instance);
    if !report.is_ok() {
        return Err(CliError::Invalid(format!(
            "generated instance is invalid: {report:?}"
        )));
    }
    let scenario = gen_scenario(&instance, n_states, params.seed)?;
    let doc = InstanceDoc::new(instance, Some(params.clone()), params.seed);
    let sdoc = ScenarioDoc::new(scenario, &doc.instance, doc.provenance.config_hash.clone());
    Ok((doc, sdoc))
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<String, CliError> {
    let params = a.instance.params(a.seed)?;
    let (doc, sdoc) = generate(&params, a.states)?;
    io::write_json(&a.out.join("instance.json"), &doc)?;
    io::write_json(&a.out.join("scenario.json"), &sdoc)?;
    for m in app_manifests(&doc.instance, &doc.provenance) {
        io::write_json(
            &a.out
                .join("manifests")
                .join(format!("app_{:03}.json", m.app.0)),
            &m,
        )?;
    }
    let inst = &doc.instance;
    Ok(match a.format {
        OutputFormat::Table => format!(
            "generated {} apps, {} modes, {} dependency edges, {} flows, {} states (seed {}, config {}) in {}\n",
            inst.n_apps(),
            inst.apps.iter().map(|x| x.modes.len()).sum::<usize>(),
            inst.app_edges().len(),
            inst.flows().len(),
            sdoc.scenario.states.len(),
            a.seed,
            doc.provenance.config_hash,
            a.out.display()
        ),
        OutputFormat::Doc => io::to_json(&doc.provenance),
    })
}

pub fn cmd_solve(a: &SolveArgs) -> Result<String, CliError> {
    let doc = io::read_instance(&a.instance)?;
    let inst = &doc.instance;
    let requested: Vec<AppId> = match (&a.request, a.state) {
        (Some(ids), _) => parse_request(ids)?,
        (None, Some(k)) => {
            let sdoc = io::read_scenario(a.scenario.as_deref().expect("clap requires --scenario"))?;
            check_pairing(&sdoc, inst)?;
            sdoc.scenario
                .states
                .get(k)
                .ok_or_else(|| CliError::Invalid(format!("scenario has no state {k}")))?
                .requested
                .clone()
        }
        (None, None) => inst.app_ids().collect(),
    };
    if !(a.capacity_scale > 0.0 && a.capacity_scale <= 1.0) {
        return Err(CliError::Invalid(format!(
            "--capacity-scale must be in (0, 1], got {}",
            a.capacity_scale
        )));
    }
    let capacity = inst.capacity.scaled(a.capacity_scale);
    let registry = SelectorRegistry::with_builtins();
    let name = if a.exact { "exact" } else { a.solver.as_str() };
    let solution = registry.get(name)?.select(inst, &requested, &capacity)?;
    let sdoc = SolutionDoc::new(&solution, inst, &capacity, doc.provenance.seed);
    if let Some(out) = &a.out {
        io::write_json(out, &sdoc)?;
    }
    Ok(match a.format {
        OutputFormat::Table => solution_table(&solution),
        OutputFormat::Doc => io::to_json(&sdoc),
    })
}

fn parse_request(s: &str) -> Result<Vec<AppId>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map(AppId)
                .map_err(|_| CliError::Invalid(format!("bad application id '{t}' in --request")))
        })
        .collect()
}

fn check_pairing(sdoc: &ScenarioDoc, inst: &Instance) -> Result<(), CliError> {
    let hash = content_hash(inst);
    if sdoc.instance_hash != hash {
        return Err(CliError::Invalid(format!(
            "scenario was generated for instance {}, not {hash}",
            sdoc.instance_hash
        )));
    }
    Ok(())
}

fn solution_table(s: &Solution) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "selector     {}", s.selector);
    let _ = writeln!(out, "requested    {} apps", s.requested.len());
    let _ = writeln!(out, "active       {} apps", s.assignment.n_active());
    let _ = writeln!(out, "total AXIL   {}", s.total_axil);
    let _ = writeln!(out, "iterations   {}", s.iterations);
    let _ = writeln!(
        out,
        "solve time   {:.3} ms",
        s.solve_time.as_secs_f64() * 1e3
    );
    let _ = writeln!(out, "app  level");
    for app in &s.requested {
        let level = s
            .assignment
            .level(*app)
            .map_or("off".to_string(), |l| l.to_string());
        let _ = writeln!(out, "{:>3}  {level}", app.0);
    }
    out
}

fn policy_for(p: PolicyArg, solver: &str) -> Policy {
    match p {
        PolicyArg::Baseline => Policy::Baseline,
        PolicyArg::Optimized => Policy::Optimized {
            selector: solver.to_string(),
        },
    }
}

fn simulate(
    inst: &Instance,
    sdoc: &ScenarioDoc,
    policy: &Policy,
    cfg: &SimConfig,
) -> Result<MetricsLog, CliError> {
    let registry = SelectorRegistry::with_builtins();
    Ok(run_scenario_with(
        inst,
        &sdoc.scenario,
        policy,
        cfg,
        &registry,
        &Proportional,
    )?)
}

fn write_run(out: &Path, log: &MetricsLog) -> Result<PathBuf, CliError> {
    let label = log.meta.policy.label();
    let path = out.join(format!("run_{label}.json"));
    io::write_json(&path, &RunDoc::new(log.clone()))?;
    let mut buf = Vec::new();
    write_tick_table(log, &mut buf).map_err(|e| CliError::Invalid(e.to_string()))?;
    io::write_text(
        &out.join(format!("ticks_{label}.csv")),
        std::str::from_utf8(&buf).expect("csv output is UTF-8"),
    )?;
    Ok(path)
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<String, CliError> {
    let doc = io::read_instance(&a.instance)?;
    let sdoc = io::read_scenario(&a.scenario)?;
    check_pairing(&sdoc, &doc.instance)?;
    let policy = policy_for(a.policy, &a.sim.solver);
    let log = simulate(
        &doc.instance,
        &sdoc,
        &policy,
        &a.sim.config(sdoc.scenario.seed),
    )?;
    let path = write_run(&a.out, &log)?;
    let summary = crate::metrics::summarize_run(&log);
    Ok(match a.format {
        OutputFormat::Table => {
            let q = summary.health.quartiles;
            format!(
                "{policy}: {} ticks, health median {} (q1 {}, q3 {}), {} missing samples, {} saturated ticks, transition {:.3} s -> {}\n",
                log.ticks.len(),
                pct(q.map(|q| q.median)),
                pct(q.map(|q| q.q1)),
                pct(q.map(|q| q.q3)),
                summary.health.n_missing,
                summary.usage.saturated_ticks,
                summary.timing.transition_time_s,
                path.display()
            )
        }
        OutputFormat::Doc => io::to_json(&summary),
    })
}

fn pct(v: Option<f64>) -> String {
    v.map_or("n/a".to_string(), |x| format!("{x:.2}%"))
}

pub fn cmd_report(a: &ReportArgs) -> Result<String, CliError> {
    let (baseline, optimized) = match (&a.baseline, &a.optimized, a.seed) {
        (Some(b), Some(o), _) => (io::read_run(b)?.log, io::read_run(o)?.log),
        (_, _, Some(seed)) => {
            let params = a.instance.params(seed)?;
            let (doc, sdoc) = generate(&params, a.states)?;
            let cfg = a.sim.config(seed);
            let b = simulate(&doc.instance, &sdoc, &Policy::Baseline, &cfg)?;
            let o = simulate(
                &doc.instance,
                &sdoc,
                &policy_for(PolicyArg::Optimized, &a.sim.solver),
                &cfg,
            )?;
            io::write_json(&a.out.join("instance.json"), &doc)?;
            io::write_json(&a.out.join("scenario.json"), &sdoc)?;
            write_run(&a.out, &b)?;
            write_run(&a.out, &o)?;
            (b, o)
        }
        _ => {
            return Err(CliError::Invalid(
                "report needs --seed or --baseline and --optimized".into(),
            ))
        }
    };
    if !matches!(baseline.meta.policy, Policy::Baseline)
        || matches!(optimized.meta.policy, Policy::Baseline)
    {
        return Err(CliError::Invalid(
            "expected one baseline and one optimized run".into(),
        ));
    }
    let comparison = compare_runs(&baseline, &optimized)?;
    let doc = ReportDoc::new(comparison, &baseline, &optimized);
    io::write_json(&a.out.join("report.json"), &doc)?;
    for (name, text) in emit_plot_series(&[&baseline, &optimized]).files() {
        io::write_text(&a.out.join("series").join(name), text)?;
    }
    Ok(match a.format {
        OutputFormat::Table => comparison_table(&doc.comparison),
        OutputFormat::Doc => io::to_json(&doc),
    })
}

pub fn comparison_table(c: &RunComparison) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "instance {}  scenario {}  seed {}",
        c.instance_hash, c.scenario_hash, c.scenario_seed
    );
    let _ = writeln!(out, "{:<24}{:>12}{:>12}", "", "baseline", "optimized");
    let row = |out: &mut String, name: &str, b: String, o: String| {
        let _ = writeln!(out, "{name:<24}{b:>12}{o:>12}");
    };
    let (b, o) = (&c.baseline, &c.optimized);
    let q = |s: &crate::metrics::RunSummary, f: fn(&crate::metrics::Quartiles) -> f64| {
        pct(s.health.quartiles.as_ref().map(f))
    };
    row(&mut out, "health q1", q(b, |q| q.q1), q(o, |q| q.q1));
    row(
        &mut out,
        "health median",
        q(b, |q| q.median),
        q(o, |q| q.median),
    );
    row(&mut out, "health q3", q(b, |q| q.q3), q(o, |q| q.q3));
    row(
        &mut out,
        "missing samples",
        b.health.n_missing.to_string(),
        o.health.n_missing.to_string(),
    );
    row(
        &mut out,
        "saturated ticks",
        b.usage.saturated_ticks.to_string(),
        o.usage.saturated_ticks.to_string(),
    );
    row(
        &mut out,
        "overloaded ticks",
        b.usage.overloaded_ticks.to_string(),
        o.usage.overloaded_ticks.to_string(),
    );
    row(
        &mut out,
        "peak cpu demand",
        format!("{:.1}%", b.usage.peak_cpu_demand_pct),
        format!("{:.1}%", o.usage.peak_cpu_demand_pct),
    );
    row(
        &mut out,
        "container starts",
        b.container_starts.to_string(),
        o.container_starts.to_string(),
    );
    row(
        &mut out,
        "container stops",
        b.container_stops.to_string(),
        o.container_stops.to_string(),
    );
    row(
        &mut out,
        "transition time",
        format!("{:.3} s", b.timing.transition_time_s),
        format!("{:.3} s", o.timing.transition_time_s),
    );
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub preset: String,
    pub n_apps: usize,
    pub m_max: u32,
    pub density: f64,
    pub repeats: usize,
    pub mean_total_axil: f64,
    pub timing_min_ms: f64,
    pub timing_median_ms: f64,
    pub timing_max_ms: f64,
}

/// Greedy solve over every application at full capacity, one cell per
/// (preset, seed). Cells run one after the other so timings do not compete.
pub fn bench(presets: &[SizePreset], repeats: usize, seed: u64) -> Result<Vec<BenchRow>, CliError> {
    if repeats == 0 {
        return Err(CliError::Invalid("--repeats must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity(presets.len());
    for preset in presets {
        let (n_apps, m_max, density) = preset.shape();
        let mut times = Vec::with_capacity(repeats);
        let mut axil = 0.0;
        for i in 0..repeats {
            let inst = gen_instance(&GenParams::from_preset(
                *preset,
                seed.wrapping_add(i as u64),
            ))?;
            let all: Vec<AppId> = inst.app_ids().collect();
            let sol = crate::solver::solve_greedy(&inst, &all, &inst.capacity)?;
            times.push(ms(sol.solve_time));
            axil += sol.total_axil;
        }
        times.sort_by(f64::total_cmp);
        rows.push(BenchRow {
            preset: preset.to_string(),
            n_apps,
            m_max,
            density,
            repeats,
            mean_total_axil: axil / repeats as f64,
            timing_min_ms: times[0],
            timing_median_ms: quantile_sorted(&times, 0.5).expect("non-empty"),
            timing_max_ms: times[repeats - 1],
        });
    }
    Ok(rows)
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

pub fn cmd_bench(a: &BenchArgs) -> Result<String, CliError> {
    let rows = bench(&a.presets, a.repeats, a.seed)?;
    let mut table = String::new();
    let _ = writeln!(
        table,
        "{:<6}{:>6}{:>7}{:>9}{:>12}{:>12}{:>12}{:>12}",
        "size", "apps", "modes", "density", "min ms", "median ms", "max ms", "mean AXIL"
    );
    for r in &rows {
        let _ = writeln!(
            table,
            "{:<6}{:>6}{:>7}{:>8.0}%{:>12.3}{:>12.3}{:>12.3}{:>12.2}",
            r.preset,
            r.n_apps,
            r.m_max,
            r.density * 100.0,
            r.timing_min_ms,
            r.timing_median_ms,
            r.timing_max_ms,
            r.mean_total_axil
        );
    }
    if let Some(out) = &a.out {
        io::write_json(out, &rows)?;
    }
    Ok(match a.format {
        OutputFormat::Table => table,
        OutputFormat::Doc => io::to_json(&rows),
    })
}
