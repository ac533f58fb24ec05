//! Command-line front end.
//!
//! Exit codes: 0 success, 2 invalid input (config, flags, model), 3 numerical
//! failure (tail divergence, step underflow, quadrature), 1 I/O errors.
//! Diagnostics go to stderr.

pub mod config;
pub mod verify;

/// `println!` that ignores a closed stdout.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analytics::{generator_apply, generator_truncated, FamilySpec, GeneratorError, TestFunction};
use crate::classify::classify_regime;
use crate::lyapunov::{
    explosion_prob_lower_bound, replay_certificate, scan_explosion_criterion_with, scan_nonexplosion_criterion_on,
    GridSpec, ScanError,
};
use crate::model::ValidationError;
use crate::montecarlo::{phase_diagram, wilson_interval, Axis, MCResult, SweepParam, CSV_SCHEMA_HEADER, WILSON_Z};
use crate::simulate::{simulate_indexed, PathIndex, PathRecord, SimError};
use config::{ConfigError, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "cble-lab", version, about = "Branching processes with competition in a Lévy environment")]
pub struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the regime verdict for the configured model.
    Classify(ConfigArg),
    /// Tabulate L g(y) for a test function.
    Generator(GeneratorArgs),
    /// Foster-Lyapunov scans.
    #[command(subcommand)]
    Lyapunov(LyapunovCommand),
    /// Simulate paths and write them with a summary.
    Simulate(SimulateArgs),
    /// Classify and simulate every cell of a parameter grid.
    Phase(PhaseArgs),
    /// Run the built-in identity and generator checks.
    VerifyIdentities,
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct GeneratorArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// exp-inverse-power, log-log, linear, constant or shifted-inverse.
    #[arg(long)]
    pub family: String,
    /// Comma separated `name=value` pairs, e.g. `delta=0.1` or `n=9`.
    #[arg(long, default_value = "")]
    pub params: String,
    /// `lo:hi:count` for a geometric grid, or a comma separated list.
    #[arg(long)]
    pub y_grid: String,
    /// Drop environment jumps above this level.
    #[arg(long)]
    pub truncate: Option<f64>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum LyapunovCommand {
    ScanExplosion(ScanExplosionArgs),
    ScanNonexplosion(ScanNonexplosionArgs),
}

#[derive(Debug, Args)]
pub struct ScanExplosionArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Comma separated delta values; overrides `lyapunov.deltas`.
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    #[arg(long)]
    pub y_max: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanNonexplosionArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub y_max: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub paths: Option<usize>,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub truncate: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PhaseArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// `param=v1,v2,...`; overrides `phase.axis1`.
    #[arg(long)]
    pub axis1: Option<String>,
    #[arg(long)]
    pub axis2: Option<String>,
    #[arg(long)]
    pub n_per_cell: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure with its exit code.
#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Invalid(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(s) => write!(f, "invalid input: {s}"),
            CliError::Numerical(s) => write!(f, "numerical failure: {s}"),
            CliError::Io(s) => write!(f, "i/o error: {s}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io(s) => CliError::Io(s),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<ValidationError> for CliError {
    fn from(e: ValidationError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<GeneratorError> for CliError {
    fn from(e: GeneratorError) -> Self {
        match e {
            GeneratorError::Domain(_) | GeneratorError::Truncation(_) => CliError::Invalid(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Invalid(v) => v.into(),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<ScanError> for CliError {
    fn from(e: ScanError) -> Self {
        match e {
            ScanError::Generator(g) => g.into(),
            ScanError::NotFound(s) => CliError::Numerical(s),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            use std::io::Write as _;
            let _ = std::io::stdout().write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if cli.threads > 0 {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("cble-lab: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Classify(a) => classify_cmd(&a),
        Command::Generator(a) => generator_cmd(&a),
        Command::Lyapunov(LyapunovCommand::ScanExplosion(a)) => scan_explosion_cmd(&a),
        Command::Lyapunov(LyapunovCommand::ScanNonexplosion(a)) => scan_nonexplosion_cmd(&a),
        Command::Simulate(a) => simulate_cmd(&a),
        Command::Phase(a) => phase_cmd(&a),
        Command::VerifyIdentities => verify_cmd(),
    }
}

fn classify_cmd(a: &ConfigArg) -> Result<(), CliError> {
    let cfg = RunConfig::load(&a.config)?;
    let v = classify_regime(&cfg.model).map_err(|e| CliError::Invalid(e.to_string()))?;
    say!("{v}");
    say!("clause: {}", v.clause.tag());
    if let Some(b) = v.boundary {
        say!("boundary a_bar*c(alpha,0): {b}");
    }
    for note in &v.assumptions_used {
        say!("assumption: {note}");
    }
    Ok(())
}

/// Builds a family from its name and `name=value` pairs.
pub fn parse_family(name: &str, params: &str) -> Result<FamilySpec, CliError> {
    let mut obj = serde_json::Map::new();
    obj.insert("family".into(), json!(name));
    for pair in params.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Invalid(format!("--params: expected name=value, got `{pair}`")))?;
        let num: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::Invalid(format!("--params: `{k}` is not a number")))?;
        let value = if num.fract() == 0.0 && num.abs() < 1e15 { json!(num as i64) } else { json!(num) };
        obj.insert(k.trim().into(), value);
    }
    serde_json::from_value(serde_json::Value::Object(obj))
        .map_err(|e| CliError::Invalid(format!("--family/--params: {e}")))
}

/// `lo:hi:count` (geometric) or a comma separated list.
pub fn parse_y_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Invalid(format!("--y-grid: cannot parse `{spec}`"));
    let ys: Vec<f64> = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].parse().map_err(|_| bad())?;
        let n: usize = parts[2].parse().map_err(|_| bad())?;
        if !(lo > 0.0 && hi >= lo && n >= 1) {
            return Err(bad());
        }
        if n == 1 {
            vec![lo]
        } else {
            let r = (hi / lo).ln() / (n - 1) as f64;
            (0..n).map(|i| if i == n - 1 { hi } else { lo * (r * i as f64).exp() }).collect()
        }
    } else {
        spec.split(',').map(|s| s.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    if ys.is_empty() || ys.iter().any(|&y| !(y > 0.0 && y.is_finite())) {
        return Err(CliError::Invalid("--y-grid: points must be positive".into()));
    }
    Ok(ys)
}

fn generator_cmd(a: &GeneratorArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(&a.config)?;
    let family = parse_family(&a.family, &a.params)?;
    let g = TestFunction::from_spec(&family).map_err(|e| CliError::Invalid(e.to_string()))?;
    let ys = parse_y_grid(&a.y_grid)?;
    let values = ys
        .par_iter()
        .map(|&y| match a.truncate {
            Some(k) => generator_truncated(&cfg.model, &g, y, k),
            None => generator_apply(&cfg.model, &g, y),
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let mut csv = format!("{CSV_SCHEMA_HEADER}\ny,Lg\n");
    for (y, v) in ys.iter().zip(&values) {
        writeln!(csv, "{y},{v}").expect("writing to a String");
    }
    emit(a.out.as_deref(), &csv)
}

fn scan_explosion_cmd(a: &ScanExplosionArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(&a.config)?;
    let block = &cfg.lyapunov;
    let deltas = a.deltas.clone().unwrap_or_else(|| block.deltas.clone());
    let mut grid = block.grid();
    if let Some(y) = a.y_max {
        grid.y_max = y;
    }
    let report = match scan_explosion_criterion_with(&cfg.model, &deltas, &grid, block.d0) {
        Ok(cert) => {
            let replay_grid = grid.clone().with_seed(grid.seed.wrapping_add(1));
            let replay_ok = replay_certificate(&cfg.model, &cert, &replay_grid)?;
            let g = TestFunction::exp_inverse_power(cert.delta).map_err(|e| CliError::Invalid(e.to_string()))?;
            let y0 = cfg.model.y0;
            let bound = (y0 > cert.y_bar).then(|| explosion_prob_lower_bound(&g, y0, cert.y_bar).ok()).flatten();
            json!({ "found": true, "certificate": cert, "replay_ok": replay_ok, "y0": y0, "lower_bound": bound })
        }
        Err(ScanError::NotFound(reason)) => json!({ "found": false, "reason": reason }),
        Err(e) => return Err(e.into()),
    };
    emit(a.out.as_deref(), &to_json(&report))
}

fn scan_nonexplosion_cmd(a: &ScanNonexplosionArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(&a.config)?;
    let block = &cfg.lyapunov;
    let n = a.n.unwrap_or(block.n);
    let k = a.k.unwrap_or(block.k);
    let grid = GridSpec {
        y_min: 1.0 / f64::from(n.max(1)),
        y_max: a.y_max.unwrap_or(block.y_max),
        points_per_decade: block.points_per_decade,
        jitter: block.jitter,
        seed: block.grid_seed,
    };
    let report = match scan_nonexplosion_criterion_on(&cfg.model, n, &grid, k) {
        Ok(ev) => json!({ "found": true, "evidence": ev }),
        Err(ScanError::NotFound(reason)) => json!({ "found": false, "reason": reason }),
        Err(e) => return Err(e.into()),
    };
    emit(a.out.as_deref(), &to_json(&report))
}

/// One line of the simulation summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSummary {
    pub index: u64,
    pub exploded: bool,
    pub tau_explode: Option<f64>,
    pub tau_zero: Option<f64>,
    pub end_time: f64,
    pub final_state: f64,
    pub steps: u64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub config: RunConfig,
    pub truncation: Option<f64>,
    pub result: MCResult,
    pub paths: Vec<PathSummary>,
}

/// CSV of a path's samples.
pub fn path_csv(p: &PathRecord) -> String {
    let mut s = format!("{CSV_SCHEMA_HEADER}\nt,y\n");
    for (t, y) in &p.samples {
        writeln!(s, "{t},{y}").expect("writing to a String");
    }
    s
}

fn simulate_cmd(a: &SimulateArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(&a.config)?;
    let sim = cfg.sim()?.clone();
    let n = a.paths.unwrap_or(cfg.montecarlo.paths);
    if n == 0 {
        return Err(CliError::Invalid("--paths must be at least 1".into()));
    }
    if let Some(k) = a.truncate {
        if !(k >= 2.0) {
            return Err(CliError::Invalid(format!("--truncate must be >= 2, got {k}")));
        }
    }
    let dir = a.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;

    let records: Vec<Result<PathRecord, SimError>> = (0..n as u64)
        .into_par_iter()
        .map(|path| simulate_indexed(&cfg.model, &sim, a.truncate, PathIndex { cell: 0, path }))
        .collect();

    let mut summaries = Vec::with_capacity(n);
    let mut taus = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in records.iter().enumerate() {
        match r {
            Ok(p) => {
                let stem = dir.join(format!("path_{i:05}"));
                write_file(&stem.with_extension("csv"), &path_csv(p))?;
                write_file(&stem.with_extension("json"), &to_json(p))?;
                taus.extend(p.tau_explode);
                summaries.push(PathSummary {
                    index: i as u64,
                    exploded: p.exploded,
                    tau_explode: p.tau_explode,
                    tau_zero: p.tau_zero,
                    end_time: p.end_time(),
                    final_state: p.final_state(),
                    steps: p.steps,
                    error: None,
                });
            }
            Err(SimError::Invalid(v)) => return Err(v.clone().into()),
            Err(e) => {
                failures.push(format!("path {i}: {e}"));
                summaries.push(PathSummary {
                    index: i as u64,
                    exploded: false,
                    tau_explode: None,
                    tau_zero: None,
                    end_time: 0.0,
                    final_state: 0.0,
                    steps: 0,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    let completed = n - failures.len();
    let (ci_low, ci_high) = wilson_interval(taus.len(), completed, WILSON_Z);
    let result = MCResult {
        n_paths: completed,
        n_exploded: taus.len(),
        n_failed: failures.len(),
        estimate: if completed == 0 { 0.0 } else { taus.len() as f64 / completed as f64 },
        ci_low,
        ci_high,
        mean_tau_k: (!taus.is_empty()).then(|| taus.iter().sum::<f64>() / taus.len() as f64),
        failures: failures.iter().take(5).cloned().collect(),
        config_echo: sim,
    };
    let summary = SimulationSummary {
        config: cfg,
        truncation: a.truncate,
        result,
        paths: summaries,
    };
    write_file(&dir.join("summary.json"), &to_json(&summary))?;
    let r = &summary.result;
    say!(
        "{} paths, {} exploded, estimate {} (95% CI {} .. {}); output in {}",
        r.n_paths,
        r.n_exploded,
        r.estimate,
        r.ci_low,
        r.ci_high,
        dir.display()
    );
    if !failures.is_empty() {
        return Err(CliError::Numerical(format!("{} path(s) failed; first: {}", failures.len(), failures[0])));
    }
    Ok(())
}

/// `param=v1,v2,...`.
pub fn parse_axis(spec: &str) -> Result<Axis, CliError> {
    let (name, values) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Invalid(format!("axis `{spec}`: expected param=v1,v2,...")))?;
    let param: SweepParam = name.trim().parse().map_err(CliError::Invalid)?;
    let values = values
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| CliError::Invalid(format!("axis `{spec}`: bad value `{v}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Axis::new(param, values))
}

fn phase_cmd(a: &PhaseArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(&a.config)?;
    let sim = cfg.sim()?;
    let block = cfg.phase.as_ref();
    let axis = |flag: &Option<String>, from_cfg: Option<&Axis>, name: &str| -> Result<Axis, CliError> {
        match (flag, from_cfg) {
            (Some(s), _) => parse_axis(s),
            (None, Some(ax)) => Ok(ax.clone()),
            (None, None) => Err(CliError::Invalid(format!("no {name}: pass --{name} or set phase.{name}"))),
        }
    };
    let axis1 = axis(&a.axis1, block.map(|b| &b.axis1), "axis1")?;
    let axis2 = axis(&a.axis2, block.map(|b| &b.axis2), "axis2")?;
    let n = a.n_per_cell.or(block.map(|b| b.n_per_cell)).unwrap_or(cfg.montecarlo.paths);
    let diagram = phase_diagram(&cfg.model, sim, &axis1, &axis2, n)?;
    let dir = a.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    write_file(&dir.join("phase.csv"), &diagram.to_csv())?;
    write_file(&dir.join("phase.json"), &to_json(&diagram))?;
    say!("{} cells written to {}", diagram.cells.len(), dir.display());
    Ok(())
}

fn verify_cmd() -> Result<(), CliError> {
    let checks = verify::run_identity_checks();
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &checks {
        say!("{}  {:width$}  {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::Numerical(format!("{failed} identity check(s) failed")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_parsing() {
        assert_eq!(parse_family("log-log", "n=9").unwrap(), FamilySpec::LogLog { n: 9 });
        assert_eq!(
            parse_family("exp-inverse-power", "delta=0.1").unwrap(),
            FamilySpec::ExpInversePower { delta: 0.1 }
        );
        assert!(parse_family("cubic", "").is_err());
        assert!(parse_family("log-log", "n").is_err());
    }

    #[test]
    fn grid_parsing() {
        let g = parse_y_grid("1:100:3").unwrap();
        assert_eq!(g.len(), 3);
        assert!((g[1] - 10.0).abs() < 1e-12 && g[2] == 100.0);
        assert_eq!(parse_y_grid("1, 2,5").unwrap(), vec![1.0, 2.0, 5.0]);
        assert!(parse_y_grid("0:1:3").is_err());
    }

    #[test]
    fn axis_parsing() {
        let a = parse_axis("b0=0,6.5").unwrap();
        assert_eq!(a.param, SweepParam::B0);
        assert_eq!(a.values, vec![0.0, 6.5]);
        assert!(parse_axis("gamma=1").is_err());
    }
}
