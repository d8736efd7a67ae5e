//! Command-line front end: argument parsing, subcommand execution and
//! artifact writing.
//!
//! Every file written goes through a temporary file in the destination
//! directory and is renamed into place, so a failed run leaves nothing
//! half-written. Runs that write files also write `<out>.manifest.toml`,
//! a loadable config holding the resolved settings and seed.

pub mod checks;

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, Subcommand};
use serde::Serialize;

use crate::analytics::{a_function_alpha4, a_function_quadrature, cc_leg_success, validate_cc_closed_form, SgParams};
use crate::config::Config;
use crate::error::Error;
use crate::seeds::Seed;
use crate::sim::{aggregate, run_trials, sweep, write_rows, TrialResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Default trial count per coverage point for `validate`.
pub const VALIDATE_PPP_TRIALS: usize = 100_000;
/// Default trial count per coverage point for `analyze`.
pub const ANALYZE_PPP_TRIALS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum SubcommandKind {
    /// Write the configured urban map as JSON.
    GenerateMap,
    /// Run the configured strategy and band; write one CSV row per trial.
    Simulate,
    /// Run the configured parameter sweep; write the results CSV.
    Sweep,
    /// Tabulate closed-form outage against numerical and Monte-Carlo values.
    Analyze,
    /// Run the analytic oracle checks; exit 4 on any tolerance breach.
    Validate,
}

impl SubcommandKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SubcommandKind::GenerateMap => "generate-map",
            SubcommandKind::Simulate => "simulate",
            SubcommandKind::Sweep => "sweep",
            SubcommandKind::Analyze => "analyze",
            SubcommandKind::Validate => "validate",
        }
    }

    fn needs_config(self) -> bool {
        matches!(self, SubcommandKind::GenerateMap | SubcommandKind::Simulate | SubcommandKind::Sweep)
    }

    fn default_out(self) -> Option<&'static str> {
        match self {
            SubcommandKind::GenerateMap => Some("map.json"),
            SubcommandKind::Simulate => Some("routes.csv"),
            SubcommandKind::Sweep => Some("sweep.csv"),
            SubcommandKind::Analyze | SubcommandKind::Validate => None,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "d2d-relay", version, about = "Multi-hop D2D relaying over a loaded cellular network")]
struct Args {
    #[command(subcommand)]
    subcommand: SubcommandKind,
    /// Scenario config (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output file.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Master seed, replacing the config's.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u32).range(1..))]
    workers: Option<u32>,
    /// Trial count, replacing the config's.
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    trials: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Command {
    pub subcommand: SubcommandKind,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub trials: Option<usize>,
}

/// Parses `argv` (program name first). Help and version requests also come
/// back as errors; `clap::Error::exit_code` tells them apart.
pub fn parse_invocation<I, T>(argv: I) -> Result<Command, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = Args::try_parse_from(argv)?;
    if args.subcommand.needs_config() && args.config.is_none() {
        return Err(Args::command().error(
            ErrorKind::MissingRequiredArgument,
            format!("{} requires --config <PATH>", args.subcommand.as_str()),
        ));
    }
    Ok(Command {
        subcommand: args.subcommand,
        config: args.config,
        out: args.out,
        seed: args.seed,
        workers: args.workers.map(|w| w as usize),
        trials: args.trials.map(|t| t as usize),
    })
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(Error),
    /// Validation checks that exceeded their tolerance.
    Breach(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Run(Error::Config(_) | Error::Map { .. }) => 2,
            CliError::Run(_) => 3,
            CliError::Breach(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Run(e) => write!(f, "{e}"),
            CliError::Breach(names) => write!(f, "validation failed: {}", names.join(", ")),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(Error::Io(e))
    }
}

/// Parses and executes, printing reports to stdout and errors to stderr.
/// Returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cmd = match parse_invocation(argv) {
        Ok(cmd) => cmd,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    match execute(&cmd, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Resolved configuration: file (or defaults) plus environment and flag
/// overrides.
pub fn resolve_config(cmd: &Command) -> Result<Config, CliError> {
    let mut config = match &cmd.config {
        Some(path) => {
            if !path.is_file() {
                return Err(CliError::Usage(format!("config file {} does not exist", path.display())));
            }
            Config::load(path)?
        }
        None => Config::from_env()?,
    };
    if let Some(seed) = cmd.seed {
        config.seed.master = seed;
    }
    if let Some(trials) = cmd.trials {
        config.sweep.trials = trials;
    }
    if let Some(file) = &config.map.file {
        if let Ok(abs) = std::fs::canonicalize(file) {
            config.map.file = Some(abs);
        }
    }
    config.validate()?;
    Ok(config)
}

pub fn execute<W: Write>(cmd: &Command, stdout: &mut W) -> Result<(), CliError> {
    let config = resolve_config(cmd)?;
    let out = cmd.out.clone().or_else(|| cmd.subcommand.default_out().map(PathBuf::from));
    match cmd.subcommand {
        SubcommandKind::GenerateMap => generate_map(&config, cmd, out.as_deref().expect("has default"), stdout),
        SubcommandKind::Simulate => simulate(&config, cmd, out.as_deref().expect("has default"), stdout),
        SubcommandKind::Sweep => run_sweep(&config, cmd, out.as_deref().expect("has default"), stdout),
        SubcommandKind::Analyze => analyze(&config, cmd, out.as_deref(), stdout),
        SubcommandKind::Validate => validate(&config, cmd, out.as_deref(), stdout),
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.toml");
    out.with_file_name(name)
}

/// Resolved config preceded by a header naming the tool version and the
/// command; loading it with `--config` repeats the run.
pub fn manifest(config: &Config, cmd: &Command) -> Result<String, Error> {
    let mut text = format!(
        "# d2d-relay {VERSION} run manifest\n# command: {}\n",
        cmd.subcommand.as_str()
    );
    if let Some(t) = cmd.trials {
        text.push_str(&format!("# trials: {t}\n"));
    }
    text.push('\n');
    text.push_str(&config.to_toml()?);
    Ok(text)
}

/// Writes every file through a temporary sibling and renames them into
/// place. If any step fails, files already renamed by this call are removed.
pub fn write_files_atomic(files: &[(&Path, Vec<u8>)]) -> Result<(), Error> {
    let mut staged = Vec::with_capacity(files.len());
    for (path, bytes) in files {
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        staged.push((tmp, *path));
    }
    let mut done: Vec<&Path> = Vec::new();
    for (tmp, path) in staged {
        if let Err(e) = tmp.persist(path) {
            for p in done {
                let _ = std::fs::remove_file(p);
            }
            return Err(Error::Io(e.error));
        }
        done.push(path);
    }
    Ok(())
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Error> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn generate_map<W: Write>(config: &Config, cmd: &Command, out: &Path, stdout: &mut W) -> Result<(), CliError> {
    let map = config.build_map()?;
    let json = map.to_json()?;
    write_files_atomic(&[(out, json.into_bytes()), (&manifest_path(out), manifest(config, cmd)?.into_bytes())])?;
    writeln!(
        stdout,
        "wrote {} ({} buildings, {} x {} m)",
        out.display(),
        map.buildings().len(),
        map.width_m(),
        map.height_m()
    )?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct RouteRow<'a> {
    trial: u64,
    strategy: &'a str,
    band: &'a str,
    outcome: &'a str,
    hop_count: Option<usize>,
    total_length_m: Option<f64>,
    /// Realized hop results in route order, `1` decoded, `0` lost.
    per_hop_success: String,
    cc_outage: f64,
}

fn route_row(r: &TrialResult) -> RouteRow<'static> {
    RouteRow {
        trial: r.trial_index,
        strategy: r.strategy.as_str(),
        band: r.band.as_str(),
        outcome: r.outcome.as_str(),
        hop_count: r.hops,
        total_length_m: r.route_length_m,
        per_hop_success: r.hop_success.iter().map(|&s| if s { "1" } else { "0" }).collect::<Vec<_>>().join(";"),
        cc_outage: r.cc_outage,
    }
}

fn simulate<W: Write>(config: &Config, cmd: &Command, out: &Path, stdout: &mut W) -> Result<(), CliError> {
    let scenario = config.scenario()?;
    let (band, strategy) = (scenario.band, scenario.strategy);
    let blocks = with_pool(cmd.workers, || run_trials(&scenario, scenario.trials, &[band], &[strategy]))??;
    let results: Vec<&TrialResult> = blocks.iter().map(|b| &b[0]).collect();

    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &results {
        w.serialize(route_row(r)).map_err(Error::Csv)?;
    }
    let csv = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    write_files_atomic(&[(out, csv), (&manifest_path(out), manifest(config, cmd)?.into_bytes())])?;

    let agg = aggregate(strategy, band, &results);
    writeln!(
        stdout,
        "{} {}: success {:.4} [{:.4}, {:.4}] over {} trials, cc outage {:.4} (baseline {:.4})",
        strategy.as_str(),
        band.as_str(),
        agg.success_rate(),
        agg.ci.0,
        agg.ci.1,
        agg.trials,
        agg.cc_outage,
        agg.cc_baseline
    )?;
    writeln!(stdout, "wrote {}", out.display())?;
    Ok(())
}

fn run_sweep<W: Write>(config: &Config, cmd: &Command, out: &Path, stdout: &mut W) -> Result<(), CliError> {
    let scenario = config.scenario()?;
    let rows = sweep(&config.sweep_spec(), &scenario, cmd.workers)?;
    let mut csv = Vec::new();
    write_rows(&rows, &mut csv)?;
    write_files_atomic(&[(out, csv), (&manifest_path(out), manifest(config, cmd)?.into_bytes())])?;
    writeln!(stdout, "wrote {} ({} rows)", out.display(), rows.len())?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct AnalyzeRow {
    table: &'static str,
    threshold_db: f64,
    bs_per_km2: Option<f64>,
    distance_m: Option<f64>,
    analytic: f64,
    numerical: f64,
    abs_gap: f64,
}

fn analyze<W: Write>(config: &Config, cmd: &Command, out: Option<&Path>, stdout: &mut W) -> Result<(), CliError> {
    let trials = cmd.trials.unwrap_or(ANALYZE_PPP_TRIALS);
    let seed = config.seed.master;
    let threshold_db = config.d2d.threshold_db;
    let mut rows = Vec::new();
    for db in checks::A_GRID_DB {
        let z = 10f64.powf(db / 10.0);
        let analytic = a_function_alpha4(z);
        let numerical = a_function_quadrature(z, 4.0)?;
        rows.push(AnalyzeRow {
            table: "a_function",
            threshold_db: db,
            bs_per_km2: None,
            distance_m: None,
            analytic,
            numerical,
            abs_gap: (analytic - numerical).abs(),
        });
    }
    let coverage = with_pool(cmd.workers, || -> Result<Vec<AnalyzeRow>, Error> {
        let mut rows = Vec::new();
        for (i, &lambda) in checks::PPP_DENSITIES_KM2.iter().enumerate() {
            let params = SgParams::from_km2_db(lambda, 4.0, threshold_db)?;
            for (j, &r) in checks::PPP_DISTANCES_M.iter().enumerate() {
                let v = validate_cc_closed_form(&params, r, trials, Seed(seed).pair(i as u64, j as u64).0)?;
                rows.push(AnalyzeRow {
                    table: "cc_coverage",
                    threshold_db,
                    bs_per_km2: Some(lambda),
                    distance_m: Some(r),
                    analytic: cc_leg_success(&params, r),
                    numerical: v.empirical,
                    abs_gap: v.abs_gap,
                });
            }
        }
        Ok(rows)
    })??;
    rows.extend(coverage);

    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).map_err(Error::Csv)?;
    }
    let csv = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    match out {
        Some(path) => {
            write_files_atomic(&[(path, csv), (&manifest_path(path), manifest(config, cmd)?.into_bytes())])?;
            writeln!(stdout, "wrote {} ({} rows)", path.display(), rows.len())?;
        }
        None => stdout.write_all(&csv)?,
    }
    Ok(())
}

fn validate<W: Write>(config: &Config, cmd: &Command, out: Option<&Path>, stdout: &mut W) -> Result<(), CliError> {
    let trials = cmd.trials.unwrap_or(VALIDATE_PPP_TRIALS);
    let reports = with_pool(cmd.workers, || checks::run_all(trials, config.seed.master))??;
    for r in &reports {
        writeln!(
            stdout,
            "{:<16} cases {:>4}  worst gap {:.3e}  tolerance {:.1e}  {}",
            r.name,
            r.cases,
            r.worst_gap,
            r.tolerance,
            if r.passed { "PASS" } else { "FAIL" }
        )?;
    }
    if let Some(path) = out {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &reports {
            w.serialize(r).map_err(Error::Csv)?;
        }
        let csv = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        write_files_atomic(&[(path, csv), (&manifest_path(path), manifest(config, cmd)?.into_bytes())])?;
    }
    let failed: Vec<String> = reports.iter().filter(|r| !r.passed).map(|r| r.name.clone()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Breach(failed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_invocation() {
        let cmd = parse_invocation(["d2d-relay", "sweep", "--config", "s.cfg", "--out", "r.csv", "--seed", "42"]).unwrap();
        assert_eq!(
            cmd,
            Command {
                subcommand: SubcommandKind::Sweep,
                config: Some("s.cfg".into()),
                out: Some("r.csv".into()),
                seed: Some(42),
                workers: None,
                trials: None,
            }
        );
    }

    #[test]
    fn flags_may_precede_the_subcommand() {
        let cmd = parse_invocation(["d2d-relay", "--workers", "3", "validate"]).unwrap();
        assert_eq!(cmd.subcommand, SubcommandKind::Validate);
        assert_eq!(cmd.workers, Some(3));
    }

    #[test]
    fn no_subcommand_is_a_usage_error() {
        let e = parse_invocation(["d2d-relay"]).unwrap_err();
        assert!(e.use_stderr());
    }

    #[test]
    fn bad_seed_names_the_flag() {
        let e = parse_invocation(["d2d-relay", "sweep", "--config", "s.cfg", "--seed", "abc"]).unwrap_err();
        assert_eq!(e.kind(), ErrorKind::ValueValidation);
        assert!(e.to_string().contains("--seed"));
    }

    #[test]
    fn unknown_flag_and_missing_config() {
        assert!(parse_invocation(["d2d-relay", "sweep", "--config", "s.cfg", "--bogus"]).is_err());
        let e = parse_invocation(["d2d-relay", "sweep"]).unwrap_err();
        assert!(e.to_string().contains("--config"));
        assert!(parse_invocation(["d2d-relay", "simulate", "--workers", "0", "--config", "x"]).is_err());
    }

    #[test]
    fn manifest_path_appends_suffix() {
        assert_eq!(manifest_path(Path::new("out/r.csv")), PathBuf::from("out/r.csv.manifest.toml"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 1);
        assert_eq!(CliError::Run(Error::Config("x".into())).exit_code(), 2);
        assert_eq!(CliError::Run(Error::Domain("x".into())).exit_code(), 3);
        assert_eq!(CliError::Breach(vec![]).exit_code(), 4);
    }
}
