//! Command-line front end: `simulate` and `sweep`.
//!
//! Outputs are staged in a hidden directory next to their destination and
//! moved into place only after every file was written, so a failed run
//! leaves nothing behind.

mod plot;
mod records;
mod scenario;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

pub use plot::{line_chart, write_plots, Series};
pub use records::{format_sig9, read_records, write_records, CSV_HEADER};
pub use scenario::{format_scenario, parse_override, parse_pairs, parse_scenario, RunSetup};

use crate::sim::{compare_runs, run_scenario, RunMetrics, SimRun};

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "YAWSTAB_OUT";

#[derive(Debug, Parser)]
#[command(name = "yawstab", version, about = "Yaw-stability controller simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write CSV traces, metrics and optional plots.
    Simulate(SimulateArgs),
    /// Run a scenario over a grid of initial speeds and friction coefficients.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario file (`key = value` per line).
    pub scenario: PathBuf,
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, conflicts_with = "controlled_only")]
    pub uncontrolled_only: bool,
    #[arg(long)]
    pub controlled_only: bool,
    /// Also render SVG plots.
    #[arg(long)]
    pub plot: bool,
    /// Override a scenario, vehicle or controller setting.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_override)]
    pub overrides: Vec<(String, String)>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub scenario: PathBuf,
    /// Initial speeds in m/s.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub speeds: Vec<f64>,
    /// Friction coefficients.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub mus: Vec<f64>,
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    pub out: PathBuf,
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_override)]
    pub overrides: Vec<(String, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Both,
    ControlledOnly,
    UncontrolledOnly,
}

impl RunMode {
    fn controlled(self) -> bool {
        self != RunMode::UncontrolledOnly
    }

    fn uncontrolled(self) -> bool {
        self != RunMode::ControlledOnly
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub scenario_path: PathBuf,
    pub out_dir: PathBuf,
    pub mode: RunMode,
    pub plot: bool,
    pub overrides: Vec<(String, String)>,
}

impl From<SimulateArgs> for RunManifest {
    fn from(a: SimulateArgs) -> Self {
        let mode = if a.controlled_only {
            RunMode::ControlledOnly
        } else if a.uncontrolled_only {
            RunMode::UncontrolledOnly
        } else {
            RunMode::Both
        };
        Self {
            scenario_path: a.scenario,
            out_dir: a.out,
            mode,
            plot: a.plot,
            overrides: a.overrides,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Bad arguments or unparseable scenario.
    Usage(String),
    /// The simulation itself failed.
    Fault(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Fault(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Fault(m) => write!(f, "simulation fault: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Reads the scenario file and applies overrides.
pub fn load_setup(path: &Path, overrides: &[(String, String)]) -> Result<RunSetup, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    let scenario =
        parse_scenario(&text, stem).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut setup = RunSetup::new(scenario);
    for (k, v) in overrides {
        setup
            .apply(k, v)
            .map_err(|e| CliError::Usage(format!("--set {k}={v}: {e}")))?;
    }
    setup.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(setup)
}

fn simulate_one(setup: &RunSetup, controller: bool) -> Result<SimRun, CliError> {
    let scenario = setup.scenario.clone().with_controller(controller);
    let run = run_scenario(&scenario, &setup.params, &setup.config).map_err(|e| CliError::Fault(e.to_string()))?;
    if let Some(fault) = &run.fault {
        let which = if controller { "controlled" } else { "uncontrolled" };
        return Err(CliError::Fault(format!("{which} run: {fault}")));
    }
    Ok(run)
}

/// Summary metrics of one run, a pair of runs, or their ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub controlled: Option<RunMetrics>,
    pub uncontrolled: Option<RunMetrics>,
    pub ratio: Option<RunMetrics>,
}

impl Summary {
    pub fn from_runs(
        controlled: Option<&SimRun>,
        uncontrolled: Option<&SimRun>,
        window_start_s: f64,
    ) -> Result<Self, CliError> {
        match (controlled, uncontrolled) {
            (Some(c), Some(u)) => {
                let cmp = compare_runs(&c.records, &u.records, window_start_s)
                    .map_err(|e| CliError::Fault(e.to_string()))?;
                Ok(Self {
                    controlled: Some(cmp.controlled),
                    uncontrolled: Some(cmp.uncontrolled),
                    ratio: Some(cmp.ratio),
                })
            }
            (c, u) => Ok(Self {
                controlled: c.map(|r| RunMetrics::from_records(&r.records, window_start_s)),
                uncontrolled: u.map(|r| RunMetrics::from_records(&r.records, window_start_s)),
                ratio: None,
            }),
        }
    }

    /// `(name, value)` pairs in a fixed order; shared by `metrics.txt` and
    /// the sweep table.
    pub fn fields(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        for (group, m) in [
            ("controlled", self.controlled),
            ("uncontrolled", self.uncontrolled),
            ("ratio", self.ratio),
        ] {
            let Some(m) = m else { continue };
            for (name, v) in [
                ("peak_yaw_error", m.peak_yaw_error),
                ("steady_yaw_error", m.steady_yaw_error),
                ("peak_sideslip", m.peak_sideslip),
                ("peak_yaw_rate", m.peak_yaw_rate),
                ("settling_time_s", m.settling_time_s),
            ] {
                out.push((format!("{group}.{name}"), v));
            }
        }
        out
    }
}

/// Field names of a full (both runs) summary, in [`Summary::fields`] order.
pub fn summary_field_names() -> Vec<String> {
    let m = RunMetrics {
        peak_yaw_error: 0.0,
        steady_yaw_error: 0.0,
        peak_sideslip: 0.0,
        peak_yaw_rate: 0.0,
        settling_time_s: 0.0,
    };
    Summary {
        controlled: Some(m),
        uncontrolled: Some(m),
        ratio: Some(m),
    }
    .fields()
    .into_iter()
    .map(|(n, _)| n)
    .collect()
}

fn metrics_text(setup: &RunSetup, summary: &Summary, runs: &[(&str, &SimRun)]) -> String {
    let s = &setup.scenario;
    let mut out = String::new();
    let _ = writeln!(out, "scenario = {}", s.name);
    let _ = writeln!(out, "speed_mps = {}", format_sig9(s.initial_speed_mps));
    let _ = writeln!(out, "mu = {}", format_sig9(s.mu));
    let _ = writeln!(out, "window_start_s = {}", format_sig9(s.event_time()));
    for (label, run) in runs {
        let _ = writeln!(out, "{label}.rows = {}", run.records.len());
        let _ = writeln!(out, "{label}.solver_faults = {}", run.solver_faults);
    }
    for (name, v) in summary.fields() {
        let _ = writeln!(out, "{name} = {}", format_sig9(v));
    }
    out
}

/// Parses a `metrics.txt` back into `(key, value)` strings.
pub fn parse_metrics(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

/// Files staged in a hidden directory inside the destination, moved into
/// place by [`Staging::commit`]. Dropped without commit, nothing remains.
struct Staging {
    dir: tempfile::TempDir,
    dest: PathBuf,
    files: Vec<String>,
}

impl Staging {
    fn new(dest: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dest).map_err(|e| io_err(dest, e))?;
        let dir = tempfile::Builder::new()
            .prefix(".yawstab-")
            .tempdir_in(dest)
            .map_err(|e| io_err(dest, e))?;
        Ok(Self {
            dir,
            dest: dest.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn path(&self) -> &Path {
        self.dir.path()
    }

    fn create(&mut self, name: &str) -> Result<fs::File, CliError> {
        let p = self.dir.path().join(name);
        self.files.push(name.to_string());
        fs::File::create(&p).map_err(|e| io_err(&p, e))
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        use std::io::Write;
        let mut f = self.create(name)?;
        f.write_all(contents.as_bytes()).map_err(|e| io_err(Path::new(name), e))
    }

    fn commit(self) -> Result<Vec<PathBuf>, CliError> {
        let mut moved: Vec<PathBuf> = Vec::new();
        for name in &self.files {
            let from = self.dir.path().join(name);
            let to = self.dest.join(name);
            if let Err(e) = fs::rename(&from, &to) {
                for p in &moved {
                    let _ = fs::remove_file(p);
                }
                return Err(io_err(&to, e));
            }
            moved.push(to);
        }
        Ok(moved)
    }
}

/// Runs `simulate`. Returns the paths written.
pub fn cmd_simulate(manifest: &RunManifest) -> Result<Vec<PathBuf>, CliError> {
    let setup = load_setup(&manifest.scenario_path, &manifest.overrides)?;
    let name = setup.scenario.name.clone();
    log::info!("simulating {name} ({:?})", manifest.mode);

    let (controlled, uncontrolled) = rayon::join(
        || manifest.mode.controlled().then(|| simulate_one(&setup, true)).transpose(),
        || manifest.mode.uncontrolled().then(|| simulate_one(&setup, false)).transpose(),
    );
    let (controlled, uncontrolled) = (controlled?, uncontrolled?);
    let summary = Summary::from_runs(controlled.as_ref(), uncontrolled.as_ref(), setup.scenario.event_time())?;

    let mut stage = Staging::new(&manifest.out_dir)?;
    let mut runs = Vec::new();
    for (label, run) in [("controlled", &controlled), ("uncontrolled", &uncontrolled)] {
        let Some(run) = run else { continue };
        let file = stage.create(&format!("{name}_{label}.csv"))?;
        write_records(std::io::BufWriter::new(file), &run.records).map_err(|e| CliError::Io(e.to_string()))?;
        runs.push((label, run));
    }
    stage.write("metrics.txt", &metrics_text(&setup, &summary, &runs))?;
    if manifest.plot {
        let written = write_plots(
            stage.path(),
            &name,
            controlled.as_ref().map(|r| r.records.as_slice()),
            uncontrolled.as_ref().map(|r| r.records.as_slice()),
        )
        .map_err(|e| io_err(stage.path(), e))?;
        for p in written {
            if let Some(f) = p.file_name().and_then(|f| f.to_str()) {
                stage.files.push(f.to_string());
            }
        }
    }
    stage.commit()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepManifest {
    pub scenario_path: PathBuf,
    pub out_dir: PathBuf,
    pub speeds: Vec<f64>,
    pub mus: Vec<f64>,
    pub overrides: Vec<(String, String)>,
}

impl From<SweepArgs> for SweepManifest {
    fn from(a: SweepArgs) -> Self {
        Self {
            scenario_path: a.scenario,
            out_dir: a.out,
            speeds: a.speeds,
            mus: a.mus,
            overrides: a.overrides,
        }
    }
}

/// One grid cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub speed_mps: f64,
    pub mu: f64,
    /// `Ok(summary)` or the fault text.
    pub outcome: Result<Summary, String>,
}

fn sweep_cell(base: &RunSetup, speed: f64, mu: f64) -> SweepRow {
    let mut setup = base.clone();
    setup.scenario.initial_speed_mps = speed;
    setup.scenario.mu = mu;
    let outcome = (|| {
        setup.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let c = simulate_one(&setup, true)?;
        let u = simulate_one(&setup, false)?;
        Summary::from_runs(Some(&c), Some(&u), setup.scenario.event_time())
    })();
    log::info!("sweep cell V={speed} mu={mu}: {}", if outcome.is_ok() { "ok" } else { "fault" });
    SweepRow {
        speed_mps: speed,
        mu,
        outcome: outcome.map_err(|e| e.to_string()),
    }
}

/// Runs every `(speed, mu)` cell; speeds outer, friction inner.
pub fn run_sweep(base: &RunSetup, speeds: &[f64], mus: &[f64]) -> Vec<SweepRow> {
    let cells: Vec<(f64, f64)> = speeds.iter().flat_map(|&v| mus.iter().map(move |&m| (v, m))).collect();
    cells.par_iter().map(|&(v, m)| sweep_cell(base, v, m)).collect()
}

pub fn write_sweep<W: std::io::Write>(out: W, rows: &[SweepRow]) -> Result<(), CliError> {
    let names = summary_field_names();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["speed_mps".to_string(), "mu".to_string(), "status".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header).map_err(|e| CliError::Io(e.to_string()))?;
    for row in rows {
        let mut rec = vec![format_sig9(row.speed_mps), format_sig9(row.mu)];
        match &row.outcome {
            Ok(summary) => {
                rec.push("ok".to_string());
                rec.extend(summary.fields().into_iter().map(|(_, v)| format_sig9(v)));
            }
            Err(msg) => {
                rec.push(msg.clone());
                rec.extend(names.iter().map(|_| String::new()));
            }
        }
        w.write_record(&rec).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

/// Runs `sweep`, writing `<name>_sweep.csv`.
pub fn cmd_sweep(manifest: &SweepManifest) -> Result<(PathBuf, Vec<SweepRow>), CliError> {
    if manifest.speeds.is_empty() || manifest.mus.is_empty() {
        return Err(CliError::Usage("sweep grid is empty".into()));
    }
    let setup = load_setup(&manifest.scenario_path, &manifest.overrides)?;
    let rows = run_sweep(&setup, &manifest.speeds, &manifest.mus);
    let mut stage = Staging::new(&manifest.out_dir)?;
    let file = stage.create(&format!("{}_sweep.csv", setup.scenario.name))?;
    write_sweep(std::io::BufWriter::new(file), &rows)?;
    let path = stage.commit()?.remove(0);
    Ok((path, rows))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(&a.into()).map(|files| {
            for f in files {
                println!("{}", f.display());
            }
        }),
        Command::Sweep(a) => cmd_sweep(&a.into()).map(|(path, rows)| {
            let faults = rows.iter().filter(|r| r.outcome.is_err()).count();
            println!("{} ({} cells, {faults} faulted)", path.display(), rows.len());
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("yawstab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run() -> ExitCode {
    run_from(std::env::args_os())
}
