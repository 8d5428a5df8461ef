//! Scenario runner behind the `grassnav` binary.
//!
//! [`execute`] parses arguments and maps results to exit codes. The `cmd_*`
//! functions do the work and are usable directly from tests.

pub mod render;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use grassnav_core::netpbm::{read_pgm, write_pgm8, write_ppm};
use grassnav_core::{navsim, CostGrid, Outcome, Point2, RunMetrics, Scenario};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "grassnav",
    version,
    about = "Layered costmap navigation with traversable-grass clearing"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write metrics, path and costmap snapshots.
    Run(RunArgs),
    /// Run a scenario with and without the clearing layer.
    Compare(CompareArgs),
    /// Colorize a raw costmap PGM.
    Render(RenderArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Disables the clearing layer regardless of the scenario file.
    #[arg(long)]
    pub no_clearing: bool,
    /// Snapshot interval in ticks; 0 disables snapshots.
    #[arg(long, default_value_t = 10)]
    pub snapshot_every: u64,
    /// Adds wall-clock pipeline latency to metrics.json. The output is then
    /// no longer reproducible.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    /// Raw 8-bit costmap PGM.
    #[arg(long)]
    pub pgm: PathBuf,
    /// File of `col,row` lines drawn green.
    #[arg(long)]
    pub cleared: Option<PathBuf>,
    /// Output PPM; defaults to the input path with a `.ppm` extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareReport {
    pub with: RunMetrics,
    pub without: RunMetrics,
    /// traveled_with / traveled_without, `null` when undefined.
    pub ratio: Option<f64>,
}

pub fn exit_code(outcome: Outcome) -> i32 {
    match outcome {
        Outcome::Reached => 0,
        Outcome::NoPathAbort => 2,
        Outcome::Timeout => 3,
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Diagnostics go to stderr.
pub fn execute<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(&a).map(|m| exit_code(m.outcome)),
        Command::Compare(a) => cmd_compare(&a).map(|_| 0),
        Command::Render(a) => cmd_render(&a).map(|_| 0),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        1
    })
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading scenario {}", path.display()))?;
    let s: Scenario = serde_json::from_str(&text)
        .with_context(|| format!("parsing scenario {}", path.display()))?;
    s.validate()
        .with_context(|| format!("invalid scenario {}", path.display()))?;
    Ok(s)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn snapshot_name(tick: u64, ext: &str) -> String {
    format!("tick_{tick:06}.{ext}")
}

fn write_snapshot(
    out: &Path,
    tick: u64,
    master: &CostGrid,
    cleared: &[usize],
    robot: Point2,
) -> Result<()> {
    let (w, h) = (master.width(), master.height());
    let pgm = out.join(snapshot_name(tick, "pgm"));
    let file = fs::File::create(&pgm).with_context(|| format!("creating {}", pgm.display()))?;
    write_pgm8(BufWriter::new(file), w, h, master.cells())?;

    let robot = master.world_to_cell(robot).ok().map(|c| master.index(c));
    let img = render::colorize(master.cells(), w, h, cleared, robot)?;
    let ppm = out.join(snapshot_name(tick, "ppm"));
    let file = fs::File::create(&ppm).with_context(|| format!("creating {}", ppm.display()))?;
    write_ppm(BufWriter::new(file), &img)?;
    Ok(())
}

/// Runs one scenario and writes `metrics.json`, `path.csv` and snapshots
/// into `args.out`.
pub fn cmd_run(args: &RunArgs) -> Result<RunMetrics> {
    let mut s = load_scenario(&args.scenario)?;
    if let Some(seed) = args.seed {
        s.seed = seed;
    }
    if args.no_clearing {
        s.clearing_enabled = false;
    }
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;

    let mut csv = String::from("tick,x,y\n");
    let mut snapshot_err = None;
    let mut metrics = navsim::run_with_observer(&s, |r| {
        let _ = writeln!(csv, "{},{},{}", r.tick, r.pose.x, r.pose.y);
        if snapshot_err.is_none() && args.snapshot_every > 0 && r.tick % args.snapshot_every == 0 {
            let robot = Point2::new(r.sensed_at.x, r.sensed_at.y);
            if let Err(e) = write_snapshot(&args.out, r.tick, r.master, r.cleared, robot) {
                snapshot_err = Some(e);
            }
        }
    })?;
    if let Some(e) = snapshot_err {
        return Err(e);
    }
    if args.timing {
        metrics.timing = metrics.timing_summary();
    }
    write_file(&args.out.join("path.csv"), csv.as_bytes())?;
    write_file(
        &args.out.join("metrics.json"),
        to_json(&metrics)?.as_bytes(),
    )?;
    Ok(metrics)
}

pub fn ratio(with: &RunMetrics, without: &RunMetrics) -> Option<f64> {
    let r = with.traveled_length / without.traveled_length;
    r.is_finite().then_some(r)
}

/// Runs the scenario with and without clearing and writes `compare.json`.
pub fn cmd_compare(args: &CompareArgs) -> Result<CompareReport> {
    let mut s = load_scenario(&args.scenario)?;
    if let Some(seed) = args.seed {
        s.seed = seed;
    }
    let (mut with, mut without) = navsim::compare(&s)?;
    if args.timing {
        with.timing = with.timing_summary();
        without.timing = without.timing_summary();
    }
    let report = CompareReport {
        ratio: ratio(&with, &without),
        with,
        without,
    };
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_file(&args.out.join("compare.json"), to_json(&report)?.as_bytes())?;
    Ok(report)
}

/// Colorizes a raw costmap PGM. Returns the output path.
pub fn cmd_render(args: &RenderArgs) -> Result<PathBuf> {
    let bytes = render::read_file(&args.pgm)?;
    let gray =
        read_pgm(bytes.as_slice()).with_context(|| format!("decoding {}", args.pgm.display()))?;
    let (w, h) = (gray.width, gray.height);
    let cells = gray.into_bytes()?;
    let cleared = match &args.cleared {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            render::parse_cell_list(&text, w, h)
                .with_context(|| format!("parsing {}", p.display()))?
        }
        None => Vec::new(),
    };
    let img = render::colorize(&cells, w, h, &cleared, None)?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| args.pgm.with_extension("ppm"));
    if out == args.pgm {
        bail!("output path equals input path {}", out.display());
    }
    let file = fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?;
    write_ppm(BufWriter::new(file), &img)?;
    Ok(out)
}
