//! Command-line driver: `generate`, `evaluate`, `explain`, `sample-profile`.
//!
//! Exit codes: 0 success, 2 usage or precondition errors (including a
//! missing profile), 1 for every other failure. Failures also print a JSON
//! error block on stderr.

pub mod evaluate;
pub mod explain;
pub mod pipeline;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::anthropometry::{sample_profile, Mode, PercentileTable};
use crate::error::{Error, Result};
use crate::manifest::InputRef;
use crate::par;

use self::evaluate::EvaluateRequest;
use self::pipeline::{BackendChoice, GenerateRequest};

#[derive(Debug, Parser)]
#[command(name = "anthro-layout", version, about = "Body-aware furniture layout generation and evaluation")]
pub struct Cli {
    /// Worker threads for candidate and metric parallelism (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize a scene into a layout and a program dump.
    Generate(GenerateArgs),
    /// Score a layout, optionally against recorded trajectories.
    Evaluate(EvaluateArgs),
    /// Print every term of a layout's program with its residual.
    Explain(ExplainArgs),
    /// Draw a body profile from a percentile table.
    SampleProfile(SampleArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Scene file (room, assets, criteria, optional relations).
    #[arg(required_unless_present = "replay")]
    pub scene: Option<PathBuf>,
    #[arg(long, value_parser = parse_mode, default_value = "ho")]
    pub mode: Mode,
    /// Anthropometric profile file.
    #[arg(long, conflicts_with = "percentiles")]
    pub profile: Option<PathBuf>,
    /// Percentile table to sample the profile from, using `--seed`.
    #[arg(long)]
    pub percentiles: Option<PathBuf>,
    /// Relation source; defaults to the scene's relations if present, else rules.
    #[arg(long, value_enum)]
    pub backend: Option<BackendChoice>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub candidates: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Re-run the manifest embedded in an earlier layout or program dump.
    #[arg(long, conflicts_with_all = ["scene", "profile", "percentiles", "backend", "config", "seed", "candidates", "iterations"])]
    pub replay: Option<PathBuf>,
    /// Layout output path.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Program dump path (default: `<out stem>.program.json`).
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    pub layout: PathBuf,
    /// Trajectory episode files (.json or .csv); repeatable.
    #[arg(long = "trajectory")]
    pub trajectories: Vec<PathBuf>,
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Asset whose manipulation box is scored for occupancy.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long, default_value_t = 0.05)]
    pub voxel: f64,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Heatmap output prefix; writes `.pgm` and `.raw`.
    #[arg(long)]
    pub heatmap: Option<PathBuf>,
    /// Report path (default: stdout).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    /// Layout with an embedded manifest, or a program dump.
    pub input: PathBuf,
    /// Emit the program dump as JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    pub percentiles: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn to_json_line<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializes");
    s.push('\n');
    s
}

fn generate(args: GenerateArgs) -> Result<()> {
    let manifest = match &args.replay {
        Some(p) => pipeline::embedded_manifest(p)?,
        None => pipeline::build_manifest(&GenerateRequest {
            scene: args.scene.clone().expect("clap requires scene without --replay"),
            mode: args.mode,
            profile: args.profile,
            percentiles: args.percentiles,
            backend: args.backend,
            config: args.config,
            seed: args.seed,
            candidates: args.candidates,
            iterations: args.iterations,
        })?,
    };
    let out = pipeline::run_manifest(&manifest)?;
    if let Some(d) = &out.layout.diagnostics {
        for w in &d.warnings {
            log::warn!("{w}");
            eprintln!("warning: {w}");
        }
    }
    let dump_path = args.dump.unwrap_or_else(|| pipeline::default_dump_path(&args.out));
    write_atomic(&args.out, out.layout.to_json().as_bytes())?;
    write_atomic(&dump_path, out.program.to_json().as_bytes())?;
    Ok(())
}

fn sample(args: SampleArgs) -> Result<()> {
    let (_, text) = InputRef::read(&args.percentiles)?;
    let table = PercentileTable::from_json(&text)?;
    let profile = sample_profile(&table, args.seed)?;
    emit(args.out.as_deref(), &to_json_line(&profile))
}

pub fn run(cli: Cli) -> Result<()> {
    let jobs = cli.jobs;
    par::with_jobs(jobs, move || match cli.command {
        Command::Generate(a) => generate(a),
        Command::Evaluate(a) => {
            let report = evaluate::evaluate(&EvaluateRequest {
                layout: a.layout,
                trajectories: a.trajectories,
                profile: a.profile,
                target: a.target,
                voxel: a.voxel,
                config: a.config,
                heatmap: a.heatmap,
            })?;
            emit(a.out.as_deref(), &to_json_line(&report))
        }
        Command::Explain(a) => {
            let d = explain::load_dump(&a.input)?;
            let text = if a.json { d.to_json() } else { explain::render(&d) };
            emit(None, &text)
        }
        Command::SampleProfile(a) => sample(a),
    })
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 2,
        Error::Group { source, .. } => exit_code(source),
        _ => 1,
    }
}

/// Machine-readable error block printed on stderr.
pub fn error_block(e: &Error) -> String {
    serde_json::json!({
        "error": {
            "kind": e.kind(),
            "message": e.to_string(),
            "exit_code": exit_code(e),
        }
    })
    .to_string()
}
