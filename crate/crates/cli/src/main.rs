#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod error;
mod jobs;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use mcf_ttdl::config::{FiberDesign, TABLE1_TOML};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use args::{Cli, Command, OUT_DIR_ENV};
use error::CliError;
use jobs::{Job, TargetsFile};
use output::{write_atomic, Sink};

const DEFAULT_OUT_DIR: &str = "mcf-ttdl-out";
const MANIFEST: &str = "manifest.json";

/// Run record written next to the artifacts; enough to repeat the run.
#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    tool: String,
    version: String,
    command: Command,
    design_source: String,
    design_toml: String,
    #[serde(default)]
    targets: Option<TargetsFile>,
    #[serde(default)]
    seed: Option<u64>,
    plot: bool,
    artifacts: Vec<String>,
    results: Value,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", one_line(&e.to_string()));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Folds multi-line parser reports (source excerpts included) into one line.
fn one_line(msg: &str) -> String {
    msg.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('|') && !l.starts_with(|c: char| c.is_ascii_digit()))
        .collect::<Vec<_>>()
        .join(": ")
}

fn load_design(path: &Option<PathBuf>) -> Result<(FiberDesign, String, String), CliError> {
    let (text, source) = match path {
        Some(p) => (
            std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?,
            p.display().to_string(),
        ),
        None => (TABLE1_TOML.to_string(), "bundled".to_string()),
    };
    let design = FiberDesign::from_toml_str(&text)?;
    let v = design.violations();
    if !v.is_empty() {
        return Err(CliError::Config(format!("{source}: {}", v.join("; "))));
    }
    Ok((design, text, source))
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Validate(a) => return validate(&a.path),
        Command::Rerun(a) => return rerun(&a.manifest, cli.out_dir),
        _ => {}
    }
    let (design, design_toml, design_source) = match cli.command {
        Command::Design(_) => (FiberDesign::table1(), String::new(), "none".to_string()),
        _ => load_design(&cli.design)?,
    };
    let targets = match &cli.command {
        Command::Design(a) => Some(match &a.targets {
            Some(p) => TargetsFile::load(p)?,
            None => TargetsFile::default(),
        }),
        _ => None,
    };
    let job = Job {
        command: cli.command,
        design,
        targets,
    };
    execute(job, design_toml, design_source, out_dir(cli.out_dir), cli.plot)
}

fn execute(job: Job, design_toml: String, design_source: String, dir: PathBuf, plot: bool) -> Result<(), CliError> {
    let mut sink = Sink::new(dir, plot)?;
    let results = jobs::execute(&job, &mut sink)?;
    let seed = match &job.command {
        Command::Tolerance(a) => Some(a.seed),
        Command::Reproduce(a) => Some(a.seed),
        _ => None,
    };
    let manifest = Manifest {
        tool: "mcf-ttdl".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: job.command,
        design_source,
        design_toml,
        targets: job.targets,
        seed,
        plot,
        artifacts: sink.artifacts.clone(),
        results: Value::Object(results),
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write_atomic(&sink.dir.join(MANIFEST), text.as_bytes())?;
    println!("wrote {} files to {}", sink.artifacts.len() + 1, sink.dir.display());
    Ok(())
}

fn validate(path: &Path) -> Result<(), CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let design = FiberDesign::from_toml_str(&text)?;
    let v = design.violations();
    if v.is_empty() {
        println!("valid: {} cores", design.cores.len());
        Ok(())
    } else {
        for m in &v {
            println!("{m}");
        }
        Err(CliError::Config(format!("{} violation(s) in {}", v.len(), path.display())))
    }
}

fn rerun(path: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let m: Manifest =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if matches!(m.command, Command::Validate(_) | Command::Rerun(_)) {
        return Err(CliError::Config("manifest command cannot be re-run".into()));
    }
    let design = if m.design_toml.is_empty() {
        FiberDesign::table1()
    } else {
        let d = FiberDesign::from_toml_str(&m.design_toml)?;
        let v = d.violations();
        if !v.is_empty() {
            return Err(CliError::Config(format!("{}: {}", path.display(), v.join("; "))));
        }
        d
    };
    let dir = out.unwrap_or_else(|| path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(".")));
    let job = Job {
        command: m.command,
        design,
        targets: m.targets,
    };
    execute(job, m.design_toml, m.design_source, dir, m.plot)
}
