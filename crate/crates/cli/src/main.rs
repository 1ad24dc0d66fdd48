use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use ncg_core::{load_scenario, run_scenario, verify_path, Preset, Report, ScenarioError};

#[derive(Parser)]
#[command(
    name = "ncg",
    version,
    about = "Levi-Civita connections and curvature on noncommutative calculi"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the connection, curvature and residual report for scenarios.
    Compute(ComputeArgs),
    /// Exit 0 if every residual and path agreement holds, 1 if not, 2 on bad input.
    Verify {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// List the built-in presets.
    Presets,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Json,
    Table,
}

#[derive(Args)]
struct ComputeArgs {
    #[arg(long, conflicts_with = "batch", required_unless_present = "batch")]
    scenario: Option<PathBuf>,
    /// Directory of *.json scenarios.
    #[arg(long)]
    batch: Option<PathBuf>,
    /// Output file, or output directory in batch mode.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Shorthand for --format table.
    #[arg(long)]
    table: bool,
    /// Worker threads for batch mode.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => report.to_json_string(),
        Format::Table => report.table.clone(),
    }
}

fn compute_one(path: &Path) -> Result<Report, ScenarioError> {
    run_scenario(&load_scenario(path)?)
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<(), String> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => match std::io::stdout().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(format!("cannot write to stdout: {e}")),
            _ => Ok(()),
        },
    }
}

fn compute(args: ComputeArgs) -> ExitCode {
    let format = if args.table { Format::Table } else { args.format };
    if let Some(path) = &args.scenario {
        return match compute_one(path) {
            Ok(report) => match write_or_print(args.out.as_deref(), &render(&report, format)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            },
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        };
    }

    let dir = args.batch.expect("clap enforces --scenario or --batch");
    let mut files: Vec<PathBuf> = match fs::read_dir(&dir) {
        Ok(rd) => rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect(),
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", dir.display());
            return ExitCode::from(2);
        }
    };
    files.sort();
    if let Some(out) = &args.out {
        if let Err(e) = fs::create_dir_all(out) {
            eprintln!("error: cannot create {}: {e}", out.display());
            return ExitCode::from(2);
        }
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(args.jobs.max(1)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    // results come back in file order whatever the schedule
    let results: Vec<(PathBuf, Result<Report, ScenarioError>)> =
        pool.install(|| files.par_iter().map(|p| (p.clone(), compute_one(p))).collect());

    let ext = if format == Format::Json {
        "report.json"
    } else {
        "report.txt"
    };
    let mut failed = false;
    for (path, result) in results {
        match result {
            Ok(report) => {
                let text = render(&report, format);
                let target = args.out.as_ref().map(|o| {
                    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
                    o.join(format!("{stem}.{ext}"))
                });
                if let Err(e) = write_or_print(target.as_deref(), &text) {
                    eprintln!("error: {e}");
                    failed = true;
                }
            }
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                failed = true;
            }
        }
    }
    if failed {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Compute(args) => compute(args),
        Command::Verify { scenario } => {
            let status = verify_path(&scenario);
            for line in &status.summary {
                println!("{line}");
            }
            ExitCode::from(status.code as u8)
        }
        Command::Presets => {
            for p in Preset::ALL {
                println!("{:<18} {}", p.name(), p.description());
            }
            ExitCode::SUCCESS
        }
    }
}
