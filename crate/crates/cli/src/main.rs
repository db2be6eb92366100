use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use germlab::experiments::{self, Scenario, EXIT_ERROR};
use germlab::{GermError, Result};

#[derive(Parser)]
#[command(name = "germlab", version, about = "Separating-set experiments on singular germs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a catalog entry and print the JSON report.
    Run {
        /// Path to a scenario TOML file, or a catalog name such as `brieskorn:2,4,5`.
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for CSV density tables.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// List the built-in scenarios.
    Catalog,
}

fn load(arg: &str) -> Result<Scenario> {
    let path = Path::new(arg);
    if path.extension().is_some_and(|e| e == "toml") || path.is_file() {
        let src = std::fs::read_to_string(path)?;
        experiments::parse_scenario(&src)
    } else {
        experiments::catalog_scenario(arg)
    }
}

fn run(scenario: &str, seed: Option<u64>, out: Option<&Path>, csv: Option<&Path>) -> Result<i32> {
    let mut s = load(scenario)?;
    if let Some(seed) = seed {
        s.seed = seed;
    }
    let report = experiments::run_scenario(&s)?;
    let json = report.to_json()?;
    match out {
        Some(p) => std::fs::write(p, json + "\n")?,
        None => println!("{}", json),
    }
    if let Some(dir) = csv {
        for p in report.write_csv(dir)? {
            eprintln!("wrote {}", p.display());
        }
    }
    eprintln!("{}: {:?} ({:?})", report.scenario, report.verdict, report.outcome);
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Catalog => {
            for (name, about) in experiments::catalog() {
                println!("{:<18} {}", name, about);
            }
            ExitCode::SUCCESS
        }
        Command::Run { scenario, seed, out, csv } => match run(&scenario, seed, out.as_deref(), csv.as_deref()) {
            Ok(code) => ExitCode::from(code as u8),
            Err(e) => {
                report_error(&e);
                ExitCode::from(EXIT_ERROR as u8)
            }
        },
    }
}

fn report_error(e: &GermError) {
    eprintln!("error: {}", e);
}
