use clap::{Parser, Subcommand};
use roughlab::error::Error;
use roughlab::experiment::config::{ExperimentConfig, OUTPUT_ROOT_ENV};
use roughlab::experiment::plotdata::plotdata;
use roughlab::experiment::runner::{expand_cells, format_cells, run_file, RunOptions};
use roughlab::experiment::summary::Verdict;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "roughlab", version, about = "Sweeps homogenization checks over rough boundary families")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (family, ε, seed) cell of a TOML configuration.
    #[command(after_help = format!("Relative output_dir values resolve under ${OUTPUT_ROOT_ENV} when it is set."))]
    Run {
        config: PathBuf,
        /// Worker threads; overrides the configuration.
        #[arg(long)]
        workers: Option<usize>,
        /// Validate and print the cell matrix without solving.
        #[arg(long)]
        dry_run: bool,
    },
    /// Write plot series for a finished run directory.
    Plotdata { dir: PathBuf },
}

fn report(e: &Error) -> ExitCode {
    match e {
        Error::Parse { path, line, column, message } => eprintln!("{}:{line}:{column}: {message}", path.display()),
        other => eprintln!("error: {other}"),
    }
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Run { config, workers, dry_run } => {
            if dry_run {
                let cfg = match ExperimentConfig::load(&config).and_then(|c| c.validate().map(|_| c)) {
                    Ok(c) => c,
                    Err(e) => return report(&e),
                };
                print!("{}", format_cells(&expand_cells(&cfg)));
                println!("output: {}", cfg.resolved_output_dir().display());
                return ExitCode::SUCCESS;
            }
            match run_file(&config, &RunOptions { workers }) {
                Ok(rep) => {
                    for w in &rep.manifest.warnings {
                        log::warn!("{w}");
                    }
                    for fam in &rep.summary.families {
                        for c in &fam.checks {
                            let v = if c.verdict == Verdict::Pass { "PASS" } else { "FAIL" };
                            println!("{v} {} {} {}={:.4}", fam.name, c.check, c.constant, c.statistic);
                        }
                    }
                    println!("wrote {}", rep.output_dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => report(&e),
            }
        }
        Command::Plotdata { dir } => match plotdata(&dir) {
            Ok(files) => {
                for f in files {
                    println!("{}", f.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => report(&e),
        },
    }
}
