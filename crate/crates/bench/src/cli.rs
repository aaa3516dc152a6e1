//! Command-line interface.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use omks_core::data::{gen_lowerbound, parse_libsvm, write_libsvm};

use crate::config::ExperimentConfig;
use crate::error::BenchError;
use crate::runner;

#[derive(Debug, Parser)]
#[command(
    name = "omks",
    version,
    about = "Online multi-kernel classification under a memory budget"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config and write a CSV report.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output path.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Generate a synthetic dataset.
    Datagen {
        #[command(subcommand)]
        kind: Datagen,
    },
    /// Print the size and dimension of a LIBSVM dataset.
    Inspect { dataset: PathBuf },
}

#[derive(Debug, Subcommand)]
enum Datagen {
    /// Adversarial stream for a learner keeping at most B examples.
    Lowerbound {
        #[arg(long)]
        budget: usize,
        #[arg(long)]
        rounds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Runs the CLI and returns the process exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    match execute(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), BenchError> {
    let io = |path: PathBuf| move |source| BenchError::Io { path, source };
    match cmd {
        Command::Run { config, output } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if output.is_some() {
                cfg.output = output;
            }
            let report = runner::run(&cfg)?;
            match &cfg.output {
                Some(path) => {
                    let file = std::fs::File::create(path).map_err(io(path.clone()))?;
                    report.write_csv(std::io::BufWriter::new(file))?;
                }
                None => report.write_csv(&mut *stdout)?,
            }
            if let Some(best) = report.best() {
                let _ = writeln!(
                    stderr,
                    "best: {} on {} (T={}): AMR {:.4}% over {} repeats",
                    best.algorithm, best.dataset, best.rounds, best.amr_percent, cfg.repeats
                );
            }
            match report.failures() {
                0 => Ok(()),
                n => Err(BenchError::FailedRepeats(n)),
            }
        }
        Command::Datagen {
            kind:
                Datagen::Lowerbound {
                    budget,
                    rounds,
                    seed,
                    out,
                },
        } => {
            let ds = gen_lowerbound(budget, rounds, seed)
                .map_err(|e| BenchError::Config(e.to_string()))?;
            write_libsvm(&ds, &out)?;
            let _ = writeln!(
                stdout,
                "wrote {} (T={}, d={})",
                out.display(),
                ds.len(),
                ds.dim
            );
            Ok(())
        }
        Command::Inspect { dataset } => {
            let ds = parse_libsvm(&dataset).map_err(BenchError::Dataset)?;
            let _ = writeln!(stdout, "T={}", ds.len());
            let _ = writeln!(stdout, "d={}", ds.dim);
            let _ = writeln!(stdout, "positives={}", ds.positives());
            Ok(())
        }
    }
}
