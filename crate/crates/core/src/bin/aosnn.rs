use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use aosnn::config::{parse_grid, RunConfig};
use aosnn::experiment::{self, Checkpoint};
use aosnn::verify::{verify, VerifyOptions};
use aosnn::Error;

/// AO-SNN solver for exterior Helmholtz scattering.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configured experiment.
    Run { config: PathBuf },
    /// Run one experiment per value of a configuration key.
    Sweep {
        config: PathBuf,
        /// Dotted key such as `training.k`, or a short name (K, gamma, bc, M).
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Evaluate a checkpoint on a polar grid.
    ExportField {
        checkpoint: PathBuf,
        /// Grid resolution `<n_r>x<n_theta>`.
        #[arg(long)]
        res: String,
        /// Output file; standard output when omitted.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Run the built-in self-checks.
    Verify {
        #[arg(long, hide = true, allow_negative_numbers = true)]
        corrupt_dtn_mode: Option<i64>,
    },
}

fn exit_code(err: &Error) -> ExitCode {
    if err.is_config() {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut log = |line: &str| eprintln!("{line}");
    let result = match cli.command {
        Command::Run { config } => RunConfig::from_path(&config).and_then(|cfg| {
            let dir = experiment::run_dir(&cfg, &experiment::output_root());
            experiment::run(&cfg, &dir, &mut log).map(|s| {
                if let Some(last) = s.final_record() {
                    println!("relative l2 error {:e} after {} epochs", last.relative_l2, s.total_epochs());
                }
            })
        }),
        Command::Sweep { config, axis, values } => std::fs::read_to_string(&config)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", config.display())))
            .and_then(|text| experiment::sweep(&text, &axis, &values, &experiment::output_root(), &mut log))
            .map(|out| print!("{}", out.aggregate_csv)),
        Command::ExportField { checkpoint, res, output } => parse_grid(&res).and_then(|(n_r, n_t)| {
            let ckpt = Checkpoint::read_file(&checkpoint)?;
            let text = experiment::export_field(&ckpt, n_r, n_t)?;
            match output {
                Some(path) => std::fs::write(&path, text).map_err(Error::Io),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }),
        Command::Verify { corrupt_dtn_mode } => {
            let report = verify(&VerifyOptions { corrupt_dtn_mode });
            println!("{report}");
            if report.passed() {
                Ok(())
            } else {
                return ExitCode::from(1);
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
