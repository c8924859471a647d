use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use srptlab::experiment::{self, EmitKind, ExperimentConfig};

#[derive(Parser)]
#[command(name = "srptlab", version, about = "SRPT queue simulation laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a JSON config and emit artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for replications (results do not depend on this).
        #[arg(long)]
        threads: Option<usize>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Artifact kinds to emit.
        #[arg(long, value_delimiter = ',')]
        emit: Option<Vec<EmitKind>>,
    },
    /// Check the heavy-traffic assumptions of a config's ladder.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the exact hand-simulation scenarios as event logs.
    Demo,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            seed,
            threads,
            out,
            emit,
        } => (|| {
            let mut cfg = ExperimentConfig::from_json_file(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = threads {
                cfg.threads = Some(t);
            }
            if let Some(o) = out {
                cfg.out_dir = Some(o);
            }
            if let Some(e) = emit {
                cfg.emit = e;
            }
            let output = experiment::run(&cfg)?;
            println!("{}", output.report);
            for f in &output.files {
                println!("wrote {}", f.display());
            }
            Ok(())
        })(),
        Command::Validate { config } => (|| {
            let cfg = ExperimentConfig::from_json_file(&config)?;
            let report = experiment::validate_only(&cfg)?;
            print!("{report}");
            if !report.all_pass() {
                return Err(srptlab::Error::Config(
                    "assumption checks failed".into(),
                ));
            }
            Ok(())
        })(),
        Command::Demo => experiment::demo().map(|text| print!("{text}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(experiment::exit_code(&e) as u8)
        }
    }
}
