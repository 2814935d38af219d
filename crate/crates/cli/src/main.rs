use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use pairsim_cli::commands::{self, Outcome};
use pairsim_cli::error::{EXIT_OK, EXIT_VERIFICATION};
use pairsim_cli::verify::{run_verify, VerifyOptions};
use pairsim_cli::{CliError, ExperimentConfig, PathKind};

#[derive(Parser)]
#[command(name = "pairsim", version, about = "NMR emulation of the pairing Hamiltonian")]
struct Args {
    /// `key = value` experiment configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the config's evolution path.
    #[arg(long, global = true, value_enum)]
    path: Option<PathArg>,

    /// Overrides the config's output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PathArg {
    Exact,
    Compiled,
    Trotter,
}

#[derive(Subcommand)]
enum Command {
    /// Exact spectrum and one-pair splitting.
    Diag,
    /// Pulse program for one evolution time, plus a duration report.
    Compile {
        /// Simulated evolution time, seconds.
        #[arg(long, allow_negative_numbers = true)]
        tau: f64,
    },
    /// Amplitude of the observed line over the tau grid.
    Sweep,
    /// Second transform, peaks and splitting, from a sweep or an amplitude CSV.
    Spectrum {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Emulation checks against the exact oracle.
    Verify {
        #[arg(long, hide = true)]
        negate_coupling: bool,
    },
}

fn effective_config(args: &Args) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match (&args.config, &args.command) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Command::Spectrum { input: Some(input) }) => {
            commands::load_series(input)?.1.unwrap_or_default()
        }
        (None, _) => ExperimentConfig::default(),
    };
    if let Some(p) = args.path {
        cfg.path = match p {
            PathArg::Exact => PathKind::Exact,
            PathArg::Compiled => PathKind::Compiled,
            PathArg::Trotter => PathKind::Trotter,
        };
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn run(args: &Args) -> Result<Outcome, CliError> {
    let cfg = effective_config(args)?;
    match &args.command {
        Command::Diag => commands::run_diag(&cfg),
        Command::Compile { tau } => commands::run_compile(&cfg, *tau),
        Command::Sweep => commands::run_sweep(&cfg),
        Command::Spectrum { input } => commands::run_spectrum(&cfg, input.as_deref()),
        Command::Verify { negate_coupling } => run_verify(
            &cfg,
            VerifyOptions {
                negate_coupling: *negate_coupling,
            },
        ),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = match run(&args) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.passed {
                EXIT_OK
            } else {
                EXIT_VERIFICATION
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(hint) = e.directive() {
                eprintln!("hint: {hint}");
            }
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
