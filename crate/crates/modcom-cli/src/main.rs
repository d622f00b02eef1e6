//! Config-driven command-line front end: builds reference models, runs
//! modular-commutator and modular-current computations, and writes
//! deterministic JSON reports (plus optional SVG current maps).
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 verification
//! failure (a checked implication or conservation law did not hold).

mod config;
mod run;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Backend, Computation, Overrides, RunConfig};
use modcom::models::{self, ModelKind};
use run::Failure;

#[derive(Parser)]
#[command(
    name = "modcom",
    version,
    about = "Modular commutator, chiral central charge, and modular current toolkit",
    after_help = "Configuration is TOML (see --config); command-line flags override it.\n\
                  Reports are deterministic: identical config and seed give byte-identical\n\
                  report.json; timestamps and wall time live in report.meta.json."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// TOML run configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Computation backend (default: auto).
    #[arg(long, global = true, value_enum)]
    backend: Option<Backend>,
    /// Seed override for the model generator.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory reports are written into (default: current directory).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Also render current maps as plain SVG.
    #[arg(long, global = true)]
    emit_svg: bool,
    /// Tolerance override, repeatable (keys: markov, floor).
    #[arg(long = "tol", global = true, value_name = "KEY=VAL")]
    tols: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute one scalar quantity on the configured model and geometry.
    Compute {
        #[command(subcommand)]
        what: ComputeWhat,
    },
    /// Full modular-current map on a disk (exact-rational or numeric).
    Current {
        /// Evaluate the exact symbolic calculus (no model required).
        #[arg(long)]
        symbolic: bool,
        /// Disk radius in coarse cells.
        #[arg(long)]
        radius: Option<u32>,
        /// Boundary-cut index for the edge-current field.
        #[arg(long)]
        cut: Option<usize>,
    },
    /// Net modular current through one boundary cut.
    EdgeCurrent {
        /// Evaluate the exact symbolic calculus (no model required).
        #[arg(long)]
        symbolic: bool,
        /// Disk radius in coarse cells.
        #[arg(long)]
        radius: Option<u32>,
        /// Boundary-cut index (counterclockwise from the boundary start).
        #[arg(long)]
        cut: Option<usize>,
    },
    /// Run a verification suite; exits 2 when a checked implication fails.
    Verify {
        #[command(subcommand)]
        what: VerifyWhat,
    },
    /// List or describe the available model kinds.
    Model {
        #[command(subcommand)]
        what: ModelWhat,
    },
}

#[derive(Subcommand)]
enum ComputeWhat {
    /// Modular commutator J(A, B, C).
    J,
    /// Chiral central charge estimate 3 J / pi (reports J as well).
    Ccc,
    /// Tripartite entanglement-entropy combination.
    Tee,
    /// Conditional mutual information I(A : C | B).
    Cmi,
}

#[derive(Subcommand)]
enum VerifyWhat {
    /// Conditional-independence diagnostics on a dense model state.
    Markov,
    /// The same diagnostics on a Gaussian lattice ground state.
    Gaussian,
}

#[derive(Subcommand)]
enum ModelWhat {
    /// List every buildable model kind.
    List,
    /// Describe one model kind: parameters, defaults, invariants.
    Describe {
        /// Kind name as printed by `model list`.
        name: String,
    },
}

fn load_config(path: Option<&PathBuf>) -> Result<RunConfig, Failure> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| Failure {
        code: 1,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    toml::from_str(&text).map_err(|e| Failure {
        code: 1,
        message: format!("malformed config {}: {e}", path.display()),
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    // The catalog commands need no configuration at all.
    if let Command::Model { what } = &cli.command {
        match what {
            ModelWhat::List => {
                for name in models::kind_names() {
                    println!("{name}");
                }
            }
            ModelWhat::Describe { name } => {
                let kind = ModelKind::from_name(name).map_err(|e| Failure {
                    code: 1,
                    message: e.to_string(),
                })?;
                println!("{}", models::describe(kind));
            }
        }
        return Ok(());
    }

    let (computation, symbolic, radius, cut) = match &cli.command {
        Command::Compute { what } => (
            match what {
                ComputeWhat::J => Computation::J,
                ComputeWhat::Ccc => Computation::Ccc,
                ComputeWhat::Tee => Computation::Tee,
                ComputeWhat::Cmi => Computation::Cmi,
            },
            false,
            None,
            None,
        ),
        Command::Current {
            symbolic,
            radius,
            cut,
        } => (Computation::Current, *symbolic, *radius, *cut),
        Command::EdgeCurrent {
            symbolic,
            radius,
            cut,
        } => (Computation::EdgeCurrent, *symbolic, *radius, *cut),
        Command::Verify { what } => (
            match what {
                VerifyWhat::Markov => Computation::VerifyMarkov,
                VerifyWhat::Gaussian => Computation::VerifyGaussian,
            },
            false,
            None,
            None,
        ),
        Command::Model { .. } => unreachable!("handled above"),
    };

    let config = load_config(cli.common.config.as_ref())?;
    if let Some(section) = &config.computation {
        if section.kind != computation {
            return Err(Failure {
                code: 1,
                message: format!(
                    "config requests computation `{}` but the command line invoked `{}`",
                    section.kind.name(),
                    computation.name()
                ),
            });
        }
    }
    let overrides = Overrides {
        backend: cli.common.backend,
        seed: cli.common.seed,
        out: cli.common.out,
        emit_svg: cli.common.emit_svg,
        tols: cli.common.tols,
        radius,
        cut,
        symbolic,
    };
    let resolved = config::resolve(computation, config, overrides).map_err(|message| Failure {
        code: 1,
        message,
    })?;
    run::execute(&resolved)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
