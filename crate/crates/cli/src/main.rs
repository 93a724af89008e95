//! `veritest`: discernment checks, authentication rates, virtual values and
//! verified mechanisms from TOML environment documents.
//!
//! Exit codes: 0 when the check holds, 1 when it does not, 2 on bad input.

mod commands;
mod document;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use veritest_core::harness::ProfileShape;

use commands::{Settings, Verdict};

#[derive(Parser)]
#[command(name = "veritest", version, about = "Mechanism design with probabilistic verification")]
struct Cli {
    /// Grid resolution for continuous type spaces.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Tolerance for incentive and canonical-form checks.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed for random profiles.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for parallel checks.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for written artifacts.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MechanismArg {
    Pricing,
    Sale,
    Auction,
}

impl MechanismArg {
    fn name(self) -> &'static str {
        match self {
            MechanismArg::Pricing => "pricing",
            MechanismArg::Sale => "sale",
            MechanismArg::Auction => "auction",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compare two tests at a type, or print the full relation table.
    CheckDiscernment {
        doc: PathBuf,
        #[arg(long = "type")]
        theta: Option<String>,
        #[arg(long)]
        tau: Option<String>,
        #[arg(long)]
        psi: Option<String>,
    },
    /// Virtual values on a grid, one column per constant precision.
    VirtualValue {
        doc: PathBuf,
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
    },
    /// Solve for the revenue-maximizing mechanism and check it.
    Solve { doc: PathBuf, mechanism: MechanismArg },
    /// Recheck a mechanism CSV against a document.
    Verify { doc: PathBuf, mechanism: PathBuf },
    /// Check that finite authentication rates are most discerning.
    ValidateAlpha { doc: PathBuf },
    /// Rewrite a finite profile in direct, truthful, full-effort form.
    Canonicalize { doc: PathBuf },
    /// Write a random equilibrium profile document.
    RandomProfile {
        #[arg(long, default_value_t = 3)]
        types: usize,
        #[arg(long, default_value_t = 3)]
        messages: usize,
        #[arg(long, default_value_t = 3)]
        tests: usize,
        #[arg(long, default_value_t = 2)]
        decisions: usize,
    },
}

fn run(cli: Cli) -> anyhow::Result<Verdict> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let settings = Settings { grid: cli.grid, tol: cli.tol, seed: cli.seed, output: cli.output };
    match cli.command {
        Command::CheckDiscernment { doc, theta, tau, psi } => {
            commands::check_discernment(&doc, theta.as_deref(), tau.as_deref(), psi.as_deref())
        }
        Command::VirtualValue { doc, lambdas } => commands::virtual_value(&doc, lambdas, &settings),
        Command::Solve { doc, mechanism } => commands::solve(&doc, mechanism.name(), &settings),
        Command::Verify { doc, mechanism } => commands::verify(&doc, &mechanism, &settings),
        Command::ValidateAlpha { doc } => commands::validate_alpha(&doc),
        Command::Canonicalize { doc } => commands::canonicalize_profile(&doc, &settings),
        Command::RandomProfile { types, messages, tests, decisions } => {
            commands::random_profile(ProfileShape { types, messages, tests, decisions }, &settings)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VERITEST_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
