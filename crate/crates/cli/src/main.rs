use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ellipspin_cli::verify::{self, Suite, VERIFY_TOL};
use ellipspin_cli::{commands, exit, CliError};

#[derive(Parser)]
#[command(
    name = "ellipspin",
    version,
    about = "Spin-1/2 dynamics in elliptically modulated fields"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one scenario and write its trajectory CSV.
    Simulate {
        config: PathBuf,
        /// Write the CSV here instead of standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a parameter grid and write flip probabilities as CSV.
    Sweep {
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the self-verification suites.
    Verify {
        #[arg(default_value = "all")]
        suite: Suite,
        /// ODE tolerance used by the checks.
        #[arg(long, default_value_t = VERIFY_TOL)]
        tol: f64,
    },
    /// Tabulate sn, cn, dn and am on a uniform grid over [0, u_max].
    EllipticTable {
        k: f64,
        u_max: f64,
        n: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Simulate { config, output } => {
            let out = commands::simulate(&config)?;
            eprint!("{}", out.report);
            commands::emit(&out.csv, output.as_deref())?;
        }
        Command::Sweep { config, output } => {
            let csv = commands::sweep(&config)?;
            commands::emit(&csv, output.as_deref())?;
        }
        Command::Verify { suite, tol } => {
            let report = verify::run(suite, tol)?;
            print!("{report}");
            if !report.passed() {
                return Ok(exit::VERIFICATION_FAILED);
            }
        }
        Command::EllipticTable {
            k,
            u_max,
            n,
            output,
        } => {
            let csv = commands::elliptic_table(k, u_max, n)?;
            commands::emit(&csv, output.as_deref())?;
        }
    }
    Ok(exit::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
