//! Command-line front end: simulate, certify, sweep and plot scenarios.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use delaystab::scenario::{self, ScenarioError};

#[derive(Parser)]
#[command(name = "delaystab", version, about = "Intermittently delayed damping: simulation and stability certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// directory for output files
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// worker threads for sweeps
    #[arg(long, global = true, env = "DELAYSTAB_WORKERS")]
    workers: Option<usize>,
    /// omit the metadata header line from CSV output
    #[arg(long, global = true)]
    no_metadata: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write the energy trace.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check the stability hypotheses and print the certificate.
    Certify {
        #[arg(long)]
        config: PathBuf,
        /// print the JSON report instead of the table
        #[arg(long)]
        json: bool,
    },
    /// Tabulate observability constants against the horizon.
    Observability {
        #[arg(long)]
        config: PathBuf,
    },
    /// Certify every point of the scenario's parameter grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write plot scripts for a trace CSV.
    Plots {
        /// trace CSV; defaults to `<out-dir>/trace.csv`
        #[arg(long)]
        trace: Option<PathBuf>,
        /// scenario whose trace should be plotted; only the output name is used
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<i32, ScenarioError> {
    let out = &cli.out_dir;
    match cli.command {
        Command::Simulate { config } => {
            let (summary, written) = scenario::run_simulate(&config, out, !cli.no_metadata)?;
            print!("{summary}");
            for p in written.paths {
                println!("wrote {}", p.display());
            }
            Ok(0)
        }
        Command::Certify { config, json } => {
            let (report, written) = scenario::run_certify(&config, out)?;
            if json {
                println!("{}", report.to_json());
            } else {
                print!("{report}");
            }
            for p in written.paths {
                println!("wrote {}", p.display());
            }
            Ok(report.exit_code())
        }
        Command::Observability { config } => {
            let written = scenario::run_observability(&config, out)?;
            for p in written.paths {
                println!("wrote {}", p.display());
            }
            Ok(0)
        }
        Command::Sweep { config } => {
            let (table, written) = scenario::run_sweep(&config, out, cli.workers)?;
            let errors = table.rows.iter().filter(|r| r.verdict == "ERROR").count();
            println!("{} grid points, {} errors", table.rows.len(), errors);
            for p in written.paths {
                println!("wrote {}", p.display());
            }
            Ok(0)
        }
        Command::Plots { trace, config } => {
            let trace = match (trace, config) {
                (Some(t), _) => t,
                (None, Some(c)) => out.join(scenario::load_scenario(&c)?.output.trace),
                (None, None) => out.join("trace.csv"),
            };
            let written = scenario::emit_plots(&trace, out)?;
            for p in written.paths {
                println!("wrote {}", p.display());
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
