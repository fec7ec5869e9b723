use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use robinfb_cli::run::{self, RunError, EXIT_CERTIFICATE, EXIT_CONFIG, EXIT_OK, SWEEP_HEADER};
use robinfb_cli::{parse_config, RunConfig};

/// Solver and certificate suite for the two-phase Robin free boundary functional.
#[derive(Parser)]
#[command(name = "robinfb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize, run the configured certificates and write report.txt, u.csv and omega.csv.
    Solve { config: PathBuf },
    /// Run the configured certificates on stored fields.
    Certify {
        config: PathBuf,
        #[arg(long)]
        u: PathBuf,
        #[arg(long)]
        omega: PathBuf,
    },
    /// Print the closed-form slab solution and its energy.
    Oracle {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        h: f64,
    },
    /// Compare the min-cut set step with exhaustive enumeration on random 3x4 grids.
    Cutcheck {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Solve over a grid of beta and h values and write sweep.csv.
    Sweep {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        beta_list: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        h_list: Vec<f64>,
    },
}

fn load(path: &Path) -> Result<RunConfig, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
    let mut config = parse_config(&text).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
    if let Some(dir) = std::env::var_os("OUTPUT_DIR").filter(|d| !d.is_empty()) {
        config.output_dir = PathBuf::from(dir);
    }
    Ok(config)
}

fn summarize(outcome: &run::Outcome) {
    if let Some(r) = &outcome.solve {
        println!(
            "final energy {:.12e} (dirichlet {:.6e}, surface {:.6e}), {:?} after {} levels",
            r.final_energy.total,
            r.final_energy.dirichlet,
            r.final_energy.surface,
            r.termination,
            r.eps_levels.len()
        );
    }
    for c in &outcome.certificates {
        println!("{:<22} {:?}", c.name, c.status);
    }
}

fn execute(cli: Cli) -> Result<u8, RunError> {
    match cli.command {
        Command::Solve { config } => {
            let config = load(&config)?;
            let outcome = run::solve(&config)?;
            summarize(&outcome);
            println!("wrote {}", config.output_dir.display());
            Ok(outcome.exit_code)
        }
        Command::Certify { config, u, omega } => {
            let config = load(&config)?;
            let outcome = run::certify(&config, &u, &omega)?;
            summarize(&outcome);
            Ok(outcome.exit_code)
        }
        Command::Oracle { beta, a, h } => {
            print!("{}", run::oracle_table(beta, a, h)?);
            Ok(EXIT_OK)
        }
        Command::Cutcheck { trials, seed } => {
            let c = run::cutcheck(trials, seed)?;
            println!("trials {} mismatches {} max gap {:.3e}", c.trials, c.mismatches, c.max_gap);
            Ok(if c.mismatches == 0 { EXIT_OK } else { EXIT_CERTIFICATE })
        }
        Command::Sweep { config, beta_list, h_list } => {
            let config = load(&config)?;
            let rows = run::sweep(&config, &beta_list, &h_list)?;
            println!("{SWEEP_HEADER}");
            for r in &rows {
                println!("{}", r.to_csv());
            }
            Ok(if rows.iter().all(|r| r.certificates_pass) { EXIT_OK } else { EXIT_CERTIFICATE })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK });
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
