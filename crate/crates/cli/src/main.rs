use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use eckart_cli::config::{Profile, Scenario};
use eckart_cli::{figures, scenario, verify, write_artifacts, CliError};

#[derive(Parser)]
#[command(name = "eckart", version, about = "Wave-packet scattering on Eckart potentials")]
struct Cli {
    /// Directory receiving the CSV files.
    #[arg(long, global = true, env = "ECKART_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    /// Resolution and default tolerances.
    #[arg(long, global = true, value_enum, default_value = "fast")]
    tolerance_profile: Profile,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the computations listed in a scenario file.
    Run { config: PathBuf },
    /// Reproduce a figure from its built-in preset.
    Figure { name: String },
    /// Cross-check a scenario against the oracles.
    Verify { config: PathBuf },
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run { config } => {
            let sc = Scenario::load(config, cli.tolerance_profile)?;
            let out = scenario::run(&sc)?;
            write_artifacts(&cli.out_dir, &out.artifacts)?;
            for a in &out.artifacts {
                println!("wrote {}", cli.out_dir.join(&a.file_name).display());
            }
            if !out.failed_checks.is_empty() {
                return Err(CliError::Numerical(format!("oracle checks failed: {}", out.failed_checks.join(", "))));
            }
        }
        Command::Figure { name } => {
            let out = figures::reproduce(name, cli.tolerance_profile)?;
            write_artifacts(&cli.out_dir, &out.artifacts)?;
            for c in &out.checks {
                let verdict = if c.passes() { "ok" } else { "MISMATCH" };
                println!("{name} {}: {:.6} (caption {} +- {}) {verdict}", c.name, c.value, c.expected, c.tolerance);
            }
            let failed = out.failed();
            if !failed.is_empty() {
                let names: Vec<&str> = failed.iter().map(|c| c.name.as_str()).collect();
                return Err(CliError::Numerical(format!("{name}: caption values not reproduced: {}", names.join(", "))));
            }
        }
        Command::Verify { config } => {
            let sc = Scenario::load(config, cli.tolerance_profile)?;
            let v = verify::verify(&sc)?;
            write_artifacts(&cli.out_dir, &[v.artifact(&sc.name)])?;
            for (r, tol) in v.reports.iter().zip(&v.tolerances) {
                let verdict = if r.passes(*tol) { "ok" } else { "FAIL" };
                println!("{}: rel {:.3e} (tol {tol:.1e}) {verdict}", r.quantity, r.rel_diff);
            }
            for s in &v.skipped {
                println!("skipped {s}");
            }
            let failed = v.failed();
            if !failed.is_empty() {
                let names: Vec<&str> = failed.iter().map(|r| r.quantity.as_str()).collect();
                return Err(CliError::Numerical(format!("verification failed: {}", names.join(", "))));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("eckart: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("eckart: cannot start {n} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("eckart: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
