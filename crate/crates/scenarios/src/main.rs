use std::path::PathBuf;
use std::process::ExitCode;

use chlab::{catalog, default_config, emit_report, run_scenario, ScenarioConfig, ScenarioError, CATALOG};
use clap::{Parser, Subcommand};

/// Numerical checks of total Gauss-Kronecker curvature in model spaces.
#[derive(Parser)]
#[command(name = "chlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one catalog scenario and write its report.
    Run {
        scenario: String,
        /// JSON config; the scenario's default config when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory; defaults to the config's `output` or
        /// `chlab-out/<scenario>`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the catalog.
    List,
    /// Print a scenario's default config.
    Config { scenario: String },
    /// Print the tool version.
    Version,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<u8, ScenarioError> {
    match command {
        Command::List => {
            for e in CATALOG {
                println!("{:<22} {}\n{:<22} claim: {}", e.name, e.summary, "", e.claim);
            }
            Ok(0)
        }
        Command::Version => {
            println!("chlab {}", env!("CARGO_PKG_VERSION"));
            Ok(0)
        }
        Command::Config { scenario } => {
            let cfg = default_config(&scenario)
                .ok_or_else(|| ScenarioError::InvalidConfig(format!("unknown scenario '{scenario}'")))?;
            println!("{}", cfg.to_json());
            Ok(0)
        }
        Command::Run { scenario, config, out } => {
            if catalog::find(&scenario).is_none() {
                return Err(ScenarioError::InvalidConfig(format!("unknown scenario '{scenario}'")));
            }
            let cfg = match config {
                Some(path) => ScenarioConfig::load(&path)?,
                None => default_config(&scenario).expect("catalog entries have defaults"),
            };
            if cfg.scenario != scenario {
                return Err(ScenarioError::InvalidConfig(format!(
                    "config is for '{}', not '{scenario}'",
                    cfg.scenario
                )));
            }
            let report = run_scenario(&cfg)?;
            let dir = out
                .or_else(|| cfg.output.clone())
                .unwrap_or_else(|| PathBuf::from("chlab-out").join(&scenario));
            emit_report(&report, &dir)?;
            for c in &report.checks {
                let mark = if c.passed { "pass" } else { "FAIL" };
                println!("{mark}  {:<40} {:.6e} {} {:.6e}", c.name, c.value, c.op, c.threshold);
            }
            println!(
                "{}: {} in {:.1} s, report in {}",
                scenario,
                if report.passed { "passed" } else { "failed" },
                report.elapsed_seconds,
                dir.display()
            );
            Ok(if report.passed { 0 } else { 1 })
        }
    }
}
