use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mch_cli::report::to_json;
use mch_cli::scenarios::config_base;
use mch_cli::{run_scenario, verify, RunError, ScenarioConfig, Summary, Verdict};

#[derive(Parser)]
#[command(name = "mch", about = "Lagrangian simulator for the modified Camassa-Holm equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write its artifacts.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config's `out`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also emit SVG plots.
        #[arg(long)]
        svg: bool,
    },
    /// Re-check an invariant summary.
    Verify { report: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = std::env::var("MCH_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match cli.command {
        Command::Run { config, out, svg } => {
            let cfg = match ScenarioConfig::load(&config) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("configuration error: {e}");
                    return ExitCode::from(2);
                }
            };
            let dir = cfg.out_dir(out.as_deref());
            match run_scenario(&cfg, config_base(&config).as_deref(), &dir, svg) {
                Ok(summary) => {
                    print!("{}", to_json(&summary));
                    if summary.passed {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e @ RunError::Config(_)) => {
                    eprintln!("{e}");
                    ExitCode::from(2)
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Verify { report } => {
            let text = match std::fs::read_to_string(&report) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("{}: {e}", report.display());
                    return ExitCode::from(2);
                }
            };
            let summary: Summary = match serde_json::from_str(&text) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("malformed summary: {e}");
                    return ExitCode::from(2);
                }
            };
            match verify(&summary) {
                Verdict::Pass => {
                    println!("PASS {} ({} checks)", summary.scenario, summary.checks.len());
                    ExitCode::SUCCESS
                }
                Verdict::Fail(problems) => {
                    for p in problems {
                        println!("FAIL {p}");
                    }
                    ExitCode::from(1)
                }
            }
        }
    }
}
