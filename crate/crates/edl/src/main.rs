//! Command-line entry point. Exit codes: 0 all checks pass, 1 check
//! failure, 2 configuration error, 3 numerical non-convergence.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use edl::config::ExperimentConfig;
use edl::error::{EdlError, Result};
use edl::runner;

#[derive(Parser)]
#[command(name = "edl", version, about = "Elliptic decay laboratory on truncated exterior domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `output` field or `.`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Refine the configured grid by an integer factor.
    #[arg(long, default_value_t = 1)]
    grid_scale: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem and export the solution field.
    Solve(RunArgs),
    /// Run the full verification suite (assumptions, topology, identities).
    Verify {
        #[command(flatten)]
        run: RunArgs,
        /// Continue past failing assumption checks.
        #[arg(long)]
        force: bool,
    },
    /// Compute Lorentz norms and the fitted decay exponent.
    Decay(RunArgs),
    /// Aggregate verify/decay outputs in a run directory into one report.
    Report {
        /// Run directory holding verify.json and/or decay.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Expand the config's sweep lists and run every combination.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Parallel worker count.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Continue past failing assumption checks.
        #[arg(long)]
        force: bool,
    },
}

fn load(run: &RunArgs) -> Result<(ExperimentConfig, PathBuf, String)> {
    let text = std::fs::read_to_string(&run.config).map_err(|e| {
        EdlError::MissingInput(format!("config file {}: {e}", run.config.display()))
    })?;
    let mut cfg = ExperimentConfig::from_str(&text)?;
    if run.grid_scale == 0 {
        return Err(EdlError::Config("--grid-scale must be at least 1".into()));
    }
    if run.grid_scale > 1 {
        cfg = cfg.with_grid_scale(run.grid_scale);
    }
    let out = run
        .out
        .clone()
        .or_else(|| cfg.output.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((cfg, out, text))
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(run) => {
            let (cfg, out, text) = load(&run)?;
            let files = runner::run_solve(&cfg, &out, &text)?;
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Verify { run, force } => {
            let (cfg, out, text) = load(&run)?;
            let summary = runner::run_verify(&cfg, &out, force, &text)?;
            println!(
                "verify {}: {} records, topology violations {}, all_pass = {}",
                summary.family,
                summary.records.len(),
                summary.topology_violations,
                summary.all_pass
            );
            if summary.all_pass {
                Ok(())
            } else {
                Err(EdlError::CheckFailure(format!(
                    "verification failed for {}; see {}",
                    summary.family,
                    out.join("verify.json").display()
                )))
            }
        }
        Command::Decay(run) => {
            let (cfg, out, text) = load(&run)?;
            let summary = runner::run_decay(&cfg, &out, &text)?;
            if let Some(w) = &summary.weak_norm {
                println!("weak L^({},inf) norm = {:.6e}", summary.p, w.value);
            }
            for f in &summary.finite_norms {
                println!(
                    "L^({},{}) norm = {:.6e}{}",
                    summary.p,
                    f.q,
                    f.value,
                    if f.divergence_trend {
                        " (divergence trend)"
                    } else {
                        ""
                    }
                );
            }
            if let Some(d) = &summary.decay {
                println!(
                    "fitted exponent {:.4} (target {:.4}); little-o {}, big-O {}{}",
                    d.exponent,
                    2.0 / summary.p,
                    d.little_o,
                    d.big_o,
                    if summary.no_decay_in_window {
                        "; no decay within window"
                    } else {
                        ""
                    }
                );
            }
            Ok(())
        }
        Command::Report { out } => {
            let table = runner::run_report(&out)?;
            print!("{table}");
            Ok(())
        }
        Command::Sweep { run, jobs, force } => {
            let (cfg, out, text) = load(&run)?;
            let entries = runner::run_sweep(&cfg, &out, jobs, force, &text)?;
            let mut failed = Vec::new();
            for e in &entries {
                println!(
                    "{}: {}{}",
                    e.label,
                    if e.pass { "pass" } else { "FAIL" },
                    e.error.as_deref().map(|m| format!(" ({m})")).unwrap_or_default()
                );
                if !e.pass {
                    failed.push(e.label.clone());
                }
            }
            if failed.is_empty() {
                Ok(())
            } else {
                Err(EdlError::CheckFailure(format!(
                    "sweep combinations failed: {}",
                    failed.join(", ")
                )))
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EDL_LOG", "warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let EdlError::NonConvergence { history, .. } = &e {
                for (i, r) in history.iter().enumerate() {
                    eprintln!("  residual[{i}] = {r:.6e}");
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
