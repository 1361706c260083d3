//! Command-line front end: parameter ingestion, command dispatch, and
//! CSV/JSON emission for the solver and its verification suites.
//!
//! Exit codes: 0 on success/pass, 1 on input errors (bad files, infeasible
//! parameters, inapplicable witnesses), 2 on verification failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use mdxgame::adversary::{optimal_response, saddle_check, termination_time};
use mdxgame::collapse::{effective_params, verify_collapse, MulticlassParams};
use mdxgame::engine::{divergence_witness, evaluate_original, nojump_witness, DoNothing, Strategy};
use mdxgame::skorohod::barrier_strategy;
use mdxgame::value::{bellman_residual, free_boundary, value_table};
use mdxgame::{ControlPair, Error, GameParams};

/// Verification failures exit with this code; input errors exit with 1.
const EXIT_VERIFY_FAILED: u8 = 2;

#[derive(Parser)]
#[command(name = "mdxgame", version, about = "Free-boundary game solver and verification toolkit")]
struct RunConfig {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ParamsArg {
    /// Game parameters JSON: {"y":..,"c1":..,"c2":..,"r":..,"D":..,"h":{..}}
    #[arg(long)]
    params: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the free boundary and tabulate the value function.
    Solve {
        #[command(flatten)]
        params: ParamsArg,
        /// CSV output path for the value table
        #[arg(long)]
        out: Option<PathBuf>,
        /// number of grid points
        #[arg(long, default_value_t = 101)]
        grid: usize,
    },
    /// Run a bundled verification suite.
    Verify {
        #[command(subcommand)]
        check: VerifyCommand,
    },
    /// Evaluate the game cost for a perturbation against a strategy.
    Simulate {
        #[command(flatten)]
        params: ParamsArg,
        /// initial state
        #[arg(long)]
        x: f64,
        /// evaluation horizon
        #[arg(long = "T")]
        t: f64,
        /// strategy: "barrier:beta0", "barrier:LEVEL", "zero", or "none"
        #[arg(long, default_value = "barrier:beta0")]
        strategy: String,
        /// perturbation pair JSON: {"psi1":{..},"psi2":{..}}; zero if omitted
        #[arg(long)]
        psi: Option<PathBuf>,
    },
    /// Compute the adversary's optimal response and termination time.
    Adversary {
        #[command(flatten)]
        params: ParamsArg,
        #[arg(long)]
        x: f64,
        /// start-up delay (required at the degenerate corner)
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        /// CSV output path for the response path
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Adversarial witnesses.
    Witness {
        #[command(subcommand)]
        kind: WitnessCommand,
    },
    /// Saddle-point check: optimal response versus random rejections.
    Saddle {
        #[command(flatten)]
        params: ParamsArg,
        #[arg(long)]
        x: f64,
        #[arg(long, default_value_t = 500)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Reduce multiclass parameters to the one-dimensional game.
    Collapse {
        /// multiclass JSON: {"classes":[{"lambda":..,"mu":..,...}]}
        #[arg(long)]
        params: PathBuf,
        /// CSV output path for the effective holding-cost knots
        #[arg(long)]
        out: Option<PathBuf>,
        /// when positive, also run the reduction identity checks
        #[arg(long, default_value_t = 0)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Bellman residuals of the explicit solution on a grid.
    Bellman {
        #[command(flatten)]
        params: ParamsArg,
        #[arg(long, default_value_t = 1001)]
        grid: usize,
        /// residual tolerance
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
}

#[derive(Subcommand)]
enum WitnessCommand {
    /// Linear-growth lower bound under the constant-slope control.
    Diverge {
        #[command(flatten)]
        params: ParamsArg,
        #[arg(long)]
        x: f64,
        #[arg(long = "T")]
        t: f64,
        #[arg(long, default_value = "zero")]
        strategy: String,
    },
    /// Suboptimality of strategies that do not reject immediately.
    Nojump {
        #[command(flatten)]
        params: ParamsArg,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value = "none")]
        strategy: String,
    },
}

fn main() -> ExitCode {
    configure_threads();
    let config = RunConfig::parse();
    match run_command(config) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// Caps the internal thread pool from `MDXGAME_THREADS` when set.
fn configure_threads() {
    if let Ok(v) = std::env::var("MDXGAME_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
}

fn load_game(path: &Path) -> Result<GameParams, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_multiclass(path: &Path) -> Result<MulticlassParams, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_psi(path: &Path) -> Result<ControlPair, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Parses the strategy selector: `barrier:beta0`, `barrier:<level>`,
/// `zero` (the 0-barrier), or `none` (never idle, never reject).
fn parse_strategy(spec: &str, params: &GameParams) -> Result<Box<dyn Strategy>, String> {
    match spec {
        "none" => Ok(Box::new(DoNothing)),
        "zero" => Ok(Box::new(barrier_strategy(0.0, params).map_err(|e| e.to_string())?)),
        other => {
            let level = other
                .strip_prefix("barrier:")
                .ok_or_else(|| format!("unknown strategy '{other}' (use barrier:<level>, barrier:beta0, zero, none)"))?;
            let beta = if level == "beta0" {
                free_boundary(params).map_err(|e| e.to_string())?.beta0
            } else {
                level.parse::<f64>().map_err(|e| format!("bad barrier level '{level}': {e}"))?
            };
            Ok(Box::new(barrier_strategy(beta, params).map_err(|e| e.to_string())?))
        }
    }
}

fn write_out(path: &Path, contents: &str) -> Result<(), String> {
    fs::write(path, contents).map_err(|e| format!("{}: {e}", path.display()))
}

fn run_command(config: RunConfig) -> Result<u8, String> {
    match config.command {
        Command::Solve { params, out, grid } => {
            if grid < 2 {
                return Err(format!("grid size {grid} must be >= 2"));
            }
            let game = load_game(&params.params)?;
            let fb = free_boundary(&game).map_err(|e| e.to_string())?;
            let table = value_table(&game, grid).map_err(|e| e.to_string())?;
            println!("{}", serde_json::to_string(&fb).unwrap());
            if let Some(path) = out {
                write_out(&path, &table.to_csv())?;
            }
            Ok(0)
        }
        Command::Verify { check } => match check {
            VerifyCommand::Bellman { params, grid, tol } => {
                if grid < 2 {
                    return Err(format!("grid size {grid} must be >= 2"));
                }
                if tol <= 0.0 {
                    return Err(format!("tolerance {tol} must be > 0"));
                }
                let game = load_game(&params.params)?;
                let report = bellman_residual(&game, grid).map_err(|e| e.to_string())?;
                let pass = report.max_inner_residual <= tol
                    && report.max_h_violation <= 1e-12
                    && report.max_outer_residual <= 1e-12
                    && report.max_outer_l_violation <= 1e-12;
                println!(
                    "{}",
                    serde_json::to_string(&json!({ "report": report, "tol": tol, "passed": pass })).unwrap()
                );
                Ok(if pass { 0 } else { EXIT_VERIFY_FAILED })
            }
        },
        Command::Simulate { params, x, t, strategy, psi } => {
            let game = load_game(&params.params)?;
            let strat = parse_strategy(&strategy, &game)?;
            let pair = match psi {
                Some(path) => load_psi(&path)?,
                None => ControlPair::zero(t),
            };
            let cost = evaluate_original(&game, x, strat.as_ref(), &pair, t).map_err(|e| e.to_string())?;
            println!("{}", serde_json::to_string(&cost).unwrap());
            Ok(0)
        }
        Command::Adversary { params, x, delta, out } => {
            let game = load_game(&params.params)?;
            let resp = optimal_response(&game, x, delta).map_err(|e| e.to_string())?;
            let tau_quad = termination_time(&game, x, delta).map_err(|e| e.to_string())?;
            println!(
                "{}",
                serde_json::to_string(&json!({
                    "tau_tilde": resp.tau_tilde,
                    "tau_quadrature": tau_quad,
                    "delta": resp.delta,
                }))
                .unwrap()
            );
            if let Some(path) = out {
                let mut csv = String::from("t,omega,psi1,psi2,phi\n");
                for (i, &t) in resp.omega.times().iter().enumerate() {
                    let w = resp.omega.values()[i];
                    csv.push_str(&format!(
                        "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                        t,
                        w,
                        resp.psi.psi1().values()[i],
                        resp.psi.psi2().values()[i],
                        x + game.y() * t + w,
                    ));
                }
                write_out(&path, &csv)?;
            }
            Ok(0)
        }
        Command::Witness { kind } => match kind {
            WitnessCommand::Diverge { params, x, t, strategy } => {
                let game = load_game(&params.params)?;
                let strat = parse_strategy(&strategy, &game)?;
                let w = divergence_witness(&game, x, strat.as_ref(), t).map_err(|e| e.to_string())?;
                let pass = w.realized.total >= w.lower_bound - 1e-6;
                println!(
                    "{}",
                    serde_json::to_string(&json!({
                        "lower_bound": w.lower_bound,
                        "realized": w.realized,
                        "passed": pass,
                    }))
                    .unwrap()
                );
                Ok(if pass { 0 } else { EXIT_VERIFY_FAILED })
            }
            WitnessCommand::Nojump { params, x, delta, strategy } => {
                let game = load_game(&params.params)?;
                let strat = parse_strategy(&strategy, &game)?;
                match nojump_witness(&game, x, delta, strat.as_ref()) {
                    Ok(w) => {
                        println!("{}", serde_json::to_string(&w).unwrap());
                        Ok(if w.passed { 0 } else { EXIT_VERIFY_FAILED })
                    }
                    Err(e @ Error::WitnessInapplicable(_)) => Err(e.to_string()),
                    Err(e) => Err(e.to_string()),
                }
            }
        },
        Command::Saddle { params, x, trials, seed } => {
            let game = load_game(&params.params)?;
            let report = saddle_check(&game, x, trials, seed).map_err(|e| e.to_string())?;
            println!("{}", serde_json::to_string(&report).unwrap());
            Ok(if report.passed { 0 } else { EXIT_VERIFY_FAILED })
        }
        Command::Collapse { params, out, trials, seed } => {
            let multi = load_multiclass(&params)?;
            let eff = effective_params(&multi).map_err(|e| e.to_string())?;
            let report = if trials > 0 {
                Some(verify_collapse(&multi, trials, seed).map_err(|e| e.to_string())?)
            } else {
                None
            };
            let pass = report.as_ref().map(|r| r.passed).unwrap_or(true);
            println!(
                "{}",
                serde_json::to_string(&json!({
                    "game": eff.game,
                    "i_star": eff.i_star,
                    "report": report,
                }))
                .unwrap()
            );
            if let Some(path) = out {
                let mut csv = String::from("w,h\n");
                for (w, v) in &eff.knots {
                    csv.push_str(&format!("{w:.16e},{v:.16e}\n"));
                }
                write_out(&path, &csv)?;
            }
            Ok(if pass { 0 } else { EXIT_VERIFY_FAILED })
        }
    }
}
