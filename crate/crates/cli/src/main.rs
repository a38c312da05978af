//! Command-line front end: JSON problem ingestion, rate computation,
//! parameter sweeps, protocol simulation, and the reference examples.
//!
//! Exit codes: 0 success, 2 infeasible problem, 3 invalid input,
//! 4 solver non-convergence, 5 I/O failure.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;

use output::{emit_csv, write_output, Cell};
use qlsc::csim;
use qlsc::io::{parse_problem, rate_result_to_json, Problem};
use qlsc::qcsim;
use qlsc::rates::{
    self, closed_form, min_classical_rate, min_coherent_information, min_qc_rate, Argmin,
    ClassicalProblem, QuantumProblem, RateResult,
};
use qlsc::state::DensityOperator;

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_INVALID: u8 = 3;
const EXIT_NO_CONVERGE: u8 = 4;
const EXIT_IO: u8 = 5;

#[derive(Parser)]
#[command(
    name = "qlsc",
    about = "Rate limits and protocol simulators for posterior-channel lossy source coding",
    after_help = "Thread count follows RAYON_NUM_THREADS."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the single-letter rate of a problem spec (JSON result)
    Rate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one numeric field of the spec over a grid (CSV result)
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        /// grid as <json-pointer>=<start>:<end>:<step>, e.g. /posterior/p=0.05:0.45:0.05
        #[arg(long)]
        grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the finite-blocklength simulator of the spec's protocol (CSV result)
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        /// RNG seed (required; no wall-clock defaults)
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate a worked example: bitflip | depolarizing | hamming | qc-bsc | classical-bsc
    Example {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version requests are success; anything else is bad input
            return if e.use_stderr() {
                eprint!("{e}");
                ExitCode::from(EXIT_INVALID)
            } else {
                print!("{e}");
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}

fn read_spec(path: &PathBuf) -> Result<String, ExitCode> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        ExitCode::from(EXIT_IO)
    })
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Rate { spec, out } => {
            let text = match read_spec(&spec) {
                Ok(t) => t,
                Err(code) => return Ok(code),
            };
            let (problem, _) = match parse_problem(&text) {
                Ok(p) => p,
                Err(errs) => {
                    eprintln!("invalid spec:\n{errs}");
                    return Ok(ExitCode::from(EXIT_INVALID));
                }
            };
            let result = solve(&problem)?;
            let json = serde_json::to_string_pretty(&rate_result_to_json(&result))?;
            if write_output(out.as_deref(), &(json + "\n")).is_err() {
                return Ok(ExitCode::from(EXIT_IO));
            }
            Ok(exit_for(&result))
        }
        Command::Sweep { spec, grid, out } => {
            let text = match read_spec(&spec) {
                Ok(t) => t,
                Err(code) => return Ok(code),
            };
            let (pointer, values) = match parse_grid(&grid) {
                Some(g) => g,
                None => {
                    eprintln!("error: --grid must be <json-pointer>=<start>:<end>:<step>");
                    return Ok(ExitCode::from(EXIT_INVALID));
                }
            };
            let mut base: Value = match serde_json::from_str(&text) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("invalid spec: malformed JSON: {e}");
                    return Ok(ExitCode::from(EXIT_INVALID));
                }
            };
            let mut rows = Vec::new();
            for &v in &values {
                match base.pointer_mut(&pointer) {
                    Some(slot) => *slot = serde_json::json!(v),
                    None => {
                        eprintln!("error: pointer {pointer} not found in spec");
                        return Ok(ExitCode::from(EXIT_INVALID));
                    }
                }
                let (problem, _) = match parse_problem(&serde_json::to_string(&base)?) {
                    Ok(p) => p,
                    Err(errs) => {
                        eprintln!("invalid spec at {pointer}={v}:\n{errs}");
                        return Ok(ExitCode::from(EXIT_INVALID));
                    }
                };
                let result = solve(&problem)?;
                rows.push(vec![
                    Cell::Float(v),
                    Cell::Bool(result.feasible),
                    Cell::Float(result.rate_bits),
                    Cell::Float(result.diagnostics.residual),
                ]);
            }
            let csv = emit_csv(&["parameter", "feasible", "rate_bits", "residual"], &rows);
            if write_output(out.as_deref(), &csv).is_err() {
                return Ok(ExitCode::from(EXIT_IO));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate {
            spec,
            seed,
            trials,
            out,
        } => {
            let text = match read_spec(&spec) {
                Ok(t) => t,
                Err(code) => return Ok(code),
            };
            let (problem, raw) = match parse_problem(&text) {
                Ok(p) => p,
                Err(errs) => {
                    eprintln!("invalid spec:\n{errs}");
                    return Ok(ExitCode::from(EXIT_INVALID));
                }
            };
            simulate(&problem, &raw.options, seed, trials, out.as_deref())
        }
        Command::Example { name, out } => example(&name, out.as_deref()),
    }
}

fn solve(problem: &Problem) -> anyhow::Result<RateResult> {
    Ok(match problem {
        Problem::Quantum(p) => min_coherent_information(p)?,
        Problem::Qc(p) => min_qc_rate(p)?,
        Problem::Classical(p) => min_classical_rate(p)?,
    })
}

fn exit_for(result: &RateResult) -> ExitCode {
    if !result.feasible {
        ExitCode::from(EXIT_INFEASIBLE)
    } else if !result.diagnostics.converged {
        ExitCode::from(EXIT_NO_CONVERGE)
    } else {
        ExitCode::SUCCESS
    }
}

fn parse_grid(grid: &str) -> Option<(String, Vec<f64>)> {
    let (pointer, range) = grid.split_once('=')?;
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return None;
    }
    let start: f64 = parts[0].parse().ok()?;
    let end: f64 = parts[1].parse().ok()?;
    let step: f64 = parts[2].parse().ok()?;
    if step <= 0.0 || end < start {
        return None;
    }
    let mut values = Vec::new();
    let count = ((end - start) / step + 1.5).floor() as usize;
    for i in 0..count {
        let v = start + i as f64 * step;
        if v <= end + 1e-12 {
            values.push(v);
        }
    }
    (!values.is_empty()).then(|| (pointer.to_string(), values))
}

fn opt_f64(options: &Value, key: &str, default: f64) -> f64 {
    options
        .get("sim")
        .and_then(|s| s.get(key))
        .and_then(Value::as_f64)
        .unwrap_or(default)
}

fn sim_blocklengths(options: &Value) -> Vec<usize> {
    options
        .get("sim")
        .and_then(|s| s.get("n"))
        .and_then(|n| serde_json::from_value::<Vec<usize>>(n.clone()).ok())
        .unwrap_or_else(|| vec![4, 8, 12])
}

fn recon_from_result(result: &RateResult) -> Option<Vec<f64>> {
    match result.argmin.as_ref()? {
        Argmin::Distribution(p) => Some(p.clone()),
        Argmin::Density(_) => None,
    }
}

fn simulate(
    problem: &Problem,
    options: &Value,
    seed: u64,
    trials: usize,
    out: Option<&std::path::Path>,
) -> anyhow::Result<ExitCode> {
    let delta = opt_f64(options, "delta", 0.1);
    let eta = opt_f64(options, "eta", 0.05);
    let ns = sim_blocklengths(options);
    match problem {
        Problem::Classical(p) => {
            let base = min_classical_rate(p)?;
            if !base.feasible {
                eprintln!("infeasible problem: residual {}", base.diagnostics.residual);
                return Ok(ExitCode::from(EXIT_INFEASIBLE));
            }
            let rate = options
                .get("sim")
                .and_then(|s| s.get("rate"))
                .and_then(Value::as_f64)
                .unwrap_or(base.rate_bits + opt_f64(options, "rate_offset", 0.2));
            let recon = options
                .get("sim")
                .and_then(|s| s.get("recon_dist"))
                .and_then(|r| serde_json::from_value::<Vec<f64>>(r.clone()).ok())
                .or_else(|| recon_from_result(&base))
                .ok_or_else(|| anyhow::anyhow!("no reconstruction distribution available"))?;
            let mut rows = Vec::new();
            for &n in &ns {
                let config = csim::SimConfig {
                    problem: p.clone(),
                    recon_dist: recon.clone(),
                    n,
                    rate,
                    delta,
                    eta,
                    seed,
                    trials,
                };
                let res = csim::monte_carlo(&config)?;
                rows.push(vec![
                    Cell::Int(n as i64),
                    Cell::Float(rate),
                    Cell::Float(delta),
                    Cell::Float(eta),
                    Cell::Int(trials as i64),
                    Cell::Float(res.mean_tv),
                    Cell::Float(res.subpmf_fraction),
                    Cell::Float(res.mass_m0),
                ]);
            }
            let csv = emit_csv(
                &[
                    "n",
                    "R",
                    "delta",
                    "eta",
                    "trials",
                    "mean_tv",
                    "subpmf_fraction",
                    "mass_m0",
                ],
                &rows,
            );
            if write_output(out, &csv).is_err() {
                return Ok(ExitCode::from(EXIT_IO));
            }
            Ok(ExitCode::SUCCESS)
        }
        Problem::Qc(p) => {
            let base = min_qc_rate(p)?;
            if !base.feasible {
                eprintln!("infeasible problem: residual {}", base.diagnostics.residual);
                return Ok(ExitCode::from(EXIT_INFEASIBLE));
            }
            let rate = options
                .get("sim")
                .and_then(|s| s.get("rate"))
                .and_then(Value::as_f64)
                .unwrap_or(base.rate_bits + opt_f64(options, "rate_offset", 0.3));
            let recon = options
                .get("sim")
                .and_then(|s| s.get("recon_dist"))
                .and_then(|r| serde_json::from_value::<Vec<f64>>(r.clone()).ok())
                .or_else(|| recon_from_result(&base))
                .ok_or_else(|| anyhow::anyhow!("no reconstruction distribution available"))?;
            let epsilon_cutoff = opt_f64(options, "epsilon_cutoff", 0.01);
            let delta1 = opt_f64(options, "delta1", delta);
            let mut rows = Vec::new();
            for &n in &ns {
                let config = qcsim::QcSimConfig {
                    problem: p.clone(),
                    recon_dist: recon.clone(),
                    n,
                    rate,
                    delta,
                    eta,
                    epsilon_cutoff,
                    delta1,
                    seed,
                    trials,
                };
                let res = qcsim::monte_carlo(config)?;
                rows.push(vec![
                    Cell::Int(n as i64),
                    Cell::Float(rate),
                    Cell::Float(delta),
                    Cell::Float(eta),
                    Cell::Int(trials as i64),
                    Cell::Float(res.mean_xi),
                    Cell::Float(res.subpovm_fraction),
                    Cell::Float(res.mean_zeta),
                    Cell::Float(res.mean_zeta_tilde),
                ]);
            }
            let csv = emit_csv(
                &[
                    "n",
                    "R",
                    "delta",
                    "eta",
                    "trials",
                    "mean_xi",
                    "subpovm_fraction",
                    "mean_zeta",
                    "mean_zeta_tilde",
                ],
                &rows,
            );
            if write_output(out, &csv).is_err() {
                return Ok(ExitCode::from(EXIT_IO));
            }
            Ok(ExitCode::SUCCESS)
        }
        Problem::Quantum(_) => {
            eprintln!(
                "error: simulate supports classical and qc problems; the fully \
                 quantum protocol has no finite-blocklength simulator here"
            );
            Ok(ExitCode::from(EXIT_INVALID))
        }
    }
}

fn example(name: &str, out: Option<&std::path::Path>) -> anyhow::Result<ExitCode> {
    match name {
        "bitflip" => {
            let mut rows = Vec::new();
            for i in 1..=9 {
                let p = 0.05 * i as f64;
                let problem = QuantumProblem::new(
                    DensityOperator::maximally_mixed(2),
                    2,
                    qlsc::channel::QuantumChannel::bit_flip(p)?,
                )?;
                let res = min_coherent_information(&problem)?;
                rows.push(vec![
                    Cell::Float(p),
                    Cell::Bool(res.feasible),
                    Cell::Float(res.rate_bits),
                    Cell::Float(res.diagnostics.residual),
                ]);
            }
            let csv = emit_csv(&["p", "feasible", "rate_bits", "residual"], &rows);
            if write_output(out, &csv).is_err() {
                return Ok(ExitCode::from(EXIT_IO));
            }
            Ok(ExitCode::SUCCESS)
        }
        "depolarizing" => {
            let mut rows = Vec::new();
            for i in 1..=19 {
                let p = 0.05 * i as f64;
                let problem = QuantumProblem::new(
                    DensityOperator::maximally_mixed(2),
                    2,
                    qlsc::channel::QuantumChannel::depolarizing(p)?,
                )?;
                let res = min_coherent_information(&problem)?;
                rows.push(vec![
                    Cell::Float(p),
                    Cell::Bool(res.feasible),
                    Cell::Float(res.rate_bits),
                    Cell::Float(res.diagnostics.residual),
                ]);
            }
            let csv = emit_csv(&["p", "feasible", "rate_bits", "residual"], &rows);
            if write_output(out, &csv).is_err() {
                return Ok(ExitCode::from(EXIT_IO));
            }
            Ok(ExitCode::SUCCESS)
        }
        "hamming" => {
            let reports: Vec<_> = (2..=4)
                .map(qcsim::hamming_local_fidelity)
                .collect::<Result<_, _>>()?;
            let json = serde_json::to_string_pretty(&reports)?;
            if write_output(out, &(json + "\n")).is_err() {
                return Ok(ExitCode::from(EXIT_IO));
            }
            Ok(ExitCode::SUCCESS)
        }
        "qc-bsc" => {
            let mut rows = Vec::new();
            for &p in &[0.4, 0.5] {
                for i in 0..=20 {
                    let q = 0.025 * i as f64;
                    let source = closed_form::qc_bsc_source(p)?;
                    let (w0, w1) = closed_form::qc_bsc_states(q)?;
                    let problem =
                        rates::QcProblem::new(source, vec!["0".into(), "1".into()], vec![w0, w1])?;
                    let res = min_qc_rate(&problem)?;
                    rows.push(vec![
                        Cell::Float(p),
                        Cell::Float(q),
                        Cell::Bool(res.feasible),
                        Cell::Float(res.rate_bits),
                        Cell::Float(res.diagnostics.residual),
                    ]);
                }
            }
            let csv = emit_csv(&["p", "q", "feasible", "rate_bits", "residual"], &rows);
            if write_output(out, &csv).is_err() {
                return Ok(ExitCode::from(EXIT_IO));
            }
            Ok(ExitCode::SUCCESS)
        }
        "classical-bsc" => {
            let p = 0.4;
            let mut rows = Vec::new();
            for i in 0..=25 {
                let q = 0.02 * i as f64;
                let problem = ClassicalProblem::new(
                    vec![p, 1.0 - p],
                    vec![vec![1.0 - q, q], vec![q, 1.0 - q]],
                )?;
                let res = min_classical_rate(&problem)?;
                rows.push(vec![
                    Cell::Float(p),
                    Cell::Float(q),
                    Cell::Bool(res.feasible),
                    Cell::Float(res.rate_bits),
                    Cell::Float(res.diagnostics.residual),
                ]);
            }
            let csv = emit_csv(&["p", "q", "feasible", "rate_bits", "residual"], &rows);
            if write_output(out, &csv).is_err() {
                return Ok(ExitCode::from(EXIT_IO));
            }
            Ok(ExitCode::SUCCESS)
        }
        other => {
            eprintln!(
                "error: unknown example '{other}' \
                 (expected bitflip | depolarizing | hamming | qc-bsc | classical-bsc)"
            );
            Ok(ExitCode::from(EXIT_INVALID))
        }
    }
}
