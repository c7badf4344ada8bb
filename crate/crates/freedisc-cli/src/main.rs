//! Command-line front end: jump-cost profiles, weight calibration, grid
//! denoising, experiment sweeps, the interpolation-constant estimator, and
//! the second-order counting study. Floats print with 17 significant
//! digits and exact rationals as "num/den"; results are additionally
//! written as JSON when --json is given. Exit code 2 flags bad arguments,
//! 1 a solver failure, 0 success.

use clap::{Parser, Subcommand};
use freedisc::energy::{minimize, EnergyParams, MinimizeOptions};
use freedisc::experiments::{parse_config, run_bz_approximation, run_from_config};
use freedisc::interp::{estimate_r_k_detailed, save_records_csv, InterpSummary};
use freedisc::profile::{calibrate_c_k, m_k};
use freedisc::rational::rat_string;
use freedisc::{Error, GridSignal, Scalar};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "freedisc", version, about = "Singular perturbations of free-discontinuity energies on 1-D grids")]
struct Cli {
    /// Also write the result as JSON to this path.
    #[arg(long, global = true, value_name = "PATH")]
    json: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the jump constant m_k, the optimal transition length, and the
    /// exact normalization constant.
    Profile {
        #[arg(long)]
        k: usize,
    },
    /// Print the derivative weight c_k making a unit jump cost mu.
    Calibrate {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        mu: f64,
    },
    /// Minimize the denoising energy for a CSV signal and write the result.
    Denoise {
        /// Input CSV with header t,value.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        lambda: f64,
        /// Output CSV path (same format as the input).
        #[arg(long)]
        output: PathBuf,
    },
    /// Run the experiment described by a key-value config file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Estimate the interpolation constant R_k by random sampling.
    Interp {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        /// Also write the per-case table to this CSV path.
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// Run the second-order crease/jump counting study.
    Bz {
        #[arg(long)]
        k: usize,
        /// Scales eps = 2^-p, coarse to fine.
        #[arg(long, value_delimiter = ',', default_value = "5,6,7")]
        eps_powers: Vec<u32>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Validation(_) | Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

/// 17 significant digits, enough to reparse to the same f64.
fn f17(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_json(path: &Option<PathBuf>, text: String) -> freedisc::Result<()> {
    if let Some(p) = path {
        std::fs::write(p, text)?;
    }
    Ok(())
}

fn run(cli: &Cli) -> freedisc::Result<()> {
    match &cli.command {
        Command::Profile { k } => {
            let res = m_k(*k)?;
            println!("k = {k}");
            println!(
                "A_{k} = {} ({})",
                rat_string(&res.normalization_constant),
                f17(res.normalization_constant.to_f64())
            );
            println!("T_star = {}", f17(res.optimal_t));
            println!("m_{k} = {}", f17(res.energy));
            let json = res.to_json(*k, None, None, 1.0, 1.0);
            write_json(&cli.json, serde_json::to_string_pretty(&json)?)
        }
        Command::Calibrate { k, mu } => {
            let c = calibrate_c_k(*k, *mu)?;
            println!("c_{k} = {}", f17(c));
            let json = serde_json::json!({ "k": k, "mu": mu, "c_k": c });
            write_json(&cli.json, serde_json::to_string_pretty(&json)?)
        }
        Command::Denoise { input, k, eps, lambda, output } => {
            if !input.is_file() {
                return Err(Error::validation(format!("input file not found: {}", input.display())));
            }
            let data = GridSignal::load_csv(input)?;
            let params = EnergyParams::denoising(*k, *eps, *lambda, data.clone());
            let result = minimize(&data, &params, &MinimizeOptions::default())?;
            result.signal.save_csv(output)?;
            println!("nodes = {}", result.signal.len());
            println!("energy = {}", f17(result.energy));
            println!("grad_norm = {}", f17(result.grad_norm));
            println!("iterations = {}", result.iterations);
            println!("converged = {}", result.converged);
            println!("wrote {}", output.display());
            let json = serde_json::json!({
                "k": k,
                "eps": eps,
                "lambda": lambda,
                "nodes": result.signal.len(),
                "energy": result.energy,
                "grad_norm": result.grad_norm,
                "iterations": result.iterations,
                "newton_steps": result.newton_steps,
                "converged": result.converged,
                "output": output.display().to_string(),
            });
            write_json(&cli.json, serde_json::to_string_pretty(&json)?)?;
            if !result.converged {
                return Err(Error::numerics(format!(
                    "solver stopped at gradient norm {} without meeting the tolerance; output written anyway",
                    f17(result.grad_norm)
                )));
            }
            Ok(())
        }
        Command::Sweep { config } => {
            if !config.is_file() {
                return Err(Error::validation(format!("config file not found: {}", config.display())));
            }
            let text = std::fs::read_to_string(config)?;
            let cfg = parse_config(&text)?;
            let report = run_from_config(&cfg)?;
            println!("experiment = {}", report.experiment);
            println!("measured = {}", f17(report.summary.measured));
            println!("target = {}", f17(report.summary.target));
            println!("rel_error = {}", f17(report.summary.rel_error));
            for item in &report.summary.items {
                println!(
                    "{}: measured = {} target = {} rel_error = {}",
                    item.label,
                    f17(item.measured),
                    f17(item.target),
                    f17(item.rel_error)
                );
            }
            let failed: Vec<&str> = report
                .records
                .iter()
                .filter(|r| r.error.is_some())
                .map(|r| r.label.as_str())
                .collect();
            if let Some(dir) = &cfg.output_dir {
                report.write(dir, &report.experiment)?;
                println!("wrote {dir}/{0}.json and {dir}/{0}.csv", report.experiment);
            }
            write_json(&cli.json, report.to_json_string()?)?;
            if !failed.is_empty() {
                return Err(Error::numerics(format!(
                    "{} of {} cases failed: {}",
                    failed.len(),
                    report.records.len(),
                    failed.join(", ")
                )));
            }
            Ok(())
        }
        Command::Interp { k, samples, seed, csv } => {
            let (r_hat, records) = estimate_r_k_detailed(*k, *samples, *seed)?;
            println!("k = {k}");
            println!("R_hat = {}", f17(r_hat));
            println!("samples = {samples}");
            println!("seed = {seed}");
            if let Some(path) = csv {
                save_records_csv(&records, path)?;
                println!("wrote {}", path.display());
            }
            let summary = InterpSummary { k: *k, r_hat, samples: *samples, seed: *seed };
            write_json(&cli.json, summary.to_json_string()?)
        }
        Command::Bz { k, eps_powers } => {
            if eps_powers.is_empty() {
                return Err(Error::validation("bz needs at least one eps power"));
            }
            let eps_list: Vec<f64> = eps_powers.iter().map(|&p| 2.0f64.powi(-(p as i32))).collect();
            let report = run_bz_approximation(*k, &eps_list)?;
            println!("experiment = {}", report.experiment);
            for item in &report.summary.items {
                println!(
                    "{}: measured = {} target = {} rel_error = {}",
                    item.label,
                    f17(item.measured),
                    f17(item.target),
                    f17(item.rel_error)
                );
            }
            write_json(&cli.json, report.to_json_string()?)
        }
    }
}
