//! Experiment runner: Monte Carlo sweeps, RIP concentration checks, and
//! error-bound coverage checks, all driven by one TOML config.

use clap::{Parser, Subcommand};
use lrsd::channel::{draw_paths, synthesize, truncate};
use lrsd::estimator::{realized_error_bound, sd_estimate, SDConfig};
use lrsd::harness::{
    child_seed, run_sweep_with_options, sigma2_from_snr_db, summarize, write_csv,
    ExperimentConfig,
};
use lrsd::rip::{estimate_delta, tail_report, ReportDims};
use lrsd::sounding::SounderSet;
use lrsd::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "lrsd", version, about = "Low-rank subspace channel estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo sweep described by the config and write a CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's output_path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker thread count (defaults to one thread per core).
        #[arg(long)]
        workers: Option<usize>,
        /// Record measured wall times instead of deterministic zeros.
        /// Output bytes then vary from run to run.
        #[arg(long)]
        timing: bool,
    },
    /// Compare empirical concentration tails with the theoretical bounds
    /// for each configured K; one JSON report per line.
    RipCheck {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated deviation levels, each in (0, 1).
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
        #[arg(long)]
        trials: usize,
    },
    /// Check how often the realized estimation error stays within the
    /// theoretical bound; one JSON report per (K, SNR) cell.
    BoundCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trials: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Validation(_) | Error::InvalidArgument(_) | Error::Parse { .. } => {
                    ExitCode::from(2)
                }
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Sweep {
            config,
            out,
            workers,
            timing,
        } => sweep(&config, out, workers, timing),
        Command::RipCheck {
            config,
            alphas,
            trials,
        } => rip_check(&config, &alphas, trials),
        Command::BoundCheck { config, trials } => bound_check(&config, trials),
    }
}

fn sweep(
    config_path: &PathBuf,
    out: Option<PathBuf>,
    workers: Option<usize>,
    timing: bool,
) -> Result<(), Error> {
    let config = ExperimentConfig::from_toml_path(config_path)?;
    let out_path = out.unwrap_or_else(|| config.output_path.clone());
    let start = Instant::now();
    let records = run_sweep_with_options(&config, workers, timing)?;
    let elapsed = start.elapsed().as_secs_f64();
    write_csv(&records, &out_path)?;
    for row in summarize(&records) {
        println!(
            "{} K={} snr_db={:+.1} n={} nmse median={:.3e} mean={:.3e} rate median={:.3e}",
            row.estimator, row.k, row.snr_db, row.count, row.nmse_median, row.nmse_mean,
            row.rate_median
        );
    }
    eprintln!(
        "wrote {} records to {} in {elapsed:.1}s",
        records.len(),
        out_path.display()
    );
    Ok(())
}

fn rip_check(config_path: &PathBuf, alphas: &[f64], trials: usize) -> Result<(), Error> {
    let config = ExperimentConfig::from_toml_path(config_path)?;
    if alphas.is_empty() {
        return Err(Error::invalid("at least one alpha is required"));
    }
    if trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    for &k in &config.k_values {
        let dims = ReportDims {
            nr: config.nr,
            nt: config.nt,
            n: config.n,
            k,
            l: config.l,
        };
        let report = tail_report(dims, alphas, trials, config.master_seed)?;
        let line = serde_json::to_string(&report)
            .map_err(|e| Error::Numerical(format!("cannot serialize report: {e}")))?;
        println!("{line}");
    }
    Ok(())
}

/// Probes used for the per-trial empirical RIP-constant estimate.
const DELTA_PROBES: usize = 200;

fn bound_check(config_path: &PathBuf, trials: usize) -> Result<(), Error> {
    let config = ExperimentConfig::from_toml_path(config_path)?;
    if trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    let beta = config.beta();
    for &k in &config.k_values {
        for (snr_index, &snr_db) in config.snr_db_values.iter().enumerate() {
            let mut covered = 0usize;
            for trial in 0..trials {
                let seed = child_seed(config.master_seed, k, snr_index, trial);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let paths = draw_paths(config.l, &mut rng)?;
                let h = synthesize(&paths, config.nr, config.nt)?;
                let sounders =
                    SounderSet::generate(k, config.n, config.nr, config.nt, &mut rng)?;
                let obs = sounders.observe(&h, sigma2_from_snr_db(snr_db), &mut rng)?;
                let noise = &obs.y - sounders.forward(&h.entries)?;
                let delta = estimate_delta(&sounders, 2 * config.d, DELTA_PROBES, &mut rng)?;

                let sd_cfg = SDConfig::new(config.d, beta);
                let (est, _) = sd_estimate(&sounders, &obs.y, &sd_cfg)?;
                let (target, _) = truncate(&h, config.d)?;
                let err = (est.channel_estimate() - target.reconstruct()).norm_squared();
                // an empirical delta >= 1 voids the first term; only the
                // 2*beta cap remains
                let bound = if delta < 1.0 {
                    realized_error_bound(&h, config.d, delta, &sounders, &noise, beta)?
                } else {
                    2.0 * beta
                };
                if err <= bound {
                    covered += 1;
                }
            }
            let line = serde_json::json!({
                "K": k,
                "snr_db": snr_db,
                "trials": trials,
                "covered": covered,
                "coverage": covered as f64 / trials as f64,
                "delta_probes": DELTA_PROBES,
            });
            println!("{line}");
        }
    }
    Ok(())
}
