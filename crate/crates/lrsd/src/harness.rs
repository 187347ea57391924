//! Configuration-driven Monte Carlo runner: SNR/K sweeps over estimators,
//! deterministic seeding, CSV emission, and bootstrap summaries.

use crate::channel::{draw_paths, synthesize, truncate, ChannelMatrix};
use crate::estimator::{mf_estimate_traced, sd_estimate, SDConfig};
use crate::metrics::{nmse, precoders_from_estimate, spectrum_efficiency};
use crate::sounding::SounderSet;
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

/// How the power budget beta is chosen for the SD estimator.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(try_from = "BetaRuleRaw")]
pub enum BetaRule {
    /// beta = Nr * Nt, the expected channel energy of the path model.
    NrNtProduct,
    Explicit(f64),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BetaRuleRaw {
    Name(String),
    Value(f64),
}

impl TryFrom<BetaRuleRaw> for BetaRule {
    type Error = String;

    fn try_from(raw: BetaRuleRaw) -> std::result::Result<Self, String> {
        match raw {
            BetaRuleRaw::Name(s) if s == "nrnt_product" => Ok(BetaRule::NrNtProduct),
            BetaRuleRaw::Name(s) => Err(format!(
                "unknown beta_rule {s:?}; expected \"nrnt_product\" or a number"
            )),
            BetaRuleRaw::Value(v) => Ok(BetaRule::Explicit(v)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Sd,
    Mf,
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimatorKind::Sd => "sd",
            EstimatorKind::Mf => "mf",
        })
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sd" => Ok(EstimatorKind::Sd),
            "mf" => Ok(EstimatorKind::Mf),
            other => Err(Error::invalid(format!("unknown estimator {other:?}"))),
        }
    }
}

/// One sweep description, loaded from a flat TOML file. Unknown keys are
/// rejected.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "Nr")]
    pub nr: usize,
    #[serde(rename = "Nt")]
    pub nt: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub d: usize,
    #[serde(rename = "K_values")]
    pub k_values: Vec<usize>,
    pub snr_db_values: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub beta_rule: BetaRule,
    pub estimators: Vec<EstimatorKind>,
    pub output_path: PathBuf,
}

impl ExperimentConfig {
    pub fn from_toml_path(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn beta(&self) -> f64 {
        match self.beta_rule {
            BetaRule::NrNtProduct => (self.nr * self.nt) as f64,
            BetaRule::Explicit(v) => v,
        }
    }

    /// Checks every structural constraint and reports all violations at
    /// once.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        for (name, v) in [
            ("Nr", self.nr),
            ("Nt", self.nt),
            ("N", self.n),
            ("L", self.l),
            ("d", self.d),
        ] {
            if v == 0 {
                errs.push(format!("{name} must be >= 1"));
            }
        }
        if self.d > self.l {
            errs.push(format!("d = {} must not exceed L = {}", self.d, self.l));
        }
        if self.l > self.n {
            errs.push(format!("L = {} must not exceed N = {}", self.l, self.n));
        }
        if self.n > self.nr.min(self.nt) {
            errs.push(format!(
                "N = {} must not exceed min(Nr, Nt) = {}",
                self.n,
                self.nr.min(self.nt)
            ));
        }
        if self.k_values.is_empty() {
            errs.push("K_values must be non-empty".into());
        }
        if self.k_values.iter().any(|&k| k == 0) {
            errs.push("every K must be >= 1".into());
        }
        if self.snr_db_values.is_empty() {
            errs.push("snr_db_values must be non-empty".into());
        }
        if self.snr_db_values.iter().any(|s| !s.is_finite()) {
            errs.push("snr_db_values must be finite".into());
        }
        if self.trials == 0 {
            errs.push("trials must be >= 1".into());
        }
        if self.estimators.is_empty() {
            errs.push("estimators must be non-empty".into());
        }
        let mut seen = self.estimators.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.estimators.len() {
            errs.push("estimators must not repeat".into());
        }
        if let BetaRule::Explicit(v) = self.beta_rule {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(format!("explicit beta must be positive and finite, got {v}"));
            }
        }
        if self.output_path.as_os_str().is_empty() {
            errs.push("output_path must be non-empty".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errs))
        }
    }
}

/// One estimator run inside one Monte Carlo trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRecord {
    pub estimator: EstimatorKind,
    pub k: usize,
    pub snr_db: f64,
    pub trial: usize,
    pub seed: u64,
    pub nmse: f64,
    pub rate_bps_hz: f64,
    pub iterations: usize,
    pub wall_time_s: f64,
}

pub const CSV_HEADER: &str = "estimator,K,snr_db,trial,seed,nmse,rate_bps_hz,iterations,wall_time_s";

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic child seed for one (K, SNR index, trial) cell: successive
/// splitmix64 mixing gives avalanche behavior across all inputs.
pub fn child_seed(master: u64, k: usize, snr_index: usize, trial: usize) -> u64 {
    let mut s = splitmix64(master);
    s = splitmix64(s ^ k as u64);
    s = splitmix64(s ^ snr_index as u64);
    s = splitmix64(s ^ trial as u64);
    s
}

/// Noise variance for an SNR in dB under unit signal power.
pub fn sigma2_from_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Per-estimator outcome of a single replayable trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub estimator: EstimatorKind,
    pub nmse: f64,
    pub rate_bps_hz: f64,
    pub iterations: usize,
    pub wall_time_s: f64,
}

/// Runs one trial from its seed alone: draw channel, sounders, and noise,
/// then run each configured estimator. `timed` records measured wall time;
/// otherwise wall time is reported as 0.0 so output bytes stay
/// reproducible.
pub fn run_trial(
    config: &ExperimentConfig,
    k: usize,
    snr_db: f64,
    seed: u64,
    timed: bool,
) -> Result<Vec<TrialOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let paths = draw_paths(config.l, &mut rng)?;
    let h = synthesize(&paths, config.nr, config.nt)?;
    let sounders = SounderSet::generate(k, config.n, config.nr, config.nt, &mut rng)?;
    let sigma2 = sigma2_from_snr_db(snr_db);
    let obs = sounders.observe(&h, sigma2, &mut rng)?;
    let (target, _) = truncate(&h, config.d)?;
    let h_d = ChannelMatrix::from_entries(target.reconstruct());
    // Rates need a strictly positive noise floor even for noiseless runs.
    let rate_sigma2 = sigma2.max(1e-300);

    let mut outcomes = Vec::with_capacity(config.estimators.len());
    for &kind in &config.estimators {
        let start = Instant::now();
        let (h_hat, iterations) = match kind {
            EstimatorKind::Sd => {
                let cfg = SDConfig::new(config.d, config.beta());
                let (est, trace) = sd_estimate(&sounders, &obs.y, &cfg)?;
                (
                    ChannelMatrix::from_entries(est.channel_estimate()),
                    trace.iterations_run,
                )
            }
            EstimatorKind::Mf => {
                let (est, objectives) = mf_estimate_traced(&sounders, &obs.y, config.l, 50)?;
                (est, objectives.len().div_ceil(2))
            }
        };
        let err = nmse(&h_d, &h_hat)?;
        let rate = match precoders_from_estimate(&h_hat, config.d) {
            Ok(pair) => spectrum_efficiency(&h, &pair, rate_sigma2)?,
            // a degenerate (zero) estimate carries no usable subspace
            Err(_) => 0.0,
        };
        let wall = if timed {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        };
        outcomes.push(TrialOutcome {
            estimator: kind,
            nmse: err,
            rate_bps_hz: rate,
            iterations,
            wall_time_s: wall,
        });
    }
    Ok(outcomes)
}

/// Deterministic sweep: records appear in (K, SNR, trial, estimator) order
/// regardless of how many workers execute the trials.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    run_sweep_with_options(config, None, false)
}

pub fn run_sweep_with_options(
    config: &ExperimentConfig,
    workers: Option<usize>,
    timed: bool,
) -> Result<Vec<ResultRecord>> {
    config.validate()?;
    let mut cells = Vec::new();
    for &k in &config.k_values {
        for (snr_index, &snr_db) in config.snr_db_values.iter().enumerate() {
            for trial in 0..config.trials {
                let seed = child_seed(config.master_seed, k, snr_index, trial);
                cells.push((k, snr_db, trial, seed));
            }
        }
    }

    let run_all = |cells: &[(usize, f64, usize, u64)]| -> Result<Vec<Vec<ResultRecord>>> {
        cells
            .par_iter()
            .map(|&(k, snr_db, trial, seed)| {
                let outcomes = run_trial(config, k, snr_db, seed, timed)?;
                Ok(outcomes
                    .into_iter()
                    .map(|o| ResultRecord {
                        estimator: o.estimator,
                        k,
                        snr_db,
                        trial,
                        seed,
                        nmse: o.nmse,
                        rate_bps_hz: o.rate_bps_hz,
                        iterations: o.iterations,
                        wall_time_s: o.wall_time_s,
                    })
                    .collect())
            })
            .collect()
    };

    let nested = match workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?;
            pool.install(|| run_all(&cells))?
        }
        None => run_all(&cells)?,
    };
    Ok(nested.into_iter().flatten().collect())
}

fn format_float(v: f64) -> String {
    format!("{v:.9e}")
}

/// Writes records with the fixed header, one row per record, floats with at
/// least nine significant digits, newline-terminated.
pub fn write_csv(records: &[ResultRecord], path: &Path) -> Result<()> {
    let mut text = String::with_capacity(64 * (records.len() + 1));
    text.push_str(CSV_HEADER);
    text.push('\n');
    for r in records {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.estimator,
            r.k,
            format_float(r.snr_db),
            r.trial,
            r.seed,
            format_float(r.nmse),
            format_float(r.rate_bps_hz),
            r.iterations,
            format_float(r.wall_time_s),
        ));
    }
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Parses a file produced by `write_csv`.
pub fn read_csv(path: &Path) -> Result<Vec<ResultRecord>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != CSV_HEADER {
        return Err(Error::Parse {
            path: path.display().to_string(),
            message: format!("unexpected header {header:?}"),
        });
    }
    let parse_err = |line: usize, what: &str| Error::Parse {
        path: path.display().to_string(),
        message: format!("line {}: {what}", line + 2),
    };
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(parse_err(i, "expected 9 fields"));
        }
        records.push(ResultRecord {
            estimator: fields[0]
                .parse()
                .map_err(|_| parse_err(i, "bad estimator"))?,
            k: fields[1].parse().map_err(|_| parse_err(i, "bad K"))?,
            snr_db: fields[2].parse().map_err(|_| parse_err(i, "bad snr_db"))?,
            trial: fields[3].parse().map_err(|_| parse_err(i, "bad trial"))?,
            seed: fields[4].parse().map_err(|_| parse_err(i, "bad seed"))?,
            nmse: fields[5].parse().map_err(|_| parse_err(i, "bad nmse"))?,
            rate_bps_hz: fields[6].parse().map_err(|_| parse_err(i, "bad rate"))?,
            iterations: fields[7]
                .parse()
                .map_err(|_| parse_err(i, "bad iterations"))?,
            wall_time_s: fields[8]
                .parse()
                .map_err(|_| parse_err(i, "bad wall_time"))?,
        });
    }
    Ok(records)
}

/// Median/mean and 95% bootstrap confidence intervals for one
/// (estimator, K, SNR) group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub estimator: EstimatorKind,
    pub k: usize,
    pub snr_db: f64,
    pub count: usize,
    pub nmse_median: f64,
    pub nmse_mean: f64,
    pub nmse_ci: (f64, f64),
    pub rate_median: f64,
    pub rate_mean: f64,
    pub rate_ci: (f64, f64),
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

const BOOTSTRAP_RESAMPLES: usize = 1000;
const BOOTSTRAP_SEED: u64 = 0x0b00_75f2_a9c4_1d37;

/// Percentile bootstrap 95% CI of the mean, with a fixed resampling seed so
/// summaries are reproducible.
fn bootstrap_ci(values: &[f64], rng: &mut ChaCha8Rng) -> (f64, f64) {
    let n = values.len();
    if n == 1 {
        return (values[0], values[0]);
    }
    let mut means = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let mut acc = 0.0;
        for _ in 0..n {
            acc += values[rand::Rng::random_range(rng, 0..n)];
        }
        means.push(acc / n as f64);
    }
    means.sort_by(f64::total_cmp);
    let lo = means[(0.025 * (BOOTSTRAP_RESAMPLES - 1) as f64).round() as usize];
    let hi = means[(0.975 * (BOOTSTRAP_RESAMPLES - 1) as f64).round() as usize];
    (lo, hi)
}

/// Aggregates per (estimator, K, SNR), sorted by that key. Empty input gives
/// an empty summary.
pub fn summarize(records: &[ResultRecord]) -> Vec<SummaryRow> {
    let mut sorted: Vec<&ResultRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        (a.estimator, a.k)
            .cmp(&(b.estimator, b.k))
            .then(a.snr_db.total_cmp(&b.snr_db))
    });
    let mut rows = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let key = (sorted[i].estimator, sorted[i].k, sorted[i].snr_db);
        let mut j = i;
        while j < sorted.len()
            && (sorted[j].estimator, sorted[j].k, sorted[j].snr_db) == key
        {
            j += 1;
        }
        let group = &sorted[i..j];
        let nmses: Vec<f64> = group.iter().map(|r| r.nmse).collect();
        let rates: Vec<f64> = group.iter().map(|r| r.rate_bps_hz).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(BOOTSTRAP_SEED);
        let nmse_ci = bootstrap_ci(&nmses, &mut rng);
        let rate_ci = bootstrap_ci(&rates, &mut rng);
        rows.push(SummaryRow {
            estimator: key.0,
            k: key.1,
            snr_db: key.2,
            count: group.len(),
            nmse_median: median(&nmses),
            nmse_mean: nmses.iter().sum::<f64>() / nmses.len() as f64,
            nmse_ci,
            rate_median: median(&rates),
            rate_mean: rates.iter().sum::<f64>() / rates.len() as f64,
            rate_ci,
        });
        i = j;
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn desk_config() -> ExperimentConfig {
        ExperimentConfig {
            nr: 5,
            nt: 7,
            n: 2,
            l: 2,
            d: 1,
            k_values: vec![15],
            snr_db_values: vec![0.0],
            trials: 1,
            master_seed: 7,
            beta_rule: BetaRule::NrNtProduct,
            estimators: vec![EstimatorKind::Sd],
            output_path: PathBuf::from("out.csv"),
        }
    }

    #[test]
    fn config_parses_exact_field_names() {
        let text = r#"
Nr = 36
Nt = 144
N = 4
L = 4
d = 4
K_values = [192, 384]
snr_db_values = [-20.0, 0.0, 20.0]
trials = 10
master_seed = 42
beta_rule = "nrnt_product"
estimators = ["sd", "mf"]
output_path = "results.csv"
"#;
        let cfg: ExperimentConfig = toml::from_str(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.nr, 36);
        assert_eq!(cfg.k_values, vec![192, 384]);
        assert_eq!(cfg.beta(), 5184.0);
        assert_eq!(cfg.estimators, vec![EstimatorKind::Sd, EstimatorKind::Mf]);
    }

    #[test]
    fn config_rejects_unknown_keys_and_bad_beta() {
        let base = r#"
Nr = 8
Nt = 8
N = 2
L = 2
d = 2
K_values = [10]
snr_db_values = [0.0]
trials = 1
master_seed = 1
beta_rule = "nrnt_product"
estimators = ["sd"]
output_path = "o.csv"
"#;
        let with_extra = format!("{base}\nbogus_key = 3\n");
        assert!(toml::from_str::<ExperimentConfig>(&with_extra).is_err());
        let bad_rule = base.replace("\"nrnt_product\"", "\"biggest\"");
        assert!(toml::from_str::<ExperimentConfig>(&bad_rule).is_err());
        let explicit = base.replace("\"nrnt_product\"", "64.0");
        let cfg: ExperimentConfig = toml::from_str(&explicit).unwrap();
        assert_eq!(cfg.beta(), 64.0);
    }

    #[test]
    fn validation_reports_all_violations() {
        let mut cfg = desk_config();
        cfg.d = 3; // d > L
        cfg.n = 6; // N > min(Nr, Nt)=5, and L(2) <= N fine but d>L
        cfg.trials = 0;
        cfg.k_values = vec![];
        let err = cfg.validate().unwrap_err();
        match err {
            Error::Validation(v) => assert!(v.len() >= 4, "got {v:?}"),
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn child_seed_is_deterministic_and_spread() {
        assert_eq!(child_seed(1, 2, 3, 4), child_seed(1, 2, 3, 4));
        let mut seen = std::collections::HashSet::new();
        for k in 0..8 {
            for s in 0..8 {
                for t in 0..8 {
                    seen.insert(child_seed(99, k, s, t));
                }
            }
        }
        assert_eq!(seen.len(), 512);
        // flipping one master bit changes roughly half the output bits
        let diff = (child_seed(0, 1, 1, 1) ^ child_seed(1, 1, 1, 1)).count_ones();
        assert!((16..=48).contains(&diff), "hamming distance {diff}");
    }

    #[test]
    fn sigma2_examples() {
        assert!((sigma2_from_snr_db(0.0) - 1.0).abs() < 1e-15);
        assert!((sigma2_from_snr_db(10.0) - 0.1).abs() < 1e-15);
        assert!((sigma2_from_snr_db(-10.0) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_single_cell_yields_one_record() {
        let cfg = desk_config();
        let records = run_sweep(&cfg).unwrap();
        assert_eq!(records.len(), 1);
        let r = &records[0];
        assert_eq!(r.estimator, EstimatorKind::Sd);
        assert_eq!(r.k, 15);
        assert_eq!(r.trial, 0);
        assert!(r.nmse.is_finite() && r.nmse >= 0.0);
        assert!(r.rate_bps_hz.is_finite() && r.rate_bps_hz >= 0.0);
        assert!(r.iterations >= 1);
        assert_eq!(r.wall_time_s, 0.0);
    }

    #[test]
    fn sweep_is_deterministic_across_worker_counts() {
        let mut cfg = desk_config();
        cfg.trials = 3;
        cfg.snr_db_values = vec![-5.0, 5.0];
        cfg.estimators = vec![EstimatorKind::Sd, EstimatorKind::Mf];
        let serial = run_sweep_with_options(&cfg, Some(1), false).unwrap();
        let parallel = run_sweep_with_options(&cfg, Some(4), false).unwrap();
        let default = run_sweep(&cfg).unwrap();
        assert_eq!(serial, parallel);
        assert_eq!(serial, default);
        assert_eq!(serial.len(), 2 * 3 * 2);
    }

    #[test]
    fn records_replay_from_their_seed() {
        let mut cfg = desk_config();
        cfg.trials = 2;
        cfg.estimators = vec![EstimatorKind::Sd, EstimatorKind::Mf];
        let records = run_sweep(&cfg).unwrap();
        for r in &records {
            let outcomes = run_trial(&cfg, r.k, r.snr_db, r.seed, false).unwrap();
            let o = outcomes
                .iter()
                .find(|o| o.estimator == r.estimator)
                .unwrap();
            assert!((o.nmse - r.nmse).abs() <= 1e-12 * r.nmse.max(1.0));
            assert!((o.rate_bps_hz - r.rate_bps_hz).abs() <= 1e-12 * r.rate_bps_hz.max(1.0));
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_csv(&[], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, format!("{CSV_HEADER}\n"));

        let records = vec![
            ResultRecord {
                estimator: EstimatorKind::Sd,
                k: 84,
                snr_db: -10.0,
                trial: 0,
                seed: 123,
                nmse: 0.012345678912345,
                rate_bps_hz: 3.5,
                iterations: 12,
                wall_time_s: 0.0,
            },
            ResultRecord {
                estimator: EstimatorKind::Mf,
                k: 84,
                snr_db: -10.0,
                trial: 0,
                seed: 123,
                nmse: 1.5e-9,
                rate_bps_hz: 0.0,
                iterations: 50,
                wall_time_s: 0.0,
            },
            ResultRecord {
                estimator: EstimatorKind::Sd,
                k: 192,
                snr_db: 20.0,
                trial: 3,
                seed: 99,
                nmse: 4.0,
                rate_bps_hz: 22.25,
                iterations: 1,
                wall_time_s: 0.0,
            },
        ];
        write_csv(&records, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.ends_with('\n'));

        let back = read_csv(&path).unwrap();
        assert_eq!(back.len(), records.len());
        for (a, b) in records.iter().zip(&back) {
            assert_eq!(a.estimator, b.estimator);
            assert_eq!((a.k, a.trial, a.seed, a.iterations), (b.k, b.trial, b.seed, b.iterations));
            assert!((a.nmse - b.nmse).abs() <= 1e-9 * a.nmse.max(1.0));
            assert!((a.rate_bps_hz - b.rate_bps_hz).abs() <= 1e-9 * a.rate_bps_hz.max(1.0));
        }
    }

    #[test]
    fn csv_rejects_malformed_input() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "wrong,header\n").unwrap();
        assert!(read_csv(&path).is_err());
        std::fs::write(&path, format!("{CSV_HEADER}\nsd,1,0.0\n")).unwrap();
        assert!(read_csv(&path).is_err());
    }

    fn record_with_nmse(v: f64) -> ResultRecord {
        ResultRecord {
            estimator: EstimatorKind::Sd,
            k: 1,
            snr_db: 0.0,
            trial: 0,
            seed: 0,
            nmse: v,
            rate_bps_hz: v,
            iterations: 1,
            wall_time_s: 0.0,
        }
    }

    #[test]
    fn summarize_anchor_cases() {
        assert!(summarize(&[]).is_empty());

        let single = summarize(&[record_with_nmse(0.5)]);
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].nmse_median, 0.5);
        assert_eq!(single[0].nmse_mean, 0.5);
        assert_eq!(single[0].nmse_ci, (0.5, 0.5));

        let three = summarize(&[
            record_with_nmse(1.0),
            record_with_nmse(3.0),
            record_with_nmse(2.0),
        ]);
        assert_eq!(three.len(), 1);
        assert_eq!(three[0].nmse_median, 2.0);
        assert_eq!(three[0].count, 3);
        // reproducible CI
        let again = summarize(&[
            record_with_nmse(1.0),
            record_with_nmse(3.0),
            record_with_nmse(2.0),
        ]);
        assert_eq!(three, again);
    }

    #[test]
    fn summarize_groups_and_sorts() {
        let mut records = Vec::new();
        for (k, snr, est) in [
            (2, 5.0, EstimatorKind::Mf),
            (1, 0.0, EstimatorKind::Sd),
            (2, -5.0, EstimatorKind::Sd),
            (1, 0.0, EstimatorKind::Sd),
        ] {
            let mut r = record_with_nmse(0.1);
            r.k = k;
            r.snr_db = snr;
            r.estimator = est;
            records.push(r);
        }
        let rows = summarize(&records);
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].estimator, EstimatorKind::Sd);
        assert_eq!((rows[0].k, rows[0].snr_db), (1, 0.0));
        assert_eq!(rows[0].count, 2);
        assert_eq!((rows[1].k, rows[1].snr_db), (2, -5.0));
        assert_eq!(rows[2].estimator, EstimatorKind::Mf);
    }

    #[test]
    fn bootstrap_ci_coverage_on_gaussian_data() {
        let normal = Normal::new(2.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut covered = 0;
        let datasets = 300;
        for _ in 0..datasets {
            let sample: Vec<f64> = (0..40).map(|_| normal.sample(&mut rng)).collect();
            let mut boot_rng = ChaCha8Rng::seed_from_u64(BOOTSTRAP_SEED);
            let (lo, hi) = bootstrap_ci(&sample, &mut boot_rng);
            if (lo..=hi).contains(&2.0) {
                covered += 1;
            }
        }
        let rate = covered as f64 / datasets as f64;
        assert!((0.90..=0.99).contains(&rate), "coverage {rate}");
    }
}
