//! Closed-form concentration/tail bounds for the random sounder ensemble and
//! empirical verification of its restricted isometry behaviour.

use crate::linalg::{random_unit_rank_matrix, random_unit_vector};
use crate::sounding::SounderSet;
use crate::{C64, CMat, CVec, Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Parameters of the tail/RIP bounds.
#[derive(Debug, Clone, Copy)]
pub struct TailParams {
    pub alpha: f64,
    pub m: usize,
    pub delta: f64,
}

impl TailParams {
    pub fn new(alpha: f64, m: usize, delta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(format!("alpha {alpha} outside (0,1)")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid(format!("delta {delta} outside (0,1)")));
        }
        if m == 0 {
            return Err(Error::invalid("M must be >= 1"));
        }
        Ok(TailParams { alpha, m, delta })
    }
}

/// Problem dimensions attached to a report.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ReportDims {
    pub nr: usize,
    pub nt: usize,
    pub n: usize,
    pub k: usize,
    pub l: usize,
}

/// Empirical-vs-theoretical concentration diagnostics for one dimension set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RIPReport {
    pub alpha_grid: Vec<f64>,
    pub empirical_tail: Vec<f64>,
    pub theoretical_tail: Vec<f64>,
    pub delta_hat: f64,
    pub trials: usize,
    pub dims: ReportDims,
}

/// Result of one Monte Carlo moment comparison between the unit-phase row
/// ensemble and the Bernoulli comparator.
#[derive(Debug, Clone, Copy)]
pub struct MomentCheck {
    pub lhs: f64,
    pub lhs_stderr: f64,
    pub rhs: f64,
    pub rhs_stderr: f64,
}

/// ||sqrt(Nr*Nt/M) * A(H)||^2, the quantity whose concentration around
/// ||H||_F^2 defines the restricted isometry of the ensemble.
pub fn normalized_energy(s: &SounderSet, h: &CMat) -> Result<f64> {
    let y = s.forward(h)?;
    let scale = (s.nr() * s.nt()) as f64 / s.m() as f64;
    Ok(scale * y.norm_squared())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha {alpha} outside (0,1)")));
    }
    Ok(())
}

/// Finite-sample two-sided tail bound 2*exp(-(M/2)*(alpha^2/2 - alpha^3/3)).
pub fn tail_bound(alpha: f64, m: usize) -> Result<f64> {
    check_alpha(alpha)?;
    let c = alpha * alpha / 2.0 - alpha * alpha * alpha / 3.0;
    Ok(2.0 * (-(m as f64) / 2.0 * c).exp())
}

/// CLT (large-system) tail bound 2*exp(-M*alpha^2/4).
pub fn clt_tail(alpha: f64, m: usize) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(2.0 * (-(m as f64) * alpha * alpha / 4.0).exp())
}

/// RIP success probability 1 - 2*exp(-qM) with
/// q = alpha^2/4 - alpha^3/6 - ln(36*sqrt(2)/delta)/2, returned verbatim.
///
/// The flag is set when q <= 0, in which case the bound carries no
/// information (that is the case for every admissible (alpha, delta); see the
/// module tests).
pub fn rip_success_probability(alpha: f64, delta: f64, m: usize) -> Result<(f64, bool)> {
    let p = TailParams::new(alpha, m, delta)?;
    let q = p.alpha * p.alpha / 4.0 - p.alpha * p.alpha * p.alpha / 6.0
        - (36.0 * 2f64.sqrt() / p.delta).ln() / 2.0;
    Ok((1.0 - 2.0 * (-q * m as f64).exp(), q <= 0.0))
}

/// Observation count needed for the rank-L RIP: 2*L*(Nt+Nr+1).
pub fn min_observations(l: usize, nr: usize, nt: usize) -> usize {
    2 * l * (nt + nr + 1)
}

/// Observation count required by the error-bound theorem: 4*d*(Nt+Nr+1).
pub fn min_observations_bound(d: usize, nr: usize, nt: usize) -> usize {
    4 * d * (nt + nr + 1)
}

/// Channel uses needed to collect `m` observations with `n` RF chains.
pub fn channel_uses_for(m: usize, n: usize) -> usize {
    m.div_ceil(n)
}

/// Empirical lower bound on the rank-`l` RIP constant of a fixed sounder
/// set: the max of |normalized_energy - 1| over random unit-Frobenius
/// rank-`l` probes.
pub fn estimate_delta<R: Rng + ?Sized>(
    s: &SounderSet,
    l: usize,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::invalid("delta estimation needs trials >= 1"));
    }
    if l == 0 || l > s.nr().min(s.nt()) {
        return Err(Error::invalid(format!(
            "probe rank {} must lie in 1..={}",
            l,
            s.nr().min(s.nt())
        )));
    }
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let h = random_unit_rank_matrix(s.nr(), s.nt(), l, rng);
        let e = normalized_energy(s, &h)?;
        worst = worst.max((e - 1.0).abs());
    }
    Ok(worst)
}

/// Monte Carlo check of the row-moment comparison
/// E|a^H x|^{2u} <= E|b^T |x||^{2u}, with `a` a unit-phase row and `b` a
/// +-1/sqrt(Nr*Nt) Bernoulli row.
pub fn moment_check<R: Rng + ?Sized>(
    u: u32,
    nr: usize,
    nt: usize,
    x: &CVec,
    trials: usize,
    rng: &mut R,
) -> Result<MomentCheck> {
    if !(u == 1 || u == 2) {
        return Err(Error::invalid("moment order u must be 1 or 2"));
    }
    if trials == 0 {
        return Err(Error::invalid("moment check needs trials >= 1"));
    }
    let dim = nr * nt;
    if x.len() != dim {
        return Err(Error::dims(format!(
            "vector length {} != Nr*Nt = {dim}",
            x.len()
        )));
    }
    if (x.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::invalid("x must have unit norm"));
    }
    let scale = 1.0 / (dim as f64).sqrt();
    let xabs: Vec<f64> = x.iter().map(|z| z.norm()).collect();

    let mut lhs = RunningMoments::default();
    let mut rhs = RunningMoments::default();
    for _ in 0..trials {
        // unit-phase row applied to x
        let mut acc = C64::new(0.0, 0.0);
        for xi in x.iter() {
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            acc += C64::from_polar(scale, theta) * xi;
        }
        lhs.push(acc.norm_sqr().powi(u as i32));

        // Bernoulli row applied to |x|
        let mut acc = 0.0;
        for &xa in &xabs {
            let sign = if rng.random::<bool>() { scale } else { -scale };
            acc += sign * xa;
        }
        rhs.push((acc * acc).powi(u as i32));
    }
    Ok(MomentCheck {
        lhs: lhs.mean(),
        lhs_stderr: lhs.stderr(),
        rhs: rhs.mean(),
        rhs_stderr: rhs.stderr(),
    })
}

#[derive(Default)]
struct RunningMoments {
    n: usize,
    sum: f64,
    sum_sq: f64,
}

impl RunningMoments {
    fn push(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    fn stderr(&self) -> f64 {
        let n = self.n as f64;
        let var = (self.sum_sq / n - self.mean() * self.mean()).max(0.0);
        (var / n).sqrt()
    }
}

/// Runs `trials` independent (sounder, rank-`l` probe) draws and tabulates
/// empirical tail frequencies against the closed-form bound.
pub fn tail_report(
    dims: ReportDims,
    alphas: &[f64],
    trials: usize,
    seed: u64,
) -> Result<RIPReport> {
    if trials == 0 {
        return Err(Error::invalid("tail report needs trials >= 1"));
    }
    for &a in alphas {
        check_alpha(a)?;
    }
    let m = dims.k * dims.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut exceed = vec![0usize; alphas.len()];
    let mut delta_hat: f64 = 0.0;
    for _ in 0..trials {
        let s = SounderSet::generate(dims.k, dims.n, dims.nr, dims.nt, &mut rng)?;
        let h = random_unit_rank_matrix(dims.nr, dims.nt, dims.l, &mut rng);
        let dev = (normalized_energy(&s, &h)? - 1.0).abs();
        delta_hat = delta_hat.max(dev);
        for (j, &a) in alphas.iter().enumerate() {
            if dev >= a {
                exceed[j] += 1;
            }
        }
    }
    Ok(RIPReport {
        alpha_grid: alphas.to_vec(),
        empirical_tail: exceed
            .iter()
            .map(|&c| c as f64 / trials as f64)
            .collect(),
        theoretical_tail: alphas
            .iter()
            .map(|&a| tail_bound(a, m))
            .collect::<Result<_>>()?,
        delta_hat,
        trials,
        dims,
    })
}

/// Helper for statistical assertions on bounded tail probabilities: the
/// lower endpoint of the Wilson score interval at `z` standard deviations.
pub fn wilson_lower(p_hat: f64, n: usize, z: f64) -> f64 {
    let n = n as f64;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = p_hat + z2 / (2.0 * n);
    let half = z * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half) / denom).max(0.0)
}

/// Draws random unit vectors for moment checks; exposed so the CLI and tests
/// share one construction.
pub fn random_probe_vector<R: Rng + ?Sized>(nr: usize, nt: usize, rng: &mut R) -> CVec {
    random_unit_vector(nr * nt, rng)
}
