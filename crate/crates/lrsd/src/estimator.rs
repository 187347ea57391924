//! The low-rank subspace decomposition estimator: alternating minimization
//! over (U, Sigma, V) with norm-constrained least-squares subproblems, the
//! matrix-factorization baseline, and the closed-form error bounds.

use crate::channel::{truncate, ChannelMatrix};
use crate::linalg::truncated_svd;
use crate::sounding::SounderSet;
use crate::{C64, CMat, CVec, Error, Result};

/// Subspace decomposition estimate: the channel estimate is
/// U * diag(sigma) * V^H.
#[derive(Debug, Clone)]
pub struct EstimateTriple {
    pub u: CMat,
    pub sigma: CVec,
    pub v: CMat,
}

impl EstimateTriple {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn channel_estimate(&self) -> CMat {
        let d = self.rank();
        let mut scaled = self.u.clone();
        for i in 0..d {
            let mut col = scaled.column_mut(i);
            col *= self.sigma[i];
        }
        scaled * self.v.adjoint()
    }

    /// True when tr(U^H U) <= d, tr(V^H V) <= d, and ||sigma||^2 <= beta,
    /// each up to a small relative slack.
    pub fn satisfies_budgets(&self, beta: f64) -> bool {
        let d = self.rank() as f64;
        self.u.norm_squared() <= d + 1e-8
            && self.v.norm_squared() <= d + 1e-8
            && self.sigma.norm_squared() <= beta * (1.0 + 1e-8)
    }
}

/// Knobs of the alternating minimization.
#[derive(Debug, Clone, Copy)]
pub struct SDConfig {
    pub d: usize,
    pub beta: f64,
    pub max_iters: usize,
    pub stagnation_tol: f64,
    pub kkt_tol: f64,
}

impl SDConfig {
    pub fn new(d: usize, beta: f64) -> Self {
        SDConfig {
            d,
            beta,
            max_iters: 20,
            stagnation_tol: 1e-8,
            kkt_tol: 1e-8,
        }
    }

    fn validate(&self, s: &SounderSet) -> Result<()> {
        if self.d == 0 || self.d > s.nr().min(s.nt()) {
            return Err(Error::invalid(format!(
                "target rank {} must lie in 1..={}",
                self.d,
                s.nr().min(s.nt())
            )));
        }
        if !(self.beta > 0.0) {
            return Err(Error::invalid("beta must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be >= 1"));
        }
        if !(self.stagnation_tol > 0.0 && self.kkt_tol > 0.0) {
            return Err(Error::invalid("tolerances must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIters,
    Stagnation,
}

/// Objective history of one alternating-minimization run.
#[derive(Debug, Clone)]
pub struct IterationTrace {
    /// ||y - A(U Sigma V^H)||^2 after each outer iteration.
    pub objectives: Vec<f64>,
    /// Same objective after every subproblem solve (three per iteration).
    pub step_objectives: Vec<f64>,
    pub iterations_run: usize,
    pub stop_reason: StopReason,
}

/// Solution of min ||y - Gx||^2 subject to ||x||^2 <= budget. `multiplier`
/// is the KKT multiplier of the norm constraint when it is active.
#[derive(Debug, Clone)]
pub struct SphericalSolution {
    pub x: CVec,
    pub multiplier: Option<f64>,
}

/// Norm-constrained least squares: the minimum-norm LS solution when
/// feasible, otherwise the ridge solution x(mu) = (G^H G + mu I)^{-1} G^H y
/// with mu > 0 chosen so ||x(mu)||^2 = budget within `kkt_tol` relative.
pub fn spherical_ls(g: &CMat, y: &CVec, budget: f64, kkt_tol: f64) -> Result<SphericalSolution> {
    if g.nrows() != y.len() {
        return Err(Error::dims(format!(
            "design has {} rows but y has length {}",
            g.nrows(),
            y.len()
        )));
    }
    if g.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
        || y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::invalid("spherical LS inputs must be finite"));
    }
    let gram = g.ad_mul(g);
    let ghy = CVec::from_column_slice(g.ad_mul(y).as_slice());
    solve_gram(gram, ghy, budget, kkt_tol)
}

/// Same problem, stated through the normal equations. `budget` may be
/// infinite, which yields the unconstrained minimum-norm solution.
fn solve_gram(gram: CMat, ghy: CVec, budget: f64, kkt_tol: f64) -> Result<SphericalSolution> {
    if !(budget > 0.0) {
        return Err(Error::invalid("budget must be positive"));
    }
    let n = gram.nrows();
    // Hermitize to protect the eigensolver from accumulation asymmetry.
    let herm = (&gram + gram.adjoint()) * C64::new(0.5, 0.0);
    let scale = herm.norm();
    let mut eig = herm.clone().symmetric_eigen();
    // The QL iteration can fail to converge (NaN output) on near-degenerate
    // spectra; a tiny diagonal shift breaks the tie without changing the
    // solution beyond working precision.
    if !eigen_is_finite(&eig) {
        for jitter in [1e-14, 1e-12, 1e-9] {
            let mut shifted = herm.clone();
            for i in 0..n {
                shifted[(i, i)] += C64::new(scale * jitter, 0.0);
            }
            eig = shifted.symmetric_eigen();
            if eigen_is_finite(&eig) {
                break;
            }
        }
        if !eigen_is_finite(&eig) {
            return Err(Error::Numerical(
                "eigendecomposition of the normal equations did not converge".into(),
            ));
        }
    }
    let max_eig = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    if max_eig <= 0.0 || ghy.norm() == 0.0 {
        return Ok(SphericalSolution {
            x: CVec::zeros(n),
            multiplier: None,
        });
    }
    let rank_tol = max_eig * n as f64 * f64::EPSILON;
    let b = eig.eigenvectors.ad_mul(&ghy);

    // Minimum-norm solution over the numerical range of the Gram matrix.
    let mut w = CVec::zeros(n);
    for i in 0..n {
        if eig.eigenvalues[i] > rank_tol {
            w[i] = b[i] / C64::new(eig.eigenvalues[i], 0.0);
        }
    }
    let min_norm_sq = w.norm_squared();
    if min_norm_sq <= budget * (1.0 + 1e-12) || budget.is_infinite() {
        return Ok(SphericalSolution {
            x: &eig.eigenvectors * w,
            multiplier: None,
        });
    }

    // Constraint is active: bisect the monotone g(mu) = ||x(mu)||^2.
    let lambda: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let bsq: Vec<f64> = b.iter().map(|z| z.norm_sqr()).collect();
    let norm_sq_at = |mu: f64| -> f64 {
        lambda
            .iter()
            .zip(&bsq)
            .map(|(&l, &b2)| b2 / ((l + mu) * (l + mu)))
            .sum()
    };
    // g(mu) <= ||b||^2 / mu^2, so this upper bracket is always feasible.
    let mut hi = (bsq.iter().sum::<f64>() / budget).sqrt();
    let mut lo = 0.0f64;
    let mut mu = hi;
    for _ in 0..200 {
        mu = 0.5 * (lo + hi);
        let val = norm_sq_at(mu);
        if (val - budget).abs() <= kkt_tol * budget {
            break;
        }
        if val > budget {
            lo = mu;
        } else {
            hi = mu;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let mut w = CVec::zeros(n);
    for i in 0..n {
        w[i] = b[i] / C64::new(lambda[i] + mu, 0.0);
    }
    Ok(SphericalSolution {
        x: &eig.eigenvectors * w,
        multiplier: Some(mu),
    })
}

fn eigen_is_finite(eig: &nalgebra::SymmetricEigen<C64, nalgebra::Dyn>) -> bool {
    eig.eigenvalues.iter().all(|l| l.is_finite())
        && eig
            .eigenvectors
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
}

fn check_lengths(s: &SounderSet, y: &CVec) -> Result<()> {
    if y.len() != s.m() {
        return Err(Error::dims(format!(
            "observation length {} != M = {}",
            y.len(),
            s.m()
        )));
    }
    Ok(())
}

/// ||y - A(U diag(sigma) V^H)||^2 without materializing the channel.
pub fn residual_norm_sq(s: &SounderSet, y: &CVec, u: &CMat, sigma: &CVec, v: &CMat) -> f64 {
    let d = sigma.len();
    let n = s.n_rf();
    let mut acc = 0.0;
    for k in 0..s.k_uses() {
        let wu = s.combiner(k).ad_mul(u); // N x d
        let vf = v.ad_mul(s.precoder(k)); // d x 1
        let yk = y.rows(k * n, n);
        for row in 0..n {
            let mut pred = C64::new(0.0, 0.0);
            for i in 0..d {
                pred += wu[(row, i)] * sigma[i] * vf[i];
            }
            acc += (yk[row] - pred).norm_sqr();
        }
    }
    acc
}

/// Explicit M x (d*Nr) design for the column-subspace step, acting on
/// vec(U). Used by tests and small problems; the solver itself accumulates
/// the normal equations.
pub fn build_u_design(s: &SounderSet, sigma: &CVec, v: &CMat) -> CMat {
    let d = sigma.len();
    let (nr, n) = (s.nr(), s.n_rf());
    let mut g = CMat::zeros(s.m(), d * nr);
    for k in 0..s.k_uses() {
        let mut c = v.ad_mul(s.precoder(k)); // d x 1
        for i in 0..d {
            c[i] *= sigma[i];
        }
        let wh = s.combiner(k).adjoint(); // N x Nr
        for i in 0..d {
            for col in 0..nr {
                for row in 0..n {
                    g[(k * n + row, i * nr + col)] = c[i] * wh[(row, col)];
                }
            }
        }
    }
    g
}

/// Explicit M x (d*Nt) design for the row-subspace step, acting on
/// vec(V^H).
pub fn build_v_design(s: &SounderSet, u: &CMat, sigma: &CVec) -> CMat {
    let d = sigma.len();
    let (nt, n) = (s.nt(), s.n_rf());
    let mut g = CMat::zeros(s.m(), d * nt);
    for k in 0..s.k_uses() {
        let mut c = s.combiner(k).ad_mul(u); // N x d
        for i in 0..d {
            let mut col = c.column_mut(i);
            col *= sigma[i];
        }
        let f = s.precoder(k);
        for p in 0..nt {
            for i in 0..d {
                for row in 0..n {
                    g[(k * n + row, p * d + i)] = f[p] * c[(row, i)];
                }
            }
        }
    }
    g
}

/// M x d design whose column i is A(u_i v_i^H), for the power-allocation
/// step.
pub fn build_power_design(s: &SounderSet, u: &CMat, v: &CMat) -> CMat {
    let d = u.ncols();
    let n = s.n_rf();
    let mut p = CMat::zeros(s.m(), d);
    for k in 0..s.k_uses() {
        let wu = s.combiner(k).ad_mul(u); // N x d
        let vf = v.ad_mul(s.precoder(k)); // d x 1
        for i in 0..d {
            for row in 0..n {
                p[(k * n + row, i)] = wu[(row, i)] * vf[i];
            }
        }
    }
    p
}

/// (S1): optimize the column subspace U with Sigma and V fixed, subject to
/// tr(U^H U) <= d.
pub fn solve_u(
    s: &SounderSet,
    y: &CVec,
    sigma: &CVec,
    v: &CMat,
    kkt_tol: f64,
) -> Result<CMat> {
    check_lengths(s, y)?;
    let d = sigma.len();
    if v.ncols() != d || v.nrows() != s.nt() {
        return Err(Error::dims("V shape inconsistent with sigma and sounders"));
    }
    let (gram, rhs) = gram_u(s, y, sigma, v);
    let sol = solve_gram(gram, rhs, d as f64, kkt_tol)?;
    Ok(CMat::from_column_slice(s.nr(), d, sol.x.as_slice()))
}

/// (S2): optimize the row subspace V with U and Sigma fixed, subject to
/// tr(V^H V) <= d. Solved in vec(V^H) through the linearization
/// W_k^H U Sigma V^H f_k = (f_k^T kron (W_k^H U Sigma)) vec(V^H).
pub fn solve_v(
    s: &SounderSet,
    y: &CVec,
    u: &CMat,
    sigma: &CVec,
    kkt_tol: f64,
) -> Result<CMat> {
    check_lengths(s, y)?;
    let d = sigma.len();
    if u.ncols() != d || u.nrows() != s.nr() {
        return Err(Error::dims("U shape inconsistent with sigma and sounders"));
    }
    let (gram, rhs) = gram_v(s, y, u, sigma);
    let sol = solve_gram(gram, rhs, d as f64, kkt_tol)?;
    // x holds vec(V^H); undo the conjugate transpose.
    let nt = s.nt();
    let mut v = CMat::zeros(nt, d);
    for p in 0..nt {
        for i in 0..d {
            v[(p, i)] = sol.x[p * d + i].conj();
        }
    }
    Ok(v)
}

/// (S3): optimize the diagonal power allocation with U and V fixed, subject
/// to ||sigma||^2 <= beta.
pub fn solve_sigma(
    s: &SounderSet,
    y: &CVec,
    u: &CMat,
    v: &CMat,
    beta: f64,
    kkt_tol: f64,
) -> Result<CVec> {
    check_lengths(s, y)?;
    if u.ncols() != v.ncols() || u.nrows() != s.nr() || v.nrows() != s.nt() {
        return Err(Error::dims("U/V shapes inconsistent with sounders"));
    }
    let p = build_power_design(s, u, v);
    let sol = spherical_ls(&p, y, beta, kkt_tol)?;
    Ok(sol.x)
}

/// Algorithm: alternating minimization for low-rank subspace decomposition.
/// Initializes from the top-d SVD of the adjoint image of y and cycles
/// S1 -> S2 -> S3 until the objective stagnates or `max_iters` is reached.
pub fn sd_estimate(
    s: &SounderSet,
    y: &CVec,
    config: &SDConfig,
) -> Result<(EstimateTriple, IterationTrace)> {
    config.validate(s)?;
    check_lengths(s, y)?;
    let d = config.d;

    let h0 = s.adjoint(y)?;
    let (mut u, singvals, mut v) = truncated_svd(&h0, d)?;
    let mut sigma = CVec::from_fn(d, |i, _| C64::new(singvals[i], 0.0));
    // The spectral initializer may exceed the power budget at high noise.
    let s0 = sigma.norm_squared();
    if s0 > config.beta {
        sigma *= C64::new((config.beta / s0).sqrt(), 0.0);
    }

    let mut objectives = Vec::new();
    let mut step_objectives = Vec::new();
    let mut prev = residual_norm_sq(s, y, &u, &sigma, &v);
    let mut stop_reason = StopReason::MaxIters;
    let mut iterations_run = 0;

    for _ in 0..config.max_iters {
        // Each block update is an exact subproblem solve in theory, but the
        // eigendecomposition behind it carries finite precision; keep the
        // previous block iterate whenever a solve fails to improve.
        let mut step = prev;

        let u_next = solve_u(s, y, &sigma, &v, config.kkt_tol)?;
        let u_obj = residual_norm_sq(s, y, &u_next, &sigma, &v);
        if u_obj <= step {
            u = u_next;
            step = u_obj;
        }
        step_objectives.push(step);

        let v_next = solve_v(s, y, &u, &sigma, config.kkt_tol)?;
        let v_obj = residual_norm_sq(s, y, &u, &sigma, &v_next);
        if v_obj <= step {
            v = v_next;
            step = v_obj;
        }
        step_objectives.push(step);

        let sigma_next = solve_sigma(s, y, &u, &v, config.beta, config.kkt_tol)?;
        let s_obj = residual_norm_sq(s, y, &u, &sigma_next, &v);
        if s_obj <= step {
            sigma = sigma_next;
            step = s_obj;
        }
        let obj = step;
        step_objectives.push(obj);
        objectives.push(obj);
        iterations_run += 1;

        let decrease = (prev - obj) / prev.max(f64::MIN_POSITIVE);
        prev = obj;
        if decrease < config.stagnation_tol {
            stop_reason = StopReason::Stagnation;
            break;
        }
    }

    // With semi-unitary factors the power budget bounds the estimate norm
    // directly; the trace relaxation breaks that link, so restore it by
    // rescaling the singular values when the assembled estimate exceeds beta.
    let power = (&u * CMat::from_diagonal(&sigma) * v.adjoint()).norm_squared();
    if power > config.beta {
        sigma *= C64::new((config.beta / power).sqrt(), 0.0);
    }

    Ok((
        EstimateTriple { u, sigma, v },
        IterationTrace {
            objectives,
            step_objectives,
            iterations_run,
            stop_reason,
        },
    ))
}

/// Matrix-factorization baseline: unconstrained alternating least squares on
/// H = left * right^H, initialized from the top-L SVD of the adjoint image.
pub fn mf_estimate(s: &SounderSet, y: &CVec, l: usize, iters: usize) -> Result<ChannelMatrix> {
    Ok(mf_estimate_traced(s, y, l, iters)?.0)
}

/// MF baseline that also reports the objective after every half-sweep.
pub fn mf_estimate_traced(
    s: &SounderSet,
    y: &CVec,
    l: usize,
    iters: usize,
) -> Result<(ChannelMatrix, Vec<f64>)> {
    check_lengths(s, y)?;
    if l == 0 || l > s.nr().min(s.nt()) {
        return Err(Error::invalid(format!(
            "factor rank {} must lie in 1..={}",
            l,
            s.nr().min(s.nt())
        )));
    }
    let h0 = s.adjoint(y)?;
    let (u0, singvals, v0) = truncated_svd(&h0, l)?;
    let mut left = u0;
    let mut right = v0;
    for i in 0..l {
        let root = C64::new(singvals[i].sqrt(), 0.0);
        let mut cl = left.column_mut(i);
        cl *= root;
        let mut cr = right.column_mut(i);
        cr *= root;
    }

    let ones = CVec::from_element(l, C64::new(1.0, 0.0));
    let mut objectives = Vec::with_capacity(2 * iters);
    let mut prev = residual_norm_sq(s, y, &left, &ones, &right);
    for _ in 0..iters {
        left = solve_factor_left(s, y, &right)?;
        objectives.push(residual_norm_sq(s, y, &left, &ones, &right));
        right = solve_factor_right(s, y, &left)?;
        let obj = residual_norm_sq(s, y, &left, &ones, &right);
        objectives.push(obj);
        let decrease = (prev - obj) / prev.max(f64::MIN_POSITIVE);
        prev = obj;
        if decrease < 1e-8 {
            break;
        }
    }
    let est = &left * right.adjoint();
    Ok((ChannelMatrix::from_entries(est), objectives))
}

fn solve_factor_left(s: &SounderSet, y: &CVec, right: &CMat) -> Result<CMat> {
    let ones = CVec::from_element(right.ncols(), C64::new(1.0, 0.0));
    solve_factor(s, y, right, &ones, true)
}

fn solve_factor_right(s: &SounderSet, y: &CVec, left: &CMat) -> Result<CMat> {
    let ones = CVec::from_element(left.ncols(), C64::new(1.0, 0.0));
    solve_factor(s, y, left, &ones, false)
}

fn solve_factor(
    s: &SounderSet,
    y: &CVec,
    fixed: &CMat,
    ones: &CVec,
    left_side: bool,
) -> Result<CMat> {
    // Reuse the constrained solvers with an infinite budget.
    let dim = ones.len()
        * if left_side { s.nr() } else { s.nt() };
    let _ = dim;
    if left_side {
        solve_u_unconstrained(s, y, ones, fixed)
    } else {
        solve_v_unconstrained(s, y, fixed, ones)
    }
}

fn solve_u_unconstrained(s: &SounderSet, y: &CVec, sigma: &CVec, v: &CMat) -> Result<CMat> {
    let g = gram_u(s, y, sigma, v);
    let sol = solve_gram(g.0, g.1, f64::INFINITY, 1e-8)?;
    Ok(CMat::from_column_slice(s.nr(), sigma.len(), sol.x.as_slice()))
}

fn solve_v_unconstrained(s: &SounderSet, y: &CVec, u: &CMat, sigma: &CVec) -> Result<CMat> {
    let g = gram_v(s, y, u, sigma);
    let sol = solve_gram(g.0, g.1, f64::INFINITY, 1e-8)?;
    let (nt, d) = (s.nt(), sigma.len());
    let mut v = CMat::zeros(nt, d);
    for p in 0..nt {
        for i in 0..d {
            v[(p, i)] = sol.x[p * d + i].conj();
        }
    }
    Ok(v)
}

fn gram_u(s: &SounderSet, y: &CVec, sigma: &CVec, v: &CMat) -> (CMat, CVec) {
    let d = sigma.len();
    let (nr, n) = (s.nr(), s.n_rf());
    let dim = d * nr;
    let mut gram = CMat::zeros(dim, dim);
    let mut rhs = CVec::zeros(dim);
    for k in 0..s.k_uses() {
        let w = s.combiner(k);
        let mut c = v.ad_mul(s.precoder(k));
        for i in 0..d {
            c[i] *= sigma[i];
        }
        let wwh = w * w.adjoint();
        let wy = w * y.rows(k * n, n);
        for p in 0..d {
            let cp = c[p].conj();
            for q in 0..d {
                let coeff = cp * c[q];
                for col in 0..nr {
                    for row in 0..nr {
                        gram[(p * nr + row, q * nr + col)] += coeff * wwh[(row, col)];
                    }
                }
            }
            for row in 0..nr {
                rhs[p * nr + row] += cp * wy[row];
            }
        }
    }
    (gram, rhs)
}

fn gram_v(s: &SounderSet, y: &CVec, u: &CMat, sigma: &CVec) -> (CMat, CVec) {
    let d = sigma.len();
    let (nt, n) = (s.nt(), s.n_rf());
    let dim = d * nt;
    let mut gram = CMat::zeros(dim, dim);
    let mut rhs = CVec::zeros(dim);
    // The gram is a sum of kron(conj(f_k) f_k^T, C_k^H C_k) blocks; it is
    // hermitian, so only the lower block triangle is accumulated and the
    // rest mirrored afterwards. This loop dominates large-system runs.
    for k in 0..s.k_uses() {
        let mut c = s.combiner(k).ad_mul(u);
        for i in 0..d {
            let mut col = c.column_mut(i);
            col *= sigma[i];
        }
        let cc = c.ad_mul(&c);
        let cy = c.ad_mul(&y.rows(k * n, n));
        let f = s.precoder(k);
        let cc_s = cc.as_slice();
        let gs = gram.as_mut_slice();
        for q in 0..nt {
            let fq = f[q];
            for p in q..nt {
                let coeff = f[p].conj() * fq;
                for j in 0..d {
                    let base = (q * d + j) * dim + p * d;
                    let col = &cc_s[j * d..(j + 1) * d];
                    for i in 0..d {
                        gs[base + i] += coeff * col[i];
                    }
                }
            }
            let fqc = fq.conj();
            for i in 0..d {
                rhs[q * d + i] += fqc * cy[i];
            }
        }
    }
    for q in 0..nt {
        for p in (q + 1)..nt {
            for j in 0..d {
                for i in 0..d {
                    gram[(q * d + j, p * d + i)] = gram[(p * d + i, q * d + j)].conj();
                }
            }
        }
    }
    (gram, rhs)
}

/// Realized error bound of the estimation theorem:
/// min{ 4 Nt Nr ||A(H_{L\d}) + n||^2 / ((1-delta_2d) M), 2 beta }.
pub fn realized_error_bound(
    h: &ChannelMatrix,
    d: usize,
    delta2d: f64,
    s: &SounderSet,
    noise: &CVec,
    beta: f64,
) -> Result<f64> {
    if !(0.0..1.0).contains(&delta2d) {
        return Err(Error::invalid(format!(
            "delta_2d must lie in [0,1), got {delta2d}"
        )));
    }
    check_lengths(s, noise)?;
    let (_, residual) = truncate(h, d)?;
    let perturbed = s.forward(&residual.entries)? + noise;
    let m = s.m() as f64;
    let first = 4.0 * (s.nr() * s.nt()) as f64 * perturbed.norm_squared()
        / ((1.0 - delta2d) * m);
    Ok(first.min(2.0 * beta))
}

/// Closed-form MSE bound min{ 4 Nt Nr sigma^2 / (1-delta_2d), 2 beta }.
pub fn mse_bound(sigma2: f64, nr: usize, nt: usize, delta2d: f64, beta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&delta2d) {
        return Err(Error::invalid(format!(
            "delta_2d must lie in [0,1), got {delta2d}"
        )));
    }
    if !(sigma2 >= 0.0) {
        return Err(Error::invalid("sigma^2 must be >= 0"));
    }
    Ok((4.0 * (nr * nt) as f64 * sigma2 / (1.0 - delta2d)).min(2.0 * beta))
}
