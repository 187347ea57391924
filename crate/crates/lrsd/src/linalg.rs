//! Shared complex linear-algebra helpers.

use crate::{C64, CMat, CVec, Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;

/// Draws one circular complex Gaussian CN(0,1) sample: real and imaginary
/// parts each N(0, 1/2), unit total variance.
pub fn standard_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with i.i.d. CN(0,1) entries.
pub fn standard_complex_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| standard_complex(rng))
}

/// Vector with i.i.d. CN(0,1) entries.
pub fn standard_complex_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> CVec {
    CVec::from_fn(len, |_, _| standard_complex(rng))
}

/// Random complex vector of unit Euclidean norm.
pub fn random_unit_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> CVec {
    loop {
        let v = standard_complex_vector(len, rng);
        let n = v.norm();
        if n > 1e-12 {
            return v / C64::new(n, 0.0);
        }
    }
}

/// Random rank-`rank` matrix of unit Frobenius norm, built as a product of
/// two i.i.d. complex Gaussian factors.
pub fn random_unit_rank_matrix<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rank: usize,
    rng: &mut R,
) -> CMat {
    loop {
        let g1 = standard_complex_matrix(rows, rank, rng);
        let g2 = standard_complex_matrix(cols, rank, rng);
        let h = &g1 * g2.adjoint();
        let n = h.norm();
        if n > 1e-12 {
            return h / C64::new(n, 0.0);
        }
    }
}

/// Top-`d` singular triplets of `a`, with a deterministic phase convention:
/// the largest-modulus entry of each left singular vector is rotated to be
/// real non-negative.
///
/// Returns `(u, singvals, v)` with `u: rows x d`, `v: cols x d`, and
/// singular values sorted descending.
pub fn truncated_svd(a: &CMat, d: usize) -> Result<(CMat, Vec<f64>, CMat)> {
    let min_dim = a.nrows().min(a.ncols());
    if d == 0 || d > min_dim {
        return Err(Error::invalid(format!(
            "truncation rank {} must lie in 1..={}",
            d, min_dim
        )));
    }
    let svd = a.clone().svd(true, true);
    let u_full = svd.u.ok_or_else(|| Error::Numerical("SVD produced no U".into()))?;
    let vt_full = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD produced no V^H".into()))?;

    let mut u = CMat::zeros(a.nrows(), d);
    let mut v = CMat::zeros(a.ncols(), d);
    let mut singvals = Vec::with_capacity(d);
    for i in 0..d {
        let sigma = svd.singular_values[i];
        singvals.push(sigma);
        let ui = u_full.column(i);
        // Phase convention: rotate so the dominant entry of u_i is real >= 0.
        let (mut pivot, mut best) = (C64::new(1.0, 0.0), 0.0);
        for z in ui.iter() {
            if z.norm() > best {
                best = z.norm();
                pivot = *z;
            }
        }
        let phase = if best > 0.0 {
            pivot.conj() / C64::new(best, 0.0)
        } else {
            C64::new(1.0, 0.0)
        };
        for r in 0..a.nrows() {
            u[(r, i)] = ui[r] * phase;
        }
        // v_i column is the conjugate of row i of V^H, rotated by the
        // conjugate phase so u_i * sigma * v_i^H is unchanged.
        for c in 0..a.ncols() {
            v[(c, i)] = vt_full[(i, c)].conj() * phase;
        }
    }
    Ok((u, singvals, v))
}

/// Kronecker product, used by tests and the explicit design-matrix builders.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let scale = a[(i, j)];
            for p in 0..br {
                for q in 0..bc {
                    out[(i * br + p, j * bc + q)] = scale * b[(p, q)];
                }
            }
        }
    }
    out
}

/// Column-major vectorization.
pub fn vec_of(a: &CMat) -> CVec {
    CVec::from_column_slice(a.as_slice())
}
