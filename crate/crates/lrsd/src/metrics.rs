//! Evaluation metrics: NMSE against the low-rank target and log-det
//! spectrum efficiency under SVD-derived precoders.

use crate::channel::ChannelMatrix;
use crate::linalg::truncated_svd;
use crate::{C64, CMat, Error, Result};

/// Fully digital receive/transmit pairs with orthonormal columns.
#[derive(Debug, Clone)]
pub struct PrecoderPair {
    pub combiner: CMat,
    pub precoder: CMat,
}

impl PrecoderPair {
    pub fn new(combiner: CMat, precoder: CMat) -> Result<Self> {
        if combiner.ncols() != precoder.ncols() {
            return Err(Error::dims(format!(
                "combiner has {} streams but precoder has {}",
                combiner.ncols(),
                precoder.ncols()
            )));
        }
        let d = combiner.ncols();
        let eye = CMat::identity(d, d);
        if (combiner.ad_mul(&combiner) - &eye).norm() > 1e-10 {
            return Err(Error::invalid("combiner columns are not orthonormal"));
        }
        if (precoder.ad_mul(&precoder) - &eye).norm() > 1e-10 {
            return Err(Error::invalid("precoder columns are not orthonormal"));
        }
        Ok(PrecoderPair { combiner, precoder })
    }

    pub fn streams(&self) -> usize {
        self.combiner.ncols()
    }
}

/// ||H_ref - H_hat||_F^2 / ||H_ref||_F^2.
pub fn nmse(h_ref: &ChannelMatrix, h_hat: &ChannelMatrix) -> Result<f64> {
    if h_ref.entries.shape() != h_hat.entries.shape() {
        return Err(Error::dims(format!(
            "reference is {}x{} but estimate is {}x{}",
            h_ref.nr(),
            h_ref.nt(),
            h_hat.nr(),
            h_hat.nt()
        )));
    }
    let denom = h_ref.entries.norm_squared();
    if denom == 0.0 {
        return Err(Error::invalid("NMSE reference must be nonzero"));
    }
    Ok((&h_ref.entries - &h_hat.entries).norm_squared() / denom)
}

/// Top-d left/right singular vectors of the estimate, used as fully digital
/// combiner and precoder.
pub fn precoders_from_estimate(h_hat: &ChannelMatrix, d: usize) -> Result<PrecoderPair> {
    let (w, _, f) = truncated_svd(&h_hat.entries, d)?;
    PrecoderPair::new(w, f)
}

/// log2 det(I + (1/sigma2) R_n^{-1} Htilde Htilde^H) with Htilde = W^H H F
/// and effective-noise covariance R_n = W^H W.
pub fn spectrum_efficiency(h: &ChannelMatrix, p: &PrecoderPair, sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(Error::invalid(format!(
            "noise variance must be positive, got {sigma2}"
        )));
    }
    if p.combiner.nrows() != h.nr() || p.precoder.nrows() != h.nt() {
        return Err(Error::dims("precoder pair does not match channel shape"));
    }
    let d = p.streams();
    let htilde = p.combiner.ad_mul(&(&h.entries * &p.precoder)); // d x d
    let rn = p.combiner.ad_mul(&p.combiner);
    let signal = &htilde * htilde.adjoint() * C64::new(1.0 / sigma2, 0.0);
    let rhs = rn
        .clone()
        .lu()
        .solve(&signal)
        .ok_or_else(|| Error::Numerical("effective-noise covariance is singular".into()))?;
    let inner = CMat::identity(d, d) + rhs;
    let det = inner.lu().determinant();
    let rate = det.norm().log2();
    if !rate.is_finite() {
        return Err(Error::Numerical("log-det rate is not finite".into()));
    }
    Ok(rate.max(0.0))
}
