//! Sparse geometric millimeter-wave MIMO channel generation and rank-d
//! truncation of the estimation target.

use crate::linalg::{standard_complex, truncated_svd};
use crate::{C64, CMat, CVec, Error, Result};
use rand::Rng;
use std::f64::consts::PI;

/// The L geometric propagation paths of a sparse channel: complex gains and
/// departure/arrival angles in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub gains: Vec<C64>,
    pub aod: Vec<f64>,
    pub aoa: Vec<f64>,
}

impl PathSet {
    pub fn new(gains: Vec<C64>, aod: Vec<f64>, aoa: Vec<f64>) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::invalid("a PathSet needs at least one path"));
        }
        if gains.len() != aod.len() || gains.len() != aoa.len() {
            return Err(Error::dims(format!(
                "gains/aod/aoa lengths differ: {}/{}/{}",
                gains.len(),
                aod.len(),
                aoa.len()
            )));
        }
        let half_pi = PI / 2.0 + 1e-12;
        for &a in aod.iter().chain(aoa.iter()) {
            if !a.is_finite() || a.abs() > half_pi {
                return Err(Error::invalid(format!(
                    "angle {a} outside [-pi/2, pi/2]"
                )));
            }
        }
        Ok(PathSet { gains, aod, aoa })
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }
}

/// An Nr x Nt channel matrix, optionally carrying the paths it was
/// synthesized from.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub entries: CMat,
    pub paths: Option<PathSet>,
}

impl ChannelMatrix {
    pub fn from_entries(entries: CMat) -> Self {
        ChannelMatrix {
            entries,
            paths: None,
        }
    }

    pub fn nr(&self) -> usize {
        self.entries.nrows()
    }

    pub fn nt(&self) -> usize {
        self.entries.ncols()
    }
}

/// Top-d subspace decomposition of a channel: semi-unitary factors and
/// descending non-negative singular values.
#[derive(Debug, Clone)]
pub struct TruthDecomposition {
    pub left: CMat,
    pub singvals: Vec<f64>,
    pub right: CMat,
}

impl TruthDecomposition {
    pub fn rank(&self) -> usize {
        self.singvals.len()
    }

    /// left * diag(singvals) * right^H
    pub fn reconstruct(&self) -> CMat {
        let d = self.rank();
        let mut out = CMat::zeros(self.left.nrows(), self.right.nrows());
        for i in 0..d {
            out += self.left.column(i) * self.right.column(i).adjoint()
                * C64::new(self.singvals[i], 0.0);
        }
        out
    }
}

/// Half-wavelength ULA response: entry n is exp(j*pi*n*sin(angle))/sqrt(count).
pub fn steering_vector(count: usize, angle: f64) -> Result<CVec> {
    if count == 0 {
        return Err(Error::invalid("steering vector needs count >= 1"));
    }
    if !angle.is_finite() {
        return Err(Error::invalid("steering angle must be finite"));
    }
    let scale = 1.0 / (count as f64).sqrt();
    let s = angle.sin();
    Ok(CVec::from_fn(count, |n, _| {
        C64::from_polar(scale, PI * n as f64 * s)
    }))
}

/// Draws L paths: gains i.i.d. CN(0,1), angles i.i.d. uniform on
/// [-pi/2, pi/2].
pub fn draw_paths<R: Rng + ?Sized>(l: usize, rng: &mut R) -> Result<PathSet> {
    if l == 0 {
        return Err(Error::invalid("path count must be >= 1"));
    }
    let gains = (0..l).map(|_| standard_complex(rng)).collect();
    let aod = (0..l).map(|_| rng.random_range(-PI / 2.0..=PI / 2.0)).collect();
    let aoa = (0..l).map(|_| rng.random_range(-PI / 2.0..=PI / 2.0)).collect();
    PathSet::new(gains, aod, aoa)
}

/// Builds H = sqrt(Nr*Nt/L) * sum_l gain_l a_r(aoa_l) a_t(aod_l)^H.
pub fn synthesize(paths: &PathSet, nr: usize, nt: usize) -> Result<ChannelMatrix> {
    if nr == 0 || nt == 0 {
        return Err(Error::invalid("antenna counts must be >= 1"));
    }
    let l = paths.len();
    let scale = C64::new(((nr * nt) as f64 / l as f64).sqrt(), 0.0);
    let mut h = CMat::zeros(nr, nt);
    for i in 0..l {
        let ar = steering_vector(nr, paths.aoa[i])?;
        let at = steering_vector(nt, paths.aod[i])?;
        h += (&ar * at.adjoint()) * (scale * paths.gains[i]);
    }
    Ok(ChannelMatrix {
        entries: h,
        paths: Some(paths.clone()),
    })
}

/// Splits H into its best rank-d approximation (as a decomposition) and the
/// SVD residual, so that `decomposition.reconstruct() + residual == H`.
pub fn truncate(h: &ChannelMatrix, d: usize) -> Result<(TruthDecomposition, ChannelMatrix)> {
    let (left, singvals, right) = truncated_svd(&h.entries, d)?;
    let decomp = TruthDecomposition {
        left,
        singvals,
        right,
    };
    let residual = &h.entries - decomp.reconstruct();
    Ok((decomp, ChannelMatrix::from_entries(residual)))
}
