//! Random constant-modulus subspace sounders, the affine measurement map,
//! its adjoint, and noisy observations.
//!
//! A sounder set holds K channel uses; use k projects the channel through an
//! analog combiner W_k (Nr x N, entries of modulus 1/sqrt(Nr)) and an analog
//! precoder f_k (length Nt, entries of modulus 1/sqrt(Nt)). Observation m =
//! (k-1)*N + i is tr(X_m^H H) with the rank-one factor X_m = W_k[:,i] f_k^H.

use crate::channel::ChannelMatrix;
use crate::linalg::standard_complex;
use crate::{C64, CMat, CVec, Error, Result};
use rand::Rng;
use std::f64::consts::TAU;

/// Default cap on materialized sensing-matrix entries (M * Nr * Nt).
pub const DEFAULT_MATRIX_BUDGET: usize = 1 << 26;

#[derive(Debug, Clone, PartialEq)]
pub struct SounderSet {
    combiners: Vec<CMat>,
    precoders: Vec<CVec>,
    nr: usize,
    nt: usize,
    n_rf: usize,
}

/// One rank-one measurement factor X_m together with its flat index.
#[derive(Debug, Clone)]
pub struct RankOneFactor {
    pub matrix: CMat,
    pub index: usize,
}

/// Noisy measurement vector with its per-entry complex noise variance.
#[derive(Debug, Clone)]
pub struct Observation {
    pub y: CVec,
    pub noise_var: f64,
}

/// Materialized M x (Nr*Nt) measurement matrix; row m is vec(X_m)^H.
#[derive(Debug, Clone)]
pub struct SensingMatrix {
    pub rows: CMat,
}

impl SounderSet {
    /// Draws K combiner/precoder pairs with i.i.d. uniform phases.
    pub fn generate<R: Rng + ?Sized>(
        k: usize,
        n: usize,
        nr: usize,
        nt: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if k == 0 || n == 0 || nr == 0 || nt == 0 {
            return Err(Error::invalid(
                "sounder dimensions K, N, Nr, Nt must all be >= 1",
            ));
        }
        let wmod = 1.0 / (nr as f64).sqrt();
        let fmod = 1.0 / (nt as f64).sqrt();
        let mut combiners = Vec::with_capacity(k);
        let mut precoders = Vec::with_capacity(k);
        for _ in 0..k {
            combiners.push(CMat::from_fn(nr, n, |_, _| {
                C64::from_polar(wmod, rng.random_range(0.0..TAU))
            }));
            precoders.push(CVec::from_fn(nt, |_, _| {
                C64::from_polar(fmod, rng.random_range(0.0..TAU))
            }));
        }
        Ok(SounderSet {
            combiners,
            precoders,
            nr,
            nt,
            n_rf: n,
        })
    }

    pub fn k_uses(&self) -> usize {
        self.combiners.len()
    }

    pub fn n_rf(&self) -> usize {
        self.n_rf
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    /// Total observation count M = K*N.
    pub fn m(&self) -> usize {
        self.k_uses() * self.n_rf
    }

    pub fn combiner(&self, k: usize) -> &CMat {
        &self.combiners[k]
    }

    pub fn precoder(&self, k: usize) -> &CVec {
        &self.precoders[k]
    }

    /// Rank-one factor X_m for flat index m = k*N + i (0-based).
    pub fn factor_matrix(&self, m: usize) -> CMat {
        let (k, i) = (m / self.n_rf, m % self.n_rf);
        &self.combiners[k].column(i) * self.precoders[k].adjoint()
    }

    /// All M rank-one factors in index order.
    pub fn factors(&self) -> Vec<RankOneFactor> {
        (0..self.m())
            .map(|m| RankOneFactor {
                matrix: self.factor_matrix(m),
                index: m,
            })
            .collect()
    }

    /// The affine map: entry m of the output is tr(X_m^H H).
    pub fn forward(&self, h: &CMat) -> Result<CVec> {
        if h.nrows() != self.nr || h.ncols() != self.nt {
            return Err(Error::dims(format!(
                "channel is {}x{}, sounders expect {}x{}",
                h.nrows(),
                h.ncols(),
                self.nr,
                self.nt
            )));
        }
        let mut y = CVec::zeros(self.m());
        for k in 0..self.k_uses() {
            let hf = h * &self.precoders[k];
            let yk = self.combiners[k].ad_mul(&hf);
            y.rows_mut(k * self.n_rf, self.n_rf).copy_from(&yk);
        }
        Ok(y)
    }

    /// Adjoint of the affine map: sum_m y_m X_m.
    pub fn adjoint(&self, y: &CVec) -> Result<CMat> {
        if y.len() != self.m() {
            return Err(Error::dims(format!(
                "observation length {} != M = {}",
                y.len(),
                self.m()
            )));
        }
        let mut out = CMat::zeros(self.nr, self.nt);
        for k in 0..self.k_uses() {
            let yk = y.rows(k * self.n_rf, self.n_rf);
            let wy = &self.combiners[k] * yk;
            out += wy * self.precoders[k].adjoint();
        }
        Ok(out)
    }

    /// Noisy observation: y = A(H) + noise, where the effective noise stacks
    /// W_k^H n_k with n_k i.i.d. CN(0, noise_var * I_Nr) drawn in the antenna
    /// domain.
    pub fn observe<R: Rng + ?Sized>(
        &self,
        h: &ChannelMatrix,
        noise_var: f64,
        rng: &mut R,
    ) -> Result<Observation> {
        if !(noise_var >= 0.0) {
            return Err(Error::invalid(format!(
                "noise variance must be >= 0, got {noise_var}"
            )));
        }
        let mut y = self.forward(&h.entries)?;
        if noise_var > 0.0 {
            let sigma = C64::new(noise_var.sqrt(), 0.0);
            for k in 0..self.k_uses() {
                let nk = CVec::from_fn(self.nr, |_, _| standard_complex(rng)) * sigma;
                let eff = self.combiners[k].ad_mul(&nk);
                let mut block = y.rows_mut(k * self.n_rf, self.n_rf);
                block += eff;
            }
        }
        Ok(Observation { y, noise_var })
    }

    pub fn to_matrix(&self) -> Result<SensingMatrix> {
        self.to_matrix_with_budget(DEFAULT_MATRIX_BUDGET)
    }

    /// Materializes the M x (Nr*Nt) sensing matrix, refusing when the entry
    /// count would exceed `max_entries`.
    pub fn to_matrix_with_budget(&self, max_entries: usize) -> Result<SensingMatrix> {
        let entries = self.m() * self.nr * self.nt;
        if entries > max_entries {
            return Err(Error::ResourceLimit(format!(
                "sensing matrix would hold {entries} entries, budget is {max_entries}; \
                 use the operator form instead"
            )));
        }
        let mut rows = CMat::zeros(self.m(), self.nr * self.nt);
        for m in 0..self.m() {
            let x = self.factor_matrix(m);
            // row m = vec(X_m)^H
            for (j, z) in x.as_slice().iter().enumerate() {
                rows[(m, j)] = z.conj();
            }
        }
        Ok(SensingMatrix { rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{standard_complex_matrix, vec_of};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sounders(seed: u64) -> SounderSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SounderSet::generate(5, 2, 4, 6, &mut rng).unwrap()
    }

    #[test]
    fn generate_moduli_and_shapes() {
        let s = sounders(1);
        assert_eq!(s.m(), 10);
        for k in 0..5 {
            assert_eq!(s.combiner(k).shape(), (4, 2));
            assert_eq!(s.precoder(k).len(), 6);
            for z in s.combiner(k).iter() {
                assert!((z.norm() - 0.5).abs() < 1e-15);
            }
            for z in s.precoder(k).iter() {
                assert!((z.norm() - 1.0 / 6f64.sqrt()).abs() < 1e-15);
            }
        }
        assert!(SounderSet::generate(0, 2, 4, 6, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn generate_is_deterministic() {
        assert_eq!(sounders(33), sounders(33));
    }

    #[test]
    fn factors_are_unit_rank_one() {
        let s = sounders(2);
        for f in s.factors() {
            assert!((f.matrix.norm() - 1.0).abs() < 1e-12);
            let svd = f.matrix.clone().svd(false, false);
            assert!(svd.singular_values[1] < 1e-12);
            for z in f.matrix.iter() {
                assert!((z.norm() - 1.0 / 24f64.sqrt()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn forward_of_factor_is_unit() {
        let s = sounders(3);
        let x1 = s.factor_matrix(0);
        let y = s.forward(&x1).unwrap();
        assert!((y[0] - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn forward_of_zero_is_zero() {
        let s = sounders(4);
        let y = s.forward(&CMat::zeros(4, 6)).unwrap();
        assert!(y.norm() < 1e-15);
        assert!(s.forward(&CMat::zeros(3, 6)).is_err());
    }

    #[test]
    fn forward_matches_matrix_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let s = SounderSet::generate(4, 2, 3, 5, &mut rng).unwrap();
            let h = standard_complex_matrix(3, 5, &mut rng);
            let direct = s.forward(&h).unwrap();
            let via_matrix = &s.to_matrix().unwrap().rows * vec_of(&h);
            assert!((&direct - &via_matrix).norm() <= 1e-12 * direct.norm().max(1e-300));
        }
    }

    #[test]
    fn adjoint_basis_and_zero() {
        let s = sounders(6);
        let mut e3 = CVec::zeros(s.m());
        e3[3] = C64::new(1.0, 0.0);
        let x3 = s.adjoint(&e3).unwrap();
        assert!((x3 - s.factor_matrix(3)).norm() < 1e-12);
        assert!(s.adjoint(&CVec::zeros(s.m())).unwrap().norm() < 1e-15);
        assert!(s.adjoint(&CVec::zeros(3)).is_err());
    }

    #[test]
    fn adjoint_identity_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let s = SounderSet::generate(5, 2, 4, 6, &mut rng).unwrap();
            let h = standard_complex_matrix(4, 6, &mut rng);
            let y = crate::linalg::standard_complex_vector(s.m(), &mut rng);
            let lhs = s.forward(&h).unwrap().dotc(&y);
            // <H, A*(y)> with the Frobenius inner product tr(H^H A*(y))
            let ay = s.adjoint(&y).unwrap();
            let rhs: C64 = h.iter().zip(ay.iter()).map(|(a, b)| a.conj() * b).sum();
            let gap = (lhs - rhs).norm();
            assert!(gap <= 1e-9 * h.norm() * y.norm());
        }
    }

    #[test]
    fn observe_contract() {
        let s = sounders(8);
        let h = ChannelMatrix::from_entries(standard_complex_matrix(
            4,
            6,
            &mut ChaCha8Rng::seed_from_u64(9),
        ));
        let clean = s
            .observe(&h, 0.0, &mut ChaCha8Rng::seed_from_u64(1))
            .unwrap();
        assert!((&clean.y - &s.forward(&h.entries).unwrap()).norm() < 1e-15);
        assert!(s.observe(&h, -1.0, &mut ChaCha8Rng::seed_from_u64(1)).is_err());

        let a = s.observe(&h, 0.5, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let b = s.observe(&h, 0.5, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(a.y, b.y);
    }

    #[test]
    fn effective_noise_power() {
        // E ||n_eff||^2 = M * sigma^2 because combiner columns have unit norm
        let s = sounders(10);
        let h = ChannelMatrix::from_entries(CMat::zeros(4, 6));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sigma2 = 0.7;
        let trials = 10_000;
        let mut acc = 0.0;
        for _ in 0..trials {
            acc += s.observe(&h, sigma2, &mut rng).unwrap().y.norm_squared();
        }
        let mean = acc / (trials * s.m()) as f64;
        assert!(
            (mean - sigma2).abs() < 0.03 * sigma2,
            "E|n|^2 per entry = {mean}"
        );
    }

    #[test]
    fn to_matrix_shape_budget_and_moduli() {
        let s = sounders(12);
        let a = s.to_matrix().unwrap();
        assert_eq!(a.rows.shape(), (10, 24));
        let modulus = 1.0 / 24f64.sqrt();
        for z in a.rows.iter() {
            assert!((z.norm() - modulus).abs() < 1e-12);
        }
        for m in 0..10 {
            assert!((a.rows.row(m).norm() - 1.0).abs() < 1e-12);
        }
        assert!(matches!(
            s.to_matrix_with_budget(10),
            Err(Error::ResourceLimit(_))
        ));
    }
}
