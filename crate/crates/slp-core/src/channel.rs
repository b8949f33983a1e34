//! Channel state: the channel matrix with its cached pseudo-inverse, Gram
//! inverse, and the real lifting of the Gram inverse shared by every
//! per-slot solve.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::qp::lift_hermitian;
use crate::{Error, Result};

const RANK_TOL: f64 = 1e-10;
const PINV_RESIDUAL_TOL: f64 = 1e-10;
const CONDITION_WARN: f64 = 1e8;

/// Immutable channel snapshot for one coherence block.
///
/// `H` is `K×N` with user channels as rows; construction precomputes
/// `H† = Hᴴ(HHᴴ)⁻¹`, `R = (HHᴴ)⁻¹`, and the `2K×2K` real lifting of `R`
/// reused by every per-slot perturbation solve.
#[derive(Debug, Clone)]
pub struct ChannelState {
    h: DMatrix<Complex64>,
    pinv: DMatrix<Complex64>,
    gram_inv: DMatrix<Complex64>,
    gram_condition: f64,
    gram_lambda_max: f64,
    r_lifted: DMatrix<f64>,
}

impl ChannelState {
    pub fn new(h: DMatrix<Complex64>) -> Result<Self> {
        let (k, n) = (h.nrows(), h.ncols());
        if k == 0 || n == 0 {
            return Err(Error::Channel("channel matrix must be nonempty".into()));
        }
        if k > n {
            return Err(Error::Channel(format!(
                "need at least as many antennas as users, got K={k} > N={n}"
            )));
        }
        // Hermitian eigendecomposition of the Gram matrix G = HH^H
        let gram = &h * h.adjoint();
        let eig = gram.symmetric_eigen();
        let lambda_max = eig.eigenvalues.max();
        let lambda_min = eig.eigenvalues.min();
        // smallest singular value of H is sqrt(lambda_min)
        if !(lambda_min > RANK_TOL * RANK_TOL * lambda_max) {
            return Err(Error::Channel(format!(
                "channel is numerically rank deficient (sigma_min/sigma_max = {:.3e})",
                (lambda_min.max(0.0) / lambda_max).sqrt()
            )));
        }
        let gram_condition = lambda_max / lambda_min;
        if gram_condition > CONDITION_WARN {
            log::warn!("ill-conditioned channel: kappa(HH^H) = {gram_condition:.3e}");
        }
        let inv_diag = DVector::from_iterator(
            k,
            eig.eigenvalues.iter().map(|&l| Complex64::new(1.0 / l, 0.0)),
        );
        let vecs = eig.eigenvectors;
        let gram_inv = &vecs * DMatrix::from_diagonal(&inv_diag) * vecs.adjoint();
        let pinv = h.adjoint() * &gram_inv;

        // defining property of the pseudo-inverse on full-row-rank H
        let residual = max_modulus(&(&h * &pinv - DMatrix::<Complex64>::identity(k, k)));
        if residual > PINV_RESIDUAL_TOL {
            return Err(Error::Channel(format!(
                "pseudo-inverse residual {residual:.3e} exceeds {PINV_RESIDUAL_TOL:.0e}"
            )));
        }

        let r_lifted = lift_hermitian(&gram_inv)?;
        Ok(Self {
            h,
            pinv,
            gram_inv,
            gram_condition,
            gram_lambda_max: lambda_max,
            r_lifted,
        })
    }

    pub fn n_users(&self) -> usize {
        self.h.nrows()
    }

    pub fn n_antennas(&self) -> usize {
        self.h.ncols()
    }

    pub fn h(&self) -> &DMatrix<Complex64> {
        &self.h
    }

    /// `H† = Hᴴ(HHᴴ)⁻¹`.
    pub fn pinv(&self) -> &DMatrix<Complex64> {
        &self.pinv
    }

    /// `R = (HHᴴ)⁻¹`.
    pub fn gram_inv(&self) -> &DMatrix<Complex64> {
        &self.gram_inv
    }

    /// `κ(HHᴴ)`.
    pub fn gram_condition(&self) -> f64 {
        self.gram_condition
    }

    /// Largest eigenvalue of `HHᴴ` (the reciprocal of `λ_min(R)`).
    pub(crate) fn gram_lambda_max(&self) -> f64 {
        self.gram_lambda_max
    }

    /// Cached real lifting of `R`.
    pub(crate) fn r_lifted(&self) -> &DMatrix<f64> {
        &self.r_lifted
    }

    /// `H† · target`.
    pub fn precode_through(&self, target: &DVector<Complex64>) -> DVector<Complex64> {
        &self.pinv * target
    }
}

/// Per-user positive gain factors `d` (receivers divide by `d_i` before
/// detection).
#[derive(Debug, Clone, PartialEq)]
pub struct GainVector {
    d: DVector<f64>,
}

impl GainVector {
    pub fn new(d: DVector<f64>) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::InvalidInput("gain vector must be nonempty".into()));
        }
        if d.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "gain factors must be positive and finite, got {:?}",
                d.as_slice()
            )));
        }
        Ok(Self { d })
    }

    pub fn from_slice(d: &[f64]) -> Result<Self> {
        Self::new(DVector::from_row_slice(d))
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.d[i]
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.d
    }

    /// `D s` with `D = Diag(d)` applied to complex values.
    pub fn scale_complex(&self, s: &DVector<Complex64>) -> DVector<Complex64> {
        DVector::from_fn(s.len(), |i, _| s[i] * self.d[i])
    }
}

/// Max |entry| of a complex matrix.
fn max_modulus(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_channel(k: usize, n: usize, seed: u64) -> DMatrix<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(k, n, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    #[test]
    fn pseudo_inverse_identity() {
        let h = random_channel(4, 8, 3);
        let ch = ChannelState::new(h.clone()).unwrap();
        let eye = &h * ch.pinv();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((eye[(i, j)] - expect).norm() < 1e-10);
            }
        }
        assert!(ch.gram_condition() >= 1.0);
    }

    #[test]
    fn gram_inverse_is_hermitian_inverse() {
        let h = random_channel(3, 5, 17);
        let ch = ChannelState::new(h.clone()).unwrap();
        let gram = &h * h.adjoint();
        let prod = gram * ch.gram_inv();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - expect).norm() < 1e-10);
            }
        }
        let r = ch.gram_inv();
        for i in 0..3 {
            for j in 0..3 {
                assert!((r[(i, j)] - r[(j, i)].conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_wide_and_rank_deficient() {
        assert!(ChannelState::new(random_channel(5, 3, 1)).is_err());
        let mut h = random_channel(3, 4, 5);
        let dup = h.row(0).clone_owned();
        h.set_row(2, &dup);
        assert!(ChannelState::new(h).is_err());
    }

    #[test]
    fn gain_vector_validation() {
        assert!(GainVector::from_slice(&[1.0, 2.0]).is_ok());
        assert!(GainVector::from_slice(&[1.0, 0.0]).is_err());
        assert!(GainVector::from_slice(&[-1.0]).is_err());
        assert!(GainVector::from_slice(&[]).is_err());
        let g = GainVector::from_slice(&[2.0, 3.0]).unwrap();
        let s = DVector::from_vec(vec![Complex64::new(1.0, 1.0), Complex64::new(-1.0, 0.0)]);
        let scaled = g.scale_complex(&s);
        assert_eq!(scaled[0], Complex64::new(2.0, 2.0));
        assert_eq!(scaled[1], Complex64::new(-3.0, 0.0));
    }
}
