//! SINR-constrained linear beamforming by the classical fixed-point
//! iteration: uplink power updates with MMSE directions, then a downlink
//! power back-substitution through a K×K linear system. Columns are phase
//! rotated so each user's effective gain `h_iᴴ w_i` is real positive, which
//! is what the scaled-decision receiver model assumes.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::ChannelState;
use crate::{Error, Result};

const MAX_FIXED_POINT: usize = 10_000;
const POWER_REL_TOL: f64 = 1e-10;

/// Beamformer matrix `W = [w_1, …, w_K]` with the achieved SINRs and the
/// total transmit power `Σ ρ_i ‖w_i‖²`.
#[derive(Debug, Clone)]
pub struct BeamformerMatrix {
    w: DMatrix<Complex64>,
    sinr_achieved: DVector<f64>,
    total_power: f64,
}

impl BeamformerMatrix {
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.w
    }

    pub fn sinr_achieved(&self) -> &DVector<f64> {
        &self.sinr_achieved
    }

    pub fn total_power(&self) -> f64 {
        self.total_power
    }

    /// Effective per-user gains `h_iᴴ w_i` (real after the phase rotation).
    pub fn effective_gains(&self, ch: &ChannelState) -> DVector<f64> {
        let hw = ch.h() * &self.w;
        DVector::from_fn(ch.n_users(), |i, _| hw[(i, i)].re)
    }
}

fn achieved_sinr(
    ch: &ChannelState,
    w: &DMatrix<Complex64>,
    rho: &[f64],
    noise_var: f64,
) -> DVector<f64> {
    let k = ch.n_users();
    let hw = ch.h() * w; // (i, j) = h_i^H w_j
    DVector::from_fn(k, |i, _| {
        let signal = rho[i] * hw[(i, i)].norm_sqr();
        let interference: f64 = (0..k)
            .filter(|&j| j != i)
            .map(|j| rho[j] * hw[(i, j)].norm_sqr())
            .sum();
        signal / (interference + noise_var)
    })
}

/// Minimal-power beamformers meeting `SINR_i ≥ γ_i`.
///
/// All SINR constraints are active at the optimum; the fixed point is run to
/// a relative power change of 1e-10 and errors out if it has not settled
/// after 10⁴ iterations.
pub fn sinr_beamforming(
    ch: &ChannelState,
    targets: &[f64],
    rho: &[f64],
    noise_var: f64,
) -> Result<BeamformerMatrix> {
    let k = ch.n_users();
    let n = ch.n_antennas();
    if targets.len() != k || rho.len() != k {
        return Err(Error::InvalidInput(format!(
            "need {k} SINR targets and symbol energies, got {} and {}",
            targets.len(),
            rho.len()
        )));
    }
    if targets.iter().any(|&g| !(g > 0.0) || !g.is_finite()) {
        return Err(Error::InvalidInput("SINR targets must be positive".into()));
    }
    if rho.iter().any(|&r| !(r > 0.0)) || !(noise_var > 0.0) {
        return Err(Error::InvalidInput(
            "symbol energies and noise variance must be positive".into(),
        ));
    }

    // user channels as column vectors (rows of H are h_i^H)
    let h_cols: Vec<DVector<Complex64>> =
        (0..k).map(|i| ch.h().row(i).adjoint()).collect();

    // uplink fixed point: q_i <- gamma_i / ((1+gamma_i) h_i^H R(q)^{-1} h_i)
    let mut q = DVector::<f64>::zeros(k);
    let mut cov_inv_h: Vec<DVector<Complex64>> = Vec::new();
    let mut converged = false;
    for _ in 0..MAX_FIXED_POINT {
        let mut cov = DMatrix::<Complex64>::identity(n, n) * Complex64::new(noise_var, 0.0);
        for (j, h) in h_cols.iter().enumerate() {
            cov += h * h.adjoint() * Complex64::new(q[j], 0.0);
        }
        let chol = nalgebra::Cholesky::new(cov)
            .ok_or_else(|| Error::Solver("uplink covariance not positive definite".into()))?;
        cov_inv_h = h_cols.iter().map(|h| chol.solve(h)).collect();
        let mut max_rel = 0.0_f64;
        for i in 0..k {
            let m = h_cols[i].dotc(&cov_inv_h[i]).re;
            let next = targets[i] / ((1.0 + targets[i]) * m);
            max_rel = max_rel.max((next - q[i]).abs() / next.max(f64::MIN_POSITIVE));
            q[i] = next;
        }
        if max_rel <= POWER_REL_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence { iters: MAX_FIXED_POINT });
    }

    // normalized MMSE directions, phase rotated to real positive gains
    let mut dirs: Vec<DVector<Complex64>> = Vec::with_capacity(k);
    for (i, v) in cov_inv_h.iter().enumerate() {
        let mut dir = v / Complex64::new(v.norm(), 0.0);
        let gain = h_cols[i].dotc(&dir);
        let phase = gain / Complex64::new(gain.norm().max(f64::MIN_POSITIVE), 0.0);
        dir *= phase.conj();
        dirs.push(dir);
    }

    // downlink powers from the active-SINR linear system
    let mut coupling = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let cross = h_cols[i].dotc(&dirs[j]).norm_sqr();
            coupling[(i, j)] = if i == j { cross / targets[i] } else { -cross };
        }
    }
    let rhs = DVector::from_element(k, noise_var);
    let p = coupling
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Solver("downlink power system is singular".into()))?;
    if p.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Solver(format!(
            "downlink power back-substitution produced non-positive powers: {:?}",
            p.as_slice()
        )));
    }

    // w_i = sqrt(p_i / rho_i) * dir_i, so that total power is sum(p)
    let mut w = DMatrix::<Complex64>::zeros(n, k);
    for i in 0..k {
        let scale = Complex64::new((p[i] / rho[i]).sqrt(), 0.0);
        w.set_column(i, &(&dirs[i] * scale));
    }
    let sinr_achieved = achieved_sinr(ch, &w, rho, noise_var);
    let total_power: f64 = p.sum();
    Ok(BeamformerMatrix { w, sinr_achieved, total_power })
}
