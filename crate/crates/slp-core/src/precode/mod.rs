//! Transmit-signal construction schemes.
//!
//! Per-symbol SLP solves the perturbation box QP and maps through the
//! pseudo-inverse; the direct solver attacks the transmit-vector program
//! head-on and exists to validate that equivalence. Plain ZF, the
//! perturbed-ZF reconstruction of a linear beamformer, the SINR-constrained
//! benchmark and the block designs round out the set.

mod beamform;
mod block;

pub use beamform::{sinr_beamforming, BeamformerMatrix};
pub use block::{block_average_design, block_peak_design, BlockDesign};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::bound::Bound;
use crate::channel::{ChannelState, GainVector};
use crate::constellation::Symbol;
use crate::qp::{
    lift_shift_terms, solve_box_qp, solve_ineq_qp, BoxQp, IneqQp, LinearConstraint, QuadForm,
    SolveReport,
};
use crate::sep::{GainConstants, SepBounds};
use crate::{Error, Result};

/// One slot's transmit construction: the signal, its perturbation (zero for
/// schemes without one), the residual `b = Hx − Ds`, and solver diagnostics
/// where a solver ran.
#[derive(Debug, Clone)]
pub struct PrecodeOutput {
    pub x: DVector<Complex64>,
    pub u: DVector<Complex64>,
    pub energy: f64,
    pub residual: DVector<Complex64>,
    pub report: Option<SolveReport>,
}

fn symbols_to_complex(s: &[Symbol]) -> DVector<Complex64> {
    DVector::from_iterator(s.len(), s.iter().map(Symbol::value))
}

fn check_dims(ch: &ChannelState, gains: &GainVector, s: &[Symbol]) -> Result<()> {
    let k = ch.n_users();
    if gains.len() != k || s.len() != k {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: K={k} users, {} gains, {} symbols",
            gains.len(),
            s.len()
        )));
    }
    Ok(())
}

/// Zero-forcing: `x = H†(Ds)`, interference-free by construction.
pub fn zf_precode(ch: &ChannelState, gains: &GainVector, s: &[Symbol]) -> Result<PrecodeOutput> {
    check_dims(ch, gains, s)?;
    let target = gains.scale_complex(&symbols_to_complex(s));
    let x = ch.precode_through(&target);
    let residual = ch.h() * &x - &target;
    let energy = x.norm_squared();
    Ok(PrecodeOutput {
        x,
        u: DVector::zeros(ch.n_users()),
        energy,
        residual,
        report: None,
    })
}

/// Builds the `[Re u; Im u]` box from the bound vectors and the gains,
/// rejecting empty intervals (an interior part with `d < α`).
fn perturbation_box(bounds: &SepBounds, gains: &GainVector) -> Result<(Vec<Bound>, Vec<Bound>)> {
    let k = gains.len();
    let mut lower = Vec::with_capacity(2 * k);
    let mut upper = Vec::with_capacity(2 * k);
    let axis = |a: &Bound, c: &Bound, d: f64, user: usize| -> Result<(Bound, Bound)> {
        let lo = a.shift(-d);
        let hi = c.sub_from(d);
        if let (Some(l), Some(h)) = (lo.finite(), hi.finite()) {
            if l > h {
                // both finite means an interior part, where a = c = alpha
                return Err(Error::InfeasibleGains {
                    user,
                    d,
                    alpha: a.finite().unwrap_or(f64::NAN),
                });
            }
        }
        Ok((lo, hi))
    };
    for i in 0..k {
        let (lo, hi) = axis(&bounds.a_re[i], &bounds.c_re[i], gains.get(i), i)?;
        lower.push(lo);
        upper.push(hi);
    }
    for i in 0..k {
        let (lo, hi) = axis(&bounds.a_im[i], &bounds.c_im[i], gains.get(i), i)?;
        lower.push(lo);
        upper.push(hi);
    }
    Ok((lower, upper))
}

/// Per-symbol SLP: solves the perturbation box QP
/// `min (Ds + u)ᴴ R (Ds + u)` over the bound intervals and returns
/// `x = H†(Ds + u*)`.
pub fn slp_per_symbol(
    ch: &ChannelState,
    bounds: &SepBounds,
    gains: &GainVector,
    s: &[Symbol],
) -> Result<PrecodeOutput> {
    check_dims(ch, gains, s)?;
    if bounds.n_users() != ch.n_users() {
        return Err(Error::InvalidInput("bound vectors have the wrong length".into()));
    }
    let k = ch.n_users();
    let (lower, upper) = perturbation_box(bounds, gains)?;
    let shift = gains.scale_complex(&symbols_to_complex(s));
    let (lin, _) = lift_shift_terms(ch.gram_inv(), &shift)?;
    let problem = BoxQp::new(ch.r_lifted().clone(), lin, lower, upper)?;
    let report = solve_box_qp(&problem, 1e-8);
    if !report.is_optimal() {
        log::debug!("per-symbol SLP box QP finished with {:?}", report.status);
    }
    let u = DVector::from_fn(k, |i, _| {
        Complex64::new(report.solution[i], report.solution[k + i])
    });
    let x = ch.precode_through(&(&shift + &u));
    let residual = ch.h() * &x - &shift;
    let energy = x.norm_squared();
    Ok(PrecodeOutput { x, u, energy, residual, report: Some(report) })
}

/// Direct SLP: solves the transmit-vector program in the lifted real
/// variable `[Re x; Im x]` under the four bound inequality groups. Exists to
/// validate the perturbed-ZF equivalence against [`slp_per_symbol`].
pub fn slp_direct(
    ch: &ChannelState,
    bounds: &SepBounds,
    gains: &GainVector,
    s: &[Symbol],
) -> Result<PrecodeOutput> {
    check_dims(ch, gains, s)?;
    let k = ch.n_users();
    let n = ch.n_antennas();
    // reject the same empty intervals the perturbation form would
    let _ = perturbation_box(bounds, gains)?;
    let shift = gains.scale_complex(&symbols_to_complex(s));

    // lifted channel: [Re(Hx); Im(Hx)] = G [Re x; Im x]
    let mut g = DMatrix::<f64>::zeros(2 * k, 2 * n);
    for i in 0..k {
        for j in 0..n {
            let h = ch.h()[(i, j)];
            g[(i, j)] = h.re;
            g[(i, n + j)] = -h.im;
            g[(k + i, j)] = h.im;
            g[(k + i, n + j)] = h.re;
        }
    }

    let mut rows = Vec::new();
    let mut push_axis = |axis_row: usize, m: f64, d: f64, a: &Bound, c: &Bound| -> Result<()> {
        let coef: Vec<f64> = g.row(axis_row).iter().copied().collect();
        if let Some(cv) = c.finite() {
            // (Hx)_axis − m ≤ d − c
            rows.push(LinearConstraint::from_dense(&coef, m + d - cv)?);
        }
        if let Some(av) = a.finite() {
            // −(Hx)_axis + m ≤ d − a
            let neg: Vec<f64> = coef.iter().map(|v| -v).collect();
            rows.push(LinearConstraint::from_dense(&neg, d - av - m)?);
        }
        Ok(())
    };
    for i in 0..k {
        push_axis(i, shift[i].re, gains.get(i), &bounds.a_re[i], &bounds.c_re[i])?;
        push_axis(k + i, shift[i].im, gains.get(i), &bounds.a_im[i], &bounds.c_im[i])?;
    }

    let objective = QuadForm::dense(
        DMatrix::identity(2 * n, 2 * n),
        DVector::zeros(2 * n),
        0.0,
    )?;
    let problem = IneqQp::new(2 * n, vec![objective], rows)?;
    let report = solve_ineq_qp(&problem, 1e-8);
    let x = DVector::from_fn(n, |j, _| {
        Complex64::new(report.solution[j], report.solution[n + j])
    });
    let residual = ch.h() * &x - &shift;
    let energy = x.norm_squared();
    Ok(PrecodeOutput {
        x,
        u: residual.clone(),
        energy,
        residual,
        report: Some(report),
    })
}

const ROW_SPACE_TOL: f64 = 1e-8;

/// Reconstructs a linear beamforming transmit vector `x = Ws` as a
/// symbol-perturbed ZF scheme: `u = (HW − D)s`, `x = H†(Ds + u)`.
///
/// Requires every column of `W` to lie in the row space of the channel
/// (`‖(I − H†H)W‖ ≤ 1e-8`, scaled), otherwise the identity fails.
pub fn linear_bf_as_perturbed_zf(
    ch: &ChannelState,
    w: &DMatrix<Complex64>,
    gains: &GainVector,
    s: &[Symbol],
) -> Result<PrecodeOutput> {
    check_dims(ch, gains, s)?;
    let (k, n) = (ch.n_users(), ch.n_antennas());
    if w.nrows() != n || w.ncols() != k {
        return Err(Error::InvalidInput(format!(
            "beamformer matrix must be {n}x{k}, got {}x{}",
            w.nrows(),
            w.ncols()
        )));
    }
    let projected = ch.pinv() * (ch.h() * w);
    let residual_norm = (w - &projected).norm();
    if residual_norm > ROW_SPACE_TOL * w.norm().max(1.0) {
        return Err(Error::NotInRowSpace { residual: residual_norm });
    }
    let sv = symbols_to_complex(s);
    let target = gains.scale_complex(&sv);
    let u = ch.h() * w * &sv - &target;
    let x = ch.precode_through(&(&target + &u));
    let residual = ch.h() * &x - &target;
    let energy = x.norm_squared();
    Ok(PrecodeOutput { x, u, energy, residual, report: None })
}

/// Heuristic gain rule `d_i = ζ·α_i` with `ζ ≥ 1`.
pub fn heuristic_gains(gains_constants: &[GainConstants], zeta: f64) -> Result<GainVector> {
    if !(zeta >= 1.0) {
        return Err(Error::InvalidInput(format!(
            "gain scaling must satisfy zeta >= 1 (d_i >= alpha_i is necessary), got {zeta}"
        )));
    }
    GainVector::new(DVector::from_iterator(
        gains_constants.len(),
        gains_constants.iter().map(|g| zeta * g.alpha),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::QamSpec;
    use crate::sep::{build_bounds, gain_constants};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_channel_state(k: usize, n: usize, seed: u64) -> ChannelState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = DMatrix::from_fn(k, n, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        ChannelState::new(h).unwrap()
    }

    #[test]
    fn zf_scalar_example() {
        let ch = ChannelState::new(DMatrix::from_element(1, 1, Complex64::new(2.0, 0.0))).unwrap();
        let gains = GainVector::from_slice(&[1.581]).unwrap();
        let out = zf_precode(&ch, &gains, &[Symbol::new(1, 1)]).unwrap();
        assert_abs_diff_eq!(out.x[0].re, 0.7905, epsilon = 1e-10);
        assert_abs_diff_eq!(out.x[0].im, 0.7905, epsilon = 1e-10);
        assert_abs_diff_eq!(out.energy, 2.0 * 0.7905 * 0.7905, epsilon = 1e-12);
        assert!(out.residual.norm() < 1e-10);
    }

    #[test]
    fn zf_inverts_channel() {
        let ch = random_channel_state(3, 6, 8);
        let gains = GainVector::from_slice(&[1.0, 2.0, 0.5]).unwrap();
        let s = [Symbol::new(1, -1), Symbol::new(3, 1), Symbol::new(-3, -3)];
        let out = zf_precode(&ch, &gains, &s).unwrap();
        assert!(out.residual.norm() < 1e-10);
        assert!(out.u.norm() == 0.0);
        // unitary rows: energy equals the target norm
        let q = {
            let m = DMatrix::from_fn(2, 2, |i, j| {
                Complex64::new(((i * 2 + j) as f64 + 1.0).sin(), ((i + j) as f64).cos())
            });
            let qr = m.qr();
            qr.q()
        };
        let ch2 = ChannelState::new(q.adjoint()).unwrap();
        let g2 = GainVector::from_slice(&[1.0, 1.0]).unwrap();
        let s2 = [Symbol::new(1, 1), Symbol::new(-1, 3)];
        let out2 = zf_precode(&ch2, &g2, &s2).unwrap();
        let target: f64 = s2.iter().map(|p| p.energy()).sum();
        assert_abs_diff_eq!(out2.energy, target, epsilon = 1e-10);
    }

    #[test]
    fn slp_reduces_to_zf_for_interior_symbols_at_alpha() {
        let spec = QamSpec::new(2).unwrap();
        let g = gain_constants(1.0, 0.05).unwrap();
        let ch = random_channel_state(4, 8, 21);
        let specs = vec![spec; 4];
        let symbols = [
            Symbol::new(1, 1),
            Symbol::new(-1, 1),
            Symbol::new(1, -1),
            Symbol::new(-1, -1),
        ];
        let bounds = build_bounds(&specs, &symbols, &vec![g; 4]).unwrap();
        let gains = heuristic_gains(&vec![g; 4], 1.0).unwrap();
        let slp = slp_per_symbol(&ch, &bounds, &gains, &symbols).unwrap();
        let zf = zf_precode(&ch, &gains, &symbols).unwrap();
        assert!(slp.u.norm() < 1e-8, "perturbation should vanish: {}", slp.u.norm());
        assert!((&slp.x - &zf.x).norm() < 1e-7);
    }

    #[test]
    fn slp_scalar_edge_closed_form() {
        // K=1, H=[1], s=3+3j, d=alpha: u* = (beta-alpha)(1+j)
        let ch = ChannelState::new(DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0))).unwrap();
        let spec = QamSpec::new(2).unwrap();
        let g = gain_constants(1.0, 0.05).unwrap();
        let bounds = build_bounds(&[spec], &[Symbol::new(3, 3)], &[g]).unwrap();
        let gains = GainVector::from_slice(&[g.alpha]).unwrap();
        let out = slp_per_symbol(&ch, &bounds, &gains, &[Symbol::new(3, 3)]).unwrap();
        let expected = g.beta - g.alpha;
        assert_abs_diff_eq!(out.u[0].re, expected, epsilon = 1e-7);
        assert_abs_diff_eq!(out.u[0].im, expected, epsilon = 1e-7);
    }

    #[test]
    fn slp_never_beats_zf_energy_backwards() {
        // u = 0 is feasible, so the optimized energy is at most the ZF energy
        let spec = QamSpec::new(2).unwrap();
        let g = gain_constants(1.0, 0.05).unwrap();
        for seed in 0..5 {
            let ch = random_channel_state(3, 5, 100 + seed);
            let symbols = crate::constellation::draw_symbols(spec, seed, 3);
            let specs = vec![spec; 3];
            let bounds = build_bounds(&specs, &symbols, &vec![g; 3]).unwrap();
            let gains = heuristic_gains(&vec![g; 3], 1.1).unwrap();
            let slp = slp_per_symbol(&ch, &bounds, &gains, &symbols).unwrap();
            let zf = zf_precode(&ch, &gains, &symbols).unwrap();
            assert!(slp.energy <= zf.energy + 1e-9);
        }
    }

    #[test]
    fn infeasible_gains_rejected() {
        let spec = QamSpec::new(2).unwrap();
        let g = gain_constants(1.0, 0.05).unwrap();
        let ch = random_channel_state(1, 2, 4);
        let bounds = build_bounds(&[spec], &[Symbol::new(1, 1)], &[g]).unwrap();
        let gains = GainVector::from_slice(&[0.5 * g.alpha]).unwrap();
        let err = slp_per_symbol(&ch, &bounds, &gains, &[Symbol::new(1, 1)]).unwrap_err();
        assert!(matches!(err, Error::InfeasibleGains { .. }), "{err}");
    }

    #[test]
    fn fact2_roundtrip_and_row_space_guard() {
        let ch = random_channel_state(3, 6, 55);
        let gains = GainVector::from_slice(&[1.0, 1.5, 2.0]).unwrap();
        let s = [Symbol::new(1, 1), Symbol::new(3, -1), Symbol::new(-1, -3)];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // random row-space matrix: W = H^H M
        let m = DMatrix::from_fn(3, 3, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let w = ch.h().adjoint() * &m;
        let out = linear_bf_as_perturbed_zf(&ch, &w, &gains, &s).unwrap();
        let sv = symbols_to_complex(&s);
        let direct = &w * &sv;
        assert!((&out.x - &direct).norm() < 1e-10);
        // W = H† D reduces to ZF (u = 0)
        let wd = {
            let mut d = DMatrix::<Complex64>::zeros(3, 3);
            for i in 0..3 {
                d[(i, i)] = Complex64::new(gains.get(i), 0.0);
            }
            ch.pinv() * d
        };
        let zf_like = linear_bf_as_perturbed_zf(&ch, &wd, &gains, &s).unwrap();
        assert!(zf_like.u.norm() < 1e-10);
        // null-space component must be rejected
        let mut w_bad = w.clone();
        let null = {
            // vector orthogonal to all rows of H: project a random vector
            let v = DVector::from_fn(6, |i, _| Complex64::new((i as f64).cos(), (i as f64).sin()));
            let proj = ch.pinv() * (ch.h() * &v);
            &v - &proj
        };
        for i in 0..6 {
            w_bad[(i, 0)] += null[i];
        }
        assert!(matches!(
            linear_bf_as_perturbed_zf(&ch, &w_bad, &gains, &s),
            Err(Error::NotInRowSpace { .. })
        ));
    }

    #[test]
    fn heuristic_gain_rule() {
        let g = gain_constants(1.0, 0.05).unwrap();
        let d = heuristic_gains(&[g, g], 1.0).unwrap();
        assert_abs_diff_eq!(d.get(0), g.alpha, epsilon = 1e-15);
        let d = heuristic_gains(&[g], 1.2).unwrap();
        assert_abs_diff_eq!(d.get(0), 1.2 * g.alpha, epsilon = 1e-12);
        assert_abs_diff_eq!(d.get(0), 1.897, epsilon = 2e-3);
        assert!(heuristic_gains(&[g], 0.9).is_err());
    }
}
