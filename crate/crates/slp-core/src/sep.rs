//! Gaussian-tail machinery and the SEP bound data.
//!
//! Covers the per-part error budget `ε̄ = 1 − √(1−ε)`, the bound constants
//! `α = (σ_v/√2)·Q⁻¹(ε̄/2)` and `β = (σ_v/√2)·Q⁻¹(ε̄)`, the per-symbol
//! perturbation bound vectors assembled from the part-class case table, the
//! analytic per-part/per-symbol SEP expressions, and the SEP-to-SINR target
//! mapping used to configure the linear beamforming benchmark.

use crate::bound::Bound;
use crate::constellation::{classify_part, PartClass, QamSpec, Symbol};
use crate::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Standard Gaussian tail `Q(x) = Pr(Z > x)`.
///
/// Monotone decreasing with `Q(−∞) = 1` and `Q(∞) = 0`. The underlying
/// complementary error function is accurate to a few ulp, comfortably inside
/// the 1e-12 relative budget the bound constants need.
pub fn q_func(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return 1.0;
    }
    if x == f64::INFINITY {
        return 0.0;
    }
    0.5 * libm::erfc(x / SQRT_2)
}

/// Standard normal density.
fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Inverse Gaussian tail: the `x` with `q_func(x) = p`.
///
/// Safeguarded Newton iteration with a bisection fallback on a bracketing
/// interval; converges to |Q(x) − p| ≲ 1e-15 in the ranges used here.
pub fn q_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "Q^-1 needs a probability strictly inside (0,1), got {p} \
             (an unachievable or vacuous SEP requirement)"
        )));
    }
    // bracket: Q(lo) > p > Q(hi)
    let mut lo = -45.0_f64;
    let mut hi = 45.0_f64;
    let mut x = 0.0_f64;
    for _ in 0..200 {
        let f = q_func(x) - p;
        if f > 0.0 {
            lo = x; // x below the root (Q too large)
        } else if f < 0.0 {
            hi = x;
        } else {
            return Ok(x);
        }
        // Newton step on f(x) = Q(x) - p, f'(x) = -phi(x)
        let d = phi(x);
        let mut next = x + f / d;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-13 * (1.0 + x.abs()) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Per-part error budget `ε̄ = 1 − √(1−ε)`; meeting `ε̄` on both axes meets
/// `ε` on the symbol. Evaluated in the cancellation-free form
/// `ε / (1 + √(1−ε))`.
pub fn per_part_eps(eps: f64) -> f64 {
    if eps >= 1.0 {
        return 1.0;
    }
    eps / (1.0 + (1.0 - eps).sqrt())
}

/// A validated per-user SEP requirement `ε ∈ (0,1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SepRequirement {
    eps: f64,
}

impl SepRequirement {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) || !eps.is_finite() {
            return Err(Error::Domain(format!(
                "unattainable SEP requirement: eps must lie strictly in (0,1), got {eps}"
            )));
        }
        Ok(Self { eps })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// The derived per-part budget `ε̄`.
    pub fn per_part(&self) -> f64 {
        per_part_eps(self.eps)
    }
}

/// The bound constants of one user: `α` (interior), `β` (edge), and the
/// noise standard deviation they were derived from. `β < α` always.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainConstants {
    pub alpha: f64,
    pub beta: f64,
    pub noise_std: f64,
}

/// Computes `α = (σ_v/√2)·Q⁻¹(ε̄/2)` and `β = (σ_v/√2)·Q⁻¹(ε̄)`.
pub fn gain_constants(noise_std: f64, eps: f64) -> Result<GainConstants> {
    if !(noise_std > 0.0) || !noise_std.is_finite() {
        return Err(Error::InvalidInput(format!(
            "noise standard deviation must be positive and finite, got {noise_std}"
        )));
    }
    let req = SepRequirement::new(eps)?;
    let eps_bar = req.per_part();
    let scale = noise_std / SQRT_2;
    Ok(GainConstants {
        alpha: scale * q_inv(0.5 * eps_bar)?,
        beta: scale * q_inv(eps_bar)?,
        noise_std,
    })
}

/// Per-slot perturbation bound vectors `(a^R, a^I, c^R, c^I)`.
///
/// Entries are `α` for interior parts and `β`/`−∞` for edge parts, per the
/// case table; the feasible interval for each perturbation part is
/// `[−d + a, d − c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SepBounds {
    pub a_re: Vec<Bound>,
    pub a_im: Vec<Bound>,
    pub c_re: Vec<Bound>,
    pub c_im: Vec<Bound>,
}

impl SepBounds {
    pub fn n_users(&self) -> usize {
        self.a_re.len()
    }
}

fn part_bounds(class: PartClass, gains: &GainConstants) -> (Bound, Bound) {
    match class {
        PartClass::Interior => (Bound::Finite(gains.alpha), Bound::Finite(gains.alpha)),
        PartClass::PosEdge => (Bound::Finite(gains.beta), Bound::NegInf),
        PartClass::NegEdge => (Bound::NegInf, Bound::Finite(gains.beta)),
    }
}

/// Assembles the bound vectors for one symbol slot, applying the case table
/// independently to real and imaginary parts.
pub fn build_bounds(
    specs: &[QamSpec],
    symbols: &[Symbol],
    gains: &[GainConstants],
) -> Result<SepBounds> {
    let k = specs.len();
    if symbols.len() != k || gains.len() != k {
        return Err(Error::InvalidInput(format!(
            "mismatched lengths: {k} specs, {} symbols, {} gain sets",
            symbols.len(),
            gains.len()
        )));
    }
    let mut bounds = SepBounds {
        a_re: Vec::with_capacity(k),
        a_im: Vec::with_capacity(k),
        c_re: Vec::with_capacity(k),
        c_im: Vec::with_capacity(k),
    };
    for i in 0..k {
        let (a_re, c_re) = part_bounds(classify_part(specs[i], symbols[i].re)?, &gains[i]);
        let (a_im, c_im) = part_bounds(classify_part(specs[i], symbols[i].im)?, &gains[i]);
        bounds.a_re.push(a_re);
        bounds.c_re.push(c_re);
        bounds.a_im.push(a_im);
        bounds.c_im.push(c_im);
    }
    Ok(bounds)
}

/// Analytic per-part SEP given the signed residual `b_part` on that axis.
pub fn analytic_sep_part(d: f64, b_part: f64, noise_std: f64, class: PartClass) -> f64 {
    let s = SQRT_2 / noise_std;
    match class {
        PartClass::Interior => q_func(s * (d - b_part)) + q_func(s * (d + b_part)),
        PartClass::PosEdge => q_func(s * (d + b_part)),
        PartClass::NegEdge => q_func(s * (d - b_part)),
    }
}

/// Symbol SEP from independent per-axis SEPs: `1 − (1−p_R)(1−p_I)`.
pub fn analytic_sep_symbol(sep_re: f64, sep_im: f64) -> f64 {
    1.0 - (1.0 - sep_re) * (1.0 - sep_im)
}

/// SINR target that meets the SEP requirement under the Gaussian
/// interference approximation: `γ = (ρ/2)·[Q⁻¹(ε̄/2)]²`.
pub fn sinr_target_from_sep(avg_energy: f64, eps: f64) -> Result<f64> {
    if !(avg_energy > 0.0) || !avg_energy.is_finite() {
        return Err(Error::InvalidInput(format!(
            "average symbol energy must be positive, got {avg_energy}"
        )));
    }
    let eps_bar = SepRequirement::new(eps)?.per_part();
    let q = q_inv(0.5 * eps_bar)?;
    Ok(0.5 * avg_energy * q * q)
}
