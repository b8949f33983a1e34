//! Symbol-level precoding (SLP) for the multiuser MISO downlink.
//!
//! The crate builds SEP-constrained precoding problems for square-QAM
//! constellations, solves them through the symbol-perturbed zero-forcing
//! equivalence, and runs Monte Carlo link simulations that compare the SLP
//! designs against plain zero-forcing and SINR-constrained linear
//! beamforming.
//!
//! Module map:
//! - [`constellation`]: square-QAM points, symbol drawing, nearest-point
//!   decision, per-part boundary classification.
//! - [`sep`]: Gaussian tail machinery, per-part error budgets, the
//!   `(alpha, beta)` bound constants and per-symbol bound vectors, and the
//!   SEP-to-SINR target mapping.
//! - [`qp`]: self-contained dense convex solvers (box QP, linear-inequality
//!   QP, min-max QP) in a real-valued formulation, with complex-to-real
//!   lifting helpers.
//! - [`channel`]: channel state with cached pseudo-inverse and Gram inverse.
//! - [`precode`]: all transmit-signal construction schemes (ZF, per-symbol
//!   SLP, direct SLP, SINR beamforming, block designs, heuristic gains).
//! - [`sim`]: end-to-end Monte Carlo link simulation and experiment sweeps.

pub mod bound;
pub mod channel;
pub mod constellation;
pub mod precode;
pub mod qp;
pub mod sep;
pub mod sim;

pub use bound::Bound;
pub use channel::{ChannelState, GainVector};
pub use constellation::{PartClass, QamSpec, Symbol, SymbolBlock};
pub use precode::{
    block_average_design, block_peak_design, heuristic_gains, linear_bf_as_perturbed_zf,
    sinr_beamforming, slp_direct, slp_per_symbol, zf_precode, BeamformerMatrix, BlockDesign,
    PrecodeOutput,
};
pub use qp::{
    lift_complex_quadratic, solve_box_qp, solve_ineq_qp, solve_minmax_qp, BoxQp, IneqQp,
    MinMaxQp, SolveReport, SolveStatus,
};
pub use sep::{GainConstants, SepBounds, SepRequirement};
pub use sim::{run_experiment, summarize, Scheme, SimConfig, SummaryRow, TrialResult};

/// Errors surfaced by the precoding library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("channel error: {0}")]
    Channel(String),
    #[error("infeasible gains: user {user} has d = {d} < alpha = {alpha} with an interior symbol part")]
    InfeasibleGains { user: usize, d: f64, alpha: f64 },
    #[error("beamformer matrix not in the channel row space (projection residual {residual:.3e})")]
    NotInRowSpace { residual: f64 },
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("fixed-point iteration did not converge after {iters} iterations")]
    Convergence { iters: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
