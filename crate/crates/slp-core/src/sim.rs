//! End-to-end Monte Carlo link simulation: seeded channel generation,
//! transmission, detection, empirical SEP estimation, and the experiment
//! sweeps behind the power/energy comparisons.
//!
//! Every cell (channel realization × SEP requirement) is self-contained
//! with seeds derived from the experiment seed, so cells may run on any
//! number of workers and still aggregate identically.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::channel::{ChannelState, GainVector};
use crate::constellation::{decide, draw_symbols, QamSpec, SymbolBlock};
use crate::precode::{
    block_average_design, block_peak_design, heuristic_gains, linear_bf_as_perturbed_zf,
    sinr_beamforming, slp_per_symbol, zf_precode,
};
use crate::sep::{build_bounds, gain_constants, sinr_target_from_sep, SepRequirement};
use crate::{Error, Result};

/// One precoding scheme to simulate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    Zf,
    LinearBf,
    SlpHeuristic { zeta: f64 },
    SlpBlockAvg,
    SlpBlockPeak,
}

impl Scheme {
    /// Stable label used in CSV output and sub-seed derivation.
    pub fn label(&self) -> String {
        match self {
            Scheme::Zf => "zf".into(),
            Scheme::LinearBf => "linear_bf".into(),
            Scheme::SlpHeuristic { zeta } => format!("slp_heuristic(zeta={zeta})"),
            Scheme::SlpBlockAvg => "slp_block_avg".into(),
            Scheme::SlpBlockPeak => "slp_block_peak".into(),
        }
    }
}

/// Experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_antennas: usize,
    pub n_users: usize,
    pub block_len: usize,
    pub qam_level: u32,
    pub noise_var: f64,
    pub eps_grid: Vec<f64>,
    pub n_channels: usize,
    pub schemes: Vec<Scheme>,
    pub seed: u64,
    /// Monte Carlo noise trials per user per cell for SEP estimation.
    pub sep_trials: usize,
}

pub const DEFAULT_SEP_TRIALS: usize = 200_000;

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 {
            return Err(Error::InvalidInput("need at least one user".into()));
        }
        if self.n_users > self.n_antennas {
            return Err(Error::InvalidInput(format!(
                "need K <= N, got K={} > N={}",
                self.n_users, self.n_antennas
            )));
        }
        if self.block_len == 0 {
            return Err(Error::InvalidInput("block length must be at least 1".into()));
        }
        QamSpec::new(self.qam_level)?;
        if !(self.noise_var > 0.0) || !self.noise_var.is_finite() {
            return Err(Error::InvalidInput(format!(
                "noise variance must be positive, got {}",
                self.noise_var
            )));
        }
        if self.eps_grid.is_empty() {
            return Err(Error::InvalidInput("eps grid must be nonempty".into()));
        }
        for &eps in &self.eps_grid {
            SepRequirement::new(eps)?;
        }
        if self.n_channels == 0 {
            return Err(Error::InvalidInput("need at least one channel realization".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidInput("need at least one scheme".into()));
        }
        for s in &self.schemes {
            if let Scheme::SlpHeuristic { zeta } = s {
                if !(*zeta >= 1.0) {
                    return Err(Error::InvalidInput(format!(
                        "heuristic gain scaling must satisfy zeta >= 1, got {zeta}"
                    )));
                }
            }
        }
        if self.sep_trials == 0 {
            return Err(Error::InvalidInput("sep_trials must be at least 1".into()));
        }
        Ok(())
    }
}

/// Solver statistics of one scheme cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverDiag {
    pub status: String,
    pub iterations: usize,
    pub kkt_residual: f64,
}

impl SolverDiag {
    fn closed_form() -> Self {
        Self { status: "closed_form".into(), iterations: 0, kkt_residual: 0.0 }
    }
}

/// Metrics of one (realization, ε, scheme) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub realization: usize,
    pub eps: f64,
    pub scheme: String,
    pub avg_power: f64,
    pub peak_energy: f64,
    pub emp_sep: Vec<f64>,
    pub sep_stderr: Vec<f64>,
    pub degraded: bool,
    pub diag: SolverDiag,
}

/// Mean metrics over realizations for one (scheme, ε) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scheme: String,
    pub eps: f64,
    pub mean_avg_power: f64,
    pub mean_peak_energy: f64,
    pub max_emp_sep: f64,
}

// Deterministic sub-seed derivation (splitmix64 finalizer folds). The rand
// crate's hashers are not stable across versions; this is.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn derive_seed(root: u64, words: &[u64]) -> u64 {
    let mut h = splitmix64(root);
    for &w in words {
        h = splitmix64(h ^ w);
    }
    h
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x1_0000_0000_01b3);
    }
    h
}

const TAG_CHANNEL: u64 = 1;
const TAG_SYMBOLS: u64 = 2;
const TAG_SEP: u64 = 3;

/// Draws a `K×N` channel with i.i.d. circularly-symmetric unit-variance
/// complex Gaussian entries. Numerically rank-deficient draws (a
/// probability-zero event) are resampled with an incremented sub-seed.
pub fn gen_channel(seed: u64, k: usize, n: usize) -> Result<ChannelState> {
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("need 1 <= K <= N, got K={k}, N={n}")));
    }
    let per_part = 0.5_f64.sqrt();
    let mut sub = seed;
    for _ in 0..16 {
        let mut rng = ChaCha8Rng::seed_from_u64(sub);
        let h = DMatrix::from_fn(k, n, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * per_part, im * per_part)
        });
        match ChannelState::new(h) {
            Ok(ch) => return Ok(ch),
            Err(e) => {
                log::warn!("resampling channel (sub-seed {sub}): {e}");
                sub = sub.wrapping_add(1);
            }
        }
    }
    Err(Error::Channel("could not draw a full-rank channel in 16 attempts".into()))
}

/// `y = Hx + v` over a block, with `v` i.i.d. circular Gaussian of variance
/// `noise_std²`.
pub fn transmit_receive(
    ch: &ChannelState,
    x_block: &DMatrix<Complex64>,
    noise_std: f64,
    seed: u64,
) -> DMatrix<Complex64> {
    let noiseless = ch.h() * x_block;
    let per_part = noise_std / std::f64::consts::SQRT_2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(noiseless.nrows(), noiseless.ncols(), |i, j| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        noiseless[(i, j)] + Complex64::new(re * per_part, im * per_part)
    })
}

/// Empirical per-user SEP of a transmit block: each of the `T` slots is
/// reused across `⌈M/T⌉` fresh noise draws, detection divides by the true
/// gain. Returns `(sep, standard_error)` per user.
pub fn estimate_sep(
    ch: &ChannelState,
    x_block: &DMatrix<Complex64>,
    block: &SymbolBlock,
    gains: &GainVector,
    specs: &[QamSpec],
    noise_std: f64,
    n_noise_draws: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = ch.n_users();
    let t_len = block.n_slots();
    if x_block.ncols() != t_len || gains.len() != k || specs.len() != k {
        return Err(Error::InvalidInput("SEP estimation dimensions disagree".into()));
    }
    if n_noise_draws == 0 {
        return Err(Error::InvalidInput("need at least one noise draw".into()));
    }
    let noiseless = ch.h() * x_block;
    let draws_per_slot = n_noise_draws.div_ceil(t_len);
    let trials = draws_per_slot * t_len;
    let per_part = noise_std / std::f64::consts::SQRT_2;

    let mut sep = Vec::with_capacity(k);
    let mut stderr = Vec::with_capacity(k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..k {
        let d = gains.get(i);
        let mut errors = 0usize;
        for t in 0..t_len {
            let sent = block.slot(t)[i];
            let base = noiseless[(i, t)];
            for _ in 0..draws_per_slot {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                let y = base + Complex64::new(re * per_part, im * per_part);
                if decide(specs[i], y / d)? != sent {
                    errors += 1;
                }
            }
        }
        let p = errors as f64 / trials as f64;
        sep.push(p);
        stderr.push((p * (1.0 - p) / trials as f64).sqrt());
    }
    Ok((sep, stderr))
}

struct SchemeRun {
    x_slots: Vec<DVector<Complex64>>,
    gains: GainVector,
    diag: SolverDiag,
    degraded: bool,
}

fn aggregate_reports(reports: &[&crate::qp::SolveReport]) -> (SolverDiag, bool) {
    let mut iterations = 0;
    let mut kkt: f64 = 0.0;
    let mut degraded = false;
    for r in reports {
        iterations += r.iterations;
        kkt = kkt.max(r.kkt_residual);
        degraded |= !r.is_optimal();
    }
    let status = if degraded { "not_optimal" } else { "optimal" };
    (SolverDiag { status: status.into(), iterations, kkt_residual: kkt }, degraded)
}

fn run_scheme(
    scheme: Scheme,
    ch: &ChannelState,
    specs: &[QamSpec],
    block: &SymbolBlock,
    noise_var: f64,
    eps: f64,
) -> Result<SchemeRun> {
    let k = ch.n_users();
    let t_len = block.n_slots();
    let noise_std = noise_var.sqrt();
    let g = gain_constants(noise_std, eps)?;
    let gains_c = vec![g; k];

    match scheme {
        Scheme::Zf => {
            let gains = heuristic_gains(&gains_c, 1.0)?;
            let x_slots = (0..t_len)
                .map(|t| zf_precode(ch, &gains, block.slot(t)).map(|o| o.x))
                .collect::<Result<Vec<_>>>()?;
            Ok(SchemeRun { x_slots, gains, diag: SolverDiag::closed_form(), degraded: false })
        }
        Scheme::SlpHeuristic { zeta } => {
            let gains = heuristic_gains(&gains_c, zeta)?;
            let mut x_slots = Vec::with_capacity(t_len);
            let mut reports = Vec::with_capacity(t_len);
            for t in 0..t_len {
                let bounds = build_bounds(specs, block.slot(t), &gains_c)?;
                let out = slp_per_symbol(ch, &bounds, &gains, block.slot(t))?;
                x_slots.push(out.x);
                reports.push(out.report.expect("per-symbol SLP always reports"));
            }
            let refs: Vec<&crate::qp::SolveReport> = reports.iter().collect();
            let (diag, degraded) = aggregate_reports(&refs);
            Ok(SchemeRun { x_slots, gains, diag, degraded })
        }
        Scheme::SlpBlockAvg => {
            let design = block_average_design(ch, specs, block, noise_std, eps)?;
            let (diag, degraded) = aggregate_reports(&[&design.report]);
            Ok(SchemeRun { x_slots: design.transmit, gains: design.gains, diag, degraded })
        }
        Scheme::SlpBlockPeak => {
            let design = block_peak_design(ch, specs, block, noise_std, eps)?;
            let (diag, degraded) = aggregate_reports(&[&design.report]);
            Ok(SchemeRun { x_slots: design.transmit, gains: design.gains, diag, degraded })
        }
        Scheme::LinearBf => {
            let rho: Vec<f64> = specs.iter().map(QamSpec::avg_energy).collect();
            let targets = rho
                .iter()
                .map(|&r| sinr_target_from_sep(r, eps))
                .collect::<Result<Vec<_>>>()?;
            let bf = sinr_beamforming(ch, &targets, &rho, noise_var)?;
            let eff = bf.effective_gains(ch);
            let gains = GainVector::new(eff)?;
            let x_slots = (0..t_len)
                .map(|t| {
                    linear_bf_as_perturbed_zf(ch, bf.matrix(), &gains, block.slot(t))
                        .map(|o| o.x)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SchemeRun {
                x_slots,
                gains,
                diag: SolverDiag { status: "fixed_point".into(), iterations: 0, kkt_residual: 0.0 },
                degraded: false,
            })
        }
    }
}

fn slots_to_matrix(slots: &[DVector<Complex64>]) -> DMatrix<Complex64> {
    let n = slots[0].len();
    DMatrix::from_fn(n, slots.len(), |i, t| slots[t][i])
}

fn run_cell(cfg: &SimConfig, realization: usize, eps_idx: usize) -> Result<Vec<TrialResult>> {
    let k = cfg.n_users;
    let eps = cfg.eps_grid[eps_idx];
    let spec = QamSpec::new(cfg.qam_level)?;
    let specs = vec![spec; k];
    let ch = gen_channel(
        derive_seed(cfg.seed, &[TAG_CHANNEL, realization as u64]),
        k,
        cfg.n_antennas,
    )?;
    let block_seed = derive_seed(cfg.seed, &[TAG_SYMBOLS, realization as u64]);
    let streams: Vec<Vec<_>> = (0..k)
        .map(|i| draw_symbols(spec, block_seed.wrapping_add(i as u64), cfg.block_len))
        .collect();
    let block = SymbolBlock::from_streams(&streams)?;
    let noise_std = cfg.noise_var.sqrt();

    let mut results = Vec::with_capacity(cfg.schemes.len());
    for scheme in &cfg.schemes {
        let label = scheme.label();
        let sep_seed = derive_seed(
            cfg.seed,
            &[TAG_SEP, realization as u64, fnv1a(label.as_bytes()), eps_idx as u64],
        );
        match run_scheme(*scheme, &ch, &specs, &block, cfg.noise_var, eps) {
            Ok(run) => {
                let energies: Vec<f64> = run.x_slots.iter().map(|x| x.norm_squared()).collect();
                let avg_power = energies.iter().sum::<f64>() / energies.len() as f64;
                let peak_energy = energies.iter().fold(0.0_f64, |a, &b| a.max(b));
                let x_mat = slots_to_matrix(&run.x_slots);
                let (emp_sep, sep_stderr) = estimate_sep(
                    &ch,
                    &x_mat,
                    &block,
                    &run.gains,
                    &specs,
                    noise_std,
                    cfg.sep_trials,
                    sep_seed,
                )?;
                results.push(TrialResult {
                    realization,
                    eps,
                    scheme: label,
                    avg_power,
                    peak_energy,
                    emp_sep,
                    sep_stderr,
                    degraded: run.degraded,
                    diag: run.diag,
                });
            }
            Err(e) => {
                log::warn!("scheme {label} failed on realization {realization}, eps {eps}: {e}");
                results.push(TrialResult {
                    realization,
                    eps,
                    scheme: label,
                    avg_power: f64::NAN,
                    peak_energy: f64::NAN,
                    emp_sep: vec![f64::NAN; k],
                    sep_stderr: vec![f64::NAN; k],
                    degraded: true,
                    diag: SolverDiag {
                        status: format!("error: {e}"),
                        iterations: 0,
                        kkt_residual: f64::NAN,
                    },
                });
            }
        }
    }
    Ok(results)
}

/// Runs the full experiment: every configured scheme on every
/// (realization, ε) cell. Cells execute in parallel on the current rayon
/// pool; results are ordered by (realization, ε index, scheme index) and
/// fully reproducible from the seed.
pub fn run_experiment(cfg: &SimConfig) -> Result<Vec<TrialResult>> {
    cfg.validate()?;
    let cells: Vec<(usize, usize)> = (0..cfg.n_channels)
        .flat_map(|r| (0..cfg.eps_grid.len()).map(move |e| (r, e)))
        .collect();
    let nested: Vec<Vec<TrialResult>> = cells
        .par_iter()
        .map(|&(r, e)| run_cell(cfg, r, e))
        .collect::<Result<Vec<_>>>()?;
    Ok(nested.into_iter().flatten().collect())
}

/// Means over realizations per (scheme, ε), in scheme-major order.
pub fn summarize(results: &[TrialResult]) -> Vec<SummaryRow> {
    let mut schemes: Vec<String> = Vec::new();
    for r in results {
        if !schemes.contains(&r.scheme) {
            schemes.push(r.scheme.clone());
        }
    }
    let mut eps_values: Vec<f64> = Vec::new();
    for r in results {
        if !eps_values.iter().any(|&e| e == r.eps) {
            eps_values.push(r.eps);
        }
    }
    let mut rows = Vec::new();
    for scheme in &schemes {
        for &eps in &eps_values {
            let cells: Vec<&TrialResult> = results
                .iter()
                .filter(|r| &r.scheme == scheme && r.eps == eps)
                .collect();
            if cells.is_empty() {
                continue;
            }
            let n = cells.len() as f64;
            rows.push(SummaryRow {
                scheme: scheme.clone(),
                eps,
                mean_avg_power: cells.iter().map(|r| r.avg_power).sum::<f64>() / n,
                mean_peak_energy: cells.iter().map(|r| r.peak_energy).sum::<f64>() / n,
                max_emp_sep: cells
                    .iter()
                    .flat_map(|r| r.emp_sep.iter().copied())
                    .fold(f64::NEG_INFINITY, f64::max),
            });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::Symbol;

    #[test]
    fn channel_generation_is_seeded_and_unit_variance() {
        let a = gen_channel(5, 4, 6).unwrap();
        let b = gen_channel(5, 4, 6).unwrap();
        assert_eq!(a.h(), b.h());
        assert_ne!(a.h(), gen_channel(6, 4, 6).unwrap().h());

        // 1e5 entries: |h|^2 is Exp(1), so the sample mean has SE 1/sqrt(n)
        let big = gen_channel(42, 100, 1000).unwrap();
        let n = 100_000.0;
        let mean_power: f64 = big.h().iter().map(|z| z.norm_sqr()).sum::<f64>() / n;
        assert!((mean_power - 1.0).abs() < 3.0 / n.sqrt() * 1.5, "{mean_power}");
    }

    #[test]
    fn paper_scale_channel_is_full_rank() {
        let ch = gen_channel(1, 16, 16).unwrap();
        assert!(ch.gram_condition().is_finite());
        assert!(ch.gram_condition() >= 1.0);
    }

    #[test]
    fn noiseless_receive_is_exact() {
        let ch = gen_channel(9, 3, 4).unwrap();
        let x = DMatrix::from_fn(4, 5, |i, j| Complex64::new(i as f64, j as f64));
        let y = transmit_receive(&ch, &x, 0.0, 1);
        assert!(((ch.h() * &x) - y).norm() < 1e-14);
    }

    #[test]
    fn noise_variance_matches() {
        let ch = gen_channel(10, 2, 2).unwrap();
        let t = 20_000;
        let x = DMatrix::<Complex64>::zeros(2, t);
        let sigma = 0.7;
        let y = transmit_receive(&ch, &x, sigma, 33);
        let var: f64 = y.iter().map(|z| z.norm_sqr()).sum::<f64>() / (2 * t) as f64;
        let se = sigma * sigma / ((2 * t) as f64).sqrt();
        assert!((var - sigma * sigma).abs() < 4.0 * se, "{var}");
    }

    #[test]
    fn sep_vanishes_without_noise() {
        let cfg_spec = QamSpec::new(2).unwrap();
        let ch = gen_channel(3, 2, 3).unwrap();
        let streams = vec![
            vec![Symbol::new(1, 1), Symbol::new(3, -3)],
            vec![Symbol::new(-1, 1), Symbol::new(1, -1)],
        ];
        let block = SymbolBlock::from_streams(&streams).unwrap();
        let gains = GainVector::from_slice(&[1.0, 1.0]).unwrap();
        let x = {
            let slots: Vec<DVector<Complex64>> = (0..2)
                .map(|t| {
                    zf_precode(&ch, &gains, block.slot(t)).unwrap().x
                })
                .collect();
            slots_to_matrix(&slots)
        };
        let specs = vec![cfg_spec; 2];
        let (sep, _) =
            estimate_sep(&ch, &x, &block, &gains, &specs, 1e-12, 100, 7).unwrap();
        assert!(sep.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn zf_interior_symbols_hit_the_sep_budget() {
        // ZF with d = alpha and interior-only symbols has per-part SEP
        // exactly eps_bar, so symbol SEP is exactly eps
        let eps = 0.05;
        let spec = QamSpec::new(2).unwrap();
        let ch = gen_channel(21, 4, 6).unwrap();
        let g = gain_constants(1.0, eps).unwrap();
        let gains = heuristic_gains(&vec![g; 4], 1.0).unwrap();
        let interior = [Symbol::new(1, 1), Symbol::new(-1, 1), Symbol::new(1, -1), Symbol::new(-1, -1)];
        let streams: Vec<Vec<Symbol>> = (0..4).map(|i| vec![interior[i]; 2]).collect();
        let block = SymbolBlock::from_streams(&streams).unwrap();
        let slots: Vec<DVector<Complex64>> = (0..2)
            .map(|t| zf_precode(&ch, &gains, block.slot(t)).unwrap().x)
            .collect();
        let x = slots_to_matrix(&slots);
        let m = 200_000;
        let (sep, se) = estimate_sep(&ch, &x, &block, &gains, &vec![spec; 4], 1.0, m, 11).unwrap();
        for i in 0..4 {
            assert!(
                (sep[i] - eps).abs() <= 4.0 * se[i].max(1e-9),
                "user {i}: {} vs {eps} (se {})",
                sep[i],
                se[i]
            );
        }
    }

    #[test]
    fn experiment_is_deterministic_and_bookkept() {
        let cfg = SimConfig {
            n_antennas: 3,
            n_users: 2,
            block_len: 4,
            qam_level: 2,
            noise_var: 1.0,
            eps_grid: vec![0.1, 0.05],
            n_channels: 2,
            schemes: vec![Scheme::Zf, Scheme::SlpHeuristic { zeta: 1.0 }],
            seed: 99,
            sep_trials: 500,
        };
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2 * 2 * 2);

        // ZF average power must match the bookkeeping identity
        for r in a.iter().filter(|r| r.scheme == "zf") {
            let ch = gen_channel(
                derive_seed(cfg.seed, &[TAG_CHANNEL, r.realization as u64]),
                2,
                3,
            )
            .unwrap();
            let block_seed = derive_seed(cfg.seed, &[TAG_SYMBOLS, r.realization as u64]);
            let spec = QamSpec::new(2).unwrap();
            let streams: Vec<Vec<Symbol>> = (0..2)
                .map(|i| draw_symbols(spec, block_seed.wrapping_add(i as u64), 4))
                .collect();
            let block = SymbolBlock::from_streams(&streams).unwrap();
            let g = gain_constants(1.0, r.eps).unwrap();
            let gains = heuristic_gains(&[g, g], 1.0).unwrap();
            let mut avg = 0.0;
            for t in 0..4 {
                avg += zf_precode(&ch, &gains, block.slot(t)).unwrap().energy;
            }
            avg /= 4.0;
            assert!((avg - r.avg_power).abs() <= 1e-12 * avg.max(1.0));
            assert!(r.peak_energy >= r.avg_power);
        }

        let summary = summarize(&a);
        assert_eq!(summary.len(), 2 * 2);
        assert_eq!(summary[0].scheme, "zf");
    }
}
