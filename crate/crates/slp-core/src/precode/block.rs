//! Block designs: jointly optimize the gain vector and all per-slot
//! perturbations over a transmission block, minimizing either the average
//! power or the peak slot energy.
//!
//! With `D s_t = Diag(s_t) d` linear in `d`, both problems stay convex in
//! the stacked variable `z = [v_1, …, v_T, d]` (per-slot liftings `v_t`
//! followed by the shared gains). Each slot's objective touches only
//! `(v_t, d)`, which gives the assembled programs their block-arrow shape.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::{ChannelState, GainVector};
use crate::constellation::{QamSpec, SymbolBlock};
use crate::qp::{
    solve_ineq_qp, solve_minmax_qp, FactorLayout, IneqQp, LinearConstraint, MinMaxQp, QuadForm,
    SolveReport,
};
use crate::sep::{build_bounds, gain_constants, GainConstants};
use crate::{Error, Result};

/// Result of a block design: optimized gains, per-slot perturbations and
/// transmit vectors, block power metrics, and the solver report.
#[derive(Debug, Clone)]
pub struct BlockDesign {
    pub gains: GainVector,
    pub perturbations: Vec<DVector<Complex64>>,
    pub transmit: Vec<DVector<Complex64>>,
    pub avg_power: f64,
    pub peak_energy: f64,
    pub report: SolveReport,
}

struct BlockProgram {
    n: usize,
    forms: Vec<QuadForm>,
    rows: Vec<LinearConstraint>,
    layout: FactorLayout,
    gains_c: Vec<GainConstants>,
}

fn assemble(
    ch: &ChannelState,
    specs: &[QamSpec],
    block: &SymbolBlock,
    noise_std: f64,
    eps: f64,
    slot_weight: f64,
) -> Result<BlockProgram> {
    let k = ch.n_users();
    let t_len = block.n_slots();
    if specs.len() != k || block.n_users() != k {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: K={k} users, {} specs, {} block users",
            specs.len(),
            block.n_users()
        )));
    }
    if t_len == 0 {
        return Err(Error::InvalidInput("block must have at least one slot".into()));
    }
    let g = gain_constants(noise_std, eps)?;
    let gains_c = vec![g; k];

    let d_base = 2 * k * t_len;
    let n = d_base + k;
    let p_r = ch.r_lifted();

    let mut forms = Vec::with_capacity(t_len);
    let mut rows = Vec::new();
    for t in 0..t_len {
        let symbols = block.slot(t);
        // S_t maps d to the lifted shift [Re(Ds_t); Im(Ds_t)]
        let mut s_map = DMatrix::<f64>::zeros(2 * k, k);
        for (i, sym) in symbols.iter().enumerate() {
            s_map[(i, i)] = sym.re as f64;
            s_map[(k + i, i)] = sym.im as f64;
        }
        let cross = p_r * &s_map;
        let tail = s_map.transpose() * &cross;
        let mut quad = DMatrix::<f64>::zeros(3 * k, 3 * k);
        quad.view_mut((0, 0), (2 * k, 2 * k)).copy_from(p_r);
        quad.view_mut((0, 2 * k), (2 * k, k)).copy_from(&cross);
        quad.view_mut((2 * k, 0), (k, 2 * k)).copy_from(&cross.transpose());
        quad.view_mut((2 * k, 2 * k), (k, k)).copy_from(&tail);
        let support: Vec<usize> = (t * 2 * k..(t + 1) * 2 * k)
            .chain(d_base..d_base + k)
            .collect();
        forms.push(QuadForm::new(
            support,
            quad * slot_weight,
            DVector::zeros(3 * k),
            0.0,
        )?);

        let bounds = build_bounds(specs, symbols, &gains_c)?;
        for i in 0..k {
            let re_idx = t * 2 * k + i;
            let im_idx = t * 2 * k + k + i;
            let d_idx = d_base + i;
            // lower: −v − d ≤ −a; upper: v − d ≤ −c (per axis, finite only)
            if let Some(a) = bounds.a_re[i].finite() {
                rows.push(LinearConstraint::new(vec![re_idx, d_idx], vec![-1.0, -1.0], -a)?);
            }
            if let Some(c) = bounds.c_re[i].finite() {
                rows.push(LinearConstraint::new(vec![re_idx, d_idx], vec![1.0, -1.0], -c)?);
            }
            if let Some(a) = bounds.a_im[i].finite() {
                rows.push(LinearConstraint::new(vec![im_idx, d_idx], vec![-1.0, -1.0], -a)?);
            }
            if let Some(c) = bounds.c_im[i].finite() {
                rows.push(LinearConstraint::new(vec![im_idx, d_idx], vec![1.0, -1.0], -c)?);
            }
        }
    }
    for i in 0..k {
        rows.push(LinearConstraint::new(vec![d_base + i], vec![-1.0], 0.0)?);
    }

    let layout = FactorLayout::BlockArrow { block_len: 2 * k, blocks: t_len, tail_len: k };
    Ok(BlockProgram { n, forms, rows, layout, gains_c })
}

fn extract(
    ch: &ChannelState,
    block: &SymbolBlock,
    solution: &DVector<f64>,
    report: SolveReport,
) -> Result<BlockDesign> {
    let k = ch.n_users();
    let t_len = block.n_slots();
    let d_base = 2 * k * t_len;
    // clamp solver-tolerance negatives on the d >= 0 face
    let d = DVector::from_fn(k, |i, _| solution[d_base + i].max(1e-12));
    let gains = GainVector::new(d)?;

    let mut perturbations = Vec::with_capacity(t_len);
    let mut transmit = Vec::with_capacity(t_len);
    let mut avg_power = 0.0;
    let mut peak_energy = 0.0_f64;
    for t in 0..t_len {
        let u = DVector::from_fn(k, |i, _| {
            Complex64::new(solution[t * 2 * k + i], solution[t * 2 * k + k + i])
        });
        let sv = DVector::from_iterator(k, block.slot(t).iter().map(|s| s.value()));
        let target = gains.scale_complex(&sv);
        let x = ch.precode_through(&(&target + &u));
        let energy = x.norm_squared();
        avg_power += energy;
        peak_energy = peak_energy.max(energy);
        perturbations.push(u);
        transmit.push(x);
    }
    avg_power /= t_len as f64;
    Ok(BlockDesign { gains, perturbations, transmit, avg_power, peak_energy, report })
}

/// Jointly optimal gains and perturbations minimizing the block-average
/// transmit power.
pub fn block_average_design(
    ch: &ChannelState,
    specs: &[QamSpec],
    block: &SymbolBlock,
    noise_std: f64,
    eps: f64,
) -> Result<BlockDesign> {
    let t_len = block.n_slots();
    let prog = assemble(ch, specs, block, noise_std, eps, 1.0 / t_len as f64)?;
    let problem = IneqQp::new(prog.n, prog.forms, prog.rows)?.with_layout(prog.layout)?;
    let report = solve_ineq_qp(&problem, 1e-8);
    if report.status == crate::qp::SolveStatus::Infeasible {
        return Err(Error::Solver(
            "block average design reported infeasible constraints".into(),
        ));
    }
    extract(ch, block, &report.solution.clone(), report)
}

/// Jointly optimal gains and perturbations minimizing the peak slot energy.
pub fn block_peak_design(
    ch: &ChannelState,
    specs: &[QamSpec],
    block: &SymbolBlock,
    noise_std: f64,
    eps: f64,
) -> Result<BlockDesign> {
    let k = ch.n_users();
    let t_len = block.n_slots();
    let mut prog = assemble(ch, specs, block, noise_std, eps, 1.0)?;
    // strictly feasible start: zero perturbations, comfortably large gains,
    // blended toward the average design's solution when it is available
    // (a deep-interior point anchors the blend, so strict feasibility holds)
    let mut start = DVector::<f64>::zeros(prog.n);
    for i in 0..k {
        start[2 * k * t_len + i] = 2.0 * prog.gains_c[i].alpha + 1.0;
    }
    if let Ok(avg) = block_average_design(ch, specs, block, noise_std, eps) {
        let mut warm = DVector::<f64>::zeros(prog.n);
        for t in 0..t_len {
            for i in 0..k {
                warm[t * 2 * k + i] = avg.perturbations[t][i].re;
                warm[t * 2 * k + k + i] = avg.perturbations[t][i].im;
            }
        }
        for i in 0..k {
            warm[2 * k * t_len + i] = avg.gains.get(i);
        }
        start = 0.05 * &start + 0.95 * warm;
    }
    // A user whose parts over the whole block are all ±1 leaves the feasible
    // set unbounded along an objective-flat gain direction, which strands the
    // barrier's analytic center at infinity. From any optimum such a gain can
    // be lowered along that flat line until a row binds at (|w|+alpha)/2 with
    // ||w||^2 <= tau*/lambda_min(R), so capping d at a bound derived from the
    // start objective keeps an optimal point while bounding the region.
    let start_obj = prog
        .forms
        .iter()
        .map(|f| f.eval(&start))
        .fold(0.0_f64, f64::max);
    let w_bound = (start_obj * ch.gram_lambda_max()).sqrt();
    for i in 0..k {
        let alpha = prog.gains_c[i].alpha;
        let d_max = (4.0 * alpha + 2.0)
            .max(0.5 * (w_bound + alpha) + 1.0)
            .max(2.0 * start[2 * k * t_len + i] + 1.0);
        prog.rows
            .push(LinearConstraint::new(vec![2 * k * t_len + i], vec![1.0], d_max)?);
    }
    let problem = MinMaxQp::new(prog.n, prog.forms, prog.rows)?
        .with_layout(prog.layout)?
        .with_start(start);
    let report = solve_minmax_qp(&problem, 1e-6);
    if report.status == crate::qp::SolveStatus::Infeasible {
        return Err(Error::Solver(
            "block peak design reported infeasible constraints".into(),
        ));
    }
    extract(ch, block, &report.solution.clone(), report)
}
