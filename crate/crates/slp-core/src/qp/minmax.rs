//! Min-max quadratic programming: `min max_t f_t(x)` under linear
//! inequalities, solved by operator splitting on the epigraph form.
//!
//! Each piece `f_t(x) ≤ τ` is rewritten through an eigendecomposition of its
//! quadratic as `‖y_t + ŷ_t‖² + u_t + ĉ_t ≤ τ` with `y_t, u_t` linear in the
//! variables, so the splitting only ever projects onto the convex set
//! `{(y, u, s) : ‖y‖² + u ≤ s}` (a one-dimensional root per piece) and onto
//! half-lines for the linear rows. One cached factorization of
//! `σI + ρCᵀC` serves every iteration and inherits the block-arrow shape of
//! the block problems.

use nalgebra::{DMatrix, DVector};

use super::factor::SymMatrix;
use super::{FactorLayout, LinearConstraint, QuadForm, SolveReport, SolveStatus};
use crate::{Error, Result};

const SIGMA: f64 = 1e-6;
const RHO: f64 = 1.0;
const RELAX: f64 = 1.6;
const MAX_ITER: usize = 200_000;
const CHECK_EVERY: usize = 25;
const REL_TOL: f64 = 1e-6;

/// `min max_t f_t(x)` with `f_t(x) = xᵀP_t x + q_tᵀx + r_t` (each PSD),
/// subject to shared rows `aᵀx ≤ b`.
#[derive(Debug, Clone)]
pub struct MinMaxQp {
    n: usize,
    pieces: Vec<QuadForm>,
    rows: Vec<LinearConstraint>,
    layout: FactorLayout,
    start: Option<DVector<f64>>,
}

impl MinMaxQp {
    pub fn new(n: usize, pieces: Vec<QuadForm>, rows: Vec<LinearConstraint>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidInput("min-max needs at least one quadratic piece".into()));
        }
        for f in &pieces {
            if f.max_index().is_some_and(|i| i >= n) {
                return Err(Error::InvalidInput(
                    "piece support exceeds problem dimension".into(),
                ));
            }
        }
        for r in &rows {
            if r.max_index().is_some_and(|i| i >= n) {
                return Err(Error::InvalidInput(
                    "constraint row index exceeds problem dimension".into(),
                ));
            }
        }
        Ok(Self { n, pieces, rows, layout: FactorLayout::Dense, start: None })
    }

    pub fn with_layout(mut self, layout: FactorLayout) -> Result<Self> {
        if !layout.fits(self.n, &self.pieces, &self.rows) {
            return Err(Error::InvalidInput(
                "factor layout does not cover the problem sparsity".into(),
            ));
        }
        self.layout = layout;
        Ok(self)
    }

    /// Warm-start hint for the splitting iteration.
    pub fn with_start(mut self, start: DVector<f64>) -> Self {
        self.start = Some(start);
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn n_pieces(&self) -> usize {
        self.pieces.len()
    }

    /// `max_t f_t(x)`.
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        self.pieces
            .iter()
            .map(|f| f.eval(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// One epigraph piece in factored form: rows `y = Wᵀx_s` (plus offsets) and
/// the nullspace linear remainder, representing
/// `‖y + y_off‖² + u + u_off ≤ τ`.
struct ConePiece {
    /// Per y-row sparse coefficients over the problem variables.
    y_rows: Vec<(Vec<usize>, Vec<f64>)>,
    y_off: Vec<f64>,
    /// Linear remainder row (may be empty).
    u_cols: Vec<usize>,
    u_vals: Vec<f64>,
    u_off: f64,
}

const EIG_DROP: f64 = 1e-12;

fn factor_piece(f: &QuadForm) -> ConePiece {
    let support = f.support();
    let s = support.len();
    let eig = f.quad().clone().symmetric_eigen();
    let lambda_max = eig.eigenvalues.amax().max(1.0);
    let mut y_rows = Vec::new();
    let mut y_off = Vec::new();
    // l decomposed along eigenvectors: positive directions absorb their
    // linear part into the square, the rest stays as a linear remainder
    let mut remainder = f.lin().clone();
    for i in 0..s {
        let lam = eig.eigenvalues[i];
        if lam > EIG_DROP * lambda_max {
            let v = eig.eigenvectors.column(i);
            let beta = f.lin().dot(&v);
            let sq = lam.sqrt();
            let cols = support.to_vec();
            let vals: Vec<f64> = v.iter().map(|&e| e * sq).collect();
            y_rows.push((cols, vals));
            y_off.push(beta / (2.0 * sq));
            remainder -= beta * v;
        }
    }
    let off_sq: f64 = y_off.iter().map(|b| b * b).sum();
    let mut u_cols = Vec::new();
    let mut u_vals = Vec::new();
    for (li, &g) in support.iter().enumerate() {
        if remainder[li].abs() > 1e-14 {
            u_cols.push(g);
            u_vals.push(remainder[li]);
        }
    }
    ConePiece {
        y_rows,
        y_off,
        u_cols,
        u_vals,
        u_off: f.constant() - off_sq,
    }
}

/// Projection onto `{(y, u, s) : ‖y‖² + u ≤ s}`. In-place on the slice
/// `[y.., u, s]`.
fn project_paraboloid(block: &mut [f64]) {
    let m = block.len();
    let (y, tail) = block.split_at_mut(m - 2);
    let u0 = tail[0];
    let s0 = tail[1];
    let ysq: f64 = y.iter().map(|v| v * v).sum();
    if ysq + u0 <= s0 {
        return;
    }
    // root of g(t) = ||y0||^2/(1+t)^2 + u0 - s0 - 2t, decreasing convex
    let mut t = 0.0_f64;
    for _ in 0..80 {
        let denom = 1.0 + t;
        let g = ysq / (denom * denom) + u0 - s0 - 2.0 * t;
        if g <= 0.0 {
            break;
        }
        let dg = -2.0 * ysq / (denom * denom * denom) - 2.0;
        let step = g / dg;
        t -= step;
        if step.abs() <= 1e-15 * (1.0 + t) {
            break;
        }
    }
    let scale = 1.0 / (1.0 + t);
    for v in y.iter_mut() {
        *v *= scale;
    }
    tail[0] = u0 - t;
    tail[1] = s0 + t;
}

/// Solves the min-max program.
///
/// `tol` is the absolute residual tolerance of the splitting (the relative
/// part is fixed at 1e-6). The reported solution is the `x` iterate; the
/// objective is `max_t f_t(x)` recomputed at the solution.
pub fn solve_minmax_qp(p: &MinMaxQp, tol: f64) -> SolveReport {
    let n = p.n;
    let nz = n + 1;
    let tau_idx = n;
    let n_pieces = p.pieces.len();
    let debug = std::env::var_os("SLP_BARRIER_DEBUG").is_some();

    // normalize the pieces so rho = 1 sees O(1) curvature; the reported
    // objective is recomputed from the unscaled pieces at the end
    let piece_scale = p
        .pieces
        .iter()
        .map(|f| f.quad().amax().max(f.lin().amax()))
        .fold(0.0_f64, f64::max)
        .max(1e-12);
    let scaled: Vec<QuadForm> = p
        .pieces
        .iter()
        .map(|f| {
            QuadForm::new(
                f.support().to_vec(),
                f.quad() / piece_scale,
                f.lin() / piece_scale,
                f.constant() / piece_scale,
            )
            .expect("scaling preserves validity")
        })
        .collect();
    let cones: Vec<ConePiece> = scaled.iter().map(factor_piece).collect();

    // constraint vector layout: per piece [y.., u, s], then the linear rows
    let mut piece_base = Vec::with_capacity(n_pieces);
    let mut m_total = 0usize;
    for c in &cones {
        piece_base.push(m_total);
        m_total += c.y_rows.len() + 2;
    }
    let rows_base = m_total;
    m_total += p.rows.len();

    // apply(z) -> w = Cz + h
    let apply = |z: &DVector<f64>, w: &mut DVector<f64>| {
        for (c, &base) in cones.iter().zip(&piece_base) {
            for (i, (cols, vals)) in c.y_rows.iter().enumerate() {
                let mut acc = c.y_off[i];
                for (&col, &v) in cols.iter().zip(vals) {
                    acc += v * z[col];
                }
                w[base + i] = acc;
            }
            let mut acc = c.u_off;
            for (&col, &v) in c.u_cols.iter().zip(&c.u_vals) {
                acc += v * z[col];
            }
            let ny = c.y_rows.len();
            w[base + ny] = acc;
            w[base + ny + 1] = z[tau_idx];
        }
        for (i, r) in p.rows.iter().enumerate() {
            w[rows_base + i] = r.eval(z);
        }
    };
    // out += Cᵀv
    let apply_t = |v: &DVector<f64>, out: &mut DVector<f64>| {
        for (c, &base) in cones.iter().zip(&piece_base) {
            for (i, (cols, vals)) in c.y_rows.iter().enumerate() {
                let vi = v[base + i];
                for (&col, &coef) in cols.iter().zip(vals) {
                    out[col] += coef * vi;
                }
            }
            let ny = c.y_rows.len();
            let vu = v[base + ny];
            for (&col, &coef) in c.u_cols.iter().zip(&c.u_vals) {
                out[col] += coef * vu;
            }
            out[tau_idx] += v[base + ny + 1];
        }
        for (i, r) in p.rows.iter().enumerate() {
            r.add_scaled(v[rows_base + i], out);
        }
    };
    let project = |w: &mut DVector<f64>| {
        for (c, &base) in cones.iter().zip(&piece_base) {
            let len = c.y_rows.len() + 2;
            project_paraboloid(&mut w.as_mut_slice()[base..base + len]);
        }
        for (i, r) in p.rows.iter().enumerate() {
            let idx = rows_base + i;
            if w[idx] > r.rhs() {
                w[idx] = r.rhs();
            }
        }
    };

    // cached factorization of sigma*I + rho*C'C
    let layout = p.layout.grow_tail(1);
    let mut kkt = SymMatrix::zeros(layout, nz);
    kkt.add_diag(SIGMA);
    for c in &cones {
        for (cols, vals) in &c.y_rows {
            kkt.add_rank1(cols, vals, RHO);
        }
        if !c.u_cols.is_empty() {
            kkt.add_rank1(&c.u_cols, &c.u_vals, RHO);
        }
        kkt.add_rank1(&[tau_idx], &[1.0], RHO);
    }
    for r in &p.rows {
        kkt.add_rank1(r.cols(), r.coefs(), RHO);
    }
    let factor = match kkt.cholesky() {
        Some(f) => f,
        None => {
            return SolveReport {
                solution: DVector::zeros(n),
                objective: f64::NAN,
                kkt_residual: f64::INFINITY,
                iterations: 0,
                status: SolveStatus::MaxIter,
                tolerance: tol,
            }
        }
    };

    // constant offset h = C·0 + h
    let h = {
        let mut h = DVector::<f64>::zeros(m_total);
        apply(&DVector::zeros(nz), &mut h);
        h
    };

    // objective q = e_tau (scaled); warm start from the hint when present
    let mut z = DVector::<f64>::zeros(nz);
    if let Some(start) = &p.start {
        if start.len() == n {
            z.rows_mut(0, n).copy_from(start);
            z[tau_idx] = (p.objective(start) / piece_scale).max(0.0);
        }
    }
    let mut zhat = DVector::<f64>::zeros(m_total);
    apply(&z, &mut zhat);
    project(&mut zhat);
    let mut y = DVector::<f64>::zeros(m_total);

    let mut w = DVector::<f64>::zeros(m_total);
    let mut best_prim = f64::INFINITY;
    let mut y_inf_probe = f64::INFINITY;
    let mut status = SolveStatus::MaxIter;
    let mut iterations = MAX_ITER;
    let mut kkt_residual = f64::INFINITY;
    let mut tolerance = tol;

    for iter in 1..=MAX_ITER {
        // x-update: (sigma I + rho C'C) x = sigma z - q + C'(rho(zhat - h) - y)
        // with the offsets folded through zhat - Cz relations: we keep w = Cz+h
        // and treat h implicitly by solving in the w coordinates
        let mut rhs = SIGMA * &z;
        rhs[tau_idx] -= 1.0;
        // C'(rho*zhat - y) with the offset correction C'(rho*(-h)) folded in:
        // apply_t consumes (rho*zhat - y) and we subtract C' rho h via the
        // offset-aware apply of the zero vector
        let mut corr = DVector::<f64>::zeros(m_total);
        let zero = DVector::<f64>::zeros(nz);
        apply(&zero, &mut corr); // corr = h
        let v = RHO * (&zhat - &corr) - &y;
        apply_t(&v, &mut rhs);
        let x_tilde = factor.solve(&rhs);

        let mut w_tilde = DVector::<f64>::zeros(m_total);
        apply(&x_tilde, &mut w_tilde);
        let z_next = RELAX * &x_tilde + (1.0 - RELAX) * &z;
        let v = RELAX * &w_tilde + (1.0 - RELAX) * &zhat + &y / RHO;
        let mut zhat_next = v.clone();
        project(&mut zhat_next);
        let y_next = RHO * (&v - &zhat_next);
        z = z_next;
        zhat = zhat_next;
        y = y_next;

        if iter % CHECK_EVERY == 0 || iter == MAX_ITER {
            apply(&z, &mut w);
            let split = (&w - &zhat).amax();
            let mut stat = DVector::<f64>::zeros(nz);
            stat[tau_idx] = 1.0;
            apply_t(&y, &mut stat);
            let r_dual = stat.amax();
            let w_inf = w.amax().max(zhat.amax());
            let aty_inf = {
                let mut tmp = DVector::<f64>::zeros(nz);
                apply_t(&y, &mut tmp);
                tmp.amax()
            };
            let thr_prim = tol + REL_TOL * w_inf;
            let thr_dual = tol + REL_TOL * aty_inf.max(1.0);
            best_prim = best_prim.min(split);
            if debug && (iter / CHECK_EVERY) % 40 == 0 {
                eprintln!(
                    "mmadmm iter={iter} tau={:.6} split={split:.3e} rdual={r_dual:.3e}",
                    z[tau_idx]
                );
            }
            if split <= thr_prim && r_dual <= thr_dual {
                status = SolveStatus::Optimal;
                iterations = iter;
                kkt_residual = split.max(r_dual);
                tolerance = thr_prim.max(thr_dual);
                break;
            }
            // stagnation guard: stuck primal residual with growing duals
            if iter == MAX_ITER / 20 {
                y_inf_probe = y.amax().max(1.0);
            }
            if iter >= 10_000 && best_prim > 1e-3 && y.amax() > 10.0 * y_inf_probe {
                status = SolveStatus::Infeasible;
                iterations = iter;
                kkt_residual = f64::INFINITY;
                break;
            }
            if iter == MAX_ITER {
                kkt_residual = split.max(r_dual);
                tolerance = thr_prim.max(thr_dual);
            }
        }
    }

    let x = z.rows(0, n).clone_owned();
    let objective = if status == SolveStatus::Infeasible {
        f64::NAN
    } else {
        p.objective(&x)
    };
    SolveReport {
        solution: x,
        objective,
        kkt_residual,
        iterations,
        status,
        tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paraboloid_projection_fixed_points_and_pull() {
        let mut inside = [0.5, -0.2, 0.1, 1.0];
        let orig = inside;
        project_paraboloid(&mut inside);
        assert_eq!(inside, orig);

        let mut outside = [2.0, 0.0, 0.5, 1.0];
        project_paraboloid(&mut outside);
        let ysq = outside[0] * outside[0] + outside[1] * outside[1];
        assert!(ysq + outside[2] <= outside[3] + 1e-10);
        // projection lands on the boundary
        assert!((ysq + outside[2] - outside[3]).abs() <= 1e-9);
    }

    #[test]
    fn two_parabolas_meet_in_the_middle() {
        // f1 = (x-1)^2, f2 = (x+1)^2, no constraints -> x = 0, objective 1
        let p1 = QuadForm::dense(
            DMatrix::identity(1, 1),
            DVector::from_vec(vec![-2.0]),
            1.0,
        )
        .unwrap();
        let p2 = QuadForm::dense(
            DMatrix::identity(1, 1),
            DVector::from_vec(vec![2.0]),
            1.0,
        )
        .unwrap();
        let p = MinMaxQp::new(1, vec![p1, p2], vec![]).unwrap();
        let r = solve_minmax_qp(&p, 1e-8);
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!(r.solution[0].abs() < 1e-5, "{}", r.solution[0]);
        assert!((r.objective - 1.0).abs() < 1e-5);
    }

    #[test]
    fn single_piece_with_constraint() {
        // min ||x||^2 s.t. x1 + x2 >= 2, as a degenerate max
        let piece = QuadForm::dense(DMatrix::identity(2, 2), DVector::zeros(2), 0.0).unwrap();
        let row = LinearConstraint::from_dense(&[-1.0, -1.0], -2.0).unwrap();
        let p = MinMaxQp::new(2, vec![piece], vec![row]).unwrap();
        let r = solve_minmax_qp(&p, 1e-8);
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.solution[0] - 1.0).abs() < 1e-4);
        assert!((r.solution[1] - 1.0).abs() < 1e-4);
        assert!((r.objective - 2.0).abs() < 1e-5);
    }

    #[test]
    fn affine_pieces_work() {
        // min max(x, -x) = |x| over x >= -5: optimum 0
        let up = QuadForm::dense(DMatrix::zeros(1, 1), DVector::from_vec(vec![1.0]), 0.0).unwrap();
        let dn = QuadForm::dense(DMatrix::zeros(1, 1), DVector::from_vec(vec![-1.0]), 0.0).unwrap();
        let row = LinearConstraint::from_dense(&[-1.0], 5.0).unwrap();
        let p = MinMaxQp::new(1, vec![up, dn], vec![row]).unwrap();
        let r = solve_minmax_qp(&p, 1e-8);
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!(r.solution[0].abs() < 1e-5);
        assert!(r.objective.abs() < 1e-5);
    }

    #[test]
    fn infeasible_rows_detected() {
        let piece = QuadForm::dense(DMatrix::identity(1, 1), DVector::zeros(1), 0.0).unwrap();
        let rows = vec![
            LinearConstraint::from_dense(&[1.0], -1.0).unwrap(),
            LinearConstraint::from_dense(&[-1.0], -1.0).unwrap(),
        ];
        let p = MinMaxQp::new(1, vec![piece], rows).unwrap();
        assert_eq!(solve_minmax_qp(&p, 1e-8).status, SolveStatus::Infeasible);
    }

    #[test]
    fn start_hint_is_used() {
        let piece = QuadForm::dense(DMatrix::identity(1, 1), DVector::zeros(1), 0.0).unwrap();
        let row = LinearConstraint::from_dense(&[-1.0], -3.0).unwrap(); // x >= 3
        let p = MinMaxQp::new(1, vec![piece], vec![row])
            .unwrap()
            .with_start(DVector::from_vec(vec![5.0]));
        let r = solve_minmax_qp(&p, 1e-8);
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.solution[0] - 3.0).abs() < 1e-4);
        assert!((r.objective - 9.0).abs() < 1e-3);
    }
}
