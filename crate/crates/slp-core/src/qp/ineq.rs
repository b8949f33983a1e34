//! Linear-inequality QP via operator splitting (ADMM) with a cached
//! factorization and Ruiz diagonal preconditioning. The penalty parameter is
//! fixed at 1; the equilibration is what makes that workable.

use nalgebra::DVector;

use super::factor::SymMatrix;
use super::{FactorLayout, LinearConstraint, QuadForm, SolveReport, SolveStatus};
use crate::{Error, Result};

const SIGMA: f64 = 1e-6;
const RHO: f64 = 1.0;
const RELAX: f64 = 1.6;
const MAX_ITER: usize = 100_000;
const CHECK_EVERY: usize = 25;
const REL_TOL: f64 = 1e-6;
const RUIZ_ITERS: usize = 10;
const SCALING_CLAMP: (f64, f64) = (1e-6, 1e6);

/// `min Σᵢ formᵢ(x)` subject to `aᵀx ≤ b` rows.
#[derive(Debug, Clone)]
pub struct IneqQp {
    n: usize,
    forms: Vec<QuadForm>,
    rows: Vec<LinearConstraint>,
    layout: FactorLayout,
}

impl IneqQp {
    pub fn new(n: usize, forms: Vec<QuadForm>, rows: Vec<LinearConstraint>) -> Result<Self> {
        for f in &forms {
            if f.max_index().is_some_and(|i| i >= n) {
                return Err(Error::InvalidInput(
                    "quadratic form support exceeds problem dimension".into(),
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
        Ok(Self { n, forms, rows, layout: FactorLayout::Dense })
    }

    /// Dense construction from `P`, `q` and `Ax ≤ b`.
    pub fn new_dense(
        quad: nalgebra::DMatrix<f64>,
        lin: DVector<f64>,
        a: &nalgebra::DMatrix<f64>,
        b: &DVector<f64>,
    ) -> Result<Self> {
        let n = quad.nrows();
        if a.ncols() != n || a.nrows() != b.len() {
            return Err(Error::InvalidInput(format!(
                "constraint dimensions disagree: A {}x{}, b {}, n {n}",
                a.nrows(),
                a.ncols(),
                b.len()
            )));
        }
        let forms = vec![QuadForm::dense(quad, lin, 0.0)?];
        let rows = (0..a.nrows())
            .map(|i| {
                let row: Vec<f64> = a.row(i).iter().copied().collect();
                LinearConstraint::from_dense(&row, b[i])
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, forms, rows)
    }

    /// Attaches a factorization layout; it must cover every form support and
    /// constraint row.
    pub fn with_layout(mut self, layout: FactorLayout) -> Result<Self> {
        if !layout.fits(self.n, &self.forms, &self.rows) {
            return Err(Error::InvalidInput(
                "factor layout does not cover the problem sparsity".into(),
            ));
        }
        self.layout = layout;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn n_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[LinearConstraint] {
        &self.rows
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        self.forms.iter().map(|f| f.eval(x)).sum()
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.n);
        for f in &self.forms {
            f.add_gradient(x, &mut g);
        }
        g
    }
}

/// Ruiz equilibration scalings: per-variable `d`, per-row `e`, cost scale `c`.
struct Scaling {
    d: Vec<f64>,
    e: Vec<f64>,
    c: f64,
}

fn ruiz_equilibrate(p: &IneqQp) -> Scaling {
    let (n, m) = (p.n, p.rows.len());
    let mut d = vec![1.0_f64; n];
    let mut e = vec![1.0_f64; m];
    let clamp = |v: f64| v.clamp(SCALING_CLAMP.0, SCALING_CLAMP.1);
    for _ in 0..RUIZ_ITERS {
        let mut col = vec![0.0_f64; n];
        for f in &p.forms {
            let s = f.support();
            for (li, &gi) in s.iter().enumerate() {
                for (lj, &gj) in s.iter().enumerate() {
                    let v = 2.0 * f.quad()[(li, lj)].abs() * d[gi] * d[gj];
                    if v > col[gj] {
                        col[gj] = v;
                    }
                }
            }
        }
        let mut row = vec![0.0_f64; m];
        for (i, r) in p.rows.iter().enumerate() {
            for (&cidx, &v) in r.cols().iter().zip(r.coefs()) {
                let s = v.abs() * e[i] * d[cidx];
                if s > col[cidx] {
                    col[cidx] = s;
                }
                if s > row[i] {
                    row[i] = s;
                }
            }
        }
        for j in 0..n {
            if col[j] > 1e-12 {
                d[j] = clamp(d[j] / col[j].sqrt());
            }
        }
        for i in 0..m {
            if row[i] > 1e-12 {
                e[i] = clamp(e[i] / row[i].sqrt());
            }
        }
    }
    // cost scaling: normalize the scaled objective's curvature/gradient
    let mut col_sum = 0.0;
    let mut colmax = vec![0.0_f64; n];
    let mut q_inf = 0.0_f64;
    for f in &p.forms {
        let s = f.support();
        for (li, &gi) in s.iter().enumerate() {
            for (lj, &gj) in s.iter().enumerate() {
                let v = 2.0 * f.quad()[(li, lj)].abs() * d[gi] * d[gj];
                if v > colmax[gj] {
                    colmax[gj] = v;
                }
            }
            q_inf = q_inf.max(f.lin()[li].abs() * d[gi]);
        }
    }
    for v in &colmax {
        col_sum += v;
    }
    let mean_col = if n > 0 { col_sum / n as f64 } else { 0.0 };
    let c = clamp(1.0 / mean_col.max(q_inf).max(1e-12));
    Scaling { d, e, c }
}

struct ScaledData {
    forms: Vec<QuadForm>,
    rows: Vec<LinearConstraint>,
    b: DVector<f64>,
}

fn scale_problem(p: &IneqQp, s: &Scaling) -> ScaledData {
    let forms = p
        .forms
        .iter()
        .map(|f| {
            let sup = f.support().to_vec();
            let mut quad = f.quad().clone();
            let mut lin = f.lin().clone();
            for (li, &gi) in sup.iter().enumerate() {
                for (lj, &gj) in sup.iter().enumerate() {
                    quad[(li, lj)] *= s.c * s.d[gi] * s.d[gj];
                }
                lin[li] *= s.c * s.d[gi];
            }
            QuadForm::new(sup, quad, lin, 0.0).expect("scaling preserves PSD")
        })
        .collect();
    let rows: Vec<LinearConstraint> = p
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let vals: Vec<f64> = r
                .cols()
                .iter()
                .zip(r.coefs())
                .map(|(&cidx, &v)| v * s.e[i] * s.d[cidx])
                .collect();
            LinearConstraint::new(r.cols().to_vec(), vals, r.rhs() * s.e[i])
                .expect("scaling preserves row validity")
        })
        .collect();
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.rhs()));
    ScaledData { forms, rows, b }
}

struct Residuals {
    prim_viol: f64,
    split: f64,
    dual: f64,
    comp: f64,
    thr_prim: f64,
    thr_dual: f64,
    y_inf: f64,
}

fn unscaled_residuals(
    p: &IneqQp,
    abs_tol: f64,
    x_u: &DVector<f64>,
    y_u: &DVector<f64>,
    z_u: &DVector<f64>,
) -> Residuals {
    let m = p.rows.len();
    let mut ax_inf = 0.0_f64;
    let mut b_inf = 0.0_f64;
    let mut prim_viol = 0.0_f64;
    let mut split = 0.0_f64;
    let mut comp = 0.0_f64;
    for (i, r) in p.rows.iter().enumerate() {
        let ax = r.eval(x_u);
        ax_inf = ax_inf.max(ax.abs());
        b_inf = b_inf.max(r.rhs().abs());
        prim_viol = prim_viol.max(ax - r.rhs());
        split = split.max((ax - z_u[i]).abs());
        comp = comp.max((y_u[i] * (ax - r.rhs())).abs());
    }
    prim_viol = prim_viol.max(0.0);
    let grad = p.gradient(x_u);
    let mut aty = DVector::zeros(p.n);
    for (i, r) in p.rows.iter().enumerate() {
        r.add_scaled(y_u[i], &mut aty);
    }
    let stat = (&grad + &aty).amax();
    let y_inf = if m > 0 { y_u.amax() } else { 0.0 };
    // dual infeasibility of the multipliers (they must be nonnegative)
    let y_neg = y_u.iter().fold(0.0_f64, |acc, &v| acc.max(-v));
    Residuals {
        prim_viol,
        split,
        dual: stat.max(y_neg),
        comp: comp / y_inf.max(1.0),
        thr_prim: abs_tol + REL_TOL * ax_inf.max(b_inf),
        thr_dual: abs_tol + REL_TOL * grad.amax().max(aty.amax()),
        y_inf,
    }
}

/// Solves the inequality-constrained QP.
///
/// `tol` is the absolute residual tolerance; the relative part is fixed at
/// 1e-6. `Optimal` requires primal feasibility, stationarity and
/// complementary slackness within the combined thresholds.
pub fn solve_ineq_qp(p: &IneqQp, tol: f64) -> SolveReport {
    let n = p.n;
    let m = p.rows.len();
    let scaling = ruiz_equilibrate(p);
    let data = scale_problem(p, &scaling);

    // cached factorization of P' + sigma*I + rho*A'A (scaled)
    let mut kkt = SymMatrix::zeros(p.layout, n);
    for f in &data.forms {
        kkt.add_sym_block(f.support(), f.quad(), 2.0);
    }
    kkt.add_diag(SIGMA);
    for r in &data.rows {
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

    let q_s = {
        let mut q = DVector::zeros(n);
        for f in &data.forms {
            for (li, &gi) in f.support().iter().enumerate() {
                q[gi] += f.lin()[li];
            }
        }
        q
    };

    let mut x = DVector::<f64>::zeros(n);
    let mut z = DVector::<f64>::zeros(m);
    let mut y = DVector::<f64>::zeros(m);

    let unscale = |x_s: &DVector<f64>, y_s: &DVector<f64>, z_s: &DVector<f64>| {
        let x_u = DVector::from_fn(n, |i, _| x_s[i] * scaling.d[i]);
        let y_u = DVector::from_fn(m, |i, _| y_s[i] * scaling.e[i] / scaling.c);
        let z_u = DVector::from_fn(m, |i, _| z_s[i] / scaling.e[i]);
        (x_u, y_u, z_u)
    };

    let mut y_prev_check = y.clone();
    let mut y_inf_at_stall_probe = f64::INFINITY;
    let mut best_prim_viol = f64::INFINITY;
    let mut last = None;
    let a_amax = p
        .rows
        .iter()
        .flat_map(|r| r.coefs().iter())
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let b_inf = p.rows.iter().fold(0.0_f64, |acc, r| acc.max(r.rhs().abs()));

    for iter in 1..=MAX_ITER {
        // x-update: (P' + sigma I + rho A'A) x = sigma x - q + A'(rho z - y)
        let mut rhs = SIGMA * &x - &q_s;
        for (i, r) in data.rows.iter().enumerate() {
            r.add_scaled(RHO * z[i] - y[i], &mut rhs);
        }
        let x_tilde = factor.solve(&rhs);
        let z_tilde = DVector::from_fn(m, |i, _| data.rows[i].eval(&x_tilde));
        let x_next = RELAX * &x_tilde + (1.0 - RELAX) * &x;
        let v = RELAX * &z_tilde + (1.0 - RELAX) * &z + &y / RHO;
        let z_next = DVector::from_fn(m, |i, _| v[i].min(data.b[i]));
        let y_next = RHO * (&v - &z_next);
        x = x_next;
        z = z_next;
        y = y_next;

        if iter % CHECK_EVERY == 0 || iter == MAX_ITER {
            let (x_u, y_u, z_u) = unscale(&x, &y, &z);
            let res = unscaled_residuals(p, tol, &x_u, &y_u, &z_u);
            best_prim_viol = best_prim_viol.min(res.prim_viol.max(res.split));
            let converged = res.prim_viol.max(res.split) <= res.thr_prim
                && res.dual <= res.thr_dual
                && res.comp <= res.thr_prim.max(res.thr_dual);
            if converged {
                let objective = p.objective(&x_u);
                return SolveReport {
                    solution: x_u,
                    objective,
                    kkt_residual: res.prim_viol.max(res.dual).max(res.comp),
                    iterations: iter,
                    status: SolveStatus::Optimal,
                    tolerance: res.thr_prim.max(res.thr_dual),
                };
            }
            // primal infeasibility certificate from the dual update direction
            if m > 0 {
                let dy = DVector::from_fn(m, |i, _| {
                    (y[i] - y_prev_check[i]) * scaling.e[i] / scaling.c
                });
                let dy_inf = dy.amax();
                if dy_inf > 1e-30 {
                    let mut atdy = DVector::zeros(n);
                    let mut btdy = 0.0;
                    for (i, r) in p.rows.iter().enumerate() {
                        r.add_scaled(dy[i], &mut atdy);
                        btdy += r.rhs() * dy[i];
                    }
                    if atdy.amax() <= 1e-10 * dy_inf * a_amax.max(1.0)
                        && btdy < -1e-10 * dy_inf * (1.0 + b_inf)
                    {
                        return SolveReport {
                            solution: x_u,
                            objective: f64::NAN,
                            kkt_residual: f64::INFINITY,
                            iterations: iter,
                            status: SolveStatus::Infeasible,
                            tolerance: tol,
                        };
                    }
                }
                y_prev_check = y.clone();
            }
            // stagnation guard: stuck primal residual with growing duals
            if iter == MAX_ITER / 20 {
                y_inf_at_stall_probe = res.y_inf.max(1.0);
            }
            if iter >= 10_000
                && best_prim_viol > 1e-3
                && res.y_inf > 10.0 * y_inf_at_stall_probe
            {
                return SolveReport {
                    solution: x_u,
                    objective: f64::NAN,
                    kkt_residual: f64::INFINITY,
                    iterations: iter,
                    status: SolveStatus::Infeasible,
                    tolerance: tol,
                };
            }
            last = Some((x_u, res));
        }
    }

    let (x_u, res) = last.expect("at least one residual check");
    let objective = p.objective(&x_u);
    SolveReport {
        solution: x_u,
        objective,
        kkt_residual: res.prim_viol.max(res.dual).max(res.comp),
        iterations: MAX_ITER,
        status: SolveStatus::MaxIter,
        tolerance: res.thr_prim.max(res.thr_dual),
    }
}
