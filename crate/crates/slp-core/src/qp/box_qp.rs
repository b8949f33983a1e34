//! Box-constrained QP via accelerated projected gradient with monotone
//! restarts. The projection is closed-form even with unbounded entries, so
//! the per-slot perturbation problems solve in microseconds.

use nalgebra::{DMatrix, DVector};

use super::{validate_psd, SolveReport, SolveStatus};
use crate::bound::Bound;
use crate::{Error, Result};

const MAX_ITER: usize = 100_000;

/// `min xᵀPx + qᵀx` subject to `lower ≤ x ≤ upper` elementwise.
#[derive(Debug, Clone)]
pub struct BoxQp {
    quad: DMatrix<f64>,
    lin: DVector<f64>,
    lower: Vec<Bound>,
    upper: Vec<Bound>,
}

impl BoxQp {
    pub fn new(
        quad: DMatrix<f64>,
        lin: DVector<f64>,
        lower: Vec<Bound>,
        upper: Vec<Bound>,
    ) -> Result<Self> {
        let n = quad.nrows();
        if lin.len() != n || lower.len() != n || upper.len() != n {
            return Err(Error::InvalidInput(format!(
                "box QP dimensions disagree: quad {n}x{}, lin {}, bounds {}/{}",
                quad.ncols(),
                lin.len(),
                lower.len(),
                upper.len()
            )));
        }
        if lower.iter().any(|b| matches!(b, Bound::PosInf))
            || upper.iter().any(|b| matches!(b, Bound::NegInf))
        {
            return Err(Error::InvalidInput(
                "lower bounds may not be +inf, upper bounds may not be -inf".into(),
            ));
        }
        let quad = validate_psd(&quad)?;
        Ok(Self { quad, lin, lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lin.len()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        (x.transpose() * &self.quad * x)[(0, 0)] + self.lin.dot(x)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        2.0 * &self.quad * x + &self.lin
    }

    fn is_empty(&self) -> bool {
        self.lower
            .iter()
            .zip(&self.upper)
            .any(|(lo, hi)| match (lo.finite(), hi.finite()) {
                (Some(l), Some(h)) => l > h,
                _ => false,
            })
    }
}

fn project(x: &DVector<f64>, lo: &[f64], hi: &[f64]) -> DVector<f64> {
    DVector::from_fn(x.len(), |i, _| x[i].clamp(lo[i], hi[i]))
}

/// Largest eigenvalue estimate by power iteration (deterministic start).
fn lambda_max(p: &DMatrix<f64>) -> f64 {
    let n = p.nrows();
    if n == 0 {
        return 0.0;
    }
    let diag_max = (0..n).map(|i| p[(i, i)].abs()).fold(0.0_f64, f64::max);
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..200 {
        let w = p * &v;
        let norm = w.norm();
        if norm <= f64::MIN_POSITIVE {
            break;
        }
        let next = norm;
        v = w / norm;
        if (next - lambda).abs() <= 1e-12 * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    // for PSD matrices the largest diagonal entry is a lower bound
    lambda.max(diag_max)
}

/// Solves the box QP to the given projected-gradient tolerance.
///
/// `Optimal` means `‖x − Π(x − ∇f(x))‖∞ ≤ tol`. An empty box reports
/// `Infeasible`; hitting the iteration cap reports `MaxIter` with the best
/// iterate seen.
pub fn solve_box_qp(p: &BoxQp, tol: f64) -> SolveReport {
    let n = p.dim();
    if p.is_empty() {
        return SolveReport {
            solution: DVector::zeros(n),
            objective: f64::NAN,
            kkt_residual: f64::INFINITY,
            iterations: 0,
            status: SolveStatus::Infeasible,
            tolerance: tol,
        };
    }
    let lo: Vec<f64> = p.lower.iter().map(Bound::as_f64).collect();
    let hi: Vec<f64> = p.upper.iter().map(Bound::as_f64).collect();

    let lip = (2.0 * lambda_max(&p.quad)).max(1e-12);
    let step = 0.98 / lip;

    let mut x = project(&DVector::zeros(n), &lo, &hi);
    let mut y = x.clone();
    let mut fx = p.objective(&x);
    let mut t = 1.0_f64;
    let mut best = (fx, x.clone());
    let mut pg_norm = f64::INFINITY;

    for iter in 1..=MAX_ITER {
        let gy = p.gradient(&y);
        let mut z = project(&(&y - step * &gy), &lo, &hi);
        let mut fz = p.objective(&z);
        if fz > fx {
            // monotone restart: drop momentum, re-step from the last iterate
            t = 1.0;
            let gx = p.gradient(&x);
            z = project(&(&x - step * &gx), &lo, &hi);
            fz = p.objective(&z);
        }
        let g = p.gradient(&z);
        pg_norm = (&z - project(&(&z - &g), &lo, &hi)).amax();
        if fz < best.0 {
            best = (fz, z.clone());
        }
        if pg_norm <= tol {
            return SolveReport {
                solution: z,
                objective: fz,
                kkt_residual: pg_norm,
                iterations: iter,
                status: SolveStatus::Optimal,
                tolerance: tol,
            };
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &z + ((t - 1.0) / t_next) * (&z - &x);
        x = z;
        fx = fz;
        t = t_next;
    }

    SolveReport {
        solution: best.1,
        objective: best.0,
        kkt_residual: pg_norm,
        iterations: MAX_ITER,
        status: SolveStatus::MaxIter,
        tolerance: tol,
    }
}
