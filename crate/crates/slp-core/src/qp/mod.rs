//! Self-contained dense convex solvers in a real-valued formulation.
//!
//! Three problem families cover everything the precoders need: box QP
//! (accelerated projected gradient), linear-inequality QP (operator
//! splitting), and min-max quadratic (log-barrier on the epigraph).
//! Complex quadratic objectives enter through [`lift_complex_quadratic`].
//!
//! Objectives use the convention `f(x) = xᵀPx + qᵀx (+ r)` throughout.

mod box_qp;
mod factor;
mod ineq;
mod minmax;

pub use box_qp::{solve_box_qp, BoxQp};
pub use ineq::{solve_ineq_qp, IneqQp};
pub use minmax::{solve_minmax_qp, MinMaxQp};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

/// Termination state of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

/// Solution and diagnostics of one solver call.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: DVector<f64>,
    pub objective: f64,
    /// Max of stationarity, primal feasibility and complementarity residuals.
    pub kkt_residual: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    /// Residual threshold `Optimal` was declared against.
    pub tolerance: f64,
}

impl SolveReport {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

const SYM_RESIDUAL_TOL: f64 = 1e-10;
const PSD_EIG_TOL: f64 = 1e-8;

/// Checks the symmetric-part residual and PSD property of `m`
/// (eigenvalues down to `-1e-8·‖m‖` are accepted and clipped to zero),
/// returning the symmetrized, clipped matrix.
pub(crate) fn validate_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidInput(format!(
            "quadratic matrix must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.amax().max(1.0);
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if worst > SYM_RESIDUAL_TOL * scale {
        return Err(Error::InvalidInput(format!(
            "quadratic matrix is not symmetric (residual {worst:.3e})"
        )));
    }
    let sym = 0.5 * (m + m.transpose());
    if sym.nrows() == 0 {
        return Ok(sym);
    }
    let eig = sym.clone().symmetric_eigen();
    let max_eig = eig.eigenvalues.amax();
    let min_eig = eig.eigenvalues.min();
    if min_eig < -PSD_EIG_TOL * max_eig.max(1.0) {
        return Err(Error::InvalidInput(format!(
            "quadratic matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})"
        )));
    }
    if min_eig < 0.0 {
        let clipped = eig.eigenvalues.map(|v| v.max(0.0));
        let vecs = eig.eigenvectors;
        Ok(&vecs * DMatrix::from_diagonal(&clipped) * vecs.transpose())
    } else {
        Ok(sym)
    }
}

/// A quadratic form `x ↦ xᵀQx + lᵀx + c` supported on a subset of the
/// problem variables. Objectives are sums of such forms, which keeps the
/// block problems (whose slots touch disjoint variable groups plus a shared
/// tail) assemblable without materializing an `n×n` Hessian.
#[derive(Debug, Clone)]
pub struct QuadForm {
    support: Vec<usize>,
    quad: DMatrix<f64>,
    lin: DVector<f64>,
    constant: f64,
}

impl QuadForm {
    pub fn new(
        support: Vec<usize>,
        quad: DMatrix<f64>,
        lin: DVector<f64>,
        constant: f64,
    ) -> Result<Self> {
        let s = support.len();
        if quad.nrows() != s || quad.ncols() != s || lin.len() != s {
            return Err(Error::InvalidInput(format!(
                "quadratic form dimensions disagree: support {s}, quad {}x{}, lin {}",
                quad.nrows(),
                quad.ncols(),
                lin.len()
            )));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(
                "quadratic form support must be strictly increasing".into(),
            ));
        }
        let quad = validate_psd(&quad)?;
        Ok(Self { support, quad, lin, constant })
    }

    /// Form over all of `0..n`.
    pub fn dense(quad: DMatrix<f64>, lin: DVector<f64>, constant: f64) -> Result<Self> {
        let n = quad.nrows();
        Self::new((0..n).collect(), quad, lin, constant)
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn quad(&self) -> &DMatrix<f64> {
        &self.quad
    }

    pub fn lin(&self) -> &DVector<f64> {
        &self.lin
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn max_index(&self) -> Option<usize> {
        self.support.last().copied()
    }

    fn gather(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.support.len(), self.support.iter().map(|&i| x[i]))
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        let xs = self.gather(x);
        (xs.transpose() * &self.quad * &xs)[(0, 0)] + self.lin.dot(&xs) + self.constant
    }

    /// Adds `∇f(x) = 2Qx + l` (scattered) into `out`.
    pub fn add_gradient(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        let xs = self.gather(x);
        let g = 2.0 * &self.quad * &xs + &self.lin;
        for (local, &global) in self.support.iter().enumerate() {
            out[global] += g[local];
        }
    }

    /// Gradient restricted to the support (same order as `support()`).
    pub(crate) fn local_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let xs = self.gather(x);
        2.0 * &self.quad * &xs + &self.lin
    }
}

/// One linear inequality `Σ coef·x[col] ≤ rhs`, stored sparsely.
#[derive(Debug, Clone)]
pub struct LinearConstraint {
    cols: Vec<usize>,
    coefs: Vec<f64>,
    rhs: f64,
}

impl LinearConstraint {
    pub fn new(cols: Vec<usize>, coefs: Vec<f64>, rhs: f64) -> Result<Self> {
        if cols.len() != coefs.len() {
            return Err(Error::InvalidInput(
                "constraint column and coefficient counts disagree".into(),
            ));
        }
        let mut seen = cols.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput(
                "constraint row has duplicate column indices".into(),
            ));
        }
        if coefs.iter().any(|v| !v.is_finite()) || !rhs.is_finite() {
            return Err(Error::InvalidInput("constraint row has non-finite entries".into()));
        }
        Ok(Self { cols, coefs, rhs })
    }

    /// Row from a dense coefficient slice, dropping zeros.
    pub fn from_dense(row: &[f64], rhs: f64) -> Result<Self> {
        let mut cols = Vec::new();
        let mut coefs = Vec::new();
        for (j, &v) in row.iter().enumerate() {
            if v != 0.0 {
                cols.push(j);
                coefs.push(v);
            }
        }
        Self::new(cols, coefs, rhs)
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn coefs(&self) -> &[f64] {
        &self.coefs
    }

    pub fn rhs(&self) -> f64 {
        self.rhs
    }

    pub fn max_index(&self) -> Option<usize> {
        self.cols.iter().max().copied()
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        self.cols
            .iter()
            .zip(&self.coefs)
            .map(|(&c, &v)| v * x[c])
            .sum()
    }

    /// Adds `w·a` into `out` (scattered).
    pub fn add_scaled(&self, w: f64, out: &mut DVector<f64>) {
        for (&c, &v) in self.cols.iter().zip(&self.coefs) {
            out[c] += w * v;
        }
    }
}

/// Elimination structure hint for the cached factorizations.
///
/// The block problems couple per-slot variable groups only through a shared
/// trailing tail (the gain vector), which block-arrow elimination exploits;
/// everything else goes through the dense path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorLayout {
    Dense,
    BlockArrow {
        block_len: usize,
        blocks: usize,
        tail_len: usize,
    },
}

impl FactorLayout {
    pub(crate) fn dims_fit(&self, n: usize) -> bool {
        match *self {
            FactorLayout::Dense => true,
            FactorLayout::BlockArrow { block_len, blocks, tail_len } => {
                block_len * blocks + tail_len == n && block_len > 0
            }
        }
    }

    /// Whether an index set touches at most one block (plus the tail).
    pub(crate) fn indices_fit<'a>(&self, indices: impl Iterator<Item = &'a usize>) -> bool {
        match *self {
            FactorLayout::Dense => true,
            FactorLayout::BlockArrow { block_len, blocks, .. } => {
                let body = block_len * blocks;
                let mut block = None;
                for &i in indices {
                    if i < body {
                        let b = i / block_len;
                        match block {
                            None => block = Some(b),
                            Some(prev) if prev != b => return false,
                            _ => {}
                        }
                    }
                }
                true
            }
        }
    }

    pub(crate) fn fits(
        &self,
        n: usize,
        forms: &[QuadForm],
        rows: &[LinearConstraint],
    ) -> bool {
        self.dims_fit(n)
            && forms.iter().all(|f| self.indices_fit(f.support().iter()))
            && rows.iter().all(|r| self.indices_fit(r.cols().iter()))
    }

    /// Same layout with `extra` more tail variables.
    pub(crate) fn grow_tail(&self, extra: usize) -> FactorLayout {
        match *self {
            FactorLayout::Dense => FactorLayout::Dense,
            FactorLayout::BlockArrow { block_len, blocks, tail_len } => FactorLayout::BlockArrow {
                block_len,
                blocks,
                tail_len: tail_len + extra,
            },
        }
    }
}

const HERMITIAN_TOL: f64 = 1e-8;

/// Lifts the complex quadratic `u ↦ (m + u)ᴴ R (m + u)` (with `R` Hermitian
/// PSD and `m` the shift) to a real quadratic in `v = [Re u; Im u]`:
/// returns `(P, q, r)` with value `vᵀPv + qᵀv + r` equal to the complex form
/// for all `u`.
pub fn lift_complex_quadratic(
    r: &DMatrix<Complex64>,
    shift: &DVector<Complex64>,
) -> Result<(DMatrix<f64>, DVector<f64>, f64)> {
    let p = lift_hermitian(r)?;
    let (q, r0) = lift_shift_terms(r, shift)?;
    Ok((p, q, r0))
}

/// Real lifting `[[Re R, −Im R], [Im R, Re R]]` of a Hermitian matrix.
pub(crate) fn lift_hermitian(r: &DMatrix<Complex64>) -> Result<DMatrix<f64>> {
    let k = r.nrows();
    if r.ncols() != k {
        return Err(Error::InvalidInput("lifting needs a square matrix".into()));
    }
    let mut scale: f64 = 1.0;
    let mut worst: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            scale = scale.max(r[(i, j)].norm());
            worst = worst.max((r[(i, j)] - r[(j, i)].conj()).norm());
        }
    }
    if worst > HERMITIAN_TOL * scale {
        return Err(Error::InvalidInput(format!(
            "matrix is not Hermitian (residual {worst:.3e})"
        )));
    }
    let mut p = DMatrix::<f64>::zeros(2 * k, 2 * k);
    for i in 0..k {
        for j in 0..k {
            // scrub round-off: use the Hermitian average of (i,j) and (j,i)
            let z = 0.5 * (r[(i, j)] + r[(j, i)].conj());
            p[(i, j)] = z.re;
            p[(k + i, k + j)] = z.re;
            p[(i, k + j)] = -z.im;
            p[(k + i, j)] = z.im;
        }
    }
    Ok(p)
}

/// Linear and constant terms of the lifted objective for a given shift.
pub(crate) fn lift_shift_terms(
    r: &DMatrix<Complex64>,
    shift: &DVector<Complex64>,
) -> Result<(DVector<f64>, f64)> {
    let k = r.nrows();
    if shift.len() != k {
        return Err(Error::InvalidInput(format!(
            "shift length {} disagrees with matrix dimension {k}",
            shift.len()
        )));
    }
    let g = r * shift;
    let mut q = DVector::<f64>::zeros(2 * k);
    for i in 0..k {
        q[i] = 2.0 * g[i].re;
        q[k + i] = 2.0 * g[i].im;
    }
    let r0: Complex64 = shift
        .iter()
        .zip(g.iter())
        .map(|(s, gi)| s.conj() * gi)
        .sum();
    Ok((q, r0.re))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian_psd(k: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
        let a = DMatrix::from_fn(k, k, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        &a * a.adjoint()
    }

    #[test]
    fn lift_identity_zero_shift() {
        let k = 3;
        let r = DMatrix::<Complex64>::identity(k, k);
        let shift = DVector::<Complex64>::zeros(k);
        let (p, q, r0) = lift_complex_quadratic(&r, &shift).unwrap();
        assert_eq!(p, DMatrix::<f64>::identity(2 * k, 2 * k));
        assert!(q.amax() == 0.0);
        assert_eq!(r0, 0.0);
    }

    #[test]
    fn lift_real_diagonal_is_block_diagonal() {
        let r = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(2.0, 0.0),
            Complex64::new(0.5, 0.0),
        ]));
        let (p, _, _) = lift_complex_quadratic(&r, &DVector::zeros(2)).unwrap();
        for i in 0..2 {
            assert_eq!(p[(i, i)], r[(i, i)].re);
            assert_eq!(p[(2 + i, 2 + i)], r[(i, i)].re);
            assert_eq!(p[(i, 2 + i)], 0.0);
            assert_eq!(p[(2 + i, i)], 0.0);
        }
    }

    #[test]
    fn lift_matches_complex_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..25 {
            let k = rng.random_range(1..6);
            let r = random_hermitian_psd(k, &mut rng);
            let shift = DVector::from_fn(k, |_, _| {
                Complex64::new(rng.random::<f64>() * 4.0 - 2.0, rng.random::<f64>() * 4.0 - 2.0)
            });
            let u = DVector::from_fn(k, |_, _| {
                Complex64::new(rng.random::<f64>() * 4.0 - 2.0, rng.random::<f64>() * 4.0 - 2.0)
            });
            let (p, q, r0) = lift_complex_quadratic(&r, &shift).unwrap();
            let v = DVector::from_fn(2 * k, |i, _| if i < k { u[i].re } else { u[i - k].im });
            let lifted = (v.transpose() * &p * &v)[(0, 0)] + q.dot(&v) + r0;
            let w = &shift + &u;
            let complex = (w.adjoint() * &r * &w)[(0, 0)].re;
            assert!(
                (lifted - complex).abs() <= 1e-12 * complex.abs().max(1.0),
                "lifted {lifted} vs complex {complex}"
            );
        }
    }

    #[test]
    fn lift_rejects_non_hermitian() {
        let mut r = DMatrix::<Complex64>::identity(2, 2);
        r[(0, 1)] = Complex64::new(0.3, 0.1);
        r[(1, 0)] = Complex64::new(0.3, 0.1); // should be the conjugate
        assert!(lift_complex_quadratic(&r, &DVector::zeros(2)).is_err());
    }

    #[test]
    fn psd_validation() {
        let good = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        assert!(validate_psd(&good).is_ok());
        let asym = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, -0.5, 1.0]);
        assert!(validate_psd(&asym).is_err());
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(validate_psd(&indef).is_err());
        // slightly negative eigenvalues get clipped
        let eps = 1e-12;
        let near = DMatrix::from_row_slice(2, 2, &[eps, 0.0, 0.0, -eps]);
        let fixed = validate_psd(&near).unwrap();
        let eig = fixed.symmetric_eigen();
        assert!(eig.eigenvalues.min() >= 0.0);
    }

    #[test]
    fn quad_form_eval_and_gradient() {
        let f = QuadForm::new(
            vec![1, 3],
            DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]),
            DVector::from_vec(vec![1.0, -1.0]),
            0.5,
        )
        .unwrap();
        let x = DVector::from_vec(vec![9.0, 2.0, 9.0, 3.0]);
        // 2*4 + 9 + 2 - 3 + 0.5
        assert_eq!(f.eval(&x), 8.0 + 9.0 + 2.0 - 3.0 + 0.5);
        let mut g = DVector::zeros(4);
        f.add_gradient(&x, &mut g);
        assert_eq!(g, DVector::from_vec(vec![0.0, 9.0, 0.0, 5.0]));
    }

    #[test]
    fn layout_fit_checks() {
        let layout = FactorLayout::BlockArrow { block_len: 2, blocks: 2, tail_len: 1 };
        assert!(layout.dims_fit(5));
        assert!(!layout.dims_fit(6));
        assert!(layout.indices_fit([0usize, 1, 4].iter()));
        assert!(layout.indices_fit([2usize, 3, 4].iter()));
        assert!(!layout.indices_fit([1usize, 2].iter()));
    }

    #[test]
    fn constraint_row_validation() {
        assert!(LinearConstraint::new(vec![0, 0], vec![1.0, 2.0], 0.0).is_err());
        let r = LinearConstraint::from_dense(&[0.0, 2.0, 0.0, -1.0], 3.0).unwrap();
        assert_eq!(r.cols(), &[1, 3]);
        let x = DVector::from_vec(vec![9.0, 1.0, 9.0, 2.0]);
        assert_eq!(r.eval(&x), 0.0);
    }
}
