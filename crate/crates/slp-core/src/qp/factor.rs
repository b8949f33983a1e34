//! Symmetric matrix assembly and Cholesky solves for the iterative solvers.
//!
//! The block problems have an arrow sparsity pattern (independent per-slot
//! variable groups coupled through a shared tail), which block elimination
//! turns into many small factorizations plus one tail Schur complement. The
//! dense path covers everything else.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::FactorLayout;

/// Symmetric matrix under assembly, stored per the chosen layout.
#[derive(Debug, Clone)]
pub(crate) enum SymMatrix {
    Dense(DMatrix<f64>),
    Arrow {
        block_len: usize,
        body: usize,
        diag: Vec<DMatrix<f64>>,
        cross: Vec<DMatrix<f64>>,
        tail: DMatrix<f64>,
    },
}

impl SymMatrix {
    pub fn zeros(layout: FactorLayout, n: usize) -> Self {
        match layout {
            FactorLayout::Dense => SymMatrix::Dense(DMatrix::zeros(n, n)),
            FactorLayout::BlockArrow { block_len, blocks, tail_len } => {
                debug_assert_eq!(block_len * blocks + tail_len, n);
                SymMatrix::Arrow {
                    block_len,
                    body: block_len * blocks,
                    diag: vec![DMatrix::zeros(block_len, block_len); blocks],
                    cross: vec![DMatrix::zeros(block_len, tail_len); blocks],
                    tail: DMatrix::zeros(tail_len, tail_len),
                }
            }
        }
    }

    pub fn reset(&mut self) {
        match self {
            SymMatrix::Dense(m) => m.fill(0.0),
            SymMatrix::Arrow { diag, cross, tail, .. } => {
                diag.iter_mut().for_each(|m| m.fill(0.0));
                cross.iter_mut().for_each(|m| m.fill(0.0));
                tail.fill(0.0);
            }
        }
    }

    fn add_entry(&mut self, i: usize, j: usize, v: f64) {
        match self {
            SymMatrix::Dense(m) => m[(i, j)] += v,
            SymMatrix::Arrow { block_len, body, diag, cross, tail } => {
                let body = *body;
                if i < body && j < body {
                    let b = i / *block_len;
                    debug_assert_eq!(b, j / *block_len);
                    diag[b][(i % *block_len, j % *block_len)] += v;
                } else if i < body {
                    cross[i / *block_len][(i % *block_len, j - body)] += v;
                } else if j < body {
                    // mirrored by the symmetric partner entry
                } else {
                    tail[(i - body, j - body)] += v;
                }
            }
        }
    }

    /// `self += v·I`.
    pub fn add_diag(&mut self, v: f64) {
        match self {
            SymMatrix::Dense(m) => {
                for i in 0..m.nrows() {
                    m[(i, i)] += v;
                }
            }
            SymMatrix::Arrow { diag, tail, .. } => {
                for d in diag.iter_mut() {
                    for i in 0..d.nrows() {
                        d[(i, i)] += v;
                    }
                }
                for i in 0..tail.nrows() {
                    tail[(i, i)] += v;
                }
            }
        }
    }

    /// `self += w · scatter(m)` for a small symmetric block on `support`.
    pub fn add_sym_block(&mut self, support: &[usize], m: &DMatrix<f64>, w: f64) {
        for (li, &gi) in support.iter().enumerate() {
            for (lj, &gj) in support.iter().enumerate() {
                self.add_entry(gi, gj, w * m[(li, lj)]);
            }
        }
    }

    /// `self += w · a aᵀ` for a sparse vector `a`.
    pub fn add_rank1(&mut self, cols: &[usize], vals: &[f64], w: f64) {
        for (li, &gi) in cols.iter().enumerate() {
            for (lj, &gj) in cols.iter().enumerate() {
                self.add_entry(gi, gj, w * vals[li] * vals[lj]);
            }
        }
    }

    pub fn cholesky(&self) -> Option<SymFactor> {
        match self {
            SymMatrix::Dense(m) => Cholesky::new(m.clone()).map(SymFactor::Dense),
            SymMatrix::Arrow { block_len, body, diag, cross, tail } => {
                let mut l_blocks = Vec::with_capacity(diag.len());
                let mut w_blocks = Vec::with_capacity(diag.len());
                let mut schur = tail.clone();
                for (d, c) in diag.iter().zip(cross) {
                    let chol = Cholesky::new(d.clone())?;
                    let l = chol.l();
                    let w = l.solve_lower_triangular(c)?;
                    schur -= w.transpose() * &w;
                    l_blocks.push(l);
                    w_blocks.push(w);
                }
                let l_tail = Cholesky::new(schur)?;
                Some(SymFactor::Arrow {
                    block_len: *block_len,
                    body: *body,
                    l_blocks,
                    w_blocks,
                    l_tail,
                })
            }
        }
    }

    /// Cholesky with an escalating diagonal jitter fallback; returns the
    /// factor and the jitter that was needed.
    pub fn cholesky_with_jitter(&self, scale: f64) -> Option<(SymFactor, f64)> {
        if let Some(f) = self.cholesky() {
            return Some((f, 0.0));
        }
        let mut jitter = 1e-12 * scale.max(1.0);
        let mut work = self.clone();
        for _ in 0..20 {
            work.add_diag(jitter);
            if let Some(f) = work.cholesky() {
                return Some((f, jitter));
            }
            jitter *= 100.0;
        }
        None
    }
}

/// A factored symmetric positive definite matrix.
pub(crate) enum SymFactor {
    Dense(Cholesky<f64, Dyn>),
    Arrow {
        block_len: usize,
        body: usize,
        l_blocks: Vec<DMatrix<f64>>,
        w_blocks: Vec<DMatrix<f64>>,
        l_tail: Cholesky<f64, Dyn>,
    },
}

impl SymFactor {
    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        match self {
            SymFactor::Dense(chol) => chol.solve(rhs),
            SymFactor::Arrow { block_len, body, l_blocks, w_blocks, l_tail } => {
                let bl = *block_len;
                let tail_len = rhs.len() - body;
                // forward: y_b = L_b^{-1} rhs_b, y_t = L_t^{-1}(rhs_t − Σ Wᵀy_b)
                let mut y_blocks = Vec::with_capacity(l_blocks.len());
                let mut tail_rhs = rhs.rows(*body, tail_len).clone_owned();
                for (b, (l, w)) in l_blocks.iter().zip(w_blocks).enumerate() {
                    let r = rhs.rows(b * bl, bl).clone_owned();
                    let y = l.solve_lower_triangular(&r).expect("nonsingular block");
                    tail_rhs -= w.transpose() * &y;
                    y_blocks.push(y);
                }
                let l_t = l_tail.l_dirty();
                let y_tail = l_t
                    .solve_lower_triangular(&tail_rhs)
                    .expect("nonsingular tail");
                // backward: x_t = L_tᵀ^{-1} y_t, x_b = L_bᵀ^{-1}(y_b − W x_t)
                let x_tail = l_t
                    .tr_solve_lower_triangular(&y_tail)
                    .expect("nonsingular tail");
                let mut x = DVector::zeros(rhs.len());
                x.rows_mut(*body, tail_len).copy_from(&x_tail);
                for (b, (l, w)) in l_blocks.iter().zip(w_blocks).enumerate() {
                    let r = &y_blocks[b] - w * &x_tail;
                    let xb = l.tr_solve_lower_triangular(&r).expect("nonsingular block");
                    x.rows_mut(b * bl, bl).copy_from(&xb);
                }
                x
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        &a * a.transpose() + DMatrix::identity(n, n)
    }

    #[test]
    fn arrow_solve_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let layout = FactorLayout::BlockArrow { block_len: 3, blocks: 4, tail_len: 2 };
        let n = 14;
        let mut arrow = SymMatrix::zeros(layout, n);
        let mut dense = SymMatrix::zeros(FactorLayout::Dense, n);

        // random blocks, crosses and tail assembled through the shared API
        for b in 0..4 {
            let support: Vec<usize> = (b * 3..b * 3 + 3).chain(12..14).collect();
            let m = random_spd(5, &mut rng);
            arrow.add_sym_block(&support, &m, 1.0);
            dense.add_sym_block(&support, &m, 1.0);
        }
        let row_cols = vec![1usize, 13];
        let row_vals = vec![0.7, -0.2];
        arrow.add_rank1(&row_cols, &row_vals, 2.0);
        dense.add_rank1(&row_cols, &row_vals, 2.0);
        arrow.add_diag(0.5);
        dense.add_diag(0.5);

        let fa = arrow.cholesky().unwrap();
        let fd = dense.cholesky().unwrap();
        let rhs = DVector::from_fn(n, |i, _| (i as f64 + 1.0).sin());
        let xa = fa.solve(&rhs);
        let xd = fd.solve(&rhs);
        assert!((&xa - &xd).amax() < 1e-10, "{:?}", (&xa - &xd).amax());
    }

    #[test]
    fn jitter_recovers_singular_matrix() {
        let m = SymMatrix::Dense(DMatrix::zeros(3, 3));
        let (f, jitter) = m.cholesky_with_jitter(1.0).unwrap();
        assert!(jitter > 0.0);
        let x = f.solve(&DVector::from_element(3, 1.0));
        assert!(x.iter().all(|v| v.is_finite()));
    }
}
