//! Compressed sparse row matrices and the direct solver.
//!
//! Factorization is delegated to faer's sparse LU with partial pivoting. A
//! Hager-Higham estimate of the 1-norm condition number flags systems that
//! are singular to working precision.

use std::io::Write;

use faer::prelude::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use faer::{Col, Mat, Side};

use crate::error::{Error, Result};

/// Condition estimates above this are reported as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

/// Relative residual accepted from a direct solve.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate entries in the order they were pushed, so the result
    /// does not depend on the sort algorithm.
    pub fn from_triplets(n: usize, mut entries: Vec<(usize, usize, f64)>) -> CsrMatrix {
        entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(entries.len() / 4);
        let mut values: Vec<f64> = Vec::with_capacity(entries.len() / 4);
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n, row_ptr, col_idx, values }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub(crate) fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }

    pub(crate) fn col_at(&self, k: usize) -> usize {
        self.col_idx[k]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// x^T A y.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.n).map(|i| x[i] * self.row(i).map(|(j, v)| v * y[j]).sum::<f64>()).sum()
    }

    /// max |A_ij - A_ji|.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn norm1(&self) -> f64 {
        let mut col = vec![0.0; self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                col[j] += v.abs();
            }
        }
        col.into_iter().fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::<f64>::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Writes `row col value` lines (zero-based), one per stored entry.
    pub fn write_coordinate<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "% {} {} {}", self.n, self.n, self.nnz())?;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                writeln!(out, "{i} {j} {v:?}")?;
            }
        }
        Ok(())
    }

    /// CSC view of the transpose, which equals the matrix when it is
    /// symmetric.
    fn to_faer_transpose(&self) -> SparseColMat<usize, f64> {
        let symbolic = SymbolicSparseColMat::new_checked(
            self.n,
            self.n,
            self.row_ptr.clone(),
            None,
            self.col_idx.clone(),
        );
        SparseColMat::new(symbolic, self.values.clone())
    }
}

/// Sparse LU factorization of a symmetric matrix.
pub struct DirectSolver {
    lu: Lu<usize, f64>,
    n: usize,
    norm1: f64,
}

impl DirectSolver {
    pub fn factor(a: &CsrMatrix) -> Result<DirectSolver> {
        let lu = a
            .to_faer_transpose()
            .sp_lu()
            .map_err(|e| match e {
                faer::sparse::linalg::LuError::SymbolicSingular { .. } => Error::SingularSystem(f64::INFINITY),
                other => Error::Solver(format!("{other:?}")),
            })?;
        Ok(DirectSolver { lu, n: a.dim(), norm1: a.norm1() })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Col::<f64>::from_fn(self.n, |i| b[i]);
        let x = self.lu.solve(&rhs);
        (0..self.n).map(|i| x[i]).collect()
    }

    /// Hager-Higham estimate of cond_1(A) for symmetric A.
    pub fn condition_estimate(&self) -> f64 {
        let n = self.n;
        if n == 0 {
            return 1.0;
        }
        let norm1 = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0f64;
        for _ in 0..5 {
            let y = self.solve(&x);
            if y.iter().any(|v| !v.is_finite()) {
                return f64::INFINITY;
            }
            est = est.max(norm1(&y));
            let sign: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
            let z = self.solve(&sign);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= ztx {
                break;
            }
            x = vec![0.0; n];
            x[j] = 1.0;
        }
        let alt: Vec<f64> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                s * (1.0 + i as f64 / (n.max(2) - 1) as f64)
            })
            .collect();
        let y = self.solve(&alt);
        if y.iter().any(|v| !v.is_finite()) {
            return f64::INFINITY;
        }
        est = est.max(2.0 * norm1(&y) / (3.0 * n as f64));
        est * self.norm1
    }
}

/// Factors, rejects numerically singular systems, solves with one step of
/// iterative refinement and checks the relative residual.
pub fn solve_checked(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let solver = DirectSolver::factor(a)?;
    let cond = solver.condition_estimate();
    if !(cond < SINGULAR_CONDITION) {
        return Err(Error::SingularSystem(cond));
    }
    let mut x = solver.solve(b);
    let r: Vec<f64> = a.matvec(&x).iter().zip(b).map(|(ax, bi)| bi - ax).collect();
    let dx = solver.solve(&r);
    for (xi, d) in x.iter_mut().zip(&dx) {
        *xi += d;
    }
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let res = a.matvec(&x).iter().zip(b).map(|(ax, bi)| (bi - ax).powi(2)).sum::<f64>().sqrt();
    if bnorm > 0.0 && res / bnorm > SOLVE_TOLERANCE {
        return Err(Error::Solver(format!("relative residual {:e} after refinement", res / bnorm)));
    }
    Ok(x)
}

/// Counts of (negative, zero, positive) eigenvalues of a small symmetric
/// matrix, with `tol` relative to the largest magnitude.
pub fn dense_inertia(a: &CsrMatrix, tol: f64) -> Result<(usize, usize, usize)> {
    let eig = a
        .to_dense()
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen { iterations: 0, reason: format!("{e:?}") })?;
    let scale = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut inertia = (0, 0, 0);
    for v in eig {
        if v.abs() <= tol * scale {
            inertia.1 += 1;
        } else if v < 0.0 {
            inertia.0 += 1;
        } else {
            inertia.2 += 1;
        }
    }
    Ok(inertia)
}
