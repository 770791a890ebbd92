//! Compressed-row sparse matrices and the two SPD solvers used for the
//! chemoattractant system: a skyline (envelope) Cholesky factorization and a
//! Jacobi-preconditioned conjugate gradient.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Row-compressed sparse matrix. Column indices are strictly increasing
/// within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl CsrMatrix {
    /// Zero matrix with the given pattern. `rows[i]` lists the columns of
    /// row `i`; duplicates are merged.
    pub fn from_pattern(n_cols: usize, rows: &[Vec<usize>], symmetric: bool) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in rows {
            let mut cols = row.clone();
            cols.sort_unstable();
            cols.dedup();
            debug_assert!(cols.last().is_none_or(|&c| c < n_cols));
            col_idx.extend_from_slice(&cols);
            row_ptr.push(col_idx.len());
        }
        let values = vec![0.0; col_idx.len()];
        CsrMatrix { n_rows: rows.len(), n_cols, row_ptr, col_idx, values, symmetric }
    }

    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates
    /// in input order.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
        symmetric: bool,
    ) -> Self {
        let mut rows = vec![Vec::new(); n_rows];
        for &(i, j, _) in triplets {
            rows[i].push(j);
        }
        let mut m = CsrMatrix::from_pattern(n_cols, &rows, symmetric);
        for &(i, j, v) in triplets {
            let k = m.position(i, j).expect("entry is in the pattern");
            m.values[k] += v;
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        let rows: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        let mut m = CsrMatrix::from_pattern(n, &rows, true);
        m.values.fill(1.0);
        m
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_symmetric_flagged(&self) -> bool {
        self.symmetric
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Columns and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[range.clone()], &self.values[range])
    }

    /// Storage index of entry `(i, j)`, if it is in the pattern.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        self.col_idx[start..self.row_ptr[i + 1]].binary_search(&j).ok().map(|k| start + k)
    }

    /// Entry `(i, j)`; zero outside the pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.row(i).1.iter().sum()).collect()
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &a)| a * x[j]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// Copy of the matrix with `d` added to its diagonal. Every diagonal
    /// entry must already be in the pattern.
    pub fn with_added_diagonal(&self, d: &[f64]) -> Self {
        assert_eq!(d.len(), self.n_rows);
        let mut m = self.clone();
        for (i, &di) in d.iter().enumerate() {
            let k = m.position(i, i).expect("diagonal entry is in the pattern");
            m.values[k] += di;
        }
        m
    }

    /// Checks `A[i][j] == A[j][i]` to `tol` over the stored entries,
    /// including the pattern itself.
    pub fn audit_symmetry(&self, tol: f64) -> bool {
        self.n_rows == self.n_cols
            && (0..self.n_rows).all(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).all(|(&j, &v)| match self.position(j, i) {
                    Some(k) => (self.values[k] - v).abs() <= tol,
                    None => v.abs() <= tol,
                })
            })
    }

    /// Stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (i, j, v) in self.triplets() {
            d[i][j] = v;
        }
        d
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Relative residual `|b - A x| / |b|` (absolute when `b = 0`).
pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let nb = norm2(b);
    if nb > 0.0 {
        norm2(&r) / nb
    } else {
        norm2(&r)
    }
}

/// Cholesky factor `L` of an SPD matrix stored by rows over its envelope:
/// row `i` holds `L[i][first[i]..=i]`.
#[derive(Debug, Clone)]
pub struct SkylineCholesky {
    first: Vec<usize>,
    row_start: Vec<usize>,
    data: Vec<f64>,
}

impl SkylineCholesky {
    /// Factors the lower triangle of `a`. Fails at the first non-positive
    /// pivot.
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n_rows();
        assert_eq!(n, a.n_cols());
        let mut first = Vec::with_capacity(n);
        let mut row_start = Vec::with_capacity(n + 1);
        row_start.push(0);
        for i in 0..n {
            let f = a.row(i).0.first().copied().unwrap_or(i).min(i);
            first.push(f);
            row_start.push(row_start[i] + (i - f + 1));
        }
        let mut data = vec![0.0; row_start[n]];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j <= i {
                    data[row_start[i] + j - first[i]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut s = data[row_start[i] + j - fi];
                for k in k0..j {
                    s -= data[row_start[i] + k - fi] * data[row_start[j] + k - fj];
                }
                if j < i {
                    data[row_start[i] + j - fi] = s / data[row_start[j] + j - fj];
                } else {
                    if !(s > 0.0) {
                        return Err(Error::FactorizationBreakdown { row: i });
                    }
                    data[row_start[i] + i - fi] = libm::sqrt(s);
                }
            }
        }
        Ok(SkylineCholesky { first, row_start, data })
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    /// Solves `L L^T x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.dim();
        assert_eq!(x.len(), n);
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.row_start[i]..self.row_start[i + 1]];
            let mut s = x[i];
            for k in fi..i {
                s -= row[k - fi] * x[k];
            }
            x[i] = s / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.row_start[i]..self.row_start[i + 1]];
            x[i] /= row[i - fi];
            let xi = x[i];
            for k in fi..i {
                x[k] -= row[k - fi] * xi;
            }
        }
    }
}

/// Outcome of a converged conjugate-gradient solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradient for SPD `a`, starting from the
/// contents of `x`. Stops when the recursively updated residual satisfies
/// `|r| <= rel_tol * |b|`.
pub fn conjugate_gradient(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    let n = a.n_rows();
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|&d| 1.0 / d).collect();
    if inv_diag.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(Error::FactorizationBreakdown {
            row: inv_diag.iter().position(|d| !(d.is_finite() && *d > 0.0)).unwrap_or(0),
        });
    }
    let nb = norm2(b);
    if nb == 0.0 {
        x.fill(0.0);
        return Ok(CgOutcome { iterations: 0, relative_residual: 0.0 });
    }
    let mut r = a.mul_vec(x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 0..=max_iter {
        let res = norm2(&r) / nb;
        if res <= rel_tol {
            return Ok(CgOutcome { iterations: it, relative_residual: res });
        }
        if it == max_iter {
            return Err(Error::SolverNotConverged { iterations: it, residual: res });
        }
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolverNotConverged { iterations: it, residual: res });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn laplacian_1d(n: usize, shift: f64) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + shift));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t, true)
    }

    #[test]
    fn triplets_merge_duplicates_and_sort_columns() {
        let m = CsrMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 0.5)], false);
        assert_eq!(m.row(0).0, &[0, 2]);
        assert_eq!(m.get(0, 2), 1.5);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn mat_vec_and_diagonal_shift() {
        let m = laplacian_1d(4, 0.0);
        assert_eq!(m.mul_vec(&[1.0; 4]), vec![1.0, 0.0, 0.0, 1.0]);
        let s = m.with_added_diagonal(&[1.0; 4]);
        assert_eq!(s.diagonal(), vec![3.0; 4]);
        assert!(s.audit_symmetry(0.0));
    }

    #[test]
    fn symmetry_audit_catches_asymmetry() {
        let m = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0 + 1e-9)], true);
        assert!(!m.audit_symmetry(1e-12));
        assert!(m.audit_symmetry(1e-8));
        let lone = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0)], true);
        assert!(!lone.audit_symmetry(1e-12));
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)], true);
        assert_eq!(SkylineCholesky::factor(&m).unwrap_err(), Error::FactorizationBreakdown { row: 1 });
    }

    #[test]
    fn cholesky_matches_known_solution() {
        let m = laplacian_1d(5, 0.0);
        let x_true = [1.0, -2.0, 3.0, 0.5, 4.0];
        let mut x = m.mul_vec(&x_true);
        SkylineCholesky::factor(&m).unwrap().solve_in_place(&mut x);
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn cg_zero_rhs_and_iteration_cap() {
        let m = laplacian_1d(50, 0.0);
        let mut x = vec![1.0; 50];
        let out = conjugate_gradient(&m, &[0.0; 50], &mut x, 1e-10, 10).unwrap();
        assert_eq!(out.iterations, 0);
        assert!(x.iter().all(|&v| v == 0.0));
        let b: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let mut x = vec![0.0; 50];
        assert!(matches!(
            conjugate_gradient(&m, &b, &mut x, 1e-14, 3),
            Err(Error::SolverNotConverged { iterations: 3, .. })
        ));
    }

    proptest! {
        #[test]
        fn cholesky_and_cg_agree(
            n in 2usize..30,
            shift in 0.01f64..5.0,
            b in proptest::collection::vec(-10.0f64..10.0, 30),
        ) {
            let m = laplacian_1d(n, shift);
            let b = &b[..n];
            let mut x_direct = b.to_vec();
            SkylineCholesky::factor(&m).unwrap().solve_in_place(&mut x_direct);
            prop_assert!(relative_residual(&m, &x_direct, b) < 1e-12);
            let mut x_cg = vec![0.0; n];
            let out = conjugate_gradient(&m, b, &mut x_cg, 1e-12, 10 * n).unwrap();
            prop_assert!(out.relative_residual <= 1e-12);
            let scale = norm2(&x_direct).max(1.0);
            for (a, c) in x_direct.iter().zip(&x_cg) {
                prop_assert!((a - c).abs() <= 1e-9 * scale);
            }
        }
    }
}
