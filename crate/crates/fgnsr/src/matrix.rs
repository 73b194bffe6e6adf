//! Column-major dense matrices and the small set of numerical kernels the rest
//! of the crate is built on: column norms, Frobenius norm, a power-method
//! estimate of the squared spectral norm, and coordinate-descent NNLS.
//!
//! Columns are the unit of data everywhere (a data point / pixel is a column),
//! so storage is column-major and column views are contiguous slices.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Fixed seed for the power-method start vector, so the Lipschitz estimate is
/// reproducible run to run.
const POWER_START_SEED: u64 = 7919;

/// Relative objective decrease below which an NNLS sweep loop stops early.
const NNLS_EARLY_EXIT: f64 = 1e-10;

/// Default sweep count for [`nnls_cd`] callers that do not have a reason to
/// pick something else.
pub const NNLS_DEFAULT_SWEEPS: usize = 100;

/// Dense real matrix, column-major storage, every entry finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Build a matrix from column-major data, validating shape and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "entry ({}, {}) is {}",
                pos % rows,
                pos / rows,
                data[pos]
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "dimensions must be positive");
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Fill from a function of (row, column). The function must return finite values.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Column-major backing slice.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[j * self.rows + i] = value;
    }

    /// Contiguous view of column `j`.
    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Copy of row `i` (strided access).
    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self.get(i, j)).collect()
    }

    pub fn set_row(&mut self, i: usize, values: &[f64]) {
        assert_eq!(values.len(), self.cols, "row length mismatch");
        for (j, &v) in values.iter().enumerate() {
            self.set(i, j, v);
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        let n = self.rows.min(self.cols);
        (0..n).map(|i| self.get(i, i)).collect()
    }

    /// Columns of `self` at `indices`, in the given order.
    pub fn select_cols(&self, indices: &[usize]) -> DenseMatrix {
        assert!(!indices.is_empty(), "need at least one column");
        let mut out = Self::zeros(self.rows, indices.len());
        for (k, &j) in indices.iter().enumerate() {
            assert!(j < self.cols, "column index {j} out of range");
            out.col_mut(k).copy_from_slice(self.col(j));
        }
        out
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = Self::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    /// `self * other`. Zero entries of `other` are skipped, which pays off when
    /// the right factor is row-sparse.
    pub fn times(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Self::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let out_col = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for k in 0..self.cols {
                let factor = other.get(k, j);
                if factor != 0.0 {
                    let self_col = &self.data[k * self.rows..(k + 1) * self.rows];
                    for (o, &s) in out_col.iter_mut().zip(self_col) {
                        *o += factor * s;
                    }
                }
            }
        }
        out
    }

    /// `self^T * other` via contiguous column dot products.
    pub fn transpose_times(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.rows, other.rows, "row counts must agree");
        let mut out = Self::zeros(self.cols, other.cols);
        for j in 0..other.cols {
            let b = other.col(j);
            for k in 0..self.cols {
                out.set(k, j, dot(self.col(k), b));
            }
        }
        out
    }

    /// Gram matrix `self^T * self`, exploiting symmetry.
    pub fn transpose_times_self(&self) -> DenseMatrix {
        let mut out = Self::zeros(self.cols, self.cols);
        for j in 0..self.cols {
            for k in 0..=j {
                let v = dot(self.col(k), self.col(j));
                out.set(k, j, v);
                out.set(j, k, v);
            }
        }
        out
    }

    pub fn times_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "vector length must match column count");
        let mut out = vec![0.0; self.rows];
        for (j, &vj) in v.iter().enumerate() {
            if vj != 0.0 {
                for (o, &s) in out.iter_mut().zip(self.col(j)) {
                    *o += vj * s;
                }
            }
        }
        out
    }

    pub fn transpose_times_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows, "vector length must match row count");
        (0..self.cols).map(|j| dot(self.col(j), v)).collect()
    }

    /// Entrywise `self - other`.
    pub fn minus(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        DenseMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.data {
            *v *= factor;
        }
    }

    /// Frobenius norm `sqrt(sum of squared entries)`.
    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn col_l2_norm_sq(&self, j: usize) -> f64 {
        let c = self.col(j);
        dot(c, c)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Per-column l1 norms of a matrix; the weight vector that defines the
/// feasible polyhedron of the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnWeights {
    values: Vec<f64>,
}

impl ColumnWeights {
    /// Wrap a raw nonnegative weight vector (used when weights come from a file).
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::DimensionMismatch("empty weight vector".into()));
        }
        for (j, &w) in values.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::NonFinite(format!("weight {j} is {w}")));
            }
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, j: usize) -> f64 {
        self.values[j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Columns with zero weight need the degenerate projection rule.
    pub fn zero_columns(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &w)| w == 0.0)
            .map(|(j, _)| j)
            .collect()
    }
}

/// Column l1 norms `w_j = sum_i |M_ij|`.
pub fn col_l1_norms(m: &DenseMatrix) -> ColumnWeights {
    let values = (0..m.cols())
        .map(|j| m.col(j).iter().map(|v| v.abs()).sum())
        .collect();
    ColumnWeights { values }
}

/// Power-method estimate of `lambda_max(M^T M)`, i.e. the squared largest
/// singular value of `M`.
///
/// Iterates on `M^T M` from a seed-derived start vector until successive
/// Rayleigh quotients agree to `tol` relatively, or `max_power_iters` is hit.
/// The returned value is floored at the largest squared column norm, which is
/// a valid lower bound on the true value.
pub fn spectral_norm_sq(m: &DenseMatrix, tol: f64, max_power_iters: usize) -> Result<f64> {
    if m.is_zero() {
        return Err(Error::ZeroOperator);
    }
    let n = m.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_START_SEED);
    let mut v = random_unit_vector(&mut rng, n);

    let mut rayleigh = 0.0;
    for _ in 0..max_power_iters {
        let u = m.times_vec(&v);
        let next = dot(&u, &u); // v is unit, so this is the Rayleigh quotient
        let s = m.transpose_times_vec(&u);
        let s_norm = dot(&s, &s).sqrt();
        if s_norm == 0.0 {
            // start vector fell in the null space; redraw
            v = random_unit_vector(&mut rng, n);
            continue;
        }
        for (vi, si) in v.iter_mut().zip(&s) {
            *vi = si / s_norm;
        }
        let converged = next > 0.0 && (next - rayleigh).abs() < tol * next;
        rayleigh = next;
        if converged {
            break;
        }
    }

    let max_col_sq = (0..n)
        .map(|j| m.col_l2_norm_sq(j))
        .fold(0.0f64, f64::max);
    Ok(rayleigh.max(max_col_sq))
}

fn random_unit_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Nonnegative least squares `min_{H >= 0} ||M - W H||_F^2` by cyclic
/// coordinate descent over the rows of `H`.
///
/// One sweep updates each row `k` by the closed-form nonnegative minimizer
/// `H(k,:) <- max(0, H(k,:) + W(:,k)^T R / ||W(:,k)||^2)` with the residual
/// `R = M - W H` maintained incrementally. Rows whose `W` column is zero stay
/// at zero. Stops early once the relative objective decrease per sweep drops
/// below 1e-10. `sweeps = 0` returns `H = 0`.
pub fn nnls_cd(w: &DenseMatrix, m: &DenseMatrix, sweeps: usize) -> Result<DenseMatrix> {
    if w.rows() != m.rows() {
        return Err(Error::DimensionMismatch(format!(
            "W has {} rows but M has {}",
            w.rows(),
            m.rows()
        )));
    }
    let r = w.cols();
    let n = m.cols();
    let mut h = DenseMatrix::zeros(r, n);
    if sweeps == 0 {
        return Ok(h);
    }

    let col_norms_sq: Vec<f64> = (0..r).map(|k| w.col_l2_norm_sq(k)).collect();
    let mut residual = m.clone();
    let mut objective = residual.frob_norm().powi(2);

    for _ in 0..sweeps {
        for k in 0..r {
            let denom = col_norms_sq[k];
            if denom == 0.0 {
                continue;
            }
            let w_col = w.col(k);
            for j in 0..n {
                let old = h.get(k, j);
                let grad = dot(w_col, residual.col(j));
                let new = (old + grad / denom).max(0.0);
                let delta = new - old;
                if delta != 0.0 {
                    h.set(k, j, new);
                    let res_col = residual.col_mut(j);
                    for (ri, &wi) in res_col.iter_mut().zip(w_col) {
                        *ri -= delta * wi;
                    }
                }
            }
        }
        let next_objective = residual.frob_norm().powi(2);
        let decrease = objective - next_objective;
        objective = next_objective;
        if decrease < NNLS_EARLY_EXIT * objective.max(1e-300) {
            break;
        }
    }
    Ok(h)
}
