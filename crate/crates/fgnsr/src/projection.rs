//! Exact Euclidean projection onto the weighted polyhedron
//! `Omega = { X >= 0 | X_ii <= 1, w_i X_ij <= w_j X_ii  for all i, j }`.
//!
//! The rows of `X` are independent in `Omega`, so the matrix projection
//! reduces to projecting each row `i` onto
//! `Omega_1(i) = { z >= 0 | z_i <= 1, w_i z_j <= w_j z_i }` with the diagonal
//! position acting as pivot. On a row, the projection is a one-dimensional
//! search over the pivot value `t`: coordinate `j` is "active" (pinned to
//! `(w_j / w_piv) t`) exactly when its breakpoint `b_j = (w_piv / w_j) x_j`
//! lies at or above `t`, and the projection cost as a function of `t` is a
//! strongly convex piecewise quadratic with the breakpoints as knots. The
//! scan walks candidate active sets in decreasing breakpoint order, updating
//! the closed-form piece minimizer `t = w_piv * p / q` incrementally, and
//! stops as soon as `t` settles inside the current piece. The final `t` is
//! clamped to `[0, 1]`.
//!
//! Two scan implementations are provided: the default keeps the candidate
//! breakpoints on a heap ([`project_row`]), the other fully sorts them
//! ([`project_row_sorted`]). They execute identical floating-point operations
//! and must return bit-identical results; the pair exists for differential
//! testing. [`brute_force_project_row`] is an exponential reference
//! implementation used to verify both.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::matrix::{ColumnWeights, DenseMatrix};
use crate::{Error, Result};

/// Row count at which `project_omega` switches to parallel row projection.
const PAR_ROW_THRESHOLD: usize = 64;

/// Diagnostics from a single row projection.
#[derive(Debug, Clone)]
pub struct RowProjection {
    /// The projected row.
    pub z: Vec<f64>,
    /// Realized pivot value after clamping to `[0, 1]`.
    pub t_star: f64,
    /// Number of coordinates pinned to the coupling constraint.
    pub active_count: usize,
    /// Trial pivot values produced during the scan, in order.
    pub trials: Vec<f64>,
}

#[derive(Debug, PartialEq)]
struct Breakpoint {
    b: f64,
    idx: usize,
}

impl Eq for Breakpoint {}

impl Ord for Breakpoint {
    // Max-heap on the breakpoint value; ties pop the lower index first.
    fn cmp(&self, other: &Self) -> Ordering {
        self.b
            .total_cmp(&other.b)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Breakpoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Coordinate classification shared by both scan variants.
struct RowSetup {
    /// Coordinates forced to zero (`x_j <= 0` or `w_j = 0`).
    zeros: Vec<usize>,
    /// Coordinates whose breakpoint exceeds 1: active for every admissible `t`.
    always_active: Vec<usize>,
    /// Breakpoints inside `[x_piv_clamped, 1]`, to be scanned.
    scannable: Vec<Breakpoint>,
    /// Accumulated numerator `w_piv x_piv + sum of always-active w_j x_j`.
    p: f64,
    /// Accumulated denominator `w_piv^2 + sum of always-active w_j^2`.
    q: f64,
}

fn classify_row(x: &[f64], w: &ColumnWeights, pivot: usize) -> RowSetup {
    let w_piv = w.get(pivot);
    let x_piv_clamped = x[pivot].clamp(0.0, 1.0);
    let mut zeros = Vec::new();
    let mut always_active = Vec::new();
    let mut scannable = Vec::new();
    let mut p = w_piv * x[pivot];
    let mut q = w_piv * w_piv;

    for (j, &xj) in x.iter().enumerate() {
        if j == pivot {
            continue;
        }
        let wj = w.get(j);
        if xj <= 0.0 || wj == 0.0 {
            zeros.push(j);
            continue;
        }
        let b = (w_piv / wj) * xj;
        if b > 1.0 {
            always_active.push(j);
            p += wj * xj;
            q += wj * wj;
        } else if b >= x_piv_clamped {
            scannable.push(Breakpoint { b, idx: j });
        }
        // b < x_piv_clamped: never active, coordinate keeps x_j
    }

    RowSetup { zeros, always_active, scannable, p, q }
}

fn assemble(
    x: &[f64],
    w: &ColumnWeights,
    pivot: usize,
    setup: &RowSetup,
    extracted: &[usize],
    t: f64,
    trials: Vec<f64>,
) -> RowProjection {
    let w_piv = w.get(pivot);
    let t_star = t.clamp(0.0, 1.0);
    let mut z = x.to_vec();
    z[pivot] = t_star;
    for &j in &setup.zeros {
        z[j] = 0.0;
    }
    let mut active_count = 0;
    for &j in setup.always_active.iter().chain(extracted) {
        z[j] = (w.get(j) / w_piv) * t_star;
        active_count += 1;
    }
    RowProjection { z, t_star, active_count, trials }
}

/// Projection of a row when the pivot weight is zero: the coupling
/// constraints are vacuous and the problem decouples entrywise.
fn project_degenerate(x: &[f64], pivot: usize) -> RowProjection {
    let mut z: Vec<f64> = x.iter().map(|&v| v.max(0.0)).collect();
    let t_star = x[pivot].clamp(0.0, 1.0);
    z[pivot] = t_star;
    RowProjection { z, t_star, active_count: 0, trials: Vec::new() }
}

/// Project `x` onto `Omega_1(pivot)` using the heap scan, returning full
/// diagnostics.
pub fn project_row_detailed(x: &[f64], w: &ColumnWeights, pivot: usize) -> RowProjection {
    assert_eq!(x.len(), w.len(), "row and weight lengths must agree");
    assert!(pivot < x.len(), "pivot out of range");
    let w_piv = w.get(pivot);
    if w_piv == 0.0 {
        return project_degenerate(x, pivot);
    }

    let mut setup = classify_row(x, w, pivot);
    let mut heap = BinaryHeap::from(std::mem::take(&mut setup.scannable));
    let mut t = w_piv * setup.p / setup.q;
    let mut trials = vec![t];
    let mut extracted = Vec::new();
    let mut p = setup.p;
    let mut q = setup.q;

    while let Some(top) = heap.peek() {
        if t >= top.b {
            break;
        }
        let bp = heap.pop().expect("peeked entry");
        let wj = w.get(bp.idx);
        p += wj * x[bp.idx];
        q += wj * wj;
        t = w_piv * p / q;
        trials.push(t);
        extracted.push(bp.idx);
    }

    assemble(x, w, pivot, &setup, &extracted, t, trials)
}

/// Project `x` onto `Omega_1(pivot)`; heap scan, default variant.
pub fn project_row(x: &[f64], w: &ColumnWeights, pivot: usize) -> Vec<f64> {
    project_row_detailed(x, w, pivot).z
}

/// Full-sort variant of the row projection. Kept for differential testing
/// against [`project_row`]; both must return bit-identical results.
pub fn project_row_sorted(x: &[f64], w: &ColumnWeights, pivot: usize) -> Vec<f64> {
    assert_eq!(x.len(), w.len(), "row and weight lengths must agree");
    assert!(pivot < x.len(), "pivot out of range");
    let w_piv = w.get(pivot);
    if w_piv == 0.0 {
        return project_degenerate(x, pivot).z;
    }

    let mut setup = classify_row(x, w, pivot);
    let mut sorted = std::mem::take(&mut setup.scannable);
    // Decreasing breakpoint, ties by increasing index: the heap's pop order.
    sorted.sort_by(|a, b| b.cmp(a));

    let mut t = w_piv * setup.p / setup.q;
    let mut extracted = Vec::new();
    let mut p = setup.p;
    let mut q = setup.q;

    for bp in &sorted {
        if t >= bp.b {
            break;
        }
        let wj = w.get(bp.idx);
        p += wj * x[bp.idx];
        q += wj * wj;
        t = w_piv * p / q;
        extracted.push(bp.idx);
    }

    assemble(x, w, pivot, &setup, &extracted, t, Vec::new()).z
}

/// Project a square matrix onto `Omega` row by row, row `i` pivoting on its
/// diagonal entry. Rows are independent; large matrices are processed in
/// parallel with identical results.
pub fn project_omega(x: &DenseMatrix, w: &ColumnWeights) -> Result<DenseMatrix> {
    let n = x.rows();
    if x.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "projection needs a square matrix, got {}x{}",
            x.rows(),
            x.cols()
        )));
    }
    if w.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "weight vector has length {}, matrix has {n} columns",
            w.len()
        )));
    }

    // Work on the transpose so each row becomes a contiguous chunk.
    let mut xt = x.transpose();
    let chunks = xt.data_mut().chunks_mut(n);
    if n >= PAR_ROW_THRESHOLD {
        chunks
            .collect::<Vec<_>>()
            .into_par_iter()
            .enumerate()
            .for_each(|(i, row)| {
                let projected = project_row(row, w, i);
                row.copy_from_slice(&projected);
            });
    } else {
        for (i, row) in chunks.enumerate() {
            let projected = project_row(row, w, i);
            row.copy_from_slice(&projected);
        }
    }
    Ok(xt.transpose())
}

/// Exhaustive reference projection onto `Omega_1(pivot)`.
///
/// Enumerates every assignment of each coordinate to one of {free, zero,
/// coupled} and the pivot to {free, zero, one}, solves each resulting
/// equality-constrained least-squares system in closed form, and returns the
/// feasible candidate closest to `x`. Exponential in the row length, hence
/// restricted to 12 coordinates; this is a verification tool, not a solver.
pub fn brute_force_project_row(x: &[f64], w: &ColumnWeights, pivot: usize) -> Result<Vec<f64>> {
    const MAX_LEN: usize = 12;
    let n = x.len();
    if n > MAX_LEN {
        return Err(Error::OracleLimit { len: n, max: MAX_LEN });
    }
    assert_eq!(n, w.len(), "row and weight lengths must agree");
    assert!(pivot < n, "pivot out of range");

    let w_piv = w.get(pivot);
    if w_piv == 0.0 {
        return Ok(project_degenerate(x, pivot).z);
    }

    let others: Vec<usize> = (0..n).filter(|&j| j != pivot).collect();
    let combos = 3usize.pow(others.len() as u32);
    let feas_tol = 1e-10;

    let mut best: Option<(f64, Vec<f64>)> = None;
    for pivot_state in 0..3 {
        for combo in 0..combos {
            // decode states: 0 = free (z_j = x_j), 1 = zero, 2 = coupled
            let mut states = vec![0u8; others.len()];
            let mut c = combo;
            for s in states.iter_mut() {
                *s = (c % 3) as u8;
                c /= 3;
            }

            let t = match pivot_state {
                0 => {
                    // free pivot: closed-form minimizer over the coupled set
                    let mut p = w_piv * x[pivot];
                    let mut q = w_piv * w_piv;
                    for (k, &j) in others.iter().enumerate() {
                        if states[k] == 2 {
                            p += w.get(j) * x[j];
                            q += w.get(j) * w.get(j);
                        }
                    }
                    w_piv * p / q
                }
                1 => 0.0,
                _ => 1.0,
            };

            let mut z = vec![0.0; n];
            z[pivot] = t;
            for (k, &j) in others.iter().enumerate() {
                z[j] = match states[k] {
                    0 => x[j],
                    1 => 0.0,
                    _ => (w.get(j) / w_piv) * t,
                };
            }

            if !candidate_feasible(&z, w, pivot, feas_tol) {
                continue;
            }
            let cost: f64 = z.iter().zip(x).map(|(zi, xi)| (zi - xi) * (zi - xi)).sum();
            if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                best = Some((cost, z));
            }
        }
    }

    Ok(best.expect("the zero vector is always feasible").1)
}

fn candidate_feasible(z: &[f64], w: &ColumnWeights, pivot: usize, tol: f64) -> bool {
    let w_piv = w.get(pivot);
    if z[pivot] > 1.0 + tol {
        return false;
    }
    for (j, &zj) in z.iter().enumerate() {
        if zj < -tol {
            return false;
        }
        if j != pivot && w_piv * zj > w.get(j) * z[pivot] + tol * (1.0 + w.get(j)) {
            return false;
        }
    }
    true
}
