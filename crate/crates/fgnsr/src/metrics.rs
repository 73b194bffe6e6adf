//! Evaluation measures for selected column sets: mean-removed spectral angle
//! between basis estimates, NNLS-based relative approximation measures, and
//! plain index recovery.

use std::collections::BTreeSet;

use crate::matrix::{dot, nnls_cd, DenseMatrix};
use crate::{Error, Result};

/// Sweep budget for the NNLS fits behind the approximation measures.
const MEASURE_SWEEPS: usize = 200;

/// Mean-removed norms below this are treated as constant columns.
const CONSTANT_TOL: f64 = 1e-10;

/// The full set of quality measures for one selection.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Mean-removed spectral angle against the true basis, in `[0, 100]`.
    pub mrsa_mean: f64,
    /// Relative approximation measure in `[0, 1]`, one is best.
    pub rel_measure: f64,
    /// Relative approximation error in percent.
    pub rel_error_pct: f64,
    /// Fraction of the true index set recovered, in `[0, 1]`.
    pub index_recovery: f64,
}

/// Evaluate a selection against the ground truth of a generated instance.
pub fn evaluate(
    m: &DenseMatrix,
    k_est: &[usize],
    w_true: &DenseMatrix,
    k_true: &[usize],
) -> Result<EvalReport> {
    let w_est = m.select_cols(k_est);
    Ok(EvalReport {
        mrsa_mean: mrsa(&w_est, w_true)?,
        rel_measure: rel_approx_measure(m, k_est)?,
        rel_error_pct: rel_error_pct(m, k_est)?,
        index_recovery: index_recovery(k_est, k_true),
    })
}

/// Mean-removed spectral angle between two basis matrices, on `[0, 100]`
/// (0 is a perfect match).
///
/// Columns are paired by the cost-minimizing assignment over all per-pair
/// angles (exact for up to 16 columns, greedy beyond), and the mean over the
/// matched pairs is returned. A pair with exactly one constant column scores
/// the maximal 100; two constant columns score 0.
pub fn mrsa(w_est: &DenseMatrix, w_true: &DenseMatrix) -> Result<f64> {
    if w_est.rows() != w_true.rows() || w_est.cols() != w_true.cols() {
        return Err(Error::DimensionMismatch(format!(
            "basis shapes differ: {}x{} vs {}x{}",
            w_est.rows(),
            w_est.cols(),
            w_true.rows(),
            w_true.cols()
        )));
    }
    let r = w_est.cols();
    let mut cost = vec![vec![0.0; r]; r];
    for (i, row) in cost.iter_mut().enumerate() {
        for (j, c) in row.iter_mut().enumerate() {
            *c = pair_mrsa(w_est.col(i), w_true.col(j));
        }
    }
    let total = if r <= 16 {
        min_cost_assignment_exact(&cost)
    } else {
        min_cost_assignment_greedy(&cost)
    };
    Ok(total / r as f64)
}

/// Angle between two columns after removing each column's mean, scaled so a
/// right angle is 50.
fn pair_mrsa(a: &[f64], b: &[f64]) -> f64 {
    let centered = |v: &[f64]| -> Vec<f64> {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| x - mean).collect()
    };
    let ca = centered(a);
    let cb = centered(b);
    let na = dot(&ca, &ca).sqrt();
    let nb = dot(&cb, &cb).sqrt();
    let scale_a = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let scale_b = b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let a_const = na <= CONSTANT_TOL * (1.0 + scale_a);
    let b_const = nb <= CONSTANT_TOL * (1.0 + scale_b);
    match (a_const, b_const) {
        (true, true) => 0.0,
        (true, false) | (false, true) => 100.0,
        (false, false) => {
            // half-angle form of arccos(<u, v>) for unit u, v; well conditioned
            // at both ends where the plain arccos loses half the digits
            let mut diff_sq = 0.0;
            let mut sum_sq = 0.0;
            for (x, y) in ca.iter().zip(&cb) {
                let u = x / na;
                let v = y / nb;
                diff_sq += (u - v) * (u - v);
                sum_sq += (u + v) * (u + v);
            }
            let angle = 2.0 * diff_sq.sqrt().atan2(sum_sq.sqrt());
            100.0 / std::f64::consts::PI * angle
        }
    }
}

/// Exact minimum-cost assignment by dynamic programming over column subsets.
fn min_cost_assignment_exact(cost: &[Vec<f64>]) -> f64 {
    let r = cost.len();
    let full = 1usize << r;
    let mut dp = vec![f64::INFINITY; full];
    dp[0] = 0.0;
    for mask in 0..full {
        if dp[mask].is_infinite() {
            continue;
        }
        let i = (mask as u32).count_ones() as usize; // next estimate column to place
        if i >= r {
            continue;
        }
        for j in 0..r {
            if mask & (1 << j) == 0 {
                let next = mask | (1 << j);
                let candidate = dp[mask] + cost[i][j];
                if candidate < dp[next] {
                    dp[next] = candidate;
                }
            }
        }
    }
    dp[full - 1]
}

/// Greedy fallback: repeatedly match the globally cheapest unmatched pair.
fn min_cost_assignment_greedy(cost: &[Vec<f64>]) -> f64 {
    let r = cost.len();
    let mut used_est = vec![false; r];
    let mut used_true = vec![false; r];
    let mut total = 0.0;
    for _ in 0..r {
        let mut best = (0, 0, f64::INFINITY);
        for i in 0..r {
            if used_est[i] {
                continue;
            }
            for j in 0..r {
                if !used_true[j] && cost[i][j] < best.2 {
                    best = (i, j, cost[i][j]);
                }
            }
        }
        used_est[best.0] = true;
        used_true[best.1] = true;
        total += best.2;
    }
    total
}

/// `1 - min_{H >= 0} ||M - M(:,K) H||_F / ||M||_F`, clamped to `[0, 1]`.
/// One is best; taking `H = 0` gives zero.
pub fn rel_approx_measure(m: &DenseMatrix, k: &[usize]) -> Result<f64> {
    rel_approx_measure_with_sweeps(m, k, MEASURE_SWEEPS)
}

/// Same measure with an explicit NNLS sweep budget; `sweeps = 0` is the
/// diagnostic `H = 0` mode.
pub fn rel_approx_measure_with_sweeps(m: &DenseMatrix, k: &[usize], sweeps: usize) -> Result<f64> {
    let residual = selection_residual(m, k, sweeps)?;
    Ok((1.0 - residual / m.frob_norm()).clamp(0.0, 1.0))
}

/// Relative approximation error in percent:
/// `100 * min_{H >= 0} ||M - M(:,K) H||_F / ||M||_F`.
pub fn rel_error_pct(m: &DenseMatrix, k: &[usize]) -> Result<f64> {
    let residual = selection_residual(m, k, MEASURE_SWEEPS)?;
    Ok(100.0 * residual / m.frob_norm())
}

fn selection_residual(m: &DenseMatrix, k: &[usize], sweeps: usize) -> Result<f64> {
    if k.is_empty() {
        return Err(Error::InvalidConfig("selection must be nonempty".into()));
    }
    let dict = m.select_cols(k);
    let h = nnls_cd(&dict, m, sweeps)?;
    Ok(m.minus(&dict.times(&h)).frob_norm())
}

/// Fraction of the true index set recovered: `|K_est ∩ K_true| / |K_true|`,
/// both treated as sets.
pub fn index_recovery(k_est: &[usize], k_true: &[usize]) -> f64 {
    let est: BTreeSet<usize> = k_est.iter().copied().collect();
    let truth: BTreeSet<usize> = k_true.iter().copied().collect();
    if truth.is_empty() {
        return 0.0;
    }
    est.intersection(&truth).count() as f64 / truth.len() as f64
}
