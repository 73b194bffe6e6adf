//! Greedy column-selection baselines: the successive projection algorithm
//! (SPA), its nonnegative-projection variant (SNPA), and the "max" variant of
//! XRAY. All three pick `r` columns one at a time, differing in how the
//! residual is updated between picks.

use crate::matrix::{dot, nnls_cd, DenseMatrix, NNLS_DEFAULT_SWEEPS};
use crate::{Error, Result};

/// Residual columns whose squared norm falls below this fraction of the
/// initial maximum are treated as numerically zero.
const EXHAUSTION_REL: f64 = 1e-20;

/// Result of a greedy selection run.
#[derive(Debug, Clone)]
pub struct GreedySelection {
    /// Selected column indices, in pick order.
    pub indices: Vec<usize>,
    /// Residual Frobenius norm after each pick.
    pub residual_norms: Vec<f64>,
}

fn check_r(m: &DenseMatrix, r: usize) -> Result<()> {
    let feasible = m.rows().min(m.cols());
    if r == 0 || r > feasible {
        return Err(Error::InvalidConfig(format!(
            "r = {r} out of range for a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

/// Index of the column with the largest squared l2 norm; ties break toward
/// the lowest index. `skip` columns are excluded.
fn argmax_col_norm_sq(m: &DenseMatrix, skip: &[usize]) -> (usize, f64) {
    let mut best = (usize::MAX, f64::NEG_INFINITY);
    for j in 0..m.cols() {
        if skip.contains(&j) {
            continue;
        }
        let norm_sq = m.col_l2_norm_sq(j);
        if norm_sq > best.1 {
            best = (j, norm_sq);
        }
    }
    best
}

/// Successive projection algorithm: pick the column with the largest l2 norm,
/// then project every column onto the orthogonal complement of the pick.
pub fn spa(m: &DenseMatrix, r: usize) -> Result<GreedySelection> {
    check_r(m, r)?;
    let mut residual = m.clone();
    let initial_max = argmax_col_norm_sq(&residual, &[]).1;
    let threshold = initial_max * EXHAUSTION_REL;

    let mut indices = Vec::with_capacity(r);
    let mut residual_norms = Vec::with_capacity(r);
    for step in 0..r {
        let (sel, norm_sq) = argmax_col_norm_sq(&residual, &[]);
        if norm_sq <= threshold {
            return Err(Error::RankExhausted { selected: step, requested: r });
        }
        let scale = 1.0 / norm_sq.sqrt();
        let u: Vec<f64> = residual.col(sel).iter().map(|v| v * scale).collect();
        for j in 0..residual.cols() {
            let coeff = dot(&u, residual.col(j));
            let col = residual.col_mut(j);
            for (c, ui) in col.iter_mut().zip(&u) {
                *c -= coeff * ui;
            }
        }
        // the selected column is annihilated exactly
        residual.col_mut(sel).fill(0.0);
        indices.push(sel);
        residual_norms.push(residual.frob_norm());
    }
    Ok(GreedySelection { indices, residual_norms })
}

/// Successive nonnegative projection algorithm: like SPA, but the residual is
/// `M - M(:,K) H` with `H` the nonnegative least-squares fit onto the picks.
pub fn snpa(m: &DenseMatrix, r: usize) -> Result<GreedySelection> {
    check_r(m, r)?;
    let initial_max = argmax_col_norm_sq(m, &[]).1;
    let threshold = initial_max * EXHAUSTION_REL;

    let mut indices: Vec<usize> = Vec::with_capacity(r);
    let mut residual_norms = Vec::with_capacity(r);
    let mut residual = m.clone();
    for step in 0..r {
        let (sel, norm_sq) = argmax_col_norm_sq(&residual, &indices);
        if sel == usize::MAX || norm_sq <= threshold {
            return Err(Error::RankExhausted { selected: step, requested: r });
        }
        indices.push(sel);
        let dictionary = m.select_cols(&indices);
        let h = nnls_cd(&dictionary, m, NNLS_DEFAULT_SWEEPS)?;
        residual = m.minus(&dictionary.times(&h));
        residual_norms.push(residual.frob_norm());
    }
    Ok(GreedySelection { indices, residual_norms })
}

/// XRAY, "max" selection rule. Works on the cone generated by the columns, so
/// the input must be entrywise nonnegative but need not be normalized.
///
/// Each step picks the anchor column with the largest residual, then selects
/// the column maximizing `R(:,anchor)' M(:,j) / (1' M(:,j))`, and refits the
/// nonnegative coefficients on the enlarged pick set.
pub fn xray_max(m: &DenseMatrix, r: usize) -> Result<GreedySelection> {
    check_r(m, r)?;
    if m.min_entry() < 0.0 {
        return Err(Error::NegativeInput(
            "XRAY requires nonnegative input".into(),
        ));
    }
    let col_sums: Vec<f64> = (0..m.cols()).map(|j| m.col(j).iter().sum()).collect();
    let initial_max = argmax_col_norm_sq(m, &[]).1;
    let threshold = initial_max * EXHAUSTION_REL;

    let mut indices: Vec<usize> = Vec::with_capacity(r);
    let mut residual_norms = Vec::with_capacity(r);
    let mut residual = m.clone();
    for step in 0..r {
        let (anchor, anchor_norm_sq) = argmax_col_norm_sq(&residual, &[]);
        if anchor_norm_sq <= threshold {
            return Err(Error::RankExhausted { selected: step, requested: r });
        }
        let anchor_col = residual.col(anchor).to_vec();

        let mut best: Option<(usize, f64)> = None;
        for j in 0..m.cols() {
            if indices.contains(&j) || col_sums[j] <= 0.0 {
                continue;
            }
            let score = dot(&anchor_col, m.col(j)) / col_sums[j];
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        let (sel, _) = best.ok_or(Error::RankExhausted { selected: step, requested: r })?;

        indices.push(sel);
        let dictionary = m.select_cols(&indices);
        let h = nnls_cd(&dictionary, m, NNLS_DEFAULT_SWEEPS)?;
        residual = m.minus(&dictionary.times(&h));
        residual_norms.push(residual.frob_norm());
    }
    Ok(GreedySelection { indices, residual_norms })
}
