//! Middle-point benchmark generators.
//!
//! An instance is `M = W H + N` where the first `r` columns of `H` (before
//! permutation) form the identity, the remaining `r(r-1)/2` columns mix every
//! vertex pair with weights 0.5/0.5, and the noise pushes each middle point
//! away from the vertex centroid, scaled so `||N||_F` matches the requested
//! level exactly. The vertex columns are never perturbed. The scaled variant
//! additionally multiplies each middle-point column of `H` by an independent
//! scalar drawn log-uniformly from `[alpha^-1, alpha]`, producing conic
//! rather than convex mixtures. Columns are randomly permuted at the end.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::matrix::DenseMatrix;
use crate::{Error, Result};

/// A generated benchmark instance together with its ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    /// The observed matrix, `m x n`, columns permuted.
    pub matrix: DenseMatrix,
    /// True vertex columns, `m x r`; column `k` sits at `matrix` column `k_true[k]`.
    pub w_true: DenseMatrix,
    /// Mixing weights after permutation, `r x n`, so `matrix = w_true * h_true + noise`.
    pub h_true: DenseMatrix,
    /// Positions of the vertex columns in `matrix`.
    pub k_true: Vec<usize>,
    /// Frobenius norm of the added noise.
    pub eps: f64,
    /// Scaling range bound of the conic variant (1.0 for the plain generator).
    pub alpha: f64,
    /// Seed the instance was generated from.
    pub seed: u64,
}

impl SyntheticInstance {
    pub fn m(&self) -> usize {
        self.matrix.rows()
    }

    pub fn n(&self) -> usize {
        self.matrix.cols()
    }

    pub fn r(&self) -> usize {
        self.w_true.cols()
    }
}

/// Middle-point instance: every vertex pair contributes its exact midpoint.
pub fn gen_middlepoint(m: usize, r: usize, eps: f64, seed: u64) -> Result<SyntheticInstance> {
    generate(m, r, eps, 1.0, seed)
}

/// Scaled middle-point instance: midpoints become conic combinations, each
/// scaled by an independent log-uniform draw from `[alpha^-1, alpha]`.
pub fn gen_scaled_middlepoint(
    m: usize,
    r: usize,
    eps: f64,
    alpha: f64,
    seed: u64,
) -> Result<SyntheticInstance> {
    if alpha < 1.0 {
        return Err(Error::InvalidConfig(format!("alpha must be >= 1, got {alpha}")));
    }
    generate(m, r, eps, alpha, seed)
}

fn generate(m: usize, r: usize, eps: f64, alpha: f64, seed: u64) -> Result<SyntheticInstance> {
    if m == 0 {
        return Err(Error::InvalidConfig("m must be at least 1".into()));
    }
    if r < 2 {
        return Err(Error::InvalidConfig(format!("r must be at least 2, got {r}")));
    }
    if eps < 0.0 || !eps.is_finite() {
        return Err(Error::InvalidConfig(format!("eps must be finite and >= 0, got {eps}")));
    }
    let n_mid = r * (r - 1) / 2;
    let n = r + n_mid;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Vertices: uniform entries, columns normalized to unit l1 sum.
    let mut w = DenseMatrix::zeros(m, r);
    for k in 0..r {
        let col = w.col_mut(k);
        let mut sum = 0.0;
        for v in col.iter_mut() {
            *v = rng.gen_range(0.0..1.0);
            sum += *v;
        }
        for v in col.iter_mut() {
            *v /= sum;
        }
    }

    // H = [I_r | pairs], each pair column holding two entries of 0.5,
    // optionally scaled in the conic variant.
    let ln_alpha = alpha.ln();
    let mut h = DenseMatrix::zeros(r, n);
    for k in 0..r {
        h.set(k, k, 1.0);
    }
    let mut col = r;
    for i in 0..r {
        for j in (i + 1)..r {
            let scale = (rng.gen_range(-1.0..1.0) * ln_alpha).exp();
            h.set(i, col, 0.5 * scale);
            h.set(j, col, 0.5 * scale);
            col += 1;
        }
    }

    let clean = w.times(&h);

    // Noise direction: middle point minus vertex centroid, middle columns only.
    let centroid: Vec<f64> = (0..m)
        .map(|i| (0..r).map(|k| w.get(i, k)).sum::<f64>() / r as f64)
        .collect();
    let mut noise = DenseMatrix::zeros(m, n);
    for j in r..n {
        for i in 0..m {
            noise.set(i, j, clean.get(i, j) - centroid[i]);
        }
    }
    if eps > 0.0 {
        let direction_norm = noise.frob_norm();
        if direction_norm == 0.0 {
            return Err(Error::InvalidConfig(
                "noise direction is zero (middle points coincide with the centroid); \
                 cannot realize a positive noise level"
                    .into(),
            ));
        }
        noise.scale(eps / direction_norm);
    } else {
        noise = DenseMatrix::zeros(m, n);
    }

    // Random column permutation; position `new` receives old column `perm[new]`.
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);

    let mut matrix = DenseMatrix::zeros(m, n);
    let mut h_true = DenseMatrix::zeros(r, n);
    let mut k_true = vec![0usize; r];
    for (new, &old) in perm.iter().enumerate() {
        for i in 0..m {
            matrix.set(i, new, clean.get(i, old) + noise.get(i, old));
        }
        for k in 0..r {
            h_true.set(k, new, h.get(k, old));
        }
        if old < r {
            k_true[old] = new;
        }
    }

    Ok(SyntheticInstance { matrix, w_true: w, h_true, k_true, eps, alpha, seed })
}
