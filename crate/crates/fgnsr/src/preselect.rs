//! Column subsampling for large data sets.
//!
//! When `n` is too large to solve the self-regression problem directly, the
//! columns are clustered, each cluster is replaced by its centroid scaled by
//! `sqrt(n_k)` (so a cluster's weight in the residual matches the mass of its
//! members), and the solver runs on the small centroid matrix. Cluster labels
//! can come from any external tool through a label file; a self-contained
//! recursive 2-means splitter is provided as a fallback.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::matrix::DenseMatrix;
use crate::{Error, Result};

/// Within-cluster scatter below which a cluster is considered unsplittable.
const SCATTER_TOL: f64 = 1e-18;
/// Lloyd iteration cap per 2-means split.
const LLOYD_ITERS: usize = 30;

/// A full labeling of the columns into nonempty clusters `0..C`.
#[derive(Debug, Clone)]
pub struct ClusterAssignment {
    labels: Vec<usize>,
    counts: Vec<usize>,
}

impl ClusterAssignment {
    /// Build from arbitrary per-column cluster ids. Ids are remapped to a
    /// dense `0..C` range in increasing id order, so every cluster is
    /// nonempty by construction.
    pub fn from_labels(raw: &[usize]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InvalidConfig("no cluster labels given".into()));
        }
        let mut ids: Vec<usize> = raw.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let labels: Vec<usize> = raw
            .iter()
            .map(|id| ids.binary_search(id).expect("id present"))
            .collect();
        let mut counts = vec![0usize; ids.len()];
        for &l in &labels {
            counts[l] += 1;
        }
        Ok(Self { labels, counts })
    }

    pub fn num_clusters(&self) -> usize {
        self.counts.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }
}

/// Scaled centroid matrix plus the bookkeeping to map selections back to
/// original columns.
#[derive(Debug, Clone)]
pub struct ScaledCentroids {
    /// `m x C`; column `k` is `sqrt(n_k)` times the mean of cluster `k`.
    pub matrix: DenseMatrix,
    /// Cluster sizes `n_k`.
    pub counts: Vec<usize>,
    /// Per centroid, the original column closest (l2) to the unscaled
    /// centroid; selections on the centroid matrix are reported through this.
    pub representatives: Vec<usize>,
}

/// Replace each cluster by its `sqrt(n_k)`-scaled centroid.
pub fn centroids_scaled(m: &DenseMatrix, assignment: &ClusterAssignment) -> Result<ScaledCentroids> {
    if assignment.labels().len() != m.cols() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} columns",
            assignment.labels().len(),
            m.cols()
        )));
    }
    let c = assignment.num_clusters();
    for (k, &count) in assignment.counts().iter().enumerate() {
        if count == 0 {
            return Err(Error::EmptyCluster(k));
        }
    }

    let rows = m.rows();
    let mut centroid = DenseMatrix::zeros(rows, c);
    for (j, &label) in assignment.labels().iter().enumerate() {
        let src = m.col(j);
        let dst = centroid.col_mut(label);
        for (d, &s) in dst.iter_mut().zip(src) {
            *d += s;
        }
    }
    for k in 0..c {
        let inv = 1.0 / assignment.counts()[k] as f64;
        for v in centroid.col_mut(k) {
            *v *= inv;
        }
    }

    // representative: member closest to the unscaled centroid, lowest index on ties
    let mut best_dist = vec![f64::INFINITY; c];
    let mut representatives = vec![usize::MAX; c];
    for (j, &label) in assignment.labels().iter().enumerate() {
        let dist: f64 = m
            .col(j)
            .iter()
            .zip(centroid.col(label))
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if dist < best_dist[label] {
            best_dist[label] = dist;
            representatives[label] = j;
        }
    }

    let mut scaled = centroid;
    for k in 0..c {
        let factor = (assignment.counts()[k] as f64).sqrt();
        for v in scaled.col_mut(k) {
            *v *= factor;
        }
    }

    Ok(ScaledCentroids { matrix: scaled, counts: assignment.counts().to_vec(), representatives })
}

/// Recursive 2-means splitting on l2-normalized columns: repeatedly split the
/// cluster with the largest within-cluster scatter until `c` clusters exist.
/// Deterministic for a fixed seed.
pub fn simple_split_cluster(m: &DenseMatrix, c: usize, seed: u64) -> Result<ClusterAssignment> {
    let n = m.cols();
    if c == 0 || c > n {
        return Err(Error::InvalidConfig(format!("cannot form {c} clusters from {n} columns")));
    }

    // direction-only copies: each column scaled to unit l2 norm
    let mut unit = m.clone();
    for j in 0..n {
        let norm = unit.col_l2_norm_sq(j).sqrt();
        if norm > 0.0 {
            for v in unit.col_mut(j) {
                *v /= norm;
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut clusters: Vec<Vec<usize>> = vec![(0..n).collect()];
    let mut scatters: Vec<f64> = vec![scatter(&unit, &clusters[0])];

    while clusters.len() < c {
        // widest splittable cluster first
        let mut target = usize::MAX;
        let mut best = SCATTER_TOL;
        for (k, cluster) in clusters.iter().enumerate() {
            if cluster.len() >= 2 && scatters[k] > best {
                best = scatters[k];
                target = k;
            }
        }

        let (part_a, part_b) = if target != usize::MAX {
            two_means(&unit, &clusters[target], &mut rng)
        } else {
            // only point clouds of duplicates remain: peel one member off the
            // first cluster that still has two
            let k = clusters
                .iter()
                .position(|cl| cl.len() >= 2)
                .expect("c <= n guarantees a splittable cluster");
            target = k;
            let mut members = clusters[k].clone();
            let single = vec![members.pop().expect("nonempty")];
            (members, single)
        };

        scatters[target] = scatter(&unit, &part_a);
        scatters.push(scatter(&unit, &part_b));
        clusters[target] = part_a;
        clusters.push(part_b);
    }

    let mut labels = vec![0usize; n];
    for (k, cluster) in clusters.iter().enumerate() {
        for &j in cluster {
            labels[j] = k;
        }
    }
    ClusterAssignment::from_labels(&labels)
}

fn scatter(unit: &DenseMatrix, members: &[usize]) -> f64 {
    if members.len() < 2 {
        return 0.0;
    }
    let rows = unit.rows();
    let mut mean = vec![0.0; rows];
    for &j in members {
        for (mv, &v) in mean.iter_mut().zip(unit.col(j)) {
            *mv += v;
        }
    }
    let inv = 1.0 / members.len() as f64;
    for mv in &mut mean {
        *mv *= inv;
    }
    members
        .iter()
        .map(|&j| {
            unit.col(j)
                .iter()
                .zip(&mean)
                .map(|(&v, &mv)| (v - mv) * (v - mv))
                .sum::<f64>()
        })
        .sum()
}

fn two_means(
    unit: &DenseMatrix,
    members: &[usize],
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, Vec<usize>) {
    let dist_sq = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    };
    let farthest_pos = |side: &[usize], center: &[f64]| -> usize {
        side.iter()
            .enumerate()
            .map(|(idx, &j)| (idx, dist_sq(unit.col(j), center)))
            .fold((0, -1.0), |acc, cand| if cand.1 > acc.1 { cand } else { acc })
            .0
    };

    // seed center 1 at a random member, center 2 at the member farthest from it
    let c1_member = members[rng.gen_range(0..members.len())];
    let mut center1 = unit.col(c1_member).to_vec();
    let mut center2 = center1.clone();
    let mut far = -1.0;
    for &j in members {
        let d = dist_sq(unit.col(j), &center1);
        if d > far {
            far = d;
            center2 = unit.col(j).to_vec();
        }
    }

    let mut side_a: Vec<usize> = Vec::new();
    let mut side_b: Vec<usize> = Vec::new();
    for _ in 0..LLOYD_ITERS {
        let mut next_a = Vec::new();
        let mut next_b = Vec::new();
        for &j in members {
            if dist_sq(unit.col(j), &center1) <= dist_sq(unit.col(j), &center2) {
                next_a.push(j);
            } else {
                next_b.push(j);
            }
        }
        // never let a side collapse: hand it the member farthest from the
        // center it would otherwise crowd
        if next_a.is_empty() {
            let pos = farthest_pos(&next_b, &center2);
            next_a.push(next_b.swap_remove(pos));
        } else if next_b.is_empty() {
            let pos = farthest_pos(&next_a, &center1);
            next_b.push(next_a.swap_remove(pos));
        }

        let stable = next_a == side_a && next_b == side_b;
        side_a = next_a;
        side_b = next_b;
        if stable {
            break;
        }

        for (center, side) in [(&mut center1, &side_a), (&mut center2, &side_b)] {
            center.iter_mut().for_each(|v| *v = 0.0);
            for &j in side.iter() {
                for (cv, &v) in center.iter_mut().zip(unit.col(j)) {
                    *cv += v;
                }
            }
            let inv = 1.0 / side.len() as f64;
            for cv in center.iter_mut() {
                *cv *= inv;
            }
        }
    }
    (side_a, side_b)
}
