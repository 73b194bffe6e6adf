//! Acceptance suite: one test per shipping criterion, each printing a PASS
//! line with its headline numbers (visible with `--nocapture`).
//!
//! Run with `cargo test -p fgnsr --test acceptance`.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fgnsr::greedy::{snpa, spa, xray_max};
use fgnsr::matrix::{col_l1_norms, DenseMatrix};
use fgnsr::metrics::{index_recovery, mrsa};
use fgnsr::preselect::{centroids_scaled, simple_split_cluster};
use fgnsr::projection::{
    brute_force_project_row, project_row, project_row_sorted,
};
use fgnsr::solver::{
    default_p, estimate_mu, gradient, objective, solve, MuMode, Postprocess, SolverConfig,
};
use fgnsr::synth::{gen_middlepoint, gen_scaled_middlepoint};
use fgnsr::ColumnWeights;

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Twelve geometrically spaced noise levels over which SPA degrades from
/// full recovery to well below 0.6 on the 50x55 middle-point family.
fn sweep_levels() -> Vec<f64> {
    (0..12)
        .map(|i| 0.01 * (0.2f64 / 0.01).powf(i as f64 / 11.0))
        .collect()
}

fn l1_normalized(m: &DenseMatrix) -> DenseMatrix {
    let w = col_l1_norms(m);
    DenseMatrix::from_fn(m.rows(), m.cols(), |i, j| {
        let s = w.get(j);
        if s > 0.0 {
            m.get(i, j) / s
        } else {
            0.0
        }
    })
}

/// Additive noise can push a few entries below zero; XRAY is defined on
/// nonnegative data, so it sees the clamped matrix.
fn nonneg_for_xray(m: &DenseMatrix) -> DenseMatrix {
    if m.min_entry() >= 0.0 {
        m.clone()
    } else {
        DenseMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j).max(0.0))
    }
}

#[test]
fn acceptance_01_projection_matches_brute_force_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(2..=8);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..2.0)).collect();
        let wv: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
        let pivot = rng.gen_range(0..n);
        let w = ColumnWeights::from_values(wv).unwrap();
        let fast = project_row(&x, &w, pivot);
        let oracle = brute_force_project_row(&x, &w, pivot).unwrap();
        worst = worst.max(max_gap(&fast, &oracle));
    }
    assert!(worst <= 1e-8, "max gap to the oracle is {worst}");
    println!(
        "criterion 01 PASS: 1000 rows, max oracle gap {worst:.3e} ({:.2}s)",
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn acceptance_02_projection_feasibility_and_idempotence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let n = 50;
    let mut worst_violation = 0.0f64;
    let mut worst_drift = 0.0f64;
    for _ in 0..10_000 {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..2.0)).collect();
        let wv: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
        let pivot = rng.gen_range(0..n);
        let w = ColumnWeights::from_values(wv).unwrap();
        let z = project_row(&x, &w, pivot);

        let w_piv = w.get(pivot);
        let mut violation = (z[pivot] - 1.0).max(0.0);
        for (j, &zj) in z.iter().enumerate() {
            violation = violation.max(-zj);
            if j != pivot {
                let slack = w_piv * zj - w.get(j) * z[pivot];
                violation = violation.max(slack / (1.0 + w.get(j)));
            }
        }
        worst_violation = worst_violation.max(violation);

        let z2 = project_row(&z, &w, pivot);
        worst_drift = worst_drift.max(max_gap(&z, &z2));
    }
    assert!(worst_violation <= 1e-12, "feasibility violated by {worst_violation}");
    assert!(worst_drift <= 1e-12, "re-projection moved a point by {worst_drift}");
    println!(
        "criterion 02 PASS: 10000 rows, violation {worst_violation:.3e}, drift {worst_drift:.3e} ({:.2}s)",
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn acceptance_03_heap_and_sort_scans_are_bit_identical() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let n = 200;
    for trial in 0..1000 {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..2.0)).collect();
        let wv: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
        let pivot = rng.gen_range(0..n);
        let w = ColumnWeights::from_values(wv).unwrap();
        let heap = project_row(&x, &w, pivot);
        let sort = project_row_sorted(&x, &w, pivot);
        for (j, (a, b)) in heap.iter().zip(&sort).enumerate() {
            assert_eq!(
                a.to_bits(),
                b.to_bits(),
                "trial {trial}, coordinate {j}: heap {a} vs sort {b}"
            );
        }
    }
    println!(
        "criterion 03 PASS: 1000 rows of width 200 bit-identical ({:.2}s)",
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn acceptance_04_gradient_matches_finite_differences() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let m = DenseMatrix::from_fn(5, 7, |_, _| rng.gen_range(0.0..1.0));
        let x = DenseMatrix::from_fn(7, 7, |_, _| rng.gen_range(0.0..1.0));
        let p = default_p(7);
        let gram = m.transpose_times_self();
        for &mu in &[0.0, 0.1, 10.0] {
            let g = gradient(&m, &gram, &x, mu, &p);
            let h = 1e-5;
            for i in 0..7 {
                for j in 0..7 {
                    let mut plus = x.clone();
                    plus.set(i, j, x.get(i, j) + h);
                    let mut minus = x.clone();
                    minus.set(i, j, x.get(i, j) - h);
                    let fd = (objective(&m, &plus, mu, &p) - objective(&m, &minus, mu, &p))
                        / (2.0 * h);
                    let rel = (g.get(i, j) - fd).abs() / fd.abs().max(1e-3);
                    worst = worst.max(rel);
                }
            }
        }
    }
    assert!(worst <= 1e-5, "max relative gradient error {worst}");
    println!(
        "criterion 04 PASS: finite-difference gap {worst:.3e} ({:.2}s)",
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn acceptance_05_noiseless_recovery_all_methods() {
    let start = Instant::now();
    for seed in 0..25 {
        let inst = gen_middlepoint(50, 10, 0.0, seed).unwrap();
        let truth = sorted(inst.k_true.clone());

        let mut config = SolverConfig::new(10);
        config.maxiter = 1000;
        let fg = solve(&inst.matrix, &config).unwrap().indices;
        assert_eq!(sorted(fg), truth, "fgnsr missed on seed {seed}");

        let sp = spa(&inst.matrix, 10).unwrap().indices;
        assert_eq!(sorted(sp), truth, "spa missed on seed {seed}");

        let sn = snpa(&inst.matrix, 10).unwrap().indices;
        assert_eq!(sorted(sn), truth, "snpa missed on seed {seed}");

        let xr = xray_max(&inst.matrix, 10).unwrap().indices;
        assert_eq!(sorted(xr), truth, "xray missed on seed {seed}");
    }
    println!(
        "criterion 05 PASS: 25/25 exact recoveries for fgnsr, spa, snpa, xray ({:.2}s)",
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn acceptance_06_robustness_dominance_over_the_noise_sweep() {
    let start = Instant::now();
    let levels = sweep_levels();
    let trials = 25u64;

    let mut fg_means = Vec::new();
    let mut spa_means = Vec::new();
    let mut xray_means = Vec::new();
    for &eps in &levels {
        let mut fg = Vec::new();
        let mut sp = Vec::new();
        let mut xr = Vec::new();
        for trial in 0..trials {
            let inst = gen_middlepoint(50, 10, eps, 2000 + trial).unwrap();
            let mut config = SolverConfig::new(10);
            config.maxiter = 1000;
            let fg_idx = solve(&inst.matrix, &config).unwrap().indices;
            fg.push(index_recovery(&fg_idx, &inst.k_true));
            let sp_idx = spa(&inst.matrix, 10).unwrap().indices;
            sp.push(index_recovery(&sp_idx, &inst.k_true));
            let xr_idx = xray_max(&nonneg_for_xray(&inst.matrix), 10).unwrap().indices;
            xr.push(index_recovery(&xr_idx, &inst.k_true));
        }
        fg_means.push(mean(&fg));
        spa_means.push(mean(&sp));
        xray_means.push(mean(&xr));
    }

    assert!(
        (spa_means[0] - 1.0).abs() < 1e-12,
        "SPA should be exact at the lowest level, got {}",
        spa_means[0]
    );
    assert!(
        *spa_means.last().unwrap() <= 0.6,
        "SPA should fall to <= 0.6 at the top level, got {}",
        spa_means.last().unwrap()
    );
    for (k, &eps) in levels.iter().enumerate() {
        assert!(
            fg_means[k] >= spa_means[k],
            "eps {eps}: fgnsr {} < spa {}",
            fg_means[k],
            spa_means[k]
        );
        assert!(
            fg_means[k] >= xray_means[k],
            "eps {eps}: fgnsr {} < xray {}",
            fg_means[k],
            xray_means[k]
        );
    }
    let strict_margin = levels
        .iter()
        .enumerate()
        .any(|(k, _)| spa_means[k] < 0.9 && fg_means[k] - spa_means[k] >= 0.1);
    assert!(strict_margin, "no level shows fgnsr beating degraded SPA by 0.1");

    println!("criterion 06 PASS: mean index recovery over {} levels", levels.len());
    for (k, &eps) in levels.iter().enumerate() {
        println!(
            "    eps {eps:>7.4}: fgnsr {:.3}  spa {:.3}  xray {:.3}",
            fg_means[k], spa_means[k], xray_means[k]
        );
    }
    println!("    ({:.1}s)", start.elapsed().as_secs_f64());
}

#[test]
fn acceptance_07_scaled_data_beats_normalized_spa_on_mrsa() {
    let start = Instant::now();
    let levels = sweep_levels();
    let trials = 25u64;

    for &eps in &levels {
        let mut fg = Vec::new();
        let mut sp = Vec::new();
        for trial in 0..trials {
            let inst = gen_scaled_middlepoint(50, 10, eps, 4.0, 3000 + trial).unwrap();
            let mut config = SolverConfig::new(10);
            config.maxiter = 1000;
            let fg_idx = solve(&inst.matrix, &config).unwrap().indices;
            fg.push(mrsa(&inst.matrix.select_cols(&fg_idx), &inst.w_true).unwrap());
            let sp_idx = spa(&l1_normalized(&inst.matrix), 10).unwrap().indices;
            sp.push(mrsa(&inst.matrix.select_cols(&sp_idx), &inst.w_true).unwrap());
        }
        let fg_mean = mean(&fg);
        let sp_mean = mean(&sp);
        assert!(
            fg_mean <= sp_mean,
            "eps {eps}: fgnsr MRSA {fg_mean} worse than normalized SPA {sp_mean}"
        );
    }
    println!(
        "criterion 07 PASS: unnormalized fgnsr MRSA <= normalized SPA at all {} levels ({:.1}s)",
        levels.len(),
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn acceptance_08_convergence_improves_with_iterations() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    for trial in 0..10 {
        let m = DenseMatrix::from_fn(30, 40, |_, _| rng.gen_range(0.0..1.0));
        let mut config = SolverConfig::new(5);
        config.maxiter = 400;
        config.objective_trace = true;
        let result = solve(&m, &config).unwrap();
        let history = &result.objective_history;
        assert_eq!(history.len(), 401);

        let best_of = |upto: usize| history[..=upto].iter().cloned().fold(f64::INFINITY, f64::min);
        let f0 = history[0];
        let best_100 = best_of(100);
        let best_400 = best_of(400);
        assert!(
            best_100 <= f0 * (1.0 - 1e-6),
            "trial {trial}: no decrease by iteration 100 ({best_100} vs {f0})"
        );
        assert!(
            best_400 <= best_100 * (1.0 - 1e-6),
            "trial {trial}: no decrease between 100 and 400 ({best_400} vs {best_100})"
        );
    }
    println!(
        "criterion 08 PASS: strict best-objective decrease at 100 and 400 iterations ({:.1}s)",
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn acceptance_09_mu_heuristic_balances_the_objective_terms() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let rows = rng.gen_range(6..20);
        let cols = rng.gen_range(6..20);
        let r = rng.gen_range(2..=4.min(rows.min(cols)));
        let m = DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(0.0..1.0));
        let p = default_p(cols);
        let (mu, x0) = estimate_mu(&m, r, &p).unwrap();
        let residual_sq = m.minus(&m.times(&x0)).frob_norm().powi(2);
        let penalty: f64 = (0..cols).map(|i| p[i] * x0.get(i, i)).sum();
        let rel = (mu * penalty - residual_sq).abs() / residual_sq.max(1e-300);
        worst = worst.max(rel);
    }
    assert!(worst <= 1e-10, "heuristic identity off by {worst}");
    println!(
        "criterion 09 PASS: mu * p'diag(X0) matches the residual to {worst:.3e} ({:.2}s)",
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn acceptance_10_selection_is_insensitive_to_mu_scale() {
    let start = Instant::now();
    for seed in 0..10 {
        let inst = gen_middlepoint(50, 10, 0.0, 4000 + seed).unwrap();
        let p = default_p(inst.n());
        let (mu_h, _) = estimate_mu(&inst.matrix, 10, &p).unwrap();
        let mut selections = Vec::new();
        for factor in [0.1, 1.0, 10.0] {
            let mut config = SolverConfig::new(10);
            config.maxiter = 1000;
            config.mu_mode = MuMode::Fixed(mu_h * factor);
            selections.push(sorted(solve(&inst.matrix, &config).unwrap().indices));
        }
        assert_eq!(selections[0], selections[1], "seed {seed}: mu_h/10 changed the selection");
        assert_eq!(selections[1], selections[2], "seed {seed}: 10 mu_h changed the selection");
    }
    println!(
        "criterion 10 PASS: identical selections for mu in {{mu_h/10, mu_h, 10 mu_h}}, 10 seeds ({:.1}s)",
        start.elapsed().as_secs_f64()
    );
}

/// Columns clustered tightly around a handful of endmembers plus a sprinkle
/// of large-norm outliers, the failure mode the centroid scaling is for.
fn planted_outlier_instance(
    seed: u64,
    cols: usize,
) -> (DenseMatrix, DenseMatrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bands = 50;
    let endmembers = 6;
    let basis = DenseMatrix::from_fn(bands, endmembers, |_, _| rng.gen_range(0.2..1.0));
    let outlier_every = 100; // 1% outliers
    let mut data = DenseMatrix::zeros(bands, cols);
    for j in 0..cols {
        if j % outlier_every == 0 {
            for i in 0..bands {
                data.set(i, j, rng.gen_range(0.0..5.0));
            }
        } else {
            let owner = j % endmembers;
            for i in 0..bands {
                let v = basis.get(i, owner) + rng.gen_range(-0.02..0.02);
                data.set(i, j, v.max(0.0));
            }
        }
    }
    (data, basis)
}

#[test]
fn acceptance_11_runtime_and_preselected_pipeline() {
    // single mid-size solve stays within the runtime envelope
    let inst = gen_middlepoint(50, 10, 0.05, 1).unwrap();
    let mut config = SolverConfig::new(10);
    config.maxiter = 1000;
    let t0 = Instant::now();
    let result = solve(&inst.matrix, &config).unwrap();
    let solve_seconds = t0.elapsed().as_secs_f64();
    assert_eq!(result.iterations_run, 1000);
    assert!(
        solve_seconds <= 1.0,
        "a 50x55 solve with 1000 iterations took {solve_seconds:.3}s"
    );

    // large planted instance: preselected solver vs plain SPA on everything
    let start = Instant::now();
    let mut fg_scores = Vec::new();
    let mut spa_scores = Vec::new();
    for seed in 0..5 {
        let (data, basis) = planted_outlier_instance(5000 + seed, 100_000);

        let assignment = simple_split_cluster(&data, 100, seed).unwrap();
        let centroids = centroids_scaled(&data, &assignment).unwrap();
        let mut config = SolverConfig::new(6);
        config.maxiter = 1000;
        config.postprocess = Postprocess::SpaRows;
        let picked = solve(&centroids.matrix, &config).unwrap();
        let original: Vec<usize> = picked
            .indices
            .iter()
            .map(|&k| centroids.representatives[k])
            .collect();
        assert_eq!(original.len(), 6, "seed {seed}: preselected run is deficient");
        fg_scores.push(mrsa(&data.select_cols(&original), &basis).unwrap());

        let full_spa = spa(&data, 6).unwrap().indices;
        spa_scores.push(mrsa(&data.select_cols(&full_spa), &basis).unwrap());
    }
    let fg_mean = mean(&fg_scores);
    let spa_mean = mean(&spa_scores);
    assert!(
        fg_mean <= spa_mean,
        "preselected solver MRSA {fg_mean} worse than full-data SPA {spa_mean}"
    );
    println!(
        "criterion 11 PASS: solve {solve_seconds:.3}s <= 1.0s; planted 100k-column MRSA {fg_mean:.3} (preselected) vs {spa_mean:.3} (SPA) ({:.1}s)",
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn acceptance_12_weighted_residual_identity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(112);
    let mut tested = 0;
    let mut worst = 0.0f64;
    while tested < 20 {
        let bands = rng.gen_range(4..10);
        let cols = rng.gen_range(20..60);
        let clusters = rng.gen_range(3..8);
        let data = DenseMatrix::from_fn(bands, cols, |_, _| rng.gen_range(0.0..1.0));
        let labels: Vec<usize> = (0..cols).map(|_| rng.gen_range(0..clusters)).collect();
        let assignment = match fgnsr::preselect::ClusterAssignment::from_labels(&labels) {
            Ok(a) if a.num_clusters() == clusters => a,
            _ => continue,
        };
        let sc = centroids_scaled(&data, &assignment).unwrap();
        let x = DenseMatrix::from_fn(clusters, clusters, |_, _| rng.gen_range(-0.5..0.5));

        let lhs = sc.matrix.minus(&sc.matrix.times(&x)).frob_norm().powi(2);
        let mut rhs = 0.0;
        for k in 0..clusters {
            let nk = sc.counts[k] as f64;
            let mut diff = 0.0;
            for i in 0..bands {
                let ck = sc.matrix.get(i, k) / nk.sqrt();
                let mut recon = 0.0;
                for j in 0..clusters {
                    let nj = sc.counts[j] as f64;
                    let cj = sc.matrix.get(i, j) / nj.sqrt();
                    recon += (nj.sqrt() / nk.sqrt()) * x.get(j, k) * cj;
                }
                diff += (ck - recon) * (ck - recon);
            }
            rhs += nk * diff;
        }
        worst = worst.max((lhs - rhs).abs() / lhs.max(1e-300));
        tested += 1;
    }
    assert!(worst <= 1e-10, "scaling identity off by {worst}");
    println!(
        "criterion 12 PASS: weighted residual identity holds to {worst:.3e} on 20 instances ({:.2}s)",
        start.elapsed().as_secs_f64()
    );
}
