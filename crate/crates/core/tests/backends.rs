//! Backend-level behavior: spec examples, planted-model recovery, and
//! independent oracles for the regression fits.

use trajcluster::algorithms::{lloyd_from_centers, marginal_log_density};
use trajcluster::dataset::{simulate_pap, Dataset};
use trajcluster::method::{estimate, MethodSpec, Predictor};
use trajcluster::metrics::{adjusted_rand_index, external_metric, internal_metric_value};
use trajcluster::rng::rng_for;
use trajcluster::{ArgValue, Error};

use rand::Rng;
use rand_distr::{Distribution, Normal};

fn spec(method: &str, k: i64) -> MethodSpec {
    MethodSpec::new(method, [("nClusters", ArgValue::Int(k))]).unwrap()
}

fn spec_with(method: &str, k: i64, extra: Vec<(&str, ArgValue)>) -> MethodSpec {
    let mut args: Vec<(&str, ArgValue)> = vec![("nClusters", ArgValue::Int(k))];
    args.extend(extra);
    MethodSpec::new(method, args).unwrap()
}

/// Two planted bundles around `lo` and `hi`, interleaved by index parity.
fn planted_two_level(n: usize, j: usize, lo: f64, hi: f64, noise: f64, seed: u64) -> Dataset {
    let mut rng = rng_for(seed, "planted", 0);
    let normal = Normal::new(0.0, noise).unwrap();
    let mut rows = Vec::new();
    for i in 0..n {
        let level = if i % 2 == 0 { lo } else { hi };
        let id = (i + 1).to_string();
        for t in 1..=j {
            rows.push((id.clone(), t as f64, level + normal.sample(&mut rng)));
        }
    }
    Dataset::from_observations(rows, None).unwrap()
}

fn truth_parity(n: usize) -> Vec<usize> {
    (0..n).map(|i| i % 2).collect()
}

// ---------------------------------------------------------------------------
// kml
// ---------------------------------------------------------------------------

#[test]
fn kml_k1_is_the_grand_mean_curve() {
    let (ds, _) = simulate_pap(30, 6, 2).unwrap();
    let m = estimate(&spec("kml", 1), &ds, 1).unwrap();
    let matrix = ds
        .aligned_matrix(trajcluster::ImputePolicy::CopyMean)
        .unwrap();
    let means = matrix.column_means().unwrap();
    let curve = &m.cluster_trajectories(&matrix.times)[0];
    for (a, b) in curve.iter().zip(&means) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn kml_recovers_a_planted_partition() {
    let ds = planted_two_level(40, 6, 0.0, 10.0, 0.1, 3);
    let m = estimate(&spec("kml", 2), &ds, 5).unwrap();
    let ari = adjusted_rand_index(&m.modal_assignments(), &truth_parity(40));
    assert_eq!(ari, 1.0);
}

#[test]
fn kml_coclusters_duplicated_trajectories() {
    // 8 trajectories: 4 duplicate pairs at two separated levels. The optimal
    // 2-partition (verified by enumerating all 2^8 assignments) co-clusters
    // each pair; kml must find it.
    let mut rows = Vec::new();
    let levels = [0.0, 0.2, 10.0, 10.4];
    for (p, &level) in levels.iter().enumerate() {
        for copy in 0..2 {
            let id = format!("{}", p * 2 + copy + 1);
            for t in 1..=4 {
                rows.push((id.clone(), t as f64, level + 0.01 * t as f64));
            }
        }
    }
    let ds = Dataset::from_observations(rows, None).unwrap();
    let m = estimate(&spec("kml", 2), &ds, 1).unwrap();
    let assign = m.modal_assignments();

    // Brute-force oracle: best within-SS over all 2-partitions of 8 rows.
    let matrix = ds
        .aligned_matrix(trajcluster::ImputePolicy::FailOnMissing)
        .unwrap();
    let ss_of = |mask: u32| -> f64 {
        let mut total = 0.0;
        for cluster in 0..2u32 {
            let members: Vec<&Vec<f64>> = (0..8)
                .filter(|i| (mask >> i) & 1 == cluster)
                .map(|i| &matrix.values[i])
                .collect();
            if members.is_empty() {
                return f64::INFINITY;
            }
            let dims = members[0].len();
            for d in 0..dims {
                let mean: f64 = members.iter().map(|r| r[d]).sum::<f64>() / members.len() as f64;
                total += members.iter().map(|r| (r[d] - mean).powi(2)).sum::<f64>();
            }
        }
        total
    };
    let best_mask = (0..256u32)
        .min_by(|&a, &b| ss_of(a).partial_cmp(&ss_of(b)).unwrap())
        .unwrap();
    let oracle: Vec<usize> = (0..8).map(|i| ((best_mask >> i) & 1) as usize).collect();
    assert_eq!(adjusted_rand_index(&assign, &oracle), 1.0);
    // And each duplicate pair sits together.
    for p in 0..4 {
        assert_eq!(assign[2 * p], assign[2 * p + 1]);
    }
}

#[test]
fn kmeans_within_ss_with_augmented_centers_never_worse() {
    let (ds, _) = simulate_pap(60, 8, 4).unwrap();
    let matrix = ds
        .aligned_matrix(trajcluster::ImputePolicy::CopyMean)
        .unwrap();
    let k3 = trajcluster::algorithms::kmeans(&matrix.values, 3, 10, 100, 7).unwrap();
    // Seed a K+1 run with the K solution's centers plus the farthest point.
    let mut centers = k3.centers.clone();
    let far = matrix
        .values
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| {
            let da: f64 = centers
                .iter()
                .map(|c| a.iter().zip(c).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            let db: f64 = centers
                .iter()
                .map(|c| b.iter().zip(c).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            da.partial_cmp(&db).unwrap()
        })
        .map(|(i, _)| i)
        .unwrap();
    centers.push(matrix.values[far].clone());
    let k4 = lloyd_from_centers(&matrix.values, centers, 100);
    assert!(k4.within_ss <= k3.within_ss + 1e-9);
}

// ---------------------------------------------------------------------------
// lmkm
// ---------------------------------------------------------------------------

#[test]
fn lmkm_coefficients_match_the_normal_equations_oracle() {
    // Closed-form simple linear regression per trajectory.
    let (ds, _) = simulate_pap(25, 9, 5).unwrap();
    let m = estimate(
        &spec_with("lmkm", 25, vec![("standardize", ArgValue::Bool(false))]),
        &ds,
        2,
    )
    .unwrap();
    // K = N: every trajectory its own cluster, so each cluster's coefficient
    // vector is one trajectory's OLS fit.
    let coef = match m.predictor() {
        Predictor::Polynomial { coef } => coef.clone(),
        other => panic!("unexpected predictor {other:?}"),
    };
    let assign = m.modal_assignments();
    for (traj, &k) in ds.trajectories().iter().zip(&assign) {
        let n = traj.times.len() as f64;
        let tbar = traj.times.iter().sum::<f64>() / n;
        let ybar = traj.values.iter().sum::<f64>() / n;
        let sxy: f64 = traj
            .times
            .iter()
            .zip(&traj.values)
            .map(|(&t, &y)| (t - tbar) * (y - ybar))
            .sum();
        let sxx: f64 = traj.times.iter().map(|&t| (t - tbar) * (t - tbar)).sum();
        let slope = sxy / sxx;
        let intercept = ybar - slope * tbar;
        assert!((coef[k][0] - intercept).abs() < 1e-8, "intercept");
        assert!((coef[k][1] - slope).abs() < 1e-8, "slope");
    }
}

#[test]
fn lmkm_identical_trajectories_flag_degenerate_clusters() {
    let mut rows = Vec::new();
    for i in 0..6 {
        let id = (i + 1).to_string();
        for t in 1..=4 {
            rows.push((id.clone(), t as f64, 2.0 + 0.5 * t as f64));
        }
    }
    let ds = Dataset::from_observations(rows, None).unwrap();
    let m = estimate(&spec("lmkm", 2), &ds, 1).unwrap();
    // All coefficients identical, so the solution is degenerate: either a
    // cluster is empty (flagged) or the two clusters are duplicates with the
    // same coefficient vector.
    let duplicate = match m.predictor() {
        Predictor::Polynomial { coef } => {
            coef[0]
                .iter()
                .zip(&coef[1])
                .all(|(a, b)| (a - b).abs() < 1e-9)
        }
        _ => false,
    };
    assert!(
        m.has_empty_clusters() || duplicate,
        "expected an empty or duplicate cluster; sizes {:?}",
        m.cluster_sizes()
    );
}

#[test]
fn lmkm_requires_enough_distinct_times() {
    // One observation per trajectory cannot support a degree-1 design.
    let rows = vec![
        ("a".to_string(), 1.0, 2.0),
        ("b".to_string(), 1.0, 3.0),
    ];
    let ds = Dataset::from_observations(rows, None).unwrap();
    match estimate(&spec("lmkm", 1), &ds, 1).unwrap_err() {
        Error::DegenerateTrajectory { id, .. } => assert_eq!(id, "a"),
        other => panic!("unexpected error {other:?}"),
    }
}

#[test]
fn lmkm_two_cluster_split_separates_the_adherent_majority() {
    let (ds, _) = simulate_pap(301, 13, 1).unwrap();
    let m = estimate(&spec("lmkm", 2), &ds, 1).unwrap();
    // The stable high-usage group (53.8% of patients) against everyone else.
    let p = m.proportions();
    assert!((p[0] - 0.538).abs() < 0.05, "major share {}", p[0]);
    assert!((p[1] - 0.462).abs() < 0.05, "minor share {}", p[1]);
}

#[test]
fn lmkm_three_cluster_shapes_are_interpretable() {
    let (ds, _) = simulate_pap(301, 13, 1).unwrap();
    let m = estimate(&spec("lmkm", 3), &ds, 1).unwrap();
    let curves = m.cluster_trajectories(&[1.0, 13.0]);
    let mut flat_low = 0;
    let mut flat_high = 0;
    let mut rising = 0;
    for c in &curves {
        let slope = (c[1] - c[0]) / 12.0;
        if slope > 0.15 {
            rising += 1;
        } else if c[0] > 4.0 {
            flat_high += 1;
        } else {
            flat_low += 1;
        }
    }
    assert_eq!((flat_low, rising, flat_high), (1, 1, 1));
}

// ---------------------------------------------------------------------------
// gbtm
// ---------------------------------------------------------------------------

#[test]
fn gbtm_k1_equals_pooled_ols() {
    let (ds, _) = simulate_pap(80, 10, 7).unwrap();
    let m = estimate(&spec("gbtm", 1), &ds, 3).unwrap();
    let coef = match m.predictor() {
        Predictor::Polynomial { coef } => coef.clone(),
        other => panic!("unexpected predictor {other:?}"),
    };
    // Pooled OLS oracle over all observations.
    let obs: Vec<(f64, f64)> = ds.observations().map(|(_, t, y)| (t, y)).collect();
    let n = obs.len() as f64;
    let tbar = obs.iter().map(|(t, _)| t).sum::<f64>() / n;
    let ybar = obs.iter().map(|(_, y)| y).sum::<f64>() / n;
    let sxy: f64 = obs.iter().map(|(t, y)| (t - tbar) * (y - ybar)).sum();
    let sxx: f64 = obs.iter().map(|(t, _)| (t - tbar) * (t - tbar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * tbar;
    assert!((coef[0][0] - intercept).abs() < 1e-6);
    assert!((coef[0][1] - slope).abs() < 1e-6);

    // Log-likelihood equals the Gaussian OLS likelihood with the ML variance.
    let sse: f64 = obs
        .iter()
        .map(|(t, y)| (y - intercept - slope * t).powi(2))
        .sum();
    let sigma2 = sse / n;
    let expect_ll = -0.5 * n * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0);
    assert!((m.log_likelihood().unwrap() - expect_ll).abs() < 1e-6);
}

#[test]
fn gbtm_recovers_a_planted_two_line_mixture() {
    // Intercepts 1 and 6, noise SD 0.3, N = 60.
    let mut rng = rng_for(11, "planted-gbtm", 0);
    let noise = Normal::new(0.0, 0.3).unwrap();
    let mut rows = Vec::new();
    for i in 0..60 {
        let (b0, b1) = if i % 2 == 0 { (1.0, 0.5) } else { (6.0, -0.25) };
        let id = (i + 1).to_string();
        for t in 1..=8 {
            let t = t as f64;
            rows.push((id.clone(), t, b0 + b1 * t + noise.sample(&mut rng)));
        }
    }
    let ds = Dataset::from_observations(rows, None).unwrap();
    let m = estimate(&spec("gbtm", 2), &ds, 9).unwrap();
    assert!(m.converged());
    let ari = adjusted_rand_index(&m.modal_assignments(), &truth_parity(60));
    assert_eq!(ari, 1.0);
    let coef = match m.predictor() {
        Predictor::Polynomial { coef } => coef.clone(),
        other => panic!("unexpected predictor {other:?}"),
    };
    // Clusters are proportion-ordered; match each planted line to a cluster.
    for (b0, b1) in [(1.0, 0.5), (6.0, -0.25)] {
        let hit = coef
            .iter()
            .any(|c| (c[0] - b0).abs() < 0.1 && (c[1] - b1).abs() < 0.1);
        assert!(hit, "planted line ({b0}, {b1}) not recovered: {coef:?}");
    }
}

#[test]
fn gbtm_variance_collapse_reports_non_convergence() {
    // Noise-free linear data: the residual variance collapses below the
    // floor on every restart, which is reported, not raised.
    let mut rows = Vec::new();
    for i in 0..10 {
        let id = (i + 1).to_string();
        for t in 1..=5 {
            rows.push((id.clone(), t as f64, 2.0 + 0.5 * t as f64));
        }
    }
    let ds = Dataset::from_observations(rows, None).unwrap();
    let m = estimate(&spec("gbtm", 1), &ds, 1).unwrap();
    assert!(!m.converged());
}

#[test]
fn stratify_median_centers_match_pointwise_medians() {
    let rows = vec![
        ("a".to_string(), 1.0, 1.0),
        ("b".to_string(), 1.0, 2.0),
        ("c".to_string(), 1.0, 9.0),
        ("a".to_string(), 2.0, 1.5),
        ("b".to_string(), 2.0, 2.5),
        ("c".to_string(), 2.0, 9.5),
    ];
    let ds = Dataset::from_observations(rows, None).unwrap();
    let m = estimate(
        &MethodSpec::new(
            "stratify",
            [
                ("rule", ArgValue::from("mean >= -1e18")),
                ("center", ArgValue::from("median")),
            ],
        )
        .unwrap(),
        &ds,
        1,
    )
    .unwrap();
    // One stratum: the center is the pointwise median (2.0, 2.5).
    let curve = m.cluster_trajectories(&[1.0, 2.0]);
    assert_eq!(curve[0], vec![2.0, 2.5]);
}

#[test]
fn gbtm_log_likelihood_trace_is_monotone() {
    let (ds, _) = simulate_pap(60, 8, 12).unwrap();
    let m = estimate(&spec("gbtm", 3), &ds, 4).unwrap();
    let trace = m.ll_trace();
    assert!(trace.len() >= 2);
    for w in trace.windows(2) {
        assert!(w[1] >= w[0] - 1e-8, "trace decreased: {trace:?}");
    }
}

#[test]
fn gbtm_supports_cluster_specific_variances() {
    let (ds, _) = simulate_pap(60, 8, 3).unwrap();
    let shared = estimate(&spec("gbtm", 2), &ds, 5).unwrap();
    let per_cluster = estimate(
        &spec_with("gbtm", 2, vec![("clusterVariances", ArgValue::Bool(true))]),
        &ds,
        5,
    )
    .unwrap();
    // One extra variance parameter.
    assert_eq!(
        per_cluster.n_params().unwrap(),
        shared.n_params().unwrap() + 1
    );
    assert!(per_cluster.log_likelihood().unwrap() >= shared.log_likelihood().unwrap() - 1e-6);
}

// ---------------------------------------------------------------------------
// gmm
// ---------------------------------------------------------------------------

#[test]
fn gmm_marginal_density_matches_dense_covariance_oracle() {
    // Brute-force oracle: build V = s2e I + s2u 11', Cholesky-factor it, and
    // evaluate the multivariate normal log-density directly.
    fn dense_oracle(resid: &[f64], s2e: f64, s2u: f64) -> f64 {
        let j = resid.len();
        let mut v = vec![vec![0.0; j]; j];
        for (r, row) in v.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = s2u + if r == c { s2e } else { 0.0 };
            }
        }
        // Cholesky.
        let mut l = vec![vec![0.0; j]; j];
        for i in 0..j {
            for c in 0..=i {
                let mut s = v[i][c];
                for (lik, lck) in l[i][..c].iter().zip(&l[c][..c]) {
                    s -= lik * lck;
                }
                if i == c {
                    l[i][c] = s.sqrt();
                } else {
                    l[i][c] = s / l[c][c];
                }
            }
        }
        let logdet: f64 = 2.0 * l.iter().enumerate().map(|(i, r)| r[i].ln()).sum::<f64>();
        // Solve L z = resid.
        let mut z = vec![0.0; j];
        for i in 0..j {
            let mut s = resid[i];
            for k in 0..i {
                s -= l[i][k] * z[k];
            }
            z[i] = s / l[i][i];
        }
        let quad: f64 = z.iter().map(|x| x * x).sum();
        -0.5 * (j as f64 * (2.0 * std::f64::consts::PI).ln() + logdet + quad)
    }

    let mut rng = rng_for(5, "oracle", 0);
    for _ in 0..50 {
        let j = rng.random_range(1..=13);
        let resid: Vec<f64> = (0..j).map(|_| rng.random_range(-3.0..3.0)).collect();
        let s2e = rng.random_range(0.05..4.0);
        let s2u = rng.random_range(0.0..3.0);
        let fast = marginal_log_density(&resid, s2e, s2u);
        let slow = dense_oracle(&resid, s2e, s2u);
        assert!(
            (fast - slow).abs() < 1e-8,
            "j={j} s2e={s2e} s2u={s2u}: {fast} vs {slow}"
        );
    }
}

#[test]
fn gmm_without_random_intercept_matches_gbtm_likelihood() {
    let (ds, _) = simulate_pap(50, 8, 6).unwrap();
    // Tight tolerance so both optimizers converge to the same optimum.
    let gbtm = estimate(
        &spec_with("gbtm", 2, vec![("tol", ArgValue::Real(1e-12))]),
        &ds,
        4,
    )
    .unwrap();
    let gmm0 = estimate(
        &spec_with(
            "gmm",
            2,
            vec![
                ("randomIntercept", ArgValue::Bool(false)),
                ("tol", ArgValue::Real(1e-12)),
            ],
        ),
        &ds,
        4,
    )
    .unwrap();
    let diff = (gbtm.log_likelihood().unwrap() - gmm0.log_likelihood().unwrap()).abs();
    assert!(diff < 1e-6, "log-likelihoods differ by {diff}");
}

#[test]
fn gmm_on_zero_variance_intercept_data_tracks_gbtm() {
    // Data whose between-trajectory dispersion is exactly zero: every
    // trajectory in a group follows its line plus one of two fixed zero-mean
    // residual patterns, so the in-sample random-intercept variance is zero
    // and the marginal model reduces to the fixed-effects mixture.
    let pattern_a = [0.30, -0.20, 0.25, -0.35, 0.10, -0.10];
    let pattern_b = [-0.30, 0.20, -0.25, 0.35, -0.10, 0.10];
    let mut rows = Vec::new();
    for i in 0..40 {
        let level = if i % 2 == 0 { 1.0 } else { 6.0 };
        let pattern = if i % 4 < 2 { &pattern_a } else { &pattern_b };
        let id = (i + 1).to_string();
        for (j, &p) in pattern.iter().enumerate() {
            rows.push((id.clone(), (j + 1) as f64, level + p));
        }
    }
    let ds = Dataset::from_observations(rows, None).unwrap();
    let gbtm = estimate(&spec("gbtm", 2), &ds, 2).unwrap();
    // EM approaches the sigma_u = 0 boundary harmonically, so give it room.
    let gmm = estimate(
        &spec_with(
            "gmm",
            2,
            vec![
                ("maxIter", ArgValue::Int(30_000)),
                ("nstart", ArgValue::Int(2)),
            ],
        ),
        &ds,
        2,
    )
    .unwrap();
    let diff = (gbtm.log_likelihood().unwrap() - gmm.log_likelihood().unwrap()).abs();
    assert!(diff < 1e-3, "log-likelihoods differ by {diff}");
}

#[test]
fn gmm_k1_recovers_variance_components() {
    // Random-intercept data: N = 200, J = 13, sigma_u = 1.0, sigma_e = 0.5.
    let mut rng = rng_for(21, "gmm-sim", 0);
    let u_draw = Normal::new(0.0, 1.0).unwrap();
    let e_draw = Normal::new(0.0, 0.5).unwrap();
    let mut rows = Vec::new();
    for i in 0..200 {
        let id = (i + 1).to_string();
        let u = u_draw.sample(&mut rng);
        for t in 1..=13 {
            let t = t as f64;
            rows.push((id.clone(), t, 2.0 + 0.3 * t + u + e_draw.sample(&mut rng)));
        }
    }
    let ds = Dataset::from_observations(rows, None).unwrap();
    let m = estimate(&spec("gmm", 1), &ds, 7).unwrap();
    assert!(m.converged());
    // Recover the components from the fitted model's log-likelihood geometry:
    // re-derive them by scanning the marginal likelihood is overkill; the
    // model exposes them through n_params + ll only, so check the implied
    // fit quality instead: residual variance of fitted values should match
    // sigma_u^2 + sigma_e^2 within 20 percent, and the trace must be monotone.
    let resid = m.residuals().unwrap();
    let var = resid.iter().map(|r| r * r).sum::<f64>() / resid.len() as f64;
    let total = 1.0f64.powi(2) + 0.5f64.powi(2);
    assert!(
        (var - total).abs() / total < 0.2,
        "total variance {var} vs expected {total}"
    );
    for w in m.ll_trace().windows(2) {
        assert!(w[1] >= w[0] - 1e-8);
    }
}

#[test]
fn gmm_trace_is_monotone_on_pap_data() {
    let (ds, _) = simulate_pap(80, 13, 3).unwrap();
    let m = estimate(&spec("gmm", 3), &ds, 8).unwrap();
    let trace = m.ll_trace();
    assert!(trace.len() >= 2);
    for w in trace.windows(2) {
        assert!(w[1] >= w[0] - 1e-8, "trace decreased: {trace:?}");
    }
}

// ---------------------------------------------------------------------------
// kmedoids
// ---------------------------------------------------------------------------

#[test]
fn kmedoids_equals_n_puts_every_point_on_its_own_medoid() {
    let ds = planted_two_level(6, 4, 0.0, 8.0, 0.2, 2);
    let m = estimate(&spec("kmedoids", 6), &ds, 1).unwrap();
    assert_eq!(m.k(), 6);
    let sizes = m.cluster_sizes();
    assert!(sizes.iter().all(|&s| s == 1));
}

#[test]
fn kmedoids_euclidean_recovers_planted_partition() {
    let ds = planted_two_level(40, 6, 0.0, 10.0, 0.1, 9);
    let m = estimate(&spec("kmedoids", 2), &ds, 1).unwrap();
    assert_eq!(
        adjusted_rand_index(&m.modal_assignments(), &truth_parity(40)),
        1.0
    );
}

#[test]
fn kmedoids_dtw_handles_unequal_lengths() {
    let rows = vec![
        ("a".to_string(), 1.0, 0.0),
        ("a".to_string(), 2.0, 0.1),
        ("b".to_string(), 1.0, 0.05),
        ("b".to_string(), 2.0, 0.0),
        ("b".to_string(), 3.0, 0.1),
        ("c".to_string(), 1.0, 9.0),
        ("c".to_string(), 2.0, 9.1),
        ("d".to_string(), 1.0, 9.2),
        ("d".to_string(), 2.0, 9.0),
        ("d".to_string(), 3.0, 9.1),
    ];
    let ds = Dataset::from_observations(rows, None).unwrap();
    let m = estimate(
        &spec_with("kmedoids", 2, vec![("distance", ArgValue::from("dtw"))]),
        &ds,
        1,
    )
    .unwrap();
    let assign = m.modal_assignments();
    assert_eq!(assign[0], assign[1]);
    assert_eq!(assign[2], assign[3]);
    assert_ne!(assign[0], assign[2]);
}

#[test]
fn kmedoids_respects_the_capacity_cap() {
    let (ds, _) = simulate_pap(30, 4, 1).unwrap();
    match estimate(
        &spec_with("kmedoids", 2, vec![("distanceCap", ArgValue::Int(10))]),
        &ds,
        1,
    )
    .unwrap_err()
    {
        Error::Capacity { n, cap } => {
            assert_eq!(n, 30);
            assert_eq!(cap, 10);
        }
        other => panic!("unexpected error {other:?}"),
    }
}

// ---------------------------------------------------------------------------
// stratify
// ---------------------------------------------------------------------------

#[test]
fn stratify_threshold_example() {
    // Means {3, 5, 5} with rule mean > 4 -> clusters of sizes (1, 2).
    let rows = vec![
        ("a".to_string(), 1.0, 3.0),
        ("a".to_string(), 2.0, 3.0),
        ("b".to_string(), 1.0, 5.0),
        ("b".to_string(), 2.0, 5.0),
        ("c".to_string(), 1.0, 5.0),
        ("c".to_string(), 2.0, 5.0),
    ];
    let ds = Dataset::from_observations(rows, None).unwrap();
    let m = estimate(
        &MethodSpec::new("stratify", [("rule", ArgValue::from("mean > 4"))]).unwrap(),
        &ds,
        1,
    )
    .unwrap();
    assert_eq!(m.cluster_sizes(), vec![1, 2]);
    // Stratum order: false first, letters in stratum order.
    assert_eq!(m.cluster_names(), &["A", "B"]);
    assert_eq!(m.proportions(), &[1.0 / 3.0, 2.0 / 3.0]);
}

#[test]
fn stratify_on_pap_data_splits_near_the_documented_proportions() {
    let (ds, _) = simulate_pap(301, 13, 1).unwrap();
    let m = estimate(
        &MethodSpec::new("stratify", [("rule", ArgValue::from("mean > 4"))]).unwrap(),
        &ds,
        1,
    )
    .unwrap();
    assert_eq!(m.k(), 2);
    assert!(
        (m.proportions()[0] - 0.316).abs() < 0.05,
        "below-threshold share {}",
        m.proportions()[0]
    );
    assert!((m.proportions()[1] - 0.684).abs() < 0.05);
}

#[test]
fn stratify_cut_matches_histogram_oracle() {
    let (ds, _) = simulate_pap(50, 6, 4).unwrap();
    let m = estimate(
        &MethodSpec::new("stratify", [("rule", ArgValue::from("cut(mean, 3)"))]).unwrap(),
        &ds,
        1,
    )
    .unwrap();
    // Histogram oracle: equal-width bins over the trajectory means.
    let means: Vec<f64> = ds
        .trajectories()
        .iter()
        .map(|t| t.values.iter().sum::<f64>() / t.values.len() as f64)
        .collect();
    let lo = means.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / 3.0;
    let mut counts = [0usize; 3];
    for &v in &means {
        let b = (((v - lo) / width).floor() as usize).min(2);
        counts[b] += 1;
    }
    let sizes = m.cluster_sizes();
    let expected: Vec<usize> = counts.iter().copied().filter(|&c| c > 0).collect();
    assert_eq!(sizes, expected);
    // Rerun reproduces identical bin edges (deterministic labels).
    let again = estimate(
        &MethodSpec::new("stratify", [("rule", ArgValue::from("cut(mean, 3)"))]).unwrap(),
        &ds,
        99,
    )
    .unwrap();
    assert_eq!(m.postprob(), again.postprob());
}

#[test]
fn stratify_unknown_variable_is_a_rule_error() {
    let (ds, _) = simulate_pap(10, 4, 1).unwrap();
    let err = estimate(
        &MethodSpec::new("stratify", [("rule", ArgValue::from("median > 2"))]).unwrap(),
        &ds,
        1,
    )
    .unwrap_err();
    assert!(matches!(err, Error::Rule(_)));
}

// ---------------------------------------------------------------------------
// random
// ---------------------------------------------------------------------------

#[test]
fn random_partition_is_reproducible_and_null() {
    let (ds, truth) = simulate_pap(100, 5, 6).unwrap();
    let a = estimate(&spec("random", 3), &ds, 42).unwrap();
    let b = estimate(&spec("random", 3), &ds, 42).unwrap();
    assert_eq!(a.postprob(), b.postprob());

    let k1 = estimate(&spec("random", 1), &ds, 1).unwrap();
    assert_eq!(k1.cluster_sizes(), vec![100]);

    // Monte Carlo null: mean ARI vs truth over 200 seeds is near zero.
    let truth_idx: Vec<usize> = ds
        .ids()
        .map(|id| {
            truth
                .group_names()
                .iter()
                .position(|g| g == truth.label_of(id).unwrap())
                .unwrap()
        })
        .collect();
    let mut total = 0.0;
    for seed in 0..200 {
        let m = estimate(&spec("random", 3), &ds, seed).unwrap();
        total += adjusted_rand_index(&m.modal_assignments(), &truth_idx);
    }
    let mean = total / 200.0;
    assert!(mean.abs() < 0.05, "mean ARI {mean}");
}

// ---------------------------------------------------------------------------
// feature
// ---------------------------------------------------------------------------

#[test]
fn feature_with_coef_kmeans_equals_lmkm_without_standardization() {
    let (ds, _) = simulate_pap(80, 10, 2).unwrap();
    let lmkm = estimate(
        &spec_with("lmkm", 3, vec![("standardize", ArgValue::Bool(false))]),
        &ds,
        5,
    )
    .unwrap();
    let feature = estimate(&spec("feature", 3), &ds, 5).unwrap();
    assert_eq!(
        adjusted_rand_index(&lmkm.modal_assignments(), &feature.modal_assignments()),
        1.0
    );
}

#[test]
fn feature_with_mean_threshold_equals_stratify() {
    let (ds, _) = simulate_pap(60, 6, 3).unwrap();
    let strat = estimate(
        &MethodSpec::new("stratify", [("rule", ArgValue::from("mean > 4"))]).unwrap(),
        &ds,
        1,
    )
    .unwrap();
    let feature = estimate(
        &spec_with(
            "feature",
            2,
            vec![
                ("representation", ArgValue::from("mean")),
                ("clusterer", ArgValue::from("threshold")),
                ("threshold", ArgValue::Real(4.0)),
            ],
        ),
        &ds,
        1,
    )
    .unwrap();
    assert_eq!(
        adjusted_rand_index(&strat.modal_assignments(), &feature.modal_assignments()),
        1.0
    );
}

#[test]
fn feature_constant_representation_collapses_to_one_cluster() {
    let (ds, _) = simulate_pap(20, 4, 1).unwrap();
    trajcluster::algorithms::register_representation(
        "constant",
        std::sync::Arc::new(|_, ds| Ok(vec![vec![1.0]; ds.n_trajectories()])),
    );
    let m = estimate(
        &spec_with(
            "feature",
            2,
            vec![("representation", ArgValue::from("constant"))],
        ),
        &ds,
        1,
    )
    .unwrap();
    // Identical rows: k-means cannot separate them, so a single effective
    // cluster remains.
    assert!(
        m.k() == 1 || m.has_empty_clusters(),
        "k={} sizes {:?}",
        m.k(),
        m.cluster_sizes()
    );
}

#[test]
fn custom_method_registration_runs_through_the_pipeline() {
    struct Midpoint;
    impl trajcluster::method::MethodBackend for Midpoint {
        fn name(&self) -> &str {
            "midpoint"
        }
        fn defaults(&self) -> Vec<(&'static str, ArgValue)> {
            vec![("threshold", ArgValue::Real(4.0))]
        }
        fn fit(
            &self,
            ctx: &trajcluster::method::FitContext<'_>,
        ) -> trajcluster::Result<trajcluster::method::FitOutput> {
            let threshold = ctx.spec.real("threshold").unwrap_or(4.0);
            let assignments: Vec<usize> = ctx
                .dataset
                .trajectories()
                .iter()
                .map(|t| usize::from(t.values[0] > threshold))
                .collect();
            let postprob = assignments
                .iter()
                .map(|&a| {
                    let mut row = vec![0.0; 2];
                    row[a] = 1.0;
                    row
                })
                .collect();
            Ok(trajcluster::method::FitOutput::hard(
                postprob,
                Predictor::Polynomial {
                    coef: vec![vec![0.0, 0.0], vec![5.0, 0.0]],
                },
                true,
            ))
        }
    }
    trajcluster::method::register_method(std::sync::Arc::new(Midpoint));
    assert!(trajcluster::method::method_names().contains(&"midpoint".to_string()));
    let (ds, _) = simulate_pap(20, 4, 2).unwrap();
    let m = estimate(
        &MethodSpec::new("midpoint", Vec::<(&str, ArgValue)>::new()).unwrap(),
        &ds,
        1,
    )
    .unwrap();
    assert_eq!(m.k(), 2);
}

// ---------------------------------------------------------------------------
// order invariance
// ---------------------------------------------------------------------------

#[test]
fn backends_are_invariant_to_input_row_order() {
    let (ds, _) = simulate_pap(30, 6, 9).unwrap();
    // Reverse the observation stream; canonicalization restores one order.
    let rows: Vec<(String, f64, f64)> = ds
        .observations()
        .map(|(id, t, v)| (id.to_string(), t, v))
        .collect();
    let reversed =
        Dataset::from_observations(rows.into_iter().rev().collect::<Vec<_>>(), None).unwrap();
    assert_eq!(ds.trajectories(), reversed.trajectories());
    for method in ["kml", "lmkm", "gbtm", "gmm", "kmedoids"] {
        let a = estimate(&spec(method, 2), &ds, 3).unwrap();
        let b = estimate(&spec(method, 2), &reversed, 3).unwrap();
        assert_eq!(a.postprob(), b.postprob(), "{method}");
    }
}

#[test]
fn dunn_and_asw_are_available_for_separated_fits() {
    let (ds, _) = simulate_pap(301, 13, 1).unwrap();
    let m = estimate(&spec("kml", 5), &ds, 1).unwrap();
    let dunn = internal_metric_value(&m, "Dunn").unwrap().unwrap();
    let asw = internal_metric_value(&m, "ASW").unwrap().unwrap();
    assert!(dunn > 0.0);
    assert!((-1.0..=1.0).contains(&asw));
    let wmmae_self = external_metric(&m, &m, "WMMAE").unwrap().unwrap();
    assert_eq!(wmmae_self, 0.0);
}
