use ppics_core::entropy::{gaussian_reference_entropy, EntropyConfig};
use ppics_core::linalg::{least_squares, orthogonal_from_gaussian, Matrix};
use ppics_core::optimizer::{local_pp, permute_components, OptimizerConfig, Termination};
use ppics_core::pipeline::{
    enumerate_starts, ics_rotate, prewhiten, recover_b, run_pipeline, Mode, PipelineConfig,
    StartPolicy,
};
use ppics_core::scatter::{center, DataSet, ScatterConfig};
use ppics_core::synthetic::{generate, recovery_score, three_clusters, Mixing};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{StandardNormal, StudentT};

fn gaussian(n: usize, p: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn heavy_tailed_coordinate_lands_on_an_extreme_invariant_coordinate() {
    let t3 = StudentT::new(3.0).unwrap();
    let mut hits = 0;
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut latent = gaussian(400, 5, &mut rng);
        for i in 0..400 {
            latent[(i, 2)] = rng.sample(t3);
        }
        let mix = orthogonal_from_gaussian(&gaussian(5, 5, &mut rng)).unwrap();
        let raw = DataSet::new(latent.matmul_t(&mix)).unwrap();
        let (pre, _) = prewhiten(&center(&raw).unwrap()).unwrap();
        let (ics, _) = ics_rotate(&pre, &ScatterConfig::default()).unwrap();
        let source = latent.column(2);
        let first = correlation(&source, &ics.rows().column(0)).abs();
        let last = correlation(&source, &ics.rows().column(4)).abs();
        if first.max(last) > 0.9 {
            hits += 1;
        }
    }
    assert!(hits > 5, "{hits}/10");
}

#[test]
fn recover_b_finds_a_planted_transform() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = gaussian(60, 4, &mut rng);
    let m = Matrix::from_fn(4, 4, |i, j| {
        rng.random_range(-1.0..1.0) + if i == j { 2.0 } else { 0.0 }
    });
    let b = recover_b(&x, &x.matmul(&m)).unwrap();
    assert!(b.sub(&m).max_abs() < 1e-8);

    // Normal-equation oracle on the same problem.
    let xtx = x.t_matmul(&x);
    let rhs = x.t_matmul(&x.matmul(&m));
    let via_normal = least_squares(&xtx, &rhs).unwrap();
    assert!(b.sub(&via_normal).max_abs() < 1e-8);
}

#[test]
fn gaussian_runs_reach_the_threshold() {
    let mut converged = 0;
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let data = DataSet::new(gaussian(200, 5, &mut rng)).unwrap();
        let res = local_pp(&data, 2, &OptimizerConfig::default()).unwrap();
        let trace = &res.trace;
        assert!(trace.records.iter().all(|r| r.h_after < r.h_before));
        if trace.termination == Termination::GradientBelowThreshold {
            assert!(trace.final_grad_norm_sq < 1e-11);
            converged += 1;
        }
    }
    assert!(converged >= 9, "{converged}/10");
}

#[test]
fn initial_entropies_sit_below_the_gaussian_envelope() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let raw = DataSet::new(gaussian(500, 6, &mut rng)).unwrap();
    let mut cfg = PipelineConfig::new(2);
    cfg.mode = Mode::IcsOnly;
    let res = run_pipeline(&raw, &cfg).unwrap();
    let reference = gaussian_reference_entropy(2, &EntropyConfig::default());
    assert_eq!(res.per_start.len(), 15);
    for s in &res.per_start {
        assert!(
            s.initial_h <= reference + 0.1,
            "{:?}: {}",
            s.indices,
            s.initial_h
        );
    }
}

#[test]
fn cluster_start_descends_monotonically() {
    let truth = generate(&three_clusters(4)).unwrap();
    let mut cfg = PipelineConfig::new(2);
    cfg.mode = Mode::IcsOnly;
    let ics = run_pipeline(&truth.data, &cfg).unwrap();
    let best_pair = ics.per_start[0].indices.clone();
    let start = DataSet::new(ics.ics_coordinates.unwrap()).unwrap();
    let start = permute_components(&start, &best_pair).unwrap();
    let res = local_pp(&start, 2, &OptimizerConfig::default()).unwrap();
    assert!(res.final_h < res.initial_h);
    assert!(res.trace.records.iter().all(|r| r.h_after < r.h_before));
    assert!(res
        .trace
        .records
        .iter()
        .all(|r| r.h_before - r.h_after >= r.acceptance_delta() / 3.0));
}

#[test]
fn pipeline_is_deterministic() {
    let mut spec = three_clusters(9);
    spec.n = 150;
    spec.p = 5;
    let truth = generate(&spec).unwrap();
    let mut cfg = PipelineConfig::new(2);
    cfg.starts = StartPolicy::IcsAdjacent;
    let a = run_pipeline(&truth.data, &cfg).unwrap();
    let b = run_pipeline(&truth.data, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        a.per_start.len(),
        enumerate_starts(5, 2, &cfg.starts).unwrap().len()
    );
}

#[test]
fn invariant_coordinates_ignore_affine_mixing() {
    let mut spec = three_clusters(21);
    spec.mixing = Mixing::None;
    let truth = generate(&spec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let a = Matrix::from_fn(8, 8, |i, j| {
        rng.random_range(-1.0..1.0) + if i == j { 1.5 } else { 0.0 }
    });
    let mixed = DataSet::new(truth.data.rows().matmul_t(&a)).unwrap();

    let mut cfg = PipelineConfig::new(2);
    cfg.mode = Mode::IcsOnly;
    let plain = run_pipeline(&truth.data, &cfg).unwrap();
    let other = run_pipeline(&mixed, &cfg).unwrap();

    let decomp = plain.stagewise.ics.as_ref().unwrap();
    let trace: f64 = decomp.eigenvalues.iter().sum();
    assert!(decomp.min_gap() > 1e-6 * trace);

    let (u, v) = (
        plain.ics_coordinates.unwrap(),
        other.ics_coordinates.unwrap(),
    );
    for k in 0..8 {
        let (a, b) = (u.column(k), v.column(k));
        let sign = if a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() < 0.0 {
            -1.0
        } else {
            1.0
        };
        let err = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - sign * y).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "coordinate {k}: {err}");
    }
    for (s, t) in plain.per_start.iter().zip(&other.per_start) {
        assert_eq!(s.indices, t.indices);
        assert!((s.initial_h - t.initial_h).abs() < 1e-6);
    }
}

#[test]
fn nonsingular_mixing_does_not_change_recovery() {
    // Screening by initial entropy keeps this to one optimization per run.
    let median = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        0.5 * (v[4] + v[5])
    };
    let mut cfg = PipelineConfig::new(2);
    cfg.starts = StartPolicy::BestInitialOnly;
    let mut plain = Vec::new();
    let mut mixed = Vec::new();
    for seed in 0..10 {
        for (mixing, out) in [
            (Mixing::None, &mut plain),
            (Mixing::RandomNonsingular, &mut mixed),
        ] {
            let mut spec = three_clusters(seed);
            spec.mixing = mixing;
            let truth = generate(&spec).unwrap();
            let res = run_pipeline(&truth.data, &cfg).unwrap();
            out.push(recovery_score(&res, &truth, 2));
        }
    }
    let (a, b) = (median(plain), median(mixed));
    assert!((a - b).abs() < 0.05, "{a} vs {b}");
}
