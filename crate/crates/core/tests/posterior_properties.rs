use std::sync::Arc;

use dppbo_core::dpp::estimate_pmax;
use dppbo_core::model::{DomainGrid, GaussianPosterior, GpPrior, KernelSpec, Observation};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn prior(n: usize, lengthscale: f64, noise_var: f64) -> GaussianPosterior {
    let grid = Arc::new(DomainGrid::unit_interval(n).unwrap());
    let kernel = KernelSpec::squared_exponential(lengthscale).unwrap();
    GaussianPosterior::new(Arc::new(GpPrior::new(grid, kernel, noise_var).unwrap()))
}

fn instance() -> impl Strategy<Value = (usize, f64, f64, Vec<(usize, f64)>)> {
    (3usize..8, 0.1f64..1.0, 0.01f64..0.5).prop_flat_map(|(n, l, s)| {
        let obs = prop::collection::vec((0..n, -2.0f64..2.0), 0..8);
        (Just(n), Just(l), Just(s), obs)
    })
}

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn conditioning_is_order_independent(
        (n, l, s, obs) in instance(),
        seed in any::<u64>(),
    ) {
        let p = prior(n, l, s);
        let obs: Vec<Observation> = obs.iter().map(|&(i, y)| Observation::new(i, y)).collect();
        let mut shuffled = obs.clone();
        use rand::seq::SliceRandom;
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = p.condition(&obs).unwrap();
        // split into two calls as well as permuting
        let half = shuffled.len() / 2;
        let b = p.condition(&shuffled[..half]).unwrap().condition(&shuffled[half..]).unwrap();
        for i in 0..n {
            prop_assert!((a.mean()[i] - b.mean()[i]).abs() <= 1e-8);
        }
        prop_assert!(max_abs_diff(&a.covariance(), &b.covariance()) <= 1e-8);
    }

    #[test]
    fn variance_never_increases((n, l, s, obs) in instance()) {
        let mut p = prior(n, l, s);
        let mut last = p.variance().to_vec();
        for (i, y) in obs {
            p = p.condition(&[Observation::new(i, y)]).unwrap();
            for k in 0..n {
                prop_assert!(p.variance()[k] <= last[k] + 1e-12);
            }
            last = p.variance().to_vec();
        }
    }

    #[test]
    fn hallucination_chains_keep_the_mean(
        (n, l, s, obs) in instance(),
        chain in prop::collection::vec(0usize..7, 1..8),
    ) {
        let obs: Vec<Observation> = obs.iter().map(|&(i, y)| Observation::new(i, y)).collect();
        let mut p = prior(n, l, s).condition(&obs).unwrap();
        let mean = p.mean().to_vec();
        for i in chain.into_iter().map(|i| i % n) {
            let before = p.variance().to_vec();
            p = p.hallucinate(i).unwrap();
            for k in 0..n {
                prop_assert!((p.mean()[k] - mean[k]).abs() <= 1e-8);
                prop_assert!(p.variance()[k] <= before[k] + 1e-12);
            }
            if before[i] > 1e-12 {
                prop_assert!(p.variance()[i] < before[i]);
            }
        }
    }

    #[test]
    fn incremental_cache_matches_dense_oracle((n, l, s, obs) in instance()) {
        // textbook update: mu = K_xX (K_XX + s I)^-1 y, K = K - K_xX (..)^-1 K_Xx
        let p = prior(n, l, s);
        if obs.is_empty() {
            return Ok(());
        }
        let k = p.covariance();
        let idx: Vec<usize> = obs.iter().map(|o| o.0).collect();
        let m = idx.len();
        let kxx = DMatrix::from_fn(m, m, |a, b| k[(idx[a], idx[b])] + if a == b { s } else { 0.0 });
        let kx = DMatrix::from_fn(n, m, |a, b| k[(a, idx[b])]);
        let y = nalgebra::DVector::from_iterator(m, obs.iter().map(|o| o.1));
        let inv = kxx.try_inverse().unwrap();
        let mu = &kx * &inv * y;
        let cov = &k - &kx * &inv * kx.transpose();
        let obs: Vec<Observation> = obs.iter().map(|&(i, y)| Observation::new(i, y)).collect();
        let post = p.condition(&obs).unwrap();
        for i in 0..n {
            prop_assert!((post.mean()[i] - mu[i]).abs() <= 1e-7);
        }
        prop_assert!(max_abs_diff(&post.covariance(), &cov) <= 1e-7);
    }
}

#[test]
fn path_samples_have_posterior_moments() {
    let p = prior(4, 0.4, 0.05)
        .condition(&[Observation::new(1, 0.8), Observation::new(3, -0.3)])
        .unwrap();
    let k = p.covariance();
    let draws = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut sum = [0.0; 4];
    let mut cross = [[0.0; 4]; 4];
    for _ in 0..draws {
        let f = p.sample_path(&mut rng).unwrap();
        for i in 0..4 {
            let di = f[i] - p.mean()[i];
            sum[i] += f[i];
            for j in 0..4 {
                cross[i][j] += di * (f[j] - p.mean()[j]);
            }
        }
    }
    let n = draws as f64;
    for i in 0..4 {
        let se = (k[(i, i)] / n).sqrt();
        assert!((sum[i] / n - p.mean()[i]).abs() <= 3.0 * se, "mean {i}");
        for j in 0..4 {
            // variance of a product of jointly normal deviations
            let se = ((k[(i, i)] * k[(j, j)] + k[(i, j)].powi(2)) / n).sqrt();
            assert!((cross[i][j] / n - k[(i, j)]).abs() <= 3.0 * se, "cov {i} {j}");
        }
    }
}

#[test]
fn pmax_matches_high_draw_reference() {
    let p = prior(3, 0.5, 0.1)
        .condition(&[Observation::new(0, 0.2), Observation::new(2, 0.1)])
        .unwrap();
    let reference = estimate_pmax(&p, 10_000_000, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let draws = 100_000u64;
    let est = estimate_pmax(&p, draws, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    for (q, r) in est.probabilities().iter().zip(reference.probabilities()) {
        let band = 3.0 * (r * (1.0 - r) / draws as f64).sqrt() + 3.0 * (r * (1.0 - r) / 1e7).sqrt();
        assert!((q - r).abs() <= band, "{q} vs {r}");
    }
}

#[test]
fn symmetric_pair_splits_evenly() {
    let grid = Arc::new(DomainGrid::unit_interval(2).unwrap());
    let p = GaussianPosterior::from_moments(grid, vec![0.0; 2], DMatrix::identity(2, 2), 1.0)
        .unwrap();
    let draws = 100_000;
    let est = estimate_pmax(&p, draws, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let se = (0.25 / draws as f64).sqrt();
    assert!((est.probabilities()[0] - 0.5).abs() <= 3.0 * se);
}
