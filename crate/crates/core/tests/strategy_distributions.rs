use std::sync::Arc;

use dppbo_core::dpp::{
    estimate_pmax, exact_batch_distribution, BatchDistribution, LEnsemble, PmaxEstimate,
};
use dppbo_core::model::{
    DomainGrid, FeatureModel, GaussianPosterior, GpPrior, History, KernelSpec, Observation,
};
use dppbo_core::strategies::{
    propose, propose_dpp_phe, propose_dpp_ts, propose_dpp_ts_alt, propose_gp_bucb,
    propose_hal_ts, propose_phe, propose_pure_dpp, propose_ts, propose_ucb_dpp_sample,
    propose_ucb_pe, propose_uniform, BetaSchedule, RoundInput, StrategyConfig, StrategyKind,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn moments(mean: Vec<f64>, cov: DMatrix<f64>, noise_var: f64) -> GaussianPosterior {
    let grid = Arc::new(DomainGrid::unit_interval(mean.len()).unwrap());
    GaussianPosterior::from_moments(grid, mean, cov, noise_var).unwrap()
}

/// A four-point posterior with a clear favourite.
fn peaked() -> GaussianPosterior {
    let cov = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.30, 0.10, 0.02, 0.00, //
            0.10, 0.30, 0.10, 0.02, //
            0.02, 0.10, 0.30, 0.10, //
            0.00, 0.02, 0.10, 0.30,
        ],
    );
    moments(vec![1.0, 0.6, 0.3, 0.0], cov, 0.1)
}

fn empirical<F>(n: usize, b: usize, draws: usize, mut sample: F) -> BatchDistribution
where
    F: FnMut() -> Vec<usize>,
{
    let all: Vec<Vec<usize>> = (0..draws).map(|_| sample()).collect();
    BatchDistribution::from_samples(n, b, all.iter().map(Vec::as_slice)).unwrap()
}

fn reference_pmax(post: &GaussianPosterior) -> PmaxEstimate {
    estimate_pmax(post, 1_000_000, &mut rng(999)).unwrap()
}

#[test]
fn ts_slots_are_independent_fair_coins() {
    let post = moments(vec![0.0, 0.0], DMatrix::identity(2, 2), 1.0);
    let mut r = rng(1);
    let draws = 100_000;
    let mut table = [[0.0f64; 2]; 2];
    for _ in 0..draws {
        let b = propose_ts(&post, 2, &mut r).unwrap();
        table[b.indices()[0]][b.indices()[1]] += 1.0;
    }
    let n = draws as f64;
    let rows = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
    let cols = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
    let se = (0.25 / n).sqrt();
    assert!((rows[0] / n - 0.5).abs() <= 3.0 * se);
    assert!((cols[0] / n - 0.5).abs() <= 3.0 * se);
    let mut chi2 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let expect = rows[i] * cols[j] / n;
            chi2 += (table[i][j] - expect).powi(2) / expect;
        }
    }
    // 1% critical value of chi-square with one degree of freedom
    assert!(chi2 < 6.635, "chi2 {chi2}");
}

#[test]
fn hallucination_reduces_duplicates() {
    let cov = DMatrix::from_row_slice(3, 3, &[1.0, -0.4, -0.4, -0.4, 1.0, -0.4, -0.4, -0.4, 1.0]);
    let post = moments(vec![0.0; 3], cov, 0.1);
    let draws = 100_000;
    let dup = |b: dppbo_core::dpp::Batch| (b.indices()[0] == b.indices()[1]) as usize;
    let mut r = rng(2);
    let ts: usize = (0..draws).map(|_| dup(propose_ts(&post, 2, &mut r).unwrap())).sum();
    let hal: usize = (0..draws).map(|_| dup(propose_hal_ts(&post, 2, &mut r).unwrap())).sum();
    assert!(hal < ts, "hal-ts {hal} vs ts {ts}");
}

#[test]
fn single_slot_hal_ts_is_ts() {
    let post = peaked();
    for seed in 0..20 {
        let a = propose_hal_ts(&post, 1, &mut rng(seed)).unwrap();
        let b = propose_ts(&post, 1, &mut rng(seed)).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn deterministic_strategies_repeat() {
    let post = peaked();
    assert_eq!(propose_gp_bucb(&post, 5, 2.0).unwrap(), propose_gp_bucb(&post, 5, 2.0).unwrap());
    assert_eq!(propose_ucb_pe(&post, 5, 2.0).unwrap(), propose_ucb_pe(&post, 5, 2.0).unwrap());
}

#[test]
fn dpp_ts_without_diversity_is_batched_ts() {
    let post = peaked();
    let pmax = reference_pmax(&post);
    let product = exact_batch_distribution(&LEnsemble::identity(4), 2, &pmax).unwrap();
    let mut r = rng(3);
    let emp = empirical(4, 2, 10_000, || {
        propose_dpp_ts(&post, 2, 0.0, 200, &mut r).unwrap().into_inner()
    });
    let tv = emp.total_variation(&product);
    assert!(tv <= 0.02, "tv {tv}");
}

#[test]
fn dpp_ts_matches_enumeration() {
    let post = peaked();
    let pmax = reference_pmax(&post);
    let l = LEnsemble::mutual_information(&post, 1.0).unwrap();
    let exact = exact_batch_distribution(&l, 2, &pmax).unwrap();
    let mut r = rng(4);
    let emp = empirical(4, 2, 10_000, || {
        propose_dpp_ts(&post, 2, 1.0, 200, &mut r).unwrap().into_inner()
    });
    let tv = emp.total_variation(&exact);
    assert!(tv <= 0.05, "tv {tv}");
}

#[test]
fn dpp_ts_alt_first_slot_is_thompson() {
    let post = peaked();
    let pmax = reference_pmax(&post);
    let mut r = rng(5);
    let mut counts = [0u64; 4];
    for _ in 0..10_000 {
        counts[propose_dpp_ts_alt(&post, 2, 1.0, 100, &mut r).unwrap().indices()[0]] += 1;
    }
    let emp = PmaxEstimate::from_counts(&counts).unwrap();
    let tv: f64 = 0.5
        * emp
            .probabilities()
            .iter()
            .zip(pmax.probabilities())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>();
    assert!(tv <= 0.02, "tv {tv}");
}

#[test]
fn dpp_ts_alt_without_diversity_is_ts() {
    let post = peaked();
    let pmax = reference_pmax(&post);
    let product = exact_batch_distribution(&LEnsemble::identity(4), 2, &pmax).unwrap();
    let mut r = rng(6);
    let emp = empirical(4, 2, 10_000, || {
        propose_dpp_ts_alt(&post, 2, 0.0, 100, &mut r).unwrap().into_inner()
    });
    assert!(emp.total_variation(&product) <= 0.02);
}

#[test]
fn pure_dpp_matches_k_dpp_enumeration() {
    let post = peaked();
    let l = LEnsemble::mutual_information(&post, 1.0).unwrap();
    let uniform = PmaxEstimate::uniform(4).unwrap();
    let exact = exact_batch_distribution(&l, 2, &uniform).unwrap();
    let mut r = rng(7);
    let emp = empirical(4, 2, 10_000, || propose_pure_dpp(&post, 2, 200, &mut r).unwrap().into_inner());
    let tv = emp.total_variation(&exact);
    assert!(tv <= 0.05, "tv {tv}");

    // one slot: weights 1 + var / noise
    let w: Vec<f64> = (0..4).map(|i| 1.0 + post.variance()[i] / post.noise_var()).collect();
    let total: f64 = w.iter().sum();
    let single = empirical(4, 1, 10_000, || propose_pure_dpp(&post, 1, 100, &mut r).unwrap().into_inner());
    let tv: f64 = 0.5 * (0..4).map(|i| (single.prob(&[i]) - w[i] / total).abs()).sum::<f64>();
    assert!(tv <= 0.02, "tv {tv}");
}

#[test]
fn pure_dpp_on_a_degenerate_posterior_is_uniform() {
    let post = moments(vec![0.0, 1.0, 2.0], DMatrix::zeros(3, 3), 0.1);
    let uniform = PmaxEstimate::uniform(3).unwrap();
    let product = exact_batch_distribution(&LEnsemble::identity(3), 2, &uniform).unwrap();
    let mut r = rng(8);
    let emp = empirical(3, 2, 10_000, || propose_pure_dpp(&post, 2, 50, &mut r).unwrap().into_inner());
    assert!(emp.total_variation(&product) <= 0.02);
}

#[test]
fn ucb_dpp_sample_tail_is_a_k_dpp() {
    let post = peaked();
    // a huge beta makes the maximizer region the whole grid
    let l = LEnsemble::mutual_information(&post, 1.0).unwrap();
    let exact = exact_batch_distribution(&l, 2, &PmaxEstimate::uniform(4).unwrap()).unwrap();
    let first = propose_gp_bucb(&post, 1, 1e6).unwrap().indices()[0];
    let mut r = rng(9);
    let emp = empirical(4, 2, 10_000, || {
        let b = propose_ucb_dpp_sample(&post, 3, 1e6, 200, &mut r).unwrap().into_inner();
        assert_eq!(b[0], first);
        b[1..].to_vec()
    });
    let tv = emp.total_variation(&exact);
    assert!(tv <= 0.05, "tv {tv}");
}

#[test]
fn uniform_slots_are_uniform() {
    let mut r = rng(10);
    let draws = 100_000;
    let mut counts = [[0usize; 4]; 2];
    for _ in 0..draws {
        let b = propose_uniform(4, 2, &mut r).unwrap();
        counts[0][b.indices()[0]] += 1;
        counts[1][b.indices()[1]] += 1;
    }
    let se = (0.25 * 0.75 / draws as f64).sqrt();
    for slot in counts {
        for c in slot {
            assert!((c as f64 / draws as f64 - 0.25).abs() <= 3.0 * se);
        }
    }
    let a = propose_uniform(50, 5, &mut rng(11)).unwrap();
    assert_eq!(a, propose_uniform(50, 5, &mut rng(11)).unwrap());
}

fn feature_setup(n: usize) -> (FeatureModel, Vec<Observation>) {
    let grid = Arc::new(DomainGrid::unit_interval(n).unwrap());
    let kernel = KernelSpec::squared_exponential(0.3).unwrap();
    let model = FeatureModel::new(grid, kernel, 0.01, None).unwrap();
    let obs = vec![Observation::new(0, 0.3), Observation::new(n - 1, -0.2)];
    (model, obs)
}

#[test]
fn phe_without_perturbation_is_greedy() {
    let (model, obs) = feature_setup(16);
    let fit = model.fit(&obs).unwrap();
    let mean = fit.mean_path();
    let greedy = dppbo_core::linalg::argmax_lowest(&mean);
    let b = propose_phe(&fit, 5, 0.0, &mut rng(12)).unwrap();
    assert!(b.indices().iter().all(|&i| i == greedy));
}

#[test]
fn phe_with_huge_perturbation_spreads_out() {
    // with every grid point in the history the perturbed refit is close to
    // an interpolant of i.i.d. noise, whose argmax is nearly uniform
    let n = 16;
    let grid = Arc::new(DomainGrid::unit_interval(n).unwrap());
    let kernel = KernelSpec::squared_exponential(0.1).unwrap();
    let model = FeatureModel::new(grid, kernel, 0.01, None).unwrap();
    let obs: Vec<Observation> = (0..n).map(|i| Observation::new(i, 0.0)).collect();
    let fit = model.fit(&obs).unwrap();
    let mut r = rng(13);
    let mut counts = vec![0u64; n];
    for _ in 0..2_000 {
        for &i in propose_phe(&fit, 5, 1e6, &mut r).unwrap().indices() {
            counts[i] += 1;
        }
    }
    let total = counts.iter().sum::<u64>() as f64;
    let entropy: f64 = counts
        .iter()
        .filter(|c| **c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum();
    assert!(entropy >= 0.9 * (n as f64).ln(), "entropy {entropy}");
}

#[test]
fn dpp_phe_matches_tabulated_enumeration() {
    let (model, obs) = feature_setup(4);
    let fit = model.fit(&obs).unwrap();
    let a = 0.5;
    let mut r = rng(14);
    let mut counts = vec![0u64; 4];
    for _ in 0..1_000_000 {
        counts[propose_phe(&fit, 1, a, &mut r).unwrap().indices()[0]] += 1;
    }
    let p = PmaxEstimate::from_counts(&counts).unwrap();
    let l = LEnsemble::low_rank(fit.posterior_factor(), model.noise_var(), 1.0).unwrap();
    let exact = exact_batch_distribution(&l, 2, &p).unwrap();
    let emp = empirical(4, 2, 10_000, || {
        propose_dpp_phe(&fit, model.noise_var(), 2, a, 1.0, 200, &mut r)
            .unwrap()
            .into_inner()
    });
    let tv = emp.total_variation(&exact);
    assert!(tv <= 0.05, "tv {tv}");
}

#[test]
fn dpp_phe_without_diversity_is_phe() {
    let (model, obs) = feature_setup(8);
    let fit = model.fit(&obs).unwrap();
    let a = propose_dpp_phe(&fit, model.noise_var(), 4, 0.5, 0.0, 50, &mut rng(15)).unwrap();
    let b = propose_phe(&fit, 4, 0.5, &mut rng(15)).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn every_strategy_fills_the_batch(
        kind_index in 0usize..11,
        n in 1usize..12,
        b in 1usize..6,
        t in 1usize..10,
        seed in any::<u64>(),
    ) {
        let kind = StrategyKind::ALL[kind_index];
        let grid = Arc::new(DomainGrid::unit_interval(n).unwrap());
        let kernel = KernelSpec::squared_exponential(0.2).unwrap();
        let features = FeatureModel::new(grid.clone(), kernel, 1e-4, None).unwrap();
        let prior = Arc::new(GpPrior::new(grid, kernel, 1e-4).unwrap());
        let mut history = History::new();
        history.push_round(vec![Observation::new(0, 0.1), Observation::new(n - 1, 0.4)]);
        let post = GaussianPosterior::new(prior)
            .condition(&history.observations().copied().collect::<Vec<_>>())
            .unwrap();
        let mut config = StrategyConfig::new(kind);
        config.mcmc_steps = Some(20);
        config.beta_schedule = BetaSchedule::FiniteDomain;
        if kind.uses_features() {
            config.phe_a = Some(0.5);
        }
        config.validate().unwrap();
        let input = RoundInput {
            posterior: &post,
            history: &history,
            features: Some(&features),
            t,
            batch_size: b,
        };
        let batch = propose(&config, &input, &mut rng(seed)).unwrap();
        prop_assert_eq!(batch.len(), b);
        prop_assert!(batch.indices().iter().all(|&i| i < n));
    }
}
