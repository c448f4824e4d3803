use std::sync::Arc;

use dppbo_core::bench::{Objective, ObjectiveKind, RegretTrace};
use dppbo_core::model::{
    DomainGrid, FeatureModel, GaussianPosterior, GpPrior, History, KernelSpec, Observation,
};
use dppbo_core::strategies::{propose, RoundInput};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Surrogate};
use crate::seeds::{derive_seed, round_stream, Purpose};
use crate::{HarnessError, Result};

/// One evaluation of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub t: usize,
    pub b: usize,
    pub index: usize,
    pub x: Vec<f64>,
    pub y: f64,
    pub inst_regret: f64,
    pub batch_min_regret: f64,
    pub simple_regret: f64,
    pub cum_regret: f64,
    pub bbcr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub round: Option<usize>,
    pub message: String,
}

/// Full log of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_id: usize,
    /// Seed of the replication's stream family, for reference.
    pub seed: u64,
    pub rows: Vec<RunRow>,
    pub failure: Option<RunFailure>,
}

impl RunRecord {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }

    fn last_rows(&self) -> impl Iterator<Item = &RunRow> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(k, r)| self.rows.get(k + 1).is_none_or(|next| next.t != r.t))
            .map(|(_, r)| r)
    }

    pub fn simple_by_round(&self) -> Vec<f64> {
        self.last_rows().map(|r| r.simple_regret).collect()
    }

    pub fn cumulative_by_round(&self) -> Vec<f64> {
        self.last_rows().map(|r| r.cum_regret).collect()
    }
}

/// Pieces shared by all replications of an experiment.
pub struct Setup {
    grid: Arc<DomainGrid>,
    truth_prior: Arc<GpPrior>,
    model_prior: Arc<GpPrior>,
    features: Option<FeatureModel>,
    fixed_objective: Option<Objective>,
}

impl Setup {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let kernel: KernelSpec = config.model.kernel.spec()?;
        let noise_var = config.model.noise_sd.powi(2);
        let grid = Arc::new(config.objective.grid()?);
        let truth_prior = Arc::new(GpPrior::new(grid.clone(), kernel, noise_var)?);
        let wants_features = config.model.surrogate == Surrogate::Feature
            || config.strategy.strategy.uses_features();
        let features = if wants_features {
            Some(FeatureModel::new(
                grid.clone(),
                kernel,
                noise_var,
                config.model.feature_nodes,
            )?)
        } else {
            None
        };
        let model_prior = match (&features, config.model.surrogate) {
            (Some(f), Surrogate::Feature) => Arc::new(f.gp_prior()?),
            _ => truth_prior.clone(),
        };
        let fixed_objective = if config.objective.kind == ObjectiveKind::GpSample {
            None
        } else {
            // named functions ignore the random stream
            let mut rng = round_stream(config.master_seed, 0, 0, Purpose::Truth);
            Some(Objective::instantiate(&config.objective, kernel, &mut rng)?)
        };
        Ok(Self {
            grid,
            truth_prior,
            model_prior,
            features,
            fixed_objective,
        })
    }

    pub fn grid(&self) -> &Arc<DomainGrid> {
        &self.grid
    }

    fn objective(&self, config: &ExperimentConfig, rep: usize) -> Result<Objective> {
        if let Some(obj) = &self.fixed_objective {
            return Ok(obj.clone());
        }
        let mut rng = round_stream(config.master_seed, rep, 0, Purpose::Truth);
        let truth = self.truth_prior.sample(&mut rng)?;
        Ok(Objective::from_truth(self.grid.clone(), truth, config.objective.noise_sd)?)
    }
}

fn failure(err: HarnessError, round: Option<usize>) -> RunFailure {
    let round = match &err {
        HarnessError::Core(dppbo_core::Error::Numerical { round: Some(r), .. }) => Some(*r),
        _ => round,
    };
    RunFailure {
        round,
        message: err.to_string(),
    }
}

/// Runs replication `rep`; numerical failures end the run early and are
/// recorded instead of propagated.
pub fn run_replication(config: &ExperimentConfig, setup: &Setup, rep: usize) -> RunRecord {
    let mut record = RunRecord {
        run_id: rep,
        seed: derive_seed(config.master_seed, &[rep as u64]),
        rows: Vec::new(),
        failure: None,
    };
    let objective = match setup.objective(config, rep) {
        Ok(o) => o,
        Err(e) => {
            record.failure = Some(failure(e, None));
            return record;
        }
    };
    let mut posterior = GaussianPosterior::new(setup.model_prior.clone());
    let mut history = History::new();
    let mut trace = RegretTrace::new(objective.best_value());
    for t in 1..=config.rounds {
        if let Err(e) = run_round(config, setup, &objective, rep, t, &mut posterior, &mut history, &mut trace)
        {
            record.failure = Some(failure(e, Some(t)));
            break;
        }
    }
    let ys: Vec<f64> = history.observations().map(|o| o.y).collect();
    record.rows = trace
        .rows()
        .iter()
        .zip(ys)
        .map(|(r, y)| RunRow {
            t: r.t,
            b: r.b,
            index: r.index,
            x: setup.grid.point(r.index).to_vec(),
            y,
            inst_regret: r.instantaneous,
            batch_min_regret: r.batch_min,
            simple_regret: r.simple,
            cum_regret: r.cumulative,
            bbcr: r.bbcr,
        })
        .collect();
    record
}

#[allow(clippy::too_many_arguments)]
fn run_round(
    config: &ExperimentConfig,
    setup: &Setup,
    objective: &Objective,
    rep: usize,
    t: usize,
    posterior: &mut GaussianPosterior,
    history: &mut History,
    trace: &mut RegretTrace,
) -> Result<()> {
    let in_round = |e: dppbo_core::Error| HarnessError::Core(e.in_round(t));
    let batch = {
        let input = RoundInput {
            posterior,
            history,
            features: setup.features.as_ref(),
            t,
            batch_size: config.batch_size,
        };
        let mut rng = round_stream(config.master_seed, rep, t, Purpose::Propose);
        propose(&config.strategy, &input, &mut rng).map_err(in_round)?
    };
    let mut rng = round_stream(config.master_seed, rep, t, Purpose::Observe);
    let mut observations = Vec::with_capacity(batch.len());
    for &i in batch.indices() {
        let y = objective.observe(i, &mut rng).map_err(in_round)?;
        observations.push(Observation::new(i, y));
    }
    for o in &observations {
        posterior.condition_in_place(o.index, o.y).map_err(in_round)?;
    }
    trace.update(objective.truth(), &batch).map_err(in_round)?;
    history.push_round(observations);
    Ok(())
}

/// Runs all replications, on `parallel` worker threads when given.
pub fn run_experiment(config: &ExperimentConfig, parallel: Option<usize>) -> Result<Vec<RunRecord>> {
    let setup = Setup::new(config)?;
    let reps: Vec<usize> = (0..config.replications).collect();
    match parallel {
        Some(threads) if threads > 1 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(|| {
                reps.par_iter()
                    .map(|&r| run_replication(config, &setup, r))
                    .collect()
            }))
        }
        _ => Ok(reps.iter().map(|&r| run_replication(config, &setup, r)).collect()),
    }
}
