//! L-ensembles, restricted log-determinants, enumeration oracles, `p_max`
//! estimation and the Metropolis-Hastings batch samplers.

mod balance;
mod exact;
mod lensemble;
mod mcmc;
mod pmax;

pub use balance::{detailed_balance_check, transition_probability};
pub use exact::{exact_batch_distribution, BatchDistribution, MAX_ENUMERATION};
pub use lensemble::{restricted_logdet, Batch, LEnsemble};
pub use mcmc::{
    acceptance_probability, default_mcmc_steps, mcmc_full_batch, mcmc_gibbs_li, mcmc_single_swap,
    run_sampler, PointProposal, SamplerKind, TabulatedProposal, ThompsonProposal,
    UniformProposal, MAX_INIT_ATTEMPTS,
};
pub use pmax::{estimate_pmax, sample_pmax_point, PmaxEstimate};
