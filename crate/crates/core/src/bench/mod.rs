//! Benchmark objectives, the noisy observation model, regret accounting and
//! information-gain diagnostics.

mod info;
mod objectives;
mod regret;

pub use info::{greedy_info_gain, info_gain};
pub use objectives::{
    default_resolution, eval_objective, observe, sample_gp_objective, Objective, ObjectiveKind,
    ObjectiveSpec,
};
pub use regret::{update_regret, RegretRow, RegretTrace};
