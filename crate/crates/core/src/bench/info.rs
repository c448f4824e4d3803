use crate::dpp::{restricted_logdet, Batch, LEnsemble};
use crate::linalg::argmax_lowest;
use crate::model::GaussianPosterior;
use crate::Result;

/// `1/2 log det(I + s^-2 K_X)` under `posterior`; zero for an empty set.
pub fn info_gain(posterior: &GaussianPosterior, indices: &[usize]) -> Result<f64> {
    if indices.is_empty() {
        return Ok(0.0);
    }
    let l = LEnsemble::mutual_information(posterior, 1.0)?;
    Ok(0.5 * restricted_logdet(&l, &Batch::new(indices.to_vec())?)?)
}

/// Greedy information-gain maximization over `budget` evaluations, a lower
/// bound on the maximum information gain. Returns the chosen points and
/// their gain.
pub fn greedy_info_gain(posterior: &GaussianPosterior, budget: usize) -> Result<(Vec<usize>, f64)> {
    let mut current = posterior.clone();
    let mut chosen = Vec::with_capacity(budget);
    let mut gain = 0.0;
    let noise_var = posterior.noise_var();
    for _ in 0..budget {
        // the marginal gain of x is 1/2 log(1 + s^-2 var(x))
        let i = argmax_lowest(current.variance());
        gain += 0.5 * (current.variance()[i].max(0.0) / noise_var).ln_1p();
        let y = current.mean()[i];
        current.condition_in_place(i, y)?;
        chosen.push(i);
    }
    Ok((chosen, gain))
}
