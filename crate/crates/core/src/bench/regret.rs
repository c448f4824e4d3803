use crate::dpp::Batch;
use crate::{Error, Result};

/// Regret bookkeeping for a single evaluation `(t, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretRow {
    /// Round, starting at 1.
    pub t: usize,
    /// Slot within the round, starting at 0.
    pub b: usize,
    pub index: usize,
    pub instantaneous: f64,
    /// Smallest instantaneous regret within round `t`.
    pub batch_min: f64,
    /// Best-so-far gap after this evaluation.
    pub simple: f64,
    /// Sum of instantaneous regrets up to this evaluation.
    pub cumulative: f64,
    /// Sum over rounds `s <= t` of the batch minimum.
    pub bbcr: f64,
}

/// Instantaneous, simple, cumulative and batch-cumulative regret of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    best_value: f64,
    rows: Vec<RegretRow>,
    rounds: usize,
}

impl RegretTrace {
    /// `best_value` is `max_x f(x)` over the grid.
    pub fn new(best_value: f64) -> Self {
        Self {
            best_value,
            rows: Vec::new(),
            rounds: 0,
        }
    }

    pub fn rows(&self) -> &[RegretRow] {
        &self.rows
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// Appends one round's batch.
    pub fn update(&mut self, truth: &[f64], batch: &Batch) -> Result<()> {
        let regrets = batch
            .indices()
            .iter()
            .map(|&i| {
                truth
                    .get(i)
                    .map(|f| self.best_value - f)
                    .ok_or(Error::IndexOutOfRange { index: i, size: truth.len() })
            })
            .collect::<Result<Vec<f64>>>()?;
        let batch_min = regrets.iter().copied().fold(f64::INFINITY, f64::min);
        let last = self.rows.last().copied();
        let mut simple = last.map_or(f64::INFINITY, |r| r.simple);
        let mut cumulative = last.map_or(0.0, |r| r.cumulative);
        let bbcr = last.map_or(0.0, |r| r.bbcr) + batch_min;
        self.rounds += 1;
        for (b, (&index, &r)) in batch.indices().iter().zip(&regrets).enumerate() {
            simple = simple.min(r);
            cumulative += r;
            self.rows.push(RegretRow {
                t: self.rounds,
                b,
                index,
                instantaneous: r,
                batch_min,
                simple,
                cumulative,
                bbcr,
            });
        }
        Ok(())
    }

    fn end_of_rounds(&self) -> impl Iterator<Item = &RegretRow> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(k, r)| self.rows.get(k + 1).is_none_or(|next| next.t != r.t))
            .map(|(_, r)| r)
    }

    /// Simple regret after each round.
    pub fn simple_by_round(&self) -> Vec<f64> {
        self.end_of_rounds().map(|r| r.simple).collect()
    }

    /// Cumulative regret after each round.
    pub fn cumulative_by_round(&self) -> Vec<f64> {
        self.end_of_rounds().map(|r| r.cumulative).collect()
    }

    pub fn bbcr_by_round(&self) -> Vec<f64> {
        self.end_of_rounds().map(|r| r.bbcr).collect()
    }
}

/// Functional form of [`RegretTrace::update`].
pub fn update_regret(mut trace: RegretTrace, truth: &[f64], batch: &Batch) -> Result<RegretTrace> {
    trace.update(truth, batch)?;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch(v: &[usize]) -> Batch {
        Batch::new(v.to_vec()).unwrap()
    }

    #[test]
    fn hitting_the_maximizer_zeroes_simple_regret() {
        let truth = [0.0, 2.0, 1.0];
        let mut tr = RegretTrace::new(2.0);
        tr.update(&truth, &batch(&[0, 2])).unwrap();
        tr.update(&truth, &batch(&[1, 0])).unwrap();
        tr.update(&truth, &batch(&[0, 0])).unwrap();
        assert_eq!(tr.simple_by_round(), vec![1.0, 0.0, 0.0]);
        assert_eq!(tr.rows()[2].batch_min, 0.0);
        assert_eq!(tr.bbcr_by_round(), vec![1.0, 1.0, 3.0]);
        assert_eq!(tr.cumulative_by_round(), vec![3.0, 5.0, 9.0]);
    }

    #[test]
    fn worst_point_everywhere() {
        let truth = [0.5, 3.0, -1.0];
        let mut tr = RegretTrace::new(3.0);
        for _ in 0..4 {
            tr = update_regret(tr, &truth, &batch(&[2, 2, 2])).unwrap();
        }
        assert_eq!(tr.cumulative_by_round()[3], 4.0 * 3.0 * 4.0);
    }

    #[test]
    fn rejects_bad_index() {
        let mut tr = RegretTrace::new(1.0);
        assert!(tr.update(&[1.0], &batch(&[1])).is_err());
    }
}
