use crate::runner::RunRecord;

/// Mean and standard error of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateStats {
    pub mean: f64,
    /// Sample SD over `sqrt(n)`; zero for a single value.
    pub se: f64,
}

impl AggregateStats {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, se: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Self { mean, se: 0.0 };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Self {
            mean,
            se: (var / n as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateRow {
    pub t: usize,
    pub mean_simple: f64,
    pub se_simple: f64,
    pub mean_cum: f64,
    pub se_cum: f64,
    pub n_runs: usize,
}

/// Per-round regret statistics over the runs that completed.
pub fn aggregate(runs: &[RunRecord]) -> Vec<AggregateRow> {
    let ok: Vec<&RunRecord> = runs.iter().filter(|r| r.succeeded()).collect();
    let simple: Vec<Vec<f64>> = ok.iter().map(|r| r.simple_by_round()).collect();
    let cum: Vec<Vec<f64>> = ok.iter().map(|r| r.cumulative_by_round()).collect();
    let rounds = simple.iter().map(Vec::len).min().unwrap_or(0);
    (0..rounds)
        .map(|k| {
            let s: Vec<f64> = simple.iter().map(|v| v[k]).collect();
            let c: Vec<f64> = cum.iter().map(|v| v[k]).collect();
            let s = AggregateStats::of(&s);
            let c = AggregateStats::of(&c);
            AggregateRow {
                t: k + 1,
                mean_simple: s.mean,
                se_simple: s.se,
                mean_cum: c.mean,
                se_cum: c.se,
                n_runs: ok.len(),
            }
        })
        .collect()
}
