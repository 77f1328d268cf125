//! Non-parametric bootstrap over scored records.
//!
//! Replicate `r` draws from its own ChaCha stream (`seed`, stream `r`), so
//! the report is identical for a given seed no matter how replicates are
//! scheduled across threads.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{accuracy, sort_by_score, weighted_auroc, EvalError, ScoredRecord};

/// Redraws allowed per replicate before giving up on finding both classes.
const MAX_REDRAWS: usize = 10_000;

/// Column order of [`EvalReport::csv_row`].
pub const CSV_HEADER: [&str; 8] = [
    "dataset",
    "model",
    "accuracy",
    "accuracy_hw",
    "auroc_dcu",
    "auroc_dcu_hw",
    "auroc_se",
    "auroc_se_hw",
];

/// Bootstrap summary of one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// Mean over replicates.
    pub mean: f64,
    /// Half the width of the central 95% percentile interval.
    pub half_width: f64,
    /// 2.5th percentile.
    pub lower: f64,
    /// 97.5th percentile.
    pub upper: f64,
    pub std_dev: f64,
    /// Metric on the full, unresampled record set.
    pub full_sample: f64,
}

impl Estimate {
    fn from_replicates(mut values: Vec<f64>, full_sample: f64) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        values.sort_by(f64::total_cmp);
        let lower = percentile(&values, 0.025);
        let upper = percentile(&values, 0.975);
        Self {
            mean,
            half_width: ((upper - lower) / 2.0).max(0.0),
            lower,
            upper,
            std_dev: var.sqrt(),
            full_sample,
        }
    }
}

/// Linear interpolation between order statistics (the "type 7" rule).
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub model: String,
    pub n: usize,
    pub accuracy: Estimate,
    /// Absent when the records hold only one class.
    pub auroc_dcu: Option<Estimate>,
    /// Present when both classes occur and every record carries a
    /// semantic-entropy score.
    pub auroc_se: Option<Estimate>,
    pub bootstrap_replicates: usize,
    pub seed: u64,
    /// Resamples thrown away because they held only one class.
    pub redraws: usize,
}

impl EvalReport {
    /// One CSV row in [`CSV_HEADER`] order; AUROC cells are empty when absent.
    pub fn csv_row(&self) -> Vec<String> {
        let f = |x: f64| format!("{x:.6}");
        let cells = |e: &Option<Estimate>| match e {
            Some(e) => [f(e.mean), f(e.half_width)],
            None => [String::new(), String::new()],
        };
        let [dcu, dcu_hw] = cells(&self.auroc_dcu);
        let [se, se_hw] = cells(&self.auroc_se);
        vec![
            self.dataset.clone(),
            self.model.clone(),
            f(self.accuracy.mean),
            f(self.accuracy.half_width),
            dcu,
            dcu_hw,
            se,
            se_hw,
        ]
    }

    /// Header plus the row, CSV-quoted where needed.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        w.write_record(self.csv_row()).expect("in-memory write");
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

struct Replicate {
    accuracy: f64,
    auroc_dcu: Option<f64>,
    auroc_se: Option<f64>,
    redraws: usize,
}

/// Resamples records with replacement `replicates` times and summarizes
/// accuracy and AUROC. Resamples missing a class are redrawn so exactly
/// `replicates` values back every estimate.
///
/// When the full record set holds a single class the AUROC cells are left
/// out and only accuracy is resampled; callers decide whether that is an
/// error.
pub fn bootstrap_report(
    records: &[ScoredRecord],
    replicates: usize,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    let n = records.len();
    if n < 2 {
        return Err(EvalError::TooFewRecords(n));
    }
    if replicates == 0 {
        return Err(EvalError::NoReplicates);
    }
    let correct: Vec<bool> = records.iter().map(|r| r.correct.correct).collect();
    let dcu: Vec<f64> = records.iter().map(|r| r.dcu).collect();
    if let Some(&bad) = dcu.iter().find(|s| !s.is_finite()) {
        return Err(EvalError::NonFiniteScore(bad));
    }
    let se: Option<Vec<f64>> = records.iter().map(|r| r.se).collect();
    if let Some(&bad) = se.iter().flatten().find(|s| !s.is_finite()) {
        return Err(EvalError::NonFiniteScore(bad));
    }

    let ones = vec![1u32; n];
    let dcu_order = sort_by_score(&dcu);
    let full_dcu = weighted_auroc(&dcu, &correct, &dcu_order, &ones);
    let need_both = full_dcu.is_some();
    let se_order = se.as_ref().map(|s| sort_by_score(s));
    let full_se = match (&se, &se_order) {
        (Some(s), Some(o)) => weighted_auroc(s, &correct, o, &ones),
        _ => None,
    };
    let full_acc = accuracy(&correct)?;

    let reps: Vec<Replicate> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut weights = vec![0u32; n];
            for redraws in 0..=MAX_REDRAWS {
                weights.iter_mut().for_each(|w| *w = 0);
                for _ in 0..n {
                    weights[rng.random_range(0..n)] += 1;
                }
                let auroc_dcu = weighted_auroc(&dcu, &correct, &dcu_order, &weights);
                if need_both && auroc_dcu.is_none() {
                    continue;
                }
                let drawn_correct: u32 = weights
                    .iter()
                    .zip(&correct)
                    .filter(|(_, &c)| c)
                    .map(|(w, _)| w)
                    .sum();
                let auroc_se = match (&se, &se_order) {
                    (Some(s), Some(o)) => weighted_auroc(s, &correct, o, &weights),
                    _ => None,
                };
                return Ok(Replicate {
                    accuracy: f64::from(drawn_correct) / n as f64,
                    auroc_dcu,
                    auroc_se,
                    redraws,
                });
            }
            Err(EvalError::DegenerateLabels)
        })
        .collect::<Result<_, _>>()?;

    let auroc_se = full_se.map(|full| {
        Estimate::from_replicates(
            reps.iter()
                .map(|r| r.auroc_se.expect("same classes as dcu"))
                .collect(),
            full,
        )
    });
    Ok(EvalReport {
        dataset: String::new(),
        model: String::new(),
        n,
        accuracy: Estimate::from_replicates(reps.iter().map(|r| r.accuracy).collect(), full_acc),
        auroc_dcu: full_dcu.map(|full| {
            Estimate::from_replicates(
                reps.iter()
                    .map(|r| r.auroc_dcu.expect("redrawn until both classes"))
                    .collect(),
                full,
            )
        }),
        auroc_se,
        bootstrap_replicates: replicates,
        seed,
        redraws: reps.iter().map(|r| r.redraws).sum(),
    })
}
