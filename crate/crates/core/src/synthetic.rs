//! Synthetic datasets with a known link between dispersion and correctness.
//!
//! Each record draws its generation embeddings from a vMF around a random
//! mean. Correct records use `kappa_correct`, incorrect ones
//! `kappa_incorrect`. With `label_noise = p`, a fraction `p` of records get
//! their label from a fair coin instead, independent of the embeddings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ingest::{EmbeddingStore, QuestionRecord};
use crate::vmf::{
    fit, sample_uniform_sphere, sample_vmf_with_rng, Solver, VmfError, VmfParams, KAPPA_MAX,
};

pub const CORRECT_ANSWER: &str = "paris";
pub const WRONG_ANSWER: &str = "london";
pub const REFERENCE: &str = "Paris";

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub records: usize,
    pub dim: usize,
    pub generations: usize,
    pub kappa_correct: f64,
    pub kappa_incorrect: f64,
    pub label_noise: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            records: 300,
            dim: 64,
            generations: 10,
            kappa_correct: 100.0,
            kappa_incorrect: 5.0,
            label_noise: 0.0,
            seed: 0,
        }
    }
}

/// Generates `(manifest records, embedding store)`.
///
/// Records alternate correct / incorrect before noise is applied, so both
/// classes are present. Embedding keys use the default `"{id}#g{i}"` form.
/// Tight records repeat the first answer across all generations; dispersed
/// ones vary it.
pub fn generate(cfg: &SyntheticConfig) -> Result<(Vec<QuestionRecord>, EmbeddingStore), VmfError> {
    if cfg.dim < 2 {
        return Err(VmfError::DimensionTooSmall(cfg.dim));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut store = EmbeddingStore::new(cfg.dim).expect("dim >= 2");
    let mut records = Vec::with_capacity(cfg.records);
    let width = cfg.records.max(1).to_string().len();
    for i in 0..cfg.records {
        let tight = i % 2 == 0;
        let kappa = if tight {
            cfg.kappa_correct
        } else {
            cfg.kappa_incorrect
        };
        let correct = if rng.random::<f64>() < cfg.label_noise {
            rng.random::<bool>()
        } else {
            tight
        };
        let mu = sample_uniform_sphere(cfg.dim, &mut rng);
        let batch = sample_vmf_with_rng(&VmfParams::new(mu, kappa)?, cfg.generations, &mut rng);

        let id = format!("syn-{i:0width$}");
        let first = if correct {
            CORRECT_ANSWER
        } else {
            WRONG_ANSWER
        };
        let generations: Vec<String> = (0..cfg.generations)
            .map(|g| {
                if g == 0 || tight {
                    first.to_string()
                } else {
                    format!("{first} variant {g}")
                }
            })
            .collect();
        for (g, v) in batch.vectors().iter().enumerate() {
            let raw = v.as_slice().iter().map(|&x| x as f32).collect();
            store
                .insert(format!("{id}#g{g}"), raw)
                .expect("fresh keys of the store dimension");
        }
        let record = serde_json::json!({
            "id": id,
            "question": "What is the capital of France?",
            "generations": generations,
            "references": [REFERENCE],
        });
        records.push(serde_json::from_value(record).expect("well-formed record"));
    }
    Ok((records, store))
}

/// How well repeated fits recover a known vMF.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryReport {
    pub dim: usize,
    pub kappa: f64,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub mean_kappa_hat: f64,
    /// `mean(kappa_hat) - kappa`.
    pub bias: f64,
    /// `mean(kappa_hat / kappa) - 1`; absent when `kappa = 0`.
    pub relative_bias: Option<f64>,
    /// Median of `|kappa_hat / kappa - 1|`; absent when `kappa = 0`.
    pub median_abs_rel_error: Option<f64>,
    /// 5th and 95th percentiles of `kappa_hat / kappa`.
    pub ratio_p05: Option<f64>,
    pub ratio_p95: Option<f64>,
    pub median_mu_dot: f64,
    pub min_mu_dot: f64,
    pub median_r_bar: f64,
    /// Largest `|A_d(kappa_hat) - r_bar|` over fits that were not clamped.
    pub max_residual: f64,
    /// Fits pinned to a boundary of the concentration range.
    pub clamped: usize,
    /// Trials whose resultant vanished.
    pub no_mean_direction: usize,
}

struct Trial {
    kappa_hat: f64,
    mu_dot: f64,
    r_bar: f64,
    residual: Option<f64>,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

fn quantile(mut v: Vec<f64>, q: f64) -> f64 {
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q;
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Samples `trials` batches of size `n` from `vMF(mu*, kappa)` with a fresh
/// random `mu*` per trial, fits each, and summarizes the recovery. Trial `t`
/// draws from its own ChaCha stream, so results do not depend on threading.
pub fn recovery_study(
    dim: usize,
    kappa: f64,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<RecoveryReport, VmfError> {
    if dim < 2 {
        return Err(VmfError::DimensionTooSmall(dim));
    }
    if n < 2 {
        return Err(VmfError::TooFewSamples(n));
    }
    if trials == 0 {
        return Err(VmfError::EmptyBatch);
    }
    if !(0.0..=KAPPA_MAX).contains(&kappa) {
        return Err(VmfError::InvalidKappa(kappa));
    }

    let results: Vec<Result<Option<Trial>, VmfError>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let mu = sample_uniform_sphere(dim, &mut rng);
            let batch = sample_vmf_with_rng(&VmfParams::new(mu.clone(), kappa)?, n, &mut rng);
            match fit(&batch) {
                Ok(f) => Ok(Some(Trial {
                    kappa_hat: f.params.kappa,
                    mu_dot: f.params.mu.dot(&mu),
                    r_bar: f.r_bar,
                    residual: (f.solver != Solver::BoundaryClamp).then_some(f.residual),
                })),
                Err(VmfError::NoMeanDirection) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut done = Vec::with_capacity(trials);
    for r in results {
        if let Some(t) = r? {
            done.push(t);
        }
    }
    let no_mean_direction = trials - done.len();
    let k = done.len() as f64;
    let mean_kappa_hat = done.iter().map(|t| t.kappa_hat).sum::<f64>() / k;
    let ratios: Option<Vec<f64>> = (kappa > 0.0 && !done.is_empty())
        .then(|| done.iter().map(|t| t.kappa_hat / kappa).collect());
    Ok(RecoveryReport {
        dim,
        kappa,
        n,
        trials,
        seed,
        mean_kappa_hat,
        bias: mean_kappa_hat - kappa,
        relative_bias: ratios.as_ref().map(|r| r.iter().sum::<f64>() / k - 1.0),
        median_abs_rel_error: ratios
            .as_ref()
            .map(|r| median(r.iter().map(|x| (x - 1.0).abs()).collect())),
        ratio_p05: ratios.as_ref().map(|r| quantile(r.clone(), 0.05)),
        ratio_p95: ratios.as_ref().map(|r| quantile(r.clone(), 0.95)),
        median_mu_dot: median(done.iter().map(|t| t.mu_dot).collect()),
        min_mu_dot: done.iter().map(|t| t.mu_dot).fold(f64::INFINITY, f64::min),
        median_r_bar: median(done.iter().map(|t| t.r_bar).collect()),
        max_residual: done.iter().filter_map(|t| t.residual).fold(0.0, f64::max),
        clamped: done.iter().filter(|t| t.residual.is_none()).count(),
        no_mean_direction,
    })
}
