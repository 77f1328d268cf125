use std::time::Duration;

use rayon::prelude::*;
use serde::Serialize;

use super::config::ScoreConfig;
use super::{write_atomic, Failure, Outcome, ScoreArgs, DEFAULT_TIMEOUT_MS, EXIT_OK};
use crate::ingest::{read_embeddings_many, read_manifest, EmbeddingStore, QuestionRecord};
use crate::semantic::{
    cluster_generations, semantic_entropy, EquivalenceOracle, ExactMatchOracle, RemoteNliOracle,
};
use crate::vmf::{angles_to, score_batch, EmbeddingBatch, Solver};

#[derive(Debug, Serialize)]
struct Diagnostics {
    solver: Option<Solver>,
    iterations: usize,
    residual: Option<f64>,
    n: usize,
    dim: usize,
    angles_deg: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    se_clusters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'static str>,
}

#[derive(Debug, Serialize)]
struct ScoreLine<'a> {
    id: &'a str,
    dcu: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    se: Option<f64>,
    r_bar: f64,
    kappa: f64,
    diagnostics: Diagnostics,
}

fn score_record(
    record: &QuestionRecord,
    store: &EmbeddingStore,
    oracle: Option<&dyn EquivalenceOracle>,
) -> Result<serde_json::Value, Failure> {
    let mut raw = Vec::with_capacity(record.generations.len());
    for i in 0..record.generations.len() {
        let key = record.generation_key(i);
        match store.get(&key) {
            Some(v) => raw.push(v),
            None => {
                return Err(Failure::usage(
                    "missing_key",
                    format!("record {}: key {key:?} not in embedding store", record.id),
                ))
            }
        }
    }
    let batch = EmbeddingBatch::from_raw_f32(&raw)?;
    let score = score_batch(&batch)?;
    let se = match oracle {
        Some(o) => {
            let clusters = cluster_generations(&record.generations, &record.question, o)?;
            Some((semantic_entropy(&clusters), clusters.num_clusters()))
        }
        None => None,
    };
    let (kappa, solver, iterations, residual, angles, note) = match &score.fit {
        Some(f) => (
            f.params.kappa,
            Some(f.solver),
            f.iterations,
            Some(f.residual),
            angles_to(&batch, &f.params.mu),
            None,
        ),
        None => (
            0.0,
            None,
            0,
            None,
            Vec::new(),
            Some("resultant is zero; no mean direction, scored as maximal uncertainty"),
        ),
    };
    let line = ScoreLine {
        id: &record.id,
        dcu: score.dcu,
        se: se.map(|s| s.0),
        r_bar: score.r_bar,
        kappa,
        diagnostics: Diagnostics {
            solver,
            iterations,
            residual,
            n: batch.len(),
            dim: batch.dim(),
            angles_deg: angles,
            se_clusters: se.map(|s| s.1),
            note,
        },
    };
    Ok(serde_json::to_value(line).expect("serializable score"))
}

pub(super) fn run(args: ScoreArgs, cfg: &ScoreConfig) -> Result<Outcome, Failure> {
    let records = read_manifest(&args.manifest)?;
    let store = read_embeddings_many(&args.embeddings)?;
    let endpoint = args
        .nli_endpoint
        .clone()
        .or_else(|| cfg.nli_endpoint.clone());
    let timeout = Duration::from_millis(
        args.timeout_ms
            .or(cfg.timeout_ms)
            .unwrap_or(DEFAULT_TIMEOUT_MS),
    );
    let oracle: Option<Box<dyn EquivalenceOracle>> = match endpoint {
        Some(url) => Some(Box::new(RemoteNliOracle::new(url, timeout))),
        None if args.se || cfg.se == Some(true) => Some(Box::new(ExactMatchOracle)),
        None => None,
    };

    let lines: Vec<(serde_json::Value, bool)> = records
        .par_iter()
        .map(|r| match score_record(r, &store, oracle.as_deref()) {
            Ok(v) => (v, true),
            Err(f) => {
                let mut v = serde_json::json!({ "id": r.id });
                v["error"] = serde_json::to_value(&f).expect("json");
                (v, false)
            }
        })
        .collect();

    let mut bytes = Vec::new();
    for (v, _) in &lines {
        bytes.extend(serde_json::to_vec(v).expect("json"));
        bytes.push(b'\n');
    }
    let code = if lines.iter().all(|(_, ok)| *ok) {
        EXIT_OK
    } else {
        super::EXIT_RUNTIME
    };
    match &args.out {
        Some(path) => {
            write_atomic(path, &bytes)?;
            Ok(Outcome {
                stdout: Vec::new(),
                code,
            })
        }
        None => Ok(Outcome {
            stdout: bytes,
            code,
        }),
    }
}
