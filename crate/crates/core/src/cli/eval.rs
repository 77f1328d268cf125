use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use serde_json::Value;

use super::config::EvalConfig;
use super::{write_atomic, EvalArgs, Failure, Outcome};
use crate::ingest::{read_embeddings_many, read_manifest, EmbeddingStore, QuestionRecord, Target};
use crate::metrics::{
    bootstrap_report, label_correct_mcq, label_correct_text, CorrectnessLabel, EvalError,
    ScoredRecord, DEFAULT_REPLICATES, DEFAULT_ROUGE_THRESHOLD,
};
use crate::vmf::UnitVector;

#[derive(Debug, Clone, PartialEq)]
struct ScoreEntry {
    dcu: f64,
    se: Option<f64>,
}

/// Score lines by id. Lines carrying an `error` field map to `None`.
fn read_scores(path: &Path) -> Result<HashMap<String, Option<ScoreEntry>>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage("io", format!("{}: {e}", path.display())))?;
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |m: &str| {
            Failure::usage(
                "parse_error",
                format!("{} line {}: {m}", path.display(), i + 1),
            )
        };
        let v: Value = serde_json::from_str(line).map_err(|e| bad(&e.to_string()))?;
        let id = v
            .get("id")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("missing string `id`"))?;
        let entry = if v.get("error").is_some() {
            None
        } else {
            let dcu = v
                .get("dcu")
                .and_then(Value::as_f64)
                .ok_or_else(|| bad("missing number `dcu`"))?;
            let se = match v.get("se") {
                None | Some(Value::Null) => None,
                Some(s) => Some(s.as_f64().ok_or_else(|| bad("`se` is not a number"))?),
            };
            Some(ScoreEntry { dcu, se })
        };
        if out.insert(id.to_string(), entry).is_some() {
            return Err(bad(&format!("duplicate id {id:?}")));
        }
    }
    Ok(out)
}

fn unit(raw: &[f32], what: &str, id: &str) -> Result<UnitVector, Failure> {
    UnitVector::normalize_f32(raw)
        .map_err(|e| Failure::usage("invalid_embedding", format!("record {id}: {what}: {e}")))
}

fn label(
    record: &QuestionRecord,
    store: Option<&EmbeddingStore>,
    mcq: bool,
    threshold: f64,
) -> Result<CorrectnessLabel, Failure> {
    let invalid =
        |e: EvalError| Failure::usage("invalid_record", format!("record {}: {e}", record.id));
    match record.target() {
        Target::References(refs) => {
            label_correct_text(&record.generations[0], refs, threshold).map_err(invalid)
        }
        Target::Mcq(m) if mcq => {
            let store = store
                .ok_or_else(|| Failure::usage("missing_embeddings", "--mcq needs --embeddings"))?;
            let get = |key: String| {
                store.get(&key).ok_or_else(|| {
                    Failure::usage(
                        "missing_key",
                        format!("record {}: key {key:?} not in embedding store", record.id),
                    )
                })
            };
            let answer = unit(get(record.generation_key(0))?, "generation 0", &record.id)?;
            let options = (0..m.options.len())
                .map(|j| unit(get(record.option_key(j))?, "option", &record.id))
                .collect::<Result<Vec<_>, _>>()?;
            label_correct_mcq(&answer, &options, m.gt_index).map_err(invalid)
        }
        Target::Mcq(m) => {
            label_correct_text(&record.generations[0], &[&m.options[m.gt_index]], threshold)
                .map_err(invalid)
        }
    }
}

pub(super) fn run(
    args: EvalArgs,
    cfg: &EvalConfig,
    stderr: &mut dyn Write,
) -> Result<Outcome, Failure> {
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let replicates = args
        .replicates
        .or(cfg.replicates)
        .unwrap_or(DEFAULT_REPLICATES);
    let threshold = args
        .threshold
        .or(cfg.threshold)
        .unwrap_or(DEFAULT_ROUGE_THRESHOLD);
    let dataset = args
        .dataset
        .clone()
        .or_else(|| cfg.dataset.clone())
        .unwrap_or_default();
    let model = args
        .model
        .clone()
        .or_else(|| cfg.model.clone())
        .unwrap_or_default();

    let records = read_manifest(&args.manifest)?;
    let mut scores = read_scores(&args.scores)?;
    let store = if args.embeddings.is_empty() {
        None
    } else {
        Some(read_embeddings_many(&args.embeddings)?)
    };

    let mut scored = Vec::with_capacity(records.len());
    let mut skipped = 0usize;
    for r in &records {
        match scores.remove(&r.id) {
            Some(Some(s)) => scored.push(ScoredRecord {
                question_id: r.id.clone(),
                dcu: s.dcu,
                se: s.se,
                correct: label(r, store.as_ref(), args.mcq, threshold)?,
            }),
            Some(None) | None => skipped += 1,
        }
    }
    if let Some(id) = scores.keys().min() {
        return Err(Failure::usage(
            "unknown_id",
            format!("score id {id:?} does not appear in the manifest"),
        ));
    }
    if skipped > 0 {
        let _ = writeln!(
            stderr,
            "warning: {skipped} record(s) without a usable score were left out"
        );
    }

    let mut report = bootstrap_report(&scored, replicates, seed)?;
    report.dataset = dataset;
    report.model = model;
    if report.auroc_dcu.is_none() {
        return Err(EvalError::DegenerateLabels.into());
    }
    if let Some(path) = &args.csv {
        write_atomic(path, report.to_csv().as_bytes())?;
    }
    let mut json = serde_json::to_vec_pretty(&report).expect("serializable report");
    json.push(b'\n');
    match &args.out {
        Some(path) => {
            write_atomic(path, &json)?;
            Ok(Outcome::ok(Vec::new()))
        }
        None => Ok(Outcome::ok(json)),
    }
}
