use serde_json::Value;

use super::{Failure, FitArgs, Outcome, EXIT_OK};
use crate::ingest::{read_embeddings_many, EmbeddingStore};
use crate::vmf::{fit, EmbeddingBatch};

fn group_batch(store: &EmbeddingStore, keys: &[String]) -> Result<EmbeddingBatch, Failure> {
    let mut raw = Vec::with_capacity(keys.len());
    for k in keys {
        match store.get(k) {
            Some(v) => raw.push(v),
            None => {
                return Err(Failure::usage(
                    "missing_key",
                    format!("key {k:?} not in embedding store"),
                ))
            }
        }
    }
    Ok(EmbeddingBatch::from_raw_f32(&raw)?)
}

pub(super) fn run(args: FitArgs) -> Result<Outcome, Failure> {
    let store = read_embeddings_many(&args.embeddings)?;
    let mut groups: Vec<Vec<String>> = args
        .groups
        .iter()
        .map(|g| {
            g.split(',')
                .filter(|k| !k.is_empty())
                .map(String::from)
                .collect()
        })
        .collect();
    if !args.keys.is_empty() {
        groups.push(args.keys.clone());
    }
    if groups.is_empty() {
        groups.push(store.iter().map(|(k, _)| k.to_string()).collect());
    }

    let mut out = Vec::new();
    let mut code = EXIT_OK;
    for (i, keys) in groups.iter().enumerate() {
        let line = match group_batch(&store, keys).and_then(|b| fit(&b).map_err(Failure::from)) {
            Ok(f) => serde_json::to_value(&f).expect("serializable fit"),
            Err(f) => {
                code = code.max(f.code);
                let mut v = f.to_json();
                v["group"] = Value::from(i);
                v
            }
        };
        out.extend(serde_json::to_vec(&line).expect("json"));
        out.push(b'\n');
    }
    Ok(Outcome { stdout: out, code })
}
