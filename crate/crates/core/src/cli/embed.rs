use std::time::Duration;

use indexmap::IndexMap;

use super::config::EmbedConfig;
use super::{EmbedArgs, Failure, Outcome, DEFAULT_TIMEOUT_MS};
use crate::ingest::{
    read_manifest, write_embeddings_atomic, EmbedClient, EmbeddingStore, DEFAULT_BATCH_SIZE,
};

/// Every (key, text) pair the manifest needs embedded, first occurrence
/// order. A key shared by two records must name the same text.
fn collect_texts(
    records: &[crate::ingest::QuestionRecord],
) -> Result<IndexMap<String, String>, Failure> {
    let mut texts: IndexMap<String, String> = IndexMap::new();
    let mut add = |key: String, text: &str| -> Result<(), Failure> {
        match texts.get(&key) {
            Some(existing) if existing != text => Err(Failure::usage(
                "conflicting_key",
                format!("key {key:?} names two different texts"),
            )),
            Some(_) => Ok(()),
            None => {
                texts.insert(key, text.to_string());
                Ok(())
            }
        }
    };
    for r in records {
        for (i, g) in r.generations.iter().enumerate() {
            add(r.generation_key(i), g)?;
        }
        if let Some(m) = &r.mcq {
            for (j, o) in m.options.iter().enumerate() {
                add(r.option_key(j), o)?;
            }
        }
    }
    Ok(texts)
}

pub(super) fn run(args: EmbedArgs, cfg: &EmbedConfig) -> Result<Outcome, Failure> {
    let endpoint = args
        .endpoint
        .clone()
        .or_else(|| cfg.endpoint.clone())
        .ok_or_else(|| {
            Failure::usage(
                "missing_endpoint",
                "--endpoint is required (flag or [embed] config)",
            )
        })?;
    let timeout = Duration::from_millis(
        args.timeout_ms
            .or(cfg.timeout_ms)
            .unwrap_or(DEFAULT_TIMEOUT_MS),
    );
    let client = EmbedClient::new(endpoint, timeout)
        .batch_size(
            args.batch_size
                .or(cfg.batch_size)
                .unwrap_or(DEFAULT_BATCH_SIZE),
        )
        .concurrency(args.concurrency.or(cfg.concurrency).unwrap_or(1));

    let records = read_manifest(&args.manifest)?;
    let texts = collect_texts(&records)?;
    if texts.is_empty() {
        return Err(Failure::usage(
            "empty_manifest",
            "manifest holds no texts to embed",
        ));
    }
    let (keys, values): (Vec<String>, Vec<String>) = texts.into_iter().unzip();
    let vectors = client.embed(&values)?;
    let mut store = EmbeddingStore::new(vectors[0].len())?;
    for (k, v) in keys.into_iter().zip(vectors) {
        store.insert(k, v)?;
    }
    write_embeddings_atomic(&store, &args.out)
        .map_err(|e| Failure::runtime("io", e.to_string()))?;
    let summary = serde_json::json!({
        "out": args.out.display().to_string(),
        "entries": store.len(),
        "dim": store.dim(),
    });
    let mut out = serde_json::to_vec(&summary).expect("json");
    out.push(b'\n');
    Ok(Outcome::ok(out))
}
