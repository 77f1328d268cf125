//! Manifest and binary embedding files: write, read back, attach.

use dcu::ingest::{
    attach_embeddings, read_embeddings, read_manifest, write_embeddings, write_manifest,
    EmbeddingStore, IngestError,
};
use dcu::synthetic::{generate, SyntheticConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let (records, store) = generate(&SyntheticConfig {
        records: 4,
        dim: 8,
        generations: 3,
        ..Default::default()
    })?;

    let manifest = dir.path().join("manifest.jsonl");
    let embeddings = dir.path().join("embeddings.dcue");
    write_manifest(&records, &manifest)?;
    write_embeddings(&store, &embeddings)?;
    println!(
        "{}",
        std::fs::read_to_string(&manifest)?.lines().next().unwrap()
    );
    println!(
        "embedding file: {} bytes",
        std::fs::metadata(&embeddings)?.len()
    );

    let back = read_embeddings(&embeddings)?;
    assert_eq!(back, store);
    let dataset = attach_embeddings(read_manifest(&manifest)?, &back)?;
    println!(
        "attached {} records, d = {}",
        dataset.records.len(),
        dataset.dim
    );

    // corruption is reported, never silently skipped
    let mut bytes = std::fs::read(&embeddings)?;
    bytes.truncate(bytes.len() - 3);
    match EmbeddingStore::read_from(bytes.as_slice()) {
        Err(e @ IngestError::TruncatedFile { .. }) => println!("truncated copy: {e}"),
        other => panic!("unexpected {other:?}"),
    }
    bytes[0] = b'X';
    match EmbeddingStore::read_from(bytes.as_slice()) {
        Err(e) => println!("bad magic: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
