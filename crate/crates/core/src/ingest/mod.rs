//! Dataset and embedding formats.

mod manifest;
mod remote;
mod store;

pub use manifest::{
    parse_manifest, parse_record, read_manifest, write_manifest, write_manifest_to, FieldError,
    Mcq, QuestionRecord, Target,
};
pub use remote::{embed_remote, EmbedClient, DEFAULT_BATCH_SIZE};
pub use store::{
    read_embeddings, write_embeddings, write_embeddings_atomic, EmbeddingStore, FORMAT_VERSION,
    MAGIC,
};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: field `{field}`: {message}")]
    Schema {
        line: usize,
        field: String,
        message: String,
    },
    #[error("bad magic {0:?}, expected \"DCUE\"")]
    MagicMismatch([u8; 4]),
    #[error("unsupported embedding format version {0}")]
    UnsupportedVersion(u16),
    #[error("embedding file truncated{}", match .entry { Some(i) => format!(" in entry {i}"), None => " in header".into() })]
    TruncatedFile { entry: Option<usize> },
    #[error("bytes after the last declared entry")]
    TrailingBytes,
    #[error("entry {entry}: key is not valid UTF-8")]
    InvalidKey { entry: usize },
    #[error("duplicate key {0:?}")]
    DuplicateKey(String),
    #[error("key of {0} bytes exceeds the 65535-byte limit")]
    KeyTooLong(usize),
    #[error("too many entries for one file")]
    TooManyEntries,
    #[error("invalid embedding dimension {0}")]
    InvalidDimension(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("record {record}: key {key:?} not in embedding store")]
    MissingKey { record: String, key: String },
    #[error("embedding service failed on batch {batch}: {message}")]
    EmbedServiceFailure { batch: usize, message: String },
}

/// A record together with its raw generation (and option) vectors.
#[derive(Debug, Clone)]
pub struct PreparedRecord {
    pub record: QuestionRecord,
    pub generation_vectors: Vec<Vec<f32>>,
    pub option_vectors: Option<Vec<Vec<f32>>>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub dim: usize,
    pub records: Vec<PreparedRecord>,
}

fn lookup(
    store: &EmbeddingStore,
    record: &QuestionRecord,
    key: String,
) -> Result<Vec<f32>, IngestError> {
    match store.get(&key) {
        Some(v) => Ok(v.to_vec()),
        None => Err(IngestError::MissingKey {
            record: record.id.clone(),
            key,
        }),
    }
}

/// Resolves every generation key (and MCQ option key) against `store`.
pub fn attach_embeddings(
    records: Vec<QuestionRecord>,
    store: &EmbeddingStore,
) -> Result<Dataset, IngestError> {
    let mut out = Vec::with_capacity(records.len());
    for record in records {
        let generation_vectors = (0..record.generations.len())
            .map(|i| lookup(store, &record, record.generation_key(i)))
            .collect::<Result<Vec<_>, _>>()?;
        let option_vectors = match &record.mcq {
            Some(m) => Some(
                (0..m.options.len())
                    .map(|j| lookup(store, &record, record.option_key(j)))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            None => None,
        };
        out.push(PreparedRecord {
            record,
            generation_vectors,
            option_vectors,
        });
    }
    Ok(Dataset {
        dim: store.dim(),
        records: out,
    })
}

/// Loads and merges several embedding files; all must share one dimension.
pub fn read_embeddings_many<P: AsRef<std::path::Path>>(
    paths: &[P],
) -> Result<EmbeddingStore, IngestError> {
    let mut iter = paths.iter();
    let Some(first) = iter.next() else {
        return Err(IngestError::InvalidDimension(0));
    };
    let mut store = read_embeddings(first)?;
    for p in iter {
        store.merge(read_embeddings(p)?)?;
    }
    Ok(store)
}
