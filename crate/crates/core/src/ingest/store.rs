//! Binary embedding store.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic   b"DCUE"
//! version u16   (currently 1)
//! dim     u32
//! count   u32
//! count × { key_len u16, key bytes (UTF-8), dim × f32 }
//! ```
//!
//! Vectors are stored exactly as produced by the encoder; normalization
//! happens at fit time, never at rest.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use indexmap::IndexMap;

use super::IngestError;

pub const MAGIC: [u8; 4] = *b"DCUE";
pub const FORMAT_VERSION: u16 = 1;

/// Keyed raw embeddings sharing one dimension, in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    entries: IndexMap<String, Vec<f32>>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Result<Self, IngestError> {
        if dim == 0 || dim > u32::MAX as usize {
            return Err(IngestError::InvalidDimension(dim));
        }
        Ok(Self {
            dim,
            entries: IndexMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, key: impl Into<String>, vector: Vec<f32>) -> Result<(), IngestError> {
        let key = key.into();
        if vector.len() != self.dim {
            return Err(IngestError::DimensionMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if key.len() > u16::MAX as usize {
            return Err(IngestError::KeyTooLong(key.len()));
        }
        if self.entries.contains_key(&key) {
            return Err(IngestError::DuplicateKey(key));
        }
        self.entries.insert(key, vector);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&[f32]> {
        self.entries.get(key).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Appends every entry of `other`. Both stores must share a dimension and
    /// have disjoint keys; on error `self` is left unchanged.
    pub fn merge(&mut self, other: EmbeddingStore) -> Result<(), IngestError> {
        if other.dim != self.dim {
            return Err(IngestError::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        if let Some(k) = other.entries.keys().find(|k| self.entries.contains_key(*k)) {
            return Err(IngestError::DuplicateKey(k.clone()));
        }
        self.entries.extend(other.entries);
        Ok(())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), IngestError> {
        let count = u32::try_from(self.entries.len()).map_err(|_| IngestError::TooManyEntries)?;
        w.write_all(&MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&count.to_le_bytes())?;
        for (key, vector) in &self.entries {
            w.write_all(&(key.len() as u16).to_le_bytes())?;
            w.write_all(key.as_bytes())?;
            for x in vector {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a whole store. Anything after the declared entries is an error.
    pub fn read_from<R: Read>(mut r: R) -> Result<Self, IngestError> {
        let mut magic = [0u8; 4];
        read_header(&mut r, &mut magic)?;
        if magic != MAGIC {
            return Err(IngestError::MagicMismatch(magic));
        }
        let version = u16::from_le_bytes(read_array(&mut r, None)?);
        if version != FORMAT_VERSION {
            return Err(IngestError::UnsupportedVersion(version));
        }
        let dim = u32::from_le_bytes(read_array(&mut r, None)?) as usize;
        let count = u32::from_le_bytes(read_array(&mut r, None)?) as usize;
        let mut store = Self::new(dim)?;
        let mut payload = vec![0u8; dim * 4];
        for entry in 0..count {
            let key_len = u16::from_le_bytes(read_array(&mut r, Some(entry))?) as usize;
            let mut key = vec![0u8; key_len];
            read_exact(&mut r, &mut key, Some(entry))?;
            let key = String::from_utf8(key).map_err(|_| IngestError::InvalidKey { entry })?;
            read_exact(&mut r, &mut payload, Some(entry))?;
            let vector = payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            store.insert(key, vector)?;
        }
        let mut probe = [0u8; 1];
        if r.read(&mut probe)? != 0 {
            return Err(IngestError::TrailingBytes);
        }
        Ok(store)
    }
}

fn read_header<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<(), IngestError> {
    match r.read_exact(buf) {
        Ok(()) => Ok(()),
        // too short to even hold the magic
        Err(e) if e.kind() == ErrorKind::UnexpectedEof => {
            Err(IngestError::TruncatedFile { entry: None })
        }
        Err(e) => Err(e.into()),
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], entry: Option<usize>) -> Result<(), IngestError> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        ErrorKind::UnexpectedEof => IngestError::TruncatedFile { entry },
        _ => e.into(),
    })
}

fn read_array<R: Read, const N: usize>(
    r: &mut R,
    entry: Option<usize>,
) -> Result<[u8; N], IngestError> {
    let mut buf = [0u8; N];
    read_exact(r, &mut buf, entry)?;
    Ok(buf)
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingStore, IngestError> {
    EmbeddingStore::read_from(BufReader::new(File::open(path.as_ref())?))
}

pub fn write_embeddings(store: &EmbeddingStore, path: impl AsRef<Path>) -> Result<(), IngestError> {
    store.write_to(BufWriter::new(File::create(path.as_ref())?))
}

/// Writes through a temporary file in the destination directory and renames
/// it into place, so a failed write never leaves a partial file at `path`.
pub fn write_embeddings_atomic(
    store: &EmbeddingStore,
    path: impl AsRef<Path>,
) -> Result<(), IngestError> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    store.write_to(BufWriter::new(tmp.as_file_mut()))?;
    tmp.persist(path).map_err(|e| IngestError::Io(e.error))?;
    Ok(())
}
