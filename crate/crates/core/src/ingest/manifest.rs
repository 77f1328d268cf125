//! JSONL question manifests.
//!
//! One record per line. Unknown fields are carried through untouched, except
//! `solution` (ScienceQA's worked answer), which is dropped on read so it can
//! never leak downstream.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::IngestError;

const DROPPED_FIELDS: [&str; 1] = ["solution"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mcq {
    pub options: Vec<String>,
    pub gt_index: usize,
}

/// One evaluation unit. Generation 0 is the answer that gets labeled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub id: String,
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
    pub generations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub references: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mcq: Option<Mcq>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_keys: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub option_embedding_keys: Option<Vec<String>>,
    /// Free-form sampling metadata (temperature, top_p, ...).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gen_config: Option<Value>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

/// What generation 0 is judged against.
#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    References(&'a [String]),
    Mcq(&'a Mcq),
}

impl QuestionRecord {
    pub fn target(&self) -> Target<'_> {
        match (&self.references, &self.mcq) {
            (Some(r), _) => Target::References(r),
            (None, Some(m)) => Target::Mcq(m),
            (None, None) => unreachable!("validated records carry a target"),
        }
    }

    /// Store key for generation `i`: the manifest's key if given, otherwise
    /// `"{id}#g{i}"`.
    pub fn generation_key(&self, i: usize) -> String {
        match &self.embedding_keys {
            Some(keys) => keys[i].clone(),
            None => format!("{}#g{i}", self.id),
        }
    }

    /// Store key for MCQ option `j`, defaulting to `"{id}#o{j}"`.
    pub fn option_key(&self, j: usize) -> String {
        match &self.option_embedding_keys {
            Some(keys) => keys[j].clone(),
            None => format!("{}#o{j}", self.id),
        }
    }

    /// Checks the record invariants, naming the offending field.
    pub fn validate(&self) -> Result<(), FieldError> {
        if self.id.is_empty() {
            return Err(("id", "must be non-empty".into()));
        }
        if self.generations.is_empty() {
            return Err(("generations", "must hold at least one generation".into()));
        }
        match (&self.references, &self.mcq) {
            (Some(_), Some(_)) => {
                return Err((
                    "references",
                    "records carry references or mcq, not both".into(),
                ))
            }
            (None, None) => {
                return Err(("references", "either references or mcq is required".into()))
            }
            (Some(r), None) if r.is_empty() => {
                return Err(("references", "must hold at least one reference".into()))
            }
            (None, Some(m)) => {
                if m.options.len() < 2 {
                    return Err(("mcq.options", "needs at least 2 options".into()));
                }
                if m.gt_index >= m.options.len() {
                    return Err((
                        "mcq.gt_index",
                        format!(
                            "{} out of range for {} options",
                            m.gt_index,
                            m.options.len()
                        ),
                    ));
                }
            }
            _ => {}
        }
        if let Some(keys) = &self.embedding_keys {
            if keys.len() != self.generations.len() {
                return Err((
                    "embedding_keys",
                    format!(
                        "{} keys for {} generations",
                        keys.len(),
                        self.generations.len()
                    ),
                ));
            }
        }
        if let Some(keys) = &self.option_embedding_keys {
            let Some(m) = &self.mcq else {
                return Err(("option_embedding_keys", "only valid with mcq".into()));
            };
            if keys.len() != m.options.len() {
                return Err((
                    "option_embedding_keys",
                    format!("{} keys for {} options", keys.len(), m.options.len()),
                ));
            }
        }
        Ok(())
    }
}

/// Offending field name and what is wrong with it.
pub type FieldError = (&'static str, String);

fn expect_field(
    obj: &Map<String, Value>,
    field: &'static str,
    required: bool,
    ok: fn(&Value) -> bool,
    expected: &str,
) -> Result<(), FieldError> {
    match obj.get(field) {
        None | Some(Value::Null) if !required => Ok(()),
        None => Err((field, "missing required field".into())),
        Some(v) if ok(v) => Ok(()),
        Some(_) => Err((field, format!("expected {expected}"))),
    }
}

fn expect_string(
    obj: &Map<String, Value>,
    field: &'static str,
    required: bool,
) -> Result<(), FieldError> {
    expect_field(obj, field, required, Value::is_string, "a string")
}

fn expect_strings(
    obj: &Map<String, Value>,
    field: &'static str,
    required: bool,
) -> Result<(), FieldError> {
    let ok = |v: &Value| v.as_array().is_some_and(|a| a.iter().all(Value::is_string));
    expect_field(obj, field, required, ok, "an array of strings")
}

fn check_shape(obj: &Map<String, Value>) -> Result<(), FieldError> {
    expect_string(obj, "id", true)?;
    expect_string(obj, "question", true)?;
    expect_string(obj, "context", false)?;
    expect_strings(obj, "generations", true)?;
    expect_strings(obj, "references", false)?;
    expect_strings(obj, "embedding_keys", false)?;
    expect_strings(obj, "option_embedding_keys", false)?;
    match obj.get("mcq") {
        None | Some(Value::Null) => {}
        Some(Value::Object(m)) => {
            expect_strings(m, "options", true).map_err(|(_, msg)| ("mcq.options", msg))?;
            match m.get("gt_index") {
                Some(Value::Number(n)) if n.as_u64().is_some() => {}
                Some(_) => return Err(("mcq.gt_index", "expected a non-negative integer".into())),
                None => return Err(("mcq.gt_index", "missing required field".into())),
            }
        }
        Some(_) => return Err(("mcq", "expected an object".into())),
    }
    match obj.get("gen_config") {
        None | Some(Value::Null) | Some(Value::Object(_)) => Ok(()),
        Some(_) => Err(("gen_config", "expected an object".into())),
    }
}

/// Parses and validates one manifest line. `line` is 1-based and only used
/// for error reporting.
pub fn parse_record(text: &str, line: usize) -> Result<QuestionRecord, IngestError> {
    let value: Value = serde_json::from_str(text).map_err(|e| IngestError::Parse {
        line,
        message: e.to_string(),
    })?;
    let Value::Object(mut obj) = value else {
        return Err(IngestError::Parse {
            line,
            message: "expected a JSON object".into(),
        });
    };
    let schema = |(field, message): FieldError| IngestError::Schema {
        line,
        field: field.to_string(),
        message,
    };
    check_shape(&obj).map_err(schema)?;
    for f in DROPPED_FIELDS {
        obj.remove(f);
    }
    let record: QuestionRecord =
        serde_json::from_value(Value::Object(obj)).map_err(|e| IngestError::Schema {
            line,
            field: "record".into(),
            message: e.to_string(),
        })?;
    record.validate().map_err(schema)?;
    Ok(record)
}

/// Reads a JSONL manifest. Blank lines are ignored; anything else that fails
/// to parse or validate is an error carrying its line number.
pub fn parse_manifest<R: BufRead>(reader: R) -> Result<Vec<QuestionRecord>, IngestError> {
    let mut records: Vec<QuestionRecord> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let text = line?;
        if text.trim().is_empty() {
            continue;
        }
        let record = parse_record(&text, line_no)?;
        if !seen.insert(record.id.clone()) {
            return Err(IngestError::Schema {
                line: line_no,
                field: "id".into(),
                message: format!("duplicate id {:?}", record.id),
            });
        }
        records.push(record);
    }
    Ok(records)
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<QuestionRecord>, IngestError> {
    let file = File::open(path.as_ref())?;
    parse_manifest(BufReader::new(file))
}

pub fn write_manifest_to<W: Write>(
    records: &[QuestionRecord],
    mut writer: W,
) -> Result<(), IngestError> {
    for r in records {
        serde_json::to_writer(&mut writer, r).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_manifest(
    records: &[QuestionRecord],
    path: impl AsRef<Path>,
) -> Result<(), IngestError> {
    let file = File::create(path.as_ref())?;
    write_manifest_to(records, BufWriter::new(file))
}
