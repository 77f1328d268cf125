#![allow(dead_code)]

use std::path::{Path, PathBuf};

use dcu::ingest::{write_embeddings, write_manifest, EmbeddingStore, QuestionRecord};
use dcu::metrics::{label_correct_text, ScoredRecord};
use dcu::vmf::{score_batch, EmbeddingBatch};

pub struct CliOutput {
    pub code: i32,
    pub stdout: Vec<u8>,
    pub stderr: String,
}

impl CliOutput {
    pub fn text(&self) -> String {
        String::from_utf8(self.stdout.clone()).unwrap()
    }

    pub fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.stdout).unwrap()
    }

    pub fn lines(&self) -> Vec<serde_json::Value> {
        self.text()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect()
    }
}

pub fn cli<S: AsRef<str>>(args: &[S]) -> CliOutput {
    let mut all = vec!["dcu".to_string()];
    all.extend(args.iter().map(|a| a.as_ref().to_string()));
    let mut stdout = Vec::new();
    let mut stderr = Vec::new();
    let code = dcu::cli::run(all, &mut stdout, &mut stderr);
    CliOutput {
        code,
        stdout,
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

pub fn p(path: &Path) -> String {
    path.to_string_lossy().into_owned()
}

/// Writes `manifest.jsonl` and `emb.dcue` into `dir`.
pub fn write_dataset(
    dir: &Path,
    records: &[QuestionRecord],
    store: &EmbeddingStore,
) -> (PathBuf, PathBuf) {
    let m = dir.join("manifest.jsonl");
    let e = dir.join("emb.dcue");
    write_manifest(records, &m).unwrap();
    write_embeddings(store, &e).unwrap();
    (m, e)
}

/// DCU score and ROUGE label for every record, without going through files.
pub fn score_records(records: &[QuestionRecord], store: &EmbeddingStore) -> Vec<ScoredRecord> {
    records
        .iter()
        .map(|r| {
            let raw: Vec<&[f32]> = (0..r.generations.len())
                .map(|i| store.get(&r.generation_key(i)).unwrap())
                .collect();
            let batch = EmbeddingBatch::from_raw_f32(&raw).unwrap();
            ScoredRecord {
                question_id: r.id.clone(),
                dcu: score_batch(&batch).unwrap().dcu,
                se: None,
                correct: label_correct_text(
                    &r.generations[0],
                    r.references.as_deref().unwrap(),
                    0.1,
                )
                .unwrap(),
            }
        })
        .collect()
}

/// Local HTTP server answering every JSON POST with `handler(body)`.
/// Returns the base URL; the server lives until the process exits.
pub fn mock_server<F>(handler: F) -> String
where
    F: Fn(&serde_json::Value) -> (u16, String) + Send + 'static,
{
    let server = tiny_http::Server::http("127.0.0.1:0").unwrap();
    let port = server.server_addr().to_ip().unwrap().port();
    std::thread::spawn(move || {
        for mut req in server.incoming_requests() {
            let mut body = String::new();
            req.as_reader().read_to_string(&mut body).unwrap();
            let value = serde_json::from_str(&body).unwrap_or(serde_json::Value::Null);
            let (status, reply) = handler(&value);
            let header = tiny_http::Header::from_bytes("Content-Type", "application/json").unwrap();
            let resp = tiny_http::Response::from_string(reply)
                .with_status_code(status)
                .with_header(header);
            let _ = req.respond(resp);
        }
    });
    format!("http://127.0.0.1:{port}/")
}

/// A port with nothing listening on it.
pub fn dead_endpoint() -> String {
    let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = l.local_addr().unwrap().port();
    drop(l);
    format!("http://127.0.0.1:{port}/")
}
