//! Talking to embedding and NLI services over HTTP, here served by a local
//! mock so the example is self-contained.

use std::time::Duration;

use dcu::ingest::EmbedClient;
use dcu::semantic::{cluster_generations, semantic_entropy, RemoteNliOracle};
use serde_json::{json, Value};

fn serve(handler: fn(&Value) -> Value) -> String {
    let server = tiny_http::Server::http("127.0.0.1:0").unwrap();
    let port = server.server_addr().to_ip().unwrap().port();
    std::thread::spawn(move || {
        for mut req in server.incoming_requests() {
            let mut body = String::new();
            req.as_reader().read_to_string(&mut body).unwrap();
            let reply = handler(&serde_json::from_str(&body).unwrap());
            let header = tiny_http::Header::from_bytes("Content-Type", "application/json").unwrap();
            let _ = req
                .respond(tiny_http::Response::from_string(reply.to_string()).with_header(header));
        }
    });
    format!("http://127.0.0.1:{port}/")
}

// toy encoder: a few character statistics
fn embed(v: &Value) -> Value {
    let vectors: Vec<Vec<f64>> = v["texts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| {
            let s = t.as_str().unwrap();
            vec![
                s.len() as f64,
                s.bytes().filter(|b| b"aeiou".contains(b)).count() as f64,
                1.0,
            ]
        })
        .collect();
    json!({ "embeddings": vectors })
}

// entailment when the last word agrees, ignoring case
fn nli(v: &Value) -> Value {
    let last = |k: &str| {
        v[k].as_str()
            .unwrap()
            .split_whitespace()
            .last()
            .unwrap_or("")
            .to_lowercase()
    };
    let label = if last("premise") == last("hypothesis") {
        "entailment"
    } else {
        "neutral"
    };
    json!({ "label": label })
}

fn main() {
    let texts: Vec<String> = ["Paris", "paris", "Lyon", "Paris", "Nice"]
        .map(String::from)
        .to_vec();

    let client = EmbedClient::new(serve(embed), Duration::from_secs(5))
        .batch_size(2)
        .concurrency(2);
    for (t, v) in texts.iter().zip(client.embed(&texts).unwrap()) {
        println!("{t:<6} -> {v:?}");
    }

    let oracle = RemoteNliOracle::new(serve(nli), Duration::from_secs(5));
    let clusters = cluster_generations(&texts, "Which city?", &oracle).unwrap();
    println!(
        "clusters {:?}, SE = {:.6}",
        clusters.sizes(),
        semantic_entropy(&clusters)
    );
}
