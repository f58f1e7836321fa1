//! Embedding through a running sentence-embedding service.
//!
//!     cargo run --example remote_embed -- http://127.0.0.1:8000 [model]

use std::error::Error;

use reqmatch::embedding::{RemoteBackend, RemoteClient};
use reqmatch::{EmbeddingBackend, Embedding};

pub fn run_example(endpoint: &str, model: Option<&str>) -> Result<Vec<Embedding>, Box<dyn Error>> {
    let client = RemoteClient::new(endpoint);
    let health = client.health()?;
    println!("{endpoint}: {} ({}, dim {})", health.status, health.model, health.dim);
    let backend = RemoteBackend::connect(client, model, true)?;
    let texts = [
        "Access to production systems is logged and reviewed.",
        "Percentage of encryption keys rotated within policy.",
    ];
    let out = backend.embed_batch(&texts)?;
    for (t, e) in texts.iter().zip(&out) {
        println!("{:.3?}.. |v|={:.6}  {t}", &e.values[..4.min(e.dim())], e.norm());
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    let mut args = std::env::args().skip(1);
    let endpoint = args.next().unwrap_or_else(|| "http://127.0.0.1:8000".into());
    let model = args.next();
    run_example(&endpoint, model.as_deref()).map(|_| ())
}
