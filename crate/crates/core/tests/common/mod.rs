//! Test helpers: fixture paths and a minimal in-process embedding service.

#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use reqmatch::embedding::HashBackend;
use serde_json::{json, Value};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

/// How the mock service misbehaves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    None,
    /// second row of every response is one value short
    RaggedRow,
    /// every /embed answers HTTP 500
    ServerError,
    /// /embed answers one row fewer than requested
    DropRow,
}

pub struct MockService {
    pub url: String,
    pub embed_calls: Arc<AtomicUsize>,
    pub max_seen_batch: Arc<AtomicUsize>,
}

/// Serves `/health` and `/embed` for `model`, answering with hash
/// pseudo-embeddings of dimension `dim`.
pub fn spawn_service(model: &str, dim: usize, fault: Fault) -> MockService {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let embed_calls = Arc::new(AtomicUsize::new(0));
    let max_seen_batch = Arc::new(AtomicUsize::new(0));
    let model = model.to_owned();
    let (calls, max_batch) = (embed_calls.clone(), max_seen_batch.clone());
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { continue };
            let model = model.clone();
            let (calls, max_batch) = (calls.clone(), max_batch.clone());
            thread::spawn(move || {
                let _ = handle(stream, &model, dim, fault, &calls, &max_batch);
            });
        }
    });
    MockService {
        url,
        embed_calls,
        max_seen_batch,
    }
}

fn handle(
    mut stream: TcpStream,
    model: &str,
    dim: usize,
    fault: Fault,
    calls: &AtomicUsize,
    max_batch: &AtomicUsize,
) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let mut content_length = 0;
    loop {
        let mut h = String::new();
        reader.read_line(&mut h)?;
        if h == "\r\n" || h.is_empty() {
            break;
        }
        let lower = h.to_ascii_lowercase();
        if let Some(v) = lower.strip_prefix("content-length:") {
            content_length = v.trim().parse().unwrap_or(0);
        }
    }
    let mut body = vec![0; content_length];
    reader.read_exact(&mut body)?;

    let (status, payload) = if request_line.starts_with("GET /health") {
        (200, json!({"status": "ok", "model": model, "dim": dim}))
    } else if request_line.starts_with("POST /embed") {
        calls.fetch_add(1, Ordering::SeqCst);
        let req: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
        let texts: Vec<String> = req["texts"]
            .as_array()
            .map(|a| a.iter().filter_map(|t| t.as_str().map(str::to_owned)).collect())
            .unwrap_or_default();
        max_batch.fetch_max(texts.len(), Ordering::SeqCst);
        let normalize = req["normalize"].as_bool().unwrap_or(false);
        if texts.is_empty() || texts.len() > 256 {
            (400, json!({"error": "batch must hold 1..=256 texts"}))
        } else if fault == Fault::ServerError {
            (500, json!({"error": "model failure"}))
        } else {
            let backend = HashBackend::new(dim, 42);
            let mut rows: Vec<Vec<f64>> = texts
                .iter()
                .map(|t| {
                    let e = backend.embed_text(t);
                    if normalize {
                        reqmatch::embedding::l2_normalize(&e).values
                    } else {
                        e.values
                    }
                })
                .collect();
            match fault {
                Fault::RaggedRow if rows.len() > 1 => {
                    rows[1].pop();
                }
                Fault::DropRow => {
                    rows.pop();
                }
                _ => {}
            }
            (200, json!({"model": model, "dim": dim, "embeddings": rows}))
        }
    } else {
        (404, json!({"error": "not found"}))
    };

    let body = payload.to_string();
    let reason = match status {
        200 => "OK",
        400 => "Bad Request",
        404 => "Not Found",
        _ => "Internal Server Error",
    };
    write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )?;
    stream.flush()
}

/// A local address nothing listens on.
pub fn dead_endpoint() -> String {
    let l = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = l.local_addr().unwrap();
    drop(l);
    format!("http://{addr}")
}

/// Compares two JSON values: structure, strings, integers and booleans
/// exactly; floats within `tol`.
pub fn json_close(a: &Value, b: &Value, tol: f64, path: &str) -> Result<(), String> {
    match (a, b) {
        (Value::Object(x), Value::Object(y)) => {
            let kx: Vec<&String> = x.keys().collect();
            let ky: Vec<&String> = y.keys().collect();
            if kx != ky {
                return Err(format!("{path}: keys {kx:?} != {ky:?}"));
            }
            for k in x.keys() {
                json_close(&x[k], &y[k], tol, &format!("{path}.{k}"))?;
            }
            Ok(())
        }
        (Value::Array(x), Value::Array(y)) => {
            if x.len() != y.len() {
                return Err(format!("{path}: length {} != {}", x.len(), y.len()));
            }
            for (i, (p, q)) in x.iter().zip(y).enumerate() {
                json_close(p, q, tol, &format!("{path}[{i}]"))?;
            }
            Ok(())
        }
        (Value::Number(x), Value::Number(y)) if x.is_f64() || y.is_f64() => {
            let (p, q) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            if (p - q).abs() <= tol {
                Ok(())
            } else {
                Err(format!("{path}: {p} vs {q}"))
            }
        }
        _ if a == b => Ok(()),
        _ => Err(format!("{path}: {a} != {b}")),
    }
}

/// JSON or JSON Lines file equality under [`json_close`].
pub fn json_file_close(actual: &std::path::Path, expected: &std::path::Path, tol: f64) -> Result<(), String> {
    let a = std::fs::read_to_string(actual).map_err(|e| format!("{}: {e}", actual.display()))?;
    let b = std::fs::read_to_string(expected).map_err(|e| format!("{}: {e}", expected.display()))?;
    let parse = |s: &str| -> Vec<Value> {
        match serde_json::from_str::<Value>(s) {
            Ok(v) => vec![v],
            Err(_) => s
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| serde_json::from_str(l).unwrap())
                .collect(),
        }
    };
    let (va, vb) = (parse(&a), parse(&b));
    if va.len() != vb.len() {
        return Err(format!("record count {} != {}", va.len(), vb.len()));
    }
    for (i, (x, y)) in va.iter().zip(&vb).enumerate() {
        json_close(x, y, tol, &format!("#{i}"))?;
    }
    Ok(())
}
