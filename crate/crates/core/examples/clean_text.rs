//! Text normalisation, tokenisation and stopword removal.
//!
//!     cargo run --example clean_text -- "The system SHALL log all access attempts."

use reqmatch::preprocess::{clean, tokenize, Stopwords};

pub fn run_example(text: &str) -> (Vec<String>, Vec<String>) {
    let stopwords = Stopwords::english();
    let tokens = tokenize(text);
    let cleaned = clean(text, &stopwords);
    println!("input:   {text}");
    println!("tokens:  {}", tokens.join(" | "));
    println!("cleaned: {}", cleaned.join(" | "));
    (tokens, cleaned)
}

#[allow(dead_code)]
fn main() {
    let text = std::env::args().nth(1).unwrap_or_else(|| {
        "The cloud service provider SHALL rotate all cryptographic keys, at least annually.".into()
    });
    run_example(&text);
}
