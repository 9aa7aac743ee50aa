//! Builds design prompts from a JSON dataset of words and styles.
//!
//!     cargo run --example prompt_dataset -- [DATASET.json]

use anyhow::Result;
use logodiffuser::cli::{load_dataset, parse_dataset};

const SAMPLE: &str = r#"[
  {"word": "star", "style": "a sky full of constellations"},
  {"word": "café", "style": "steam curls", "lang": "fr"}
]"#;

fn main() -> Result<()> {
    let records = match std::env::args().nth(1) {
        Some(path) => load_dataset(path)?,
        None => parse_dataset(SAMPLE)?,
    };
    for r in records {
        let lang = if r.lang.is_empty() { "-" } else { &r.lang };
        println!("[{lang}] {}", r.rendered);
    }
    Ok(())
}
