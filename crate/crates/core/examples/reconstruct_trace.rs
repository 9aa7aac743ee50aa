//! Captures the reconstruction attention trace of a glyph, saves it and
//! loads it back with checksum verification.
//!
//!     cargo run --release --example reconstruct_trace -- [TRACE.bin]

use anyhow::Result;
use logodiffuser::cli::{prepare_glyph, RunConfig};
use logodiffuser::flowsampler::{reconstruct_capture, AttentionTrace};
use logodiffuser::tinymmdit::ModelWeights;

fn main() -> Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "trace.bin".into());
    let mut cfg = RunConfig::default();
    cfg.sampler.cutoff_step = 4;
    let weights = ModelWeights::init(&cfg.model)?;
    let glyph = prepare_glyph(&cfg)?;
    let trace = reconstruct_capture(&weights, &glyph, "", &cfg.sampler)?;
    println!("{} steps at t = {:?}", trace.steps(), trace.t_values());
    trace.save(&path)?;
    let back = AttentionTrace::load(&path)?;
    println!("{} maps, checksum {} (reloaded {})", back.map_count(), trace.checksum(), back.checksum());
    let p = back.probabilities(1, 0, 0);
    let row_sum: f32 = p.row(0).sum();
    println!("step 1 layer 0 head 0: image row 0 keeps {row_sum:.4} of its mass on image keys");
    Ok(())
}
