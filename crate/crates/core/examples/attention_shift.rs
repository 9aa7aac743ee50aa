//! Share of core-token attention that falls outside the glyph, with and
//! without layer averaging, over the reconstruction steps.
//!
//!     cargo run --release --example attention_shift -- [TEXT]

use anyhow::Result;
use logodiffuser::cli::{prepare_glyph, RunConfig};
use logodiffuser::coreattn::{attention_shift, build_injection, head_average, InjectionConfig};
use logodiffuser::flowsampler::reconstruct_capture;
use logodiffuser::glyphkit::glyph_mask_patches;
use logodiffuser::tinymmdit::ModelWeights;

fn main() -> Result<()> {
    let mut cfg = RunConfig::default();
    if let Some(text) = std::env::args().nth(1) {
        cfg.io.text = text;
    }
    cfg.sampler.cutoff_step = 6;
    let weights = ModelWeights::init(&cfg.model)?;
    let glyph = prepare_glyph(&cfg)?;
    let mask = glyph_mask_patches(&glyph, cfg.model.patch)?;
    let trace = reconstruct_capture(&weights, &glyph, "", &cfg.sampler)?;
    let inj = InjectionConfig {
        cutoff_step: 6,
        ..InjectionConfig::default()
    };
    let per_layer = build_injection(&trace, &InjectionConfig { averaging: false, ..inj })?;
    let averaged = build_injection(&trace, &inj)?;
    for step in 1..=6 {
        let mut row = format!("step {step}:");
        for (name, plan) in [("per-layer", &per_layer), ("averaged", &averaged)] {
            let mut total = 0.0;
            for layer in 0..trace.n_layers() {
                let map = head_average(&trace.layer_probabilities(step, layer))?;
                let set = plan.set(step, layer).expect("step within cutoff");
                total += attention_shift(&[map.view()], &mask, set)?[0];
            }
            row.push_str(&format!("  {name} shift {:.4}", total / trace.n_layers() as f64));
        }
        println!("{row}");
    }
    Ok(())
}
