//! End-to-end logo generation at toy scale with the default settings
//! (28 steps, guidance 7.5, top 12.5% core tokens, injection through step 12,
//! layer-wise averaging).
//!
//!     cargo run --release --example generate_logo -- [TEXT] [OUT.pgm]

use std::time::Instant;

use anyhow::Result;
use logodiffuser::cli::build_prompt;
use logodiffuser::coreattn::{build_injection, InjectionConfig};
use logodiffuser::flowsampler::{generate_with_injection, reconstruct_capture, SamplerConfig};
use logodiffuser::glyphkit::{rasterize_text, BitmapFont, Layout, RasterOptions};
use logodiffuser::tinymmdit::{ModelConfig, ModelWeights};

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let text = args.next().unwrap_or_else(|| "LOGO".to_string());
    let out = args.next().unwrap_or_else(|| "logo.pgm".to_string());

    let model = ModelConfig::default();
    let weights = ModelWeights::init(&model)?;
    let sampler = SamplerConfig::default();
    let glyph = rasterize_text(
        &text,
        &BitmapFont::builtin(),
        Layout::Horizontal,
        RasterOptions {
            width: model.image_side(),
            height: model.image_side(),
            patch: model.patch,
            scale: 2,
        },
    )?;
    let prompt = build_prompt(&text, "golden neon lights")?;
    println!("prompt: {}", prompt.rendered);

    let start = Instant::now();
    let trace = reconstruct_capture(&weights, &glyph, "", &sampler)?;
    println!("reconstruction: {} maps in {:.2?}", trace.map_count(), start.elapsed());

    let plan = build_injection(&trace, &InjectionConfig::default())?;
    let start = Instant::now();
    let (image, manifest) = generate_with_injection(&weights, &prompt.rendered, &trace, &plan, &sampler)?;
    println!(
        "generation: {} steps, {} layer injections in {:.2?}",
        manifest.steps.len(),
        manifest.injections,
        start.elapsed()
    );
    std::fs::write(&out, image.to_pgm())?;
    println!("wrote {out} (checksum {})", manifest.output_checksum);
    Ok(())
}
