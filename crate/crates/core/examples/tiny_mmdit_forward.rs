//! One forward pass of the toy MM-DiT with an attention observer and an
//! I2I logit override.

use anyhow::Result;
use logodiffuser::flowsampler::sample_noise;
use logodiffuser::tinymmdit::{AttentionHook, CaptureFlags, ModelConfig, ModelWeights, TokenSequence};

fn main() -> Result<()> {
    let cfg = ModelConfig::default();
    let weights = ModelWeights::init(&cfg)?;
    println!("weights checksum {}", weights.checksum());

    let latent = sample_noise(1, cfg.n_img(), cfg.patch_dim());
    let tokens = TokenSequence::new(
        weights.embed_prompt("A text LOGO logo decorated with ice."),
        weights.embed_image(latent.view())?,
        &cfg,
    )?;
    println!("joint sequence: {} text + {} image tokens", tokens.t_txt(), cfg.n_img());

    let mut max_err = 0.0f64;
    let mut plain = AttentionHook::capture(CaptureFlags::all_i2i(&cfg)).with_observer(|_, attn| {
        for row in attn.probabilities.rows() {
            let s: f64 = row.iter().map(|&p| p as f64).sum();
            max_err = max_err.max((s - 1.0).abs());
        }
    });
    let out = weights.forward(&tokens, 0.5, &mut plain)?;
    drop(plain);
    println!("captured {} heads, max |row sum - 1| = {max_err:.2e}", out.captured.heads.len());

    // Flatten every I2I logit row: each image token then attends uniformly
    // within the image block.
    let mut flat = AttentionHook::none().with_override(|_, mut i2i| i2i.fill(0.0));
    let flattened = weights.forward(&tokens, 0.5, &mut flat)?;
    let diff = (&flattened.velocity - &out.velocity).mapv(f64::abs).sum();
    println!("velocity L1 change after flattening I2I logits: {diff:.4}");
    Ok(())
}
