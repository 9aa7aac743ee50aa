//! Scores image tokens of reconstruction attention under each mode and
//! selects the top share.

use anyhow::Result;
use logodiffuser::cli::{prepare_glyph, RunConfig};
use logodiffuser::coreattn::{layer_scores, select_core_tokens, top_k_indices, variance_scores, ScoreMode};
use logodiffuser::flowsampler::reconstruct_capture;
use logodiffuser::tinymmdit::ModelWeights;

fn main() -> Result<()> {
    let mut cfg = RunConfig::default();
    cfg.sampler.cutoff_step = 1;
    let weights = ModelWeights::init(&cfg.model)?;
    let trace = reconstruct_capture(&weights, &prepare_glyph(&cfg)?, "", &cfg.sampler)?;

    for mode in [ScoreMode::RowMass, ScoreMode::RowMax, ScoreMode::ColumnMass] {
        let scores = layer_scores(&trace, 1, mode)?;
        let set = select_core_tokens(&scores[0], 0.125)?;
        println!("{:>14} layer 0: {} tokens, first {:?}", mode.to_string(), set.len(), &set.indices[..8]);
    }
    let var = variance_scores(&layer_scores(&trace, 1, ScoreMode::RowMass)?)?;
    let top = top_k_indices(&var.scores, 0.125)?;
    println!("layer-variance: first {:?}", &top[..8]);
    Ok(())
}
