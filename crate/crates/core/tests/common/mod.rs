#![allow(dead_code)]

use logodiffuser::cli::{prepare_glyph, RunConfig};
use logodiffuser::glyphkit::GlyphImage;
use logodiffuser::tinymmdit::ModelWeights;

/// 64x64 canvas, 2 layers of width 32: fast enough to run whole pipelines.
pub fn small_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.model.grid = 8;
    cfg.model.d_model = 32;
    cfg.model.n_heads = 2;
    cfg.model.n_layers = 2;
    cfg.sampler.steps = 10;
    cfg.sampler.cutoff_step = 4;
    cfg.io.text = "AB".into();
    cfg
}

pub fn setup(cfg: &RunConfig) -> (ModelWeights, GlyphImage) {
    (ModelWeights::init(&cfg.model).unwrap(), prepare_glyph(cfg).unwrap())
}

pub fn in_dir(cfg: &mut RunConfig, dir: &std::path::Path) {
    cfg.io.output = dir.join("out.pgm");
    cfg.io.manifest = dir.join("manifest.json");
    cfg.io.report = dir.join("sweep.csv");
}
