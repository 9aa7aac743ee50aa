//! Configuration, prompts, heatmaps and the commands behind the binary.

mod commands;
mod config;
mod heatmap;
mod prompt;

pub use commands::{
    cmd_analyze, cmd_generate, cmd_rasterize, cmd_reconstruct, cmd_sweep, prepare_glyph, AnalysisReport, AnalysisRow,
    CellFailure, SweepReport, SWEEP_METRICS,
};
pub use config::{InjectionSettings, IoSettings, Overrides, RunConfig, SweepGrid};
pub use heatmap::{cmd_export_heatmap, heatmap_pgm, heatmap_pixels, read_values};
pub use prompt::{build_prompt, build_prompt_lang, load_dataset, parse_dataset, PromptRecord};
