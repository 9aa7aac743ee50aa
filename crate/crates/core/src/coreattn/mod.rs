//! Token scoring, layer-wise cumulative averaging, core-token selection,
//! injection planning and attention-shift measurement.

mod plan;
mod scores;
mod select;
mod shift;

pub use plan::{apply_injection, build_injection, inject_rows, layer_scores, InjectionConfig, InjectionPlan};
pub use scores::{cumulative_update, token_scores, variance_scores, CumulativeScore, ScoreMode, ScoreVector};
pub use select::{core_count, select_core_tokens, top_k_indices, CoreTokenSet, SelectionSource};
pub use shift::{attention_shift, head_average, off_mask_mass, MASK_THRESHOLD};
