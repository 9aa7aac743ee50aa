//! A small seeded multimodal diffusion transformer with joint text-image
//! attention and hooks for capturing and overriding image-to-image logits.

mod attention;
mod config;
mod embed;
mod forward;
mod weights;

pub use attention::{AttentionHook, CaptureFlags, CapturedAttention, CapturedHead, HookSite, JointAttention};
pub use config::{ModelConfig, MLP_RATIO, VOCAB_SIZE};
pub use embed::{
    image_positions, patchify, text_positions, timestep_embedding, unpatchify, word_hash, word_slot,
    TokenSequence,
};
pub use forward::ForwardOutput;
pub use weights::{BlockWeights, ModelWeights, StreamWeights};
