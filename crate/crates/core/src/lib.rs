//! Core-token attention injection for glyph-preserving logo generation on a
//! toy multimodal diffusion transformer.
//!
//! The pipeline rasterizes target text into a glyph image, reconstructs it
//! with the [`tinymmdit`] model while recording image-to-image attention,
//! ranks image tokens by attention score (optionally averaged over layers),
//! and injects the attention rows of the top-ranked "core" tokens into a
//! prompt-conditioned generation run.

pub mod cli;
pub mod coreattn;
pub mod error;
pub mod flowsampler;
pub mod glyphkit;
pub mod manifest;
pub mod metrics;
pub mod tensorfile;
pub mod tinymmdit;

pub use error::{Error, Result};

/// Crate version recorded in run manifests.
pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
