use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of rows in the hashed word-embedding table.
pub const VOCAB_SIZE: usize = 4096;
/// Hidden width of each MLP relative to `d_model`.
pub const MLP_RATIO: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub d_model: usize,
    pub n_heads: usize,
    pub n_layers: usize,
    /// Pixels per patch side.
    pub patch: usize,
    /// Patches per image side.
    pub grid: usize,
    /// Text tokens; prompts are truncated or padded to this length.
    pub t_txt: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    /// Toy scale: 64-wide, 4 heads, 6 layers, 16x16 grid of 8x8 patches.
    fn default() -> Self {
        Self {
            d_model: 64,
            n_heads: 4,
            n_layers: 6,
            patch: 8,
            grid: 16,
            t_txt: 16,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("d_model", self.d_model),
            ("n_heads", self.n_heads),
            ("n_layers", self.n_layers),
            ("patch", self.patch),
            ("grid", self.grid),
            ("t_txt", self.t_txt),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidConfig(format!("model.{name} must be at least 1")));
        }
        if !self.d_model.is_multiple_of(self.n_heads) {
            return Err(Error::InvalidConfig(format!(
                "d_model {} is not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        // sinusoidal 2-D position encoding splits d_model into sin/cos quarters
        if !self.d_model.is_multiple_of(4) {
            return Err(Error::InvalidConfig(format!(
                "d_model {} must be a multiple of 4",
                self.d_model
            )));
        }
        Ok(())
    }

    pub fn n_img(&self) -> usize {
        self.grid * self.grid
    }

    pub fn joint_len(&self) -> usize {
        self.t_txt + self.n_img()
    }

    pub fn d_head(&self) -> usize {
        self.d_model / self.n_heads
    }

    /// Values per image token (one raw patch).
    pub fn patch_dim(&self) -> usize {
        self.patch * self.patch
    }

    /// Image side length in pixels.
    pub fn image_side(&self) -> usize {
        self.grid * self.patch
    }

    pub fn mlp_hidden(&self) -> usize {
        self.d_model * MLP_RATIO
    }
}
