use std::path::Path;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::{ModelConfig, VOCAB_SIZE};
use crate::error::{Error, Result};
use crate::tensorfile::{FloatHasher, TensorData, TensorFile};

/// Projections for one modality stream inside a joint block.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamWeights {
    /// `d x 4d`: conditioning vector to (scale1, shift1, scale2, shift2).
    pub modulation: Array2<f32>,
    pub wq: Array2<f32>,
    pub wk: Array2<f32>,
    pub wv: Array2<f32>,
    pub wo: Array2<f32>,
    pub w1: Array2<f32>,
    pub w2: Array2<f32>,
}

/// One joint-attention block: separate text and image projections, shared attention.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockWeights {
    pub text: StreamWeights,
    pub image: StreamWeights,
}

/// All model parameters. Linear maps are stored `in x out` and applied as `x · W`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    pub cfg: ModelConfig,
    pub patch_embed: Array2<f32>,
    pub text_table: Array2<f32>,
    pub pad: Array2<f32>,
    pub time_proj: Array2<f32>,
    pub blocks: Vec<BlockWeights>,
    pub final_mod: Array2<f32>,
    pub head: Array2<f32>,
}

#[derive(Clone, Copy)]
enum Init {
    /// N(0,1)
    Embedding,
    /// N(0,1) / sqrt(fan_in) * gain
    Linear(f64),
}

fn stream_specs(cfg: &ModelConfig) -> [(&'static str, usize, usize, Init); 7] {
    let d = cfg.d_model;
    let h = cfg.mlp_hidden();
    [
        ("modulation", d, 4 * d, Init::Linear(0.1)),
        ("wq", d, d, Init::Linear(1.0)),
        ("wk", d, d, Init::Linear(1.0)),
        ("wv", d, d, Init::Linear(1.0)),
        ("wo", d, d, Init::Linear(1.0)),
        ("w1", d, h, Init::Linear(1.0)),
        ("w2", h, d, Init::Linear(1.0)),
    ]
}

/// Tensor names, shapes and initializers in draw order.
fn layout(cfg: &ModelConfig) -> Vec<(String, usize, usize, Init)> {
    let d = cfg.d_model;
    let mut out = vec![
        ("patch_embed".to_string(), cfg.patch_dim(), d, Init::Linear(1.0)),
        ("text_table".to_string(), VOCAB_SIZE, d, Init::Embedding),
        ("pad".to_string(), 1, d, Init::Embedding),
        ("time_proj".to_string(), d, d, Init::Linear(1.0)),
    ];
    for layer in 0..cfg.n_layers {
        for stream in ["text", "image"] {
            for (name, r, c, init) in stream_specs(cfg) {
                out.push((format!("blocks.{layer}.{stream}.{name}"), r, c, init));
            }
        }
    }
    out.push(("final_mod".to_string(), d, 2 * d, Init::Linear(0.1)));
    out.push(("head".to_string(), d, cfg.patch_dim(), Init::Linear(1.0)));
    out
}

impl StreamWeights {
    fn from_iter(it: &mut impl Iterator<Item = Array2<f32>>) -> Self {
        let mut next = || it.next().expect("layout yields every tensor");
        Self {
            modulation: next(),
            wq: next(),
            wk: next(),
            wv: next(),
            wo: next(),
            w1: next(),
            w2: next(),
        }
    }

    fn tensors(&self) -> [&Array2<f32>; 7] {
        [&self.modulation, &self.wq, &self.wk, &self.wv, &self.wo, &self.w1, &self.w2]
    }
}

impl ModelWeights {
    /// Draws every tensor from one ChaCha8 stream seeded with `cfg.seed`.
    ///
    /// Draw order: `patch_embed`, `text_table`, `pad`, `time_proj`, then per
    /// layer the text stream followed by the image stream (`modulation`,
    /// `wq`, `wk`, `wv`, `wo`, `w1`, `w2`), then `final_mod` and `head`. Each
    /// tensor is filled row-major with standard normals, scaled by
    /// `gain / sqrt(fan_in)` for linear maps (gain 0.1 for modulation maps,
    /// 1 otherwise) and left at unit variance for embedding tables. There are
    /// no bias terms.
    pub fn init(cfg: &ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let tensors = layout(cfg).into_iter().map(|(_, rows, cols, init)| {
            let scale = match init {
                Init::Embedding => 1.0,
                Init::Linear(gain) => gain / (rows as f64).sqrt(),
            };
            Array2::from_shape_fn((rows, cols), |_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                (z * scale) as f32
            })
        });
        // collect first so the draw order is the layout order
        let tensors: Vec<Array2<f32>> = tensors.collect();
        Ok(Self::assemble(*cfg, tensors))
    }

    fn assemble(cfg: ModelConfig, tensors: Vec<Array2<f32>>) -> Self {
        let mut it = tensors.into_iter();
        let patch_embed = it.next().unwrap();
        let text_table = it.next().unwrap();
        let pad = it.next().unwrap();
        let time_proj = it.next().unwrap();
        let blocks = (0..cfg.n_layers)
            .map(|_| BlockWeights {
                text: StreamWeights::from_iter(&mut it),
                image: StreamWeights::from_iter(&mut it),
            })
            .collect();
        let final_mod = it.next().unwrap();
        let head = it.next().unwrap();
        Self {
            cfg,
            patch_embed,
            text_table,
            pad,
            time_proj,
            blocks,
            final_mod,
            head,
        }
    }

    /// Tensors paired with their checkpoint names, in draw order.
    pub fn named_tensors(&self) -> Vec<(String, &Array2<f32>)> {
        let mut refs: Vec<&Array2<f32>> =
            vec![&self.patch_embed, &self.text_table, &self.pad, &self.time_proj];
        for b in &self.blocks {
            refs.extend(b.text.tensors());
            refs.extend(b.image.tensors());
        }
        refs.push(&self.final_mod);
        refs.push(&self.head);
        layout(&self.cfg)
            .into_iter()
            .map(|(name, ..)| name)
            .zip(refs)
            .collect()
    }

    pub fn checksum(&self) -> String {
        let mut h = FloatHasher::new();
        for (name, t) in self.named_tensors() {
            h.str(&name).f32s(t.iter());
        }
        h.finish()
    }

    pub fn to_tensor_file(&self) -> TensorFile {
        let mut f = TensorFile::new();
        let c = &self.cfg;
        f.set_meta("kind", "weights");
        f.set_meta("model.d_model", c.d_model);
        f.set_meta("model.n_heads", c.n_heads);
        f.set_meta("model.n_layers", c.n_layers);
        f.set_meta("model.patch", c.patch);
        f.set_meta("model.grid", c.grid);
        f.set_meta("model.t_txt", c.t_txt);
        f.set_meta("model.seed", c.seed);
        for (name, t) in self.named_tensors() {
            f.push(name, t.shape().to_vec(), TensorData::F32(t.iter().copied().collect()));
        }
        f
    }

    pub fn from_tensor_file(f: &TensorFile) -> Result<Self> {
        if f.meta("kind")? != "weights" {
            return Err(Error::TensorFormat("not a weight checkpoint".into()));
        }
        let cfg = ModelConfig {
            d_model: f.meta_parse("model.d_model")?,
            n_heads: f.meta_parse("model.n_heads")?,
            n_layers: f.meta_parse("model.n_layers")?,
            patch: f.meta_parse("model.patch")?,
            grid: f.meta_parse("model.grid")?,
            t_txt: f.meta_parse("model.t_txt")?,
            seed: f.meta_parse("model.seed")?,
        };
        cfg.validate()?;
        let tensors = layout(&cfg)
            .into_iter()
            .map(|(name, rows, cols, _)| {
                let data = f.get_f32(&name, &[rows, cols])?;
                Ok(Array2::from_shape_vec((rows, cols), data.to_vec()).expect("shape checked"))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::assemble(cfg, tensors))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_tensor_file().write(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_tensor_file(&TensorFile::read(path)?)
    }
}
