use ndarray::{s, Array2, ArrayView2};

use super::config::{ModelConfig, VOCAB_SIZE};
use super::weights::ModelWeights;
use crate::error::{Error, Result};
use crate::glyphkit::GlyphImage;

/// 64-bit FNV-1a over the UTF-8 bytes of `word`.
pub fn word_hash(word: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    word.bytes()
        .fold(OFFSET, |h, b| (h ^ b as u64).wrapping_mul(PRIME))
}

/// Embedding-table row used for `word`.
pub fn word_slot(word: &str) -> usize {
    (word_hash(word) % VOCAB_SIZE as u64) as usize
}

fn frequency(k: usize, n_freq: usize) -> f64 {
    1.0 / 10000f64.powf(k as f64 / n_freq as f64)
}

/// Writes `[sin(pos·w_k).., cos(pos·w_k)..]` into `out`; `out.len()` must be even.
fn sinusoid(pos: f64, out: &mut [f32]) {
    let n = out.len() / 2;
    for k in 0..n {
        let a = pos * frequency(k, n);
        out[k] = a.sin() as f32;
        out[n + k] = a.cos() as f32;
    }
}

/// Sinusoidal embedding of a flow time, `t` scaled by 1000.
pub fn timestep_embedding(t: f64, d: usize) -> Vec<f32> {
    let mut out = vec![0.0; d];
    sinusoid(t * 1000.0, &mut out);
    out
}

/// 1-D sinusoidal position encoding for text positions, `len x d`.
pub fn text_positions(len: usize, d: usize) -> Array2<f32> {
    let mut out = Array2::zeros((len, d));
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        sinusoid(i as f64, row.as_slice_mut().unwrap());
    }
    out
}

/// 2-D sinusoidal encoding: first half of each row encodes the patch row,
/// second half the patch column.
pub fn image_positions(grid: usize, d: usize) -> Array2<f32> {
    let mut out = Array2::zeros((grid * grid, d));
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        let slice = row.as_slice_mut().unwrap();
        let (a, b) = slice.split_at_mut(d / 2);
        sinusoid((i / grid) as f64, a);
        sinusoid((i % grid) as f64, b);
    }
    out
}

/// Splits a glyph into raw patch vectors, `N_img x patch²`, row-major over
/// patches and row-major inside each patch.
pub fn patchify(g: &GlyphImage, cfg: &ModelConfig) -> Result<Array2<f64>> {
    let side = cfg.image_side();
    if g.width() != side || g.height() != side {
        return Err(Error::ShapeMismatch(format!(
            "glyph is {}x{}, model expects {side}x{side}",
            g.width(),
            g.height()
        )));
    }
    Ok(patchify_pixels(g.pixels(), cfg))
}

fn patchify_pixels(pixels: &[f64], cfg: &ModelConfig) -> Array2<f64> {
    let (p, grid, side) = (cfg.patch, cfg.grid, cfg.image_side());
    Array2::from_shape_fn((cfg.n_img(), cfg.patch_dim()), |(tok, k)| {
        let (pr, pc) = (tok / grid, tok % grid);
        let (y, x) = (pr * p + k / p, pc * p + k % p);
        pixels[y * side + x]
    })
}

/// Inverse of [`patchify`]: patch vectors back to a row-major pixel raster.
pub fn unpatchify(latent: ArrayView2<f64>, cfg: &ModelConfig) -> Result<Vec<f64>> {
    if latent.dim() != (cfg.n_img(), cfg.patch_dim()) {
        return Err(Error::ShapeMismatch(format!(
            "latent {:?} vs expected {:?}",
            latent.dim(),
            (cfg.n_img(), cfg.patch_dim())
        )));
    }
    let (p, grid, side) = (cfg.patch, cfg.grid, cfg.image_side());
    let mut pixels = vec![0.0; side * side];
    for ((tok, k), &v) in latent.indexed_iter() {
        let (y, x) = ((tok / grid) * p + k / p, (tok % grid) * p + k % p);
        pixels[y * side + x] = v;
    }
    Ok(pixels)
}

impl ModelWeights {
    /// Text block for `prompt`: whitespace-split words mapped through
    /// [`word_slot`], truncated or padded with the pad vector to `t_txt`, plus
    /// 1-D position encoding.
    pub fn embed_prompt(&self, prompt: &str) -> Array2<f32> {
        let cfg = &self.cfg;
        let mut out = text_positions(cfg.t_txt, cfg.d_model);
        let mut words = prompt.split_whitespace();
        for mut row in out.rows_mut() {
            let src = match words.next() {
                Some(w) => self.text_table.row(word_slot(w)),
                None => self.pad.row(0),
            };
            row += &src;
        }
        out
    }

    /// Linear patch embedding plus 2-D position encoding, `N_img x d_model`.
    pub fn embed_image(&self, latent: ArrayView2<f64>) -> Result<Array2<f32>> {
        let cfg = &self.cfg;
        if latent.dim() != (cfg.n_img(), cfg.patch_dim()) {
            return Err(Error::ShapeMismatch(format!(
                "latent {:?} vs expected {:?}",
                latent.dim(),
                (cfg.n_img(), cfg.patch_dim())
            )));
        }
        let raw = latent.mapv(|v| v as f32);
        let mut out = raw.dot(&self.patch_embed);
        out += &image_positions(cfg.grid, cfg.d_model);
        Ok(out)
    }
}

/// Joint token sequence, text tokens first.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSequence {
    pub text: Array2<f32>,
    pub image: Array2<f32>,
}

impl TokenSequence {
    pub fn new(text: Array2<f32>, image: Array2<f32>, cfg: &ModelConfig) -> Result<Self> {
        if text.dim() != (cfg.t_txt, cfg.d_model) || image.dim() != (cfg.n_img(), cfg.d_model) {
            return Err(Error::ShapeMismatch(format!(
                "token blocks {:?} + {:?} do not match config",
                text.dim(),
                image.dim()
            )));
        }
        if text.iter().chain(image.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteActivation("input tokens".into()));
        }
        Ok(Self { text, image })
    }

    pub fn joint_len(&self) -> usize {
        self.text.nrows() + self.image.nrows()
    }

    /// Text/image boundary index.
    pub fn t_txt(&self) -> usize {
        self.text.nrows()
    }

    pub fn joint(&self) -> Array2<f32> {
        let mut out = Array2::zeros((self.joint_len(), self.text.ncols()));
        out.slice_mut(s![..self.t_txt(), ..]).assign(&self.text);
        out.slice_mut(s![self.t_txt().., ..]).assign(&self.image);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glyphkit::GlyphImage;

    fn cfg() -> ModelConfig {
        ModelConfig {
            d_model: 16,
            n_heads: 2,
            n_layers: 1,
            patch: 8,
            grid: 2,
            t_txt: 6,
            seed: 3,
        }
    }

    #[test]
    fn token_zero_is_top_left_patch() {
        let mut px = vec![0.0; 256];
        px[0] = 1.0; // (0,0)
        px[8] = 0.5; // (8,0) -> token 1
        px[8 * 16] = 0.25; // (0,8) -> token 2
        let g = GlyphImage::from_pixels(16, 16, px).unwrap();
        let raw = patchify(&g, &cfg()).unwrap();
        assert_eq!(raw.dim(), (4, 64));
        assert_eq!(raw[[0, 0]], 1.0);
        assert_eq!(raw[[1, 0]], 0.5);
        assert_eq!(raw[[2, 0]], 0.25);
        let back = unpatchify(raw.view(), &cfg()).unwrap();
        assert_eq!(back, g.pixels());
    }

    #[test]
    fn wrong_size_glyph_rejected() {
        let g = GlyphImage::from_pixels(8, 8, vec![0.0; 64]).unwrap();
        assert!(matches!(patchify(&g, &cfg()), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn zero_image_tokens_differ_only_by_position() {
        let w = ModelWeights::init(&cfg()).unwrap();
        let raw = Array2::<f64>::zeros((4, 64));
        let emb = w.embed_image(raw.view()).unwrap();
        assert_eq!(emb, image_positions(2, 16));
    }

    #[test]
    fn one_patch_translation_permutes_raw_tokens() {
        let c = ModelConfig { grid: 4, ..cfg() };
        let side = c.image_side();
        let mut px = vec![0.0; side * side];
        for y in 3..13 {
            for x in 1..7 {
                px[y * side + x] = ((x * 7 + y) % 5) as f64 / 4.0;
            }
        }
        let mut shifted = vec![0.0; side * side];
        for y in 0..side {
            for x in 0..side - 8 {
                shifted[y * side + x + 8] = px[y * side + x];
            }
        }
        let a = patchify(&GlyphImage::from_pixels(side, side, px).unwrap(), &c).unwrap();
        let b = patchify(&GlyphImage::from_pixels(side, side, shifted).unwrap(), &c).unwrap();
        for tok in 0..16 {
            let (r, col) = (tok / 4, tok % 4);
            if col + 1 < 4 {
                assert_eq!(b.row(r * 4 + col + 1), a.row(tok));
            }
        }
    }

    #[test]
    fn empty_prompt_is_all_pad() {
        let w = ModelWeights::init(&cfg()).unwrap();
        let block = w.embed_prompt("");
        let pos = text_positions(6, 16);
        for i in 0..6 {
            let expected = &pos.row(i) + &w.pad.row(0);
            assert_eq!(block.row(i), expected);
        }
        assert_eq!(w.embed_prompt("  \t "), block);
    }

    #[test]
    fn one_word_change_changes_one_position() {
        let w = ModelWeights::init(&cfg()).unwrap();
        assert_ne!(word_slot("red"), word_slot("blue"));
        let a = w.embed_prompt("a red logo");
        let b = w.embed_prompt("a blue logo");
        assert_eq!(a, w.embed_prompt("a red logo"));
        let differing: Vec<usize> = (0..6).filter(|&i| a.row(i) != b.row(i)).collect();
        assert_eq!(differing, vec![1]);
    }

    #[test]
    fn long_prompt_truncates() {
        let w = ModelWeights::init(&cfg()).unwrap();
        assert_eq!(w.embed_prompt("a b c d e f g h"), w.embed_prompt("a b c d e f"));
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(word_hash(""), 0xcbf29ce484222325);
        assert_eq!(word_hash("a"), 0xaf63dc4c8601ec8c);
    }
}
