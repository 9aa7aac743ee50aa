use std::path::Path;

use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::tensorfile::{FloatHasher, TensorData, TensorFile};

/// I2I attention recorded during glyph reconstruction.
///
/// Steps are 1-based and stored contiguously from step 1; layers and heads
/// are 0-based. Each stored map is `N_img x N_img`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionTrace {
    n_layers: usize,
    n_heads: usize,
    n_img: usize,
    t_values: Vec<f64>,
    logits: Vec<f32>,
    probabilities: Vec<f32>,
    /// Identifies the inputs that produced the trace.
    pub config_hash: String,
    checksum: String,
}

impl AttentionTrace {
    /// Starts an empty trace; fill it with [`push_step`](Self::push_step) and
    /// finish with [`seal`](Self::seal), which fixes the checksum.
    pub fn new(n_layers: usize, n_heads: usize, n_img: usize, config_hash: String) -> Self {
        let mut t = Self {
            n_layers,
            n_heads,
            n_img,
            t_values: Vec::new(),
            logits: Vec::new(),
            probabilities: Vec::new(),
            config_hash,
            checksum: String::new(),
        };
        t.checksum = t.compute_checksum();
        t
    }

    /// Appends one step; `(logits, probabilities)` maps in (layer, head) order.
    pub fn push_step(&mut self, t: f64, maps: Vec<(ArrayView2<f32>, ArrayView2<f32>)>) -> Result<()> {
        if maps.len() != self.n_layers * self.n_heads {
            return Err(Error::ShapeMismatch(format!(
                "step needs {} maps, got {}",
                self.n_layers * self.n_heads,
                maps.len()
            )));
        }
        for (logits, probs) in maps {
            if logits.dim() != (self.n_img, self.n_img) || probs.dim() != (self.n_img, self.n_img) {
                return Err(Error::ShapeMismatch("trace map is not N_img x N_img".into()));
            }
            self.logits.extend(logits.iter());
            self.probabilities.extend(probs.iter());
        }
        self.t_values.push(t);
        Ok(())
    }

    pub fn seal(&mut self) {
        self.checksum = self.compute_checksum();
    }

    fn compute_checksum(&self) -> String {
        let mut h = FloatHasher::new();
        h.str(&format!("{}x{}x{}", self.n_layers, self.n_heads, self.n_img))
            .str(&self.config_hash)
            .f64s(&self.t_values)
            .f32s(&self.logits)
            .f32s(&self.probabilities);
        h.finish()
    }

    pub fn checksum(&self) -> &str {
        &self.checksum
    }

    pub fn steps(&self) -> usize {
        self.t_values.len()
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn n_heads(&self) -> usize {
        self.n_heads
    }

    pub fn n_img(&self) -> usize {
        self.n_img
    }

    pub fn is_empty(&self) -> bool {
        self.t_values.is_empty()
    }

    /// Flow times of stored steps, `t_values()[i - 1]` for step `i`.
    pub fn t_values(&self) -> &[f64] {
        &self.t_values
    }

    /// Number of stored maps of each kind.
    pub fn map_count(&self) -> usize {
        self.steps() * self.n_layers * self.n_heads
    }

    fn offset(&self, step: usize, layer: usize, head: usize) -> usize {
        assert!(
            (1..=self.steps()).contains(&step) && layer < self.n_layers && head < self.n_heads,
            "trace index (step {step}, layer {layer}, head {head}) out of range"
        );
        (((step - 1) * self.n_layers + layer) * self.n_heads + head) * self.n_img * self.n_img
    }

    fn view<'a>(&self, data: &'a [f32], step: usize, layer: usize, head: usize) -> ArrayView2<'a, f32> {
        let start = self.offset(step, layer, head);
        let n = self.n_img;
        ArrayView2::from_shape((n, n), &data[start..start + n * n]).expect("contiguous map")
    }

    /// Pre-softmax I2I logits. Panics when out of range.
    pub fn logits(&self, step: usize, layer: usize, head: usize) -> ArrayView2<'_, f32> {
        self.view(&self.logits, step, layer, head)
    }

    /// I2I block of the joint-row softmax. Panics when out of range.
    pub fn probabilities(&self, step: usize, layer: usize, head: usize) -> ArrayView2<'_, f32> {
        self.view(&self.probabilities, step, layer, head)
    }

    /// All heads' I2I probabilities for one (step, layer).
    pub fn layer_probabilities(&self, step: usize, layer: usize) -> Vec<ArrayView2<'_, f32>> {
        (0..self.n_heads).map(|h| self.probabilities(step, layer, h)).collect()
    }

    /// Copy holding only steps `1..=steps`.
    pub fn truncated(&self, steps: usize) -> Result<Self> {
        if steps > self.steps() {
            return Err(Error::TraceMismatch(format!(
                "cannot truncate a {}-step trace to {steps} steps",
                self.steps()
            )));
        }
        let per_step = self.n_layers * self.n_heads * self.n_img * self.n_img;
        let mut t = Self {
            t_values: self.t_values[..steps].to_vec(),
            logits: self.logits[..steps * per_step].to_vec(),
            probabilities: self.probabilities[..steps * per_step].to_vec(),
            config_hash: self.config_hash.clone(),
            checksum: String::new(),
            ..*self
        };
        t.seal();
        Ok(t)
    }

    pub fn to_tensor_file(&self) -> TensorFile {
        let mut f = TensorFile::new();
        f.set_meta("kind", "trace");
        f.set_meta("config_hash", &self.config_hash);
        f.set_meta("checksum", &self.checksum);
        f.set_meta("steps", self.steps());
        f.set_meta("n_layers", self.n_layers);
        f.set_meta("n_heads", self.n_heads);
        f.set_meta("n_img", self.n_img);
        let shape = vec![self.steps(), self.n_layers, self.n_heads, self.n_img, self.n_img];
        f.push("t_values", vec![self.steps()], TensorData::F64(self.t_values.clone()));
        f.push("logits", shape.clone(), TensorData::F32(self.logits.clone()));
        f.push("probabilities", shape, TensorData::F32(self.probabilities.clone()));
        f
    }

    pub fn from_tensor_file(f: &TensorFile) -> Result<Self> {
        if f.meta("kind")? != "trace" {
            return Err(Error::TensorFormat("not an attention trace".into()));
        }
        let steps: usize = f.meta_parse("steps")?;
        let n_layers: usize = f.meta_parse("n_layers")?;
        let n_heads: usize = f.meta_parse("n_heads")?;
        let n_img: usize = f.meta_parse("n_img")?;
        let shape = [steps, n_layers, n_heads, n_img, n_img];
        let mut t = Self {
            n_layers,
            n_heads,
            n_img,
            t_values: f.get_f64("t_values", &[steps])?.to_vec(),
            logits: f.get_f32("logits", &shape)?.to_vec(),
            probabilities: f.get_f32("probabilities", &shape)?.to_vec(),
            config_hash: f.meta("config_hash")?.to_string(),
            checksum: String::new(),
        };
        t.seal();
        if t.checksum != f.meta("checksum")? {
            return Err(Error::TraceMismatch("stored checksum does not match payload".into()));
        }
        Ok(t)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_tensor_file().write(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_tensor_file(&TensorFile::read(path)?)
    }
}
