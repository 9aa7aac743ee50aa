use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};

use super::attention::{AttentionHook, CapturedAttention, CapturedHead, HookSite, JointAttention};
use super::embed::{timestep_embedding, TokenSequence};
use super::weights::{ModelWeights, StreamWeights};
use crate::error::{Error, Result};

const LN_EPS: f32 = 1e-6;

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    /// Per-patch velocity, `N_img x patch²`.
    pub velocity: Array2<f64>,
    pub captured: CapturedAttention,
}

fn silu(x: f32) -> f32 {
    x / (1.0 + (-x).exp())
}

fn gelu(x: f32) -> f32 {
    const C: f32 = 0.797_884_6; // sqrt(2/pi)
    0.5 * x * (1.0 + (C * (x + 0.044_715 * x * x * x)).tanh())
}

/// Parameter-free layer norm followed by `x * (1 + scale) + shift`.
fn modulate(x: &Array2<f32>, scale: ArrayView1<f32>, shift: ArrayView1<f32>) -> Array2<f32> {
    let mut out = x.clone();
    let d = x.ncols() as f32;
    for mut row in out.rows_mut() {
        let mean = row.sum() / d;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f32>() / d;
        let inv = 1.0 / (var + LN_EPS).sqrt();
        for ((v, &sc), &sh) in row.iter_mut().zip(scale).zip(shift) {
            *v = (*v - mean) * inv * (1.0 + sc) + sh;
        }
    }
    out
}

/// Row softmax. Exponentials are summed in `f64` in ascending index order.
pub(crate) fn softmax_rows(logits: &Array2<f32>) -> Array2<f32> {
    let mut out = Array2::zeros(logits.raw_dim());
    for (src, mut dst) in logits.rows().into_iter().zip(out.rows_mut()) {
        let max = src.iter().copied().fold(f32::NEG_INFINITY, f32::max);
        let mut sum = 0.0f64;
        for (d, &x) in dst.iter_mut().zip(src) {
            let e = (x - max).exp();
            *d = e;
            sum += e as f64;
        }
        dst.mapv_inplace(|e| (e as f64 / sum) as f32);
    }
    out
}

fn all_finite(a: &Array2<f32>) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// Stacks `text · wt` over `image · wi`.
fn joint_project(text: &Array2<f32>, image: &Array2<f32>, wt: &Array2<f32>, wi: &Array2<f32>) -> Array2<f32> {
    let tt = text.nrows();
    let mut out = Array2::zeros((tt + image.nrows(), wt.ncols()));
    out.slice_mut(s![..tt, ..]).assign(&text.dot(wt));
    out.slice_mut(s![tt.., ..]).assign(&image.dot(wi));
    out
}

struct Modulation {
    scale1: Array1<f32>,
    shift1: Array1<f32>,
    scale2: Array1<f32>,
    shift2: Array1<f32>,
}

impl Modulation {
    fn new(cond: ArrayView1<f32>, w: &StreamWeights) -> Self {
        let m = cond.dot(&w.modulation);
        let d = m.len() / 4;
        let chunk = |i: usize| m.slice(s![i * d..(i + 1) * d]).to_owned();
        Self {
            scale1: chunk(0),
            shift1: chunk(1),
            scale2: chunk(2),
            shift2: chunk(3),
        }
    }
}

impl ModelWeights {
    /// Conditioning vector `silu(time_proj · emb(t))`.
    pub fn conditioning(&self, t: f64) -> Array1<f32> {
        let emb = Array1::from(timestep_embedding(t, self.cfg.d_model));
        emb.dot(&self.time_proj).mapv(silu)
    }

    /// Last linear layer: modulated image hidden state to per-patch velocity.
    pub fn velocity_head(&self, modulated: ArrayView2<f32>) -> Array2<f64> {
        modulated.dot(&self.head).mapv(|v| v as f64)
    }

    /// Final modulated norm applied to the image stream before the head.
    pub fn final_norm(&self, image: &Array2<f32>, t: f64) -> Array2<f32> {
        let m = self.conditioning(t).dot(&self.final_mod);
        let d = self.cfg.d_model;
        modulate(image, m.slice(s![..d]), m.slice(s![d..]))
    }

    /// One denoiser evaluation at flow time `t`.
    ///
    /// Each block runs joint multi-head attention over text and image tokens
    /// with per-modality projections, then a per-modality GELU MLP. Both
    /// sub-layers are pre-norm residuals modulated by the timestep. Heads are
    /// evaluated in ascending order and every reduction has a fixed order, so
    /// identical inputs give bit-identical outputs.
    pub fn forward(&self, tokens: &TokenSequence, t: f64, hook: &mut AttentionHook<'_>) -> Result<ForwardOutput> {
        let cfg = &self.cfg;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidConfig(format!("flow time {t} outside [0,1]")));
        }
        if tokens.text.dim() != (cfg.t_txt, cfg.d_model) || tokens.image.dim() != (cfg.n_img(), cfg.d_model) {
            return Err(Error::ShapeMismatch("token sequence does not match model config".into()));
        }
        if !all_finite(&tokens.text) || !all_finite(&tokens.image) {
            return Err(Error::NonFiniteActivation("input tokens".into()));
        }
        let cond = self.conditioning(t);
        let tt = cfg.t_txt;
        let dh = cfg.d_head();
        let scale = 1.0 / (dh as f32).sqrt();
        let mut xt = tokens.text.clone();
        let mut xi = tokens.image.clone();
        let mut captured = CapturedAttention::default();

        for (layer, block) in self.blocks.iter().enumerate() {
            let mt = Modulation::new(cond.view(), &block.text);
            let mi = Modulation::new(cond.view(), &block.image);
            let ht = modulate(&xt, mt.scale1.view(), mt.shift1.view());
            let hi = modulate(&xi, mi.scale1.view(), mi.shift1.view());
            let q = joint_project(&ht, &hi, &block.text.wq, &block.image.wq);
            let k = joint_project(&ht, &hi, &block.text.wk, &block.image.wk);
            let v = joint_project(&ht, &hi, &block.text.wv, &block.image.wv);

            let keep = hook.wants_layer(layer);
            let mut per_head: Vec<Option<JointAttention>> = vec![None; cfg.n_heads];
            let mut attended = Array2::<f32>::zeros((cfg.joint_len(), cfg.d_model));
            for (head, slot) in per_head.iter_mut().enumerate() {
                let cols = s![.., head * dh..(head + 1) * dh];
                let mut logits = q.slice(cols).dot(&k.slice(cols).t());
                logits.mapv_inplace(|x| x * scale);
                let site = HookSite {
                    step: hook.step,
                    layer,
                    head,
                };
                hook.override_i2i(site, logits.slice_mut(s![tt.., tt..]));
                let probabilities = softmax_rows(&logits);
                attended.slice_mut(cols).assign(&probabilities.dot(&v.slice(cols)));
                if keep || hook.has_observer() {
                    let attn = JointAttention {
                        t_txt: tt,
                        logits,
                        probabilities,
                    };
                    hook.observe(site, &attn);
                    if keep {
                        *slot = Some(attn);
                    }
                }
            }
            if keep {
                let flags = &hook.capture;
                for &head in &flags.heads {
                    let Some(attn) = per_head.get(head).and_then(Option::as_ref) else {
                        continue;
                    };
                    captured.heads.push(CapturedHead {
                        layer,
                        head,
                        i2i_logits: flags.logits.then(|| attn.i2i_logits().to_owned()),
                        i2i_probabilities: flags.probabilities.then(|| attn.i2i().to_owned()),
                        joint: flags.joint.then(|| attn.clone()),
                    });
                }
            }

            xt += &attended.slice(s![..tt, ..]).dot(&block.text.wo);
            xi += &attended.slice(s![tt.., ..]).dot(&block.image.wo);

            let ht = modulate(&xt, mt.scale2.view(), mt.shift2.view());
            let hi = modulate(&xi, mi.scale2.view(), mi.shift2.view());
            xt += &ht.dot(&block.text.w1).mapv(gelu).dot(&block.text.w2);
            xi += &hi.dot(&block.image.w1).mapv(gelu).dot(&block.image.w2);

            if !all_finite(&xt) || !all_finite(&xi) {
                return Err(Error::NonFiniteActivation(format!("block {layer}")));
            }
        }

        let velocity = self.velocity_head(self.final_norm(&xi, t).view());
        if velocity.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteActivation("velocity head".into()));
        }
        Ok(ForwardOutput { velocity, captured })
    }
}
