use ndarray::{s, Array2, ArrayView2, ArrayViewMut2};

use super::config::ModelConfig;

/// Where in a forward pass a hook fires. `layer` and `head` are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HookSite {
    pub step: usize,
    pub layer: usize,
    pub head: usize,
}

/// One head's joint attention over the `T = t_txt + N_img` sequence.
///
/// `logits` are the scaled `q·kᵀ` values after any override; `probabilities`
/// are their row softmax over the full joint row.
#[derive(Debug, Clone, PartialEq)]
pub struct JointAttention {
    pub t_txt: usize,
    pub logits: Array2<f32>,
    pub probabilities: Array2<f32>,
}

impl JointAttention {
    pub fn t2t(&self) -> ArrayView2<'_, f32> {
        self.probabilities.slice(s![..self.t_txt, ..self.t_txt])
    }

    /// Text queries attending to image keys.
    pub fn t2i(&self) -> ArrayView2<'_, f32> {
        self.probabilities.slice(s![..self.t_txt, self.t_txt..])
    }

    /// Image queries attending to text keys.
    pub fn i2t(&self) -> ArrayView2<'_, f32> {
        self.probabilities.slice(s![self.t_txt.., ..self.t_txt])
    }

    pub fn i2i(&self) -> ArrayView2<'_, f32> {
        self.probabilities.slice(s![self.t_txt.., self.t_txt..])
    }

    pub fn i2i_logits(&self) -> ArrayView2<'_, f32> {
        self.logits.slice(s![self.t_txt.., self.t_txt..])
    }
}

/// What a forward pass records.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CaptureFlags {
    /// 0-based layers to record.
    pub layers: Vec<usize>,
    /// Heads to record, in output order. Repeats are allowed.
    pub heads: Vec<usize>,
    pub logits: bool,
    pub probabilities: bool,
    /// Also keep the full joint maps.
    pub joint: bool,
}

impl CaptureFlags {
    pub fn none() -> Self {
        Self::default()
    }

    /// I2I logits and probabilities of every layer and head.
    pub fn all_i2i(cfg: &ModelConfig) -> Self {
        Self {
            layers: (0..cfg.n_layers).collect(),
            heads: (0..cfg.n_heads).collect(),
            logits: true,
            probabilities: true,
            joint: false,
        }
    }

    /// Full joint maps of every layer and head.
    pub fn all_joint(cfg: &ModelConfig) -> Self {
        Self {
            joint: true,
            ..Self::all_i2i(cfg)
        }
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty() || self.heads.is_empty() || !(self.logits || self.probabilities || self.joint)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapturedHead {
    pub layer: usize,
    pub head: usize,
    pub i2i_logits: Option<Array2<f32>>,
    pub i2i_probabilities: Option<Array2<f32>>,
    pub joint: Option<JointAttention>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CapturedAttention {
    /// Ordered by layer, then by the head order in [`CaptureFlags::heads`].
    pub heads: Vec<CapturedHead>,
}

impl CapturedAttention {
    pub fn get(&self, layer: usize, head: usize) -> Option<&CapturedHead> {
        self.heads.iter().find(|c| c.layer == layer && c.head == head)
    }
}

type OverrideFn<'a> = dyn FnMut(HookSite, ArrayViewMut2<'_, f32>) + 'a;
type ObserveFn<'a> = dyn FnMut(HookSite, &JointAttention) + 'a;

/// Capture flags plus optional callbacks into the attention computation.
///
/// The override receives only the I2I logits block, after `1/sqrt(d_head)`
/// scaling and before the joint-row softmax, so T2T, T2I and I2T logits cannot
/// be altered. The observer sees every head's final joint attention.
pub struct AttentionHook<'a> {
    pub step: usize,
    pub capture: CaptureFlags,
    overrider: Option<Box<OverrideFn<'a>>>,
    observer: Option<Box<ObserveFn<'a>>>,
}

impl Default for AttentionHook<'_> {
    fn default() -> Self {
        Self::none()
    }
}

impl<'a> AttentionHook<'a> {
    pub fn none() -> Self {
        Self {
            step: 0,
            capture: CaptureFlags::none(),
            overrider: None,
            observer: None,
        }
    }

    pub fn capture(flags: CaptureFlags) -> Self {
        Self {
            capture: flags,
            ..Self::none()
        }
    }

    pub fn at_step(mut self, step: usize) -> Self {
        self.step = step;
        self
    }

    pub fn with_override(mut self, f: impl FnMut(HookSite, ArrayViewMut2<'_, f32>) + 'a) -> Self {
        self.overrider = Some(Box::new(f));
        self
    }

    pub fn with_observer(mut self, f: impl FnMut(HookSite, &JointAttention) + 'a) -> Self {
        self.observer = Some(Box::new(f));
        self
    }

    pub(crate) fn override_i2i(&mut self, site: HookSite, i2i: ArrayViewMut2<'_, f32>) {
        if let Some(f) = self.overrider.as_mut() {
            f(site, i2i);
        }
    }

    pub(crate) fn observe(&mut self, site: HookSite, attn: &JointAttention) {
        if let Some(f) = self.observer.as_mut() {
            f(site, attn);
        }
    }

    pub(crate) fn wants_layer(&self, layer: usize) -> bool {
        !self.capture.is_empty() && self.capture.layers.contains(&layer)
    }

    pub(crate) fn has_observer(&self) -> bool {
        self.observer.is_some()
    }
}
