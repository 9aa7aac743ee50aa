use ndarray::{Array2, ArrayView2, ArrayViewMut2};
use serde::{Deserialize, Serialize};

use super::scores::{token_scores, variance_scores, CumulativeScore, ScoreMode, ScoreVector};
use super::select::{select_core_tokens, top_k_indices, CoreTokenSet, SelectionSource};
use crate::error::{Error, Result};
use crate::flowsampler::AttentionTrace;
use crate::tensorfile::{TensorData, TensorFile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InjectionConfig {
    /// Top-k fraction of image tokens; 0 disables injection.
    pub ratio: f64,
    pub cutoff_step: usize,
    pub mode: ScoreMode,
    /// Select from the running mean over layers `1..=L` instead of layer `L` alone.
    pub averaging: bool,
}

impl Default for InjectionConfig {
    fn default() -> Self {
        Self {
            ratio: 0.125,
            cutoff_step: 12,
            mode: ScoreMode::RowMass,
            averaging: true,
        }
    }
}

/// One core-token set per (step, layer) for steps `1..=cutoff_step`.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectionPlan {
    pub trace_checksum: String,
    pub config: InjectionConfig,
    n_layers: usize,
    n_img: usize,
    sets: Vec<CoreTokenSet>,
}

impl InjectionPlan {
    pub fn cutoff_step(&self) -> usize {
        self.config.cutoff_step
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn n_img(&self) -> usize {
        self.n_img
    }

    /// Set for 1-based `step` and 0-based `layer`, `None` past the cutoff.
    pub fn set(&self, step: usize, layer: usize) -> Option<&CoreTokenSet> {
        if step == 0 || step > self.cutoff_step() || layer >= self.n_layers {
            return None;
        }
        self.sets.get((step - 1) * self.n_layers + layer)
    }

    pub fn sets(&self) -> &[CoreTokenSet] {
        &self.sets
    }

    /// (step, layer) pairs that actually replace at least one row.
    pub fn injection_count(&self) -> usize {
        self.sets.iter().filter(|s| !s.is_empty()).count()
    }

    pub fn to_tensor_file(&self) -> TensorFile {
        let mut f = TensorFile::new();
        f.set_meta("kind", "plan");
        f.set_meta("trace_checksum", &self.trace_checksum);
        f.set_meta("ratio", self.config.ratio);
        f.set_meta("cutoff_step", self.config.cutoff_step);
        f.set_meta("mode", self.config.mode);
        f.set_meta("averaging", self.config.averaging);
        f.set_meta("n_layers", self.n_layers);
        f.set_meta("n_img", self.n_img);
        for set in &self.sets {
            let s = set.source;
            f.push(
                format!("set.{}.{}", s.step, s.layer),
                vec![set.len()],
                TensorData::F64(set.indices.iter().map(|&i| i as f64).collect()),
            );
        }
        f
    }

    pub fn from_tensor_file(f: &TensorFile) -> Result<Self> {
        if f.meta("kind")? != "plan" {
            return Err(Error::TensorFormat("not an injection plan".into()));
        }
        let config = InjectionConfig {
            ratio: f.meta_parse("ratio")?,
            cutoff_step: f.meta_parse("cutoff_step")?,
            mode: f.meta("mode")?.parse()?,
            averaging: f.meta_parse("averaging")?,
        };
        let n_layers: usize = f.meta_parse("n_layers")?;
        let n_img: usize = f.meta_parse("n_img")?;
        let mut sets = Vec::new();
        for step in 1..=config.cutoff_step {
            for layer in 0..n_layers {
                let name = format!("set.{step}.{layer}");
                let len = f.get(&name)?.shape.first().copied().unwrap_or(0);
                let indices = f
                    .get_f64(&name, &[len])?
                    .iter()
                    .map(|&x| x as usize)
                    .collect::<Vec<_>>();
                if indices.iter().any(|&i| i >= n_img) || indices.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::TensorFormat(format!("{name}: indices not ascending in range")));
                }
                let source = SelectionSource {
                    step,
                    layer,
                    mode: config.mode,
                    averaged: config.averaging,
                };
                let ratio = if indices.is_empty() { 0.0 } else { config.ratio };
                sets.push(CoreTokenSet { indices, ratio, source });
            }
        }
        Ok(Self {
            trace_checksum: f.meta("trace_checksum")?.to_string(),
            config,
            n_layers,
            n_img,
            sets,
        })
    }
}

/// Head-averaged scores of every layer at `step`, layer order.
pub fn layer_scores(trace: &AttentionTrace, step: usize, mode: ScoreMode) -> Result<Vec<ScoreVector>> {
    (0..trace.n_layers())
        .map(|layer| token_scores(&trace.layer_probabilities(step, layer), mode, step, layer))
        .collect()
}

/// Core-token sets for every (step, layer) up to the cutoff.
///
/// Layers are visited in order at each step. With averaging on, each
/// layer's scores are folded into a running mean that restarts at the first
/// layer of every step, and selection reads the running mean. Layer-variance
/// mode scores row mass variance across all layers of the step and uses the
/// resulting set at every layer. A ratio of 0 produces empty sets.
pub fn build_injection(trace: &AttentionTrace, cfg: &InjectionConfig) -> Result<InjectionPlan> {
    if cfg.cutoff_step > 0 && trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    if cfg.cutoff_step > trace.steps() {
        return Err(Error::TraceMismatch(format!(
            "cutoff step {} beyond the {} traced steps",
            cfg.cutoff_step,
            trace.steps()
        )));
    }
    if cfg.ratio != 0.0 {
        super::select::core_count(cfg.ratio, trace.n_img())?;
    }
    let n_layers = trace.n_layers();
    let mut sets = Vec::with_capacity(cfg.cutoff_step * n_layers);
    for step in 1..=cfg.cutoff_step {
        let source = |layer| SelectionSource {
            step,
            layer,
            mode: cfg.mode,
            averaged: cfg.averaging,
        };
        if cfg.ratio == 0.0 {
            sets.extend((0..n_layers).map(|l| CoreTokenSet::empty(source(l))));
            continue;
        }
        if cfg.mode == ScoreMode::LayerVariance {
            let var = variance_scores(&layer_scores(trace, step, ScoreMode::RowMass)?)?;
            let indices = top_k_indices(&var.scores, cfg.ratio)?;
            sets.extend((0..n_layers).map(|l| CoreTokenSet {
                indices: indices.clone(),
                ratio: cfg.ratio,
                source: source(l),
            }));
            continue;
        }
        let mut running = CumulativeScore::new(trace.n_img());
        for scores in layer_scores(trace, step, cfg.mode)? {
            let set = if cfg.averaging {
                running = running.update(&scores)?;
                CoreTokenSet {
                    indices: top_k_indices(running.mean(), cfg.ratio)?,
                    ratio: cfg.ratio,
                    source: source(scores.layer),
                }
            } else {
                select_core_tokens(&scores, cfg.ratio)?
            };
            sets.push(set);
        }
    }
    Ok(InjectionPlan {
        trace_checksum: trace.checksum().to_string(),
        config: *cfg,
        n_layers,
        n_img: trace.n_img(),
        sets,
    })
}

fn check_rows<A>(dst: &ArrayViewMut2<'_, A>, src: &ArrayView2<'_, A>, indices: &[usize]) -> Result<()> {
    if dst.dim() != src.dim() {
        return Err(Error::ShapeMismatch(format!("logits {:?} vs {:?}", dst.dim(), src.dim())));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= dst.nrows()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            len: dst.nrows(),
        });
    }
    Ok(())
}

/// Overwrites rows `indices` of `dst` with the same rows of `src`.
pub fn inject_rows<A: Copy>(mut dst: ArrayViewMut2<'_, A>, src: ArrayView2<'_, A>, indices: &[usize]) -> Result<()> {
    check_rows(&dst, &src, indices)?;
    for &i in indices {
        dst.row_mut(i).assign(&src.row(i));
    }
    Ok(())
}

/// Generation logits with the core-token rows taken from the trace.
pub fn apply_injection<A: Copy>(
    gen_logits: ArrayView2<'_, A>,
    trace_logits: ArrayView2<'_, A>,
    set: &CoreTokenSet,
) -> Result<Array2<A>> {
    let mut out = gen_logits.to_owned();
    inject_rows(out.view_mut(), trace_logits, &set.indices)?;
    Ok(out)
}
