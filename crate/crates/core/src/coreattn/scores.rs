use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensorfile::{TensorData, TensorFile};

/// Per-token statistic of an I2I attention map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreMode {
    /// Total image-key mass of the token's own row.
    RowMass,
    /// Largest entry of the token's row.
    RowMax,
    /// Mean attention the token receives as a key.
    ColumnMass,
    /// Population variance of row mass across layers.
    LayerVariance,
}

impl fmt::Display for ScoreMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreMode::RowMass => "row-mass",
            ScoreMode::RowMax => "row-max",
            ScoreMode::ColumnMass => "column-mass",
            ScoreMode::LayerVariance => "layer-variance",
        })
    }
}

impl FromStr for ScoreMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "row-mass" => Ok(ScoreMode::RowMass),
            "row-max" => Ok(ScoreMode::RowMax),
            "column-mass" => Ok(ScoreMode::ColumnMass),
            "layer-variance" => Ok(ScoreMode::LayerVariance),
            other => Err(Error::InvalidConfig(format!("unknown score mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub scores: Vec<f64>,
    /// 1-based sampler step the scores came from.
    pub step: usize,
    /// 0-based layer; for layer-variance scores, the last layer absorbed.
    pub layer: usize,
    pub mode: ScoreMode,
}

impl ScoreVector {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn to_tensor_file(&self) -> TensorFile {
        let mut f = TensorFile::new();
        f.set_meta("kind", "scores");
        f.set_meta("mode", self.mode);
        f.set_meta("step", self.step);
        f.set_meta("layer", self.layer);
        f.push("scores", vec![self.len()], TensorData::F64(self.scores.clone()));
        f
    }

    pub fn from_tensor_file(f: &TensorFile) -> Result<Self> {
        if f.meta("kind")? != "scores" {
            return Err(Error::TensorFormat("not a score vector".into()));
        }
        let t = f.get("scores")?;
        let scores = f.get_f64("scores", &t.shape)?.to_vec();
        Ok(Self {
            scores,
            step: f.meta_parse("step")?,
            layer: f.meta_parse("layer")?,
            mode: f.meta("mode")?.parse()?,
        })
    }
}

/// Head-averaged token scores of one layer's I2I probability maps.
///
/// For token `j`: row mass `Σ_k A[j,k]`, row max `max_k A[j,k]`, or column
/// mass `Σ_i A[i,j] / N`. Layer variance needs several layers; see
/// [`variance_scores`].
pub fn token_scores<A: Copy + Into<f64>>(
    maps: &[ArrayView2<'_, A>],
    mode: ScoreMode,
    step: usize,
    layer: usize,
) -> Result<ScoreVector> {
    let first = maps
        .first()
        .ok_or_else(|| Error::ShapeMismatch("no attention heads given".into()))?;
    let n = first.nrows();
    if let Some(bad) = maps.iter().find(|m| m.dim() != (n, n)) {
        return Err(Error::ShapeMismatch(format!("I2I map {:?} is not {n}x{n}", bad.dim())));
    }
    let mut acc = vec![0.0f64; n];
    for map in maps {
        match mode {
            ScoreMode::RowMass => {
                for (a, row) in acc.iter_mut().zip(map.rows()) {
                    *a += row.iter().map(|&x| x.into()).sum::<f64>();
                }
            }
            ScoreMode::RowMax => {
                for (a, row) in acc.iter_mut().zip(map.rows()) {
                    *a += row.iter().map(|&x| x.into()).fold(f64::NEG_INFINITY, f64::max);
                }
            }
            ScoreMode::ColumnMass => {
                for row in map.rows() {
                    for (a, &x) in acc.iter_mut().zip(row) {
                        *a += x.into();
                    }
                }
            }
            ScoreMode::LayerVariance => {
                return Err(Error::ModeMismatch(
                    "layer-variance scores come from variance_scores over several layers".into(),
                ))
            }
        }
    }
    let mut heads = maps.len() as f64;
    if mode == ScoreMode::ColumnMass {
        heads *= n as f64;
    }
    let scores: Vec<f64> = acc.into_iter().map(|a| a / heads).collect();
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFiniteActivation("token scores".into()));
    }
    Ok(ScoreVector {
        scores,
        step,
        layer,
        mode,
    })
}

/// Per-token population variance of scores across layers.
pub fn variance_scores(per_layer: &[ScoreVector]) -> Result<ScoreVector> {
    if per_layer.len() < 2 {
        return Err(Error::FewerThanTwoLayers(per_layer.len()));
    }
    let first = &per_layer[0];
    for v in per_layer {
        if v.len() != first.len() {
            return Err(Error::ShapeMismatch(format!("score lengths {} vs {}", v.len(), first.len())));
        }
        if v.mode != first.mode {
            return Err(Error::ModeMismatch(format!("{} vs {}", v.mode, first.mode)));
        }
    }
    let layers = per_layer.len() as f64;
    let scores = (0..first.len())
        .map(|j| {
            let mean = per_layer.iter().map(|v| v.scores[j]).sum::<f64>() / layers;
            per_layer.iter().map(|v| (v.scores[j] - mean).powi(2)).sum::<f64>() / layers
        })
        .collect();
    Ok(ScoreVector {
        scores,
        step: first.step,
        layer: per_layer.last().unwrap().layer,
        mode: ScoreMode::LayerVariance,
    })
}

/// Running mean of score vectors over layers `1..=L`.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeScore {
    mean: Vec<f64>,
    layers: usize,
    mode: Option<ScoreMode>,
}

impl CumulativeScore {
    pub fn new(n_tokens: usize) -> Self {
        Self {
            mean: vec![0.0; n_tokens],
            layers: 0,
            mode: None,
        }
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Layers absorbed so far.
    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn mode(&self) -> Option<ScoreMode> {
        self.mode
    }

    /// Absorbs one more layer: `mean += (s - mean) / (L + 1)`.
    pub fn update(&self, s: &ScoreVector) -> Result<Self> {
        if s.len() != self.mean.len() {
            return Err(Error::ShapeMismatch(format!(
                "score length {} vs running mean {}",
                s.len(),
                self.mean.len()
            )));
        }
        if let Some(mode) = self.mode {
            if mode != s.mode {
                return Err(Error::ModeMismatch(format!("running mean is {mode}, got {}", s.mode)));
            }
        }
        let n = (self.layers + 1) as f64;
        let mean = self
            .mean
            .iter()
            .zip(&s.scores)
            .map(|(m, x)| m + (x - m) / n)
            .collect();
        Ok(Self {
            mean,
            layers: self.layers + 1,
            mode: Some(s.mode),
        })
    }
}

pub fn cumulative_update(state: &CumulativeScore, s: &ScoreVector) -> Result<CumulativeScore> {
    state.update(s)
}
