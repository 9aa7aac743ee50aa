use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::scores::{ScoreMode, ScoreVector};
use crate::error::{Error, Result};

/// Where a core-token set was selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionSource {
    pub step: usize,
    pub layer: usize,
    pub mode: ScoreMode,
    /// Selected from the running layer mean rather than the layer alone.
    pub averaged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreTokenSet {
    /// Ascending, distinct token indices.
    pub indices: Vec<usize>,
    pub ratio: f64,
    pub source: SelectionSource,
}

impl CoreTokenSet {
    /// A set that selects nothing, used when injection is disabled.
    pub fn empty(source: SelectionSource) -> Self {
        Self {
            indices: Vec::new(),
            ratio: 0.0,
            source,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, token: usize) -> bool {
        self.indices.binary_search(&token).is_ok()
    }
}

/// `ceil(ratio · n)`, with a 1e-9 slack so that products such as `0.3 · 10`
/// that land a rounding error above an integer do not round up.
pub fn core_count(ratio: f64, n: usize) -> Result<usize> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidConfig(format!("top-k ratio {ratio} outside (0, 1]")));
    }
    Ok(((ratio * n as f64 - 1e-9).ceil() as usize).clamp(1, n.max(1)).min(n))
}

/// Indices of the `ceil(ratio · n)` highest scores, ties going to the lower
/// index, returned in ascending order.
pub fn top_k_indices(scores: &[f64], ratio: f64) -> Result<Vec<usize>> {
    let k = core_count(ratio, scores.len())?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFiniteActivation("scores passed to top-k".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // strict total order: score descending, then index ascending
    let rank = |a: &usize, b: &usize| -> Ordering { scores[*b].total_cmp(&scores[*a]).then(a.cmp(b)) };
    if k < order.len() {
        order.select_nth_unstable_by(k, rank);
        order.truncate(k);
    }
    order.sort_unstable();
    Ok(order)
}

/// Top-k core tokens of a single layer's scores.
pub fn select_core_tokens(s: &ScoreVector, ratio: f64) -> Result<CoreTokenSet> {
    Ok(CoreTokenSet {
        indices: top_k_indices(&s.scores, ratio)?,
        ratio,
        source: SelectionSource {
            step: s.step,
            layer: s.layer,
            mode: s.mode,
            averaged: false,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(scores: Vec<f64>) -> ScoreVector {
        ScoreVector {
            scores,
            step: 1,
            layer: 0,
            mode: ScoreMode::RowMass,
        }
    }

    #[test]
    fn tie_goes_to_lower_index() {
        let set = select_core_tokens(&sv(vec![0.1, 0.4, 0.4, 0.2]), 0.5).unwrap();
        assert_eq!(set.indices, vec![1, 2]);
        let set = select_core_tokens(&sv(vec![0.4, 0.1, 0.4, 0.4]), 0.5).unwrap();
        assert_eq!(set.indices, vec![0, 2]);
    }

    #[test]
    fn full_ratio_selects_everything() {
        let set = select_core_tokens(&sv(vec![0.3, 0.1, 0.2]), 1.0).unwrap();
        assert_eq!(set.indices, vec![0, 1, 2]);
    }

    #[test]
    fn count_uses_ceiling() {
        assert_eq!(core_count(0.125, 256).unwrap(), 32);
        assert_eq!(core_count(0.3, 10).unwrap(), 3);
        assert_eq!(core_count(0.01, 10).unwrap(), 1);
        assert_eq!(core_count(0.34, 3).unwrap(), 2);
        assert!(core_count(0.0, 10).is_err());
        assert!(core_count(1.5, 10).is_err());
        assert!(core_count(f64::NAN, 10).is_err());
    }

    #[test]
    fn non_finite_scores_rejected() {
        assert!(select_core_tokens(&sv(vec![0.1, f64::NAN]), 0.5).is_err());
    }
}
