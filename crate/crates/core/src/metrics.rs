//! Text-fidelity metrics, core-token mask coverage and sweep tables.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::coreattn::off_mask_mass;
use crate::error::{Error, Result};

/// Codepoint-exact equality after trimming surrounding whitespace. Case-sensitive.
pub fn exact_match(predicted: &str, target: &str) -> bool {
    predicted.trim() == target.trim()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharF1Result {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn char_counts(s: &str) -> BTreeMap<char, usize> {
    let mut counts = BTreeMap::new();
    for c in s.chars() {
        *counts.entry(c).or_insert(0) += 1;
    }
    counts
}

/// Character-level precision, recall and F1 from the multiset overlap of
/// codepoints. Both strings are trimmed first, matching [`exact_match`].
pub fn char_f1(predicted: &str, target: &str) -> CharF1Result {
    let (p, t) = (predicted.trim(), target.trim());
    let (np, nt) = (p.chars().count(), t.chars().count());
    if np == 0 && nt == 0 {
        return CharF1Result {
            precision: 1.0,
            recall: 1.0,
            f1: 1.0,
        };
    }
    let target_counts = char_counts(t);
    let overlap: usize = char_counts(p)
        .iter()
        .map(|(c, &n)| n.min(target_counts.get(c).copied().unwrap_or(0)))
        .sum();
    let precision = if np == 0 { 0.0 } else { overlap as f64 / np as f64 };
    let recall = if nt == 0 { 0.0 } else { overlap as f64 / nt as f64 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    CharF1Result { precision, recall, f1 }
}

/// Share of the core rows' attention mass that lands on glyph patches.
pub fn mask_coverage<A: Copy + Into<f64>>(map: ArrayView2<'_, A>, mask_fracs: &[f64], rows: &[usize]) -> Result<f64> {
    Ok(1.0 - off_mask_mass(map, mask_fracs, rows)?)
}

/// One measured value of a top-k ratio x cutoff-step sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub ratio: f64,
    pub step: usize,
    pub metric: String,
    pub value: f64,
    /// Manifest of the run that produced the value, if any.
    pub manifest: Option<String>,
}

/// Ratios x steps grid per metric. Absent cells render as `NA`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepTable {
    pub ratios: Vec<f64>,
    pub steps: Vec<usize>,
    pub metrics: Vec<String>,
    values: HashMap<(u64, usize, String), f64>,
}

impl SweepTable {
    pub fn get(&self, ratio: f64, step: usize, metric: &str) -> Option<f64> {
        self.values.get(&(ratio.to_bits(), step, metric.to_string())).copied()
    }

    /// Number of (ratio, step) rows.
    pub fn rows(&self) -> usize {
        self.ratios.len() * self.steps.len()
    }

    pub fn missing_cells(&self) -> usize {
        self.rows() * self.metrics.len() - self.values.len()
    }

    /// Adds grid points that must appear even without values.
    pub fn extend_grid(&mut self, ratios: &[f64], steps: &[usize]) {
        self.ratios.extend_from_slice(ratios);
        self.ratios.sort_by(f64::total_cmp);
        self.ratios.dedup_by(|a, b| a.to_bits() == b.to_bits());
        self.steps.extend_from_slice(steps);
        self.steps.sort_unstable();
        self.steps.dedup();
    }

    /// CSV with header `ratio,step,<metric>...`, ratios then steps ascending, LF endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("ratio,step");
        for m in &self.metrics {
            out.push(',');
            out.push_str(m);
        }
        out.push('\n');
        for &r in &self.ratios {
            for &s in &self.steps {
                out.push_str(&format!("{r},{s}"));
                for m in &self.metrics {
                    match self.get(r, s, m) {
                        Some(v) => out.push_str(&format!(",{v}")),
                        None => out.push_str(",NA"),
                    }
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Arranges cells into a grid over every ratio and step that occurs.
pub fn sweep_aggregate(cells: &[SweepCell]) -> Result<SweepTable> {
    let mut table = SweepTable::default();
    let mut metrics = BTreeSet::new();
    for c in cells {
        if !(c.ratio.is_finite()) {
            return Err(Error::InvalidConfig(format!("sweep ratio {} is not finite", c.ratio)));
        }
        let key = (c.ratio.to_bits(), c.step, c.metric.clone());
        if table.values.insert(key, c.value).is_some() {
            return Err(Error::DuplicateCell {
                ratio: c.ratio,
                step: c.step,
                metric: c.metric.clone(),
            });
        }
        metrics.insert(c.metric.clone());
        table.extend_grid(&[c.ratio], &[c.step]);
    }
    table.metrics = metrics.into_iter().collect();
    Ok(table)
}
