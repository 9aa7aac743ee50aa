use ndarray::{Array2, ArrayView2};

use super::select::CoreTokenSet;
use crate::error::{Error, Result};

/// Patches with mask fraction below this count as background.
pub const MASK_THRESHOLD: f64 = 0.5;

/// Mean over `rows` of the share of each row's mass on background patches.
pub fn off_mask_mass<A: Copy + Into<f64>>(map: ArrayView2<'_, A>, mask_fracs: &[f64], rows: &[usize]) -> Result<f64> {
    let n = mask_fracs.len();
    if map.dim() != (n, n) {
        return Err(Error::ShapeMismatch(format!("map {:?} vs {n} mask entries", map.dim())));
    }
    if rows.is_empty() {
        return Err(Error::ShapeMismatch("no core rows to measure".into()));
    }
    let mut total = 0.0;
    for &j in rows {
        if j >= n {
            return Err(Error::IndexOutOfRange { index: j, len: n });
        }
        let (mut off, mut all) = (0.0f64, 0.0f64);
        for (&a, &m) in map.row(j).iter().zip(mask_fracs) {
            let a: f64 = a.into();
            all += a;
            if m < MASK_THRESHOLD {
                off += a;
            }
        }
        if all == 0.0 {
            return Err(Error::ZeroRowMass(j));
        }
        total += off / all;
    }
    Ok(total / rows.len() as f64)
}

/// Off-mask share of the core rows, one value per layer map.
pub fn attention_shift<A: Copy + Into<f64>>(
    layers: &[ArrayView2<'_, A>],
    mask_fracs: &[f64],
    set: &CoreTokenSet,
) -> Result<Vec<f64>> {
    layers
        .iter()
        .map(|m| off_mask_mass(m.view(), mask_fracs, &set.indices))
        .collect()
}

/// Elementwise mean of per-head maps, as `f64`.
pub fn head_average<A: Copy + Into<f64>>(maps: &[ArrayView2<'_, A>]) -> Result<Array2<f64>> {
    let first = maps
        .first()
        .ok_or_else(|| Error::ShapeMismatch("no attention heads given".into()))?;
    let mut acc = Array2::<f64>::zeros(first.raw_dim());
    for m in maps {
        if m.dim() != acc.dim() {
            return Err(Error::ShapeMismatch("head maps differ in shape".into()));
        }
        acc.zip_mut_with(m, |a, &x| *a += x.into());
    }
    acc.mapv_inplace(|a| a / maps.len() as f64);
    Ok(acc)
}
