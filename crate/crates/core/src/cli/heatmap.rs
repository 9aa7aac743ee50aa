//! Grayscale heatmaps of per-patch values.

use std::path::Path;

use crate::error::{Error, Result};
use crate::glyphkit::netpbm::encode_p2;
use crate::tensorfile::{TensorData, TensorFile};

/// Min-max normalizes `values` to `round(255 v)`. Constant input maps to 0.
pub fn heatmap_pixels(values: &[f64], side: usize) -> Result<Vec<u16>> {
    if side == 0 || values.len() != side * side {
        return Err(Error::ShapeMismatch(format!(
            "{} values cannot fill a {side}x{side} heatmap",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteActivation("heatmap input".into()));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    Ok(values
        .iter()
        .map(|&v| if span > 0.0 { (255.0 * (v - lo) / span).round() as u16 } else { 0 })
        .collect())
}

/// Row-major P2 text of the normalized heatmap.
pub fn heatmap_pgm(values: &[f64], side: usize) -> Result<String> {
    encode_p2(side, side, 255, &heatmap_pixels(values, side)?)
}

/// Writes the heatmap of `values` to `path` as P2.
pub fn cmd_export_heatmap(values: &[f64], side: usize, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, heatmap_pgm(values, side)?).map_err(|e| Error::io(path, e))
}

/// Reads heatmap input: a tensor file (tensor `name`, else `scores`, else
/// its only tensor) or text numbers separated by commas or whitespace.
pub fn read_values(path: impl AsRef<Path>, name: Option<&str>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"LDTENSOR") {
        let f = TensorFile::from_bytes(&bytes)?;
        let t = match name {
            Some(n) => f.get(n)?,
            None => match f.get("scores") {
                Ok(t) => t,
                Err(_) if f.tensors.len() == 1 => &f.tensors[0],
                Err(_) => return Err(Error::TensorFormat("several tensors; pick one by name".into())),
            },
        };
        return Ok(match &t.data {
            TensorData::F32(v) => v.iter().map(|&x| x as f64).collect(),
            TensorData::F64(v) => v.clone(),
        });
    }
    let text = String::from_utf8(bytes).map_err(|_| Error::TensorFormat("input is neither a tensor file nor text".into()))?;
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::TensorFormat(format!("not a number: {s:?}")))
        })
        .collect()
}
