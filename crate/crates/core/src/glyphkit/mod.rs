//! Glyph images: bitmap-font rasterization, Netpbm I/O and per-patch mask
//! coverage.

mod font;
pub mod netpbm;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use font::{BitmapFont, GlyphBitmap};

use crate::error::{Error, Result};
use crate::tensorfile::FloatHasher;

/// Pixels at or above this intensity count as ink.
pub const INK_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Horizontal,
    Vertical,
    Diagonal,
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layout::Horizontal => "horizontal",
            Layout::Vertical => "vertical",
            Layout::Diagonal => "diagonal",
        })
    }
}

impl FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "horizontal" => Ok(Layout::Horizontal),
            "vertical" => Ok(Layout::Vertical),
            "diagonal" => Ok(Layout::Diagonal),
            other => Err(Error::InvalidConfig(format!("unknown layout {other:?}"))),
        }
    }
}

/// Grayscale glyph canvas with its binary ink mask. Row-major, 0 = background.
#[derive(Debug, Clone, PartialEq)]
pub struct GlyphImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
    mask: Vec<bool>,
    pub text: String,
    pub layout: Layout,
    /// Non-fatal notes from construction, e.g. fallback glyph substitutions.
    pub warnings: Vec<String>,
}

impl GlyphImage {
    /// Builds an image from intensities in `[0,1]`; the mask is derived with
    /// [`INK_THRESHOLD`].
    pub fn from_pixels(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DimensionZero);
        }
        if pixels.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        if pixels.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::ShapeMismatch("pixel intensity outside [0,1]".into()));
        }
        let mask = pixels.iter().map(|&p| p >= INK_THRESHOLD).collect();
        Ok(Self {
            width,
            height,
            pixels,
            mask,
            text: String::new(),
            layout: Layout::Horizontal,
            warnings: Vec::new(),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn pixel(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    pub fn mask_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Pads with background on the bottom and right up to the next multiple of `patch`.
    pub fn pad_to_multiple(&self, patch: usize) -> Result<Self> {
        if patch == 0 {
            return Err(Error::InvalidConfig("patch size must be positive".into()));
        }
        let w = self.width.div_ceil(patch) * patch;
        let h = self.height.div_ceil(patch) * patch;
        let mut pixels = vec![0.0; w * h];
        for y in 0..self.height {
            pixels[y * w..y * w + self.width]
                .copy_from_slice(&self.pixels[y * self.width..(y + 1) * self.width]);
        }
        let mut out = Self::from_pixels(w, h, pixels)?;
        out.text = self.text.clone();
        out.layout = self.layout;
        out.warnings = self.warnings.clone();
        Ok(out)
    }

    /// Pixels quantized to `0..=255` as ASCII PGM.
    pub fn to_pgm(&self) -> String {
        let samples: Vec<u16> = self.pixels.iter().map(|p| (p * 255.0).round() as u16).collect();
        netpbm::encode_p2(self.width, self.height, 255, &samples).expect("valid dimensions")
    }

    /// Mask as ASCII PGM with maxval 1.
    pub fn mask_to_pgm(&self) -> String {
        let samples: Vec<u16> = self.mask.iter().map(|&m| m as u16).collect();
        netpbm::encode_p2(self.width, self.height, 1, &samples).expect("valid dimensions")
    }

    /// SHA-256 over dimensions and pixel bits.
    pub fn checksum(&self) -> String {
        let mut h = FloatHasher::new();
        h.str(&format!("{}x{}", self.width, self.height)).f64s(&self.pixels);
        h.finish()
    }
}

/// Canvas geometry for [`rasterize_text`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RasterOptions {
    pub width: usize,
    pub height: usize,
    pub patch: usize,
    /// Integer upscale applied to each font pixel.
    pub scale: usize,
}

impl RasterOptions {
    pub fn validate(&self) -> Result<()> {
        if self.patch == 0 || self.scale == 0 {
            return Err(Error::InvalidConfig("patch and scale must be positive".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::DimensionZero);
        }
        if !self.width.is_multiple_of(self.patch) || !self.height.is_multiple_of(self.patch) {
            return Err(Error::InvalidConfig(format!(
                "canvas {}x{} is not a multiple of patch {}",
                self.width, self.height, self.patch
            )));
        }
        Ok(())
    }
}

/// Renders `text` as binary ink centered on the canvas.
///
/// Horizontal runs advance right, vertical runs advance down, diagonal runs
/// advance one cell right and one cell down per glyph. Unmapped codepoints are
/// drawn with the font's fallback glyph and reported in `warnings`.
pub fn rasterize_text(
    text: &str,
    font: &BitmapFont,
    layout: Layout,
    opts: RasterOptions,
) -> Result<GlyphImage> {
    opts.validate()?;
    let chars: Vec<char> = text.chars().collect();
    if chars.is_empty() {
        return Err(Error::EmptyText);
    }
    let cell_w = font.advance() * opts.scale;
    let cell_h = font.height() * opts.scale;
    let n = chars.len();
    let (run_w, run_h) = match layout {
        Layout::Horizontal => (n * cell_w, cell_h),
        Layout::Vertical => (cell_w, n * cell_h),
        Layout::Diagonal => (n * cell_w, n * cell_h),
    };
    if run_w > opts.width || run_h > opts.height {
        return Err(Error::TextOverflow {
            needed_w: run_w,
            needed_h: run_h,
            width: opts.width,
            height: opts.height,
        });
    }
    let x0 = (opts.width - run_w) / 2;
    let y0 = (opts.height - run_h) / 2;

    let mut pixels = vec![0.0; opts.width * opts.height];
    let mut warnings = Vec::new();
    for (i, &c) in chars.iter().enumerate() {
        let (glyph, found) = font.glyph_or_fallback(c);
        if !found {
            warnings.push(format!(
                "unknown codepoint U+{:04X} at position {i} replaced by fallback glyph",
                c as u32
            ));
        }
        let (gx, gy) = match layout {
            Layout::Horizontal => (x0 + i * cell_w, y0),
            Layout::Vertical => (x0, y0 + i * cell_h),
            Layout::Diagonal => (x0 + i * cell_w, y0 + i * cell_h),
        };
        for fy in 0..glyph.height {
            for fx in 0..glyph.width {
                if !glyph.get(fx, fy) {
                    continue;
                }
                for sy in 0..opts.scale {
                    let row = (gy + fy * opts.scale + sy) * opts.width;
                    for sx in 0..opts.scale {
                        pixels[row + gx + fx * opts.scale + sx] = 1.0;
                    }
                }
            }
        }
    }
    let mut image = GlyphImage::from_pixels(opts.width, opts.height, pixels)?;
    if image.mask_count() == 0 {
        return Err(Error::EmptyText);
    }
    image.text = text.to_string();
    image.layout = layout;
    image.warnings = warnings;
    Ok(image)
}

/// Converts a decoded Netpbm raster to a glyph image padded to `patch`.
///
/// PBM ones and high PGM samples are ink.
pub fn glyph_from_graymap(map: &netpbm::Graymap, patch: usize) -> Result<GlyphImage> {
    let max = map.maxval as f64;
    let pixels = map.samples.iter().map(|&s| s as f64 / max).collect();
    GlyphImage::from_pixels(map.width, map.height, pixels)?.pad_to_multiple(patch)
}

/// Reads a PBM (P1) or PGM (P2/P5) glyph bitmap.
pub fn load_glyph_bitmap(path: impl AsRef<Path>, patch: usize) -> Result<GlyphImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut glyph = glyph_from_graymap(&netpbm::decode(&bytes)?, patch)?;
    if let Some(stem) = path.file_stem() {
        glyph.text = stem.to_string_lossy().into_owned();
    }
    Ok(glyph)
}

/// Fraction of ink cells in each `patch`x`patch` block, row-major over patches.
pub fn glyph_mask_patches(g: &GlyphImage, patch: usize) -> Result<Vec<f64>> {
    if patch == 0 || !g.width.is_multiple_of(patch) || !g.height.is_multiple_of(patch) {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} image is not divisible into {patch}x{patch} patches",
            g.width, g.height
        )));
    }
    let (gw, gh) = (g.width / patch, g.height / patch);
    let mut counts = vec![0usize; gw * gh];
    for y in 0..g.height {
        for x in 0..g.width {
            if g.mask[y * g.width + x] {
                counts[(y / patch) * gw + x / patch] += 1;
            }
        }
    }
    let area = (patch * patch) as f64;
    Ok(counts.into_iter().map(|c| c as f64 / area).collect())
}
