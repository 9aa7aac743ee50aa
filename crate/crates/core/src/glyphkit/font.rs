use std::collections::BTreeMap;

use font8x8::{UnicodeFonts, BASIC_FONTS};

use crate::error::{Error, Result};

/// Binary glyph bitmap, row-major, `true` = ink.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlyphBitmap {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl GlyphBitmap {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "glyph bitmap {width}x{height} needs {} cells, got {}",
                width * height,
                bits.len()
            )));
        }
        Ok(Self { width, height, bits })
    }

    /// Decodes an 8x8 glyph stored as 8 row bytes, least significant bit leftmost.
    pub fn from_rows_lsb(rows: [u8; 8]) -> Self {
        let bits = rows
            .iter()
            .flat_map(|row| (0..8).map(move |col| row >> col & 1 == 1))
            .collect();
        Self {
            width: 8,
            height: 8,
            bits,
        }
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn ink_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Fixed-height bitmap font with a fallback glyph for unmapped codepoints.
#[derive(Debug, Clone)]
pub struct BitmapFont {
    height: usize,
    advance: usize,
    glyphs: BTreeMap<char, GlyphBitmap>,
    fallback: GlyphBitmap,
}

impl BitmapFont {
    pub fn new(glyphs: BTreeMap<char, GlyphBitmap>, fallback: GlyphBitmap) -> Result<Self> {
        let height = fallback.height;
        let advance = fallback.width;
        if height == 0 || advance == 0 {
            return Err(Error::DimensionZero);
        }
        if let Some((c, _)) = glyphs
            .iter()
            .find(|(_, g)| g.height != height || g.width != advance)
        {
            return Err(Error::ShapeMismatch(format!(
                "glyph {c:?} does not match the font cell {advance}x{height}"
            )));
        }
        Ok(Self {
            height,
            advance,
            glyphs,
            fallback,
        })
    }

    /// The embedded 8x8 font covering printable ASCII (U+0020..U+007E).
    pub fn builtin() -> Self {
        let glyphs = (0x20u8..0x7f)
            .map(char::from)
            .filter_map(|c| BASIC_FONTS.get(c).map(|rows| (c, GlyphBitmap::from_rows_lsb(rows))))
            .collect();
        // hollow box
        let fallback = GlyphBitmap::from_rows_lsb([0x7e, 0x42, 0x42, 0x42, 0x42, 0x42, 0x7e, 0x00]);
        Self::new(glyphs, fallback).expect("builtin font is uniform")
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Horizontal advance (cell width) in font pixels.
    pub fn advance(&self) -> usize {
        self.advance
    }

    pub fn glyph(&self, c: char) -> Option<&GlyphBitmap> {
        self.glyphs.get(&c)
    }

    pub fn fallback(&self) -> &GlyphBitmap {
        &self.fallback
    }

    /// Glyph for `c`, or the fallback glyph and `false` when unmapped.
    pub fn glyph_or_fallback(&self, c: char) -> (&GlyphBitmap, bool) {
        match self.glyphs.get(&c) {
            Some(g) => (g, true),
            None => (&self.fallback, false),
        }
    }
}
