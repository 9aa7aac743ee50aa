//! Renders text with the builtin 8x8 font in each layout and prints the
//! patch-level ink mask.
//!
//!     cargo run --example rasterize_glyph -- [TEXT]

use anyhow::Result;
use logodiffuser::glyphkit::{glyph_mask_patches, rasterize_text, BitmapFont, Layout, RasterOptions};

fn main() -> Result<()> {
    let text = std::env::args().nth(1).unwrap_or_else(|| "AB".to_string());
    let font = BitmapFont::builtin();
    let opts = RasterOptions {
        width: 64,
        height: 64,
        patch: 8,
        scale: 2,
    };
    for layout in [Layout::Horizontal, Layout::Vertical, Layout::Diagonal] {
        let g = match rasterize_text(&text, &font, layout, opts) {
            Ok(g) => g,
            Err(e) => {
                println!("{layout}: {e}");
                continue;
            }
        };
        println!("{layout}: {} ink pixels", g.mask_count());
        for w in &g.warnings {
            println!("  warning: {w}");
        }
        let fracs = glyph_mask_patches(&g, opts.patch)?;
        for row in fracs.chunks(opts.width / opts.patch) {
            let line: String = row
                .iter()
                .map(|&f| if f >= 0.5 { '#' } else if f > 0.0 { '+' } else { '.' })
                .collect();
            println!("  {line}");
        }
    }
    Ok(())
}
