//! Reads a PBM/PGM glyph bitmap (or a built-in sample) and writes it back
//! as P2 together with its ink mask.
//!
//!     cargo run --example netpbm_io -- [IN.pbm|IN.pgm] [OUT_DIR]

use anyhow::Result;
use logodiffuser::glyphkit::{glyph_from_graymap, load_glyph_bitmap, netpbm};

const SAMPLE: &str = "P1\n# 6x5 letter T\n6 5\n111111\n001100\n001100\n001100\n001100\n";

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let input = args.next();
    let out_dir = std::path::PathBuf::from(args.next().unwrap_or_else(|| ".".into()));
    let glyph = match &input {
        Some(path) => load_glyph_bitmap(path, 8)?,
        None => glyph_from_graymap(&netpbm::decode(SAMPLE.as_bytes())?, 8)?,
    };
    println!(
        "{}x{} after padding to 8, {} ink pixels",
        glyph.width(),
        glyph.height(),
        glyph.mask_count()
    );
    std::fs::create_dir_all(&out_dir)?;
    std::fs::write(out_dir.join("glyph.pgm"), glyph.to_pgm())?;
    std::fs::write(out_dir.join("mask.pgm"), glyph.mask_to_pgm())?;
    let back = netpbm::decode(glyph.to_pgm().as_bytes())?;
    println!("re-read as {:?} with maxval {}", back.kind, back.maxval);
    Ok(())
}
