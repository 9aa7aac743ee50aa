//! Writes a score vector as a min-max normalized PGM heatmap.
//!
//!     cargo run --example export_heatmap -- [OUT.pgm]

use anyhow::Result;
use logodiffuser::cli::{cmd_export_heatmap, heatmap_pixels};

fn main() -> Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "heatmap.pgm".into());
    println!("{:?}", heatmap_pixels(&[0.0, 0.5, 1.0, 0.25], 2)?);
    let side = 16;
    let scores: Vec<f64> = (0..side * side)
        .map(|i| {
            let (r, c) = ((i / side) as f64 - 7.5, (i % side) as f64 - 7.5);
            (-(r * r + c * c) / 20.0).exp()
        })
        .collect();
    cmd_export_heatmap(&scores, side, &out)?;
    println!("wrote {out}");
    Ok(())
}
