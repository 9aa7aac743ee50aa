//! Per-layer versus cumulatively averaged core-token selection on a
//! synthetic score stack with one spiking layer.

use anyhow::Result;
use logodiffuser::coreattn::{select_core_tokens, top_k_indices, CumulativeScore, ScoreMode, ScoreVector};

fn main() -> Result<()> {
    let n = 16;
    let base: Vec<f64> = (0..n).map(|i| 1.0 + (n - i) as f64 * 0.1).collect();
    let mut running = CumulativeScore::new(n);
    for layer in 0..6 {
        let mut scores = base.clone();
        if layer == 3 {
            scores[15] += 2.0;
            scores[14] += 2.0;
        }
        let s = ScoreVector {
            scores,
            step: 1,
            layer,
            mode: ScoreMode::RowMass,
        };
        running = running.update(&s)?;
        let own = select_core_tokens(&s, 0.125)?;
        let avg = top_k_indices(running.mean(), 0.125)?;
        println!("layer {layer}: per-layer {:?}  averaged {:?}", own.indices, avg);
    }
    Ok(())
}
