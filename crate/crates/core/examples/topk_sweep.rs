//! Top-k ratio x cutoff step sweep on a reduced model, printed as CSV.
//!
//!     cargo run --release --example topk_sweep

use anyhow::Result;
use logodiffuser::cli::{cmd_sweep, RunConfig};

fn main() -> Result<()> {
    let dir = tempfile_dir()?;
    let mut cfg = RunConfig::default();
    cfg.model.grid = 8;
    cfg.model.d_model = 32;
    cfg.model.n_heads = 2;
    cfg.model.n_layers = 2;
    cfg.io.text = "AB".into();
    cfg.io.report = dir.join("sweep.csv");
    let report = cmd_sweep(&cfg)?;
    print!("{}", report.table.to_csv());
    println!("{} failed cells", report.failures.len());
    Ok(())
}

fn tempfile_dir() -> Result<std::path::PathBuf> {
    let dir = std::env::temp_dir().join("logodiffuser-topk-sweep");
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}
