//! Parses a flat key = value run config, applies overrides and prints the
//! canonical form with its hash.

use anyhow::Result;
use logodiffuser::cli::{prepare_glyph, Overrides, RunConfig};

const CONFIG: &str = "\
# reduced model
model.grid = 8
model.d_model = 32
sampler.steps = 20
injection.mode = column-mass
io.text = STAR
";

fn main() -> Result<()> {
    let mut cfg = RunConfig::parse(CONFIG)?;
    Overrides {
        cutoff: Some(6),
        no_averaging: true,
        ..Default::default()
    }
    .apply(&mut cfg);
    cfg.validate()?;
    print!("{}", cfg.serialize());
    let glyph = prepare_glyph(&cfg)?;
    println!("prompt: {}", cfg.prompt()?);
    println!("config hash: {}", cfg.config_hash(&glyph.checksum()));
    Ok(())
}
