use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use logodiffuser::cli::{self, Overrides, RunConfig};
use logodiffuser::coreattn::ScoreMode;
use logodiffuser::Error;

#[derive(Parser)]
#[command(name = "logodiffuser", version, about = "Glyph-guided logo generation with a toy MM-DiT")]
struct Cli {
    /// Flat key = value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. `--set io.text=STAR`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Flags {
    #[arg(long, global = true)]
    steps: Option<usize>,
    #[arg(long, global = true)]
    guidance: Option<f64>,
    #[arg(long, global = true)]
    ratio: Option<f64>,
    #[arg(long, global = true)]
    cutoff: Option<usize>,
    /// row-mass, row-max, column-mass or layer-variance.
    #[arg(long, global = true)]
    mode: Option<ScoreMode>,
    #[arg(long, global = true)]
    no_averaging: bool,
    #[arg(long, global = true)]
    no_injection: bool,
    #[arg(long, global = true)]
    seed_weights: Option<u64>,
    #[arg(long, global = true)]
    seed_noise: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Render the glyph image (and optionally its mask) as PGM.
    Rasterize {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        mask_out: Option<PathBuf>,
    },
    /// Capture the reconstruction attention trace.
    Reconstruct {
        #[arg(long)]
        trace: PathBuf,
    },
    /// Run the full pipeline and write image plus manifest.
    Generate,
    /// Per-layer versus averaged core tokens of the reconstruction.
    Analyze {
        #[arg(long, default_value = "analysis")]
        out_dir: PathBuf,
    },
    /// Top-k ratio x cutoff step grid.
    Sweep,
    /// Min-max normalized grayscale heatmap of a value list or score file.
    ExportHeatmap {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        side: usize,
        #[arg(long)]
        out: PathBuf,
        /// Tensor name inside a tensor file.
        #[arg(long)]
        tensor: Option<String>,
    },
}

fn load_config(cli: &Cli) -> logodiffuser::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for kv in &cli.sets {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    let f = &cli.flags;
    Overrides {
        steps: f.steps,
        guidance: f.guidance,
        ratio: f.ratio,
        cutoff: f.cutoff,
        mode: f.mode,
        no_averaging: f.no_averaging,
        no_injection: f.no_injection,
        seed_weights: f.seed_weights,
        seed_noise: f.seed_noise,
    }
    .apply(&mut cfg);
    Ok(cfg)
}

fn run(cli: &Cli) -> logodiffuser::Result<i32> {
    if let Command::ExportHeatmap { input, side, out, tensor } = &cli.command {
        cli::cmd_export_heatmap(&cli::read_values(input, tensor.as_deref())?, *side, out)?;
        println!("wrote {}", out.display());
        return Ok(0);
    }
    let mut cfg = load_config(cli)?;
    match &cli.command {
        Command::Rasterize { out, mask_out } => {
            let g = cli::cmd_rasterize(&cfg, out, mask_out.as_deref())?;
            for w in &g.warnings {
                eprintln!("warning: {w}");
            }
            println!("{} ink pixels, checksum {}", g.mask_count(), g.checksum());
        }
        Command::Reconstruct { trace } => {
            cfg.io.trace = Some(trace.clone());
            let t = cli::cmd_reconstruct(&cfg)?;
            println!("{} steps, {} maps, checksum {}", t.steps(), t.map_count(), t.checksum());
        }
        Command::Generate => {
            let m = cli::cmd_generate(&cfg)?;
            println!("{} injections, output checksum {}", m.injections, m.output_checksum);
        }
        Command::Analyze { out_dir } => {
            let r = cli::cmd_analyze(&cfg, out_dir)?;
            println!("{} rows, {} files in {}", r.rows.len(), r.files.len(), out_dir.display());
        }
        Command::Sweep => {
            let r = cli::cmd_sweep(&cfg)?;
            for f in &r.failures {
                eprintln!("cell ({}, {}) failed: {}", f.ratio, f.step, f.error.message);
            }
            print!("{}", r.table.to_csv());
            return Ok(r.exit_code());
        }
        Command::ExportHeatmap { .. } => unreachable!(),
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
