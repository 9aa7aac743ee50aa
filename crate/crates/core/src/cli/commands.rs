//! Run orchestration behind the command-line front end.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use super::config::RunConfig;
use super::heatmap::cmd_export_heatmap;
use crate::coreattn::{
    build_injection, layer_scores, off_mask_mass, variance_scores, CumulativeScore, InjectionConfig, InjectionPlan,
    ScoreMode,
};
use crate::error::{Error, Result};
use crate::flowsampler::{generate, reconstruct_capture, AttentionTrace, Branch, Generation, Injection, SamplerConfig};
use crate::glyphkit::{glyph_mask_patches, load_glyph_bitmap, rasterize_text, BitmapFont, GlyphImage, RasterOptions};
use crate::manifest::{ErrorRecord, RunManifest};
use crate::metrics::{char_f1, exact_match, sweep_aggregate, SweepCell, SweepTable};
use crate::tinymmdit::ModelWeights;

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Glyph for the configured model: the bitmap at `io.glyph`, else `io.text`
/// rasterized with the builtin font. Smaller bitmaps are padded bottom/right.
pub fn prepare_glyph(cfg: &RunConfig) -> Result<GlyphImage> {
    let (side, patch) = (cfg.model.image_side(), cfg.model.patch);
    let glyph = match &cfg.io.glyph {
        Some(path) => load_glyph_bitmap(path, patch)?,
        None => rasterize_text(
            &cfg.io.text,
            &BitmapFont::builtin(),
            cfg.io.layout,
            RasterOptions {
                width: side,
                height: side,
                patch,
                scale: cfg.io.scale,
            },
        )?,
    };
    if glyph.width() > side || glyph.height() > side {
        return Err(Error::ShapeMismatch(format!(
            "glyph {}x{} exceeds the {side}x{side} model canvas",
            glyph.width(),
            glyph.height()
        )));
    }
    if glyph.width() == side && glyph.height() == side {
        return Ok(glyph);
    }
    let mut pixels = vec![0.0; side * side];
    for y in 0..glyph.height() {
        for x in 0..glyph.width() {
            pixels[y * side + x] = glyph.pixel(x, y);
        }
    }
    let mut padded = GlyphImage::from_pixels(side, side, pixels)?;
    padded.text = glyph.text;
    padded.layout = glyph.layout;
    padded.warnings = glyph.warnings;
    Ok(padded)
}

/// Writes the glyph raster (and optionally its ink mask) as PGM.
pub fn cmd_rasterize(cfg: &RunConfig, out: &Path, mask_out: Option<&Path>) -> Result<GlyphImage> {
    cfg.validate()?;
    let glyph = prepare_glyph(cfg)?;
    write_file(out, glyph.to_pgm())?;
    if let Some(path) = mask_out {
        write_file(path, glyph.mask_to_pgm())?;
    }
    Ok(glyph)
}

/// Reconstruction trace of the configured glyph; saved to `io.trace` if set.
pub fn cmd_reconstruct(cfg: &RunConfig) -> Result<AttentionTrace> {
    cfg.validate()?;
    let weights = ModelWeights::init(&cfg.model)?;
    let glyph = prepare_glyph(cfg)?;
    let trace = reconstruct_capture(&weights, &glyph, &cfg.io.recon_prompt, &cfg.sampler)?;
    if let Some(path) = &cfg.io.trace {
        trace.save(path)?;
    }
    Ok(trace)
}

/// Per-layer head-averaged conditional I2I probabilities seen at one step.
struct StepProbe {
    step: usize,
    n_heads: usize,
    layers: Vec<Option<Array2<f64>>>,
}

impl StepProbe {
    fn new(step: usize, n_layers: usize, n_heads: usize) -> Self {
        Self {
            step,
            n_heads,
            layers: vec![None; n_layers],
        }
    }

    fn observe(&mut self, branch: Branch, step: usize, layer: usize, i2i: ndarray::ArrayView2<'_, f32>) {
        if branch != Branch::Conditional || step != self.step {
            return;
        }
        let scale = 1.0 / self.n_heads as f64;
        let acc = self.layers[layer].get_or_insert_with(|| Array2::zeros(i2i.raw_dim()));
        acc.zip_mut_with(&i2i, |a, &p| *a += p as f64 * scale);
    }

    /// Layer-mean off-mask share of the plan's core rows.
    fn shift(&self, plan: &InjectionPlan, mask_fracs: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for (layer, map) in self.layers.iter().enumerate() {
            let map = map
                .as_ref()
                .ok_or_else(|| Error::TraceMismatch(format!("no attention observed at step {}", self.step)))?;
            let set = plan
                .set(self.step, layer)
                .ok_or_else(|| Error::TraceMismatch(format!("plan has no set at step {}", self.step)))?;
            total += off_mask_mass(map.view(), mask_fracs, &set.indices)?;
        }
        Ok(total / self.layers.len() as f64)
    }
}

/// Generation plus the attention metrics of the injected rows.
struct GeneratedRun {
    generation: Generation,
    glyph: GlyphImage,
    trace: Option<AttentionTrace>,
    metrics: BTreeMap<String, f64>,
}

fn run_pipeline(cfg: &RunConfig, weights: &ModelWeights, glyph: &GlyphImage, trace: Option<&AttentionTrace>) -> Result<GeneratedRun> {
    let prompt = cfg.prompt()?;
    let mut metrics = BTreeMap::new();
    let Some(inj_cfg) = cfg.injection_config() else {
        let generation = generate(weights, &prompt, None, &cfg.sampler, None)?;
        return Ok(GeneratedRun {
            generation,
            glyph: glyph.clone(),
            trace: None,
            metrics,
        });
    };
    let owned;
    let trace = match trace {
        Some(t) => t,
        None => {
            owned = reconstruct_capture(weights, glyph, &cfg.io.recon_prompt, &cfg.sampler)?;
            &owned
        }
    };
    let plan = build_injection(trace, &inj_cfg)?;
    let measurable = inj_cfg.cutoff_step > 0 && inj_cfg.ratio > 0.0;
    let m = &weights.cfg;
    let mut probe = StepProbe::new(inj_cfg.cutoff_step, m.n_layers, m.n_heads);
    let generation = {
        let mut observe = |b: Branch, site: crate::tinymmdit::HookSite, a: &crate::tinymmdit::JointAttention| {
            probe.observe(b, site.step, site.layer, a.i2i())
        };
        let observer: Option<&mut crate::flowsampler::GenerationObserver<'_>> =
            if measurable { Some(&mut observe) } else { None };
        generate(weights, &prompt, Some(Injection { trace, plan: &plan }), &cfg.sampler, observer)?
    };
    if measurable {
        let mask = glyph_mask_patches(glyph, m.patch)?;
        let shift = probe.shift(&plan, &mask)?;
        metrics.insert("attention_shift".into(), shift);
        metrics.insert("mask_coverage".into(), 1.0 - shift);
    }
    Ok(GeneratedRun {
        generation,
        glyph: glyph.clone(),
        trace: Some(trace.clone()),
        metrics,
    })
}

fn generate_inner(cfg: &RunConfig, manifest: &mut RunManifest) -> Result<()> {
    cfg.validate()?;
    let weights = ModelWeights::init(&cfg.model)?;
    let glyph = prepare_glyph(cfg)?;
    manifest.config_hash = cfg.config_hash(&glyph.checksum());
    manifest.warnings.extend(glyph.warnings.iter().cloned());
    let run = run_pipeline(cfg, &weights, &glyph, None)?;
    let g = run.generation;
    manifest.steps = g.manifest.steps;
    manifest.injections = g.manifest.injections;
    manifest.model_evaluations = g.manifest.model_evaluations;
    manifest.output_checksum = g.manifest.output_checksum;
    manifest.metrics = run.metrics;
    manifest.metrics.insert("glyph_ink_pixels".into(), run.glyph.mask_count() as f64);
    if let Some(pred) = &cfg.io.predicted {
        let f1 = char_f1(pred, &cfg.io.text);
        manifest.metrics.insert("exact_match".into(), exact_match(pred, &cfg.io.text) as u8 as f64);
        manifest.metrics.insert("char_precision".into(), f1.precision);
        manifest.metrics.insert("char_recall".into(), f1.recall);
        manifest.metrics.insert("char_f1".into(), f1.f1);
    }
    write_file(&cfg.io.output, g.image.to_pgm())?;
    manifest.outputs.insert("image".into(), cfg.io.output.display().to_string());
    if let (Some(path), Some(trace)) = (&cfg.io.trace, &run.trace) {
        trace.save(path)?;
        manifest.outputs.insert("trace".into(), path.display().to_string());
    }
    Ok(())
}

/// Full pipeline run: glyph, reconstruction, plan, guided generation, metrics.
///
/// Writes the output PGM, the optional trace dump and the JSON manifest.
/// On failure the manifest still gets written, carrying an error record.
pub fn cmd_generate(cfg: &RunConfig) -> Result<RunManifest> {
    let mut manifest = RunManifest::new();
    manifest.config = cfg.entries().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    let result = generate_inner(cfg, &mut manifest);
    if let Err(e) = &result {
        manifest.error = Some(ErrorRecord::from(e));
    }
    manifest.outputs.insert("manifest".into(), cfg.io.manifest.display().to_string());
    let written = manifest.write(&cfg.io.manifest);
    result?;
    written?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisRow {
    pub step: usize,
    pub layer: usize,
    pub averaged: bool,
    pub indices: Vec<usize>,
    /// `None` when the set is empty.
    pub attention_shift: Option<f64>,
}

impl AnalysisRow {
    pub fn mask_coverage(&self) -> Option<f64> {
        self.attention_shift.map(|s| 1.0 - s)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnalysisReport {
    pub rows: Vec<AnalysisRow>,
    pub files: Vec<PathBuf>,
}

impl AnalysisReport {
    /// `step,layer,selection,core_tokens,mask_coverage,attention_shift`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,layer,selection,core_tokens,mask_coverage,attention_shift\n");
        let fmt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |v| v.to_string());
        for r in &self.rows {
            let idx: Vec<String> = r.indices.iter().map(usize::to_string).collect();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.step,
                r.layer,
                if r.averaged { "averaged" } else { "per-layer" },
                idx.join(" "),
                fmt(r.mask_coverage()),
                fmt(r.attention_shift)
            ));
        }
        out
    }
}

/// Core-token analysis of the reconstruction trace.
///
/// For every step up to the cutoff and every layer, selects core tokens with
/// and without layer averaging and measures how much of their attention falls
/// off the glyph mask. Writes `analysis.csv` and score heatmaps of the
/// cutoff step into `out_dir`.
pub fn cmd_analyze(cfg: &RunConfig, out_dir: &Path) -> Result<AnalysisReport> {
    cfg.validate()?;
    let weights = ModelWeights::init(&cfg.model)?;
    let glyph = prepare_glyph(cfg)?;
    let trace = reconstruct_capture(&weights, &glyph, &cfg.io.recon_prompt, &cfg.sampler)?;
    if let Some(path) = &cfg.io.trace {
        trace.save(path)?;
    }
    let mask = glyph_mask_patches(&glyph, cfg.model.patch)?;
    let base = InjectionConfig {
        ratio: cfg.injection.ratio,
        cutoff_step: cfg.sampler.cutoff_step,
        mode: cfg.injection.mode,
        averaging: false,
    };
    let per_layer = build_injection(&trace, &base)?;
    let averaged = build_injection(&trace, &InjectionConfig { averaging: true, ..base })?;
    let mut report = AnalysisReport::default();
    for step in 1..=base.cutoff_step {
        for layer in 0..trace.n_layers() {
            let map = crate::coreattn::head_average(&trace.layer_probabilities(step, layer))?;
            for (plan, is_avg) in [(&per_layer, false), (&averaged, true)] {
                let set = plan.set(step, layer).expect("plan covers every step up to the cutoff");
                let shift = if set.is_empty() {
                    None
                } else {
                    Some(off_mask_mass(map.view(), &mask, &set.indices)?)
                };
                report.rows.push(AnalysisRow {
                    step,
                    layer,
                    averaged: is_avg,
                    indices: set.indices.clone(),
                    attention_shift: shift,
                });
            }
        }
    }

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let csv = out_dir.join("analysis.csv");
    write_file(&csv, report.to_csv())?;
    report.files.push(csv);
    let grid = cfg.model.grid;
    let step = base.cutoff_step;
    if step > 0 {
        let mask_path = out_dir.join("mask.pgm");
        cmd_export_heatmap(&mask, grid, &mask_path)?;
        report.files.push(mask_path);
        if base.mode == ScoreMode::LayerVariance {
            let var = variance_scores(&layer_scores(&trace, step, ScoreMode::RowMass)?)?;
            let path = out_dir.join(format!("variance_s{step}.pgm"));
            cmd_export_heatmap(&var.scores, grid, &path)?;
            report.files.push(path);
        } else {
            let mut running = CumulativeScore::new(trace.n_img());
            for s in layer_scores(&trace, step, base.mode)? {
                running = running.update(&s)?;
                for (name, values) in [("scores", &s.scores[..]), ("averaged", running.mean())] {
                    let path = out_dir.join(format!("{name}_s{step}_l{}.pgm", s.layer));
                    cmd_export_heatmap(values, grid, &path)?;
                    report.files.push(path);
                }
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub ratio: f64,
    pub step: usize,
    pub error: ErrorRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub table: SweepTable,
    pub cells: Vec<SweepCell>,
    pub failures: Vec<CellFailure>,
}

impl SweepReport {
    /// 0 when every cell ran, 4 when some cells are missing.
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() { 0 } else { 4 }
    }
}

pub const SWEEP_METRICS: [&str; 2] = ["attention_shift", "mask_coverage"];

fn check_grid(cfg: &RunConfig) -> Result<()> {
    let grid = &cfg.sweep;
    if grid.ratios.is_empty() || grid.steps.is_empty() {
        return Err(Error::InvalidConfig("sweep grid is empty".into()));
    }
    for (i, &r) in grid.ratios.iter().enumerate() {
        if grid.ratios[..i].iter().any(|&q| q.to_bits() == r.to_bits()) {
            return Err(Error::DuplicateCell {
                ratio: r,
                step: grid.steps[0],
                metric: SWEEP_METRICS[0].into(),
            });
        }
    }
    for (i, &s) in grid.steps.iter().enumerate() {
        if grid.steps[..i].contains(&s) {
            return Err(Error::DuplicateCell {
                ratio: grid.ratios[0],
                step: s,
                metric: SWEEP_METRICS[0].into(),
            });
        }
    }
    Ok(())
}

/// Runs every (ratio, cutoff step) cell of the sweep grid with shared seeds.
///
/// The glyph is reconstructed once up to the largest cutoff; each cell builds
/// its own plan and generation. A cell's metrics are measured on the
/// conditional branch's head-averaged I2I attention at its cutoff step,
/// averaged over layers. Failed cells stay in the table as `NA`; if every
/// cell fails the first error is returned. The CSV goes to `io.report`.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<SweepReport> {
    let mut base = cfg.clone();
    base.sampler.cutoff_step = 0;
    base.validate()?;
    check_grid(cfg)?;
    let weights = ModelWeights::init(&cfg.model)?;
    let glyph = prepare_glyph(cfg)?;
    let max_step = cfg.sweep.steps.iter().copied().filter(|&s| s <= cfg.sampler.steps).max().unwrap_or(0);
    let recon_cfg = SamplerConfig {
        cutoff_step: max_step,
        ..cfg.sampler
    };
    let trace = reconstruct_capture(&weights, &glyph, &cfg.io.recon_prompt, &recon_cfg)?;

    let mut cells = Vec::new();
    let mut failures = Vec::new();
    let mut first_error = None;
    for &ratio in &cfg.sweep.ratios {
        for &step in &cfg.sweep.steps {
            let mut cell_cfg = cfg.clone();
            cell_cfg.injection.enabled = true;
            cell_cfg.injection.ratio = ratio;
            cell_cfg.sampler.cutoff_step = step;
            let outcome = cell_cfg
                .validate()
                .and_then(|_| run_pipeline(&cell_cfg, &weights, &glyph, Some(&trace)))
                .and_then(|run| {
                    if run.metrics.contains_key(SWEEP_METRICS[0]) {
                        Ok(run)
                    } else {
                        Err(Error::InvalidConfig(format!("cell ({ratio}, {step}) selects no core tokens")))
                    }
                });
            match outcome {
                Ok(run) => {
                    for metric in SWEEP_METRICS {
                        cells.push(SweepCell {
                            ratio,
                            step,
                            metric: metric.into(),
                            value: run.metrics[metric],
                            manifest: Some(run.generation.manifest.output_checksum.clone()),
                        });
                    }
                }
                Err(e) => {
                    failures.push(CellFailure {
                        ratio,
                        step,
                        error: ErrorRecord::from(&e),
                    });
                    first_error.get_or_insert(e);
                }
            }
        }
    }
    if cells.is_empty() {
        return Err(first_error.expect("grid is nonempty"));
    }
    let mut table = sweep_aggregate(&cells)?;
    table.extend_grid(&cfg.sweep.ratios, &cfg.sweep.steps);
    table.metrics = SWEEP_METRICS.iter().map(|m| m.to_string()).collect();
    write_file(&cfg.io.report, table.to_csv())?;
    Ok(SweepReport { table, cells, failures })
}
