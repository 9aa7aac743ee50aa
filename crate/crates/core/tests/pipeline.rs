mod common;

use common::{in_dir, setup, small_config};
use logodiffuser::cli::{cmd_analyze, cmd_generate, cmd_reconstruct, cmd_sweep};
use logodiffuser::coreattn::{build_injection, InjectionConfig};
use logodiffuser::flowsampler::{generate, reconstruct_capture, AttentionTrace, Branch, Injection};
use logodiffuser::manifest::RunManifest;
use logodiffuser::tinymmdit::{HookSite, JointAttention};
use logodiffuser::Error;
use ndarray::{s, Array2};

fn inj_cfg(ratio: f64, cutoff: usize) -> InjectionConfig {
    InjectionConfig {
        ratio,
        cutoff_step: cutoff,
        ..InjectionConfig::default()
    }
}

#[test]
fn injection_leaves_text_blocks_untouched_at_first_layer() {
    let cfg = small_config();
    let (w, g) = setup(&cfg);
    let trace = reconstruct_capture(&w, &g, "", &cfg.sampler).unwrap();
    let plan = build_injection(&trace, &inj_cfg(0.5, 4)).unwrap();
    let prompt = cfg.prompt().unwrap();

    let run = |inj: Option<Injection<'_>>| {
        let mut seen: Vec<(usize, Array2<f32>)> = Vec::new();
        let mut obs = |b: Branch, site: HookSite, a: &JointAttention| {
            if b == Branch::Conditional && site.step == 1 && site.layer == 0 {
                seen.push((site.head, a.logits.clone()));
            }
        };
        generate(&w, &prompt, inj, &cfg.sampler, Some(&mut obs)).unwrap();
        seen
    };
    let hooked = run(Some(Injection { trace: &trace, plan: &plan }));
    let plain = run(None);
    assert_eq!(hooked.len(), cfg.model.n_heads);
    let tt = cfg.model.t_txt;
    for ((h1, a), (h2, b)) in hooked.iter().zip(&plain) {
        assert_eq!(h1, h2);
        assert_eq!(a.slice(s![..tt, ..]), b.slice(s![..tt, ..]));
        assert_eq!(a.slice(s![tt.., ..tt]), b.slice(s![tt.., ..tt]));
    }
    // Step 1 starts both runs from the same noise, so layer 0 I2I logits
    // already agree; the effect shows downstream.
    let base = generate(&w, &prompt, None, &cfg.sampler, None).unwrap();
    let guided = generate(&w, &prompt, Some(Injection { trace: &trace, plan: &plan }), &cfg.sampler, None).unwrap();
    assert_ne!(base.latent, guided.latent);
}

#[test]
fn zero_cutoff_and_zero_ratio_reproduce_the_baseline() {
    let cfg = small_config();
    let (w, g) = setup(&cfg);
    let prompt = cfg.prompt().unwrap();
    let base = generate(&w, &prompt, None, &cfg.sampler, None).unwrap();

    let mut s0 = cfg.sampler;
    s0.cutoff_step = 0;
    let t0 = reconstruct_capture(&w, &g, "", &s0).unwrap();
    let p0 = build_injection(&t0, &inj_cfg(0.125, 0)).unwrap();
    let g0 = generate(&w, &prompt, Some(Injection { trace: &t0, plan: &p0 }), &s0, None).unwrap();
    assert_eq!(g0.image.to_pgm(), base.image.to_pgm());

    let mut sfull = cfg.sampler;
    sfull.cutoff_step = sfull.steps;
    let tf = reconstruct_capture(&w, &g, "", &sfull).unwrap();
    let pf = build_injection(&tf, &inj_cfg(0.0, sfull.steps)).unwrap();
    let gf = generate(&w, &prompt, Some(Injection { trace: &tf, plan: &pf }), &sfull, None).unwrap();
    assert_eq!(gf.latent, base.latent);
    assert_eq!(gf.manifest.injections, 0);
}

#[test]
fn manifest_counts_steps_and_injections() {
    let cfg = small_config();
    let (w, g) = setup(&cfg);
    let trace = reconstruct_capture(&w, &g, "", &cfg.sampler).unwrap();
    let plan = build_injection(&trace, &inj_cfg(0.125, 4)).unwrap();
    let out = generate(&w, "logo", Some(Injection { trace: &trace, plan: &plan }), &cfg.sampler, None).unwrap();
    let m = out.manifest;
    assert_eq!(m.model_evaluations, 10);
    assert_eq!(m.injections, 4 * cfg.model.n_layers);
    assert_eq!(m.steps.len(), 10);
    assert!(m.steps.iter().all(|s| s.injected_layers == if s.step <= 4 { 2 } else { 0 }));
    assert_eq!(m.steps[0].t, 1.0);
}

#[test]
fn mismatched_plan_is_rejected() {
    let cfg = small_config();
    let (w, g) = setup(&cfg);
    let trace = reconstruct_capture(&w, &g, "", &cfg.sampler).unwrap();
    let plan = build_injection(&trace, &inj_cfg(0.125, 3)).unwrap();
    let err = generate(&w, "x", Some(Injection { trace: &trace, plan: &plan }), &cfg.sampler, None).unwrap_err();
    assert!(matches!(err, Error::TraceMismatch(_)));
    let other = reconstruct_capture(&w, &g, "other", &cfg.sampler).unwrap();
    let plan = build_injection(&other, &inj_cfg(0.125, 4)).unwrap();
    let err = generate(&w, "x", Some(Injection { trace: &trace, plan: &plan }), &cfg.sampler, None).unwrap_err();
    assert!(matches!(err, Error::TraceMismatch(_)));
}

#[test]
fn generate_command_is_reproducible_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    in_dir(&mut cfg, dir.path());
    cfg.io.trace = Some(dir.path().join("trace.bin"));
    cfg.io.predicted = Some("BA".into());
    let m1 = cmd_generate(&cfg).unwrap();
    let bytes1 = std::fs::read(&cfg.io.output).unwrap();
    let m2 = cmd_generate(&cfg).unwrap();
    assert_eq!(std::fs::read(&cfg.io.output).unwrap(), bytes1);
    assert_eq!(m1.output_checksum, m2.output_checksum);
    assert_eq!(m1.config_hash, m2.config_hash);
    assert_eq!(RunManifest::read(&cfg.io.manifest).unwrap(), m2);
    assert_eq!(m1.metrics["char_f1"], 1.0);
    assert_eq!(m1.metrics["exact_match"], 0.0);
    let cov = m1.metrics["mask_coverage"];
    assert!((0.0..=1.0).contains(&cov));
    assert!((cov + m1.metrics["attention_shift"] - 1.0).abs() < 1e-12);
    let trace = AttentionTrace::load(cfg.io.trace.as_ref().unwrap()).unwrap();
    assert_eq!(trace.steps(), 4);

    let mut moved = cfg.clone();
    moved.io.output = dir.path().join("elsewhere.pgm");
    assert_eq!(cmd_generate(&moved).unwrap().config_hash, m1.config_hash);
    moved.sampler.noise_seed = 1;
    assert_ne!(cmd_generate(&moved).unwrap().config_hash, m1.config_hash);
}

#[test]
fn ratio_zero_matches_disabled_injection_through_the_command() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    in_dir(&mut cfg, dir.path());
    cfg.injection.enabled = false;
    let off = cmd_generate(&cfg).unwrap();
    let off_bytes = std::fs::read(&cfg.io.output).unwrap();
    cfg.injection.enabled = true;
    cfg.injection.ratio = 0.0;
    let zero = cmd_generate(&cfg).unwrap();
    assert_eq!(std::fs::read(&cfg.io.output).unwrap(), off_bytes);
    assert_eq!(zero.output_checksum, off.output_checksum);
}

#[test]
fn failures_are_recorded_in_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    in_dir(&mut cfg, dir.path());
    cfg.io.text = "MUCH TOO LONG".into();
    let err = cmd_generate(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let m = RunManifest::read(&cfg.io.manifest).unwrap();
    let rec = m.error.unwrap();
    assert_eq!(rec.kind, "TextOverflow");
    assert_eq!(rec.exit_code, 2);
    assert!(!cfg.io.output.exists());
}

#[test]
fn glyph_bitmap_input_replaces_rasterized_text() {
    let dir = tempfile::tempdir().unwrap();
    let pbm = dir.path().join("t.pbm");
    let mut body = String::from("P1\n24 24\n");
    for y in 0..24 {
        for x in 0..24 {
            body.push(if y < 6 || (8..16).contains(&x) { '1' } else { '0' });
        }
        body.push('\n');
    }
    std::fs::write(&pbm, body).unwrap();
    let mut cfg = small_config();
    in_dir(&mut cfg, dir.path());
    cfg.io.glyph = Some(pbm);
    let g = logodiffuser::cli::prepare_glyph(&cfg).unwrap();
    assert_eq!((g.width(), g.height()), (64, 64));
    assert_eq!(g.mask_count(), 24 * 6 + 8 * 18);
    assert_eq!(g.text, "t");
    let m = cmd_generate(&cfg).unwrap();
    assert!(m.error.is_none());
}

#[test]
fn reconstruct_command_saves_a_loadable_trace() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg.io.trace = Some(dir.path().join("t.bin"));
    let t = cmd_reconstruct(&cfg).unwrap();
    let back = AttentionTrace::load(dir.path().join("t.bin")).unwrap();
    assert_eq!(back.checksum(), t.checksum());
    assert_eq!(back.map_count(), 4 * 2 * 2);
}

#[test]
fn analyze_reports_both_selections() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config();
    let report = cmd_analyze(&cfg, dir.path()).unwrap();
    assert_eq!(report.rows.len(), 4 * 2 * 2);
    let csv = std::fs::read_to_string(dir.path().join("analysis.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 16);
    assert!(csv.starts_with("step,layer,selection,core_tokens,mask_coverage,attention_shift\n"));
    for r in &report.rows {
        assert_eq!(r.indices.len(), 8);
        let s = r.attention_shift.unwrap();
        assert!((0.0..=1.0).contains(&s));
    }
    // The first layer has nothing to average with.
    let first: Vec<_> = report.rows.iter().filter(|r| r.layer == 0).collect();
    for pair in first.chunks(2) {
        assert_eq!(pair[0].indices, pair[1].indices);
    }
    for f in &report.files {
        assert!(f.exists(), "{}", f.display());
    }
    assert!(dir.path().join("averaged_s4_l1.pgm").exists());
}

#[test]
fn sweep_grid_shapes_and_failures() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    in_dir(&mut cfg, dir.path());
    cfg.sweep.ratios = vec![0.25];
    cfg.sweep.steps = vec![3];
    let one = cmd_sweep(&cfg).unwrap();
    assert_eq!(one.table.rows(), 1);
    assert_eq!(one.exit_code(), 0);
    let csv = std::fs::read_to_string(&cfg.io.report).unwrap();
    assert_eq!(csv.lines().count(), 2);

    cfg.sweep.steps = vec![3, 12];
    let partial = cmd_sweep(&cfg).unwrap();
    assert_eq!(partial.exit_code(), 4);
    assert_eq!(partial.failures.len(), 1);
    assert_eq!(partial.table.missing_cells(), 2);
    assert!(std::fs::read_to_string(&cfg.io.report).unwrap().contains("0.25,12,NA,NA\n"));

    cfg.sweep.steps = vec![12];
    let err = cmd_sweep(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 2);

    cfg.sweep.steps = vec![3, 3];
    assert!(matches!(cmd_sweep(&cfg), Err(Error::DuplicateCell { .. })));
}
