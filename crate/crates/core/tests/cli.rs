use std::process::Command;

const SMALL: [&str; 10] = [
    "--set",
    "model.grid=8",
    "--set",
    "model.d_model=32",
    "--set",
    "model.n_heads=2",
    "--set",
    "model.n_layers=2",
    "--set",
    "io.text=AB",
];

fn run(dir: &std::path::Path, args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_logodiffuser"))
        .current_dir(dir)
        .args(args)
        .args(SMALL)
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(run(d, &["generate", "--steps", "6", "--cutoff", "2"]).0, 0);
    assert!(d.join("output.pgm").exists() && d.join("manifest.json").exists());
    assert_eq!(run(d, &["generate", "--steps", "6", "--cutoff", "7"]).0, 2);
    assert_eq!(run(d, &["generate", "--set", "model.colour=red"]).0, 2);
    let (code, csv) = run(d, &["sweep", "--steps", "6", "--set", "sweep.steps=2,9", "--set", "sweep.ratios=0.5"]);
    assert_eq!(code, 4);
    assert!(csv.starts_with("ratio,step,attention_shift,mask_coverage\n0.5,2,0."));
    assert!(csv.ends_with("0.5,9,NA,NA\n"));
    assert_eq!(run(d, &["sweep", "--steps", "6", "--set", "sweep.steps=9"]).0, 2);
}

#[test]
fn flags_reach_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = [
        "generate", "--steps", "5", "--guidance", "3", "--ratio", "0.25", "--cutoff", "2", "--mode", "row-max",
        "--no-averaging", "--seed-weights", "4", "--seed-noise", "9",
    ];
    assert_eq!(run(d, &args).0, 0);
    let m = logodiffuser::manifest::RunManifest::read(d.join("manifest.json")).unwrap();
    let c = &m.config;
    assert_eq!(c["sampler.steps"], "5");
    assert_eq!(c["sampler.guidance"], "3");
    assert_eq!(c["injection.ratio"], "0.25");
    assert_eq!(c["sampler.cutoff"], "2");
    assert_eq!(c["injection.mode"], "row-max");
    assert_eq!(c["injection.averaging"], "false");
    assert_eq!(c["model.seed"], "4");
    assert_eq!(c["sampler.seed"], "9");
    assert_eq!(m.injections, 4);
}

#[test]
fn heatmap_export_from_text_values() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("v.txt"), "0 0.5 1 0.25").unwrap();
    let (code, _) = run(d, &["export-heatmap", "--input", "v.txt", "--side", "2", "--out", "h.pgm"]);
    assert_eq!(code, 0);
    assert_eq!(std::fs::read_to_string(d.join("h.pgm")).unwrap(), "P2\n2 2\n255\n0 128\n255 64\n");
    assert_eq!(run(d, &["export-heatmap", "--input", "v.txt", "--side", "3", "--out", "h.pgm"]).0, 2);
}
