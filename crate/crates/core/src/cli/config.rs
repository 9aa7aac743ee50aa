//! Flat `key = value` run configuration.
//!
//! Keys are grouped as `model.*`, `sampler.*`, `injection.*`, `io.*` and
//! `sweep.*`. Blank lines and lines starting with `#` are ignored; unknown
//! or repeated keys are errors. Every key is optional.
//!
//! | key | default |
//! |---|---|
//! | `model.d_model`, `model.n_heads`, `model.n_layers` | 64, 4, 6 |
//! | `model.patch`, `model.grid`, `model.t_txt` | 8, 16, 16 |
//! | `model.seed` (weights seed) | 0 |
//! | `sampler.steps`, `sampler.guidance`, `sampler.cutoff` | 28, 7.5, 12 |
//! | `sampler.seed` (noise seed) | 0 |
//! | `injection.enabled`, `injection.ratio` | true, 0.125 |
//! | `injection.mode` (`row-mass`, `row-max`, `column-mass`, `layer-variance`) | row-mass |
//! | `injection.averaging` | true |
//! | `io.text`, `io.style` | `LOGO`, `golden neon lights` |
//! | `io.prompt` (overrides the text/style template) | unset |
//! | `io.recon_prompt` | empty |
//! | `io.glyph` (PBM/PGM used instead of rasterizing `io.text`) | unset |
//! | `io.layout`, `io.scale` | horizontal, 2 |
//! | `io.predicted` (caller-supplied recognized text) | unset |
//! | `io.output`, `io.manifest`, `io.report` | `output.pgm`, `manifest.json`, `sweep.csv` |
//! | `io.trace` (attention trace dump) | unset |
//! | `sweep.ratios`, `sweep.steps` | `0.125,0.25,0.5,0.75,1`, `8,10,12,15,18` |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::coreattn::{InjectionConfig, ScoreMode};
use crate::error::{Error, Result};
use crate::flowsampler::SamplerConfig;
use crate::glyphkit::Layout;
use crate::tensorfile::FloatHasher;
use crate::tinymmdit::ModelConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct InjectionSettings {
    pub enabled: bool,
    pub ratio: f64,
    pub mode: ScoreMode,
    pub averaging: bool,
}

impl Default for InjectionSettings {
    fn default() -> Self {
        let d = InjectionConfig::default();
        Self {
            enabled: true,
            ratio: d.ratio,
            mode: d.mode,
            averaging: d.averaging,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IoSettings {
    pub text: String,
    pub style: String,
    pub prompt: Option<String>,
    pub recon_prompt: String,
    pub glyph: Option<PathBuf>,
    pub layout: Layout,
    pub scale: usize,
    pub predicted: Option<String>,
    pub output: PathBuf,
    pub manifest: PathBuf,
    pub report: PathBuf,
    pub trace: Option<PathBuf>,
}

impl Default for IoSettings {
    fn default() -> Self {
        Self {
            text: "LOGO".into(),
            style: "golden neon lights".into(),
            prompt: None,
            recon_prompt: String::new(),
            glyph: None,
            layout: Layout::Horizontal,
            scale: 2,
            predicted: None,
            output: "output.pgm".into(),
            manifest: "manifest.json".into(),
            report: "sweep.csv".into(),
            trace: None,
        }
    }
}

/// Top-k ratio x cutoff-step grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub ratios: Vec<f64>,
    pub steps: Vec<usize>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            ratios: vec![0.125, 0.25, 0.5, 0.75, 1.0],
            steps: vec![8, 10, 12, 15, 18],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub sampler: SamplerConfig,
    pub injection: InjectionSettings,
    pub io: IoSettings,
    pub sweep: SweepGrid,
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse {raw:?}")))
}

fn parse_list<T: FromStr>(key: &str, raw: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if seen.insert(key.to_string(), ()).is_some() {
                return Err(Error::InvalidConfig(format!("line {}: repeated key {key}", lineno + 1)));
            }
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let opt = |v: &str| (!v.is_empty()).then(|| v.to_string());
        match key {
            "model.d_model" => self.model.d_model = parse_value(key, v)?,
            "model.n_heads" => self.model.n_heads = parse_value(key, v)?,
            "model.n_layers" => self.model.n_layers = parse_value(key, v)?,
            "model.patch" => self.model.patch = parse_value(key, v)?,
            "model.grid" => self.model.grid = parse_value(key, v)?,
            "model.t_txt" => self.model.t_txt = parse_value(key, v)?,
            "model.seed" => self.model.seed = parse_value(key, v)?,
            "sampler.steps" => self.sampler.steps = parse_value(key, v)?,
            "sampler.guidance" => self.sampler.guidance = parse_value(key, v)?,
            "sampler.cutoff" => self.sampler.cutoff_step = parse_value(key, v)?,
            "sampler.seed" => self.sampler.noise_seed = parse_value(key, v)?,
            "injection.enabled" => self.injection.enabled = parse_value(key, v)?,
            "injection.ratio" => self.injection.ratio = parse_value(key, v)?,
            "injection.mode" => self.injection.mode = v.parse()?,
            "injection.averaging" => self.injection.averaging = parse_value(key, v)?,
            "io.text" => self.io.text = v.to_string(),
            "io.style" => self.io.style = v.to_string(),
            "io.prompt" => self.io.prompt = opt(v),
            "io.recon_prompt" => self.io.recon_prompt = v.to_string(),
            "io.glyph" => self.io.glyph = opt(v).map(PathBuf::from),
            "io.layout" => self.io.layout = v.parse()?,
            "io.scale" => self.io.scale = parse_value(key, v)?,
            "io.predicted" => self.io.predicted = opt(v),
            "io.output" => self.io.output = v.into(),
            "io.manifest" => self.io.manifest = v.into(),
            "io.report" => self.io.report = v.into(),
            "io.trace" => self.io.trace = opt(v).map(PathBuf::from),
            "sweep.ratios" => self.sweep.ratios = parse_list(key, v)?,
            "sweep.steps" => self.sweep.steps = parse_list(key, v)?,
            other => return Err(Error::InvalidConfig(format!("unknown key {other}"))),
        }
        Ok(())
    }

    /// Every key in canonical order with its textual value.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let (m, s, i, io) = (&self.model, &self.sampler, &self.injection, &self.io);
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        vec![
            ("model.d_model", m.d_model.to_string()),
            ("model.n_heads", m.n_heads.to_string()),
            ("model.n_layers", m.n_layers.to_string()),
            ("model.patch", m.patch.to_string()),
            ("model.grid", m.grid.to_string()),
            ("model.t_txt", m.t_txt.to_string()),
            ("model.seed", m.seed.to_string()),
            ("sampler.steps", s.steps.to_string()),
            ("sampler.guidance", s.guidance.to_string()),
            ("sampler.cutoff", s.cutoff_step.to_string()),
            ("sampler.seed", s.noise_seed.to_string()),
            ("injection.enabled", i.enabled.to_string()),
            ("injection.ratio", i.ratio.to_string()),
            ("injection.mode", i.mode.to_string()),
            ("injection.averaging", i.averaging.to_string()),
            ("io.text", io.text.clone()),
            ("io.style", io.style.clone()),
            ("io.prompt", io.prompt.clone().unwrap_or_default()),
            ("io.recon_prompt", io.recon_prompt.clone()),
            ("io.glyph", path(&io.glyph)),
            ("io.layout", io.layout.to_string()),
            ("io.scale", io.scale.to_string()),
            ("io.predicted", io.predicted.clone().unwrap_or_default()),
            ("io.output", io.output.display().to_string()),
            ("io.manifest", io.manifest.display().to_string()),
            ("io.report", io.report.display().to_string()),
            ("io.trace", path(&io.trace)),
            ("sweep.ratios", join(&self.sweep.ratios)),
            ("sweep.steps", join(&self.sweep.steps)),
        ]
    }

    pub fn serialize(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| if v.is_empty() { format!("{k} =\n") } else { format!("{k} = {v}\n") })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.sampler.validate()?;
        let r = self.injection.ratio;
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::InvalidConfig(format!("injection.ratio {r} outside [0, 1]")));
        }
        if self.io.scale == 0 {
            return Err(Error::InvalidConfig("io.scale must be at least 1".into()));
        }
        Ok(())
    }

    /// Design prompt: `io.prompt` if set, else the text/style template.
    pub fn prompt(&self) -> Result<String> {
        match &self.io.prompt {
            Some(p) => Ok(p.clone()),
            None => Ok(super::build_prompt(&self.io.text, &self.io.style)?.rendered),
        }
    }

    /// Injection config, or `None` when injection is disabled.
    pub fn injection_config(&self) -> Option<InjectionConfig> {
        self.injection.enabled.then_some(InjectionConfig {
            ratio: self.injection.ratio,
            cutoff_step: self.sampler.cutoff_step,
            mode: self.injection.mode,
            averaging: self.injection.averaging,
        })
    }

    /// SHA-256 over every setting that can change output bytes plus the
    /// checksum of the glyph actually used. Output locations are excluded.
    pub fn config_hash(&self, glyph_checksum: &str) -> String {
        const PATH_KEYS: [&str; 5] = ["io.output", "io.manifest", "io.report", "io.trace", "io.glyph"];
        let mut h = FloatHasher::new();
        for (k, v) in self.entries() {
            if !PATH_KEYS.contains(&k) && !k.starts_with("sweep.") {
                h.str(k).str(&v);
            }
        }
        h.str("glyph").str(glyph_checksum);
        h.finish()
    }
}

/// Command-line overrides for configuration keys.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub steps: Option<usize>,
    pub guidance: Option<f64>,
    pub ratio: Option<f64>,
    pub cutoff: Option<usize>,
    pub mode: Option<ScoreMode>,
    pub no_averaging: bool,
    pub no_injection: bool,
    pub seed_weights: Option<u64>,
    pub seed_noise: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(v) = self.steps {
            cfg.sampler.steps = v;
        }
        if let Some(v) = self.guidance {
            cfg.sampler.guidance = v;
        }
        if let Some(v) = self.ratio {
            cfg.injection.ratio = v;
        }
        if let Some(v) = self.cutoff {
            cfg.sampler.cutoff_step = v;
        }
        if let Some(v) = self.mode {
            cfg.injection.mode = v;
        }
        if self.no_averaging {
            cfg.injection.averaging = false;
        }
        if self.no_injection {
            cfg.injection.enabled = false;
        }
        if let Some(v) = self.seed_weights {
            cfg.model.seed = v;
        }
        if let Some(v) = self.seed_noise {
            cfg.sampler.noise_seed = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_follow_reported_settings() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c.sampler.steps, 28);
        assert_eq!(c.sampler.guidance, 7.5);
        assert_eq!(c.sampler.cutoff_step, 12);
        assert_eq!(c.injection.ratio, 0.125);
        assert!(c.injection.averaging);
        assert_eq!(c.sweep, SweepGrid::default());
    }

    #[test]
    fn parses_comments_and_values() {
        let c = RunConfig::parse(
            "# demo\nmodel.grid = 8\n\nsampler.guidance=3.25\ninjection.mode = column-mass\nio.prompt = A red logo\nsweep.steps = 4, 6\n",
        )
        .unwrap();
        assert_eq!(c.model.grid, 8);
        assert_eq!(c.sampler.guidance, 3.25);
        assert_eq!(c.injection.mode, ScoreMode::ColumnMass);
        assert_eq!(c.prompt().unwrap(), "A red logo");
        assert_eq!(c.sweep.steps, vec![4, 6]);
    }

    #[test]
    fn bad_configs() {
        for text in [
            "nonsense",
            "model.colour = 3",
            "model.grid = x",
            "model.grid = 4\nmodel.grid = 8",
            "sampler.cutoff = 40",
            "injection.ratio = 1.5",
            "model.d_model = 65",
            "io.layout = spiral",
        ] {
            let parsed = RunConfig::parse(text).and_then(|c| c.validate());
            assert!(matches!(parsed, Err(Error::InvalidConfig(_))), "{text}");
        }
    }

    #[test]
    fn template_prompt() {
        let c = RunConfig::default();
        assert_eq!(c.prompt().unwrap(), "A text LOGO logo decorated with golden neon lights.");
    }

    #[test]
    fn overrides_apply() {
        let mut c = RunConfig::default();
        Overrides {
            steps: Some(10),
            cutoff: Some(3),
            ratio: Some(0.0),
            no_averaging: true,
            seed_noise: Some(9),
            ..Default::default()
        }
        .apply(&mut c);
        assert_eq!((c.sampler.steps, c.sampler.cutoff_step, c.sampler.noise_seed), (10, 3, 9));
        assert!(!c.injection.averaging);
        let bad = Overrides {
            cutoff: Some(11),
            ..Default::default()
        };
        bad.apply(&mut c);
        assert!(c.validate().is_err());
    }

    #[test]
    fn hash_covers_every_output_affecting_key() {
        let base = RunConfig::default();
        let h0 = base.config_hash("g");
        let mutations: &[(&str, &str)] = &[
            ("model.d_model", "32"),
            ("model.n_heads", "2"),
            ("model.n_layers", "3"),
            ("model.patch", "4"),
            ("model.grid", "8"),
            ("model.t_txt", "8"),
            ("model.seed", "1"),
            ("sampler.steps", "20"),
            ("sampler.guidance", "5"),
            ("sampler.cutoff", "10"),
            ("sampler.seed", "1"),
            ("injection.enabled", "false"),
            ("injection.ratio", "0.25"),
            ("injection.mode", "row-max"),
            ("injection.averaging", "false"),
            ("io.text", "STAR"),
            ("io.style", "ice"),
            ("io.prompt", "custom"),
            ("io.recon_prompt", "glyph"),
            ("io.layout", "vertical"),
            ("io.scale", "1"),
            ("io.predicted", "LOGO"),
        ];
        for (k, v) in mutations {
            let mut c = base.clone();
            c.set(k, v).unwrap();
            assert_ne!(c.config_hash("g"), h0, "{k}");
        }
        assert_ne!(base.config_hash("other glyph"), h0);
        let mut c = base.clone();
        c.set("io.output", "elsewhere.pgm").unwrap();
        c.set("io.trace", "t.bin").unwrap();
        assert_eq!(c.config_hash("g"), h0);
    }

    fn text_value() -> impl Strategy<Value = String> {
        "[A-Za-z0-9][A-Za-z0-9 ._-]{0,12}[A-Za-z0-9]|"
    }

    proptest! {
        #[test]
        fn serialize_round_trips(
            d_heads in 1usize..4,
            grid in 1usize..20,
            seed in any::<u64>(),
            steps in 1usize..50,
            cut in 0usize..50,
            guidance in 0.0f64..20.0,
            ratio in 0.0f64..=1.0,
            averaging in any::<bool>(),
            text in text_value(),
            prompt in proptest::option::of("[a-z][a-z ]{0,10}[a-z]"),
            ratios in proptest::collection::vec(0.01f64..1.0, 0..4),
        ) {
            let mut c = RunConfig::default();
            c.model.n_heads = d_heads;
            c.model.d_model = 4 * d_heads * 3;
            c.model.grid = grid;
            c.model.seed = seed;
            c.sampler.steps = steps;
            c.sampler.cutoff_step = cut.min(steps);
            c.sampler.guidance = guidance;
            c.injection.ratio = ratio;
            c.injection.averaging = averaging;
            c.io.text = text;
            c.io.prompt = prompt;
            c.sweep.ratios = ratios;
            c.validate().unwrap();
            let back = RunConfig::parse(&c.serialize()).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
