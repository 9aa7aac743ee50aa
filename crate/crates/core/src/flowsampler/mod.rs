//! Rectified-flow Euler sampling with classifier-free guidance, glyph
//! reconstruction capture, and generation with core-token injection.

mod config;
mod ops;
mod trace;

use ndarray::Array2;

pub use config::SamplerConfig;
pub use ops::{cfg_combine, euler_step, noise_to, sample_noise};
pub use trace::AttentionTrace;

use crate::coreattn::{inject_rows, InjectionPlan};
use crate::error::{Error, Result};
use crate::glyphkit::GlyphImage;
use crate::manifest::{RunManifest, StepLog};
use crate::tensorfile::FloatHasher;
use crate::tinymmdit::{patchify, unpatchify, AttentionHook, CaptureFlags, HookSite, JointAttention, ModelWeights, TokenSequence};

/// Guidance branch a forward pass belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Conditional,
    Unconditional,
}

/// Callback fed every head's attention during generation.
pub type GenerationObserver<'a> = dyn FnMut(Branch, HookSite, &JointAttention) + 'a;

/// Identifies the inputs a reconstruction trace was produced from.
pub fn reconstruction_hash(weights: &ModelWeights, glyph: &GlyphImage, recon_prompt: &str, cfg: &SamplerConfig) -> String {
    let mut h = FloatHasher::new();
    h.str(&weights.checksum())
        .str(&glyph.checksum())
        .str(recon_prompt)
        .str(&format!("steps={} cutoff={} seed={}", cfg.steps, cfg.cutoff_step, cfg.noise_seed));
    h.finish()
}

/// Captures I2I attention while reconstructing the glyph.
///
/// Every step `i <= cutoff_step` re-noises the clean glyph to `t_i` with one
/// fixed noise draw and runs the model once with `recon_prompt`; no sampling
/// trajectory is integrated.
pub fn reconstruct_capture(
    weights: &ModelWeights,
    glyph: &GlyphImage,
    recon_prompt: &str,
    cfg: &SamplerConfig,
) -> Result<AttentionTrace> {
    cfg.validate()?;
    let mcfg = &weights.cfg;
    let x0 = patchify(glyph, mcfg)?;
    let eps = sample_noise(cfg.noise_seed, mcfg.n_img(), mcfg.patch_dim());
    let text = weights.embed_prompt(recon_prompt);
    let mut trace = AttentionTrace::new(
        mcfg.n_layers,
        mcfg.n_heads,
        mcfg.n_img(),
        reconstruction_hash(weights, glyph, recon_prompt, cfg),
    );
    for step in 1..=cfg.cutoff_step {
        let t = cfg.t_at(step);
        let x_t = noise_to(x0.view(), t, eps.view())?;
        let tokens = TokenSequence::new(text.clone(), weights.embed_image(x_t.view())?, mcfg)?;
        let mut hook = AttentionHook::capture(CaptureFlags::all_i2i(mcfg)).at_step(step);
        let out = weights.forward(&tokens, t, &mut hook)?;
        let maps = out
            .captured
            .heads
            .iter()
            .map(|c| {
                (
                    c.i2i_logits.as_ref().expect("logits captured").view(),
                    c.i2i_probabilities.as_ref().expect("probabilities captured").view(),
                )
            })
            .collect();
        trace.push_step(t, maps)?;
    }
    trace.seal();
    Ok(trace)
}

/// Reconstruction trace plus the plan selecting which of its rows to inject.
#[derive(Debug, Clone, Copy)]
pub struct Injection<'a> {
    pub trace: &'a AttentionTrace,
    pub plan: &'a InjectionPlan,
}

impl Injection<'_> {
    fn check(&self, weights: &ModelWeights, cfg: &SamplerConfig) -> Result<()> {
        let (trace, plan) = (self.trace, self.plan);
        if plan.trace_checksum != trace.checksum() {
            return Err(Error::TraceMismatch("plan was built from a different trace".into()));
        }
        let m = &weights.cfg;
        if trace.n_layers() != m.n_layers || trace.n_heads() != m.n_heads || trace.n_img() != m.n_img() {
            return Err(Error::TraceMismatch("trace dimensions do not match the model".into()));
        }
        if plan.cutoff_step() != cfg.cutoff_step {
            return Err(Error::TraceMismatch(format!(
                "plan cutoff {} differs from sampler cutoff {}",
                plan.cutoff_step(),
                cfg.cutoff_step
            )));
        }
        if trace.steps() < cfg.cutoff_step {
            return Err(Error::TraceMismatch(format!(
                "trace holds {} steps, injection needs {}",
                trace.steps(),
                cfg.cutoff_step
            )));
        }
        for step in 1..=cfg.cutoff_step {
            if trace.t_values()[step - 1] != cfg.t_at(step) {
                return Err(Error::TraceMismatch(format!("trace schedule differs at step {step}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Generation {
    /// Final latent un-patchified and clamped to `[0,1]`.
    pub image: GlyphImage,
    pub latent: Array2<f64>,
    pub manifest: RunManifest,
}

/// Euler sampling from pure noise with classifier-free guidance.
///
/// The empty prompt is the unconditional branch. When `injection` is given,
/// every forward pass at steps `1..=cutoff_step`, in both branches, has the
/// plan's core-token rows of its I2I logits replaced by the trace's rows for
/// the same (step, layer, head). Later steps run unhooked.
pub fn generate(
    weights: &ModelWeights,
    prompt: &str,
    injection: Option<Injection<'_>>,
    cfg: &SamplerConfig,
    mut observer: Option<&mut GenerationObserver<'_>>,
) -> Result<Generation> {
    cfg.validate()?;
    if let Some(inj) = &injection {
        inj.check(weights, cfg)?;
    }
    let mcfg = &weights.cfg;
    let schedule = cfg.schedule();
    let text_cond = weights.embed_prompt(prompt);
    let text_uncond = weights.embed_prompt("");
    let mut x = sample_noise(cfg.noise_seed, mcfg.n_img(), mcfg.patch_dim());
    let mut manifest = RunManifest::new();

    for step in 1..=cfg.steps {
        let (t, t_next) = (schedule[step - 1], schedule[step]);
        let image = weights.embed_image(x.view())?;
        let active = injection.filter(|_| step <= cfg.cutoff_step);
        let mut velocity = |branch: Branch, text: &Array2<f32>| -> Result<Array2<f64>> {
            let tokens = TokenSequence::new(text.clone(), image.clone(), mcfg)?;
            let mut hook = AttentionHook::none().at_step(step);
            if let Some(inj) = active {
                hook = hook.with_override(move |site, i2i| {
                    if let Some(set) = inj.plan.set(site.step, site.layer).filter(|s| !s.is_empty()) {
                        inject_rows(i2i, inj.trace.logits(site.step, site.layer, site.head), &set.indices)
                            .expect("plan indices validated against trace");
                    }
                });
            }
            if let Some(obs) = observer.as_deref_mut() {
                hook = hook.with_observer(move |site, attn| obs(branch, site, attn));
            }
            Ok(weights.forward(&tokens, t, &mut hook)?.velocity)
        };
        let v_cond = velocity(Branch::Conditional, &text_cond)?;
        let v_uncond = velocity(Branch::Unconditional, &text_uncond)?;
        let v = cfg_combine(v_cond.view(), v_uncond.view(), cfg.guidance)?;
        x = euler_step(x.view(), v.view(), t, t_next)?;

        let injected_layers = active
            .map(|inj| (0..mcfg.n_layers).filter(|&l| inj.plan.set(step, l).is_some_and(|s| !s.is_empty())).count())
            .unwrap_or(0);
        manifest.injections += injected_layers;
        manifest.steps.push(StepLog {
            step,
            t,
            injected_layers,
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteActivation("final latent".into()));
    }
    manifest.model_evaluations = cfg.steps;
    let side = mcfg.image_side();
    let pixels = unpatchify(x.view(), mcfg)?.into_iter().map(|p| p.clamp(0.0, 1.0)).collect();
    let mut image = GlyphImage::from_pixels(side, side, pixels)?;
    image.text = prompt.to_string();
    manifest.output_checksum = image.checksum();
    Ok(Generation {
        image,
        latent: x,
        manifest,
    })
}

/// Generation guided by core-token injection from `trace`.
pub fn generate_with_injection(
    weights: &ModelWeights,
    prompt: &str,
    trace: &AttentionTrace,
    plan: &InjectionPlan,
    cfg: &SamplerConfig,
) -> Result<(GlyphImage, RunManifest)> {
    let g = generate(weights, prompt, Some(Injection { trace, plan }), cfg, None)?;
    Ok((g.image, g.manifest))
}
