//! Rectified-flow building blocks: re-noising, guidance and Euler steps.

use anyhow::Result;
use logodiffuser::flowsampler::{cfg_combine, euler_step, noise_to, sample_noise, SamplerConfig};
use ndarray::Array2;

fn main() -> Result<()> {
    let cfg = SamplerConfig::default();
    println!("schedule head {:?}", &cfg.schedule()[..4]);

    let x0 = Array2::from_elem((2, 3), 0.25);
    let eps = sample_noise(cfg.noise_seed, 2, 3);
    println!("x_1 == eps: {}", noise_to(x0.view(), 1.0, eps.view())? == eps);

    let v = Array2::from_elem((2, 3), -0.5);
    let mut x = eps.clone();
    let ts = cfg.schedule();
    for w in ts.windows(2) {
        x = euler_step(x.view(), v.view(), w[0], w[1])?;
    }
    let err = (&x - &(&eps + 0.5)).mapv(f64::abs).fold(0.0f64, |a, &b| a.max(b));
    println!("constant velocity endpoint error {err:.2e}");

    let vc = Array2::from_elem((1, 2), 1.0);
    let vu = Array2::from_elem((1, 2), 0.0);
    println!("guided at 7.5: {:?}", cfg_combine(vc.view(), vu.view(), 7.5)?.row(0).to_vec());
    Ok(())
}
