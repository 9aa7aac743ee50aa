use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

fn same_shape(a: &ArrayView2<f64>, b: &ArrayView2<f64>, what: &str) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch(format!("{what}: {:?} vs {:?}", a.dim(), b.dim())));
    }
    Ok(())
}

/// Straight-line interpolation `(1 - t)·x0 + t·eps`.
pub fn noise_to(x0: ArrayView2<f64>, t: f64, eps: ArrayView2<f64>) -> Result<Array2<f64>> {
    same_shape(&x0, &eps, "noise_to")?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidConfig(format!("flow time {t} outside [0,1]")));
    }
    let mut out = x0.to_owned();
    out.zip_mut_with(&eps, |x, &e| *x = (1.0 - t) * *x + t * e);
    Ok(out)
}

/// Classifier-free guidance `v_uncond + s·(v_cond - v_uncond)`, evaluated as
/// `(1-s)·v_uncond + s·v_cond` so that `s = 0` and `s = 1` return a branch
/// bit for bit.
pub fn cfg_combine(v_cond: ArrayView2<f64>, v_uncond: ArrayView2<f64>, guidance: f64) -> Result<Array2<f64>> {
    same_shape(&v_cond, &v_uncond, "cfg_combine")?;
    let mut out = v_uncond.to_owned();
    out.zip_mut_with(&v_cond, |u, &c| *u = (1.0 - guidance) * *u + guidance * c);
    Ok(out)
}

/// Explicit Euler step of `dx/dt = v` from `t` to `t_next < t`.
pub fn euler_step(x: ArrayView2<f64>, v: ArrayView2<f64>, t: f64, t_next: f64) -> Result<Array2<f64>> {
    same_shape(&x, &v, "euler_step")?;
    if t_next.partial_cmp(&t) != Some(std::cmp::Ordering::Less) {
        return Err(Error::InvalidConfig(format!("euler step must decrease time: {t} -> {t_next}")));
    }
    let dt = t_next - t;
    let mut out = x.to_owned();
    out.zip_mut_with(&v, |x, &v| *x += dt * v);
    Ok(out)
}

/// Standard-normal tensor drawn row-major from ChaCha8 seeded with `seed`.
pub fn sample_noise(seed: u64, rows: usize, cols: usize) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| StandardNormal.sample(&mut rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn noise_to_endpoints_and_midpoint() {
        let x0 = array![[0.3, -1.2], [4.0, 0.0]];
        let eps = array![[1.5, 2.0], [-0.7, 9.0]];
        assert_eq!(noise_to(x0.view(), 0.0, eps.view()).unwrap(), x0);
        assert_eq!(noise_to(x0.view(), 1.0, eps.view()).unwrap(), eps);
        let z = Array2::zeros((1, 1));
        let two = Array2::from_elem((1, 1), 2.0);
        assert_eq!(noise_to(z.view(), 0.5, two.view()).unwrap()[[0, 0]], 1.0);
        assert!(noise_to(x0.view(), 1.5, eps.view()).is_err());
    }

    #[test]
    fn cfg_combine_branches() {
        let c = array![[1.0, -2.5]];
        let u = array![[0.25, 3.0]];
        assert_eq!(cfg_combine(c.view(), u.view(), 1.0).unwrap(), c);
        assert_eq!(cfg_combine(c.view(), u.view(), 0.0).unwrap(), u);
        let one = array![[1.0]];
        let zero = array![[0.0]];
        assert_eq!(cfg_combine(one.view(), zero.view(), 7.5).unwrap()[[0, 0]], 7.5);
        assert!(cfg_combine(c.view(), one.view(), 1.0).is_err());
        let c = sample_noise(1, 8, 8);
        let u = sample_noise(2, 8, 8);
        assert_eq!(cfg_combine(c.view(), u.view(), 1.0).unwrap(), c);
        assert_eq!(cfg_combine(c.view(), u.view(), 0.0).unwrap(), u);
    }

    #[test]
    fn euler_step_examples() {
        let x = array![[3.0, -1.0]];
        let zero = Array2::zeros((1, 2));
        assert_eq!(euler_step(x.view(), zero.view(), 0.5, 0.25).unwrap(), x);
        let v = Array2::from_elem((1, 2), 28.0);
        let next = euler_step(x.view(), v.view(), 1.0, 1.0 - 1.0 / 28.0).unwrap();
        for (a, b) in next.iter().zip(x.iter()) {
            assert!((a - (b - 1.0)).abs() < 1e-12);
        }
        assert!(euler_step(x.view(), zero.view(), 0.25, 0.5).is_err());
    }

    #[test]
    fn noise_is_seeded() {
        assert_eq!(sample_noise(9, 3, 4), sample_noise(9, 3, 4));
        assert_ne!(sample_noise(9, 3, 4), sample_noise(10, 3, 4));
    }
}
