//! Exact fractional Brownian motion on the integer slot grid.
//!
//! The path satisfies `f[0] = 0` and
//! `Cov(f[s], f[t]) = (s^2H + t^2H - |t - s|^2H) / 2`.
//! Increments (fractional Gaussian noise) are drawn by circulant embedding
//! (Davies-Harte); if the embedding has a negative eigenvalue the generator
//! switches to the Durbin-Levinson recursion (Hosking), which is exact but
//! quadratic in the horizon.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Largest path length accepted by [`FbmGenerator::new`].
pub const DEFAULT_MAX_SLOTS: usize = 1 << 22;

/// Relative size of a negative eigenvalue that is treated as round-off.
const EIGEN_ROUNDOFF: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbmMethod {
    DaviesHarte,
    Hosking,
}

/// Autocovariance of unit fractional Gaussian noise at lag `k`.
pub fn fgn_autocovariance(hurst: f64, k: usize) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

/// Exact covariance of fBm at integer times `s` and `t`.
pub fn fbm_covariance(hurst: f64, s: usize, t: usize) -> f64 {
    let h2 = 2.0 * hurst;
    let (s, t) = (s as f64, t as f64);
    0.5 * (s.powf(h2) + t.powf(h2) - (t - s).abs().powf(h2))
}

enum Engine {
    /// Nothing to draw: the path is the single point `f[0] = 0`.
    Trivial,
    Circulant {
        /// `sqrt(lambda_k / M)` for each circulant eigenvalue.
        scale: Vec<f64>,
        half: usize,
        fft: Arc<dyn Fft<f64>>,
    },
    Hosking {
        autocov: Vec<f64>,
    },
}

/// Reusable sampler for fBm paths of a fixed length and Hurst exponent.
///
/// Construction does the expensive part (eigen-decomposition of the
/// circulant embedding); [`sample`](Self::sample) is `O(n log n)`.
pub struct FbmGenerator {
    hurst: f64,
    len: usize,
    engine: Engine,
}

impl std::fmt::Debug for FbmGenerator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FbmGenerator")
            .field("hurst", &self.hurst)
            .field("len", &self.len)
            .field("method", &self.method())
            .finish()
    }
}

impl FbmGenerator {
    /// Generator for paths `f[0..len]`, circulant embedding first.
    pub fn new(hurst: f64, len: usize) -> Result<Self> {
        Self::with_limit(hurst, len, DEFAULT_MAX_SLOTS)
    }

    pub fn with_limit(hurst: f64, len: usize, max_slots: usize) -> Result<Self> {
        validate(hurst, len, max_slots)?;
        let increments = len - 1;
        if increments == 0 {
            return Ok(Self { hurst, len, engine: Engine::Trivial });
        }
        let engine = match circulant(hurst, increments) {
            Some(engine) => engine,
            None => hosking(hurst, increments),
        };
        Ok(Self { hurst, len, engine })
    }

    /// Generator forced onto one method (used to cross-check the two).
    pub fn with_method(hurst: f64, len: usize, method: FbmMethod) -> Result<Self> {
        validate(hurst, len, DEFAULT_MAX_SLOTS)?;
        let increments = len - 1;
        if increments == 0 {
            return Ok(Self { hurst, len, engine: Engine::Trivial });
        }
        let engine = match method {
            FbmMethod::DaviesHarte => circulant(hurst, increments)
                .ok_or_else(|| Error::invalid("hurst", "circulant embedding is not nonnegative definite"))?,
            FbmMethod::Hosking => hosking(hurst, increments),
        };
        Ok(Self { hurst, len, engine })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn method(&self) -> FbmMethod {
        match self.engine {
            Engine::Hosking { .. } => FbmMethod::Hosking,
            _ => FbmMethod::DaviesHarte,
        }
    }

    /// Draws one path of length `len` with `f[0] = 0`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut path = vec![0.0; self.len];
        self.sample_into(rng, &mut path);
        path
    }

    /// Writes one path into `path`, which must have length `len`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, path: &mut [f64]) {
        assert_eq!(path.len(), self.len, "path buffer has the wrong length");
        path[0] = 0.0;
        let increments = self.len - 1;
        match &self.engine {
            Engine::Trivial => {}
            Engine::Circulant { scale, half, fft } => {
                let m = 2 * half;
                let mut w = vec![Complex::new(0.0, 0.0); m];
                w[0] = Complex::new(scale[0] * rng.sample::<f64, _>(StandardNormal), 0.0);
                w[*half] = Complex::new(scale[*half] * rng.sample::<f64, _>(StandardNormal), 0.0);
                for k in 1..*half {
                    let s = scale[k] * std::f64::consts::FRAC_1_SQRT_2;
                    let re = s * rng.sample::<f64, _>(StandardNormal);
                    let im = s * rng.sample::<f64, _>(StandardNormal);
                    w[k] = Complex::new(re, im);
                    w[m - k] = Complex::new(re, -im);
                }
                fft.process(&mut w);
                let mut acc = 0.0;
                for (slot, x) in path[1..].iter_mut().zip(&w[..increments]) {
                    acc += x.re;
                    *slot = acc;
                }
            }
            Engine::Hosking { autocov } => {
                let noise = hosking_sample(autocov, increments, rng);
                let mut acc = 0.0;
                for (slot, x) in path[1..].iter_mut().zip(noise) {
                    acc += x;
                    *slot = acc;
                }
            }
        }
    }
}

/// One fBm path `f[0..n]` from a seed.
pub fn generate_fbm(hurst: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    let generator = FbmGenerator::new(hurst, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(generator.sample(&mut rng))
}

fn validate(hurst: f64, len: usize, max_slots: usize) -> Result<()> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::invalid("hurst", format!("must lie in (0, 1), got {hurst}")));
    }
    if len == 0 {
        return Err(Error::invalid("horizon", "must be at least one slot"));
    }
    if len > max_slots {
        return Err(Error::HorizonTooLong { requested: len, limit: max_slots });
    }
    Ok(())
}

fn circulant(hurst: f64, increments: usize) -> Option<Engine> {
    let half = increments.next_power_of_two();
    let m = 2 * half;
    let mut row: Vec<Complex<f64>> = Vec::with_capacity(m);
    for k in 0..=half {
        row.push(Complex::new(fgn_autocovariance(hurst, k), 0.0));
    }
    for k in (1..half).rev() {
        row.push(Complex::new(fgn_autocovariance(hurst, k), 0.0));
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut row);

    let largest = row.iter().map(|c| c.re).fold(0.0_f64, f64::max);
    let mut scale = Vec::with_capacity(m);
    for eig in &row {
        let lambda = eig.re;
        if lambda < -EIGEN_ROUNDOFF * largest {
            return None;
        }
        scale.push((lambda.max(0.0) / m as f64).sqrt());
    }
    Some(Engine::Circulant { scale, half, fft })
}

fn hosking(hurst: f64, increments: usize) -> Engine {
    let autocov = (0..increments).map(|k| fgn_autocovariance(hurst, k)).collect();
    Engine::Hosking { autocov }
}

/// Durbin-Levinson recursion on the fGn autocovariance.
fn hosking_sample<R: Rng + ?Sized>(autocov: &[f64], n: usize, rng: &mut R) -> Vec<f64> {
    let mut x = Vec::with_capacity(n);
    let mut phi: Vec<f64> = Vec::with_capacity(n);
    let mut prev: Vec<f64> = Vec::with_capacity(n);
    let mut var = autocov[0];
    x.push(var.sqrt() * rng.sample::<f64, _>(StandardNormal));
    for k in 1..n {
        let mut num = autocov[k];
        for j in 1..k {
            num -= prev[j - 1] * autocov[k - j];
        }
        let reflection = num / var;
        phi.clear();
        for j in 1..k {
            phi.push(prev[j - 1] - reflection * prev[k - j - 1]);
        }
        phi.push(reflection);
        var *= 1.0 - reflection * reflection;
        let mean: f64 = phi.iter().enumerate().map(|(j, p)| p * x[k - 1 - j]).sum();
        x.push(mean + var.max(0.0).sqrt() * rng.sample::<f64, _>(StandardNormal));
        std::mem::swap(&mut phi, &mut prev);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paths(method: FbmMethod, hurst: f64, len: usize, count: usize) -> Vec<Vec<f64>> {
        let generator = FbmGenerator::with_method(hurst, len, method).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        (0..count).map(|_| generator.sample(&mut rng)).collect()
    }

    #[test]
    fn starts_at_origin() {
        for seed in 0..20 {
            let path = generate_fbm(0.3, 50, seed).unwrap();
            assert_eq!(path[0], 0.0);
        }
        assert_eq!(generate_fbm(0.7, 1, 3).unwrap(), vec![0.0]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(generate_fbm(0.0, 10, 1).is_err());
        assert!(generate_fbm(1.0, 10, 1).is_err());
        assert!(generate_fbm(0.5, 0, 1).is_err());
        assert!(matches!(
            FbmGenerator::with_limit(0.5, 1000, 100),
            Err(Error::HorizonTooLong { requested: 1000, limit: 100 })
        ));
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(generate_fbm(0.6, 300, 9).unwrap(), generate_fbm(0.6, 300, 9).unwrap());
        assert_ne!(generate_fbm(0.6, 300, 9).unwrap(), generate_fbm(0.6, 300, 10).unwrap());
    }

    #[test]
    fn circulant_embedding_is_used_for_fgn() {
        for &h in &[0.1, 0.3, 0.5, 0.7, 0.9, 0.99] {
            let g = FbmGenerator::new(h, 1000).unwrap();
            assert_eq!(g.method(), FbmMethod::DaviesHarte, "H = {h}");
        }
    }

    #[test]
    fn brownian_increments_are_uncorrelated() {
        let path = generate_fbm(0.5, 100_001, 4).unwrap();
        let inc: Vec<f64> = path.windows(2).map(|w| w[1] - w[0]).collect();
        let n = inc.len() as f64;
        let mean = inc.iter().sum::<f64>() / n;
        let var = inc.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let lag1 = inc.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>() / (n - 1.0);
        let rho = lag1 / var;
        assert!(rho.abs() < 3.0 / n.sqrt(), "lag-1 autocorrelation {rho}");
        assert!((var - 1.0).abs() < 0.02);
    }

    fn check_covariance(method: FbmMethod, hurst: f64) {
        let count = 10_000;
        let sample = paths(method, hurst, 33, count);
        let n = count as f64;
        for &(s, t) in &[(1, 1), (4, 4), (32, 32), (3, 17), (10, 32), (1, 32)] {
            let emp = sample.iter().map(|p| p[s] * p[t]).sum::<f64>() / n;
            let exact = fbm_covariance(hurst, s, t);
            let var_s = fbm_covariance(hurst, s, s);
            let var_t = fbm_covariance(hurst, t, t);
            let se = ((var_s * var_t + exact * exact) / n).sqrt();
            assert!(
                (emp - exact).abs() < 3.0 * se,
                "{method:?} H={hurst} cov({s},{t}): empirical {emp} vs exact {exact} (se {se})"
            );
        }
    }

    #[test]
    fn covariance_matches_exact_formula() {
        for &h in &[0.3, 0.5, 0.7] {
            check_covariance(FbmMethod::DaviesHarte, h);
            check_covariance(FbmMethod::Hosking, h);
        }
    }

    #[test]
    fn variance_grows_as_t_to_2h() {
        let hurst = 0.7;
        let sample = paths(FbmMethod::DaviesHarte, hurst, 101, 10_000);
        for &t in &[1usize, 10, 100] {
            let values: Vec<f64> = sample.iter().map(|p| p[t]).collect();
            let n = values.len() as f64;
            let var = values.iter().map(|x| x * x).sum::<f64>() / n;
            let exact = (t as f64).powf(2.0 * hurst);
            // Var of the second-moment estimator for a centered Gaussian is 2 sigma^4 / n.
            let se = (2.0 / n).sqrt() * exact;
            assert!((var - exact).abs() < 3.0 * se, "t={t}: {var} vs {exact}");
        }
    }
}
