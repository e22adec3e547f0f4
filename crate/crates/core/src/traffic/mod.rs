//! Per-slot request loads of the service providers.
//!
//! Two load models are supported: a bounded model whose loads are drawn
//! independently and uniformly around a periodic mean, and a correlated
//! model driven by one fractional Brownian motion path per SP.

pub mod fbm;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::stream_rng;

pub use fbm::{generate_fbm, FbmGenerator, FbmMethod};

/// One sinusoidal harmonic: `amplitude * sin(2 k pi (t - phase) / period)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineComponent {
    /// requests / second
    pub amplitude: f64,
    /// slots
    pub phase: f64,
}

/// Periodic expected request rate `a0 + sum_k a_k sin(2 k pi (t - t_k) / T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateProfile {
    base_rate: f64,
    components: Vec<SineComponent>,
    period: usize,
}

impl RateProfile {
    /// Builds a profile, failing if the rate dips below zero anywhere in a period.
    pub fn new(base_rate: f64, components: Vec<SineComponent>, period: usize) -> Result<Self> {
        if !base_rate.is_finite() {
            return Err(Error::invalid("base_rate", "must be finite"));
        }
        if period == 0 {
            return Err(Error::invalid("period", "must be at least one slot"));
        }
        for (k, c) in components.iter().enumerate() {
            if !c.amplitude.is_finite() {
                return Err(Error::invalid(format!("components[{k}].amplitude"), "must be finite"));
            }
            if !c.phase.is_finite() {
                return Err(Error::invalid(format!("components[{k}].phase"), "must be finite"));
            }
        }
        let profile = RateProfile { base_rate, components, period };
        let scale = base_rate.abs() + profile.components.iter().map(|c| c.amplitude.abs()).sum::<f64>();
        for t in 0..period {
            let rate = profile.raw_rate(t);
            if rate < -1e-12 * scale.max(1.0) {
                return Err(Error::invalid(
                    "base_rate",
                    format!("expected rate is negative ({rate}) at slot {t} of the period"),
                ));
            }
        }
        Ok(profile)
    }

    pub fn constant(rate: f64) -> Result<Self> {
        Self::new(rate, Vec::new(), 1)
    }

    pub fn base_rate(&self) -> f64 {
        self.base_rate
    }

    pub fn components(&self) -> &[SineComponent] {
        &self.components
    }

    pub fn period(&self) -> usize {
        self.period
    }

    /// Expected rate at slot `t`, requests per second.
    pub fn rate_at(&self, t: usize) -> f64 {
        self.raw_rate(t).max(0.0)
    }

    /// Returns a copy with every rate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let components =
            self.components.iter().map(|c| SineComponent { amplitude: c.amplitude * factor, phase: c.phase }).collect();
        Self::new(self.base_rate * factor, components, self.period)
    }

    fn raw_rate(&self, t: usize) -> f64 {
        sinusoid(self.base_rate, &self.components, self.period, t)
    }
}

/// Raw sum of harmonics at slot `t`, without the nonnegativity guard.
pub fn sinusoid(base_rate: f64, components: &[SineComponent], period: usize, t: usize) -> f64 {
    let t = t as f64;
    let period = period as f64;
    components.iter().enumerate().fold(base_rate, |acc, (k, c)| {
        let harmonic = (k + 1) as f64;
        acc + c.amplitude * (2.0 * harmonic * PI * (t - c.phase) / period).sin()
    })
}

/// Expected request rate of `profile` at slot `t`.
pub fn expected_rate(profile: &RateProfile, t: usize) -> f64 {
    profile.rate_at(t)
}

/// Uniform loads in `[(1 - sigma) l, (1 + sigma) l]` around the periodic mean.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedLoadModel {
    pub profile: RateProfile,
    sigma: f64,
    slot_seconds: f64,
}

impl BoundedLoadModel {
    pub fn new(profile: RateProfile, sigma: f64, slot_seconds: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&sigma) {
            return Err(Error::invalid("sigma", format!("must lie in [0, 1], got {sigma}")));
        }
        check_slot(slot_seconds)?;
        Ok(Self { profile, sigma, slot_seconds })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn slot_seconds(&self) -> f64 {
        self.slot_seconds
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.profile.clone(), sigma, self.slot_seconds)
    }

    pub fn expected_load(&self, t: usize) -> f64 {
        self.profile.rate_at(t) * self.slot_seconds
    }

    /// Smallest and largest possible load at slot `t`.
    pub fn load_bounds(&self, t: usize) -> (f64, f64) {
        let mean = self.expected_load(t);
        ((1.0 - self.sigma) * mean, (1.0 + self.sigma) * mean)
    }
}

/// `rate = d_t [(1 - alpha) t^H / sqrt(2 pi) + alpha max(0, f_t)]` with `f` an fBm.
#[derive(Debug, Clone, PartialEq)]
pub struct FbmLoadModel {
    pub trend: RateProfile,
    alpha: f64,
    hurst: f64,
    slot_seconds: f64,
}

impl FbmLoadModel {
    pub fn new(trend: RateProfile, alpha: f64, hurst: f64, slot_seconds: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::invalid("alpha", format!("must lie in [0, 1], got {alpha}")));
        }
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::invalid("hurst", format!("must lie in (0, 1), got {hurst}")));
        }
        check_slot(slot_seconds)?;
        Ok(Self { trend, alpha, hurst, slot_seconds })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn slot_seconds(&self) -> f64 {
        self.slot_seconds
    }

    /// `E[max(0, f_t)] = t^H / sqrt(2 pi)`.
    pub fn mean_positive_part(&self, t: usize) -> f64 {
        (t as f64).powf(self.hurst) / (2.0 * PI).sqrt()
    }

    pub fn expected_load(&self, t: usize) -> f64 {
        self.trend.rate_at(t) * self.mean_positive_part(t) * self.slot_seconds
    }

    /// Load at slot `t` given the fBm value `f_t`.
    pub fn load_from_path(&self, t: usize, f_t: f64) -> f64 {
        let stochastic = f_t.max(0.0);
        let rate = self.trend.rate_at(t) * ((1.0 - self.alpha) * self.mean_positive_part(t) + self.alpha * stochastic);
        rate * self.slot_seconds
    }
}

fn check_slot(slot_seconds: f64) -> Result<()> {
    if !(slot_seconds > 0.0 && slot_seconds.is_finite()) {
        return Err(Error::invalid("slot_length", format!("must be positive, got {slot_seconds}")));
    }
    Ok(())
}

/// Traffic model of one SP.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadModel {
    Bounded(BoundedLoadModel),
    Fbm(FbmLoadModel),
}

impl LoadModel {
    pub fn expected_load(&self, t: usize) -> f64 {
        match self {
            LoadModel::Bounded(m) => m.expected_load(t),
            LoadModel::Fbm(m) => m.expected_load(t),
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, LoadModel::Bounded(_))
    }
}

/// Expected load of either model at slot `t`.
pub fn expected_load(model: &LoadModel, t: usize) -> f64 {
    model.expected_load(t)
}

/// Request counts per SP (rows) and slot (columns).
///
/// Row `k` belongs to player `k + 1`; the InP has no row.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadMatrix {
    values: Vec<f64>,
    sps: usize,
    horizon: usize,
}

impl LoadMatrix {
    pub fn zeros(sps: usize, horizon: usize) -> Self {
        Self { values: vec![0.0; sps * horizon], sps, horizon }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let sps = rows.len();
        let horizon = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(sps * horizon);
        for (k, row) in rows.into_iter().enumerate() {
            if row.len() != horizon {
                return Err(Error::DimensionMismatch(format!("row {k} has {} slots, expected {horizon}", row.len())));
            }
            if let Some(bad) = row.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
                return Err(Error::invalid(format!("loads[{k}]"), format!("loads must be finite and >= 0, got {bad}")));
            }
            values.extend(row);
        }
        Ok(Self { values, sps, horizon })
    }

    /// Number of SP rows.
    pub fn sps(&self) -> usize {
        self.sps
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Player id of each row, in order (the InP is player 0 and has no row).
    pub fn players(&self) -> Vec<usize> {
        (1..=self.sps).collect()
    }

    pub fn row(&self, sp: usize) -> &[f64] {
        &self.values[sp * self.horizon..(sp + 1) * self.horizon]
    }

    pub fn row_mut(&mut self, sp: usize) -> &mut [f64] {
        &mut self.values[sp * self.horizon..(sp + 1) * self.horizon]
    }

    pub fn get(&self, sp: usize, t: usize) -> f64 {
        self.values[sp * self.horizon + t]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.horizon.max(1)).take(self.sps)
    }
}

/// Expected loads of every model over `horizon` slots.
pub fn expected_loads(models: &[LoadModel], horizon: usize) -> LoadMatrix {
    let mut m = LoadMatrix::zeros(models.len(), horizon);
    for (k, model) in models.iter().enumerate() {
        for (t, v) in m.row_mut(k).iter_mut().enumerate() {
            *v = model.expected_load(t);
        }
    }
    m
}

/// Draws realizations of a fixed set of SP models.
///
/// Holds the expected loads and one fBm generator per distinct Hurst
/// exponent, so repeated draws only pay for sampling.
#[derive(Debug)]
pub struct LoadSampler {
    models: Vec<LoadModel>,
    expected: LoadMatrix,
    generators: BTreeMap<u64, FbmGenerator>,
}

impl LoadSampler {
    pub fn new(models: Vec<LoadModel>, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::invalid("horizon", "must be at least one slot"));
        }
        let expected = expected_loads(&models, horizon);
        let mut generators = BTreeMap::new();
        for model in &models {
            if let LoadModel::Fbm(m) = model {
                let key = m.hurst().to_bits();
                if let std::collections::btree_map::Entry::Vacant(e) = generators.entry(key) {
                    e.insert(FbmGenerator::new(m.hurst(), horizon)?);
                }
            }
        }
        Ok(Self { models, expected, generators })
    }

    pub fn models(&self) -> &[LoadModel] {
        &self.models
    }

    pub fn horizon(&self) -> usize {
        self.expected.horizon()
    }

    pub fn expected(&self) -> &LoadMatrix {
        &self.expected
    }

    /// One realization; row `k` draws from stream `k` of `seed`.
    pub fn sample(&self, seed: u64) -> LoadMatrix {
        let mut out = LoadMatrix::zeros(self.models.len(), self.horizon());
        self.sample_into(seed, &mut out);
        out
    }

    pub fn sample_into(&self, seed: u64, out: &mut LoadMatrix) {
        assert_eq!(out.sps(), self.models.len());
        assert_eq!(out.horizon(), self.horizon());
        for (k, model) in self.models.iter().enumerate() {
            let mut rng = stream_rng(seed, k as u64);
            let expected = self.expected.row(k);
            let row = out.row_mut(k);
            match model {
                LoadModel::Bounded(m) => fill_bounded(m.sigma(), expected, row, &mut rng),
                LoadModel::Fbm(m) => {
                    let generator = &self.generators[&m.hurst().to_bits()];
                    generator.sample_into(&mut rng, row);
                    for (t, v) in row.iter_mut().enumerate() {
                        *v = m.load_from_path(t, *v);
                    }
                }
            }
        }
    }
}

fn fill_bounded<R: Rng>(sigma: f64, expected: &[f64], row: &mut [f64], rng: &mut R) {
    for (v, &mean) in row.iter_mut().zip(expected) {
        let lo = (1.0 - sigma) * mean;
        let hi = (1.0 + sigma) * mean;
        let u: f64 = rng.random();
        *v = (lo + (hi - lo) * u).clamp(lo, hi);
    }
}

/// Independent uniform loads for each SP and slot.
pub fn sample_bounded_loads(models: &[BoundedLoadModel], horizon: usize, seed: u64) -> Result<LoadMatrix> {
    let models = models.iter().cloned().map(LoadModel::Bounded).collect();
    Ok(LoadSampler::new(models, horizon)?.sample(seed))
}

/// fBm-driven loads, one independent path per SP.
pub fn sample_fbm_loads(models: &[FbmLoadModel], horizon: usize, seed: u64) -> Result<LoadMatrix> {
    let models = models.iter().cloned().map(LoadModel::Fbm).collect();
    Ok(LoadSampler::new(models, horizon)?.sample(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sine(base: f64, amp: f64, phase: f64) -> RateProfile {
        RateProfile::new(base, vec![SineComponent { amplitude: amp, phase }], 24).unwrap()
    }

    #[test]
    fn expected_rate_examples() {
        let constant = RateProfile::constant(5.0).unwrap();
        assert_eq!(expected_rate(&constant, 17), 5.0);
        // A bare sinusoid cannot be a profile (it goes negative), but the formula still holds.
        let unit = [SineComponent { amplitude: 1.0, phase: 0.0 }];
        assert_relative_eq!(sinusoid(0.0, &unit, 24, 6), 1.0, epsilon = 1e-15);
        let p = sine(2000.0, 400.0, 3.0);
        assert_relative_eq!(expected_rate(&p, 9), 2400.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_base_single_harmonic_is_rejected() {
        // sin goes to -1 at t = 18, so a pure sinusoid is negative there.
        let err = RateProfile::new(0.0, vec![SineComponent { amplitude: 1.0, phase: 0.0 }], 24).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { ref field, .. } if field == "base_rate"));
    }

    #[test]
    fn touching_zero_is_allowed() {
        let p = sine(400.0, 400.0, 0.0);
        assert_eq!(p.rate_at(18), 0.0);
    }

    #[test]
    fn bounded_expected_load() {
        let m = BoundedLoadModel::new(RateProfile::constant(2000.0).unwrap(), 0.3, 3600.0).unwrap();
        assert_relative_eq!(m.expected_load(0), 7.2e6);
    }

    #[test]
    fn fbm_expected_load() {
        let m = FbmLoadModel::new(RateProfile::constant(100.0).unwrap(), 0.4, 0.5, 1.0).unwrap();
        assert_eq!(m.expected_load(0), 0.0);
        assert_relative_eq!(m.expected_load(4), 200.0 / (2.0 * PI).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(m.expected_load(4), 79.788_456_080_286_54, epsilon = 1e-9);
    }

    #[test]
    fn model_parameters_are_validated() {
        let p = RateProfile::constant(1.0).unwrap();
        assert!(BoundedLoadModel::new(p.clone(), 1.5, 1.0).is_err());
        assert!(BoundedLoadModel::new(p.clone(), -0.1, 1.0).is_err());
        assert!(BoundedLoadModel::new(p.clone(), 0.5, 0.0).is_err());
        assert!(FbmLoadModel::new(p.clone(), 1.1, 0.5, 1.0).is_err());
        assert!(FbmLoadModel::new(p, 0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn bounded_sigma_zero_is_exact() {
        let model = BoundedLoadModel::new(sine(2000.0, 400.0, 3.0), 0.0, 3600.0).unwrap();
        let loads = sample_bounded_loads(std::slice::from_ref(&model), 48, 5).unwrap();
        for t in 0..48 {
            assert_eq!(loads.get(0, t), model.expected_load(t));
        }
    }

    #[test]
    fn bounded_sigma_one_spans_zero_to_double() {
        let model = BoundedLoadModel::new(sine(2000.0, 400.0, 3.0), 1.0, 3600.0).unwrap();
        let loads = sample_bounded_loads(&[model.clone(), model.clone()], 500, 6).unwrap();
        for k in 0..2 {
            for t in 0..500 {
                let v = loads.get(k, t);
                assert!(v >= 0.0 && v <= 2.0 * model.expected_load(t));
            }
        }
    }

    #[test]
    fn bounded_sample_mean_converges() {
        let model = BoundedLoadModel::new(RateProfile::constant(100.0).unwrap(), 0.5, 1.0).unwrap();
        let n = 100_000;
        let loads = sample_bounded_loads(&[model], n, 11).unwrap();
        let mean = loads.row(0).iter().sum::<f64>() / n as f64;
        // uniform on [50, 150]: sd = 100 / sqrt(12)
        let se = 100.0 / 12f64.sqrt() / (n as f64).sqrt();
        assert!((mean - 100.0).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn rows_are_independent_streams() {
        let model = BoundedLoadModel::new(RateProfile::constant(100.0).unwrap(), 0.5, 1.0).unwrap();
        let loads = sample_bounded_loads(&[model.clone(), model], 10, 1).unwrap();
        assert_ne!(loads.row(0), loads.row(1));
    }

    #[test]
    fn fbm_alpha_zero_equals_expected() {
        let model = FbmLoadModel::new(sine(2000.0, 400.0, 3.0), 0.0, 0.7, 3600.0).unwrap();
        let loads = sample_fbm_loads(std::slice::from_ref(&model), 100, 2).unwrap();
        for t in 0..100 {
            assert_eq!(loads.get(0, t), model.expected_load(t));
        }
    }

    #[test]
    fn fbm_alpha_one_is_fully_stochastic() {
        let trend = sine(2000.0, 400.0, 3.0);
        let model = FbmLoadModel::new(trend.clone(), 1.0, 0.7, 3600.0).unwrap();
        let loads = sample_fbm_loads(&[model], 200, 8).unwrap();
        let path = {
            let g = FbmGenerator::new(0.7, 200).unwrap();
            g.sample(&mut stream_rng(8, 0))
        };
        for t in 0..200 {
            assert_relative_eq!(loads.get(0, t), trend.rate_at(t) * path[t].max(0.0) * 3600.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn sampler_is_deterministic() {
        let models = vec![
            LoadModel::Fbm(FbmLoadModel::new(sine(10.0, 3.0, 1.0), 0.5, 0.3, 60.0).unwrap()),
            LoadModel::Bounded(BoundedLoadModel::new(sine(10.0, 3.0, 1.0), 0.5, 60.0).unwrap()),
        ];
        let s = LoadSampler::new(models, 300).unwrap();
        assert_eq!(s.sample(99), s.sample(99));
        assert_ne!(s.sample(99), s.sample(100));
    }

    #[test]
    fn load_matrix_rejects_ragged_and_negative() {
        assert!(LoadMatrix::from_rows(vec![vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(LoadMatrix::from_rows(vec![vec![1.0, -2.0]]).is_err());
    }
}
