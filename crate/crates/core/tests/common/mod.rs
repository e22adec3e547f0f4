//! Scenario builders shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use coinvest::economics::EconomicParams;
use coinvest::scenario::{
    EconomicsConfig, HorizonConfig, PlayerConfig, RateConfig, Scenario, ScenarioConfig, UncertaintyConfig,
    HOURS_PER_YEAR,
};
use coinvest::traffic::{LoadMatrix, SineComponent};
use rand::Rng;

/// Maintenance price of the bundled configs, $/(hour * vcore).
pub const MAINTENANCE: f64 = 16.25 / 730.0;

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

pub fn bundled(name: &str) -> Scenario {
    ScenarioConfig::from_path(&config_path(name)).unwrap().validate().unwrap()
}

pub fn years_of_days(days: usize) -> f64 {
    days as f64 * 24.0 / HOURS_PER_YEAR
}

/// A bounded-load scenario with `sps` SPs whose daily profiles differ in
/// level, swing and peak hour, over `days` days of hourly slots.
pub fn random_scenario<R: Rng>(rng: &mut R, sps: usize, days: usize, sigma: f64) -> Scenario {
    let players = (1..=sps)
        .map(|i| {
            let base_rate = 10f64.powf(rng.random_range(2.5..4.0));
            PlayerConfig {
                name: format!("SP{i}"),
                benefit: rng.random_range(2e-6..1e-5),
                rate: RateConfig {
                    base_rate,
                    period: 24,
                    components: vec![SineComponent {
                        amplitude: base_rate * rng.random_range(0.0..0.8),
                        phase: rng.random_range(0.0..24.0),
                    }],
                },
            }
        })
        .collect();
    let config = ScenarioConfig {
        schema_version: coinvest::scenario::SCHEMA_VERSION,
        inp_name: "InP".into(),
        economics: EconomicsConfig { capacity_price: 10.94, maintenance_price: MAINTENANCE, saturation: 0.03 },
        horizon: HorizonConfig { investment_years: years_of_days(days), slot_hours: 1.0 },
        uncertainty: UncertaintyConfig::Bounded { sigma },
        players,
    };
    config.validate().unwrap()
}

/// Positive expected loads and prices for `sps` SPs over `horizon` slots.
pub fn random_instance<R: Rng>(rng: &mut R, sps: usize, horizon: usize) -> (LoadMatrix, EconomicParams) {
    let rows = (0..sps)
        .map(|_| {
            let level = rng.random_range(1e5..1e6);
            (0..horizon).map(|_| level * rng.random_range(0.5..1.5)).collect()
        })
        .collect();
    let params = EconomicParams {
        capacity_price: rng.random_range(0.5..5.0),
        maintenance_price: rng.random_range(0.0..0.05),
        investment_hours: horizon as f64,
        slot_hours: 1.0,
        benefit: (0..sps).map(|_| rng.random_range(1e-4..1e-3)).collect(),
        saturation: 0.03,
    };
    (LoadMatrix::from_rows(rows).unwrap(), params)
}

pub fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
