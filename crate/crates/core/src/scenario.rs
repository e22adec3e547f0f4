//! Scenario files: one InP, a list of SPs, prices, horizon and a load model.
//!
//! A scenario is read from TOML or JSON (chosen by file extension) into
//! [`ScenarioConfig`], then checked and turned into a [`Scenario`]. Every
//! validation error names the offending field, e.g. `uncertainty.sigma` or
//! `players[2].rate.base_rate`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::economics::EconomicParams;
use crate::error::{Error, Result};
use crate::game::MAX_PLAYERS;
use crate::traffic::{
    expected_loads, BoundedLoadModel, FbmLoadModel, LoadMatrix, LoadModel, LoadSampler, RateProfile, SineComponent,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const HOURS_PER_YEAR: f64 = 8760.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default = "inp_name")]
    pub inp_name: String,
    pub economics: EconomicsConfig,
    pub horizon: HorizonConfig,
    pub uncertainty: UncertaintyConfig,
    pub players: Vec<PlayerConfig>,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

fn inp_name() -> String {
    "InP".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconomicsConfig {
    /// dollars per vcore
    pub capacity_price: f64,
    /// dollars per vcore and hour
    pub maintenance_price: f64,
    /// per vcore
    pub saturation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonConfig {
    pub investment_years: f64,
    pub slot_hours: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum UncertaintyConfig {
    Bounded { sigma: f64 },
    Fbm { alpha: f64, hurst: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerConfig {
    pub name: String,
    /// dollars per request
    pub benefit: f64,
    /// Mean rate for the bounded model, trend for the fBm model.
    pub rate: RateConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateConfig {
    /// requests per second
    pub base_rate: f64,
    /// slots
    #[serde(default = "default_period")]
    pub period: usize,
    #[serde(default)]
    pub components: Vec<SineComponent>,
}

fn default_period() -> usize {
    24
}

impl ScenarioConfig {
    /// Parses TOML for `.toml` files and JSON otherwise.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid("config", format!("cannot read {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml")) {
            Self::from_toml(&text)
        } else {
            Self::from_json(&text)
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid("config", e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::invalid("config", e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<Scenario> {
        Scenario::from_config(self.clone())
    }
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    config: ScenarioConfig,
    params: EconomicParams,
    models: Vec<LoadModel>,
}

impl Scenario {
    pub fn from_config(config: ScenarioConfig) -> Result<Self> {
        if config.schema_version != SCHEMA_VERSION {
            return Err(Error::invalid("schema_version", format!("unsupported version {}", config.schema_version)));
        }
        if config.players.is_empty() || config.players.len() >= MAX_PLAYERS {
            return Err(Error::invalid(
                "players",
                format!("need between 1 and {} SPs, got {}", MAX_PLAYERS - 1, config.players.len()),
            ));
        }
        let mut seen = std::collections::HashSet::from([config.inp_name.as_str()]);
        for (i, p) in config.players.iter().enumerate() {
            if p.name.is_empty() || !seen.insert(p.name.as_str()) {
                return Err(Error::invalid(
                    format!("players[{i}].name"),
                    format!("`{}` is empty or not unique", p.name),
                ));
            }
        }
        let h = &config.horizon;
        if !(h.slot_hours > 0.0 && h.slot_hours.is_finite()) {
            return Err(Error::invalid("horizon.slot_hours", format!("must be positive, got {}", h.slot_hours)));
        }
        if !(h.investment_years > 0.0 && h.investment_years.is_finite()) {
            return Err(Error::invalid(
                "horizon.investment_years",
                format!("must be positive, got {}", h.investment_years),
            ));
        }
        let params = EconomicParams {
            capacity_price: config.economics.capacity_price,
            maintenance_price: config.economics.maintenance_price,
            investment_hours: h.investment_years * HOURS_PER_YEAR,
            slot_hours: h.slot_hours,
            benefit: config.players.iter().map(|p| p.benefit).collect(),
            saturation: config.economics.saturation,
        };
        params.validate().map_err(|e| match e {
            Error::InvalidParameter { field, reason } if field == "investment_hours" => {
                Error::invalid("horizon.investment_years", reason)
            }
            Error::InvalidParameter { field, reason } if field == "slot_hours" => {
                Error::invalid("horizon.slot_hours", reason)
            }
            Error::InvalidParameter { field, reason } if field.starts_with("benefit[") => {
                let i = &field["benefit".len()..];
                Error::invalid(format!("players{i}.benefit"), reason)
            }
            other => other.under("economics"),
        })?;

        let slot_seconds = h.slot_hours * 3600.0;
        let mut models = Vec::with_capacity(config.players.len());
        for (i, p) in config.players.iter().enumerate() {
            let at = |e: Error| e.under(&format!("players[{i}].rate"));
            let profile = RateProfile::new(p.rate.base_rate, p.rate.components.clone(), p.rate.period).map_err(at)?;
            let model = match config.uncertainty {
                UncertaintyConfig::Bounded { sigma } => LoadModel::Bounded(
                    BoundedLoadModel::new(profile, sigma, slot_seconds).map_err(|e| e.under("uncertainty"))?,
                ),
                UncertaintyConfig::Fbm { alpha, hurst } => LoadModel::Fbm(
                    FbmLoadModel::new(profile, alpha, hurst, slot_seconds).map_err(|e| e.under("uncertainty"))?,
                ),
            };
            models.push(model);
        }
        Ok(Self { config, params, models })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn params(&self) -> &EconomicParams {
        &self.params
    }

    pub fn models(&self) -> &[LoadModel] {
        &self.models
    }

    pub fn horizon(&self) -> usize {
        self.params.horizon()
    }

    /// InP first, then SPs in file order.
    pub fn player_names(&self) -> Vec<String> {
        std::iter::once(self.config.inp_name.clone())
            .chain(self.config.players.iter().map(|p| p.name.clone()))
            .collect()
    }

    pub fn players(&self) -> usize {
        self.models.len() + 1
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self.config.uncertainty, UncertaintyConfig::Bounded { .. })
    }

    pub fn expected_loads(&self) -> LoadMatrix {
        expected_loads(&self.models, self.horizon())
    }

    pub fn sampler(&self) -> Result<LoadSampler> {
        LoadSampler::new(self.models.clone(), self.horizon())
    }

    /// Same scenario with another bounded-model spread.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        let mut config = self.config.clone();
        match &mut config.uncertainty {
            UncertaintyConfig::Bounded { sigma: s } => *s = sigma,
            UncertaintyConfig::Fbm { .. } => {
                return Err(Error::ModelMismatch("sigma applies to the bounded load model only".into()))
            }
        }
        Self::from_config(config)
    }

    /// Same scenario with another fBm weight.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        let mut config = self.config.clone();
        match &mut config.uncertainty {
            UncertaintyConfig::Fbm { alpha: a, .. } => *a = alpha,
            UncertaintyConfig::Bounded { .. } => {
                return Err(Error::ModelMismatch("alpha applies to the fBm load model only".into()))
            }
        }
        Self::from_config(config)
    }

    pub fn with_investment_years(&self, years: f64) -> Result<Self> {
        let mut config = self.config.clone();
        config.horizon.investment_years = years;
        Self::from_config(config)
    }

    /// Keeps only the listed SPs (1-based player ids), in the given order.
    pub fn with_sps(&self, sps: &[usize]) -> Result<Self> {
        let mut config = self.config.clone();
        config.players = sps
            .iter()
            .map(|&i| {
                self.config
                    .players
                    .get(i.wrapping_sub(1))
                    .cloned()
                    .ok_or_else(|| Error::invalid("players", format!("no SP with id {i}")))
            })
            .collect::<Result<_>>()?;
        Self::from_config(config)
    }
}
