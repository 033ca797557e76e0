//! JSON scenario files.
//!
//! ```json
//! { "demand": {"type": "exponential", "q_bar": 1e5, "alpha": 0.013},
//!   "matching": {"A": 5.0, "kappa": 0.5},
//!   "beta": 120.0, "c": 50.0, "T": 0.4, "tau": 0.0,
//!   "platforms": [{"fleet": 500.0, "fare": 70.0}, {"fleet": 400.0}] }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::demand::DemandModel;
use crate::error::{Error, Result};
use crate::market::Market;
use crate::matching::MatchingModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformFleet {
    pub fleet: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fare: Option<f64>,
}

/// On-disk layout; field names follow the file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    demand: DemandModel,
    matching: MatchingModel,
    beta: f64,
    c: f64,
    #[serde(rename = "T")]
    t: f64,
    #[serde(default)]
    tau: f64,
    platforms: Vec<PlatformFleet>,
}

const REQUIRED: [&str; 6] = ["demand", "matching", "beta", "c", "T", "platforms"];

/// A validated scenario: market parameters, commission and platforms.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketConfig {
    pub market: Market,
    pub tau: f64,
    pub platforms: Vec<PlatformFleet>,
}

impl MarketConfig {
    /// Baseline calibration with the given fleets and no fixed fares.
    pub fn baseline(fleets: &[f64]) -> Self {
        Self {
            market: Market::baseline(),
            tau: 0.0,
            platforms: fleets.iter().map(|&fleet| PlatformFleet { fleet, fare: None }).collect(),
        }
    }

    pub fn fleets(&self) -> Vec<f64> {
        self.platforms.iter().map(|p| p.fleet).collect()
    }

    /// Fares, if every platform has one.
    pub fn fares(&self) -> Option<Vec<f64>> {
        self.platforms.iter().map(|p| p.fare).collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let obj = value.as_object().ok_or_else(|| Error::Parse("configuration must be a JSON object".into()))?;
        for key in REQUIRED {
            if !obj.contains_key(key) {
                return Err(Error::validation(key, "missing required field"));
            }
        }
        if let Some(list) = obj.get("platforms").and_then(|p| p.as_array()) {
            for (i, p) in list.iter().enumerate() {
                if p.get("fleet").is_none() {
                    return Err(Error::validation(format!("platforms[{i}].fleet"), "missing required field"));
                }
            }
        }
        let file: ConfigFile = serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))?;
        file.validate()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn to_file(&self) -> ConfigFile {
        let m = &self.market;
        ConfigFile {
            demand: m.demand,
            matching: m.matching,
            beta: m.beta,
            c: m.operating_cost,
            t: m.trip_time,
            tau: self.tau,
            platforms: self.platforms.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("configuration serializes")
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

impl ConfigFile {
    fn validate(self) -> Result<MarketConfig> {
        let demand = match self.demand {
            DemandModel::Exponential(d) => {
                positive("demand.q_bar", d.q_bar)?;
                positive("demand.alpha", d.alpha)?;
                DemandModel::exponential(d.q_bar, d.alpha)?
            }
        };
        positive("matching.A", self.matching.a)?;
        if !(self.matching.kappa > 0.0 && self.matching.kappa <= 1.0) {
            return Err(Error::validation(
                "matching.kappa",
                format!("must lie in (0, 1], got {}", self.matching.kappa),
            ));
        }
        let matching = MatchingModel::new(self.matching.a, self.matching.kappa)?;
        positive("beta", self.beta)?;
        positive("c", self.c)?;
        positive("T", self.t)?;
        if !self.tau.is_finite() {
            return Err(Error::validation("tau", "must be finite"));
        }
        if self.platforms.is_empty() {
            return Err(Error::validation("platforms", "at least one platform is required"));
        }
        for (i, p) in self.platforms.iter().enumerate() {
            positive(&format!("platforms[{i}].fleet"), p.fleet)?;
            if let Some(f) = p.fare {
                if !(f >= 0.0 && f.is_finite()) {
                    return Err(Error::validation(
                        format!("platforms[{i}].fare"),
                        format!("must be non-negative, got {f}"),
                    ));
                }
            }
        }
        Ok(MarketConfig {
            market: Market::new(demand, matching, self.beta, self.c, self.t)?,
            tau: self.tau,
            platforms: self.platforms,
        })
    }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(path, format!("must be positive and finite, got {v}")))
    }
}
