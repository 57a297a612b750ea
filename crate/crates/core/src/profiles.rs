//! Named multipliers for the hidden constants in every sample count,
//! threshold gate and memory window.
//!
//! A constant that is not set falls back to its default: 1 for every key
//! except the few listed in [`builtin_default`]. Calibrated profiles ship with
//! the crate in `profiles/calibrated.json`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const CALIBRATED: &str = include_str!("../profiles/calibrated.json");

/// Every recognized key, with what it scales.
pub const KEYS: &[(&str, &str)] = &[
    ("compare.queries", "pair queries per compare call"),
    ("identity.samples", "samples drawn by the reduced identity baseline"),
    ("closeness.samples", "samples per stream drawn by the reduced closeness baseline"),
    ("pcond.samples", "SAMP points fed to the sketch"),
    ("pcond.sketch", "sketch accuracy parameter, relative to eps / m"),
    ("pcond.points", "points drawn from the reference distribution"),
    ("pcond.window_lo", "lower end of the memory window"),
    ("pcond.window_hi", "upper end of the memory window"),
    ("collision.T", "samples for the empirical interval masses"),
    ("collision.S", "samples for pairwise collision counting"),
    ("collision.c1", "pairwise sample gate"),
    ("bipartite.T", "samples for the empirical interval masses"),
    ("bipartite.S", "samples for bipartite collision counting"),
    ("collision.c2", "bipartite sample gate"),
    ("stream.T", "samples for the empirical interval masses"),
    ("stream.S", "samples for bipartite collision counting"),
    ("stream.S1", "stored samples per interval"),
    ("stream.S2", "compared samples per interval"),
    ("stream.gate", "bipartite sample gate"),
    ("stream.window_lo", "lower end of the memory window"),
    ("stream.window_hi", "upper end of the memory window"),
    ("fine.k", "samples used to pull a fine partition"),
    ("assess.T", "samples for the sketched interval weights"),
    ("assess.rounds", "number of assessment rounds"),
    ("assess.S", "samples per assessment round"),
    ("assess.S1", "stored samples per assessed interval"),
    ("assess.S2", "compared samples per assessed interval"),
    ("assess.gate", "bipartite sample gate"),
    ("assess.window_lo", "lower end of the memory window"),
    ("assess.window_hi", "upper end of the memory window"),
];

/// Default for a key that a profile leaves unset.
pub fn builtin_default(key: &str) -> f64 {
    match key {
        "fine.k" => 4.0,
        _ => 1.0,
    }
}

/// A set of constant overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Constants {
    values: BTreeMap<String, f64>,
}

impl Constants {
    /// All constants at their defaults.
    pub fn defaults() -> Self {
        Constants::default()
    }

    pub fn get(&self, key: &str) -> f64 {
        self.values.get(key).copied().unwrap_or_else(|| builtin_default(key))
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        Self::check(key, value)?;
        self.values.insert(key.to_string(), value);
        Ok(())
    }

    pub fn with(mut self, key: &str, value: f64) -> Result<Self> {
        self.set(key, value)?;
        Ok(self)
    }

    /// Explicitly set values.
    pub fn overrides(&self) -> &BTreeMap<String, f64> {
        &self.values
    }

    fn check(key: &str, value: f64) -> Result<()> {
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(Error::Config(format!("unknown constant {key:?}")));
        }
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Config(format!(
                "constant {key} must be positive and finite, got {value}"
            )));
        }
        Ok(())
    }

    fn validated(values: BTreeMap<String, f64>) -> Result<Self> {
        for (k, &v) in &values {
            Self::check(k, v)?;
        }
        Ok(Constants { values })
    }

    /// A named profile shipped with the crate.
    pub fn profile(name: &str) -> Result<Self> {
        let mut all = profiles()?;
        all.remove(name).ok_or_else(|| {
            Error::Config(format!(
                "unknown constants profile {name:?}; known: {}",
                profile_names().join(", ")
            ))
        })
    }

    /// Parses a flat JSON object of overrides.
    pub fn from_json(text: &str) -> Result<Self> {
        let values: BTreeMap<String, f64> =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("constants: {e}")))?;
        Self::validated(values)
    }

    /// Either a profile name or the path of a JSON overrides file.
    pub fn resolve(spec: &str) -> Result<Self> {
        if profile_names().iter().any(|n| n == spec) {
            return Self::profile(spec);
        }
        let path = Path::new(spec);
        if path.exists() {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("reading {spec}: {e}")))?;
            return Self::from_json(&text);
        }
        Err(Error::Config(format!(
            "{spec:?} is neither a known profile ({}) nor a readable file",
            profile_names().join(", ")
        )))
    }
}

fn profiles() -> Result<BTreeMap<String, Constants>> {
    let raw: BTreeMap<String, BTreeMap<String, f64>> = serde_json::from_str(CALIBRATED)
        .map_err(|e| Error::Config(format!("embedded profiles: {e}")))?;
    raw.into_iter()
        .map(|(name, values)| Ok((name, Constants::validated(values)?)))
        .collect()
}

/// Names of the shipped profiles.
pub fn profile_names() -> Vec<String> {
    profiles().map(|p| p.into_keys().collect()).unwrap_or_default()
}
