//! The distribution file format: either an explicit pmf or a generator spec.
//!
//! ```json
//! {"n": 4, "pmf": [0.25, 0.25, 0.25, 0.25]}
//! {"generator": {"kind": "no_instance", "params": {"half_n": 64, "eps": 0.8}, "seed": 7}}
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dist::{gen_monotone, gen_no_instance, ExplicitDistribution, MonotoneKind};
use crate::error::{Error, Result};
use crate::oracles::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: String,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistributionSpec {
    Generator { generator: GeneratorSpec },
    Explicit(ExplicitDistribution),
}

/// Generator kinds understood by [`GeneratorSpec::materialize`].
pub const GENERATOR_KINDS: &[&str] = &[
    "uniform",
    "point_mass",
    "uniform_prefix",
    "geometric",
    "power",
    "step",
    "no_instance",
    "reversed_geometric",
];

impl GeneratorSpec {
    pub fn new(kind: &str, params: &[(&str, f64)], seed: u64) -> Self {
        GeneratorSpec {
            kind: kind.to_string(),
            params: params
                .iter()
                .map(|(k, v)| (k.to_string(), Value::from(*v)))
                .collect(),
            seed,
        }
    }

    fn real(&self, key: &str) -> Result<f64> {
        self.params
            .get(key)
            .and_then(Value::as_f64)
            .ok_or_else(|| Error::Config(format!("generator {:?} needs numeric param {key:?}", self.kind)))
    }

    fn count(&self, key: &str) -> Result<usize> {
        let v = self.real(key)?;
        if v < 1.0 || v.fract() != 0.0 {
            return Err(Error::Config(format!(
                "generator param {key} must be a positive integer, got {v}"
            )));
        }
        Ok(v as usize)
    }

    pub fn materialize(&self) -> Result<ExplicitDistribution> {
        match self.kind.as_str() {
            "uniform" => ExplicitDistribution::uniform(self.count("n")?),
            "point_mass" => ExplicitDistribution::point_mass(self.count("n")?, self.count("x")?),
            "uniform_prefix" => ExplicitDistribution::uniform_prefix(self.count("n")?, self.count("k")?),
            "geometric" => gen_monotone(MonotoneKind::Geometric, self.count("n")?, self.real("ratio")?),
            "reversed_geometric" => {
                Ok(gen_monotone(MonotoneKind::Geometric, self.count("n")?, self.real("ratio")?)?.reversed())
            }
            "power" => gen_monotone(MonotoneKind::Power, self.count("n")?, self.real("exponent")?),
            "step" => gen_monotone(MonotoneKind::Step, self.count("n")?, self.real("steps")?),
            "no_instance" => {
                let mut rng = rng_from_seed(self.seed);
                gen_no_instance(self.count("half_n")?, self.real("eps")?, &mut rng)
            }
            other => Err(Error::Config(format!(
                "unknown generator {other:?}; known: {}",
                GENERATOR_KINDS.join(", ")
            ))),
        }
    }
}

impl DistributionSpec {
    pub fn materialize(&self) -> Result<ExplicitDistribution> {
        match self {
            DistributionSpec::Generator { generator } => generator.materialize(),
            DistributionSpec::Explicit(d) => Ok(d.clone()),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("distribution file: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_forms() {
        let e = DistributionSpec::from_json(r#"{"n":2,"pmf":[0.5,0.5]}"#).unwrap();
        assert_eq!(e.materialize().unwrap(), ExplicitDistribution::uniform(2).unwrap());
        let g = DistributionSpec::from_json(
            r#"{"generator":{"kind":"geometric","params":{"n":3,"ratio":0.5}}}"#,
        )
        .unwrap();
        let p = g.materialize().unwrap();
        assert!((p.pmf()[0] - 4.0 / 7.0).abs() < 1e-12);
        assert!(DistributionSpec::from_json(r#"{"n":2,"pmf":[0.5,0.6]}"#).is_err());
        assert!(DistributionSpec::from_json(r#"{"generator":{"kind":"nope"}}"#)
            .unwrap()
            .materialize()
            .is_err());
    }

    #[test]
    fn no_instance_zero_bias_is_uniform() {
        let g = GeneratorSpec::new("no_instance", &[("half_n", 2.0), ("eps", 0.0)], 3);
        assert_eq!(g.materialize().unwrap(), ExplicitDistribution::uniform(4).unwrap());
    }
}
