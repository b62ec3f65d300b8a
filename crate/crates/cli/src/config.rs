//! Run configuration files.
//!
//! A config is a TOML file with optional top-level `seed` and `reps` and
//! one table per subcommand. Model tables are flat: the model name and its
//! parameters sit next to the subcommand's own keys.
//!
//! ```toml
//! seed = 7
//!
//! [palm]
//! model = "poisson_ts"
//! rate = 1.0
//! events = ["alpha(0)>1", "count(0,1]==0"]
//! ```

use std::path::Path;

use palmlab::ModelConfig;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use toml::Table;

use crate::CliError;

/// Keys of a flat model description.
pub const MODEL_KEYS: &[&str] = &[
    "model",
    "rate",
    "interval",
    "interval_rate",
    "shape",
    "value",
    "lower",
    "upper",
    "base",
    "tilt",
    "c",
    "gamma0",
    "gamma1",
    "pattern_len",
];

/// Keys every subcommand table accepts.
const COMMON_KEYS: &[&str] = &["seed", "reps", "guard_gaps"];

pub const SECTIONS: &[&str] = &["simulate", "palm", "ams", "suite", "example44", "example84"];

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub reps: Option<u64>,
    sections: Table,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::config("", "", e.message().to_string()))?;
        let mut out = ConfigFile::default();
        for (key, value) in table {
            match key.as_str() {
                "seed" => out.seed = Some(typed("", "seed", value)?),
                "reps" => out.reps = Some(typed("", "reps", value)?),
                name if SECTIONS.contains(&name) => {
                    if !value.is_table() {
                        return Err(CliError::config(name, "", "expected a table"));
                    }
                    out.sections.insert(key, value);
                }
                _ => return Err(CliError::config("", &key, "unknown key")),
            }
        }
        Ok(out)
    }

    /// The table of one subcommand (empty if absent), checked against the
    /// keys it accepts and deserialized.
    pub fn section<S: DeserializeOwned>(
        &self,
        name: &str,
        keys: &[&str],
        with_model: bool,
    ) -> Result<S, CliError> {
        let table = match self.sections.get(name) {
            Some(v) => v.as_table().cloned().unwrap_or_default(),
            None => Table::new(),
        };
        for key in table.keys() {
            let known = keys.contains(&key.as_str())
                || COMMON_KEYS.contains(&key.as_str())
                || (with_model && MODEL_KEYS.contains(&key.as_str()));
            if !known {
                return Err(CliError::config(name, key, "unknown key"));
            }
        }
        if name == "suite" {
            if let Some(models) = table.get("models").and_then(|m| m.as_array()) {
                for (i, m) in models.iter().enumerate() {
                    let Some(t) = m.as_table() else {
                        return Err(CliError::config(
                            name,
                            &format!("models[{i}]"),
                            "expected a table",
                        ));
                    };
                    if let Some(key) = t.keys().find(|k| !MODEL_KEYS.contains(&k.as_str())) {
                        return Err(CliError::config(
                            name,
                            &format!("models[{i}].{key}"),
                            "unknown key",
                        ));
                    }
                }
            }
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::config(name, "", e.message().to_string()))
    }
}

fn typed<T: DeserializeOwned>(section: &str, key: &str, value: toml::Value) -> Result<T, CliError> {
    value
        .try_into()
        .map_err(|e: toml::de::Error| CliError::config(section, key, e.message().to_string()))
}

/// Settings shared by every subcommand table.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct Common {
    pub seed: Option<u64>,
    pub reps: Option<u64>,
    pub guard_gaps: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct SimulateSection {
    #[serde(flatten)]
    pub common: Common,
    #[serde(flatten)]
    pub model: ModelConfig,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

pub const SIMULATE_KEYS: &[&str] = &["lo", "hi"];

#[derive(Debug, Clone, Default, Deserialize)]
pub struct PalmSection {
    #[serde(flatten)]
    pub common: Common,
    #[serde(flatten)]
    pub model: ModelConfig,
    #[serde(default)]
    pub events: Vec<String>,
    pub estimator: Option<String>,
    pub x: Option<f64>,
    pub n: Option<i64>,
    pub bin_lo: Option<f64>,
    pub bin_hi: Option<f64>,
    pub bins: Option<usize>,
    pub horizon_gaps: Option<f64>,
    /// Pattern file to estimate from instead of simulating.
    pub patterns: Option<String>,
}

pub const PALM_KEYS: &[&str] = &[
    "events",
    "estimator",
    "x",
    "n",
    "bin_lo",
    "bin_hi",
    "bins",
    "horizon_gaps",
    "patterns",
];

#[derive(Debug, Clone, Default, Deserialize)]
pub struct AmsSection {
    #[serde(flatten)]
    pub common: Common,
    #[serde(flatten)]
    pub model: ModelConfig,
    pub event: Option<String>,
    pub mode: Option<String>,
    pub n_max: Option<u64>,
    pub x_max: Option<f64>,
    pub tail_fraction: Option<f64>,
    pub tol: Option<f64>,
    pub horizon_gaps: Option<f64>,
}

pub const AMS_KEYS: &[&str] = &[
    "event",
    "mode",
    "n_max",
    "x_max",
    "tail_fraction",
    "tol",
    "horizon_gaps",
];

#[derive(Debug, Clone, Default, Deserialize)]
pub struct SuiteSection {
    #[serde(flatten)]
    pub common: Common,
    pub z_crit: Option<f64>,
    pub atol: Option<f64>,
    pub horizon_gaps: Option<f64>,
    pub only: Option<String>,
    pub models: Option<Vec<ModelConfig>>,
}

pub const SUITE_KEYS: &[&str] = &["z_crit", "atol", "horizon_gaps", "only", "models"];

#[derive(Debug, Clone, Default, Deserialize)]
pub struct Example44Section {
    #[serde(flatten)]
    pub common: Common,
    pub pattern_len: Option<u64>,
    pub tail_fraction: Option<f64>,
    pub tol: Option<f64>,
}

pub const EXAMPLE44_KEYS: &[&str] = &["pattern_len", "tail_fraction", "tol"];

#[derive(Debug, Clone, Default, Deserialize)]
pub struct Example84Section {
    #[serde(flatten)]
    pub common: Common,
    pub rate: Option<f64>,
}

pub const EXAMPLE84_KEYS: &[&str] = &["rate"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_flatten_model_keys() {
        let cfg = ConfigFile::parse(
            "seed = 3\n[palm]\nmodel = \"renewal_ts_from_es\"\ninterval = \"gamma\"\nshape = 2.0\ninterval_rate = 1.0\nevents = [\"alpha(0)>1\"]\nreps = 50\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(3));
        let palm: PalmSection = cfg.section("palm", PALM_KEYS, true).unwrap();
        assert_eq!(palm.model.model, "renewal_ts_from_es");
        assert_eq!(palm.model.shape, Some(2.0));
        assert_eq!(palm.common.reps, Some(50));
        assert_eq!(palm.events, vec!["alpha(0)>1"]);
    }

    #[test]
    fn unknown_keys_are_named() {
        let cfg = ConfigFile::parse("[palm]\nmodel = \"poisson_ts\"\nrte = 1.0\n").unwrap();
        let err = cfg
            .section::<PalmSection>("palm", PALM_KEYS, true)
            .unwrap_err();
        assert_eq!(
            err.to_string(),
            "config error in [palm] at `rte`: unknown key"
        );
        let err = ConfigFile::parse("[plam]\n").unwrap_err();
        assert!(err.to_string().contains("`plam`"));
        let cfg = ConfigFile::parse("[[suite.models]]\nmodel = \"poisson_ts\"\nrat = 2\n").unwrap();
        let err = cfg
            .section::<SuiteSection>("suite", SUITE_KEYS, false)
            .unwrap_err();
        assert!(err.to_string().contains("models[0].rat"));
    }

    #[test]
    fn missing_section_is_empty() {
        let cfg = ConfigFile::parse("").unwrap();
        let s: Example84Section = cfg.section("example84", EXAMPLE84_KEYS, false).unwrap();
        assert!(s.rate.is_none());
    }
}
