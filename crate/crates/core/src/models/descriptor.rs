use serde::{Deserialize, Serialize};

use super::{
    example44, example84_exact, poisson_ts, renewal_es, renewal_ts_from_es, tilted_ts,
    IntervalDistribution, ModelError, ProcessModel, Tilt,
};
use crate::scalar::Scalar;

/// Flat parameter record naming a model, as written in run configs.
///
/// ```toml
/// model = "tilted_ts"
/// base = "poisson_ts"
/// rate = 1.0
/// tilt = "scaled_alpha0"
/// c = 0.5
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(default)]
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    /// Interval family for renewal models: `exponential`, `gamma`,
    /// `deterministic` or `uniform`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    /// Base model of `tilted_ts`: `poisson_ts` or `renewal_ts_from_es`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tilt: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern_len: Option<u64>,
}

fn config_error(field: &str, message: impl Into<String>) -> ModelError {
    ModelError::Config {
        field: field.to_string(),
        message: message.into(),
    }
}

fn required<T: Scalar>(field: &str, v: Option<f64>) -> Result<T, ModelError> {
    let v = v.ok_or_else(|| config_error(field, "missing"))?;
    T::from_f64(v).ok_or_else(|| config_error(field, format!("{v} is not representable")))
}

/// Reattributes a parameter error to the config field that carried it.
fn blame(field: &str, err: ModelError) -> ModelError {
    match err {
        ModelError::InvalidParameter { name, value } => {
            let field = match name {
                "rate" if field != "rate" => field,
                _ => name,
            };
            config_error(field, format!("invalid value {value}"))
        }
        ModelError::UnknownTilt(msg) => config_error("tilt", msg),
        other => other,
    }
}

impl ModelConfig {
    pub fn named(model: &str) -> Self {
        Self {
            model: model.to_string(),
            ..Self::default()
        }
    }

    pub fn build<T: Scalar>(&self) -> Result<ProcessModel<T>, ModelError> {
        match self.model.as_str() {
            "poisson_ts" => poisson_ts(required("rate", self.rate)?).map_err(|e| blame("rate", e)),
            "renewal_es" => Ok(renewal_es(self.interval_law()?)),
            "renewal_ts_from_es" => {
                renewal_ts_from_es(self.interval_law()?).map_err(|e| blame("interval", e))
            }
            "example84_exact" => {
                example84_exact(required("rate", self.rate)?).map_err(|e| blame("rate", e))
            }
            "example44" => {
                let len = self
                    .pattern_len
                    .ok_or_else(|| config_error("pattern_len", "missing"))?;
                example44(len).map_err(|e| blame("pattern_len", e))
            }
            "tilted_ts" => {
                let base_name = self
                    .base
                    .as_deref()
                    .ok_or_else(|| config_error("base", "missing"))?;
                if !matches!(base_name, "poisson_ts" | "renewal_ts_from_es") {
                    return Err(config_error(
                        "base",
                        format!("`{base_name}` is not a time-stationary model"),
                    ));
                }
                let base = Self {
                    model: base_name.to_string(),
                    ..self.clone()
                }
                .build()?;
                tilted_ts(base, self.tilt()?).map_err(|e| blame("base", e))
            }
            "" => Err(config_error("model", "missing")),
            other => Err(config_error("model", format!("unknown model `{other}`"))),
        }
    }

    fn interval_law<T: Scalar>(&self) -> Result<IntervalDistribution<T>, ModelError> {
        let family = self
            .interval
            .as_deref()
            .ok_or_else(|| config_error("interval", "missing"))?;
        let law = match family {
            "exponential" => {
                IntervalDistribution::exponential(required("interval_rate", self.interval_rate)?)
            }
            "gamma" => IntervalDistribution::gamma(
                required("shape", self.shape)?,
                required("interval_rate", self.interval_rate)?,
            ),
            "deterministic" => IntervalDistribution::deterministic(required("value", self.value)?),
            "uniform" => IntervalDistribution::uniform(
                required("lower", self.lower)?,
                required("upper", self.upper)?,
            ),
            other => {
                return Err(config_error(
                    "interval",
                    format!("unknown interval family `{other}`"),
                ))
            }
        };
        law.map_err(|e| blame("interval_rate", e))
    }

    fn tilt<T: Scalar>(&self) -> Result<Tilt<T>, ModelError> {
        let name = self
            .tilt
            .as_deref()
            .ok_or_else(|| config_error("tilt", "missing"))?;
        let params: Vec<T> = match name {
            "unit" => vec![],
            "scaled_alpha0" => vec![required("c", self.c)?],
            "linear" => vec![
                required("gamma0", self.gamma0)?,
                required("gamma1", self.gamma1)?,
            ],
            other => return Err(config_error("tilt", format!("unknown tilt `{other}`"))),
        };
        Tilt::from_name(name, &params).map_err(|e| blame("tilt", e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_each_model() {
        let mut gamma = ModelConfig::named("renewal_ts_from_es");
        gamma.interval = Some("gamma".into());
        gamma.shape = Some(2.0);
        gamma.interval_rate = Some(1.0);
        let m: ProcessModel<f64> = gamma.build().unwrap();
        assert_eq!(m.mean_gap(), 2.0);

        let mut tilted = ModelConfig::named("tilted_ts");
        tilted.base = Some("poisson_ts".into());
        tilted.rate = Some(1.0);
        tilted.tilt = Some("linear".into());
        tilted.gamma0 = Some(0.0);
        tilted.gamma1 = Some(1.0);
        assert!(tilted.build::<f64>().unwrap().is_weighted());

        let mut e44 = ModelConfig::named("example44");
        e44.pattern_len = Some(100);
        assert_eq!(e44.build::<f64>().unwrap().landmarks()[..3], [4, 8, 16]);
    }

    #[test]
    fn errors_name_the_field() {
        let field = |cfg: ModelConfig| match cfg.build::<f64>() {
            Err(ModelError::Config { field, .. }) => field,
            other => panic!("expected config error, got {other:?}"),
        };
        assert_eq!(field(ModelConfig::named("hawkes")), "model");
        assert_eq!(field(ModelConfig::named("poisson_ts")), "rate");
        let mut neg = ModelConfig::named("poisson_ts");
        neg.rate = Some(-1.0);
        assert_eq!(field(neg), "rate");
        let mut bad_family = ModelConfig::named("renewal_es");
        bad_family.interval = Some("pareto".into());
        assert_eq!(field(bad_family), "interval");
        let mut bad_tilt = ModelConfig::named("tilted_ts");
        bad_tilt.base = Some("poisson_ts".into());
        bad_tilt.rate = Some(1.0);
        bad_tilt.tilt = Some("cubic".into());
        assert_eq!(field(bad_tilt), "tilt");
    }
}
