//! Service configuration documents.

use std::collections::BTreeMap;
use std::path::Path;

use firm_core::FirmSpec;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Thresholds (and optionally weights) used at one location instead of the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionOverride {
    pub thresholds: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    schema_version: u32,
    #[serde(flatten)]
    spec: FirmSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    regions: BTreeMap<String, RegionOverride>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    spec: FirmSpec,
    labels: Vec<String>,
    regions: BTreeMap<String, FirmSpec>,
}

impl ServiceConfig {
    pub fn new(spec: FirmSpec) -> Self {
        let labels = (0..spec.categories()).map(|i| format!("C{i}")).collect();
        Self {
            spec,
            labels,
            regions: BTreeMap::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
        Self::from_json(&text).map_err(|e| e.context(path.display()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        // the flattened spec hides its own validation errors behind serde's
        // generic message, so check the version and structure in two passes
        let raw: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Input(format!("invalid JSON: {e}")))?;
        match raw.get("schema_version").and_then(serde_json::Value::as_u64) {
            Some(v) if v == u64::from(SCHEMA_VERSION) => {}
            Some(v) => {
                return Err(CliError::Input(format!(
                    "unsupported schema_version {v} (expected {SCHEMA_VERSION})"
                )))
            }
            None => return Err(CliError::Input("missing integer schema_version".into())),
        }
        let doc: ConfigDoc =
            serde_json::from_value(raw).map_err(|e| CliError::Input(format!("invalid config: {e}")))?;
        let labels = match doc.labels {
            Some(l) if l.len() == doc.spec.categories() => l,
            Some(l) => {
                return Err(CliError::Input(format!(
                    "{} labels for {} categories",
                    l.len(),
                    doc.spec.categories()
                )))
            }
            None => (0..doc.spec.categories()).map(|i| format!("C{i}")).collect(),
        };
        let mut regions = BTreeMap::new();
        for (name, r) in doc.regions {
            if r.thresholds.len() != doc.spec.thresholds().len() {
                return Err(CliError::Input(format!(
                    "region {name:?}: {} thresholds, expected {}",
                    r.thresholds.len(),
                    doc.spec.thresholds().len()
                )));
            }
            let weights = r.weights.unwrap_or_else(|| doc.spec.weights().to_vec());
            let spec = FirmSpec::new(r.thresholds, weights, doc.spec.alpha(), doc.spec.a())
                .map_err(|e| CliError::Input(format!("region {name:?}: {e}")))?;
            regions.insert(name, spec);
        }
        Ok(Self {
            spec: doc.spec,
            labels,
            regions,
        })
    }

    pub fn to_json(&self) -> String {
        let regions = self
            .regions
            .iter()
            .map(|(k, s)| {
                (
                    k.clone(),
                    RegionOverride {
                        thresholds: s.thresholds().to_vec(),
                        weights: Some(s.weights().to_vec()),
                    },
                )
            })
            .collect();
        let doc = ConfigDoc {
            schema_version: SCHEMA_VERSION,
            spec: self.spec.clone(),
            labels: Some(self.labels.clone()),
            regions,
        };
        serde_json::to_string_pretty(&doc).expect("config serialises")
    }

    pub fn spec(&self) -> &FirmSpec {
        &self.spec
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn categories(&self) -> usize {
        self.spec.categories()
    }

    /// Spec used at `location`.
    pub fn spec_for(&self, location: &str) -> &FirmSpec {
        self.regions.get(location).unwrap_or(&self.spec)
    }

    /// Same config with every spec (defaults and regions) transformed.
    pub fn map_specs(&self, f: impl Fn(&FirmSpec) -> firm_core::Result<FirmSpec>) -> Result<Self> {
        let mut regions = BTreeMap::new();
        for (k, s) in &self.regions {
            regions.insert(k.clone(), f(s)?);
        }
        Ok(Self {
            spec: f(&self.spec)?,
            labels: self.labels.clone(),
            regions,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const RAIN: &str = r#"{
        "schema_version": 1,
        "thresholds": [50, 100],
        "weights": [1, 4],
        "alpha": 0.75,
        "a": 0,
        "labels": ["light", "heavy", "very heavy"],
        "regions": {"alpine": {"thresholds": [80, 150]}}
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let c = ServiceConfig::from_json(RAIN).unwrap();
        assert_eq!(c.spec().thresholds(), &[50.0, 100.0]);
        assert_eq!(c.labels()[2], "very heavy");
        assert_eq!(c.spec_for("alpine").thresholds(), &[80.0, 150.0]);
        assert_eq!(c.spec_for("alpine").weights(), &[1.0, 4.0]);
        assert_eq!(c.spec_for("coast").thresholds(), &[50.0, 100.0]);
        assert_eq!(ServiceConfig::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn infinite_a() {
        let c = ServiceConfig::from_json(
            r#"{"schema_version":1,"thresholds":[1],"weights":[1],"alpha":0.5,"a":"inf"}"#,
        )
        .unwrap();
        assert!(c.spec().a().is_infinite());
    }

    #[test]
    fn rejects_bad_documents() {
        for bad in [
            r#"{"thresholds":[1],"weights":[1],"alpha":0.5}"#,
            r#"{"schema_version":2,"thresholds":[1],"weights":[1],"alpha":0.5}"#,
            r#"{"schema_version":1,"thresholds":[2,1],"weights":[1,1],"alpha":0.5}"#,
            r#"{"schema_version":1,"thresholds":[1],"weights":[1],"alpha":0.5,"labels":["x"]}"#,
            r#"{"schema_version":1,"thresholds":[1],"weights":[1],"alpha":0.5,"extra":3}"#,
            r#"{"schema_version":1,"thresholds":[1],"weights":[1],"alpha":0.5,"regions":{"r":{"thresholds":[1,2]}}}"#,
            r#"{"schema_version":1,"thresholds":[1],"weights":[1],"alpha":0.5,"a":"big"}"#,
        ] {
            assert!(ServiceConfig::from_json(bad).is_err(), "{bad}");
        }
    }
}
