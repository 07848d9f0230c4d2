//! Sweep configuration, read from JSON or TOML.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::compare::{ComparisonPair, LinkModel, DEFAULT_ATTENUATION_DB_PER_KM};
use crate::cv::Placement;
use crate::error::{Error, Result};
use crate::evaluate::{FreeParam, RateSettings, SourcePolicy};
use crate::optimize::{linspace, logspace};
use crate::rate::Protocol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisName {
    Eta,
    DistanceKm,
    NTh,
    Sigma2,
    SqueezingDb,
}

impl AxisName {
    pub fn column(self) -> &'static str {
        match self {
            AxisName::Eta => "eta",
            AxisName::DistanceKm => "distance_km",
            AxisName::NTh => "n_th",
            AxisName::Sigma2 => "sigma2",
            AxisName::SqueezingDb => "squeezing_db",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

/// A grid axis: either `min`/`max`/`count` with a scale, or explicit `values`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub name: AxisName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default)]
    pub scale: Scale,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl AxisSpec {
    pub fn range(name: AxisName, min: f64, max: f64, count: usize, scale: Scale) -> Self {
        AxisSpec { name, min: Some(min), max: Some(max), count: Some(count), scale, values: None }
    }

    pub fn list(name: AxisName, values: Vec<f64>) -> Self {
        AxisSpec { name, min: None, max: None, count: None, scale: Scale::Linear, values: Some(values) }
    }

    /// Grid points, after validation.
    pub fn points(&self) -> Result<Vec<f64>> {
        let name = self.name.column();
        let points = match (&self.values, self.min, self.max, self.count) {
            (Some(values), None, None, None) => {
                if values.is_empty() {
                    return Err(Error::Config(format!("axis {name}: empty value list")));
                }
                values.clone()
            }
            (None, Some(min), Some(max), Some(count)) => {
                if count < 2 {
                    return Err(Error::Config(format!("axis {name}: count must be >= 2, got {count}")));
                }
                if !(min.is_finite() && max.is_finite()) || min > max {
                    return Err(Error::Config(format!("axis {name}: need finite min <= max, got [{min}, {max}]")));
                }
                match self.scale {
                    Scale::Linear => linspace(min, max, count),
                    Scale::Log if min > 0.0 => logspace(min, max, count),
                    Scale::Log => return Err(Error::Config(format!("axis {name}: log scale needs min > 0"))),
                }
            }
            _ => {
                return Err(Error::Config(format!("axis {name}: give either `values` or all of `min`, `max`, `count`")))
            }
        };
        for &v in &points {
            check_axis_value(self.name, v)?;
        }
        Ok(points)
    }
}

fn check_axis_value(name: AxisName, v: f64) -> Result<()> {
    let ok = v.is_finite()
        && match name {
            AxisName::Eta => v > 0.0 && v <= 1.0,
            AxisName::DistanceKm | AxisName::NTh | AxisName::Sigma2 | AxisName::SqueezingDb => v >= 0.0,
        };
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!("axis {}: value {v} out of range", name.column())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    #[serde(default = "default_compare_cv")]
    pub cv: Protocol,
    #[serde(default = "default_compare_dv")]
    pub dv: Protocol,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig { cv: default_compare_cv(), dv: default_compare_dv() }
    }
}

fn default_compare_cv() -> Protocol {
    Protocol::SqzHom
}

fn default_compare_dv() -> Protocol {
    Protocol::SixState
}

fn default_protocols() -> Vec<Protocol> {
    vec![Protocol::Bb84, Protocol::SixState, Protocol::SqzHom]
}

fn default_k0() -> f64 {
    1e-3
}

fn default_attenuation() -> f64 {
    DEFAULT_ATTENUATION_DB_PER_KM
}

fn default_beta() -> f64 {
    1.0
}

/// Everything a sweep or comparison run needs. Parameters that are not grid
/// axes take the fixed values given here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axes: Vec<AxisSpec>,
    #[serde(default = "default_protocols")]
    pub protocols: Vec<Protocol>,
    #[serde(default)]
    pub source: SourcePolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_km: Option<f64>,
    #[serde(default)]
    pub n_th: f64,
    #[serde(default)]
    pub sigma2: f64,
    /// Fixed noisy-preprocessing flip probability; optimized when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    /// Fixed trusted noise; optimized when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi_b: Option<f64>,
    #[serde(default = "default_k0")]
    pub k0: f64,
    #[serde(default = "default_attenuation")]
    pub attenuation_db_per_km: f64,
    #[serde(default)]
    pub placement: Placement,
    /// Reconciliation efficiency; only perfect reconciliation is modelled.
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub compare: CompareConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl SweepConfig {
    /// Parse by file extension (`.json` or `.toml`); other extensions try
    /// JSON, then TOML.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        let cfg = match ext.as_deref() {
            Some("json") => Self::from_json(&text)?,
            Some("toml") => Self::from_toml(&text)?,
            _ => Self::from_json(&text).or_else(|_| Self::from_toml(&text))?,
        };
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SweepConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SweepConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for axis in &self.axes {
            if !seen.insert(axis.name) {
                return Err(Error::Config(format!("axis {} given twice", axis.name.column())));
            }
            axis.points()?;
        }
        let link_axes = seen.contains(&AxisName::Eta) as u8 + seen.contains(&AxisName::DistanceKm) as u8;
        let link_fixed = self.eta.is_some() as u8 + self.distance_km.is_some() as u8;
        if link_axes > 1 || link_fixed > 1 {
            return Err(Error::Config("give the link as either eta or distance_km, not both".into()));
        }
        if let Some(eta) = self.eta {
            check_axis_value(AxisName::Eta, eta)?;
        }
        if let Some(d) = self.distance_km {
            check_axis_value(AxisName::DistanceKm, d)?;
        }
        check_axis_value(AxisName::NTh, self.n_th)?;
        check_axis_value(AxisName::Sigma2, self.sigma2)?;
        if self.protocols.is_empty() {
            return Err(Error::Config("protocol list is empty".into()));
        }
        if !(self.k0 > 0.0) || !self.k0.is_finite() {
            return Err(Error::Config(format!("k0 = {} must be > 0", self.k0)));
        }
        if !(self.attenuation_db_per_km > 0.0) || !self.attenuation_db_per_km.is_finite() {
            return Err(Error::Config(format!("attenuation {} must be > 0", self.attenuation_db_per_km)));
        }
        if self.beta != 1.0 {
            return Err(Error::Config(format!("beta = {} unsupported: reconciliation is perfect", self.beta)));
        }
        if let Some(q) = self.q {
            if !(0.0..=0.5).contains(&q) {
                return Err(Error::Config(format!("q = {q} outside [0, 1/2]")));
            }
        }
        if let Some(xi) = self.xi_b {
            if !(xi >= 0.0) || !xi.is_finite() {
                return Err(Error::Config(format!("xi_b = {xi} must be >= 0")));
            }
        }
        match self.source {
            SourcePolicy::Mu(mu) if !(mu >= 1.0) || !mu.is_finite() => {
                return Err(Error::Config(format!("source mu = {mu} must be >= 1")))
            }
            SourcePolicy::SqueezingDb(db) if !(db >= 0.0) || !db.is_finite() => {
                return Err(Error::Config(format!("squeezing {db} dB must be >= 0")))
            }
            SourcePolicy::OptimizeVa { mu_max } if !(mu_max >= 1.0) || !mu_max.is_finite() => {
                return Err(Error::Config(format!("mu_max = {mu_max} must be >= 1")))
            }
            _ => {}
        }
        if self.compare.cv.is_dv() || !self.compare.dv.is_dv() {
            return Err(Error::Config("compare needs a CV protocol as `cv` and a DV protocol as `dv`".into()));
        }
        Ok(())
    }

    pub fn axis(&self, name: AxisName) -> Option<&AxisSpec> {
        self.axes.iter().find(|a| a.name == name)
    }

    pub fn settings(&self) -> RateSettings {
        RateSettings {
            source: self.source,
            placement: self.placement,
            flip: FreeParam::from_option(self.q),
            trusted_noise: FreeParam::from_option(self.xi_b),
        }
    }

    pub fn comparison_pair(&self) -> ComparisonPair {
        let settings = self.settings();
        ComparisonPair { cv: self.compare.cv, cv_settings: settings, dv: self.compare.dv, dv_settings: settings }
    }

    /// Fixed transmissivity when the link is not a grid axis; lossless by
    /// default.
    pub fn fixed_eta(&self) -> Result<f64> {
        match (self.eta, self.distance_km) {
            (Some(eta), _) => Ok(eta),
            (None, Some(d)) => Ok(LinkModel::new(self.attenuation_db_per_km, d)?.eta()),
            (None, None) => Ok(1.0),
        }
    }

    /// Canonical JSON used for hashing.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_and_json_agree() {
        let toml = r#"
            protocols = ["bb84", "six_state", "sqz_hom"]
            sigma2 = 0.01
            source = { squeezing_db = 15.0 }
            [[axes]]
            name = "distance_km"
            min = 0.0
            max = 100.0
            count = 11
        "#;
        let json = r#"{
            "protocols": ["bb84", "six_state", "sqz_hom"],
            "sigma2": 0.01,
            "source": {"squeezing_db": 15.0},
            "axes": [{"name": "distance_km", "min": 0.0, "max": 100.0, "count": 11}]
        }"#;
        assert_eq!(SweepConfig::from_toml(toml).unwrap(), SweepConfig::from_json(json).unwrap());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let json = r#"{"axes": [], "bogus": 1}"#;
        assert!(matches!(SweepConfig::from_json(json), Err(Error::Config(_))));
        let json = r#"{"axes": [{"name": "eta", "values": [0.5], "step": 2}]}"#;
        assert!(SweepConfig::from_json(json).is_err());
    }

    #[test]
    fn axis_validation() {
        let bad = [
            r#"{"axes": [{"name": "eta", "min": 0.1, "max": 0.9, "count": 1}]}"#,
            r#"{"axes": [{"name": "n_th", "min": 0.0, "max": 1.0, "count": 5, "scale": "log"}]}"#,
            r#"{"axes": [{"name": "eta", "min": 0.1, "max": 1.5, "count": 3}]}"#,
            r#"{"axes": [{"name": "eta", "values": [0.5]}, {"name": "distance_km", "values": [1.0]}]}"#,
            r#"{"axes": [{"name": "eta", "values": [0.5]}, {"name": "eta", "values": [0.6]}]}"#,
            r#"{"axes": [], "beta": 0.95}"#,
            r#"{"axes": [], "compare": {"cv": "bb84"}}"#,
        ];
        for text in bad {
            assert!(SweepConfig::from_json(text).is_err(), "{text}");
        }
        let ok = SweepConfig::from_json(
            r#"{"axes": [{"name": "n_th", "min": 1e-3, "max": 1.0, "count": 4, "scale": "log"}]}"#,
        )
        .unwrap();
        let pts = ok.axes[0].points().unwrap();
        assert_eq!(pts.len(), 4);
        assert_eq!(pts[3], 1.0);
    }

    #[test]
    fn defaults() {
        let cfg = SweepConfig::from_json(r#"{"axes": []}"#).unwrap();
        assert_eq!(cfg.k0, 1e-3);
        assert_eq!(cfg.attenuation_db_per_km, 0.2);
        assert_eq!(cfg.fixed_eta().unwrap(), 1.0);
        assert_eq!(cfg.source, SourcePolicy::default());
        assert_eq!(cfg.comparison_pair().dv, Protocol::SixState);
    }
}
