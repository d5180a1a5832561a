use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dist::ServiceSpec;
use crate::error::{Error, Result};

use super::grid::RunSettings;

/// Reads a JSON document, or `None` when no path is given.
pub fn read_config<T: DeserializeOwned>(path: Option<&Path>) -> Result<Option<T>> {
    let Some(path) = path else { return Ok(None) };
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map(Some).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioGrid {
    #[serde(rename = "K_list", default = "default_k_list")]
    pub k_list: Vec<usize>,
    #[serde(default = "default_lambdas")]
    pub lambda_list: Vec<f64>,
    #[serde(default = "ServiceSpec::paper_grid")]
    pub dists: Vec<ServiceSpec>,
    #[serde(default = "default_des_events")]
    pub des_events: u64,
    #[serde(default = "default_grid_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub settings: RunSettings,
}

/// `2^i − 1` for `i` in 2..=12.
fn default_k_list() -> Vec<usize> {
    (2..=12).map(|i| (1usize << i) - 1).collect()
}

fn default_lambdas() -> Vec<f64> {
    vec![0.1, 0.5, 0.95]
}

fn default_des_events() -> u64 {
    100_000
}

fn default_grid_trials() -> usize {
    5
}

impl Default for ScenarioGrid {
    fn default() -> Self {
        Self {
            k_list: default_k_list(),
            lambda_list: default_lambdas(),
            dists: ServiceSpec::paper_grid(),
            des_events: default_des_events(),
            trials: default_grid_trials(),
            seed: None,
            settings: RunSettings::default(),
        }
    }
}

impl ScenarioGrid {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.k_list.is_empty() || self.lambda_list.is_empty() || self.dists.is_empty() {
            return bad("K_list, lambda_list and dists must be nonempty");
        }
        if self.trials == 0 {
            return bad("trials must be >= 1");
        }
        self.settings.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityConfig {
    #[serde(default = "default_sweep")]
    pub lambda_list: Vec<f64>,
    #[serde(default = "default_sweep_trials")]
    pub trials: usize,
    #[serde(default = "default_sweep_dist")]
    pub dist: ServiceSpec,
    #[serde(rename = "K", default = "default_sweep_k")]
    pub k: usize,
    #[serde(default = "default_des_events")]
    pub des_events: u64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub settings: RunSettings,
}

/// 0.1, 0.2, …, 0.9.
fn default_sweep() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

fn default_sweep_trials() -> usize {
    100
}

fn default_sweep_dist() -> ServiceSpec {
    ServiceSpec::PhaseTypeCoupled
}

fn default_sweep_k() -> usize {
    31
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self {
            lambda_list: default_sweep(),
            trials: default_sweep_trials(),
            dist: default_sweep_dist(),
            k: default_sweep_k(),
            des_events: default_des_events(),
            seed: None,
            settings: RunSettings::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_defaults() {
        let g: ScenarioGrid = serde_json::from_str("{}").unwrap();
        assert_eq!(g, ScenarioGrid::default());
        assert_eq!(g.k_list.first(), Some(&3));
        assert_eq!(g.k_list.last(), Some(&4095));
        assert_eq!(g.k_list.len(), 11);
        assert_eq!(g.settings.shots, 10_000);
        assert_eq!(g.trials, 5);
    }

    #[test]
    fn grid_fields_parse() {
        let g: ScenarioGrid = serde_json::from_str(
            r#"{"K_list":[3,7],"lambda_list":[0.2],"dists":[{"type":"uniform","lo":0.5,"hi":1.5}],
                "shots":500,"trials":2,"seed":9,"engine":"traced","schedule":"paper","rejection":true,"T":40}"#,
        )
        .unwrap();
        assert_eq!(g.k_list, vec![3, 7]);
        assert_eq!(g.seed, Some(9));
        assert_eq!(g.settings.t_slices, 40);
        assert!(g.settings.rejection);
        assert!(serde_json::from_str::<ScenarioGrid>(r#"{"K":3}"#).is_err());
    }

    #[test]
    fn sweep_defaults() {
        let s = SensitivityConfig::default();
        assert_eq!(s.lambda_list.len(), 9);
        assert_eq!(s.lambda_list[8], 0.9);
        assert_eq!(s.trials, 100);
    }

    #[test]
    fn empty_lists_rejected() {
        let g = ScenarioGrid { k_list: vec![], ..Default::default() };
        assert!(matches!(g.validate(), Err(Error::Config(_))));
    }
}
