//! Declarative run configuration read from TOML; command-line flags override
//! individual fields.

use std::path::{Path, PathBuf};

use anyhow::Context;
use countmon::experiments::Scenario;
use countmon::ModelSpec;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub delimiter: Option<char>,
    pub quantile_cache: Option<PathBuf>,
    pub model: Option<ModelSpec>,
    pub monitor: MonitorSection,
    pub quantile: QuantileSection,
    pub experiment: ExperimentSection,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorSection {
    pub m: Option<usize>,
    pub horizon: Option<f64>,
    pub alpha: Option<f64>,
    pub c_alpha: Option<f64>,
    pub v_m: Option<usize>,
    /// Fixed lag stride; unset keeps the adaptive rule.
    pub stride: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantileSection {
    pub replications: Option<usize>,
    pub points_per_unit: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub replications: Option<usize>,
    pub ms: Option<Vec<usize>>,
    pub k_star_factor: Option<f64>,
    pub burnin: Option<usize>,
    pub scenarios: Option<Vec<Scenario>>,
}

pub fn load(path: Option<&Path>) -> anyhow::Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_file_parses() {
        let text = r#"
seed = 7
delimiter = ";"

[model]
family = "ingarch"
p = 1
q = 1

[monitor]
m = 200
c_alpha = 1.8

[experiment]
replications = 10
ms = [200]

[[experiment.scenarios]]
id = "a"
theta0 = [1.0, 0.2, 0.15]
theta1 = [1.0, 0.2, 0.5]
"#;
        let cfg: FileConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.delimiter, Some(';'));
        assert_eq!(cfg.model, Some(ModelSpec::Ingarch { p: 1, q: 1 }));
        assert_eq!(cfg.monitor.m, Some(200));
        assert_eq!(cfg.experiment.scenarios.unwrap()[0].id, "a");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("sede = 3").is_err());
    }
}
