//! TOML run configuration. Every section is optional; command-line flags
//! take precedence over file values.

use std::fs;
use std::path::Path;

use anyhow::Context;
use graphbo_core::{BoConfig, DomainSpec, KernelVariant, Strategy};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub domain: Option<DomainSpec>,
    pub kernel: KernelSection,
    pub solver: SolverSection,
    pub bo: Option<BoConfig>,
    pub oracle: Option<OracleSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSection {
    pub variant: Option<KernelVariant>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub sigma_k_sq: Option<f64>,
    pub restarts: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub strategy: Option<Strategy>,
    pub beta_sqrt: Option<f64>,
    pub time_limit: Option<f64>,
    pub max_nodes: Option<u64>,
    pub workers: Option<usize>,
    pub gap_tol: Option<f64>,
    pub log_interval: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub name: String,
    #[serde(default)]
    pub params: toml::Table,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_config_parses() {
        let text = r#"
            seed = 4
            [domain]
            size = { fixed = 5 }
            directed = false
            num_labels = 2
            num_features = 2
            degree_caps = [4, 4]
            [kernel]
            variant = "essp"
            [solver]
            strategy = "enumerate"
            time_limit = 10.0
            [bo]
            iterations = 3
            initial_samples = 4
            [oracle]
            name = "path_profile"
            params = { target = [5.0, 8.0, 12.0] }
        "#;
        let cfg: RunConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.seed, Some(4));
        assert_eq!(cfg.domain.unwrap().num_labels, 2);
        assert_eq!(cfg.bo.unwrap().iterations, 3);
        assert_eq!(cfg.solver.strategy, Some(Strategy::Enumerate));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("sed = 1").is_err());
        assert!(toml::from_str::<RunConfig>("[solver]\ntimelimit = 3").is_err());
        assert!(toml::from_str::<RunConfig>("[bo]\niters = 3").is_err());
    }
}
