//! The run configuration: one JSON document for every command.

use relay_ldpc::channel::RelayChannelParams;
use relay_ldpc::optimizer::DesignConfig;
use relay_ldpc::simulator::Stage1Llr;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub channel: RelayChannelParams,
    #[serde(default)]
    pub design: DesignConfig,
    #[serde(default)]
    pub code: CodeKnobs,
    #[serde(default)]
    pub simulation: SimKnobs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodeKnobs {
    pub n: usize,
    pub seed: u64,
}

impl Default for CodeKnobs {
    fn default() -> Self {
        Self { n: 4096, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimKnobs {
    pub blocks: usize,
    pub trials: usize,
    pub max_bp_iters: usize,
    pub seed: u64,
    pub genie_relay: bool,
    pub genie_bin: bool,
    pub noise_scales: Vec<f64>,
    pub stage1_llr: Stage1Llr,
}

impl Default for SimKnobs {
    fn default() -> Self {
        Self {
            blocks: 4,
            trials: 100,
            max_bp_iters: relay_ldpc::simulator::DEFAULT_MAX_ITERS,
            seed: 1,
            genie_relay: false,
            genie_bin: false,
            noise_scales: vec![1.0],
            stage1_llr: Stage1Llr::default(),
        }
    }
}

impl RunConfig {
    /// Parses and validates; the message names the file and, for syntax and
    /// schema errors, the line and column.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let config: Self = serde_json::from_str(text).map_err(|e| e.to_string())?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.design.validate().map_err(|e| format!("design: {e}"))?;
        if self.code.n < 16 {
            return Err(format!("code.n = {} is too short", self.code.n));
        }
        let sim = &self.simulation;
        if sim.blocks < 2 {
            return Err(format!("simulation.blocks = {} (need at least 2)", sim.blocks));
        }
        if sim.trials == 0 || sim.max_bp_iters == 0 {
            return Err("simulation.trials and simulation.max_bp_iters must be positive".into());
        }
        check_noise_scales(&sim.noise_scales)
    }
}

pub fn check_noise_scales(scales: &[f64]) -> Result<(), String> {
    if scales.is_empty() {
        return Err("noise scales are empty".into());
    }
    match scales.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        Some(s) => Err(format!("noise scale {s} is not a finite non-negative number")),
        None => Ok(()),
    }
}

/// `"0.5,1.0,2.0"` to a list of scales.
pub fn parse_noise_scales(text: &str) -> Result<Vec<f64>, String> {
    let scales = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| format!("noise scale {s:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    check_noise_scales(&scales)?;
    Ok(scales)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = RunConfig::parse(r#"{"channel": {"p": 4, "p1": 1, "n1": 1, "n2": 1}}"#).unwrap();
        assert_eq!(c.code, CodeKnobs::default());
        assert_eq!(c.simulation.noise_scales, vec![1.0]);
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_position() {
        let text = "{\n  \"channel\": {\"p\": 4, \"p1\": 1, \"n1\": 1, \"n2\": 1},\n  \"sim\": {}\n}";
        let err = RunConfig::parse(text).unwrap_err();
        assert!(err.contains("unknown field") && err.contains("line 3"), "{err}");
        let nested = r#"{"channel": {"p": 4, "p1": 1, "n1": 1, "n2": 1}, "code": {"n": 64, "girth": 6}}"#;
        assert!(RunConfig::parse(nested).is_err());
    }

    #[test]
    fn semantic_checks() {
        let base = r#"{"channel": {"p": 4, "p1": 1, "n1": 1, "n2": 1}, "simulation": {"blocks": 1}}"#;
        assert!(RunConfig::parse(base).unwrap_err().contains("blocks"));
        assert_eq!(parse_noise_scales("0.5, 1,2").unwrap(), vec![0.5, 1.0, 2.0]);
        assert!(parse_noise_scales("0.5,-1").is_err());
        assert!(parse_noise_scales("").is_err());
    }
}
