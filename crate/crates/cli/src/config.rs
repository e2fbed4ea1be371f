//! Run configuration: command-line flags override the TOML file, which
//! overrides built-in defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use liouville_dmd::gram::{DEFAULT_JITTER_REL, DEFAULT_REL_FLOOR};
use liouville_dmd::{KernelFamily, KernelSpace, QuadratureRule, SpacePair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Singular,
    Eigen,
}

/// Every field optional so that unset values fall through to the next layer.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Decomposition to fit.
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Kernel family: exp_dot or gauss_rbf.
    #[arg(long)]
    pub family: Option<KernelFamily>,
    /// Domain kernel parameter.
    #[arg(long)]
    pub mu1: Option<f64>,
    /// Range kernel parameter.
    #[arg(long)]
    pub mu2: Option<f64>,
    /// Quadrature rule: simpson or trapezoid.
    #[arg(long)]
    pub quadrature: Option<QuadratureRule>,
    /// Relative eigenvalue floor for Gram orthonormalization.
    #[arg(long)]
    pub rel_floor: Option<f64>,
    /// Relative jitter for regularized Gram solves.
    #[arg(long)]
    pub jitter_rel: Option<f64>,
    /// Number of singular triplets to keep.
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Snapshot window length for ingest.
    #[arg(long)]
    pub window: Option<usize>,
    /// Snapshot window stride for ingest.
    #[arg(long)]
    pub stride: Option<usize>,
    /// Random seed for simulation.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    /// `self` over `lower`, field by field.
    pub fn over(self, lower: RunConfig) -> RunConfig {
        RunConfig {
            method: self.method.or(lower.method),
            family: self.family.or(lower.family),
            mu1: self.mu1.or(lower.mu1),
            mu2: self.mu2.or(lower.mu2),
            quadrature: self.quadrature.or(lower.quadrature),
            rel_floor: self.rel_floor.or(lower.rel_floor),
            jitter_rel: self.jitter_rel.or(lower.jitter_rel),
            top_k: self.top_k.or(lower.top_k),
            window: self.window.or(lower.window),
            stride: self.stride.or(lower.stride),
            seed: self.seed.or(lower.seed),
        }
    }

    pub fn defaults() -> RunConfig {
        RunConfig {
            method: Some(Method::Singular),
            family: Some(KernelFamily::ExpDot),
            mu1: Some(1.0 / 1000.0),
            mu2: Some(1.0 / 999.0),
            quadrature: Some(QuadratureRule::Simpson),
            rel_floor: Some(DEFAULT_REL_FLOOR),
            jitter_rel: Some(DEFAULT_JITTER_REL),
            top_k: None,
            window: None,
            stride: Some(1),
            seed: Some(0),
        }
    }

    /// Flags over the optional file over defaults.
    pub fn resolve(flags: RunConfig, file: Option<&Path>) -> Result<RunConfig, String> {
        let from_file = match file {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        Ok(flags.over(from_file).over(RunConfig::defaults()))
    }

    pub fn method(&self) -> Method {
        self.method.unwrap_or(Method::Singular)
    }

    pub fn rule(&self) -> QuadratureRule {
        self.quadrature.unwrap_or_default()
    }

    pub fn pair(&self) -> Result<SpacePair, String> {
        let family = self.family.unwrap_or(KernelFamily::ExpDot);
        let (mu1, mu2) = (self.mu1.unwrap_or(1e-3), self.mu2.unwrap_or(1.0 / 999.0));
        let space = |mu| KernelSpace::new(family, mu).map_err(|e| e.to_string());
        let pair = SpacePair::new(space(mu1)?, space(mu2)?).map_err(|e| e.to_string())?;
        if self.method() == Method::Eigen && !pair.check_embedding() {
            return Err(format!(
                "the eigen method needs the exp_dot family with mu1 < mu2 (got {family}, mu1 = {mu1}, mu2 = {mu2})"
            ));
        }
        Ok(pair)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let flags = RunConfig { mu1: Some(0.2), ..Default::default() };
        let file = RunConfig { mu1: Some(0.3), mu2: Some(0.9), ..Default::default() };
        let eff = flags.over(file).over(RunConfig::defaults());
        assert_eq!(eff.mu1, Some(0.2));
        assert_eq!(eff.mu2, Some(0.9));
        assert_eq!(eff.quadrature, Some(QuadratureRule::Simpson));
    }

    #[test]
    fn parses_toml() {
        let cfg: RunConfig = toml::from_str("method = \"eigen\"\nfamily = \"exp_dot\"\nmu1 = 0.1\nmu2 = 0.3\n").unwrap();
        assert_eq!(cfg.method, Some(Method::Eigen));
        assert!(cfg.pair().unwrap().check_embedding());
        assert!(toml::from_str::<RunConfig>("bogus = 1").is_err());
    }

    #[test]
    fn eigen_requires_nesting() {
        let cfg = RunConfig { method: Some(Method::Eigen), mu1: Some(1.0), mu2: Some(0.5), ..RunConfig::defaults() };
        assert!(cfg.pair().is_err());
    }
}
