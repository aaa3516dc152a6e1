//! Experiment configuration, read from JSON.

use std::path::{Path, PathBuf};

use omks_core::{BudgetScope, KernelSpec, LambdaMode, RemovalMode};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    MomdH,
    MomdS,
    Raker,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::MomdH => "momd_h",
            Algorithm::MomdS => "momd_s",
            Algorithm::Raker => "raker",
        }
    }

    pub fn default_loss(self) -> LossKind {
        match self {
            Algorithm::MomdS => LossKind::Logistic,
            _ => LossKind::Hinge,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Hinge,
    Logistic,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Hinge => "hinge",
            LossKind::Logistic => "logistic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaRule {
    /// λ = c·U/√B for each c in `lambda_scale`.
    Experimental,
    Theoretical,
}

impl LambdaRule {
    pub fn mode(self, scale: f64) -> LambdaMode {
        match self {
            LambdaRule::Experimental => LambdaMode::Scaled(scale),
            LambdaRule::Theoretical => LambdaMode::Theoretical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Removal {
    Half,
    Restart,
}

impl From<Removal> for RemovalMode {
    fn from(r: Removal) -> Self {
        match r {
            Removal::Half => RemovalMode::Half,
            Removal::Restart => RemovalMode::Restart,
        }
    }
}

/// What `budget` counts for `momd_h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// Shared by the reservoir archive and all kernel buffers.
    Total,
    /// Size of each kernel's own buffer.
    PerKernel,
}

impl From<Scope> for BudgetScope {
    fn from(s: Scope) -> Self {
        match s {
            Scope::Total => BudgetScope::Total,
            Scope::PerKernel => BudgetScope::PerKernel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    /// LIBSVM file.
    Path(PathBuf),
    /// Adversarial stream for a learner with budget `budget`.
    Lowerbound {
        budget: usize,
        rounds: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub algorithm: Algorithm,
    /// Defaults to hinge, or logistic for `momd_s`.
    #[serde(default)]
    pub loss: Option<LossKind>,
    #[serde(default = "default_sigmas")]
    pub sigmas: Vec<f64>,
    /// Polynomial kernels appended after the Gaussians.
    #[serde(default)]
    pub poly_degrees: Vec<u32>,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_scope")]
    pub budget_scope: Scope,
    #[serde(default = "default_reservoir")]
    pub reservoir_capacity: usize,
    /// Ball radius; √B when absent.
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default = "default_lambda_scale")]
    pub lambda_scale: Vec<f64>,
    #[serde(default = "default_lambda_rule")]
    pub lambda_rule: LambdaRule,
    /// Random features per kernel.
    #[serde(default = "default_features")]
    pub features: usize,
    /// Step sizes before division by √T.
    #[serde(default = "default_raker_eta")]
    pub raker_eta: Vec<f64>,
    #[serde(default = "default_raker_reg")]
    pub raker_reg: Vec<f64>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_removal")]
    pub removal: Removal,
    /// Min-max scale features to [0, 1] before streaming.
    #[serde(default = "default_true")]
    pub normalize: bool,
    /// Stream length used to size the reservoir archive; the dataset size when absent.
    #[serde(default)]
    pub horizon: Option<u64>,
    /// CSV destination; stdout when absent.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_sigmas() -> Vec<f64> {
    vec![0.25, 1.0, 4.0, 16.0, 64.0]
}
fn default_budget() -> usize {
    400
}
fn default_scope() -> Scope {
    Scope::Total
}
fn default_reservoir() -> usize {
    10
}
fn default_lambda_scale() -> Vec<f64> {
    vec![2.0, 1.0, 0.5]
}
fn default_lambda_rule() -> LambdaRule {
    LambdaRule::Experimental
}
fn default_features() -> usize {
    400
}
fn default_raker_eta() -> Vec<f64> {
    (-3..=3).map(|e| 10f64.powi(e)).collect()
}
fn default_raker_reg() -> Vec<f64> {
    vec![0.05, 0.005, 0.0005]
}
fn default_repeats() -> usize {
    10
}
fn default_removal() -> Removal {
    Removal::Half
}
fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    /// Defaults everywhere except the two required fields.
    pub fn new(dataset: DatasetSpec, algorithm: Algorithm) -> Self {
        Self {
            dataset,
            algorithm,
            loss: None,
            sigmas: default_sigmas(),
            poly_degrees: Vec::new(),
            budget: default_budget(),
            budget_scope: default_scope(),
            reservoir_capacity: default_reservoir(),
            radius: None,
            lambda_scale: default_lambda_scale(),
            lambda_rule: default_lambda_rule(),
            features: default_features(),
            raker_eta: default_raker_eta(),
            raker_reg: default_raker_reg(),
            repeats: default_repeats(),
            seed: 0,
            removal: default_removal(),
            normalize: true,
            horizon: None,
            output: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            BenchError::Config(m) => BenchError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn loss(&self) -> LossKind {
        self.loss.unwrap_or(self.algorithm.default_loss())
    }

    pub fn kernels(&self) -> Vec<KernelSpec> {
        let mut ks = KernelSpec::gaussian_grid(&self.sigmas);
        let n = ks.len();
        ks.extend(
            self.poly_degrees
                .iter()
                .enumerate()
                .map(|(i, p)| KernelSpec::polynomial(n + i, *p)),
        );
        ks
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.sigmas.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return bad(format!("sigmas must be positive, got {:?}", self.sigmas));
        }
        if self.poly_degrees.contains(&0) {
            return bad("poly_degrees must be positive".into());
        }
        if self.sigmas.is_empty() && self.poly_degrees.is_empty() {
            return bad("at least one kernel is required".into());
        }
        if self.repeats == 0 {
            return bad("repeats must be positive".into());
        }
        if self.radius.is_some_and(|u| !(u > 0.0 && u.is_finite())) {
            return bad("radius must be positive".into());
        }
        let grids = [
            ("lambda_scale", &self.lambda_scale),
            ("raker_eta", &self.raker_eta),
            ("raker_reg", &self.raker_reg),
        ];
        for (name, g) in grids {
            if g.is_empty() {
                return bad(format!("{name} must not be empty"));
            }
            if g.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return bad(format!("{name} must be finite and non-negative, got {g:?}"));
            }
        }
        if self.lambda_scale.contains(&0.0) {
            return bad("lambda_scale entries must be positive".into());
        }
        match (self.algorithm, self.loss()) {
            (Algorithm::MomdS, LossKind::Hinge) => {
                return bad("momd_s needs a smooth loss (logistic)".into())
            }
            (Algorithm::MomdH, LossKind::Logistic) => {
                return bad("momd_h is defined for the hinge loss only".into())
            }
            _ => {}
        }
        if self.algorithm == Algorithm::Raker && !self.poly_degrees.is_empty() {
            return bad("raker supports Gaussian kernels only".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let cfg = ExperimentConfig::from_json(
            r#"{"dataset": {"path": "data/mushrooms"}, "algorithm": "momd_h"}"#,
        )
        .unwrap();
        assert_eq!(
            cfg,
            ExperimentConfig::new(DatasetSpec::Path("data/mushrooms".into()), Algorithm::MomdH)
        );
        assert_eq!(cfg.loss(), LossKind::Hinge);
        assert_eq!(cfg.kernels().len(), 5);
        assert_eq!(cfg.raker_eta.len(), 7);
    }

    #[test]
    fn generator_dataset() {
        let cfg = ExperimentConfig::from_json(
            r#"{"dataset": {"lowerbound": {"budget": 5, "rounds": 100, "seed": 1}},
                "algorithm": "momd_s", "poly_degrees": [2], "sigmas": []}"#,
        )
        .unwrap();
        assert_eq!(cfg.loss(), LossKind::Logistic);
        assert_eq!(cfg.kernels(), vec![KernelSpec::polynomial(0, 2)]);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            r#"{"dataset": {"path": "x"}, "algorithm": "momd_h", "typo": 1}"#,
            r#"{"dataset": {"path": "x"}, "algorithm": "svm"}"#,
            r#"{"dataset": {"path": "x"}, "algorithm": "momd_s", "loss": "hinge"}"#,
            r#"{"dataset": {"path": "x"}, "algorithm": "momd_h", "sigmas": [-1]}"#,
            r#"{"dataset": {"path": "x"}, "algorithm": "momd_h", "repeats": 0}"#,
            r#"{"dataset": {"path": "x"}, "algorithm": "momd_h", "lambda_scale": []}"#,
            r#"{"algorithm": "momd_h"}"#,
        ] {
            assert!(
                matches!(
                    ExperimentConfig::from_json(text),
                    Err(BenchError::Config(_))
                ),
                "{text}"
            );
        }
    }
}
