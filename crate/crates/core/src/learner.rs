//! Types shared by every online learner in the crate.

use crate::error::Result;
use crate::sparse::SparseVec;
use crate::store::ExampleId;

/// sign with sign(0) = +1.
pub fn sign(u: f64) -> f64 {
    if u >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// f_{t,i}(x) for every candidate kernel.
    pub per_kernel: Vec<f64>,
    /// Σ_i p_{t,i} f_{t,i}(x).
    pub aggregate: f64,
    pub label: f64,
}

/// How one kernel's hypothesis was updated in a round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Branch {
    /// Zero (sub)gradient: only the feasibility projection ran.
    NoGradient,
    /// A stored example close to x stood in for it; buffer unchanged.
    Proxy { anchor: ExampleId, distance: f64 },
    /// Bernoulli-sampled step. `removal` is set when half the buffer was dropped first.
    Sampled {
        probability: f64,
        accepted: bool,
        removal: bool,
    },
    /// Dense parametric step (random-feature baseline).
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelStep {
    /// f_{t,i}(x) before the update.
    pub value: f64,
    /// Loss fed to the expert aggregator for this kernel.
    pub expert_loss: f64,
    /// Squared RKHS norm of the gradient correction used for sampling.
    pub gap_sq: f64,
    pub branch: Branch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    /// 1-based.
    pub round: u64,
    pub prediction: f64,
    pub predicted_label: f64,
    pub label: f64,
    pub mistake: bool,
    /// Task loss of the aggregate prediction.
    pub loss: f64,
    pub kernels: Vec<KernelStep>,
}

/// End-of-run quantities reported next to accuracy.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Removal operations per buffer (one per kernel, or a single shared one).
    pub removals: Vec<usize>,
    /// Removal-count reference quantity per buffer, same indexing as `removals`.
    pub removal_bound: Vec<f64>,
    /// Σ_t ‖∇_{t,i} − ∇̂_{t,i}‖² over violated rounds, per kernel (hinge learner only).
    pub alignment_proxy: Vec<f64>,
    /// Examples in the reservoir archive.
    pub archive_size: usize,
    /// Whether the reservoir hit its hard cap.
    pub archive_frozen: bool,
    /// Σ_t task loss of the aggregate prediction.
    pub cum_loss: f64,
    /// Examples currently held in memory.
    pub live_examples: usize,
}

pub trait OnlineLearner {
    fn predict(&self, x: &SparseVec) -> Prediction;

    /// Predicts on `x`, then learns from the revealed label `y`.
    fn update(&mut self, x: &SparseVec, y: f64) -> Result<RoundRecord>;

    fn diagnostics(&self) -> Diagnostics;

    /// Human-readable descriptions of broken budget or norm invariants; empty when healthy.
    fn budget_violations(&self) -> Vec<String>;

    /// Largest relative gap between cached and recomputed squared norms.
    fn norm_drift(&self) -> f64 {
        0.0
    }
}

/// λ rule shared by the two budgeted learners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaMode {
    /// λ = c·U/√B.
    Scaled(f64),
    /// The regret-analysis setting for the learner.
    Theoretical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RemovalMode {
    /// Drop half of the buffer and keep learning from the rest.
    Half,
    /// Reset the hypothesis to zero.
    Restart,
}
