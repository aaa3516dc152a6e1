//! Random-feature multi-kernel baseline.
//!
//! Each Gaussian kernel is approximated by D random Fourier features and a
//! linear model trained with online gradient descent. Kernels are mixed with
//! exponential weights over their per-kernel losses.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::hedge::HedgeState;
use crate::kernel::{KernelKind, KernelSpec};
use crate::learner::{
    sign, Branch, Diagnostics, KernelStep, OnlineLearner, Prediction, RoundRecord,
};
use crate::loss::{check_label, Loss};
use crate::sparse::SparseVec;

#[derive(Debug, Clone, PartialEq)]
pub struct RakerConfig {
    /// Gaussian kernels only.
    pub kernels: Vec<KernelSpec>,
    /// Input dimension d; features with larger indices are ignored.
    pub dim: usize,
    /// Number of random frequencies D per kernel.
    pub features: usize,
    /// Gradient step η.
    pub eta: f64,
    /// L2 regularization weight.
    pub reg: f64,
    pub seed: u64,
}

impl RakerConfig {
    pub fn new(kernels: Vec<KernelSpec>, dim: usize) -> Self {
        Self {
            kernels,
            dim,
            features: 400,
            eta: 0.1,
            reg: 0.0005,
            seed: 0,
        }
    }
}

/// Frequencies ω_1..ω_D ~ N(0, σ⁻²I), stored feature-major so that ωᵀx
/// only touches the nonzeros of x.
#[derive(Debug, Clone)]
pub struct FourierMap {
    features: usize,
    // omega[(j-1) * D + k] is coordinate j of ω_k
    omega: Vec<f64>,
    dim: usize,
}

impl FourierMap {
    pub fn new(sigma: f64, dim: usize, features: usize, rng: &mut ChaCha8Rng) -> Self {
        let normal = Normal::new(0.0, 1.0 / sigma).expect("finite positive sigma");
        let omega = (0..dim * features).map(|_| normal.sample(rng)).collect();
        Self {
            features,
            omega,
            dim,
        }
    }

    /// z(x) = D^{-1/2} [sin ω_1ᵀx, cos ω_1ᵀx, …, sin ω_Dᵀx, cos ω_Dᵀx].
    pub fn map(&self, x: &SparseVec) -> Vec<f64> {
        let d = self.features;
        let mut proj = vec![0.0; d];
        for (j, v) in x.iter() {
            let j = j as usize;
            if j == 0 || j > self.dim {
                continue;
            }
            let row = &self.omega[(j - 1) * d..j * d];
            for (p, w) in proj.iter_mut().zip(row) {
                *p += v * w;
            }
        }
        let scale = 1.0 / (d as f64).sqrt();
        let mut z = Vec::with_capacity(2 * d);
        for p in proj {
            let (s, c) = p.sin_cos();
            z.push(scale * s);
            z.push(scale * c);
        }
        z
    }
}

#[derive(Debug, Clone)]
pub struct Raker<L> {
    config: RakerConfig,
    loss: L,
    maps: Vec<FourierMap>,
    theta: Vec<Vec<f64>>,
    hedge: HedgeState,
    round: u64,
    cum_loss: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

impl<L: Loss> Raker<L> {
    pub fn new(config: RakerConfig, loss: L) -> Result<Self> {
        if config.kernels.is_empty() || config.features == 0 || config.dim == 0 {
            return Err(Error::InvalidConfig(
                "random features need kernels, D > 0 and d > 0".into(),
            ));
        }
        if !(config.eta >= 0.0
            && config.eta.is_finite()
            && config.reg >= 0.0
            && config.reg.is_finite())
        {
            return Err(Error::InvalidConfig(format!(
                "eta={} and reg={} must be finite and non-negative",
                config.eta, config.reg
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut maps = Vec::with_capacity(config.kernels.len());
        for k in &config.kernels {
            match k.kind {
                KernelKind::Gaussian { sigma } => maps.push(FourierMap::new(
                    sigma,
                    config.dim,
                    config.features,
                    &mut rng,
                )),
                KernelKind::Polynomial { .. } => {
                    return Err(Error::InvalidConfig(
                        "random Fourier features need Gaussian kernels".into(),
                    ))
                }
            }
        }
        Ok(Self {
            theta: vec![vec![0.0; 2 * config.features]; config.kernels.len()],
            hedge: HedgeState::new(config.kernels.len()),
            maps,
            loss,
            config,
            round: 0,
            cum_loss: 0.0,
        })
    }

    pub fn config(&self) -> &RakerConfig {
        &self.config
    }

    pub fn features(&self, i: usize, x: &SparseVec) -> Vec<f64> {
        self.maps[i].map(x)
    }

    pub fn weights(&self, i: usize) -> &[f64] {
        &self.theta[i]
    }

    pub fn hedge(&self) -> &HedgeState {
        &self.hedge
    }

    fn mix(&self, per_kernel: Vec<f64>) -> Prediction {
        let p = self.hedge.distribution();
        let aggregate = p.iter().zip(&per_kernel).map(|(p, v)| p * v).sum();
        Prediction {
            per_kernel,
            aggregate,
            label: sign(aggregate),
        }
    }
}

impl<L: Loss> OnlineLearner for Raker<L> {
    fn predict(&self, x: &SparseVec) -> Prediction {
        let v = (0..self.maps.len())
            .map(|i| dot(&self.theta[i], &self.maps[i].map(x)))
            .collect();
        self.mix(v)
    }

    fn update(&mut self, x: &SparseVec, y: f64) -> Result<RoundRecord> {
        check_label(y)?;
        let z: Vec<Vec<f64>> = self.maps.iter().map(|m| m.map(x)).collect();
        let pred = self.mix(z.iter().zip(&self.theta).map(|(z, t)| dot(t, z)).collect());
        let (eta, reg) = (self.config.eta, self.config.reg);
        let mut steps = Vec::with_capacity(z.len());
        for ((theta, z), v) in self.theta.iter_mut().zip(&z).zip(&pred.per_kernel) {
            let g = self.loss.deriv(*v, y)?;
            for (t, zk) in theta.iter_mut().zip(z) {
                *t -= eta * (g * zk + reg * *t);
            }
            if theta.iter().any(|t| !t.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "random-feature weights at round {}",
                    self.round + 1
                )));
            }
            steps.push(KernelStep {
                value: *v,
                expert_loss: self.loss.value(*v, y)?,
                gap_sq: 0.0,
                branch: Branch::Linear,
            });
        }
        let losses: Vec<f64> = steps.iter().map(|s| s.expert_loss).collect();
        self.hedge.update(&losses)?;
        let loss = self.loss.value(pred.aggregate, y)?;
        self.round += 1;
        self.cum_loss += loss;
        Ok(RoundRecord {
            round: self.round,
            prediction: pred.aggregate,
            predicted_label: pred.label,
            label: y,
            mistake: pred.label != y,
            loss,
            kernels: steps,
        })
    }

    fn diagnostics(&self) -> Diagnostics {
        Diagnostics {
            cum_loss: self.cum_loss,
            ..Diagnostics::default()
        }
    }

    fn budget_violations(&self) -> Vec<String> {
        Vec::new()
    }
}
