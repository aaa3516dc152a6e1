//! Memory-bounded optimistic mirror descent for the hinge loss.
//!
//! Every candidate kernel runs its own two-step mirror descent. The first
//! step shifts the stored hypothesis by the optimistic gradient built from a
//! reservoir sample; the second step is taken with the true gradient, a
//! nearby stored example standing in for it, or an unbiased sampled estimate
//! that only occasionally adds the current example to the kernel's buffer.
//! A full buffer drops its newest half. Predictions are mixed with
//! exponential weights over the per-kernel hinge losses.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hedge::HedgeState;
use crate::hypothesis::{BudgetedFunction, Keep};
use crate::kernel::KernelSpec;
use crate::learner::{
    sign, Branch, Diagnostics, KernelStep, LambdaMode, OnlineLearner, Prediction, RemovalMode,
    RoundRecord,
};
use crate::loss::{check_label, HingeLoss, Loss};
use crate::reservoir::Reservoir;
use crate::sparse::SparseVec;
use crate::store::{ExampleStore, StoredExample};

#[derive(Debug, Clone, PartialEq)]
pub struct HingeConfig {
    pub kernels: Vec<KernelSpec>,
    /// Example budget B; see [`BudgetScope`] for what it covers.
    pub budget: usize,
    pub scope: BudgetScope,
    /// Reservoir size M.
    pub reservoir_capacity: usize,
    /// Ball radius U; `None` means √B.
    pub radius: Option<f64>,
    pub lambda: LambdaMode,
    pub removal: RemovalMode,
    /// Stream length T, or an estimate of it, used to size the reservoir archive.
    pub horizon: u64,
    pub seed: u64,
}

impl HingeConfig {
    pub fn new(kernels: Vec<KernelSpec>, budget: usize, horizon: u64) -> Self {
        Self {
            kernels,
            budget,
            scope: BudgetScope::Total,
            reservoir_capacity: 10,
            radius: None,
            lambda: LambdaMode::Scaled(1.0),
            removal: RemovalMode::Half,
            horizon,
            seed: 0,
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius.unwrap_or((self.budget as f64).sqrt())
    }

    /// Memory shared by all kernels: B, or K·B for per-kernel budgets.
    pub fn total_budget(&self) -> f64 {
        match self.scope {
            BudgetScope::Total => self.budget as f64,
            BudgetScope::PerKernel => (self.budget * self.kernels.len()) as f64,
        }
    }

    pub fn step_size(&self) -> f64 {
        let (u, k) = (self.radius(), self.kernels.len() as f64);
        match self.lambda {
            LambdaMode::Scaled(c) => c * u / (self.budget as f64).sqrt(),
            LambdaMode::Theoretical => u * k.sqrt() / (2.0 * self.total_budget()).sqrt(),
        }
    }
}

/// What the budget B of a [`HingeConfig`] counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetScope {
    /// B is shared by the reservoir archive and all K buffers.
    Total,
    /// Every kernel gets its own buffer of B examples; the archive is sized separately.
    PerKernel,
}

/// Split of the total budget between the reservoir archive and the kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budgets {
    /// Hard cap B₀ on the reservoir archive.
    pub archive: usize,
    /// Even per-kernel buffer size B_i.
    pub per_kernel: usize,
}

/// B₀ = min(⌈M(1 + ⌈ln T⌉)⌉, ⌊B/2⌋), B_i = 2⌊(B − B₀)/(2K)⌋.
pub fn allocate_budgets(
    budget: usize,
    reservoir_capacity: usize,
    kernels: usize,
    horizon: u64,
) -> Result<Budgets> {
    if kernels == 0 {
        return Err(Error::InvalidConfig("no kernels".into()));
    }
    let log_t = (horizon.max(1) as f64).ln().ceil();
    let wanted = (reservoir_capacity as f64 * (1.0 + log_t)).ceil() as usize;
    let archive = wanted.min(budget / 2);
    let per_kernel = 2 * ((budget - archive) / (2 * kernels));
    if per_kernel < 2 || archive == 0 {
        return Err(Error::BudgetTooSmall(format!(
            "B={budget} with M={reservoir_capacity}, K={kernels} leaves B0={archive}, B_i={per_kernel}"
        )));
    }
    Ok(Budgets {
        archive,
        per_kernel,
    })
}

/// B_i = B (made even) for every kernel and B₀ = ⌈M(1 + ⌈ln T⌉)⌉.
pub fn allocate_per_kernel(
    budget: usize,
    reservoir_capacity: usize,
    horizon: u64,
) -> Result<Budgets> {
    let per_kernel = budget / 2 * 2;
    if per_kernel < 2 {
        return Err(Error::BudgetTooSmall(format!(
            "per-kernel B={budget} must be at least 2"
        )));
    }
    let log_t = (horizon.max(1) as f64).ln().ceil();
    Ok(Budgets {
        archive: (reservoir_capacity as f64 * (1.0 + log_t)).ceil() as usize,
        per_kernel,
    })
}

/// P[b = 1] = ‖∇−∇̂‖² / (‖∇−∇̂‖² + ‖∇̂‖²), and 0 when ∇ = ∇̂.
pub fn sampling_probability(gap_sq: f64, optimistic_sq: f64) -> f64 {
    if gap_sq <= 0.0 {
        0.0
    } else {
        gap_sq / (gap_sq + optimistic_sq)
    }
}

/// Coefficients of ∇̃ = (∇ − ∇̂)/P·1[b=1] + ∇̂.
///
/// `gradient` is the single term of ∇ and `optimistic` the terms of ∇̂.
pub fn estimator_terms<'a>(
    gradient: (f64, &'a Arc<StoredExample>),
    optimistic: &[(f64, &'a Arc<StoredExample>)],
    probability: f64,
    accepted: bool,
) -> Vec<(f64, &'a Arc<StoredExample>)> {
    if !accepted {
        return optimistic.to_vec();
    }
    let inv = 1.0 / probability;
    let mut terms = Vec::with_capacity(optimistic.len() + 1);
    terms.push((gradient.0 * inv, gradient.1));
    terms.extend(optimistic.iter().map(|(c, e)| (c * (1.0 - inv), *e)));
    terms
}

#[derive(Debug, Clone)]
struct KernelLearner {
    f: BudgetedFunction,
    // Σ_τ ‖∇_τ − ∇̂_τ‖² over rounds with ∇_τ ≠ 0
    gap_sum: f64,
    removals: usize,
    rng: ChaCha8Rng,
    // f at each reservoir member, in member order
    at_reservoir: Vec<f64>,
}

impl KernelLearner {
    fn refresh_cache(&mut self, reservoir: &Reservoir) {
        self.at_reservoir = reservoir
            .members()
            .iter()
            .map(|m| self.f.evaluate(&m.x))
            .collect();
    }

    fn project(&mut self, radius: f64) {
        let before = self.f.norm();
        if self.f.project_ball(radius) {
            let scale = radius / before;
            self.at_reservoir.iter_mut().for_each(|v| *v *= scale);
        }
    }

    /// Adds Σ c_a κ(x_a, ·) and keeps the reservoir cache in step.
    fn add(
        &mut self,
        store: &mut ExampleStore,
        reservoir: &Reservoir,
        terms: &[(f64, &Arc<StoredExample>)],
        values: &[f64],
    ) {
        self.f.add_combination_at(store, terms, values);
        let kernel = *self.f.kernel();
        for (v, m) in self.at_reservoir.iter_mut().zip(reservoir.members()) {
            *v += terms
                .iter()
                .map(|(c, a)| c * kernel.eval(&a.x, &m.x))
                .sum::<f64>();
        }
    }
}

#[derive(Debug, Clone)]
pub struct HingeLearner {
    config: HingeConfig,
    budgets: Budgets,
    radius: f64,
    step: f64,
    store: ExampleStore,
    kernels: Vec<KernelLearner>,
    reservoir: Reservoir,
    reservoir_rng: ChaCha8Rng,
    hedge: HedgeState,
    round: u64,
    cum_loss: f64,
}

impl HingeLearner {
    pub fn new(config: HingeConfig) -> Result<Self> {
        let k = config.kernels.len();
        if config.scope == BudgetScope::Total && config.budget < 2 * k + 2 {
            return Err(Error::BudgetTooSmall(format!(
                "B={} must be at least 2K+2={}",
                config.budget,
                2 * k + 2
            )));
        }
        if config.reservoir_capacity == 0 {
            return Err(Error::InvalidConfig(
                "reservoir capacity must be positive".into(),
            ));
        }
        let radius = config.radius();
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "radius must be positive, got {radius}"
            )));
        }
        let step = config.step_size();
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "step size must be positive, got {step}"
            )));
        }
        let budgets = match config.scope {
            BudgetScope::Total => {
                allocate_budgets(config.budget, config.reservoir_capacity, k, config.horizon)?
            }
            BudgetScope::PerKernel => {
                allocate_per_kernel(config.budget, config.reservoir_capacity, config.horizon)?
            }
        };
        let kernels = config
            .kernels
            .iter()
            .enumerate()
            .map(|(i, spec)| KernelLearner {
                f: BudgetedFunction::new(*spec),
                gap_sum: 0.0,
                removals: 0,
                rng: stream(config.seed, i as u64 + 1),
                at_reservoir: Vec::new(),
            })
            .collect();
        Ok(Self {
            reservoir: Reservoir::new(
                config.reservoir_capacity,
                budgets.archive,
                config.kernels.clone(),
            ),
            reservoir_rng: stream(config.seed, 0),
            hedge: HedgeState::new(k),
            store: ExampleStore::new(),
            kernels,
            budgets,
            radius,
            step,
            config,
            round: 0,
            cum_loss: 0.0,
        })
    }

    pub fn config(&self) -> &HingeConfig {
        &self.config
    }

    pub fn budgets(&self) -> Budgets {
        self.budgets
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn step_size(&self) -> f64 {
        self.step
    }

    pub fn hedge(&self) -> &HedgeState {
        &self.hedge
    }

    pub fn reservoir(&self) -> &Reservoir {
        &self.reservoir
    }

    pub fn store(&self) -> &ExampleStore {
        &self.store
    }

    /// The stored hypothesis f'_i of kernel `i`.
    pub fn function(&self, i: usize) -> &BudgetedFunction {
        &self.kernels[i].f
    }

    pub fn alignment_proxy(&self) -> Vec<f64> {
        self.kernels.iter().map(|k| k.gap_sum).collect()
    }

    pub fn removals(&self) -> Vec<usize> {
        self.kernels.iter().map(|k| k.removals).collect()
    }

    /// ⌈4K·Â_i/(B·k1)⌉ per kernel, B being the total budget.
    pub fn removal_bound(&self) -> Vec<f64> {
        let k = self.kernels.len() as f64;
        let b = self.config.total_budget();
        self.kernels
            .iter()
            .map(|kl| {
                let k1 = kl.f.kernel().min_self_eval();
                if k1 > 0.0 {
                    (4.0 * k * kl.gap_sum / (b * k1)).ceil()
                } else {
                    f64::INFINITY
                }
            })
            .collect()
    }

    fn optimistic_values(&self, x: &SparseVec) -> Vec<f64> {
        self.kernels
            .iter()
            .map(|k| self.reservoir.optimistic_value(k.f.kernel(), x))
            .collect()
    }

    fn predict_with(&self, x: &SparseVec, optimistic: &[f64]) -> Prediction {
        let per_kernel: Vec<f64> = self
            .kernels
            .iter()
            .zip(optimistic)
            .map(|(k, o)| k.f.evaluate(x) - self.step * o)
            .collect();
        let p = self.hedge.distribution();
        let aggregate = p.iter().zip(&per_kernel).map(|(p, v)| p * v).sum();
        Prediction {
            per_kernel,
            aggregate,
            label: sign(aggregate),
        }
    }

    fn step_kernel(
        &mut self,
        i: usize,
        example: &Arc<StoredExample>,
        value: f64,
        optimistic_value: f64,
    ) -> Result<KernelStep> {
        let y = example.y;
        let expert_loss = HingeLoss.value(value, y)?;
        let (radius, step, per_kernel) = (self.radius, self.step, self.budgets.per_kernel);
        let removal_mode = self.config.removal;
        let store = &mut self.store;
        let reservoir = &self.reservoir;
        let kl = &mut self.kernels[i];

        if y * value >= 1.0 {
            kl.project(radius);
            return Ok(KernelStep {
                value,
                expert_loss,
                gap_sq: 0.0,
                branch: Branch::NoGradient,
            });
        }

        let kernel = *kl.f.kernel();
        let optimistic_sq = reservoir.optimistic_sq_norm(i);
        // ‖∇ − ∇̂‖² = κ(x,x) + ‖∇̂‖² − 2⟨∇, ∇̂⟩ with ∇ = −yκ(x,·), ⟨∇, ∇̂⟩ = −y∇̂(x)
        let gap_sq =
            (kernel.self_eval(&example.x) + optimistic_sq + 2.0 * y * optimistic_value).max(0.0);
        kl.gap_sum += gap_sq;
        let gamma = gap_sq / (1.0 + kl.gap_sum).sqrt();

        if let Some((anchor, distance)) = nearest_in_buffer(&kl.f, store, &example.x) {
            if distance <= gamma {
                let at_anchor = kl.f.evaluate(&anchor.x);
                kl.add(store, reservoir, &[(step * y, &anchor)], &[at_anchor]);
                kl.project(radius);
                return Ok(KernelStep {
                    value,
                    expert_loss,
                    gap_sq,
                    branch: Branch::Proxy {
                        anchor: anchor.id,
                        distance,
                    },
                });
            }
        }

        let probability = sampling_probability(gap_sq, optimistic_sq);
        let accepted = probability > 0.0 && kl.rng.random::<f64>() < probability;
        let mut removal = false;
        if accepted && kl.f.buffer_len() >= per_kernel {
            match removal_mode {
                RemovalMode::Half => {
                    kl.f.split_half(store, Keep::Oldest)?;
                    kl.f.project_ball(radius);
                }
                RemovalMode::Restart => kl.f.clear(store),
            }
            kl.refresh_cache(reservoir);
            kl.removals += 1;
            removal = true;
        }
        let optimistic = reservoir.optimistic_coeffs();
        let terms: Vec<(f64, &Arc<StoredExample>)> =
            estimator_terms((-y, example), &optimistic, probability, accepted)
                .into_iter()
                .map(|(c, e)| (-step * c, e))
                .collect();
        // f(x) is known from the prediction unless a removal just changed f
        let at_x = if removal {
            kl.f.evaluate(&example.x)
        } else {
            value + step * optimistic_value
        };
        let values: Vec<f64> = if accepted {
            std::iter::once(at_x)
                .chain(kl.at_reservoir.iter().copied())
                .collect()
        } else {
            kl.at_reservoir.clone()
        };
        kl.add(store, reservoir, &terms, &values);
        if accepted {
            kl.f.push_buffer(store, example);
        }
        kl.project(radius);
        Ok(KernelStep {
            value,
            expert_loss,
            gap_sq,
            branch: Branch::Sampled {
                probability,
                accepted,
                removal,
            },
        })
    }
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Buffer example closest to `x` in the function's feature space; ties go to the earliest.
fn nearest_in_buffer(
    f: &BudgetedFunction,
    store: &ExampleStore,
    x: &SparseVec,
) -> Option<(Arc<StoredExample>, f64)> {
    let kernel = f.kernel();
    let mut best: Option<(Arc<StoredExample>, f64)> = None;
    for id in f.own_buffer() {
        let e = store.get(*id).expect("buffered example is live");
        let d = kernel.feature_distance(&e.x, x);
        if best.as_ref().is_none_or(|(_, bd)| d < *bd) {
            best = Some((Arc::clone(e), d));
        }
    }
    best
}

impl OnlineLearner for HingeLearner {
    fn predict(&self, x: &SparseVec) -> Prediction {
        self.predict_with(x, &self.optimistic_values(x))
    }

    fn update(&mut self, x: &SparseVec, y: f64) -> Result<RoundRecord> {
        check_label(y)?;
        let optimistic = self.optimistic_values(x);
        let pred = self.predict_with(x, &optimistic);
        let example = self.store.insert(x.clone(), y);

        let mut steps = Vec::with_capacity(self.kernels.len());
        for (i, o) in optimistic.iter().enumerate() {
            steps.push(self.step_kernel(i, &example, pred.per_kernel[i], *o)?);
        }
        let losses: Vec<f64> = steps.iter().map(|s| s.expert_loss).collect();
        self.hedge.update(&losses)?;
        let inserted = self
            .reservoir
            .observe(&mut self.store, &example, &mut self.reservoir_rng);
        if inserted.accepted {
            for kl in &mut self.kernels {
                kl.refresh_cache(&self.reservoir);
            }
        }
        self.store.discard_if_unreferenced(example.id);

        self.round += 1;
        let loss = HingeLoss.value(pred.aggregate, y)?;
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
            removals: self.removals(),
            removal_bound: self.removal_bound(),
            alignment_proxy: self.alignment_proxy(),
            archive_size: self.reservoir.archive().len(),
            archive_frozen: self.reservoir.is_frozen(),
            cum_loss: self.cum_loss,
            live_examples: self.store.live(),
        }
    }

    fn budget_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.reservoir.archive().len() > self.budgets.archive {
            out.push(format!(
                "archive holds {} > B0={}",
                self.reservoir.archive().len(),
                self.budgets.archive
            ));
        }
        for (i, k) in self.kernels.iter().enumerate() {
            if k.f.buffer_len() > self.budgets.per_kernel {
                out.push(format!(
                    "kernel {i}: buffer {} > B_i={}",
                    k.f.buffer_len(),
                    self.budgets.per_kernel
                ));
            }
            if k.f.norm() > self.radius + 1e-8 {
                out.push(format!(
                    "kernel {i}: norm {} > U={}",
                    k.f.norm(),
                    self.radius
                ));
            }
        }
        out
    }

    fn norm_drift(&self) -> f64 {
        self.kernels
            .iter()
            .map(|k| {
                let exact = k.f.gram_sq_norm();
                (k.f.squared_norm() - exact).abs() / exact.max(1.0)
            })
            .fold(0.0, f64::max)
    }
}
