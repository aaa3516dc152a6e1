//! Memory-bounded optimistic mirror descent for smooth losses.
//!
//! All kernels share one buffer. Gradients are surrogates built from the
//! derivative of the loss at the aggregate prediction, so one Bernoulli draw
//! with P = |ℓ'|/(|ℓ'| + G1) decides for every kernel at once. A full buffer
//! drops its oldest half.

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
use crate::loss::{check_label, SmoothLoss};
use crate::sparse::SparseVec;
use crate::store::{ExampleStore, StoredExample};

/// δ used for the removal-count reference quantity.
pub const REMOVAL_DELTA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothConfig {
    pub kernels: Vec<KernelSpec>,
    /// Shared buffer size B; must be even.
    pub budget: usize,
    /// Ball radius U; `None` means √B.
    pub radius: Option<f64>,
    pub lambda: LambdaMode,
    pub removal: RemovalMode,
    pub seed: u64,
}

impl SmoothConfig {
    pub fn new(kernels: Vec<KernelSpec>, budget: usize) -> Self {
        Self {
            kernels,
            budget,
            radius: None,
            lambda: LambdaMode::Scaled(1.0),
            removal: RemovalMode::Half,
            seed: 0,
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius.unwrap_or((self.budget as f64).sqrt())
    }

    pub fn step_size(&self, g1: f64) -> f64 {
        let (u, b) = (self.radius(), self.budget as f64);
        match self.lambda {
            LambdaMode::Scaled(c) => c * u / b.sqrt(),
            LambdaMode::Theoretical => 2.0 * u / (g1 * b.sqrt()),
        }
    }
}

/// Expert losses from the derivative `d` at the aggregate prediction and the
/// per-kernel predictions `v`. Non-negative, with a zero at the best kernel.
pub fn pea_losses(v: &[f64], d: f64) -> Vec<f64> {
    if d > 0.0 {
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        v.iter().map(|x| d * (x - min)).collect()
    } else if d < 0.0 {
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        v.iter().map(|x| d * (x - max)).collect()
    } else {
        vec![0.0; v.len()]
    }
}

/// P[b = 1] = |d|/(|d| + G1).
pub fn sampling_probability(d: f64, g1: f64) -> f64 {
    let a = d.abs();
    if a == 0.0 {
        0.0
    } else {
        a / (a + g1)
    }
}

#[derive(Debug, Clone)]
pub struct SmoothLearner<L> {
    config: SmoothConfig,
    loss: L,
    radius: f64,
    step: f64,
    store: ExampleStore,
    functions: Vec<BudgetedFunction>,
    hedge: HedgeState,
    rng: ChaCha8Rng,
    deriv_sum: f64,
    removals: usize,
    round: u64,
    cum_loss: f64,
}

impl<L: SmoothLoss> SmoothLearner<L> {
    pub fn new(config: SmoothConfig, loss: L) -> Result<Self> {
        if config.kernels.is_empty() {
            return Err(Error::InvalidConfig("no kernels".into()));
        }
        if config.budget < 2 {
            return Err(Error::BudgetTooSmall(format!(
                "B={} must be at least 2",
                config.budget
            )));
        }
        if !config.budget.is_multiple_of(2) {
            return Err(Error::OddBuffer(config.budget));
        }
        let radius = config.radius();
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "radius must be positive, got {radius}"
            )));
        }
        let step = config.step_size(loss.g1());
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "step size must be positive, got {step}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(1);
        Ok(Self {
            functions: config
                .kernels
                .iter()
                .map(|k| BudgetedFunction::new(*k))
                .collect(),
            hedge: HedgeState::new(config.kernels.len()),
            store: ExampleStore::new(),
            rng,
            loss,
            radius,
            step,
            config,
            deriv_sum: 0.0,
            removals: 0,
            round: 0,
            cum_loss: 0.0,
        })
    }

    pub fn config(&self) -> &SmoothConfig {
        &self.config
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

    pub fn function(&self, i: usize) -> &BudgetedFunction {
        &self.functions[i]
    }

    /// The shared buffer S, oldest first.
    pub fn buffer(&self) -> &[crate::store::ExampleId] {
        self.functions[0].own_buffer()
    }

    pub fn removals(&self) -> usize {
        self.removals
    }

    pub fn cum_loss(&self) -> f64 {
        self.cum_loss
    }

    /// ⌈4G2·L̂/((B − (4/3)ln(1/δ))·G1)⌉.
    pub fn removal_bound(&self) -> f64 {
        let denom =
            (self.config.budget as f64 - 4.0 / 3.0 * (1.0 / REMOVAL_DELTA).ln()) * self.loss.g1();
        if denom <= 0.0 {
            return f64::INFINITY;
        }
        (4.0 * self.loss.g2() * self.cum_loss / denom).ceil()
    }

    /// γ_t with the current round's |d| already counted.
    fn threshold(&self) -> f64 {
        (2.0 * (self.functions.len() as f64).ln()).sqrt() / (1.0 + self.deriv_sum).sqrt()
    }

    /// Euclidean-nearest example of S; ties go to the earliest.
    fn nearest(&self, x: &SparseVec) -> Option<Arc<StoredExample>> {
        let mut best: Option<(&Arc<StoredExample>, f64)> = None;
        for id in self.buffer() {
            let e = self.store.get(*id).expect("buffered example is live");
            let d = e.x.sq_distance(x);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((e, d));
            }
        }
        best.map(|(e, _)| Arc::clone(e))
    }

    fn project_all(&mut self) {
        for f in &mut self.functions {
            f.project_ball(self.radius);
        }
    }

    fn step_all(&mut self, coef: f64, anchor: &Arc<StoredExample>) {
        for f in &mut self.functions {
            f.add_scaled(&mut self.store, coef, anchor);
            f.project_ball(self.radius);
        }
    }

    fn remove(&mut self) -> Result<()> {
        for f in &mut self.functions {
            match self.config.removal {
                RemovalMode::Half => {
                    f.split_half(&mut self.store, Keep::Newest)?;
                    f.project_ball(self.radius);
                }
                RemovalMode::Restart => f.clear(&mut self.store),
            }
        }
        self.removals += 1;
        Ok(())
    }

    fn branch(&mut self, example: &Arc<StoredExample>, d: f64) -> Result<Branch> {
        if d == 0.0 {
            self.project_all();
            return Ok(Branch::NoGradient);
        }
        let gamma = self.threshold();
        if let Some(anchor) = self.nearest(&example.x) {
            let distance = self
                .functions
                .iter()
                .map(|f| f.kernel().feature_distance(&anchor.x, &example.x))
                .fold(0.0, f64::max);
            if distance <= gamma {
                self.step_all(-self.step * d, &anchor);
                return Ok(Branch::Proxy {
                    anchor: anchor.id,
                    distance,
                });
            }
        }
        let probability = sampling_probability(d, self.loss.g1());
        let accepted = self.rng.random::<f64>() < probability;
        if !accepted {
            self.project_all();
            return Ok(Branch::Sampled {
                probability,
                accepted,
                removal: false,
            });
        }
        let removal = self.buffer().len() >= self.config.budget;
        if removal {
            self.remove()?;
        }
        self.step_all(-self.step * d / probability, example);
        for f in &mut self.functions {
            f.push_buffer(&mut self.store, example);
        }
        Ok(Branch::Sampled {
            probability,
            accepted,
            removal,
        })
    }
}

impl<L: SmoothLoss> OnlineLearner for SmoothLearner<L> {
    fn predict(&self, x: &SparseVec) -> Prediction {
        let per_kernel: Vec<f64> = self.functions.iter().map(|f| f.evaluate(x)).collect();
        let p = self.hedge.distribution();
        let aggregate = p.iter().zip(&per_kernel).map(|(p, v)| p * v).sum();
        Prediction {
            per_kernel,
            aggregate,
            label: sign(aggregate),
        }
    }

    fn update(&mut self, x: &SparseVec, y: f64) -> Result<RoundRecord> {
        check_label(y)?;
        let pred = self.predict(x);
        let d = self.loss.deriv(pred.aggregate, y)?;
        if !d.is_finite() {
            return Err(Error::NonFinite(format!(
                "loss derivative {d} at round {}",
                self.round + 1
            )));
        }
        let loss = self.loss.value(pred.aggregate, y)?;
        self.deriv_sum += d.abs();

        let example = self.store.insert(x.clone(), y);
        let branch = self.branch(&example, d)?;
        self.store.discard_if_unreferenced(example.id);

        let costs = pea_losses(&pred.per_kernel, d);
        self.hedge.update(&costs)?;
        self.round += 1;
        self.cum_loss += loss;
        let kernels = pred
            .per_kernel
            .iter()
            .zip(&costs)
            .zip(&self.functions)
            .map(|((v, c), f)| KernelStep {
                value: *v,
                expert_loss: *c,
                gap_sq: d * d * f.kernel().self_eval(x),
                branch,
            })
            .collect();
        Ok(RoundRecord {
            round: self.round,
            prediction: pred.aggregate,
            predicted_label: pred.label,
            label: y,
            mistake: pred.label != y,
            loss,
            kernels,
        })
    }

    fn diagnostics(&self) -> Diagnostics {
        Diagnostics {
            removals: vec![self.removals],
            removal_bound: vec![self.removal_bound()],
            alignment_proxy: Vec::new(),
            archive_size: 0,
            archive_frozen: false,
            cum_loss: self.cum_loss,
            live_examples: self.store.live(),
        }
    }

    fn budget_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let s = self.buffer();
        if s.len() > self.config.budget {
            out.push(format!("buffer {} > B={}", s.len(), self.config.budget));
        }
        for (i, f) in self.functions.iter().enumerate() {
            if f.own_buffer() != s {
                out.push(format!("kernel {i}: buffer differs from kernel 0"));
            }
            if f.norm() > self.radius + 1e-8 {
                out.push(format!("kernel {i}: norm {} > U={}", f.norm(), self.radius));
            }
        }
        out
    }

    fn norm_drift(&self) -> f64 {
        self.functions
            .iter()
            .map(|f| {
                let exact = f.gram_sq_norm();
                (f.squared_norm() - exact).abs() / exact.max(1.0)
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::{LogisticLoss, Loss};

    fn grid() -> Vec<KernelSpec> {
        KernelSpec::gaussian_grid(&[0.25, 1.0, 4.0, 16.0, 64.0])
    }

    fn point(a: f64, b: f64) -> SparseVec {
        SparseVec::from_dense(&[a, b])
    }

    fn learner(budget: usize, seed: u64) -> SmoothLearner<LogisticLoss> {
        let mut cfg = SmoothConfig::new(grid(), budget);
        cfg.seed = seed;
        SmoothLearner::new(cfg, LogisticLoss).unwrap()
    }

    #[test]
    fn pea_loss_examples() {
        let v = [0.2, -0.1, 0.4];
        let c = pea_losses(&v, 0.3);
        for (a, b) in c.iter().zip([0.09, 0.0, 0.15]) {
            assert!((a - b).abs() < 1e-15);
        }
        let c = pea_losses(&v, -0.5);
        for (a, b) in c.iter().zip([0.1, 0.25, 0.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(pea_losses(&v, 0.0), vec![0.0; 3]);
    }

    #[test]
    fn config_checks() {
        assert!(matches!(
            SmoothLearner::new(SmoothConfig::new(grid(), 7), LogisticLoss),
            Err(Error::OddBuffer(7))
        ));
        assert!(SmoothLearner::new(SmoothConfig::new(grid(), 0), LogisticLoss).is_err());
        let mut cfg = SmoothConfig::new(grid(), 100);
        cfg.lambda = LambdaMode::Theoretical;
        assert_eq!(cfg.step_size(1.0), 2.0);
    }

    #[test]
    fn fresh_learner_probability_is_one_third() {
        let l = learner(10, 0);
        let p = l.predict(&point(0.5, 0.5));
        assert_eq!(p.aggregate, 0.0);
        assert_eq!(p.label, 1.0);
        let d = LogisticLoss.deriv(p.aggregate, 1.0).unwrap();
        assert_eq!(d, -0.5);
        assert!((sampling_probability(d, 1.0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_derivative_means_no_update() {
        assert_eq!(sampling_probability(0.0, 1.0), 0.0);
        let mut l = learner(10, 0);
        let ex = l.store.insert(point(0.1, 0.1), 1.0);
        assert_eq!(l.branch(&ex, 0.0).unwrap(), Branch::NoGradient);
        assert!(l.buffer().is_empty());
    }

    #[test]
    fn single_kernel_mixture_is_identity() {
        let cfg = SmoothConfig::new(vec![KernelSpec::gaussian(0, 1.0)], 10);
        let mut l = SmoothLearner::new(cfg, LogisticLoss).unwrap();
        for t in 0..20 {
            let x = point(t as f64 * 0.05, 1.0 - t as f64 * 0.03);
            l.update(&x, if t % 3 == 0 { 1.0 } else { -1.0 }).unwrap();
        }
        let p = l.predict(&point(0.3, 0.3));
        assert_eq!(p.aggregate, p.per_kernel[0]);
    }

    #[test]
    fn predict_matches_brute_force() {
        let mut l = learner(20, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..60 {
            let x = point(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            l.update(&x, if rng.random_bool(0.5) { 1.0 } else { -1.0 })
                .unwrap();
        }
        let x = point(0.4, 0.6);
        let p = l.hedge.distribution();
        let mut brute = 0.0;
        for (i, k) in grid().iter().enumerate() {
            for (e, beta) in l.function(i).atoms() {
                brute += p[i] * beta * k.eval(&e.x, &x);
            }
        }
        assert!((l.predict(&x).aggregate - brute).abs() < 1e-12);
    }

    #[test]
    fn surrogate_estimate_is_unbiased() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let d = -0.37;
        let p = sampling_probability(d, 1.0);
        let n = 100_000;
        let (mut s, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let v = if rng.random::<f64>() < p { d / p } else { 0.0 };
            s += v;
            sq += v * v;
        }
        let mean = s / n as f64;
        let se = ((sq / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - d).abs() <= 3.0 * se);
    }

    #[test]
    fn full_buffer_keeps_newest_half() {
        let mut l = learner(6, 0);
        let ids: Vec<_> = (0..6)
            .map(|j| {
                let e = l.store.insert(point(j as f64, 0.0), 1.0);
                l.step_all(0.01, &e);
                for f in &mut l.functions {
                    f.push_buffer(&mut l.store, &e);
                }
                e.id
            })
            .collect();
        // a large derivative sum shrinks γ below every feature distance; |d| large makes P ≈ 1
        l.deriv_sum = 1e6;
        let ex = l.store.insert(point(100.0, 100.0), -1.0);
        let mut branch = l.branch(&ex, 1e12).unwrap();
        while !matches!(branch, Branch::Sampled { accepted: true, .. }) {
            branch = l.branch(&ex, 1e12).unwrap();
        }
        assert_eq!(
            branch,
            Branch::Sampled {
                probability: 1e12 / (1e12 + 1.0),
                accepted: true,
                removal: true
            }
        );
        let mut expected = ids[3..].to_vec();
        expected.push(ex.id);
        assert_eq!(l.buffer(), &expected[..]);
        assert!(l.budget_violations().is_empty());
        assert_eq!(l.removals(), 1);
    }

    #[test]
    fn stream_invariants_and_determinism() {
        let run = |seed| {
            let mut l = learner(20, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let mut recs = Vec::new();
            for _ in 0..2000 {
                let a: f64 = rng.random_range(0.0..1.0);
                let b: f64 = rng.random_range(0.0..1.0);
                let y = if a + 0.3 * (6.0 * b).sin() > 0.5 {
                    1.0
                } else {
                    -1.0
                };
                recs.push(l.update(&point(a, b), y).unwrap());
                assert!(
                    l.budget_violations().is_empty(),
                    "{:?}",
                    l.budget_violations()
                );
            }
            assert!(l.norm_drift() < 1e-6);
            assert!(l.removals() > 0);
            assert!(l.diagnostics().live_examples <= 20);
            (l.removals() as f64, l.removal_bound(), recs)
        };
        let (j, bound, a) = run(3);
        assert!(j <= 3.0 * bound, "J={j} bound={bound}");
        let (_, _, b) = run(3);
        assert_eq!(a, b);
    }

    #[test]
    fn restart_empties_buffer() {
        let mut cfg = SmoothConfig::new(grid(), 4);
        cfg.removal = RemovalMode::Restart;
        let mut l = SmoothLearner::new(cfg, LogisticLoss).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let x = point(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let rec = l
                .update(&x, if rng.random_bool(0.5) { 1.0 } else { -1.0 })
                .unwrap();
            if let Branch::Sampled { removal: true, .. } = rec.kernels[0].branch {
                assert_eq!(l.buffer().len(), 1);
            }
        }
        assert!(l.removals() > 0);
    }
}
