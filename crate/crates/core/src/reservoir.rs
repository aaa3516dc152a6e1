//! Reservoir sample of past examples and the optimistic gradient built from it.
//!
//! The reservoir V holds a uniform sample of at most `capacity` examples.
//! Everything that ever entered V is also kept in an append-only archive,
//! because hypotheses built from the optimistic gradient keep coefficients on
//! those examples. The archive has a hard cap; once reached the reservoir
//! freezes and stops admitting examples.

use std::sync::Arc;

use rand::Rng;

use crate::kernel::KernelSpec;
use crate::sparse::SparseVec;
use crate::store::{ExampleId, ExampleStore, StoredExample};

/// Outcome of one [`Reservoir::observe`] call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Insertion {
    /// 1-based round index of this call.
    pub round: u64,
    /// min(1, M/t), or 0 while frozen.
    pub probability: f64,
    pub accepted: bool,
    pub evicted: Option<ExampleId>,
}

#[derive(Debug, Clone)]
pub struct Reservoir {
    capacity: usize,
    archive_cap: usize,
    kernels: Vec<KernelSpec>,
    members: Vec<Arc<StoredExample>>,
    archive: Vec<ExampleId>,
    seen: u64,
    frozen: bool,
    // per kernel: Σ_{j,k ∈ V} y_j y_k κ(x_j, x_k)
    label_gram: Vec<f64>,
}

impl Reservoir {
    pub fn new(capacity: usize, archive_cap: usize, kernels: Vec<KernelSpec>) -> Self {
        assert!(capacity > 0, "reservoir capacity must be positive");
        assert!(archive_cap > 0, "archive cap must be positive");
        let label_gram = vec![0.0; kernels.len()];
        Self {
            capacity,
            archive_cap,
            kernels,
            members: Vec::with_capacity(capacity),
            archive: Vec::new(),
            seen: 0,
            frozen: false,
            label_gram,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn archive_cap(&self) -> usize {
        self.archive_cap
    }

    pub fn members(&self) -> &[Arc<StoredExample>] {
        &self.members
    }

    pub fn archive(&self) -> &[ExampleId] {
        &self.archive
    }

    pub fn seen(&self) -> u64 {
        self.seen
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn kernels(&self) -> &[KernelSpec] {
        &self.kernels
    }

    /// Offers the round's example; call once per round, after the learner update.
    pub fn observe<R: Rng + ?Sized>(
        &mut self,
        store: &mut ExampleStore,
        example: &Arc<StoredExample>,
        rng: &mut R,
    ) -> Insertion {
        self.seen += 1;
        let round = self.seen;
        if self.frozen {
            return Insertion {
                round,
                probability: 0.0,
                accepted: false,
                evicted: None,
            };
        }
        let probability = (self.capacity as f64 / round as f64).min(1.0);
        let accepted = probability >= 1.0 || rng.random::<f64>() < probability;
        let mut evicted = None;
        if accepted {
            if self.members.len() < self.capacity {
                self.admit(example);
            } else {
                let slot = rng.random_range(0..self.capacity);
                evicted = Some(self.members[slot].id);
                self.replace(slot, example);
            }
            store.acquire(example.id);
            self.archive.push(example.id);
            if self.archive.len() >= self.archive_cap {
                self.frozen = true;
            }
        }
        Insertion {
            round,
            probability,
            accepted,
            evicted,
        }
    }

    fn admit(&mut self, new: &Arc<StoredExample>) {
        for (k, gram) in self.kernels.iter().zip(self.label_gram.iter_mut()) {
            let cross: f64 = self
                .members
                .iter()
                .map(|m| m.y * k.eval(&m.x, &new.x))
                .sum();
            *gram += 2.0 * new.y * cross + k.self_eval(&new.x);
        }
        self.members.push(Arc::clone(new));
    }

    fn replace(&mut self, slot: usize, new: &Arc<StoredExample>) {
        let old = Arc::clone(&self.members[slot]);
        for (k, gram) in self.kernels.iter().zip(self.label_gram.iter_mut()) {
            let (mut cross_old, mut cross_new) = (0.0, 0.0);
            for (j, m) in self.members.iter().enumerate() {
                if j != slot {
                    cross_old += m.y * k.eval(&m.x, &old.x);
                    cross_new += m.y * k.eval(&m.x, &new.x);
                }
            }
            *gram += -2.0 * old.y * cross_old - k.self_eval(&old.x)
                + 2.0 * new.y * cross_new
                + k.self_eval(&new.x);
        }
        self.members[slot] = Arc::clone(new);
    }

    /// ∇̂(x) = −(1/|V|) Σ_{j∈V} y_j κ(x_j, x); 0 for an empty reservoir.
    pub fn optimistic_value(&self, kernel: &KernelSpec, x: &SparseVec) -> f64 {
        if self.members.is_empty() {
            return 0.0;
        }
        let s: f64 = self
            .members
            .iter()
            .map(|m| m.y * kernel.eval(&m.x, x))
            .sum();
        -s / self.members.len() as f64
    }

    /// ‖∇̂‖² for the reservoir's `kernel`-th kernel, from the incremental cache.
    pub fn optimistic_sq_norm(&self, kernel: usize) -> f64 {
        let n = self.members.len();
        if n == 0 {
            return 0.0;
        }
        self.label_gram[kernel].max(0.0) / (n * n) as f64
    }

    /// Coefficient view of ∇̂: (example, −y_j/|V|).
    pub fn optimistic_coeffs(&self) -> Vec<(f64, &Arc<StoredExample>)> {
        let n = self.members.len() as f64;
        self.members.iter().map(|m| (-m.y / n, m)).collect()
    }

    /// Recomputes the label Gram caches from scratch.
    pub fn refresh(&mut self) {
        for (k, gram) in self.kernels.iter().zip(self.label_gram.iter_mut()) {
            let mut acc = 0.0;
            for a in &self.members {
                for b in &self.members {
                    acc += a.y * b.y * k.eval(&a.x, &b.x);
                }
            }
            *gram = acc;
        }
    }
}
