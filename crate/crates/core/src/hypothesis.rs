//! Budgeted RKHS elements f = Σ β_j κ(x_j, ·).
//!
//! A [`BudgetedFunction`] keeps its coefficients keyed by example id, an
//! insertion-ordered `own_buffer` (the examples charged to its budget), and a
//! cached squared RKHS norm that is updated with rank-one identities on every
//! step and recomputed from the Gram matrix only when the buffer is split.

use std::sync::Arc;

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::sparse::SparseVec;
use crate::store::{ExampleId, ExampleStore, StoredExample};

/// Which half of the own buffer survives a split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    Oldest,
    Newest,
}

#[derive(Debug, Clone)]
struct Atom {
    example: Arc<StoredExample>,
    coef: f64,
}

#[derive(Debug, Clone)]
pub struct BudgetedFunction {
    kernel: KernelSpec,
    atoms: IndexMap<ExampleId, Atom>,
    own_buffer: Vec<ExampleId>,
    sq_norm: f64,
}

impl BudgetedFunction {
    pub fn new(kernel: KernelSpec) -> Self {
        Self {
            kernel,
            atoms: IndexMap::new(),
            own_buffer: Vec::new(),
            sq_norm: 0.0,
        }
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// f(x) = Σ β_j κ(x_j, x).
    pub fn evaluate(&self, x: &SparseVec) -> f64 {
        self.atoms
            .values()
            .map(|a| a.coef * self.kernel.eval(&a.example.x, x))
            .sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.sq_norm
    }

    pub fn norm(&self) -> f64 {
        self.sq_norm.sqrt()
    }

    pub fn coefficient(&self, id: ExampleId) -> Option<f64> {
        self.atoms.get(&id).map(|a| a.coef)
    }

    /// (id, β) pairs in first-touch order.
    pub fn coefficients(&self) -> impl Iterator<Item = (ExampleId, f64)> + '_ {
        self.atoms.iter().map(|(id, a)| (*id, a.coef))
    }

    /// (example, β) pairs in first-touch order.
    pub fn atoms(&self) -> impl Iterator<Item = (&Arc<StoredExample>, f64)> + '_ {
        self.atoms.values().map(|a| (&a.example, a.coef))
    }

    pub fn support_len(&self) -> usize {
        self.atoms.len()
    }

    pub fn own_buffer(&self) -> &[ExampleId] {
        &self.own_buffer
    }

    pub fn buffer_len(&self) -> usize {
        self.own_buffer.len()
    }

    pub fn in_buffer(&self, id: ExampleId) -> bool {
        self.own_buffer.contains(&id)
    }

    /// f ← f + c·κ(anchor, ·).
    ///
    /// ‖f + cκ(a,·)‖² = ‖f‖² + 2c·f(a) + c²κ(a,a), with f(a) taken before the step.
    pub fn add_scaled(&mut self, store: &mut ExampleStore, c: f64, anchor: &Arc<StoredExample>) {
        self.add_combination(store, &[(c, anchor)]);
    }

    /// f ← f + Σ c_a κ(x_a, ·) in one step.
    ///
    /// The norm update uses ⟨f, g⟩ = Σ c_a f(x_a) and ‖g‖² = Σ c_a c_b κ(x_a, x_b),
    /// both evaluated before any coefficient moves.
    pub fn add_combination(
        &mut self,
        store: &mut ExampleStore,
        terms: &[(f64, &Arc<StoredExample>)],
    ) {
        let values: Vec<f64> = terms.iter().map(|(_, a)| self.evaluate(&a.x)).collect();
        self.add_combination_at(store, terms, &values);
    }

    /// As [`add_combination`](Self::add_combination), with `values[a]` = f(x_a)
    /// supplied by a caller that already knows them.
    pub fn add_combination_at(
        &mut self,
        store: &mut ExampleStore,
        terms: &[(f64, &Arc<StoredExample>)],
        values: &[f64],
    ) {
        debug_assert_eq!(terms.len(), values.len());
        let mut cross = 0.0;
        let mut g_sq = 0.0;
        for (i, ((ci, ai), fi)) in terms.iter().zip(values).enumerate() {
            cross += ci * fi;
            g_sq += ci * ci * self.kernel.self_eval(&ai.x);
            for (cj, aj) in &terms[..i] {
                g_sq += 2.0 * ci * cj * self.kernel.eval(&ai.x, &aj.x);
            }
        }
        self.sq_norm = (self.sq_norm + 2.0 * cross + g_sq).max(0.0);
        for (c, anchor) in terms {
            self.bump(store, *c, anchor);
        }
    }

    fn bump(&mut self, store: &mut ExampleStore, c: f64, anchor: &Arc<StoredExample>) {
        match self.atoms.get_mut(&anchor.id) {
            Some(atom) => atom.coef += c,
            None => {
                store.acquire(anchor.id);
                self.atoms.insert(
                    anchor.id,
                    Atom {
                        example: Arc::clone(anchor),
                        coef: c,
                    },
                );
            }
        }
    }

    /// Charges `example` to this function's buffer. It must not already be there.
    pub fn push_buffer(&mut self, store: &mut ExampleStore, example: &Arc<StoredExample>) {
        debug_assert!(!self.in_buffer(example.id));
        store.acquire(example.id);
        self.own_buffer.push(example.id);
    }

    /// Projects onto the ball of radius `radius`. Returns whether f moved.
    pub fn project_ball(&mut self, radius: f64) -> bool {
        debug_assert!(radius > 0.0);
        if self.sq_norm <= radius * radius {
            return false;
        }
        let scale = radius / self.sq_norm.sqrt();
        for atom in self.atoms.values_mut() {
            atom.coef *= scale;
        }
        self.sq_norm = radius * radius;
        true
    }

    /// Drops one half of the own buffer, in insertion order, together with
    /// the coefficients on the dropped ids. Coefficients on ids outside the
    /// buffer stay with the kept function. Returns the removed ids.
    pub fn split_half(&mut self, store: &mut ExampleStore, keep: Keep) -> Result<Vec<ExampleId>> {
        let n = self.own_buffer.len();
        if n % 2 == 1 {
            return Err(Error::OddBuffer(n));
        }
        let removed: Vec<ExampleId> = match keep {
            Keep::Oldest => self.own_buffer.split_off(n / 2),
            Keep::Newest => self.own_buffer.drain(..n / 2).collect(),
        };
        for id in &removed {
            if self.atoms.shift_remove(id).is_some() {
                store.release(*id);
            }
            store.release(*id);
        }
        self.refresh_sq_norm();
        Ok(removed)
    }

    /// Restart: the zero function with an empty buffer.
    pub fn clear(&mut self, store: &mut ExampleStore) {
        for id in self.atoms.keys() {
            store.release(*id);
        }
        for id in &self.own_buffer {
            store.release(*id);
        }
        self.atoms.clear();
        self.own_buffer.clear();
        self.sq_norm = 0.0;
    }

    /// Σ_{j,k} β_j β_k κ(x_j, x_k) from scratch.
    pub fn gram_sq_norm(&self) -> f64 {
        let atoms: Vec<&Atom> = self.atoms.values().collect();
        let mut acc = 0.0;
        for (i, a) in atoms.iter().enumerate() {
            acc += a.coef * a.coef * self.kernel.self_eval(&a.example.x);
            for b in &atoms[..i] {
                acc += 2.0 * a.coef * b.coef * self.kernel.eval(&a.example.x, &b.example.x);
            }
        }
        acc.max(0.0)
    }

    /// Resets the cached norm to the Gram recomputation.
    pub fn refresh_sq_norm(&mut self) {
        self.sq_norm = self.gram_sq_norm();
    }

    /// Number of store references this function holds (atoms + buffer slots).
    pub fn reference_count(&self) -> usize {
        self.atoms.len() + self.own_buffer.len()
    }
}
