//! Reference-counted storage for the examples that budgeted functions and
//! buffers point at. Memory budgets are counted in stored examples, so an
//! example is dropped as soon as nothing references it.

use std::collections::HashMap;
use std::sync::Arc;

use crate::sparse::SparseVec;

pub type ExampleId = u64;

/// One stream example as held by the learners.
#[derive(Debug, PartialEq)]
pub struct StoredExample {
    pub id: ExampleId,
    pub x: SparseVec,
    pub y: f64,
}

#[derive(Debug, Clone)]
struct Slot {
    example: Arc<StoredExample>,
    refcount: usize,
}

/// Append-only id allocator plus refcounted live set.
///
/// Ids are dense, start at 0 and are never reused. An entry whose refcount
/// drops to 0 is removed immediately.
#[derive(Debug, Clone, Default)]
pub struct ExampleStore {
    next_id: ExampleId,
    slots: HashMap<ExampleId, Slot>,
}

impl ExampleStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a new example with refcount 0.
    pub fn insert(&mut self, x: SparseVec, y: f64) -> Arc<StoredExample> {
        let id = self.next_id;
        self.next_id += 1;
        let example = Arc::new(StoredExample { id, x, y });
        self.slots.insert(
            id,
            Slot {
                example: Arc::clone(&example),
                refcount: 0,
            },
        );
        example
    }

    pub fn get(&self, id: ExampleId) -> Option<&Arc<StoredExample>> {
        self.slots.get(&id).map(|s| &s.example)
    }

    pub fn refcount(&self, id: ExampleId) -> Option<usize> {
        self.slots.get(&id).map(|s| s.refcount)
    }

    /// Panics if `id` is not live; callers only acquire examples they hold.
    pub fn acquire(&mut self, id: ExampleId) {
        self.slots
            .get_mut(&id)
            .unwrap_or_else(|| panic!("acquire of reclaimed example {id}"))
            .refcount += 1;
    }

    pub fn release(&mut self, id: ExampleId) {
        let slot = self
            .slots
            .get_mut(&id)
            .unwrap_or_else(|| panic!("release of reclaimed example {id}"));
        assert!(slot.refcount > 0, "refcount underflow on example {id}");
        slot.refcount -= 1;
        if slot.refcount == 0 {
            self.slots.remove(&id);
        }
    }

    /// Drops `id` if it was inserted but never referenced.
    pub fn discard_if_unreferenced(&mut self, id: ExampleId) {
        if self.refcount(id) == Some(0) {
            self.slots.remove(&id);
        }
    }

    /// Number of examples currently held.
    pub fn live(&self) -> usize {
        self.slots.len()
    }

    pub fn total_refcount(&self) -> usize {
        self.slots.values().map(|s| s.refcount).sum()
    }

    pub fn ids_allocated(&self) -> u64 {
        self.next_id
    }

    pub fn live_ids(&self) -> impl Iterator<Item = ExampleId> + '_ {
        self.slots.keys().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_never_reused() {
        let mut store = ExampleStore::new();
        let a = store.insert(SparseVec::basis(1), 1.0);
        store.discard_if_unreferenced(a.id);
        let b = store.insert(SparseVec::basis(1), 1.0);
        assert_eq!((a.id, b.id), (0, 1));
        assert_eq!(store.live(), 1);
    }

    #[test]
    fn release_to_zero_reclaims() {
        let mut store = ExampleStore::new();
        let a = store.insert(SparseVec::basis(1), -1.0);
        store.acquire(a.id);
        store.acquire(a.id);
        store.release(a.id);
        assert_eq!(store.refcount(a.id), Some(1));
        store.discard_if_unreferenced(a.id);
        assert_eq!(store.live(), 1);
        store.release(a.id);
        assert!(store.get(a.id).is_none());
    }
}
