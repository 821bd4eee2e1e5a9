//! Min-ordered heap entries with deterministic tie-breaking.

use std::cmp::Ordering;

/// Heap entry popped smallest `cost` first, then smallest `seq`.
#[derive(Debug, Clone, Copy)]
pub struct MinEntry<T> {
    pub cost: f64,
    pub seq: u64,
    pub item: T,
}

impl<T> MinEntry<T> {
    pub fn new(cost: f64, seq: u64, item: T) -> Self {
        Self { cost, seq, item }
    }
}

impl<T> PartialEq for MinEntry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T> Eq for MinEntry<T> {}

impl<T> PartialOrd for MinEntry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T> Ord for MinEntry<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}
