use std::cmp::Ordering;
use std::fmt;

use fixedbitset::FixedBitSet;

use super::ConstraintId;

/// A subset of the constraints of one network, stored as a bitset over
/// dense constraint ids.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ConstraintSet {
    bits: FixedBitSet,
}

impl ConstraintSet {
    /// Empty set over a universe of `capacity` constraints.
    pub fn empty(capacity: usize) -> Self {
        Self {
            bits: FixedBitSet::with_capacity(capacity),
        }
    }

    /// Every id in `0..capacity`.
    pub fn full(capacity: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(capacity);
        bits.insert_range(..);
        Self { bits }
    }

    pub fn from_ids<I: IntoIterator<Item = ConstraintId>>(capacity: usize, ids: I) -> Self {
        let mut set = Self::empty(capacity);
        for id in ids {
            set.insert(id);
        }
        set
    }

    pub fn capacity(&self) -> usize {
        self.bits.len()
    }

    /// Panics if `id` is outside the universe.
    pub fn insert(&mut self, id: ConstraintId) -> bool {
        assert!(id < self.bits.len(), "constraint id {id} out of range");
        !self.bits.put(id)
    }

    pub fn remove(&mut self, id: ConstraintId) -> bool {
        if id >= self.bits.len() || !self.bits.contains(id) {
            return false;
        }
        self.bits.set(id, false);
        true
    }

    pub fn contains(&self, id: ConstraintId) -> bool {
        self.bits.contains(id)
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    /// Ids in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = ConstraintId> + '_ {
        self.bits.ones()
    }

    pub fn to_vec(&self) -> Vec<ConstraintId> {
        self.iter().collect()
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn union_with(&mut self, other: &Self) {
        self.bits.union_with(&other.bits);
    }

    pub fn difference_with(&mut self, other: &Self) {
        self.bits.difference_with(&other.bits);
    }

    /// `self \ other` as a new set.
    pub fn difference(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.difference_with(other);
        out
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.union_with(other);
        out
    }
}

// Lexicographic order on the ascending id lists.
impl Ord for ConstraintSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.iter().cmp(other.iter())
    }
}

impl PartialOrd for ConstraintSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for ConstraintSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_ops() {
        let mut a = ConstraintSet::empty(6);
        assert!(a.is_empty());
        assert!(a.insert(3));
        assert!(!a.insert(3));
        a.insert(1);
        assert_eq!(a.to_vec(), vec![1, 3]);
        assert_eq!(a.len(), 2);
        let full = ConstraintSet::full(6);
        assert!(a.is_subset(&full));
        assert_eq!(full.difference(&a).to_vec(), vec![0, 2, 4, 5]);
        assert!(a.remove(1));
        assert!(!a.remove(1));
        assert!(!a.remove(17));
    }

    #[test]
    fn ordering_is_lexicographic_on_ids() {
        let a = ConstraintSet::from_ids(8, [0, 1, 2]);
        let b = ConstraintSet::from_ids(8, [2, 3, 4]);
        let c = ConstraintSet::from_ids(8, [0, 5]);
        let mut v = vec![b.clone(), c.clone(), a.clone()];
        v.sort();
        assert_eq!(v, vec![a, c, b]);
    }
}
