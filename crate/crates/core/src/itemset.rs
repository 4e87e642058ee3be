use std::fmt;

/// Maximum number of items an instance may carry; sets are packed into a `u64`.
pub const MAX_ITEMS: usize = 64;

/// A subset of the item ground set, stored as a bitmask over item indices.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ItemSet(u64);

impl ItemSet {
    pub const EMPTY: ItemSet = ItemSet(0);

    pub fn from_bits(bits: u64) -> Self {
        ItemSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    /// The full set `{0, .., m-1}`.
    pub fn full(m: usize) -> Self {
        debug_assert!(m <= MAX_ITEMS);
        if m == 64 {
            ItemSet(u64::MAX)
        } else {
            ItemSet((1u64 << m) - 1)
        }
    }

    pub fn singleton(e: usize) -> Self {
        ItemSet(1u64 << e)
    }

    pub fn contains(self, e: usize) -> bool {
        self.0 >> e & 1 == 1
    }

    #[must_use]
    pub fn with(self, e: usize) -> Self {
        ItemSet(self.0 | (1u64 << e))
    }

    #[must_use]
    pub fn without(self, e: usize) -> Self {
        ItemSet(self.0 & !(1u64 << e))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: ItemSet) -> bool {
        self.0 & !other.0 == 0
    }

    #[must_use]
    pub fn union(self, other: ItemSet) -> Self {
        ItemSet(self.0 | other.0)
    }

    #[must_use]
    pub fn minus(self, other: ItemSet) -> Self {
        ItemSet(self.0 & !other.0)
    }

    /// Item indices in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let e = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(e)
            }
        })
    }

    /// All subsets of `self`, in increasing bitmask order (so `∅` first).
    pub fn subsets(self) -> impl Iterator<Item = ItemSet> {
        let mask = self.0;
        let mut next = Some(0u64);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == mask {
                None
            } else {
                Some((cur.wrapping_sub(mask)) & mask)
            };
            Some(ItemSet(cur))
        })
    }
}

impl FromIterator<usize> for ItemSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        iter.into_iter().fold(ItemSet::EMPTY, ItemSet::with)
    }
}

impl fmt::Debug for ItemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_enumerates_power_set() {
        let s: ItemSet = [0, 2, 3].into_iter().collect();
        let subs: Vec<_> = s.subsets().collect();
        assert_eq!(subs.len(), 8);
        assert_eq!(subs[0], ItemSet::EMPTY);
        assert_eq!(*subs.last().unwrap(), s);
        assert!(subs.iter().all(|t| t.is_subset_of(s)));
        let mut sorted = subs.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted, subs);
    }

    #[test]
    fn empty_has_one_subset() {
        assert_eq!(ItemSet::EMPTY.subsets().count(), 1);
    }

    #[test]
    fn iter_and_len() {
        let s = ItemSet::full(5).without(1);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 2, 3, 4]);
        assert_eq!(s.len(), 4);
        assert!(!s.contains(1));
        assert_eq!(ItemSet::full(64).len(), 64);
    }
}
