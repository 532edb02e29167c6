//! Ground-set elements and canonical subsets.
//!
//! A [`Subset`] always stores its members sorted and deduplicated, so two
//! subsets with the same members compare and hash equal no matter the order
//! in which they were built. Oracles rely on this for memoization.

use std::fmt;

use crate::error::{Error, Result};

/// Dense index of a base arm in `[0, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ElementId(pub u32);

impl ElementId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for ElementId {
    fn from(i: usize) -> Self {
        ElementId(i as u32)
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A set of base arms in canonical (sorted, duplicate-free) form.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Subset {
    members: Vec<ElementId>,
}

impl Subset {
    pub fn empty() -> Self {
        Subset::default()
    }

    /// Builds a subset from ids in any order; duplicates collapse.
    pub fn from_ids<I: IntoIterator<Item = usize>>(ids: I) -> Self {
        let mut members: Vec<ElementId> = ids.into_iter().map(ElementId::from).collect();
        members.sort_unstable();
        members.dedup();
        Subset { members }
    }

    pub fn singleton(e: ElementId) -> Self {
        Subset { members: vec![e] }
    }

    /// The whole ground set `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        Subset::from_ids(0..n)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, e: ElementId) -> bool {
        self.members.binary_search(&e).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = ElementId> + '_ {
        self.members.iter().copied()
    }

    pub fn members(&self) -> &[ElementId] {
        &self.members
    }

    /// `self ∪ {e}` as a new subset.
    pub fn with(&self, e: ElementId) -> Self {
        let mut out = self.clone();
        out.insert(e);
        out
    }

    /// `self ∖ {e}` as a new subset.
    pub fn without(&self, e: ElementId) -> Self {
        let mut out = self.clone();
        out.remove(e);
        out
    }

    pub fn insert(&mut self, e: ElementId) -> bool {
        match self.members.binary_search(&e) {
            Ok(_) => false,
            Err(pos) => {
                self.members.insert(pos, e);
                true
            }
        }
    }

    pub fn remove(&mut self, e: ElementId) -> bool {
        match self.members.binary_search(&e) {
            Ok(pos) => {
                self.members.remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    pub fn is_disjoint(&self, other: &Subset) -> bool {
        !self.iter().any(|e| other.contains(e))
    }

    pub fn is_subset_of(&self, other: &Subset) -> bool {
        self.iter().all(|e| other.contains(e))
    }

    /// Fails with [`Error::InstanceMismatch`] if any member is `>= n`.
    pub fn check_within(&self, n: usize) -> Result<()> {
        match self.members.last() {
            Some(&e) if e.index() >= n => Err(Error::InstanceMismatch { id: e.0, n }),
            _ => Ok(()),
        }
    }

    /// Semicolon-joined ids, the action encoding used in trace CSVs.
    pub fn to_csv_field(&self) -> String {
        let parts: Vec<String> = self.members.iter().map(|e| e.0.to_string()).collect();
        parts.join(";")
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, e) in self.members.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "}}")
    }
}

impl FromIterator<ElementId> for Subset {
    fn from_iter<I: IntoIterator<Item = ElementId>>(iter: I) -> Self {
        Subset::from_ids(iter.into_iter().map(ElementId::index))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::hash_map::DefaultHasher;
    use std::hash::{Hash, Hasher};

    fn hash_of(s: &Subset) -> u64 {
        let mut h = DefaultHasher::new();
        s.hash(&mut h);
        h.finish()
    }

    #[test]
    fn insert_and_remove_keep_order() {
        let mut s = Subset::from_ids([3, 1]);
        assert!(s.insert(ElementId(2)));
        assert!(!s.insert(ElementId(2)));
        assert_eq!(s.to_csv_field(), "1;2;3");
        assert!(s.remove(ElementId(1)));
        assert_eq!(s.to_string(), "{2,3}");
        assert_eq!(Subset::empty().to_csv_field(), "");
    }

    #[test]
    fn check_within_reports_offending_id() {
        let s = Subset::from_ids([0, 7]);
        assert!(s.check_within(8).is_ok());
        match s.check_within(5) {
            Err(Error::InstanceMismatch { id, n }) => assert_eq!((id, n), (7, 5)),
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn canonical_form_ignores_insertion_order(mut ids in prop::collection::vec(0usize..40, 0..12)) {
            let a = Subset::from_ids(ids.clone());
            ids.reverse();
            let b = Subset::from_ids(ids.clone());
            let mut c = Subset::empty();
            for &i in ids.iter().rev() {
                c.insert(ElementId::from(i));
            }
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(&a, &c);
            prop_assert_eq!(hash_of(&a), hash_of(&c));
            prop_assert!(a.members().windows(2).all(|w| w[0] < w[1]));
        }
    }
}
