//! Compact link-index sets.
//!
//! A [`LinkSet`] is a set of link indices packed into a `u128`, which caps
//! the solvers at 128 links per network. Set algebra is branch-free word
//! arithmetic, and the canonical ordering used throughout the crate sorts
//! first by cardinality, then lexicographically by sorted member lists.

use std::fmt;

/// Upper bound on link indices a `LinkSet` can hold.
pub const MAX_LINKS: u32 = 128;

/// A set of link indices `0..128` packed into one machine word pair.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct LinkSet(u128);

impl LinkSet {
    pub const EMPTY: LinkSet = LinkSet(0);

    pub fn singleton(i: u32) -> LinkSet {
        assert!(i < MAX_LINKS, "link index {i} out of range");
        LinkSet(1u128 << i)
    }

    /// Builds a set from indices; duplicates are reported, not collapsed.
    pub fn from_indices(indices: &[u32]) -> Result<LinkSet, LinkSetError> {
        let mut bits = 0u128;
        for &i in indices {
            if i >= MAX_LINKS {
                return Err(LinkSetError::IndexOutOfRange(i));
            }
            let bit = 1u128 << i;
            if bits & bit != 0 {
                return Err(LinkSetError::Duplicate(i));
            }
            bits |= bit;
        }
        Ok(LinkSet(bits))
    }

    pub fn bits(self) -> u128 {
        self.0
    }

    pub fn from_bits(bits: u128) -> LinkSet {
        LinkSet(bits)
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, i: u32) -> bool {
        i < MAX_LINKS && self.0 & (1u128 << i) != 0
    }

    pub fn with(self, i: u32) -> LinkSet {
        LinkSet(self.0 | LinkSet::singleton(i).0)
    }

    pub fn without(self, i: u32) -> LinkSet {
        LinkSet(self.0 & !LinkSet::singleton(i).0)
    }

    pub fn union(self, other: LinkSet) -> LinkSet {
        LinkSet(self.0 | other.0)
    }

    pub fn intersection(self, other: LinkSet) -> LinkSet {
        LinkSet(self.0 & other.0)
    }

    pub fn is_disjoint(self, other: LinkSet) -> bool {
        self.0 & other.0 == 0
    }

    pub fn is_subset(self, other: LinkSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Member indices in ascending order.
    pub fn iter(self) -> impl Iterator<Item = u32> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros();
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    /// Sort key for the canonical family order: ascending cardinality, then
    /// ascending lexicographic order of the sorted index list. For sets of
    /// equal cardinality the lexicographic order coincides with descending
    /// order of the bit-reversed mask, which the key encodes by complement.
    pub fn canonical_key(self) -> (u32, u128) {
        (self.len(), !self.0.reverse_bits())
    }

    pub fn canonical_cmp(self, other: LinkSet) -> std::cmp::Ordering {
        self.canonical_key().cmp(&other.canonical_key())
    }
}

/// Errors building link sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum LinkSetError {
    #[error("link index {0} exceeds the {MAX_LINKS}-link capacity")]
    IndexOutOfRange(u32),
    #[error("link index {0} listed twice")]
    Duplicate(u32),
}

impl fmt::Debug for LinkSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Display for LinkSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}
