//! Fixed-width bit sets over the points of one sort.
//!
//! Every sort in this crate (the `W` and `U` carriers of a polarity, the
//! elements of a finite algebra) is indexed `0..n` with `n <= 64`, so a
//! subset fits in one machine word.

use std::fmt;

/// Largest carrier a [`PointSet`] can index.
pub const MAX_POINTS: usize = 64;

/// A subset of `0..n` for some `n <= 64`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PointSet(u64);

impl PointSet {
    pub const EMPTY: PointSet = PointSet(0);

    /// The full carrier `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_POINTS);
        if n == MAX_POINTS {
            PointSet(u64::MAX)
        } else {
            PointSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(i: usize) -> Self {
        debug_assert!(i < MAX_POINTS);
        PointSet(1u64 << i)
    }

    pub fn from_bits(bits: u64) -> Self {
        PointSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, i: usize) -> bool {
        i < MAX_POINTS && self.0 & (1u64 << i) != 0
    }

    pub fn insert(&mut self, i: usize) {
        debug_assert!(i < MAX_POINTS);
        self.0 |= 1u64 << i;
    }

    pub fn remove(&mut self, i: usize) {
        debug_assert!(i < MAX_POINTS);
        self.0 &= !(1u64 << i);
    }

    pub fn with(mut self, i: usize) -> Self {
        self.insert(i);
        self
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn intersect(self, other: Self) -> Self {
        PointSet(self.0 & other.0)
    }

    pub fn union(self, other: Self) -> Self {
        PointSet(self.0 | other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        PointSet(self.0 & !other.0)
    }

    /// Complement relative to the carrier `0..n`.
    pub fn complement(self, n: usize) -> Self {
        PointSet(!self.0 & Self::full(n).0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Whether every member is below `n`.
    pub fn fits(self, n: usize) -> bool {
        self.is_subset(Self::full(n))
    }

    pub fn iter(self) -> Iter {
        Iter(self.0)
    }

    /// Smallest member, if any.
    pub fn first(self) -> Option<usize> {
        if self.0 == 0 {
            None
        } else {
            Some(self.0.trailing_zeros() as usize)
        }
    }

    /// All subsets of `0..n`, in increasing bit-pattern order.
    pub fn subsets(n: usize) -> impl Iterator<Item = PointSet> {
        assert!(n < MAX_POINTS, "cannot enumerate subsets of a 64-point carrier");
        (0u64..(1u64 << n)).map(PointSet)
    }
}

impl FromIterator<usize> for PointSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = PointSet::EMPTY;
        for i in iter {
            s.insert(i);
        }
        s
    }
}

impl fmt::Debug for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

pub struct Iter(u64);

impl Iterator for Iter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Iter {}

impl IntoIterator for PointSet {
    type Item = usize;
    type IntoIter = Iter;

    fn into_iter(self) -> Iter {
        self.iter()
    }
}

/// Odometer over `dims[0] x dims[1] x ..`, restricted to members of `sets`.
///
/// Calls `visit` on every tuple of the product `sets[0] x sets[1] x ..` in
/// lexicographic order; stops early when `visit` returns `false`. Returns
/// `false` iff it stopped early. The empty product (some set empty) visits
/// nothing; the nullary product visits the empty tuple once.
pub fn for_each_tuple(sets: &[PointSet], mut visit: impl FnMut(&[usize]) -> bool) -> bool {
    let members: Vec<Vec<usize>> = sets.iter().map(|s| s.iter().collect()).collect();
    if members.iter().any(|m| m.is_empty()) {
        return true;
    }
    let mut pos = vec![0usize; members.len()];
    let mut tuple: Vec<usize> = members.iter().map(|m| m[0]).collect();
    loop {
        if !visit(&tuple) {
            return false;
        }
        let mut k = members.len();
        loop {
            if k == 0 {
                return true;
            }
            k -= 1;
            pos[k] += 1;
            if pos[k] < members[k].len() {
                tuple[k] = members[k][pos[k]];
                break;
            }
            pos[k] = 0;
            tuple[k] = members[k][0];
        }
    }
}
