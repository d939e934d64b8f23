use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::OnceLock;

/// Strictly increasing set of axes in {1,...,7}, stored as a bitmask (bit k is axis k+1).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(u8);

struct Tables {
    basis: [Vec<MultiIndex>; 8],
    position: [usize; 128],
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let mut basis: [Vec<MultiIndex>; 8] = Default::default();
        let mut all: Vec<MultiIndex> = (0u8..128).map(MultiIndex).collect();
        all.sort_by(|a, b| a.axes().cmp(&b.axes()));
        for m in all {
            basis[m.grade()].push(m);
        }
        let mut position = [0usize; 128];
        for b in basis.iter() {
            for (k, m) in b.iter().enumerate() {
                position[m.0 as usize] = k;
            }
        }
        Tables { basis, position }
    })
}

/// Number of increasing multi-indices of length p.
pub fn dim(p: usize) -> usize {
    if p > 7 {
        0
    } else {
        tables().basis[p].len()
    }
}

/// Increasing multi-indices of length p in lexicographic order.
pub fn basis(p: usize) -> &'static [MultiIndex] {
    &tables().basis[p]
}

impl MultiIndex {
    pub const EMPTY: MultiIndex = MultiIndex(0);
    pub const FULL: MultiIndex = MultiIndex(0x7f);

    /// Build from 1-based axes; rejects repeats and out-of-range entries, order is irrelevant.
    pub fn new(axes: &[usize]) -> Option<Self> {
        let mut bits = 0u8;
        for &a in axes {
            if !(1..=7).contains(&a) || bits & (1 << (a - 1)) != 0 {
                return None;
            }
            bits |= 1 << (a - 1);
        }
        Some(MultiIndex(bits))
    }

    /// Panicking constructor for literals in code and tests.
    pub fn of(axes: &[usize]) -> Self {
        Self::new(axes).expect("invalid multi-index")
    }

    pub fn from_bits(bits: u8) -> Self {
        MultiIndex(bits & 0x7f)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn grade(self) -> usize {
        self.0.count_ones() as usize
    }

    /// 1-based axes in increasing order.
    pub fn axes(self) -> Vec<usize> {
        (1..=7).filter(|a| self.0 & (1 << (a - 1)) != 0).collect()
    }

    pub fn contains(self, axis: usize) -> bool {
        (1..=7).contains(&axis) && self.0 & (1 << (axis - 1)) != 0
    }

    /// Position in the lexicographic basis of its grade.
    pub fn position(self) -> usize {
        tables().position[self.0 as usize]
    }

    pub fn complement(self) -> Self {
        MultiIndex(!self.0 & 0x7f)
    }

    pub fn is_disjoint(self, other: Self) -> bool {
        self.0 & other.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        MultiIndex(self.0 | other.0)
    }

    pub fn without(self, axis: usize) -> Self {
        MultiIndex(self.0 & !(1 << (axis - 1)))
    }

    /// Sign of dx^I ∧ dx^J relative to dx^{I∪J}; zero when the indices overlap.
    pub fn wedge_sign(self, other: Self) -> i32 {
        if !self.is_disjoint(other) {
            return 0;
        }
        let mut inversions = 0u32;
        for j in other.axes() {
            inversions += (self.0 >> j).count_ones();
        }
        if inversions % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// Number of elements of I smaller than `axis` (sign exponent of contraction).
    pub fn rank_of(self, axis: usize) -> usize {
        (self.0 & ((1u8 << (axis - 1)) - 1)).count_ones() as usize
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "dx{self}")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.axes().iter().map(|a| char::from(b'0' + *a as u8)).collect();
        write!(f, "[{s}]")
    }
}
