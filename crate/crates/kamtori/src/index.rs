//! Multi-indices and monomial keys.
//!
//! A monomial is ∏_n I_n(0)^{a_n} q_n^{k_n} q̄_n^{k'_n}, identified by the
//! exponent triple (a, k, kp). Keys carry a canonical total order (degree,
//! then lexicographic on the sorted (mode, exponent) pairs of a, k, kp) so
//! that sparse maps iterate deterministically.

use crate::error::{KamError, Result};
use crate::weight::SigmaWeight;
use std::cmp::Ordering;
use std::fmt;

/// Sparse exponent vector: sorted (mode, exponent) pairs, no zero exponents.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct MultiIndex {
    entries: Vec<(i32, u32)>,
}

impl MultiIndex {
    pub fn new() -> Self {
        MultiIndex { entries: Vec::new() }
    }

    pub fn from_pairs<I: IntoIterator<Item = (i32, u32)>>(pairs: I) -> Self {
        let mut m = MultiIndex::new();
        for (n, e) in pairs {
            m.add(n, e as i64);
        }
        m
    }

    pub fn unit(n: i32) -> Self {
        MultiIndex {
            entries: vec![(n, 1)],
        }
    }

    pub fn get(&self, n: i32) -> u32 {
        match self.entries.binary_search_by_key(&n, |&(m, _)| m) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0,
        }
    }

    /// Adds `delta` to the exponent at mode `n`; panics on negative result.
    pub fn add(&mut self, n: i32, delta: i64) {
        match self.entries.binary_search_by_key(&n, |&(m, _)| m) {
            Ok(i) => {
                let v = self.entries[i].1 as i64 + delta;
                assert!(v >= 0, "negative exponent at mode {n}");
                if v == 0 {
                    self.entries.remove(i);
                } else {
                    self.entries[i].1 = v as u32;
                }
            }
            Err(i) => {
                assert!(delta >= 0, "negative exponent at mode {n}");
                if delta > 0 {
                    self.entries.insert(i, (n, delta as u32));
                }
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, u32)> + '_ {
        self.entries.iter().copied()
    }

    pub fn support(&self) -> impl Iterator<Item = i32> + '_ {
        self.entries.iter().map(|&(n, _)| n)
    }

    /// |a| = Σ a_n.
    pub fn total(&self) -> u32 {
        self.entries.iter().map(|&(_, e)| e).sum()
    }

    pub fn max_abs_mode(&self) -> Option<u32> {
        self.entries.iter().map(|&(n, _)| n.unsigned_abs()).max()
    }

    pub fn merged(&self, other: &MultiIndex) -> MultiIndex {
        let mut m = self.clone();
        for (n, e) in other.iter() {
            m.add(n, e as i64);
        }
        m
    }

    pub fn disjoint_support(&self, other: &MultiIndex) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.entries.len() && j < other.entries.len() {
            match self.entries[i].0.cmp(&other.entries[j].0) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => return false,
            }
        }
        true
    }

    /// Componentwise minimum.
    pub fn meet(&self, other: &MultiIndex) -> MultiIndex {
        let mut out = MultiIndex::new();
        for (n, e) in self.iter() {
            let o = other.get(n);
            if o > 0 {
                out.add(n, e.min(o) as i64);
            }
        }
        out
    }

    /// Componentwise difference; caller guarantees `other <= self`.
    pub fn minus(&self, other: &MultiIndex) -> MultiIndex {
        let mut out = self.clone();
        for (n, e) in other.iter() {
            out.add(n, -(e as i64));
        }
        out
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (n, e)) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}:{e}")?;
        }
        write!(f, "}}")
    }
}

/// The exponent triple (a, k, kp) of a monomial.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct MonomialKey {
    pub a: MultiIndex,
    pub k: MultiIndex,
    pub kp: MultiIndex,
}

impl MonomialKey {
    pub fn new(a: MultiIndex, k: MultiIndex, kp: MultiIndex) -> Self {
        MonomialKey { a, k, kp }
    }

    pub fn action_only(a: MultiIndex) -> Self {
        MonomialKey {
            a,
            k: MultiIndex::new(),
            kp: MultiIndex::new(),
        }
    }

    /// degree = 2|a| + |k| + |kp|.
    pub fn degree(&self) -> u32 {
        2 * self.a.total() + self.k.total() + self.kp.total()
    }

    pub fn is_constant(&self) -> bool {
        self.a.is_empty() && self.k.is_empty() && self.kp.is_empty()
    }

    /// k = kp, i.e. the monomial depends on actions only.
    pub fn is_resonant(&self) -> bool {
        self.k == self.kp
    }

    /// Σ (k_n - kp_n).
    pub fn mass(&self) -> i64 {
        let mut m = 0i64;
        for (_, e) in self.k.iter() {
            m += e as i64;
        }
        for (_, e) in self.kp.iter() {
            m -= e as i64;
        }
        m
    }

    /// Σ n (k_n - kp_n).
    pub fn momentum(&self) -> i64 {
        let mut m = 0i64;
        for (n, e) in self.k.iter() {
            m += n as i64 * e as i64;
        }
        for (n, e) in self.kp.iter() {
            m -= n as i64 * e as i64;
        }
        m
    }

    pub fn conserving(&self) -> bool {
        self.mass() == 0 && self.momentum() == 0
    }

    /// n_1^* = max{|n| : a_n + k_n + kp_n != 0}, or None for the constant key.
    pub fn n1_star(&self) -> Option<u32> {
        [&self.a, &self.k, &self.kp]
            .iter()
            .filter_map(|m| m.max_abs_mode())
            .max()
    }

    /// Σ_n (2a_n + k_n + kp_n) w(n).
    pub fn weight_sum(&self, w: &SigmaWeight) -> f64 {
        let mut s = 0.0;
        for (n, e) in self.a.iter() {
            s += 2.0 * e as f64 * w.weight(n);
        }
        for (n, e) in self.k.iter() {
            s += e as f64 * w.weight(n);
        }
        for (n, e) in self.kp.iter() {
            s += e as f64 * w.weight(n);
        }
        s
    }

    /// The norm exponent Σ(2a+k+kp) w(n) - 2 w(n_1^*); >= 0 for
    /// momentum-conserving keys.
    pub fn norm_exponent(&self, w: &SigmaWeight) -> f64 {
        match self.n1_star() {
            Some(n1) => self.weight_sum(w) - 2.0 * w.weight_abs(n1),
            None => 0.0,
        }
    }

    pub fn max_support_mode(&self) -> Option<u32> {
        self.n1_star()
    }

    /// Support lies inside [-window, window].
    pub fn within_window(&self, window: u32) -> bool {
        self.n1_star().map_or(true, |m| m <= window)
    }

    fn lex_key(&self) -> (u32, &[(i32, u32)], &[(i32, u32)], &[(i32, u32)]) {
        (
            self.degree(),
            &self.a.entries,
            &self.k.entries,
            &self.kp.entries,
        )
    }
}

impl Ord for MonomialKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.lex_key().cmp(&other.lex_key())
    }
}

impl PartialOrd for MonomialKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MonomialKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{} k{} kp{}", self.a, self.k, self.kp)
    }
}

/// Decreasing rearrangement of {|n| repeated 2a_n + k_n + kp_n times},
/// grouped as (|n|, multiplicity) with ±n contributions merged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rearrangement {
    /// (|n|, multiplicity), strictly decreasing in |n|.
    pub entries: Vec<(u32, u32)>,
}

impl Rearrangement {
    pub fn of_key(key: &MonomialKey) -> Self {
        Self::of_key_with_extra(key, &[])
    }

    /// Rearrangement of the key plus extra magnitudes with given
    /// multiplicities (used for the J-modes of classified terms, which
    /// count twice each).
    pub fn of_key_with_extra(key: &MonomialKey, extra: &[(u32, u32)]) -> Self {
        let mut mult: std::collections::BTreeMap<u32, u32> = std::collections::BTreeMap::new();
        let mut bump = |n: i32, e: u32| {
            if e > 0 {
                *mult.entry(n.unsigned_abs()).or_insert(0) += e;
            }
        };
        for (n, e) in key.a.iter() {
            bump(n, 2 * e);
        }
        for (n, e) in key.k.iter() {
            bump(n, e);
        }
        for (n, e) in key.kp.iter() {
            bump(n, e);
        }
        for &(abs_n, e) in extra {
            if e > 0 {
                *mult.entry(abs_n).or_insert(0) += e;
            }
        }
        Rearrangement {
            entries: mult.into_iter().rev().collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> u32 {
        self.entries.iter().map(|&(_, m)| m).sum()
    }

    /// n_i^* (1-based); None past the end.
    pub fn n_star(&self, i: u32) -> Option<u32> {
        let mut seen = 0;
        for &(n, m) in &self.entries {
            seen += m;
            if i <= seen {
                return Some(n);
            }
        }
        None
    }

    /// Σ_{i >= from} w(n_i^*) (1-based `from`).
    pub fn tail_weight_sum(&self, w: &SigmaWeight, from: u32) -> f64 {
        let mut s = 0.0;
        let mut pos = 0u32;
        for &(n, m) in &self.entries {
            let lo = pos + 1;
            let hi = pos + m;
            pos = hi;
            if hi < from {
                continue;
            }
            let count = hi - lo.max(from) + 1;
            s += count as f64 * w.weight_abs(n);
        }
        s
    }

    pub fn total_weight_sum(&self, w: &SigmaWeight) -> f64 {
        self.tail_weight_sum(w, 1)
    }
}

/// Σ(2a+k+kp) w(n) - 2 w(n_1^*) - ½ Σ_{i>=3} w(n_i^*); the tame inequality
/// asserts this is nonnegative for momentum-conserving keys.
pub fn tame_defect(key: &MonomialKey, w: &SigmaWeight) -> Result<f64> {
    let p = key.momentum();
    if p != 0 {
        return Err(KamError::MomentumNotConserved(p));
    }
    let r = Rearrangement::of_key(key);
    Ok(key.norm_exponent(w) - 0.5 * r.tail_weight_sum(w, 3))
}
