//! Sparse formal Hamiltonians over a finite mode window, and the weighted
//! ℓ∞ norm sup |B| / exp(ρ(Σ(2a+k+kp)w(n) − 2w(n_1^*))).
//!
//! Terms live in a `BTreeMap` keyed by the canonical monomial order, so
//! iteration and serialization are deterministic. Zero coefficients are
//! never stored.

use crate::coeff::Coeff;
use crate::error::{KamError, Result};
use crate::index::MonomialKey;
use crate::weight::SigmaWeight;
use num::complex::Complex64;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian<C: Coeff> {
    pub weight: SigmaWeight,
    /// Mode window bound M; supports lie in [-M, M].
    pub window: u32,
    pub terms: BTreeMap<MonomialKey, C>,
}

impl<C: Coeff> Hamiltonian<C> {
    pub fn zero(weight: SigmaWeight, window: u32) -> Self {
        Hamiltonian {
            weight,
            window,
            terms: BTreeMap::new(),
        }
    }

    pub fn single(weight: SigmaWeight, window: u32, key: MonomialKey, coeff: C) -> Self {
        let mut h = Self::zero(weight, window);
        h.insert(key, coeff);
        h
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `coeff` to the entry at `key`, dropping exact zeros.
    pub fn insert(&mut self, key: MonomialKey, coeff: C) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(key) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().add(&coeff);
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn compatible(&self, other: &Self) -> Result<()> {
        if self.window != other.window {
            return Err(KamError::WindowMismatch(self.window, other.window));
        }
        if !self.weight.compatible(&other.weight) {
            return Err(KamError::WeightMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.insert(k.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.insert(k.clone(), c.neg());
        }
        Ok(out)
    }

    pub fn scaled(&self, factor: &C) -> Self {
        let mut out = Self::zero(self.weight, self.window);
        for (k, c) in &self.terms {
            out.insert(k.clone(), c.mul(factor));
        }
        out
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).fold(0.0, f64::max)
    }

    /// Drops terms with |B| < threshold · max |B|; returns (count, mass)
    /// of the removed terms. Relative threshold 0 drops nothing.
    pub fn prune(&mut self, rel_threshold: f64) -> (usize, f64) {
        if rel_threshold <= 0.0 || self.terms.is_empty() {
            return (0, 0.0);
        }
        let cut = rel_threshold * self.max_abs_coeff();
        let mut count = 0usize;
        let mut mass = 0.0f64;
        self.terms.retain(|_, c| {
            let a = c.abs();
            if a < cut {
                count += 1;
                mass += a;
                false
            } else {
                true
            }
        });
        (count, mass)
    }

    /// ln of the weighted norm at weight ρ, or None for the empty
    /// Hamiltonian. Computed in log space so large exponents cannot
    /// overflow.
    pub fn weighted_norm_ln(&self, rho: f64) -> Option<f64> {
        self.terms
            .iter()
            .map(|(key, c)| c.abs().ln() - rho * key.norm_exponent(&self.weight))
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }

    /// The weighted ℓ∞ norm; 0 for the empty Hamiltonian.
    pub fn weighted_norm(&self, rho: f64) -> f64 {
        self.weighted_norm_ln(rho).map_or(0.0, f64::exp)
    }

    /// Every stored key is mass- and momentum-conserving.
    pub fn conserving(&self) -> bool {
        self.terms.keys().all(|k| k.conserving())
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(|k| k.degree()).max().unwrap_or(0)
    }
}

/// Finitely supported sequence (q_n); amplitudes are always numeric.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SequenceState {
    pub q: BTreeMap<i32, Complex64>,
}

impl SequenceState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (i32, Complex64)>>(pairs: I) -> Self {
        let mut s = Self::new();
        for (n, v) in pairs {
            s.set(n, v);
        }
        s
    }

    pub fn get(&self, n: i32) -> Complex64 {
        self.q.get(&n).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn set(&mut self, n: i32, v: Complex64) {
        if v.re == 0.0 && v.im == 0.0 {
            self.q.remove(&n);
        } else {
            self.q.insert(n, v);
        }
    }

    /// ‖q‖_{σ,∞} = sup_n |q_n| e^{w(n)}; 0 for the empty state.
    pub fn seq_norm(&self, w: &SigmaWeight) -> f64 {
        self.seq_norm_ln(w).map_or(0.0, f64::exp)
    }

    pub fn seq_norm_ln(&self, w: &SigmaWeight) -> Option<f64> {
        self.q
            .iter()
            .filter(|(_, v)| v.norm() > 0.0)
            .map(|(&n, v)| v.norm().ln() + w.weight(n))
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }
}

/// Initial actions I_n(0), constrained by I_n(0) <= e^{-2 w(n)}.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActionVector {
    pub values: BTreeMap<i32, f64>,
}

impl ActionVector {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(values: BTreeMap<i32, f64>, w: &SigmaWeight) -> Result<Self> {
        for (&n, &v) in &values {
            if v < 0.0 {
                return Err(KamError::InvalidParam(format!(
                    "initial action at mode {n} is negative"
                )));
            }
            let cap = (-2.0 * w.weight(n)).exp();
            if v > cap * (1.0 + 1e-12) {
                return Err(KamError::InvalidParam(format!(
                    "initial action {v:.3e} at mode {n} exceeds e^(-2w) = {cap:.3e}"
                )));
            }
        }
        Ok(ActionVector { values })
    }

    /// The torus actions I_n(0) = ¾ e^{-2 w(n)} on the window.
    pub fn torus(window: u32, w: &SigmaWeight) -> Self {
        let mut values = BTreeMap::new();
        for n in -(window as i32)..=window as i32 {
            values.insert(n, 0.75 * (-2.0 * w.weight(n)).exp());
        }
        ActionVector { values }
    }

    pub fn get(&self, n: i32) -> f64 {
        self.values.get(&n).copied().unwrap_or(0.0)
    }

    /// ∏ I_n(0)^{a_n} over the multi-index `a`.
    pub fn power(&self, a: &crate::index::MultiIndex) -> f64 {
        let mut p = 1.0;
        for (n, e) in a.iter() {
            p *= self.get(n).powi(e as i32);
        }
        p
    }
}
