//! The R0/R1/R2 split of a perturbation and its plus-norm.
//!
//! Writing I_n = q_n q̄_n and J_n = I_n − I_n(0), every monomial with
//! overlapping q/q̄ exponents factors as ∏ I_n(0)^{α_n} · ∏ I_n^{b_n} ·
//! ∏ q^{l} q̄^{l'} with b = κ ∧ κ' and disjoint l, l'. The product
//! ∏ I_n^{b_n} is then telescoped mode by mode (increasing mode order)
//! into pieces of J-degree exactly 0, 1 and 2:
//!
//!   I^b = I(0)^b + b I(0)^{b−1} J + Σ_{r=0}^{b−2} (r+1) I(0)^r J² I^{b−2−r}
//!
//! per mode, with residual full actions I^p normal-ordered into the q/q̄
//! exponents of the J-quadratic class. R0 collects the J-free part, R1 the
//! J-linear part (one explicit J mode), R2 the J-quadratic part (an ordered
//! pair of J modes, support overlap legal). The split is exactly invertible:
//! `reconstruct` substitutes J_n = q_n q̄_n − I_n(0) back and re-expands.

use crate::coeff::Coeff;
use crate::error::Result;
use crate::ham::{ActionVector, Hamiltonian};
use crate::index::{MonomialKey, MultiIndex, Rearrangement};
use crate::weight::SigmaWeight;
use std::collections::BTreeMap;

/// Which class a term belongs to, together with its explicit J modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum JModes {
    None,
    One(i32),
    /// Ordered pair j1 <= j2.
    Two(i32, i32),
}

impl JModes {
    pub fn pair(m1: i32, m2: i32) -> Self {
        if m1 <= m2 {
            JModes::Two(m1, m2)
        } else {
            JModes::Two(m2, m1)
        }
    }

    /// (|m|, 2) entries for the effective rearrangement: each J mode
    /// counts as a q q̄ pair.
    pub fn extra_multiplicities(&self) -> Vec<(u32, u32)> {
        match *self {
            JModes::None => vec![],
            JModes::One(m) => vec![(m.unsigned_abs(), 2)],
            JModes::Two(m1, m2) if m1 == m2 => vec![(m1.unsigned_abs(), 4)],
            JModes::Two(m1, m2) => vec![(m1.unsigned_abs(), 2), (m2.unsigned_abs(), 2)],
        }
    }

    pub fn modes(&self) -> Vec<i32> {
        match *self {
            JModes::None => vec![],
            JModes::One(m) => vec![m],
            JModes::Two(m1, m2) => vec![m1, m2],
        }
    }
}

/// Key of an R1 entry: the explicit J mode plus the inner monomial.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct R1Key {
    pub j: i32,
    pub key: MonomialKey,
}

/// Key of an R2 entry: ordered J modes j1 <= j2 plus the inner monomial.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct R2Key {
    pub j1: i32,
    pub j2: i32,
    pub key: MonomialKey,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifiedPerturbation<C: Coeff> {
    pub weight: SigmaWeight,
    pub window: u32,
    pub i0: ActionVector,
    pub r0: BTreeMap<MonomialKey, C>,
    pub r1: BTreeMap<R1Key, C>,
    pub r2: BTreeMap<R2Key, C>,
}

impl<C: Coeff> ClassifiedPerturbation<C> {
    pub fn empty(weight: SigmaWeight, window: u32, i0: ActionVector) -> Self {
        ClassifiedPerturbation {
            weight,
            window,
            i0,
            r0: BTreeMap::new(),
            r1: BTreeMap::new(),
            r2: BTreeMap::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.r0.is_empty() && self.r1.is_empty() && self.r2.is_empty()
    }

    pub fn term_count(&self) -> usize {
        self.r0.len() + self.r1.len() + self.r2.len()
    }

    /// Adds a coefficient into the R0 class, merging and zero-dropping.
    pub fn merge_r0(&mut self, key: MonomialKey, c: C) {
        insert_merge(&mut self.r0, key, c);
    }

    pub fn merge_r1(&mut self, key: R1Key, c: C) {
        insert_merge(&mut self.r1, key, c);
    }

    pub fn merge_r2(&mut self, key: R2Key, c: C) {
        insert_merge(&mut self.r2, key, c);
    }

    fn insert_r0(&mut self, key: MonomialKey, c: C) {
        insert_merge(&mut self.r0, key, c);
    }

    fn insert_r1(&mut self, j: i32, key: MonomialKey, c: C) {
        insert_merge(&mut self.r1, R1Key { j, key }, c);
    }

    fn insert_r2(&mut self, m1: i32, m2: i32, key: MonomialKey, c: C) {
        let (j1, j2) = if m1 <= m2 { (m1, m2) } else { (m2, m1) };
        insert_merge(&mut self.r2, R2Key { j1, j2, key }, c);
    }

    /// ln of the class-wise plus-norm of the R0 part at weight ρ.
    pub fn r0_norm_ln(&self, rho: f64) -> Option<f64> {
        fold_max(
            self.r0
                .iter()
                .map(|(k, c)| c.abs().ln() - rho * plus_exponent(&self.weight, k, JModes::None)),
        )
    }

    pub fn r1_norm_ln(&self, rho: f64) -> Option<f64> {
        fold_max(self.r1.iter().map(|(k, c)| {
            c.abs().ln() - rho * plus_exponent(&self.weight, &k.key, JModes::One(k.j))
        }))
    }

    pub fn r2_norm_ln(&self, rho: f64) -> Option<f64> {
        fold_max(self.r2.iter().map(|(k, c)| {
            c.abs().ln() - rho * plus_exponent(&self.weight, &k.key, JModes::Two(k.j1, k.j2))
        }))
    }

    pub fn r0_norm(&self, rho: f64) -> f64 {
        self.r0_norm_ln(rho).map_or(0.0, f64::exp)
    }

    pub fn r1_norm(&self, rho: f64) -> f64 {
        self.r1_norm_ln(rho).map_or(0.0, f64::exp)
    }

    pub fn r2_norm(&self, rho: f64) -> f64 {
        self.r2_norm_ln(rho).map_or(0.0, f64::exp)
    }

    /// ‖R‖⁺_ρ = max of the three class-wise sups; 0 when empty.
    pub fn plus_norm(&self, rho: f64) -> f64 {
        self.plus_norm_ln(rho).map_or(0.0, f64::exp)
    }

    pub fn plus_norm_ln(&self, rho: f64) -> Option<f64> {
        fold_max(
            [
                self.r0_norm_ln(rho),
                self.r1_norm_ln(rho),
                self.r2_norm_ln(rho),
            ]
            .into_iter()
            .flatten(),
        )
    }

    /// Every inner key in R0 and R1 has disjoint k/kp supports.
    pub fn supports_disjoint(&self) -> bool {
        self.r0.keys().all(|k| k.k.disjoint_support(&k.kp))
            && self.r1.keys().all(|k| k.key.k.disjoint_support(&k.key.kp))
    }

    /// All inner keys conserve mass and momentum (J factors are neutral).
    pub fn conserving(&self) -> bool {
        self.r0.keys().all(|k| k.conserving())
            && self.r1.keys().all(|k| k.key.conserving())
            && self.r2.keys().all(|k| k.key.conserving())
    }

    /// Removes the action-only (k = kp = 0) entries of R0 and R1 and
    /// returns them as (constant terms, shift terms).
    pub fn take_resonant(&mut self) -> (Vec<(MonomialKey, C)>, Vec<(R1Key, C)>) {
        let r0_res: Vec<MonomialKey> = self
            .r0
            .keys()
            .filter(|k| k.k.is_empty() && k.kp.is_empty())
            .cloned()
            .collect();
        let r1_res: Vec<R1Key> = self
            .r1
            .keys()
            .filter(|k| k.key.k.is_empty() && k.key.kp.is_empty())
            .cloned()
            .collect();
        let mut c0 = Vec::new();
        for k in r0_res {
            let c = self.r0.remove(&k).unwrap();
            c0.push((k, c));
        }
        let mut c1 = Vec::new();
        for k in r1_res {
            let c = self.r1.remove(&k).unwrap();
            c1.push((k, c));
        }
        (c0, c1)
    }
}

fn fold_max<I: Iterator<Item = f64>>(it: I) -> Option<f64> {
    it.fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
}

fn insert_merge<K: Ord, C: Coeff>(map: &mut BTreeMap<K, C>, key: K, c: C) {
    if c.is_zero() {
        return;
    }
    match map.entry(key) {
        std::collections::btree_map::Entry::Vacant(e) => {
            e.insert(c);
        }
        std::collections::btree_map::Entry::Occupied(mut e) => {
            let sum = e.get().add(&c);
            if sum.is_zero() {
                e.remove();
            } else {
                *e.get_mut() = sum;
            }
        }
    }
}

/// The plus-norm exponent of a classified term: Σ(2a+k+kp) w(n) plus
/// 2w(m) per J mode, minus 2w(n_1^*) where n_1^* also ranges over the
/// J modes.
pub fn plus_exponent(w: &SigmaWeight, key: &MonomialKey, j: JModes) -> f64 {
    let mut sum = key.weight_sum(w);
    let mut n1 = key.n1_star();
    for m in j.modes() {
        sum += 2.0 * w.weight(m);
        n1 = Some(n1.map_or(m.unsigned_abs(), |v| v.max(m.unsigned_abs())));
    }
    match n1 {
        Some(n1) => sum - 2.0 * w.weight_abs(n1),
        None => 0.0,
    }
}

/// Effective rearrangement of a classified term (J modes count twice);
/// drives the truncation filter of the homological solver.
pub fn effective_rearrangement(key: &MonomialKey, j: JModes) -> Rearrangement {
    Rearrangement::of_key_with_extra(key, &j.extra_multiplicities())
}

/// Splits a Hamiltonian into the R0/R1/R2 classes relative to the initial
/// actions `i0`. Exact inverse of `reconstruct` under exact arithmetic.
pub fn classify<C: Coeff>(h: &Hamiltonian<C>, i0: &ActionVector) -> ClassifiedPerturbation<C> {
    let mut out = ClassifiedPerturbation::empty(h.weight, h.window, i0.clone());
    for (key, coeff) in &h.terms {
        let b = key.k.meet(&key.kp);
        let l = key.k.minus(&b);
        let lp = key.kp.minus(&b);
        if b.is_empty() {
            out.insert_r0(
                MonomialKey::new(key.a.clone(), l, lp),
                coeff.clone(),
            );
            continue;
        }

        // J-degree 0: all overlapping actions frozen at I(0).
        out.insert_r0(
            MonomialKey::new(key.a.merged(&b), l.clone(), lp.clone()),
            coeff.clone(),
        );

        let modes: Vec<(i32, u32)> = b.iter().collect();
        for (mi, &(m, bm)) in modes.iter().enumerate() {
            // J-degree 1 at mode m: b_m I_m(0)^{b_m-1} J_m, everything else
            // frozen at I(0).
            let mut a1 = key.a.merged(&b);
            a1.add(m, -1);
            out.insert_r1(
                m,
                MonomialKey::new(a1, l.clone(), lp.clone()),
                coeff.scale_int(bm as i64),
            );

            // J-degree 2 at (m, m): Σ_{r=0}^{b_m-2} (r+1) I_m(0)^r J_m²
            // I_m^{b_m-2-r}, modes below m frozen, modes above m left as
            // full actions I^b = q^b q̄^b.
            let full_tail = |from: usize, k2: &mut MultiIndex, kp2: &mut MultiIndex| {
                for &(n2, b2) in &modes[from..] {
                    k2.add(n2, b2 as i64);
                    kp2.add(n2, b2 as i64);
                }
            };
            if bm >= 2 {
                for r in 0..=(bm - 2) {
                    let mut a2 = key.a.clone();
                    for &(n2, b2) in &modes[..mi] {
                        a2.add(n2, b2 as i64);
                    }
                    a2.add(m, r as i64);
                    let mut k2 = l.clone();
                    let mut kp2 = lp.clone();
                    let rest = bm - 2 - r;
                    k2.add(m, rest as i64);
                    kp2.add(m, rest as i64);
                    full_tail(mi + 1, &mut k2, &mut kp2);
                    out.insert_r2(
                        m,
                        m,
                        MonomialKey::new(a2, k2, kp2),
                        coeff.scale_int((r + 1) as i64),
                    );
                }
            }

            // J-degree 2 at (m, m2) with m2 > m: b_m I_m(0)^{b_m-1} J_m times
            // the first-order telescoping of mode m2, modes strictly between
            // frozen, modes above m2 left full.
            for (mj, &(m2, bm2)) in modes.iter().enumerate().skip(mi + 1) {
                for r in 0..bm2 {
                    let mut a2 = key.a.clone();
                    for &(n2, b2) in &modes[..mi] {
                        a2.add(n2, b2 as i64);
                    }
                    a2.add(m, bm as i64 - 1);
                    for &(n2, b2) in &modes[mi + 1..mj] {
                        a2.add(n2, b2 as i64);
                    }
                    a2.add(m2, r as i64);
                    let mut k2 = l.clone();
                    let mut kp2 = lp.clone();
                    let rest = bm2 - 1 - r;
                    k2.add(m2, rest as i64);
                    kp2.add(m2, rest as i64);
                    full_tail(mj + 1, &mut k2, &mut kp2);
                    out.insert_r2(
                        m,
                        m2,
                        MonomialKey::new(a2, k2, kp2),
                        coeff.scale_int(bm as i64),
                    );
                }
            }
        }
    }
    out
}

/// Substitutes J_n = q_n q̄_n − I_n(0) into every classified term and
/// expands back to a plain Hamiltonian.
pub fn reconstruct<C: Coeff>(p: &ClassifiedPerturbation<C>) -> Hamiltonian<C> {
    let mut h = Hamiltonian::zero(p.weight, p.window);
    for (key, c) in &p.r0 {
        h.insert(key.clone(), c.clone());
    }
    for (k, c) in &p.r1 {
        expand_j(&mut h, &k.key, c, &[k.j]);
    }
    for (k, c) in &p.r2 {
        expand_j(&mut h, &k.key, c, &[k.j1, k.j2]);
    }
    h
}

/// Multiplies the monomial by ∏ J_m over `j_modes` and inserts the
/// expansion: J_m = q_m q̄_m − I_m(0), the latter as an a-exponent bump.
fn expand_j<C: Coeff>(h: &mut Hamiltonian<C>, key: &MonomialKey, coeff: &C, j_modes: &[i32]) {
    let mut parts: Vec<(MonomialKey, C)> = vec![(key.clone(), coeff.clone())];
    for &m in j_modes {
        let mut next = Vec::with_capacity(parts.len() * 2);
        for (k, c) in parts {
            let mut kq = k.clone();
            kq.k.add(m, 1);
            kq.kp.add(m, 1);
            next.push((kq, c.clone()));
            let mut ka = k;
            ka.a.add(m, 1);
            next.push((ka, c.neg()));
        }
        parts = next;
    }
    for (k, c) in parts {
        h.insert(k, c);
    }
}

/// [R0] and the frequency shift: constant = Σ B_{a00} ∏ I(0)^a over the
/// action-only R0 terms, shift_m = Σ B^{(m)}_{a00} ∏ I(0)^a over the
/// action-only R1 terms.
pub fn resonant_part<C: Coeff>(
    p: &ClassifiedPerturbation<C>,
    i0: &ActionVector,
) -> (f64, BTreeMap<i32, f64>) {
    let mut constant = 0.0f64;
    for (key, c) in &p.r0 {
        if key.k.is_empty() && key.kp.is_empty() {
            constant += c.to_c64().re * i0.power(&key.a);
        }
    }
    let mut shift: BTreeMap<i32, f64> = BTreeMap::new();
    for (k, c) in &p.r1 {
        if k.key.k.is_empty() && k.key.kp.is_empty() {
            *shift.entry(k.j).or_insert(0.0) += c.to_c64().re * i0.power(&k.key.a);
        }
    }
    shift.retain(|_, v| *v != 0.0);
    (constant, shift)
}

/// Serializes a classified perturbation losslessly for determinism and
/// identity checks (used by tests and the io layer).
pub fn audit_classified<C: Coeff>(p: &ClassifiedPerturbation<C>) -> Result<()> {
    use crate::error::KamError;
    if !p.supports_disjoint() {
        return Err(KamError::InvalidParam(
            "R0/R1 inner key with overlapping k/kp support".into(),
        ));
    }
    Ok(())
}
