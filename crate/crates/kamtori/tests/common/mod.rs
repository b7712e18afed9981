//! Test-only oracles, independent of the implementation paths they check.

use kamtori::coeff::Coeff;
use kamtori::ham::Hamiltonian;
use kamtori::index::MonomialKey;
use std::collections::BTreeMap;

/// A formal polynomial in (I(0), q, q̄) as a bare coefficient map; the
/// scaffolding for the symbolic partial-derivative bracket oracle.
pub struct Poly<C: Coeff> {
    pub terms: BTreeMap<MonomialKey, C>,
}

impl<C: Coeff> Poly<C> {
    pub fn from_ham(h: &Hamiltonian<C>) -> Self {
        Poly {
            terms: h.terms.clone(),
        }
    }

    pub fn zero() -> Self {
        Poly {
            terms: BTreeMap::new(),
        }
    }

    fn insert(&mut self, key: MonomialKey, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(key) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = e.get().add(&c);
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    /// ∂/∂q_j: each term with k_j > 0 maps to k_j · M(k − e_j).
    pub fn d_dq(&self, j: i32) -> Poly<C> {
        let mut out = Poly::zero();
        for (key, c) in &self.terms {
            let e = key.k.get(j);
            if e == 0 {
                continue;
            }
            let mut k = key.k.clone();
            k.add(j, -1);
            out.insert(
                MonomialKey::new(key.a.clone(), k, key.kp.clone()),
                c.scale_int(e as i64),
            );
        }
        out
    }

    /// ∂/∂q̄_j.
    pub fn d_dqbar(&self, j: i32) -> Poly<C> {
        let mut out = Poly::zero();
        for (key, c) in &self.terms {
            let e = key.kp.get(j);
            if e == 0 {
                continue;
            }
            let mut kp = key.kp.clone();
            kp.add(j, -1);
            out.insert(
                MonomialKey::new(key.a.clone(), key.k.clone(), kp),
                c.scale_int(e as i64),
            );
        }
        out
    }

    pub fn mul(&self, other: &Poly<C>) -> Poly<C> {
        let mut out = Poly::zero();
        for (k1, c1) in &self.terms {
            for (k2, c2) in &other.terms {
                let key = MonomialKey::new(
                    k1.a.merged(&k2.a),
                    k1.k.merged(&k2.k),
                    k1.kp.merged(&k2.kp),
                );
                out.insert(key, c1.mul(c2));
            }
        }
        out
    }

    pub fn add_assign(&mut self, other: &Poly<C>) {
        for (k, c) in &other.terms {
            self.insert(k.clone(), c.clone());
        }
    }

    pub fn sub_assign(&mut self, other: &Poly<C>) {
        for (k, c) in &other.terms {
            self.insert(k.clone(), c.neg());
        }
    }

    pub fn scaled_i(&self) -> Poly<C> {
        let mut out = Poly::zero();
        for (k, c) in &self.terms {
            out.insert(k.clone(), c.mul_i());
        }
        out
    }
}

/// Brute-force {A, B} = i Σ_j (∂A/∂q_j ∂B/∂q̄_j − ∂A/∂q̄_j ∂B/∂q_j), built
/// from first-principles differentiation and multiplication only.
pub fn oracle_bracket<C: Coeff>(a: &Hamiltonian<C>, b: &Hamiltonian<C>) -> BTreeMap<MonomialKey, C> {
    let pa = Poly::from_ham(a);
    let pb = Poly::from_ham(b);
    let mut modes: Vec<i32> = Vec::new();
    for key in a.terms.keys().chain(b.terms.keys()) {
        modes.extend(key.k.support());
        modes.extend(key.kp.support());
    }
    modes.sort_unstable();
    modes.dedup();

    let mut total = Poly::zero();
    for &j in &modes {
        let t1 = pa.d_dq(j).mul(&pb.d_dqbar(j));
        let t2 = pa.d_dqbar(j).mul(&pb.d_dq(j));
        total.add_assign(&t1);
        total.sub_assign(&t2);
    }
    total.scaled_i().terms
}

/// Max relative coefficient discrepancy between two term maps (0 when both
/// empty); exact-equality callers compare the maps directly instead.
pub fn max_rel_diff<C: Coeff>(
    x: &BTreeMap<MonomialKey, C>,
    y: &BTreeMap<MonomialKey, C>,
) -> f64 {
    let mut keys: Vec<&MonomialKey> = x.keys().chain(y.keys()).collect();
    keys.sort();
    keys.dedup();
    let mut worst = 0.0f64;
    for k in keys {
        let cx = x.get(k).map(|c| c.to_c64()).unwrap_or_default();
        let cy = y.get(k).map(|c| c.to_c64()).unwrap_or_default();
        let denom = cx.norm().max(cy.norm());
        if denom > 0.0 {
            worst = worst.max((cx - cy).norm() / denom);
        }
    }
    worst
}
