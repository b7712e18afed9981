//! Poisson brackets, Lie-series transforms and vector fields.
//!
//! Bracket convention: {A, B} = i Σ_j (∂A/∂q_j ∂B/∂q̄_j − ∂A/∂q̄_j ∂B/∂q_j).
//! On monomials the produced coefficient carries the factor
//! i (k_j K'_j − k'_j K_j), so for the normal form N = Σ (n²+Ṽ_n)|q_n|²
//! one gets {N, M_{akk'}} = −i (Σ (k_n−k'_n)(n²+Ṽ_n)) M_{akk'}; this sign
//! fixes the −i in the homological solutions.

use crate::coeff::Coeff;
use crate::error::{KamError, Result};
use crate::ham::{ActionVector, Hamiltonian, SequenceState};
use crate::index::MonomialKey;
use num::complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Truncation policy for bracket and Lie-series algebra. The paper's
/// series are formal; these caps make the truncation explicit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketCaps {
    /// Max monomial degree retained.
    pub degree_cap: u32,
    /// Max Lie-series order K.
    pub order_cap: u32,
    /// Relative pruning tolerance (× current max |B|).
    pub drop_threshold: f64,
}

impl BracketCaps {
    pub fn new(degree_cap: u32, order_cap: u32, drop_threshold: f64) -> Result<Self> {
        if degree_cap < 6 {
            return Err(KamError::InvalidCaps(format!(
                "degree_cap must be >= 6, got {degree_cap}"
            )));
        }
        if order_cap < 1 {
            return Err(KamError::InvalidCaps("order_cap must be >= 1".into()));
        }
        if !(drop_threshold >= 0.0) {
            return Err(KamError::InvalidCaps("drop_threshold must be >= 0".into()));
        }
        Ok(BracketCaps {
            degree_cap,
            order_cap,
            drop_threshold,
        })
    }
}

impl Default for BracketCaps {
    /// degree_cap 12 keeps one bracket of two degree-6 terms plus one more
    /// with the quadratic part; the minimum faithful cap.
    fn default() -> Self {
        BracketCaps {
            degree_cap: 12,
            order_cap: 12,
            drop_threshold: 1e-16,
        }
    }
}

/// Terms removed by pruning, plus operand pairs skipped wholesale by the
/// degree cap (their products are never materialized).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DropStats {
    /// Terms pruned below the relative drop threshold.
    pub count: usize,
    /// Total |B| of the pruned terms.
    pub mass: f64,
    /// Operand pairs whose product degree exceeds the cap.
    pub capped_pairs: u64,
}

impl DropStats {
    pub fn absorb(&mut self, other: DropStats) {
        self.count += other.count;
        self.mass += other.mass;
        self.capped_pairs += other.capped_pairs;
    }
}

#[derive(Debug, Clone)]
pub struct BracketResult<C: Coeff> {
    pub h: Hamiltonian<C>,
    pub dropped: DropStats,
}

/// Convergence diagnostics of a truncated Lie series.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TailEstimate {
    /// Sup |coefficient| of the last retained series term (after 1/n!).
    pub last_term_norm: f64,
    /// Empirical ratio between the last two consecutive term norms.
    pub geometric_ratio: f64,
    pub converged: bool,
    pub orders_used: u32,
}

/// {H1, H2} with caps applied. Both operands must share weight, window and
/// backend (the latter by construction of the type parameter).
pub fn poisson_bracket<C: Coeff>(
    h1: &Hamiltonian<C>,
    h2: &Hamiltonian<C>,
    caps: &BracketCaps,
) -> Result<BracketResult<C>> {
    h1.compatible(h2)?;
    // {H, H} = 0 identically; skip the float accumulation whose interleaved
    // cancellations would otherwise leave rounding dust.
    if h1.terms == h2.terms {
        return Ok(BracketResult {
            h: Hamiltonian::zero(h1.weight, h1.window),
            dropped: DropStats::default(),
        });
    }
    let mut acc: HashMap<MonomialKey, C> = HashMap::new();
    let mut dropped = DropStats::default();

    // Partition both operands by degree: every product of a (d1, d2) block
    // has degree d1 + d2 − 2, so over-cap blocks are skipped wholesale.
    let groups1 = degree_groups(h1);
    let groups2 = degree_groups(h2);
    for (d1, g1) in &groups1 {
        for (d2, g2) in &groups2 {
            let deg = d1 + d2;
            if deg < 2 {
                continue;
            }
            if deg - 2 > caps.degree_cap {
                dropped.capped_pairs += (g1.len() * g2.len()) as u64;
                continue;
            }
            for &(key1, c1) in g1 {
                for &(key2, c2) in g2 {
                    bracket_pair(key1, c1, key2, c2, &mut acc);
                }
            }
        }
    }

    let mut h = Hamiltonian::zero(h1.weight, h1.window);
    let mut pairs: Vec<(MonomialKey, C)> = acc.into_iter().collect();
    pairs.sort_by(|a, b| a.0.cmp(&b.0));
    for (k, c) in pairs {
        h.insert(k, c);
    }
    if C::BACKEND == crate::coeff::Backend::Float64 {
        let (c, m) = h.prune(caps.drop_threshold);
        dropped.absorb(DropStats {
            count: c,
            mass: m,
            capped_pairs: 0,
        });
    }
    Ok(BracketResult { h, dropped })
}

type DegreeGroups<'a, C> = Vec<(u32, Vec<(&'a MonomialKey, &'a C)>)>;

fn degree_groups<C: Coeff>(h: &Hamiltonian<C>) -> DegreeGroups<'_, C> {
    let mut map: std::collections::BTreeMap<u32, Vec<(&MonomialKey, &C)>> =
        std::collections::BTreeMap::new();
    for (k, c) in &h.terms {
        map.entry(k.degree()).or_default().push((k, c));
    }
    map.into_iter().collect()
}

/// Inserts every j-contribution of {M1, M2} into the accumulator; j must
/// touch both (k+kp) supports, otherwise k_j K'_j − k'_j K_j = 0.
fn bracket_pair<C: Coeff>(
    key1: &MonomialKey,
    c1: &C,
    key2: &MonomialKey,
    c2: &C,
    acc: &mut HashMap<MonomialKey, C>,
) {
    let mut c12: Option<C> = None;
    let mut js: Vec<i32> = key1.k.support().chain(key1.kp.support()).collect();
    js.sort_unstable();
    js.dedup();
    for j in js {
        let k2 = key2.k.get(j) as i64;
        let kp2 = key2.kp.get(j) as i64;
        if k2 == 0 && kp2 == 0 {
            continue;
        }
        let k1 = key1.k.get(j) as i64;
        let kp1 = key1.kp.get(j) as i64;
        let factor = k1 * kp2 - kp1 * k2;
        if factor == 0 {
            continue;
        }
        let c12 = c12.get_or_insert_with(|| c1.mul(c2));
        let a = key1.a.merged(&key2.a);
        let mut k = key1.k.merged(&key2.k);
        let mut kp = key1.kp.merged(&key2.kp);
        k.add(j, -1);
        kp.add(j, -1);
        let coeff = c12.scale_int(factor).mul_i();
        merge(acc, MonomialKey::new(a, k, kp), coeff);
    }
}

fn merge<C: Coeff>(acc: &mut HashMap<MonomialKey, C>, key: MonomialKey, c: C) {
    if c.is_zero() {
        return;
    }
    match acc.entry(key) {
        std::collections::hash_map::Entry::Vacant(e) => {
            e.insert(c);
        }
        std::collections::hash_map::Entry::Occupied(mut e) => {
            let sum = e.get().add(&c);
            if sum.is_zero() {
                e.remove();
            } else {
                *e.get_mut() = sum;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct LieResult<C: Coeff> {
    pub h: Hamiltonian<C>,
    pub tail: TailEstimate,
    pub dropped: DropStats,
}

/// H ∘ Φ_F = Σ_{n=0}^{K} H^{(n)}/n! with H^{(n)} = {H^{(n−1)}, F}, caps
/// applied at each level. Term norms are sup |B|; the series errors out if
/// they grow for 3 consecutive orders.
pub fn lie_transform<C: Coeff>(
    h: &Hamiltonian<C>,
    f: &Hamiltonian<C>,
    caps: &BracketCaps,
) -> Result<LieResult<C>> {
    h.compatible(f)?;
    let mut sum = h.clone();
    let mut current = h.clone();
    let mut dropped = DropStats::default();
    let mut prev_norm = h.max_abs_coeff();
    let mut grow_streak = 0u32;
    let mut last_term_norm = 0.0f64;
    let mut ratio = 0.0f64;
    let mut orders_used = 0u32;
    let mut converged = f.is_zero();

    for order in 1..=caps.order_cap {
        let br = poisson_bracket(&current, f, caps)?;
        dropped.absorb(br.dropped);
        current = br.h;
        if current.is_zero() {
            converged = true;
            break;
        }
        let scaled = current.scaled(&C::inv_factorial(order));
        last_term_norm = scaled.max_abs_coeff();
        orders_used = order;
        ratio = if prev_norm > 0.0 {
            last_term_norm / prev_norm
        } else {
            f64::INFINITY
        };
        if ratio > 1.0 {
            grow_streak += 1;
            if grow_streak >= 3 {
                return Err(KamError::Divergence { order, ratio });
            }
        } else {
            grow_streak = 0;
        }
        prev_norm = last_term_norm;
        sum = sum.add(&scaled)?;
        if C::BACKEND == crate::coeff::Backend::Float64
            && ratio < 1.0
            && last_term_norm < caps.drop_threshold * sum.max_abs_coeff()
        {
            converged = true;
            break;
        }
    }
    if orders_used < caps.order_cap {
        converged = true;
    }
    if ratio < 1.0 && ratio > 0.0 {
        // Geometric tail: the series levels below the drop threshold.
        let full_scale = sum.max_abs_coeff();
        if last_term_norm < caps.drop_threshold * full_scale {
            converged = true;
        }
    }
    if C::BACKEND == crate::coeff::Backend::Float64 {
        let (c, m) = sum.prune(caps.drop_threshold);
        dropped.absorb(DropStats { count: c, mass: m, capped_pairs: 0 });
    }
    Ok(LieResult {
        h: sum,
        tail: TailEstimate {
            last_term_norm,
            geometric_ratio: ratio,
            converged: converged && ratio <= 1.0,
            orders_used,
        },
        dropped,
    })
}

/// Σ_{n=start}^{K} ad_F^{n−start}(G)/n!, the tail of a Lie series whose
/// leading orders are accounted exactly elsewhere. With G = {H, F} and
/// start = 1 this is H∘Φ_F − H; with G = {N, F} and start = 2 it is the
/// normal form's contribution beyond the homological cancellation.
pub fn lie_remainder<C: Coeff>(
    g: &Hamiltonian<C>,
    f: &Hamiltonian<C>,
    caps: &BracketCaps,
    start: u32,
) -> Result<LieResult<C>> {
    assert!(start >= 1);
    let mut sum = Hamiltonian::zero(g.weight, g.window);
    let mut dropped = DropStats::default();
    let mut current = g.clone();
    for _ in 1..start {
        let br = poisson_bracket(&current, f, caps)?;
        dropped.absorb(br.dropped);
        current = br.h;
    }
    let mut prev = 0.0f64;
    let mut ratio = 0.0f64;
    let mut last = 0.0f64;
    let mut grow = 0u32;
    let mut orders = 0u32;
    for order in start..=caps.order_cap {
        if current.is_zero() {
            break;
        }
        let scaled = current.scaled(&C::inv_factorial(order));
        last = scaled.max_abs_coeff();
        if prev > 0.0 {
            ratio = last / prev;
            if ratio > 1.0 {
                grow += 1;
                if grow >= 3 {
                    return Err(KamError::Divergence { order, ratio });
                }
            } else {
                grow = 0;
            }
        }
        prev = last;
        orders = order;
        sum = sum.add(&scaled)?;
        // Geometric tail below the drop threshold: nothing left to retain.
        if C::BACKEND == crate::coeff::Backend::Float64
            && ratio < 1.0
            && last < caps.drop_threshold * sum.max_abs_coeff()
        {
            break;
        }
        if order < caps.order_cap {
            let br = poisson_bracket(&current, f, caps)?;
            dropped.absorb(br.dropped);
            current = br.h;
        }
    }
    if C::BACKEND == crate::coeff::Backend::Float64 {
        let (c, m) = sum.prune(caps.drop_threshold);
        dropped.absorb(DropStats { count: c, mass: m, capped_pairs: 0 });
    }
    let converged = ratio <= 1.0 || orders < start;
    Ok(LieResult {
        h: sum,
        tail: TailEstimate {
            last_term_norm: last,
            geometric_ratio: ratio,
            converged,
            orders_used: orders,
        },
        dropped,
    })
}

/// Hamiltonian-flow smallness check: passes iff
/// (2e/δ) exp{(2000/δ) exp{(200/δ)^{1/(σ−1)}}} ‖F‖_{ρ−δ} < ½.
///
/// The verdict is computed in log space; at desk-scale δ the constant is
/// so large that any nonzero F fails, which the iteration records and
/// overrides (its working guard is the Lie-series divergence detector).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FlowGuardVerdict {
    pub pass: bool,
    /// ln of the left-hand side (may be ±inf).
    pub ln_lhs: f64,
    /// ln of the constant factor (2e/δ)·exp{(2000/δ)·exp{(200/δ)^{1/(σ−1)}}}.
    pub ln_constant: f64,
}

pub fn flow_guard_ln_constant(sigma: f64, delta: f64) -> f64 {
    let inner = (200.0 / delta).powf(1.0 / (sigma - 1.0));
    (2.0 * std::f64::consts::E / delta).ln() + (2000.0 / delta) * inner.exp()
}

pub fn flow_guard<C: Coeff>(
    f: &Hamiltonian<C>,
    rho: f64,
    delta: f64,
) -> Result<FlowGuardVerdict> {
    let limit = (3.0 - 2.0 * 2f64.sqrt()).min(rho / 4.0);
    if !(delta > 0.0 && delta < limit) {
        return Err(KamError::InvalidParam(format!(
            "flow guard needs 0 < delta < min(rho/4, 3-2*sqrt(2)) = {limit:.6}, got {delta}"
        )));
    }
    let ln_constant = flow_guard_ln_constant(f.weight.sigma, delta);
    let ln_norm = f.weighted_norm_ln(rho - delta);
    let ln_lhs = match ln_norm {
        None => f64::NEG_INFINITY,
        Some(v) => ln_constant + v,
    };
    Ok(FlowGuardVerdict {
        pass: ln_lhs < 0.5f64.ln(),
        ln_lhs,
        ln_constant,
    })
}

/// Σ B ∏ I_n(0)^{a_n} q_n^{k_n} q̄_n^{kp_n} at the state q.
pub fn evaluate<C: Coeff>(
    h: &Hamiltonian<C>,
    q: &SequenceState,
    i0: &ActionVector,
) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    for (key, c) in &h.terms {
        total += c.to_c64() * monomial_value(key, q, i0);
    }
    total
}

fn monomial_value(key: &MonomialKey, q: &SequenceState, i0: &ActionVector) -> Complex64 {
    let mut v = Complex64::new(i0.power(&key.a), 0.0);
    for (n, e) in key.k.iter() {
        v *= q.get(n).powu(e);
    }
    for (n, e) in key.kp.iter() {
        v *= q.get(n).conj().powu(e);
    }
    v
}

/// Componentwise q̇_n = i ∂H/∂q̄_n at the state q; the conjugate equation
/// is implied.
pub fn vector_field<C: Coeff>(
    h: &Hamiltonian<C>,
    q: &SequenceState,
    i0: &ActionVector,
) -> SequenceState {
    let mut out = SequenceState::new();
    let mut acc: std::collections::BTreeMap<i32, Complex64> = std::collections::BTreeMap::new();
    for (key, c) in &h.terms {
        let base = c.to_c64();
        for (n, e) in key.kp.iter() {
            // ∂M/∂q̄_n = e · q̄_n^{e−1} · (rest).
            let mut v = Complex64::new(i0.power(&key.a), 0.0) * e as f64;
            for (m, em) in key.k.iter() {
                v *= q.get(m).powu(em);
            }
            for (m, em) in key.kp.iter() {
                let ee = if m == n { em - 1 } else { em };
                v *= q.get(m).conj().powu(ee);
            }
            *acc.entry(n).or_insert(Complex64::new(0.0, 0.0)) += base * v;
        }
    }
    for (n, v) in acc {
        out.set(n, v * Complex64::new(0.0, 1.0));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{C64, CRat};
    use crate::index::MultiIndex;
    use crate::weight::SigmaWeight;

    fn mi(pairs: &[(i32, u32)]) -> MultiIndex {
        MultiIndex::from_pairs(pairs.iter().copied())
    }

    fn ham1(w: SigmaWeight, key: MonomialKey, re: f64) -> Hamiltonian<C64> {
        Hamiltonian::single(w, 3, key, C64::from_re(re))
    }

    #[test]
    fn bracket_with_self_vanishes() {
        let w = SigmaWeight::desk(2.5).unwrap();
        let caps = BracketCaps::default();
        let mut h = Hamiltonian::<C64>::zero(w, 3);
        h.insert(
            MonomialKey::new(MultiIndex::new(), mi(&[(1, 1)]), mi(&[(2, 1)])),
            C64::from_re(1.5),
        );
        h.insert(
            MonomialKey::new(MultiIndex::new(), mi(&[(2, 1)]), mi(&[(1, 1)])),
            C64::from_re(-0.5),
        );
        let r = poisson_bracket(&h, &h, &caps).unwrap();
        assert!(r.h.is_zero());
    }

    #[test]
    fn bracket_pair_example() {
        // {q_1 q̄_2, q_2 q̄_1} = i(|q_2|² − |q_1|²).
        let w = SigmaWeight::desk(2.5).unwrap();
        let caps = BracketCaps::default();
        let a = ham1(
            w,
            MonomialKey::new(MultiIndex::new(), mi(&[(1, 1)]), mi(&[(2, 1)])),
            1.0,
        );
        let b = ham1(
            w,
            MonomialKey::new(MultiIndex::new(), mi(&[(2, 1)]), mi(&[(1, 1)])),
            1.0,
        );
        let r = poisson_bracket(&a, &b, &caps).unwrap().h;
        assert_eq!(r.len(), 2);
        let k2 = MonomialKey::new(MultiIndex::new(), mi(&[(2, 1)]), mi(&[(2, 1)]));
        let k1 = MonomialKey::new(MultiIndex::new(), mi(&[(1, 1)]), mi(&[(1, 1)]));
        assert_eq!(r.terms.get(&k2), Some(&C64::from_re_im(0.0, 1.0)));
        assert_eq!(r.terms.get(&k1), Some(&C64::from_re_im(0.0, -1.0)));
    }

    #[test]
    fn bracket_with_normal_form_multiplies_by_minus_i_divisor() {
        // {N, M} = −i Σ(k−k')(n²+Ṽ_n) M with N = Σ(n²+Ṽ_n)|q_n|².
        let w = SigmaWeight::desk(2.5).unwrap();
        let caps = BracketCaps::default();
        let mut n = Hamiltonian::<C64>::zero(w, 3);
        for mode in -3i32..=3 {
            n.insert(
                MonomialKey::new(MultiIndex::new(), mi(&[(mode, 1)]), mi(&[(mode, 1)])),
                C64::from_re((mode * mode) as f64),
            );
        }
        let key = MonomialKey::new(MultiIndex::new(), mi(&[(3, 1), (-1, 1)]), mi(&[(1, 2)]));
        let m = ham1(w, key.clone(), 1.0);
        let r = poisson_bracket(&n, &m, &caps).unwrap().h;
        // Divisor = 9 + 1 − 2 = 8.
        assert_eq!(r.len(), 1);
        assert_eq!(r.terms.get(&key), Some(&C64::from_re_im(0.0, -8.0)));
    }

    #[test]
    fn bracket_degree_cap_reports_drops() {
        let w = SigmaWeight::desk(2.5).unwrap();
        let caps = BracketCaps::new(6, 12, 0.0).unwrap();
        let key6 = MonomialKey::new(
            MultiIndex::new(),
            mi(&[(1, 2), (2, 1)]),
            mi(&[(0, 2), (3, 1)]),
        );
        // The conjugate partner: nonzero k_j K'_j − k'_j K_j at j = 1, 2.
        let conj6 = MonomialKey::new(
            MultiIndex::new(),
            mi(&[(0, 2), (3, 1)]),
            mi(&[(1, 2), (2, 1)]),
        );
        let a = ham1(w, key6, 1.0);
        let b = ham1(w, conj6, 1.0);
        let r = poisson_bracket(&a, &b, &caps).unwrap();
        // Degree 10 > cap 6: every produced term dropped.
        assert!(r.h.is_zero());
        assert!(r.dropped.capped_pairs > 0);

        let full = poisson_bracket(&a, &b, &BracketCaps::default()).unwrap();
        assert!(!full.h.is_zero());
        assert_eq!(full.dropped.capped_pairs, 0);
    }

    #[test]
    fn lie_transform_identity_for_zero_generator() {
        let w = SigmaWeight::desk(2.5).unwrap();
        let caps = BracketCaps::default();
        let h = ham1(
            w,
            MonomialKey::new(MultiIndex::new(), mi(&[(1, 1)]), mi(&[(2, 1)])),
            0.7,
        );
        let f = Hamiltonian::<C64>::zero(w, 3);
        let r = lie_transform(&h, &f, &caps).unwrap();
        assert_eq!(r.h.terms, h.terms);
        assert!(r.tail.converged);
        assert_eq!(r.tail.orders_used, 0);
    }

    #[test]
    fn lie_transform_preserves_conservation() {
        let w = SigmaWeight::desk(2.5).unwrap();
        let caps = BracketCaps::default();
        let mut h = Hamiltonian::<C64>::zero(w, 3);
        h.insert(
            MonomialKey::new(MultiIndex::new(), mi(&[(3, 1), (-1, 1)]), mi(&[(1, 2)])),
            C64::from_re(1e-3),
        );
        h.insert(
            MonomialKey::new(MultiIndex::new(), mi(&[(2, 1), (-2, 1)]), mi(&[(0, 2)])),
            C64::from_re(2e-3),
        );
        assert!(h.conserving());
        let f = h.scaled(&C64::from_re_im(0.0, 0.125));
        let r = lie_transform(&h, &f, &caps).unwrap();
        assert!(r.h.conserving());
    }

    #[test]
    fn lie_order_one_exact_cancellation() {
        // F solving {N,F} = −B·M exactly: order-1 term cancels M in N+M's
        // transform... checked at the bracket level with rationals.
        let w = SigmaWeight::desk(2.5).unwrap();
        let caps = BracketCaps::default();
        let mut n = Hamiltonian::<CRat>::zero(w, 3);
        for mode in -3i32..=3 {
            n.insert(
                MonomialKey::new(MultiIndex::new(), mi(&[(mode, 1)]), mi(&[(mode, 1)])),
                CRat::from_re((mode * mode) as f64),
            );
        }
        let key = MonomialKey::new(MultiIndex::new(), mi(&[(3, 1), (-1, 1)]), mi(&[(1, 2)]));
        let b = CRat::from_re(1e-4);
        // F = −i B / D with D = 8.
        let fc = b.mul_i().neg().mul(&CRat::from_re(1.0 / 8.0));
        let f = Hamiltonian::single(w, 3, key.clone(), fc);
        let br = poisson_bracket(&n, &f, &caps).unwrap().h;
        let residual = br.add(&Hamiltonian::single(w, 3, key, b)).unwrap();
        assert!(residual.is_zero());
    }

    #[test]
    fn flow_guard_zero_passes_nonzero_fails_at_desk_delta() {
        let w = SigmaWeight::desk(2.5).unwrap();
        let f0 = Hamiltonian::<C64>::zero(w, 3);
        let v = flow_guard(&f0, 0.1, 0.02).unwrap();
        assert!(v.pass);
        assert_eq!(v.ln_lhs, f64::NEG_INFINITY);

        let f = ham1(
            w,
            MonomialKey::new(MultiIndex::new(), mi(&[(1, 1)]), mi(&[(2, 1)])),
            1e-300,
        );
        let v = flow_guard(&f, 0.1, 0.02).unwrap();
        assert!(!v.pass);
        // The closed-form constant, recomputed independently.
        let a: f64 = (200.0f64 / 0.02).powf(1.0 / 1.5);
        let expect = (2.0 * std::f64::consts::E / 0.02f64).ln() + (2000.0 / 0.02) * a.exp();
        assert!((v.ln_constant - expect).abs() <= 1e-6 * expect.abs());
    }

    #[test]
    fn flow_guard_delta_range() {
        let w = SigmaWeight::desk(2.5).unwrap();
        let f = Hamiltonian::<C64>::zero(w, 3);
        // 0.2 > 3 − 2√2 ≈ 0.1716.
        assert!(flow_guard(&f, 1.0, 0.2).is_err());
        assert!(flow_guard(&f, 0.05, 0.02).is_err()); // delta > rho/4
    }

    #[test]
    fn evaluate_examples() {
        let w = SigmaWeight::desk(2.5).unwrap();
        let i0 = ActionVector::torus(3, &w);
        let empty = Hamiltonian::<C64>::zero(w, 3);
        let q = SequenceState::from_pairs([(1, Complex64::new(2.0, 0.0))]);
        assert_eq!(evaluate(&empty, &q, &i0), Complex64::new(0.0, 0.0));

        let h = ham1(
            w,
            MonomialKey::new(MultiIndex::new(), mi(&[(1, 1)]), mi(&[(1, 1)])),
            1.0,
        );
        assert!((evaluate(&h, &q, &i0) - Complex64::new(4.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn vector_field_of_normal_form() {
        // H = N gives q̇_n = i (n² + Ṽ_n) q_n.
        let w = SigmaWeight::desk(2.5).unwrap();
        let i0 = ActionVector::torus(3, &w);
        let mut n = Hamiltonian::<C64>::zero(w, 3);
        let vt = [0.3, 0.7];
        for (idx, mode) in [1i32, 2].iter().enumerate() {
            n.insert(
                MonomialKey::new(MultiIndex::new(), mi(&[(*mode, 1)]), mi(&[(*mode, 1)])),
                C64::from_re((mode * mode) as f64 + vt[idx]),
            );
        }
        let q = SequenceState::from_pairs([
            (1, Complex64::new(0.3, -0.2)),
            (2, Complex64::new(-0.1, 0.05)),
        ]);
        let f = vector_field(&n, &q, &i0);
        let expect1 = Complex64::new(0.0, 1.0) * (1.0 + 0.3) * q.get(1);
        let expect2 = Complex64::new(0.0, 1.0) * (4.0 + 0.7) * q.get(2);
        assert!((f.get(1) - expect1).norm() < 1e-14);
        assert!((f.get(2) - expect2).norm() < 1e-14);

        // Constant Hamiltonian: zero field.
        let c = ham1(w, MonomialKey::default(), 5.0);
        assert!(vector_field(&c, &q, &i0).q.is_empty());
    }
}
