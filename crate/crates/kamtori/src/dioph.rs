//! Diophantine arithmetic: distance to the nearest integer, the product
//! floor γ ∏ 1/(1 + l_n² ⟨n⟩⁴), exhaustive verification of the condition
//! ‖Σ l_n V_n‖ ≥ floor over a finite family, and its Monte-Carlo measure.

use crate::error::{KamError, Result};
use crate::index::MonomialKey;
use rand::Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// ‖x‖ = inf_{y∈Z} |x − y| ∈ [0, ½].
pub fn nearest_int_dist(x: f64) -> f64 {
    (x - x.round()).abs().min(0.5)
}

/// γ ∏_{l_n≠0} 1/(1 + l_n² ⟨n⟩⁴) with ⟨n⟩ = max{1, |n|}.
pub fn divisor_floor(l: &BTreeMap<i32, i64>, gamma: f64) -> Result<f64> {
    if l.values().all(|&v| v == 0) {
        return Err(KamError::ZeroDivisorVector);
    }
    Ok(gamma * floor_product(l))
}

fn floor_product(l: &BTreeMap<i32, i64>) -> f64 {
    let mut p = 1.0f64;
    for (&n, &ln) in l {
        if ln == 0 {
            continue;
        }
        let bracket = 1i64.max(n.unsigned_abs() as i64);
        let b4 = (bracket * bracket) as f64 * (bracket * bracket) as f64;
        p /= 1.0 + (ln * ln) as f64 * b4;
    }
    p
}

/// The signed small divisor Σ (k_n − kp_n)(n² + Ṽ_n).
pub fn divisor(key: &MonomialKey, vtilde: &BTreeMap<i32, f64>) -> f64 {
    let mut d = 0.0f64;
    let vt = |n: i32| vtilde.get(&n).copied().unwrap_or(0.0);
    for (n, e) in key.k.iter() {
        d += e as f64 * ((n as f64) * (n as f64) + vt(n));
    }
    for (n, e) in key.kp.iter() {
        d -= e as f64 * ((n as f64) * (n as f64) + vt(n));
    }
    d
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiophantineReport {
    /// Worst ‖Σ l_n V_n‖ / ∏ 1/(1+l_n²⟨n⟩⁴) over the family; the vector
    /// passes at level γ iff min_ratio >= γ.
    pub min_ratio: f64,
    /// The minimizing l, as (mode, l_n) pairs.
    pub witness: BTreeMap<i32, i64>,
    pub checked_count: u64,
}

impl DiophantineReport {
    pub fn passes(&self, gamma: f64) -> bool {
        self.min_ratio >= gamma
    }
}

/// Exhaustively checks all l ≠ 0 with support in [−M, M] and |l_n| ≤ L.
/// The family has (2L+1)^(2M+1) − 1 vectors; `budget` caps the size.
pub fn diophantine_verify(
    v: &BTreeMap<i32, f64>,
    window: u32,
    height: u32,
    budget: u128,
) -> Result<DiophantineReport> {
    if height < 1 {
        return Err(KamError::InvalidParam("height must be >= 1".into()));
    }
    let dim = 2 * window as usize + 1;
    let base = 2 * height as u128 + 1;
    let needed = base
        .checked_pow(dim as u32)
        .ok_or(KamError::BudgetExceeded {
            needed: u128::MAX,
            budget,
        })?;
    if needed > budget {
        return Err(KamError::BudgetExceeded { needed, budget });
    }

    let modes: Vec<i32> = (-(window as i32)..=window as i32).collect();
    let vv: Vec<f64> = modes
        .iter()
        .map(|n| v.get(n).copied().unwrap_or(0.0))
        .collect();
    let mut l = vec![-(height as i64); dim];
    let mut min_ratio = f64::INFINITY;
    let mut witness = vec![0i64; dim];
    let mut checked = 0u64;

    // Odometer over {-L..L}^dim, skipping l = 0.
    loop {
        if l.iter().any(|&x| x != 0) {
            checked += 1;
            let dot: f64 = l
                .iter()
                .zip(&vv)
                .map(|(&ln, &vn)| ln as f64 * vn)
                .sum();
            let mut prod = 1.0f64;
            for (i, &ln) in l.iter().enumerate() {
                if ln != 0 {
                    let bracket = 1i64.max(modes[i].unsigned_abs() as i64) as f64;
                    prod /= 1.0 + (ln * ln) as f64 * bracket.powi(4);
                }
            }
            let ratio = nearest_int_dist(dot) / prod;
            if ratio < min_ratio {
                min_ratio = ratio;
                witness.copy_from_slice(&l);
            }
        }
        // Advance.
        let mut i = 0;
        loop {
            if i == dim {
                let witness: BTreeMap<i32, i64> = modes
                    .iter()
                    .copied()
                    .zip(witness.iter().copied())
                    .filter(|&(_, x)| x != 0)
                    .collect();
                return Ok(DiophantineReport {
                    min_ratio,
                    witness,
                    checked_count: checked,
                });
            }
            if l[i] < height as i64 {
                l[i] += 1;
                break;
            }
            l[i] = -(height as i64);
            i += 1;
        }
    }
}

/// Monte-Carlo fraction of uniform V ∈ [0,1]^{2M+1} violating the
/// condition at level γ over the same finite family.
pub fn diophantine_measure(
    gamma: f64,
    window: u32,
    height: u32,
    samples: u64,
    seed: u64,
    budget: u128,
) -> Result<f64> {
    if samples < 1 {
        return Err(KamError::InvalidParam("samples must be >= 1".into()));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0u64;
    for _ in 0..samples {
        let mut v = BTreeMap::new();
        for n in -(window as i32)..=window as i32 {
            v.insert(n, rng.random_range(0.0..1.0));
        }
        let report = diophantine_verify(&v, window, height, budget)?;
        if !report.passes(gamma) {
            violations += 1;
        }
    }
    Ok(violations as f64 / samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_int_examples() {
        assert_eq!(nearest_int_dist(0.5), 0.5);
        assert!((nearest_int_dist(3.2) - 0.2).abs() < 1e-15);
        assert!((nearest_int_dist(-1.7) - 0.3).abs() < 1e-15);
        assert_eq!(nearest_int_dist(4.0), 0.0);
    }

    #[test]
    fn floor_examples() {
        // l = {0:1}: ⟨0⟩ = 1, floor = γ/2.
        let mut l = BTreeMap::new();
        l.insert(0, 1i64);
        assert!((divisor_floor(&l, 0.1).unwrap() - 0.05).abs() < 1e-15);

        let mut l = BTreeMap::new();
        l.insert(2, 1i64);
        assert!((divisor_floor(&l, 1.0).unwrap() - 1.0 / 17.0).abs() < 1e-15);

        // Monotone non-increasing as any |l_n| grows.
        let mut prev = f64::INFINITY;
        for ln in 1..6i64 {
            let mut l = BTreeMap::new();
            l.insert(3, ln);
            let f = divisor_floor(&l, 1.0).unwrap();
            assert!(f < prev);
            prev = f;
        }

        let zero: BTreeMap<i32, i64> = BTreeMap::new();
        assert!(divisor_floor(&zero, 1.0).is_err());
    }

    #[test]
    fn divisor_examples() {
        use crate::index::{MonomialKey, MultiIndex};
        let key = MonomialKey::new(
            MultiIndex::new(),
            MultiIndex::from_pairs([(3, 1), (-1, 1)]),
            MultiIndex::from_pairs([(1, 2)]),
        );
        assert!(key.conserving());
        assert_eq!(divisor(&key, &BTreeMap::new()), 8.0);

        // k = kp: zero divisor.
        let res = MonomialKey::new(
            MultiIndex::new(),
            MultiIndex::from_pairs([(2, 1)]),
            MultiIndex::from_pairs([(2, 1)]),
        );
        assert_eq!(divisor(&res, &BTreeMap::new()), 0.0);

        // |Ṽ| ≤ 2 perturbs by at most 2 Σ|k − kp|.
        let mut vt = BTreeMap::new();
        for n in -3..=3 {
            vt.insert(n, 2.0);
        }
        let d = divisor(&key, &vt);
        assert!((d - 8.0).abs() <= 2.0 * 4.0 + 1e-12);
    }

    #[test]
    fn verify_zero_vector_fails() {
        // V ≡ 0: l = {0:1} gives ‖0‖ = 0, so min_ratio = 0.
        let v = BTreeMap::new();
        let r = diophantine_verify(&v, 1, 1, 1 << 20).unwrap();
        assert_eq!(r.min_ratio, 0.0);
        assert!(!r.passes(1e-6));
        assert_eq!(r.checked_count, 3u64.pow(3) - 1);
    }

    #[test]
    fn verify_irrational_vector_deterministic() {
        // Fractional parts of square roots of distinct primes; entries from
        // a single irrational (e.g. frac(n·φ)) are rationally dependent and
        // give exact resonances.
        let mut v = BTreeMap::new();
        for (i, n) in (-2..=2i32).enumerate() {
            let p = [2.0f64, 3.0, 5.0, 7.0, 11.0][i];
            v.insert(n, p.sqrt().fract());
        }
        let a = diophantine_verify(&v, 2, 2, 1 << 30).unwrap();
        let b = diophantine_verify(&v, 2, 2, 1 << 30).unwrap();
        assert_eq!(a.min_ratio, b.min_ratio);
        assert_eq!(a.witness, b.witness);
        assert!(a.min_ratio > 0.0);
        // Scaling: the pass margin min_ratio/γ halves when γ doubles.
        let g = a.min_ratio;
        assert!(a.passes(g) && !a.passes(2.0 * g * (1.0 + 1e-12)));
    }

    #[test]
    fn verify_budget() {
        let v = BTreeMap::new();
        assert!(matches!(
            diophantine_verify(&v, 3, 3, 10),
            Err(KamError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn measure_monotone_in_gamma() {
        let fractions: Vec<f64> = [0.0, 1e-3, 1e-2, 1e-1]
            .iter()
            .map(|&g| diophantine_measure(g, 1, 1, 400, 7, 1 << 20).unwrap())
            .collect();
        assert_eq!(fractions[0], 0.0);
        for w in fractions.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }
}
