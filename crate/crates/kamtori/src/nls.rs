//! Construction of the truncated quintic NLS Hamiltonian
//! H = Σ (n² + V_n)|q_n|² + ε Σ_{n1−n2+n3−n4+n5−n6=0} q_{n1}q̄_{n2}…q̄_{n6}
//! over the mode window [−M, M].
//!
//! Ordered sextuples are enumerated without symmetrizing the coefficient;
//! equivalent monomials merge by key, so symmetry multiplicities arise
//! automatically.

use crate::coeff::Coeff;
use crate::error::{KamError, Result};
use crate::ham::Hamiltonian;
use crate::index::{MonomialKey, MultiIndex};
use crate::weight::SigmaWeight;
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct NlsBuild<C: Coeff> {
    /// Quadratic part Σ (n² + V_n)|q_n|².
    pub quadratic: Hamiltonian<C>,
    /// Sextic part with the ε factor applied.
    pub sextic: Hamiltonian<C>,
    /// Number of ordered momentum-zero sextuples enumerated.
    pub sextuples: u64,
}

impl<C: Coeff> NlsBuild<C> {
    pub fn full(&self) -> Result<Hamiltonian<C>> {
        self.quadratic.add(&self.sextic)
    }
}

/// Builds both parts. `v` supplies V_n on the window (missing modes read 0);
/// entries must lie in [0, 1].
pub fn build_nls<C: Coeff>(
    window: u32,
    eps: f64,
    v: &BTreeMap<i32, f64>,
    weight: SigmaWeight,
) -> Result<NlsBuild<C>> {
    if window < 1 {
        return Err(KamError::InvalidParam("window must be >= 1".into()));
    }
    for (&n, &vn) in v {
        if !(0.0..=1.0).contains(&vn) {
            return Err(KamError::InvalidParam(format!(
                "potential V_{n} = {vn} outside [0, 1]"
            )));
        }
    }

    let m = window as i32;
    let mut quadratic = Hamiltonian::zero(weight, window);
    for n in -m..=m {
        let vn = v.get(&n).copied().unwrap_or(0.0);
        quadratic.insert(
            MonomialKey::new(MultiIndex::new(), MultiIndex::unit(n), MultiIndex::unit(n)),
            C::from_re((n * n) as f64).add(&C::from_re(vn)),
        );
    }

    let mut sextic = Hamiltonian::zero(weight, window);
    let mut sextuples = 0u64;
    if eps != 0.0 {
        let eps_c = C::from_re(eps);
        for n1 in -m..=m {
            for n2 in -m..=m {
                for n3 in -m..=m {
                    for n4 in -m..=m {
                        for n5 in -m..=m {
                            let n6 = n1 - n2 + n3 - n4 + n5;
                            if n6 < -m || n6 > m {
                                continue;
                            }
                            sextuples += 1;
                            let k = MultiIndex::from_pairs([(n1, 1), (n3, 1), (n5, 1)]);
                            let kp = MultiIndex::from_pairs([(n2, 1), (n4, 1), (n6, 1)]);
                            sextic.insert(
                                MonomialKey::new(MultiIndex::new(), k, kp),
                                eps_c.clone(),
                            );
                        }
                    }
                }
            }
        }
    }

    debug_assert!(sextic.conserving());
    Ok(NlsBuild {
        quadratic,
        sextic,
        sextuples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::C64;

    #[test]
    fn window_one_counts() {
        // Brute-force oracle over 3^6 tuples: 141 with alternating sum zero.
        let mut expect = 0u64;
        for n1 in -1i32..=1 {
            for n2 in -1i32..=1 {
                for n3 in -1i32..=1 {
                    for n4 in -1i32..=1 {
                        for n5 in -1i32..=1 {
                            for n6 in -1i32..=1 {
                                if n1 - n2 + n3 - n4 + n5 - n6 == 0 {
                                    expect += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
        assert_eq!(expect, 141);

        let w = SigmaWeight::desk(2.5).unwrap();
        let mut v = BTreeMap::new();
        for n in -1..=1 {
            v.insert(n, 0.5);
        }
        let b = build_nls::<C64>(1, 1e-8, &v, w).unwrap();
        assert_eq!(b.sextuples, 141);
        assert_eq!(b.quadratic.len(), 3);
        // Distinct keys: pairs of 3-multisets from {−1,0,1} with equal sums.
        assert_eq!(b.sextic.len(), 16);
        // Total coefficient mass is 141 ε.
        let total: f64 = b.sextic.terms.values().map(|c| c.to_c64().re).sum();
        assert!((total - 141.0 * 1e-8).abs() < 1e-18);
    }

    #[test]
    fn zero_eps_is_quadratic_only() {
        let w = SigmaWeight::desk(2.5).unwrap();
        let mut v = BTreeMap::new();
        for n in -2..=2 {
            v.insert(n, 0.25);
        }
        let b = build_nls::<C64>(2, 0.0, &v, w).unwrap();
        assert!(b.sextic.is_zero());
        assert_eq!(b.sextuples, 0);
        assert_eq!(b.quadratic.len(), 5);
    }

    #[test]
    fn every_key_conserves() {
        let w = SigmaWeight::desk(2.5).unwrap();
        let mut v = BTreeMap::new();
        for n in -3..=3 {
            v.insert(n, 0.5);
        }
        let b = build_nls::<C64>(3, 1e-6, &v, w).unwrap();
        assert!(b.sextic.conserving());
        assert!(b.quadratic.conserving());
        for key in b.sextic.terms.keys() {
            assert_eq!(key.degree(), 6);
        }
    }

    #[test]
    fn potential_range_validated() {
        let w = SigmaWeight::desk(2.5).unwrap();
        let mut v = BTreeMap::new();
        v.insert(0, 1.5);
        assert!(build_nls::<C64>(1, 0.0, &v, w).is_err());
        assert!(build_nls::<C64>(0, 0.0, &BTreeMap::new(), w).is_err());
    }
}
