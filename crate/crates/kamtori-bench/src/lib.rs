//! Shared fixtures for the criterion benchmarks.

use kamtori::classify::{classify, ClassifiedPerturbation};
use kamtori::coeff::C64;
use kamtori::engine::{solve_homological, KamState, NormalForm};
use kamtori::ham::ActionVector;
use kamtori::nls::build_nls;
use kamtori::schedule::schedule;
use kamtori::weight::SigmaWeight;
use std::collections::BTreeMap;

pub fn desk_weight() -> SigmaWeight {
    SigmaWeight::desk(2.5).expect("sigma > 2")
}

pub fn sextic(window: u32, eps: f64) -> kamtori::Hamiltonian<C64> {
    build_nls::<C64>(window, eps, &BTreeMap::new(), desk_weight())
        .expect("window >= 1")
        .sextic
}

pub fn classified(window: u32, eps: f64) -> ClassifiedPerturbation<C64> {
    let w = desk_weight();
    let i0 = ActionVector::torus(window, &w);
    classify(&sextic(window, eps), &i0)
}

/// A ready-to-step state at s = 0 with a non-resonant potential.
pub fn step_state(window: u32, eps: f64) -> KamState<C64> {
    let w = desk_weight();
    let i0 = ActionVector::torus(window, &w);
    let mut pert = classify(&sextic(window, eps), &i0);
    let _ = pert.take_resonant();
    // Fractional parts of prime square roots: rationally independent, so
    // no zero-square-sum key lands on an exact resonance.
    let primes = [2.0f64, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0, 23.0];
    let mut vtilde = BTreeMap::new();
    for (i, n) in (-(window as i32)..=window as i32).enumerate() {
        vtilde.insert(n, primes[i % primes.len()].sqrt().fract());
    }
    KamState {
        s: 0,
        normal: NormalForm {
            vtilde,
            constant: 0.0,
        },
        pert,
        schedule: schedule(0, 2.5, 1e-8, window).expect("valid schedule"),
        v_star: BTreeMap::new(),
        eps0: 1e-8,
        history: Vec::new(),
    }
}

/// The generating Hamiltonian of one homological solve, in plain form.
pub fn generator(window: u32, eps: f64) -> kamtori::Hamiltonian<C64> {
    let state = step_state(window, eps);
    let solve = solve_homological(&state.pert, &state.normal, &state.schedule, 1e-3)
        .expect("no resonance at this potential");
    kamtori::classify::reconstruct(&solve.f)
}
