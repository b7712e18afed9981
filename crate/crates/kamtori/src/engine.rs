//! One normal-form step and the full iteration.
//!
//! A step solves the homological equation {N,F} + R0 + R1 = [R0] + [R1]
//! for the nonresonant part of the perturbation under the step's
//! truncation filter and divisor guard |D| >= γ λ_s, composes with the
//! time-1 flow of F as a truncated Lie series, reclassifies the remainder,
//! and absorbs the remainder's action-only part into the normal form
//! (frequency shift + constant). Resonant absorption happens at
//! classification boundaries: the initial perturbation's action-only part
//! is absorbed during setup, each new remainder's at step end, so the
//! per-step shift is the new remainder's, not the entry perturbation's.

use crate::algebra::{
    flow_guard, lie_remainder, poisson_bracket, BracketCaps, DropStats, FlowGuardVerdict,
    TailEstimate,
};
use crate::classify::{
    classify, effective_rearrangement, reconstruct, resonant_part, ClassifiedPerturbation, JModes,
    R1Key,
};
use crate::coeff::{Backend, Coeff};
use crate::dioph::{divisor, nearest_int_dist};
use crate::error::{KamError, Result};
use crate::ham::{ActionVector, Hamiltonian, SequenceState};
use crate::index::MonomialKey;
use crate::nls::build_nls;
use crate::report::{
    ConfigRecord, FinalRecord, InitRecord, OuterRecord, Record, RunReport, StepReport, TorusRecord,
};
use crate::schedule::{rho0, schedule, truncation_threshold, Schedule};
use crate::weight::SigmaWeight;
use num::complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// N = Σ (n² + Ṽ_n)|q_n|² plus the accumulated constant [R0], which is
/// reported but dynamically inert.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NormalForm {
    pub vtilde: BTreeMap<i32, f64>,
    pub constant: f64,
}

impl NormalForm {
    pub fn from_potential(v: &BTreeMap<i32, f64>) -> Self {
        NormalForm {
            vtilde: v.clone(),
            constant: 0.0,
        }
    }

    pub fn vt(&self, n: i32) -> f64 {
        self.vtilde.get(&n).copied().unwrap_or(0.0)
    }

    /// |Ṽ_n| ≤ 2 for all n.
    pub fn bounded(&self) -> bool {
        self.vtilde.values().all(|v| v.abs() <= 2.0)
    }

    pub fn to_hamiltonian<C: Coeff>(&self, weight: SigmaWeight, window: u32) -> Hamiltonian<C> {
        let mut h = Hamiltonian::zero(weight, window);
        for n in -(window as i32)..=window as i32 {
            // n² and Ṽ_n embed separately so the exact backend sees the
            // same rational the homological solver divides by.
            let coeff = C::from_re((n as f64) * (n as f64)).add(&C::from_re(self.vt(n)));
            h.insert(
                MonomialKey::new(
                    crate::index::MultiIndex::new(),
                    crate::index::MultiIndex::unit(n),
                    crate::index::MultiIndex::unit(n),
                ),
                coeff,
            );
        }
        h
    }

    pub fn shift_by(&mut self, shift: &BTreeMap<i32, f64>) {
        for (&m, &dv) in shift {
            *self.vtilde.entry(m).or_insert(0.0) += dv;
        }
    }
}

/// Immutable snapshot of the iteration between steps.
#[derive(Debug, Clone)]
pub struct KamState<C: Coeff> {
    pub s: u32,
    pub normal: NormalForm,
    pub pert: ClassifiedPerturbation<C>,
    pub schedule: Schedule,
    /// The frequency parameter the pipeline was started from.
    pub v_star: BTreeMap<i32, f64>,
    pub eps0: f64,
    pub history: Vec<StepReport>,
}

impl<C: Coeff> KamState<C> {
    pub fn sigma(&self) -> f64 {
        self.pert.weight.sigma
    }

    pub fn window(&self) -> u32 {
        self.pert.window
    }
}

/// Generating-Hamiltonian classes and leftovers of one homological solve.
#[derive(Debug, Clone)]
pub struct SolveOutcome<C: Coeff> {
    /// F0 + F1 (classified; r2 empty).
    pub f: ClassifiedPerturbation<C>,
    /// Keys failing the truncation filter, unchanged.
    pub deferred: ClassifiedPerturbation<C>,
    pub solved_r0: usize,
    pub solved_r1: usize,
    pub deferred_count: usize,
    pub resonant_skipped: usize,
    pub worst_divisor: Option<f64>,
    pub min_floor_product: Option<f64>,
}

/// Solves {N,F} + R0 + R1 = [R0] + [R1] termwise: F-coefficient −i B/D for
/// every nonresonant key passing the truncation filter, with the guard
/// |D| >= γ λ_s. Resonant keys (k = kp) are excluded; filter failures go to
/// `deferred` untouched.
pub fn solve_homological<C: Coeff>(
    pert: &ClassifiedPerturbation<C>,
    normal: &NormalForm,
    sched: &Schedule,
    gamma: f64,
) -> Result<SolveOutcome<C>> {
    let w = pert.weight;
    let threshold = truncation_threshold(sched);
    let guard = gamma * sched.lambda_s;
    let mut f = ClassifiedPerturbation::empty(w, pert.window, pert.i0.clone());
    let mut deferred = ClassifiedPerturbation::empty(w, pert.window, pert.i0.clone());
    let mut solved_r0 = 0usize;
    let mut solved_r1 = 0usize;
    let mut deferred_count = 0usize;
    let mut resonant_skipped = 0usize;
    let mut worst_divisor: Option<f64> = None;
    let mut min_floor: Option<f64> = None;

    let mut handle = |key: &MonomialKey,
                      j: JModes,
                      coeff: &C,
                      f: &mut ClassifiedPerturbation<C>,
                      deferred: &mut ClassifiedPerturbation<C>|
     -> Result<bool> {
        // true = solved, false = deferred; resonant handled by caller.
        let tail = effective_rearrangement(key, j).tail_weight_sum(&w, 3);
        if tail > threshold {
            deferred_count += 1;
            match j {
                JModes::None => deferred.r0.insert(key.clone(), coeff.clone()),
                JModes::One(m) => deferred.r1.insert(
                    R1Key {
                        j: m,
                        key: key.clone(),
                    },
                    coeff.clone(),
                ),
                JModes::Two(..) => unreachable!("only R0/R1 keys are solved"),
            };
            return Ok(false);
        }
        let d = divisor(key, &normal.vtilde);
        if d.abs() < guard {
            return Err(KamError::Resonance {
                key: key.to_string(),
                divisor: d.abs(),
                guard,
            });
        }
        worst_divisor = Some(worst_divisor.map_or(d.abs(), |v: f64| v.min(d.abs())));
        min_floor = Some(min_floor.map_or(floor_product_of_key(key), |v: f64| {
            v.min(floor_product_of_key(key))
        }));
        // Exact divisor in the coefficient backend: Σ(k−kp)(n² + Ṽ_n).
        let mut d_exact = C::zero();
        for (n, e) in key.k.iter() {
            let term = C::from_re((n as f64) * (n as f64)).add(&C::from_re(normal.vt(n)));
            d_exact = d_exact.add(&term.scale_int(e as i64));
        }
        for (n, e) in key.kp.iter() {
            let term = C::from_re((n as f64) * (n as f64)).add(&C::from_re(normal.vt(n)));
            d_exact = d_exact.add(&term.scale_int(-(e as i64)));
        }
        let fc = coeff.mul_i().neg().div(&d_exact);
        match j {
            JModes::None => f.r0.insert(key.clone(), fc),
            JModes::One(m) => f.r1.insert(
                R1Key {
                    j: m,
                    key: key.clone(),
                },
                fc,
            ),
            JModes::Two(..) => unreachable!(),
        };
        Ok(true)
    };

    for (key, coeff) in &pert.r0 {
        if key.is_resonant() {
            resonant_skipped += 1;
            continue;
        }
        if handle(key, JModes::None, coeff, &mut f, &mut deferred)? {
            solved_r0 += 1;
        }
    }
    for (rk, coeff) in &pert.r1 {
        if rk.key.is_resonant() {
            resonant_skipped += 1;
            continue;
        }
        if handle(&rk.key, JModes::One(rk.j), coeff, &mut f, &mut deferred)? {
            solved_r1 += 1;
        }
    }

    Ok(SolveOutcome {
        f,
        deferred,
        solved_r0,
        solved_r1,
        deferred_count,
        resonant_skipped,
        worst_divisor,
        min_floor_product: min_floor,
    })
}

/// γ-free product floor ∏ 1/(1+(k_n−kp_n)²⟨n⟩⁴) of a key.
fn floor_product_of_key(key: &MonomialKey) -> f64 {
    let mut l: BTreeMap<i32, i64> = BTreeMap::new();
    for (n, e) in key.k.iter() {
        *l.entry(n).or_insert(0) += e as i64;
    }
    for (n, e) in key.kp.iter() {
        *l.entry(n).or_insert(0) -= e as i64;
    }
    let mut p = 1.0f64;
    for (n, ln) in l {
        if ln != 0 {
            let bracket = 1f64.max(n.unsigned_abs() as f64);
            p /= 1.0 + (ln * ln) as f64 * bracket.powi(4);
        }
    }
    p
}

/// One step of the iteration: solve, transform, reclassify, absorb, advance.
pub fn kam_step<C: Coeff>(
    state: &KamState<C>,
    gamma: f64,
    caps: &BracketCaps,
) -> Result<(KamState<C>, StepReport)> {
    let sched = state.schedule;
    let sigma = state.sigma();
    let window = state.window();
    let weight = state.pert.weight;
    let next = schedule(state.s + 1, sigma, state.eps0, window)?;

    let r0_before = state.pert.r0_norm(sched.rho_s);
    let r1_before = state.pert.r1_norm(sched.rho_s);
    let r2_before = state.pert.r2_norm(sched.rho_s);

    let mut report = StepReport {
        s: state.s,
        rho_s: sched.rho_s,
        rho_next: next.rho_s,
        delta_s: sched.delta_s,
        eps_s: sched.eps_s,
        eps_next: sched.eps_next,
        lambda_s: sched.lambda_s,
        d_s: sched.d_s,
        d_next: next.d_s,
        truncation_threshold: truncation_threshold(&sched),
        r0_before,
        r1_before,
        r2_before,
        r0_after: 0.0,
        r1_after: 0.0,
        r2_after: 0.0,
        f0_norm: 0.0,
        f1_norm: 0.0,
        f_bound_ok: true,
        solved_r0: 0,
        solved_r1: 0,
        deferred_count: 0,
        resonant_absorbed: 0,
        worst_divisor: None,
        divisor_guard: gamma * sched.lambda_s,
        min_floor_product: None,
        floor_chain_m7_ok: true,
        smallness_022402_ok: sched.smallness_022402_holds(sigma),
        shift_sup: 0.0,
        shift_bound: 0.9 * sched.eps_next,
        shift_ok: true,
        constant_absorbed: 0.0,
        lie_perturbation_tail: None,
        lie_normal_tail: None,
        flow_guard: None,
        dropped: DropStats::default(),
        contract_r0_ok: true,
        ladder_paper_ok: true,
        contract_r1_ok: true,
        contract_r2_ok: true,
        vtilde_bound_ok: true,
        conservation_ok: true,
        contract_ok: true,
    };

    if state.pert.is_empty() {
        // Nothing to do: advance the schedule only.
        let mut new_state = state.clone();
        new_state.s += 1;
        new_state.schedule = next;
        new_state.history.push(report.clone());
        return Ok((new_state, report));
    }

    let solve = solve_homological(&state.pert, &state.normal, &sched, gamma)?;
    report.solved_r0 = solve.solved_r0;
    report.solved_r1 = solve.solved_r1;
    report.deferred_count = solve.deferred_count;
    report.worst_divisor = solve.worst_divisor;
    report.min_floor_product = solve.min_floor_product;
    report.floor_chain_m7_ok = solve
        .min_floor_product
        .map_or(true, |p| gamma * p >= sched.lambda_s);

    report.f0_norm = solve.f.r0_norm(sched.rho_s);
    report.f1_norm = solve.f.r1_norm(sched.rho_s);
    // ‖F_i‖⁺ ≤ γ⁻¹ ε_s^{−0.01} ‖R_i‖⁺ = (γ λ_s)⁻¹ ‖R_i‖⁺.
    let f_cap = 1.0 / (gamma * sched.lambda_s);
    report.f_bound_ok =
        report.f0_norm <= f_cap * r0_before * (1.0 + 1e-9) && report.f1_norm <= f_cap * r1_before * (1.0 + 1e-9);

    let f_plain = reconstruct(&solve.f);
    report.flow_guard = Some(flow_guard_checked(&f_plain, &sched)?);

    let n_plain: Hamiltonian<C> = state.normal.to_hamiltonian(weight, window);

    // Remainder in the integral form, expanded into three bracket series:
    //   R_+ = Σ_{n≥2} ad^{n−1}({N,F})/n!           (from ∫ (1−t){N,F}∘X^t)
    //       + Σ_{n≥1} ad^{n−1}({R0+R1, F})/n!      (from ∫ {R0+R1,F}∘X^t)
    //       + R2 + Σ_{n≥1} ad^{n−1}({R2, F})/n!    (from R2∘X^1)
    //       + deferred.
    // The homological cancellation {N,F} + solved = −deferred is exact (the
    // rational-arithmetic identity), so the canceled part never enters the
    // float sum; deferred terms and R2 rejoin in classified form.
    let nf = poisson_bracket(&n_plain, &f_plain, caps)?;
    report.dropped.absorb(nf.dropped);
    let mut r_plus = Hamiltonian::zero(weight, window);
    if !nf.h.is_zero() {
        let series_n = lie_remainder(&nf.h, &f_plain, caps, 2)?;
        report.lie_normal_tail = Some(series_n.tail);
        report.dropped.absorb(series_n.dropped);
        r_plus = r_plus.add(&series_n.h)?;
    }
    let r01_plain = {
        let mut r01 = state.pert.clone();
        r01.r2.clear();
        reconstruct(&r01)
    };
    let g01 = poisson_bracket(&r01_plain, &f_plain, caps)?;
    report.dropped.absorb(g01.dropped);
    let mut pert_tail = TailEstimate {
        last_term_norm: 0.0,
        geometric_ratio: 0.0,
        converged: true,
        orders_used: 0,
    };
    if !g01.h.is_zero() {
        let series_01 = lie_remainder(&g01.h, &f_plain, caps, 1)?;
        pert_tail = series_01.tail;
        report.dropped.absorb(series_01.dropped);
        r_plus = r_plus.add(&series_01.h)?;
    }
    let r2_plain = {
        let mut r2 = state.pert.clone();
        r2.r0.clear();
        r2.r1.clear();
        reconstruct(&r2)
    };
    let g2 = poisson_bracket(&r2_plain, &f_plain, caps)?;
    report.dropped.absorb(g2.dropped);
    if !g2.h.is_zero() {
        let series_2 = lie_remainder(&g2.h, &f_plain, caps, 1)?;
        if series_2.tail.last_term_norm > pert_tail.last_term_norm {
            pert_tail = series_2.tail;
        }
        report.dropped.absorb(series_2.dropped);
        r_plus = r_plus.add(&series_2.h)?;
    }
    report.lie_perturbation_tail = Some(pert_tail);
    if C::BACKEND == Backend::Float64 {
        let (c, m) = r_plus.prune(caps.drop_threshold);
        report.dropped.absorb(DropStats { count: c, mass: m, capped_pairs: 0 });
    }

    let mut pert_next = classify(&r_plus, &state.pert.i0);
    // Deferred terms rejoin their own class unchanged; R2 carries over in
    // classified form (its flow correction is already in the series).
    for (k, c) in &solve.deferred.r0 {
        pert_next.merge_r0(k.clone(), c.clone());
    }
    for (k, c) in &solve.deferred.r1 {
        pert_next.merge_r1(k.clone(), c.clone());
    }
    for (k, c) in &state.pert.r2 {
        pert_next.merge_r2(k.clone(), c.clone());
    }
    report.conservation_ok = pert_next.conserving();

    // Absorb the new remainder's action-only part into the normal form.
    let (constant, shift) = resonant_part(&pert_next, &state.pert.i0);
    let (stripped_r0, stripped_r1) = pert_next.take_resonant();
    report.resonant_absorbed = stripped_r0.len() + stripped_r1.len();
    report.constant_absorbed = constant;
    report.shift_sup = shift.values().fold(0.0f64, |a, v| a.max(v.abs()));
    report.shift_ok = report.shift_sup < report.shift_bound;

    let mut normal = state.normal.clone();
    normal.constant += constant;
    normal.shift_by(&shift);
    report.vtilde_bound_ok = normal.bounded();

    report.r0_after = pert_next.r0_norm(next.rho_s);
    report.r1_after = pert_next.r1_norm(next.rho_s);
    report.r2_after = pert_next.r2_norm(next.rho_s);

    // Desk contraction targets; the strict paper ladder is recorded too.
    report.contract_r0_ok = if r0_before > 0.0 {
        report.r0_after <= r0_before.powf(1.4)
    } else {
        report.r0_after <= sched.eps_next
    };
    report.ladder_paper_ok = report.r0_after <= sched.eps_next;
    report.contract_r1_ok = report.r1_after <= sched.eps_next.powf(0.6);
    report.contract_r2_ok = report.r2_after <= (1.0 + next.d_s) * state.eps0;
    report.contract_ok = report.contract_r0_ok
        && report.contract_r1_ok
        && report.contract_r2_ok
        && report.shift_ok
        && report.vtilde_bound_ok
        && report.conservation_ok;

    let mut new_state = KamState {
        s: state.s + 1,
        normal,
        pert: pert_next,
        schedule: next,
        v_star: state.v_star.clone(),
        eps0: state.eps0,
        history: state.history.clone(),
    };
    new_state.history.push(report.clone());
    Ok((new_state, report))
}

fn flow_guard_checked<C: Coeff>(
    f_plain: &Hamiltonian<C>,
    sched: &Schedule,
) -> Result<FlowGuardVerdict> {
    // δ_s < min{ρ_s/4, 3−2√2} holds by the schedule invariants.
    flow_guard(f_plain, sched.rho_s, sched.delta_s)
}

/// Over random phases θ with q_n = √I_n(0) e^{iθ_n}, the weighted sup of
/// the perturbation's vector field: sup_n |(X_H(q))_n − i(n²+Ṽ_n)q_n| e^{w(n)}.
pub fn torus_residual<C: Coeff>(
    state: &KamState<C>,
    i0: &ActionVector,
    samples: u64,
    seed: u64,
) -> Result<f64> {
    if samples < 1 {
        return Err(KamError::InvalidParam("samples must be >= 1".into()));
    }
    let w = state.pert.weight;
    let window = state.window() as i32;
    let r_plain = reconstruct(&state.pert);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let mut q = SequenceState::new();
        for n in -window..=window {
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            let r = i0.get(n).sqrt();
            q.set(n, Complex64::new(r * theta.cos(), r * theta.sin()));
        }
        let field = crate::algebra::vector_field(&r_plain, &q, i0);
        for (&n, v) in &field.q {
            let val = v.norm().ln() + w.weight(n);
            if val.is_finite() {
                worst = worst.max(val.exp());
            }
        }
    }
    Ok(worst)
}

/// How ε is chosen: given outright, or calibrated so the initial ‖R0‖⁺
/// at ρ0 hits a target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsSpec {
    Explicit(f64),
    CalibrateR0(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaSource {
    Explicit(BTreeMap<i32, f64>),
    Sampled,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub sigma: f64,
    pub gamma: f64,
    pub eps: EpsSpec,
    pub window: u32,
    pub steps: u32,
    pub degree_cap: u32,
    pub order_cap: u32,
    pub drop_threshold: f64,
    /// Effective weight cutoff; None means e.
    pub c_override: Option<f64>,
    pub backend: Backend,
    pub freeze: bool,
    pub omega: OmegaSource,
    pub seed: u64,
    /// Freeze stopping tolerance; None derives ε_S^{0.5} (floored at 1e-15).
    pub freeze_tol: Option<f64>,
    pub max_outer: u32,
    pub torus_samples: u64,
}

impl RunConfig {
    pub fn desk(sigma: f64, window: u32) -> Self {
        RunConfig {
            sigma,
            gamma: 1e-3,
            eps: EpsSpec::CalibrateR0(1e-8),
            window,
            steps: 3,
            degree_cap: 12,
            order_cap: 12,
            drop_threshold: 1e-16,
            c_override: None,
            backend: Backend::Float64,
            freeze: true,
            omega: OmegaSource::Sampled,
            seed: 42,
            freeze_tol: None,
            max_outer: 10,
            torus_samples: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 2.0) {
            return Err(KamError::InvalidParam("sigma must be > 2".into()));
        }
        if !(self.gamma > 0.0) {
            return Err(KamError::InvalidParam("gamma must be > 0".into()));
        }
        if self.window < 1 {
            return Err(KamError::InvalidParam("window must be >= 1".into()));
        }
        match self.eps {
            EpsSpec::Explicit(e) | EpsSpec::CalibrateR0(e) => {
                if !(e > 0.0 && e < 1.0) {
                    return Err(KamError::InvalidParam("eps must lie in (0,1)".into()));
                }
            }
        }
        BracketCaps::new(self.degree_cap, self.order_cap, self.drop_threshold)?;
        if let Some(c) = self.c_override {
            if !(c >= std::f64::consts::E) {
                return Err(KamError::InvalidParam("c_override must be >= e".into()));
            }
        }
        if let OmegaSource::Explicit(ref m) = self.omega {
            for (&n, &v) in m {
                if !(0.0..=1.0).contains(&v) {
                    return Err(KamError::InvalidParam(format!(
                        "omega_{n} = {v} outside [0,1]"
                    )));
                }
                if n.unsigned_abs() > self.window {
                    return Err(KamError::InvalidParam(format!(
                        "omega mode {n} outside the window"
                    )));
                }
            }
        }
        if self.max_outer < 1 {
            return Err(KamError::InvalidParam("max_outer must be >= 1".into()));
        }
        if self.torus_samples < 1 {
            return Err(KamError::InvalidParam("torus_samples must be >= 1".into()));
        }
        Ok(())
    }

    pub fn weight(&self) -> Result<SigmaWeight> {
        SigmaWeight::new(
            self.sigma,
            Some(self.c_override.unwrap_or(std::f64::consts::E)),
        )
    }

    pub fn caps(&self) -> BracketCaps {
        BracketCaps {
            degree_cap: self.degree_cap,
            order_cap: self.order_cap,
            drop_threshold: self.drop_threshold,
        }
    }

    /// SHA-256 of the canonical JSON form; embedded in reports.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        let out = hasher.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}

struct Prepared<C: Coeff> {
    weight: SigmaWeight,
    i0: ActionVector,
    caps: BracketCaps,
    sextic: Hamiltonian<C>,
    sextuples: u64,
    eps_used: f64,
    omega: BTreeMap<i32, f64>,
}

fn prepare<C: Coeff>(config: &RunConfig) -> Result<Prepared<C>> {
    config.validate()?;
    let weight = config.weight()?;
    let i0 = ActionVector::torus(config.window, &weight);
    let caps = config.caps();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let omega: BTreeMap<i32, f64> = match &config.omega {
        OmegaSource::Explicit(m) => {
            let mut full = BTreeMap::new();
            for n in -(config.window as i32)..=config.window as i32 {
                full.insert(n, m.get(&n).copied().unwrap_or(0.0));
            }
            full
        }
        OmegaSource::Sampled => {
            let mut full = BTreeMap::new();
            for n in -(config.window as i32)..=config.window as i32 {
                full.insert(n, rng.random_range(0.0..1.0));
            }
            full
        }
    };

    let eps_used = match config.eps {
        EpsSpec::Explicit(e) => e,
        EpsSpec::CalibrateR0(target) => {
            // ‖R0‖⁺ is linear in ε; measure at ε = 1 and rescale.
            let probe = build_nls::<C>(config.window, 1.0, &omega, weight)?;
            let p = classify(&probe.sextic, &i0);
            let unit = p.r0_norm(rho0());
            if unit <= 0.0 {
                return Err(KamError::InvalidParam(
                    "cannot calibrate eps: empty sextic part".into(),
                ));
            }
            target / unit
        }
    };

    let build = build_nls::<C>(config.window, eps_used, &omega, weight)?;
    Ok(Prepared {
        weight,
        i0,
        caps,
        sextic: build.sextic,
        sextuples: build.sextuples,
        eps_used,
        omega,
    })
}

struct PipelineOut<C: Coeff> {
    state: KamState<C>,
    init: InitRecord,
    steps: Vec<StepReport>,
    failure: Option<KamError>,
}

/// Runs classify → init absorption → S steps from the frequency
/// parameter `v`. Resonance aborts the loop; the partial history is kept.
fn pipeline<C: Coeff>(
    prep: &Prepared<C>,
    config: &RunConfig,
    v: &BTreeMap<i32, f64>,
) -> Result<PipelineOut<C>> {
    let mut pert = classify(&prep.sextic, &prep.i0);
    let (init_constant, init_shift) = resonant_part(&pert, &prep.i0);
    let _ = pert.take_resonant();
    let mut normal = NormalForm::from_potential(v);
    normal.constant = init_constant;
    normal.shift_by(&init_shift);
    if !normal.bounded() {
        return Err(KamError::InvalidParam(
            "normal-form coefficients left |Vtilde| <= 2 at initialization".into(),
        ));
    }

    let r0n = pert.r0_norm(rho0());
    let r1n = pert.r1_norm(rho0());
    let r2n = pert.r2_norm(rho0());
    // ε_0 = measured plus-norm floor making the ladder hypotheses hold at
    // s = 0: ‖R0‖⁺ ≤ ε_0, ‖R1‖⁺ ≤ ε_0^{0.6}, ‖R2‖⁺ ≤ ε_0.
    let eps0 = r0n.max(r2n).max(r1n.powf(1.0 / 0.6));
    if !(eps0 > 0.0 && eps0 < 1.0) {
        return Err(KamError::InvalidParam(format!(
            "measured eps0 = {eps0:.3e} outside (0,1); adjust eps"
        )));
    }

    let init = InitRecord {
        eps_used: prep.eps_used,
        eps0,
        sextuples: prep.sextuples,
        sextic_terms: prep.sextic.len(),
        r0_norm: r0n,
        r1_norm: r1n,
        r2_norm: r2n,
        init_shift_sup: init_shift.values().fold(0.0f64, |a, x| a.max(x.abs())),
        init_constant,
        omega: prep.omega.clone(),
        v_initial: v.clone(),
    };

    let mut state = KamState {
        s: 0,
        normal,
        pert,
        schedule: schedule(0, config.sigma, eps0, config.window)?,
        v_star: v.clone(),
        eps0,
        history: Vec::new(),
    };

    let mut steps = Vec::new();
    let mut failure = None;
    for _ in 0..config.steps {
        match kam_step(&state, config.gamma, &prep.caps) {
            Ok((next, report)) => {
                steps.push(report);
                state = next;
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    Ok(PipelineOut {
        state,
        init,
        steps,
        failure,
    })
}

/// Full run: build → classify → S steps, optionally inside the frequency
/// freezing loop V ← V + (ω − Ṽ_S(V)), then torus diagnostics.
pub fn run<C: Coeff>(config: &RunConfig) -> Result<RunReport> {
    let prep = prepare::<C>(config)?;
    let mut report = RunReport::default();
    report.push(Record::Config(ConfigRecord {
        config_hash: config.hash(),
        seed: config.seed,
        backend: C::BACKEND.to_string(),
        sigma: config.sigma,
        gamma: config.gamma,
        window: config.window,
        steps: config.steps,
        degree_cap: config.degree_cap,
        order_cap: config.order_cap,
        drop_threshold: config.drop_threshold,
        c_effective: prep.weight.cutoff(),
        freeze: config.freeze,
    }));

    let omega = prep.omega.clone();
    let mut v = omega.clone();
    let mut out = pipeline(&prep, config, &v)?;
    let mut freeze_residual = None;
    let mut freeze_outers = None;

    if config.freeze && out.failure.is_none() {
        let eps_s_final = out.state.schedule.eps_s;
        let tol = config
            .freeze_tol
            .unwrap_or_else(|| eps_s_final.sqrt().max(1e-15));
        let mut outer = 0u32;
        loop {
            let achieved = &out.state.normal.vtilde;
            let residual = omega
                .iter()
                .map(|(n, w)| (achieved.get(n).copied().unwrap_or(0.0) - w).abs())
                .fold(0.0f64, f64::max);
            report.push(Record::Outer(OuterRecord { outer, residual }));
            freeze_residual = Some(residual);
            freeze_outers = Some(outer + 1);
            if residual <= tol {
                break;
            }
            if outer + 1 >= config.max_outer {
                out.failure = Some(KamError::FreezeNonConvergence {
                    iters: config.max_outer,
                    residual,
                });
                break;
            }
            // V ← V + (ω − Ṽ_S(V)); |Ṽ| ≤ 2 is revalidated downstream.
            for (n, w) in &omega {
                let a = out.state.normal.vtilde.get(n).copied().unwrap_or(0.0);
                *v.entry(*n).or_insert(0.0) += w - a;
            }
            outer += 1;
            out = pipeline(&prep, config, &v)?;
            if out.failure.is_some() {
                break;
            }
        }
    }

    report.push(Record::Init(out.init.clone()));
    let mut contract_failed = false;
    for s in &out.steps {
        if !s.contract_ok {
            contract_failed = true;
        }
        report.push(Record::Step(s.clone()));
    }

    if out.failure.is_none() && config.steps > 0 {
        let residual = torus_residual(
            &out.state,
            &prep.i0,
            config.torus_samples,
            config.seed ^ 0x9e37_79b9_7f4a_7c15,
        )?;
        let bound = out.state.schedule.eps_s.sqrt();
        // Theorem-band membership of the prescribed actions (the narrower
        // D_* band of the convergence section excludes the ¾ e^{-2w} choice;
        // the theorem band ¼…4 e^{-2w} is used instead and the discrepancy
        // is documented).
        let band_ok = (-(config.window as i32)..=config.window as i32).all(|n| {
            let i = prep.i0.get(n);
            let e2 = (-2.0 * prep.weight.weight(n)).exp();
            i >= 0.25 * e2 && i <= 4.0 * e2
        });
        report.push(Record::Torus(TorusRecord {
            samples: config.torus_samples,
            residual,
            bound,
            pass: residual <= bound,
            band_ok,
        }));
    }

    let (status, error) = match &out.failure {
        Some(KamError::Resonance { .. }) => ("resonance", out.failure.as_ref().map(|e| e.to_string())),
        Some(KamError::FreezeNonConvergence { .. }) => {
            ("freeze_nonconvergence", out.failure.as_ref().map(|e| e.to_string()))
        }
        Some(_) => ("error", out.failure.as_ref().map(|e| e.to_string())),
        None if contract_failed => ("contract_failure", None),
        None => ("ok", None),
    };

    report.push(Record::Final(FinalRecord {
        status: status.to_string(),
        error,
        steps_completed: out.state.s,
        freeze_residual,
        freeze_outer_iterations: freeze_outers,
        v_star: out.state.v_star.clone(),
        vtilde_final: out.state.normal.vtilde.clone(),
        omega,
        normal_constant: out.state.normal.constant,
    }));
    Ok(report)
}

/// Outer fixed-point iteration V ← V + (ω − Ṽ_S(V)) exposed directly:
/// returns (V*, final residual, residual history).
pub fn freeze_frequencies<C: Coeff>(
    config: &RunConfig,
    omega: &BTreeMap<i32, f64>,
    tol: f64,
    max_outer: u32,
) -> Result<(BTreeMap<i32, f64>, f64, Vec<f64>)> {
    if !(tol > 0.0) {
        return Err(KamError::InvalidParam("tol must be > 0".into()));
    }
    let mut cfg = config.clone();
    cfg.omega = OmegaSource::Explicit(omega.clone());
    cfg.freeze = false;
    let prep = prepare::<C>(&cfg)?;
    let full_omega = prep.omega.clone();
    let mut v = full_omega.clone();
    let mut history = Vec::new();
    for iter in 0..max_outer {
        let out = pipeline(&prep, &cfg, &v)?;
        if let Some(e) = out.failure {
            return Err(e);
        }
        let achieved = &out.state.normal.vtilde;
        let residual = full_omega
            .iter()
            .map(|(n, w)| (achieved.get(n).copied().unwrap_or(0.0) - w).abs())
            .fold(0.0f64, f64::max);
        history.push(residual);
        if residual <= tol {
            return Ok((v, residual, history));
        }
        if iter + 1 == max_outer {
            return Err(KamError::FreezeNonConvergence {
                iters: max_outer,
                residual,
            });
        }
        for (n, w) in &full_omega {
            let a = out.state.normal.vtilde.get(n).copied().unwrap_or(0.0);
            *v.entry(*n).or_insert(0.0) += w - a;
        }
    }
    unreachable!("loop returns or errors before exhausting max_outer")
}

/// Sanity check used by tests: the divisor of every solved key stays
/// consistent with the Diophantine distance ‖Σ l_n V_n‖ it dominates.
pub fn divisor_dominates_distance(key: &MonomialKey, vtilde: &BTreeMap<i32, f64>) -> bool {
    let d = divisor(key, vtilde);
    let mut dot = 0.0f64;
    for (n, e) in key.k.iter() {
        dot += e as f64 * vtilde.get(&n).copied().unwrap_or(0.0);
    }
    for (n, e) in key.kp.iter() {
        dot -= e as f64 * vtilde.get(&n).copied().unwrap_or(0.0);
    }
    d.abs() + 1e-12 >= nearest_int_dist(dot)
}
