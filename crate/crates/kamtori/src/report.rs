//! Structured run reports: one JSON record per line, deterministic byte
//! layout for a fixed (config, seed).
//!
//! Non-finite diagnostics (e.g. the flow-guard left-hand side at desk-scale
//! δ) serialize as JSON null; reports are write-oriented and the Hamiltonian
//! file format, not the report, carries the round-trip contract.

use crate::algebra::{DropStats, FlowGuardVerdict, TailEstimate};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigRecord {
    pub config_hash: String,
    pub seed: u64,
    pub backend: String,
    pub sigma: f64,
    pub gamma: f64,
    pub window: u32,
    pub steps: u32,
    pub degree_cap: u32,
    pub order_cap: u32,
    pub drop_threshold: f64,
    pub c_effective: f64,
    pub freeze: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InitRecord {
    pub eps_used: f64,
    /// Measured norm floor ε_0 for the ladder.
    pub eps0: f64,
    pub sextuples: u64,
    pub sextic_terms: usize,
    pub r0_norm: f64,
    pub r1_norm: f64,
    pub r2_norm: f64,
    /// Sup-norm of the resonant frequency shift absorbed at initialization.
    pub init_shift_sup: f64,
    pub init_constant: f64,
    pub omega: BTreeMap<i32, f64>,
    pub v_initial: BTreeMap<i32, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OuterRecord {
    pub outer: u32,
    /// ‖Ṽ_S(V) − ω‖_∞ after this outer iteration.
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepReport {
    pub s: u32,
    pub rho_s: f64,
    pub rho_next: f64,
    pub delta_s: f64,
    pub eps_s: f64,
    pub eps_next: f64,
    pub lambda_s: f64,
    pub d_s: f64,
    pub d_next: f64,
    pub truncation_threshold: f64,

    /// Class-wise plus-norms of the perturbation at ρ_s before the step.
    pub r0_before: f64,
    pub r1_before: f64,
    pub r2_before: f64,
    /// Class-wise plus-norms at ρ_{s+1} after the step.
    pub r0_after: f64,
    pub r1_after: f64,
    pub r2_after: f64,

    /// Plus-norms of the generating Hamiltonian classes at ρ_s.
    pub f0_norm: f64,
    pub f1_norm: f64,
    /// ‖F_i‖⁺ ≤ γ⁻¹ ε_s^{-0.01} ‖R_i‖⁺ for i = 0, 1.
    pub f_bound_ok: bool,

    pub solved_r0: usize,
    pub solved_r1: usize,
    pub deferred_count: usize,
    /// Action-only terms of the new remainder absorbed into the normal form.
    pub resonant_absorbed: usize,

    /// Min |D| among solved keys; None when nothing was solved.
    pub worst_divisor: Option<f64>,
    /// γ λ_s.
    pub divisor_guard: f64,
    /// Min γ-free product floor ∏ 1/(1+(k−k')²⟨n⟩⁴) among solved keys.
    pub min_floor_product: Option<f64>,
    /// Whether γ·(product floor) >= λ_s held for every solved key.
    pub floor_chain_m7_ok: bool,
    /// The smallness inequality 100 B_s (ln B_s)^{1−σ} ≤ 0.01 ln(1/ε_s).
    pub smallness_022402_ok: bool,

    /// Sup-norm of the frequency shift applied at the end of this step.
    pub shift_sup: f64,
    /// 0.9 ε_{s+1}.
    pub shift_bound: f64,
    pub shift_ok: bool,
    pub constant_absorbed: f64,

    pub lie_perturbation_tail: Option<TailEstimate>,
    pub lie_normal_tail: Option<TailEstimate>,
    pub flow_guard: Option<FlowGuardVerdict>,
    pub dropped: DropStats,

    /// Desk contraction target ‖R0‖⁺_{s+1} ≤ (‖R0‖⁺_s)^{1.4}.
    pub contract_r0_ok: bool,
    /// Paper ladder ‖R0‖⁺_{s+1} ≤ ε_{s+1} (recorded, not enforced).
    pub ladder_paper_ok: bool,
    /// ‖R1‖⁺_{s+1} ≤ ε_{s+1}^{0.6}.
    pub contract_r1_ok: bool,
    /// ‖R2‖⁺_{s+1} ≤ (1 + d_{s+1}) ε_0.
    pub contract_r2_ok: bool,
    pub vtilde_bound_ok: bool,
    pub conservation_ok: bool,
    pub contract_ok: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TorusRecord {
    pub samples: u64,
    pub residual: f64,
    /// ε_S^{0.5}, the acceptance bound for the residual.
    pub bound: f64,
    pub pass: bool,
    /// Torus band check ¼ e^{-2w} ≤ I_n ≤ 4 e^{-2w} for the sampled actions.
    pub band_ok: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FinalRecord {
    pub status: String,
    pub error: Option<String>,
    pub steps_completed: u32,
    pub freeze_residual: Option<f64>,
    pub freeze_outer_iterations: Option<u32>,
    pub v_star: BTreeMap<i32, f64>,
    pub vtilde_final: BTreeMap<i32, f64>,
    pub omega: BTreeMap<i32, f64>,
    pub normal_constant: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureRecord {
    pub gamma: f64,
    pub window: u32,
    pub height: u32,
    pub samples: u64,
    pub fraction: f64,
    /// fraction / γ, the Monte-Carlo constant of the measure estimate.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum Record {
    Config(ConfigRecord),
    Init(InitRecord),
    Outer(OuterRecord),
    Step(StepReport),
    Torus(TorusRecord),
    Final(FinalRecord),
    Dioph(crate::dioph::DiophantineReport),
    Measure(MeasureRecord),
    Verdict(crate::lemmas::LemmaVerdict),
}

/// A full run report: an ordered sequence of records.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunReport {
    pub records: Vec<Record>,
}

impl RunReport {
    pub fn push(&mut self, r: Record) {
        self.records.push(r);
    }

    /// Line-delimited JSON, one record per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn status(&self) -> Option<&str> {
        self.records.iter().rev().find_map(|r| match r {
            Record::Final(f) => Some(f.status.as_str()),
            _ => None,
        })
    }

    pub fn steps(&self) -> Vec<&StepReport> {
        self.records
            .iter()
            .filter_map(|r| match r {
                Record::Step(s) => Some(s),
                _ => None,
            })
            .collect()
    }

    pub fn torus(&self) -> Option<&TorusRecord> {
        self.records.iter().rev().find_map(|r| match r {
            Record::Torus(t) => Some(t),
            _ => None,
        })
    }

    pub fn init(&self) -> Option<&InitRecord> {
        self.records.iter().find_map(|r| match r {
            Record::Init(i) => Some(i),
            _ => None,
        })
    }

    pub fn final_record(&self) -> Option<&FinalRecord> {
        self.records.iter().rev().find_map(|r| match r {
            Record::Final(f) => Some(f),
            _ => None,
        })
    }
}
