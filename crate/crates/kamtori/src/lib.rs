//! Sparse formal-Hamiltonian algebra with weighted norms, a homological
//! solver under Diophantine small-divisor guards, a quadratically
//! convergent normal-form iteration for the truncated quintic NLS, and
//! numeric verification suites for the analytic estimates behind them.

pub mod algebra;
pub mod classify;
pub mod coeff;
pub mod dioph;
pub mod engine;
pub mod error;
pub mod ham;
pub mod index;
pub mod io;
pub mod lemmas;
pub mod nls;
pub mod report;
pub mod schedule;
pub mod weight;

pub use algebra::{
    evaluate, flow_guard, lie_transform, poisson_bracket, vector_field, BracketCaps, DropStats,
    TailEstimate,
};
pub use classify::{classify, reconstruct, resonant_part, ClassifiedPerturbation, JModes};
pub use coeff::{Backend, C64, CRat, Coeff};
pub use dioph::{
    diophantine_measure, diophantine_verify, divisor, divisor_floor, nearest_int_dist,
    DiophantineReport,
};
pub use engine::{
    freeze_frequencies, kam_step, run, solve_homological, torus_residual, EpsSpec, KamState,
    NormalForm, OmegaSource, RunConfig,
};
pub use error::{KamError, Result};
pub use ham::{ActionVector, Hamiltonian, SequenceState};
pub use index::{tame_defect, MonomialKey, MultiIndex, Rearrangement};
pub use lemmas::LemmaVerdict;
pub use nls::{build_nls, NlsBuild};
pub use report::{Record, RunReport, StepReport};
pub use schedule::{rho0, schedule, truncation_threshold, Schedule};
pub use weight::{compute_c_sigma, SigmaWeight};
