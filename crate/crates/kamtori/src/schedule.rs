//! The iteration parameter schedule: analyticity offsets δ_s and ρ_s, the
//! ε ladder, divisor guards λ_s, parameter-cube radii η_s, the domain
//! margins d_s, and the truncation data B_s, N_s, N_s*.

use crate::error::{KamError, Result};
use serde::{Deserialize, Serialize};

/// ρ0 = (3 − 2√2)/100.
pub fn rho0() -> f64 {
    (3.0 - 2.0 * 2f64.sqrt()) / 100.0
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Schedule {
    pub s: u32,
    pub delta_s: f64,
    pub rho_s: f64,
    /// ε_s = ε_0^{(3/2)^s}; may underflow to 0 for large s, in which case
    /// `ln_inv_eps_next` remains exact.
    pub eps_s: f64,
    pub eps_next: f64,
    /// ln(1/ε_{s+1}) = (3/2)^{s+1} ln(1/ε_0), computed in closed form.
    pub ln_inv_eps_next: f64,
    pub lambda_s: f64,
    pub eta_s: f64,
    pub d_s: f64,
    pub d_next: f64,
    pub b_s: f64,
    pub n_s: f64,
    /// exp{B_s^{1/σ}} before clamping (may be inf).
    pub n_star_raw: f64,
    /// N_s* clamped to the mode window.
    pub n_star_s: u32,
}

fn delta(s: u32) -> f64 {
    let t = (s + 4) as f64;
    rho0() / (t * t.ln().powi(2))
}

/// Schedule values at step `s`. `window` clamps N_s*.
pub fn schedule(s: u32, sigma: f64, eps0: f64, window: u32) -> Result<Schedule> {
    if !(eps0 > 0.0 && eps0 < 1.0) {
        return Err(KamError::InvalidParam(format!(
            "eps0 must lie in (0,1), got {eps0}"
        )));
    }
    if !(sigma > 2.0) {
        return Err(KamError::InvalidParam(format!(
            "schedule needs sigma > 2, got {sigma}"
        )));
    }
    let mut rho_s = rho0();
    for j in 0..s {
        rho_s += 3.0 * delta(j);
    }
    let mut eta = eps0.powf(0.01); // η_0 = λ_0
    for j in 0..s {
        let lambda_j = eps0.powf(1.5f64.powi(j as i32) * 0.01);
        eta *= lambda_j / 20.0;
    }
    let mut d_s = 0.0;
    for j in 1..=s {
        d_s += 1.0 / (std::f64::consts::PI.powi(2) * (j as f64).powi(2));
    }
    let d_next = d_s + 1.0 / (std::f64::consts::PI.powi(2) * ((s + 1) as f64).powi(2));

    let ln_inv_eps0 = -eps0.ln();
    let pow_s = 1.5f64.powi(s as i32);
    let ln_inv_eps_next = pow_s * 1.5 * ln_inv_eps0;
    let eps_s = (-pow_s * ln_inv_eps0).exp();
    let eps_next = (-ln_inv_eps_next).exp();
    let lambda_s = (-0.01 * pow_s * ln_inv_eps0).exp();

    let t = (s + 4) as f64;
    let b_s = 3.0 * 4f64.powf(sigma) * (2.0 * t * t.ln().powi(2) / rho0()) * ln_inv_eps_next;
    let n_s = b_s.powf((sigma - 1.0) / sigma) / b_s.ln().powf(sigma);
    let n_star_raw = b_s.powf(1.0 / sigma).exp();
    let n_star_s = if n_star_raw >= window as f64 {
        window
    } else {
        n_star_raw.ceil() as u32
    };

    Ok(Schedule {
        s,
        delta_s: delta(s),
        rho_s,
        eps_s,
        eps_next,
        ln_inv_eps_next,
        lambda_s,
        eta_s: eta,
        d_s,
        d_next,
        b_s,
        n_s,
        n_star_raw,
        n_star_s,
    })
}

/// The truncation threshold of the nonresonant elimination: a key is
/// eliminable at step s iff Σ_{i≥3} w(n_i*) <= (2(s+4)ln²(s+4)/ρ0)·ln(1/ε_{s+1}).
/// Boundary keys (equality) count as eliminable.
pub fn truncation_threshold(sched: &Schedule) -> f64 {
    let t = (sched.s + 4) as f64;
    2.0 * t * t.ln().powi(2) / rho0() * sched.ln_inv_eps_next
}

impl Schedule {
    /// δ_s < min{ρ_s/4, 3−2√2} and ρ_s ∈ [ρ0, 6ρ0].
    pub fn invariants_hold(&self) -> bool {
        self.delta_s < (self.rho_s / 4.0).min(3.0 - 2.0 * 2f64.sqrt())
            && self.rho_s >= rho0() * (1.0 - 1e-12)
            && self.rho_s <= 6.0 * rho0()
    }

    /// The smallness inequality 100 B_s (ln B_s)^{1−σ} ≤ 0.01 ln(1/ε_s);
    /// holds only for tiny ε_0 and is reported, not enforced.
    pub fn smallness_022402_holds(&self, sigma: f64) -> bool {
        let lhs = 100.0 * self.b_s * self.b_s.ln().powf(1.0 - sigma);
        let ln_inv_eps_s = self.ln_inv_eps_next / 1.5;
        lhs <= 0.01 * ln_inv_eps_s
    }
}
