//! The mode weight w(n) = ln^sigma(max(c, |n|)) and its cutoff constant.
//!
//! The analytic cutoff c(sigma) is astronomically large (about 1.7e7 at
//! sigma = 3), which flattens the weight on any desk-scale window. Runs
//! therefore use an effective cutoff `c_override >= e` (default e) so
//! weights stay informative at small |n|, while the log-superadditivity
//! verification keeps the true c(sigma).

use crate::error::{KamError, Result};
use serde::{Deserialize, Serialize};

/// c*(sigma) = 2((sigma-1)/e)^(sigma-1), the sup of ln^(sigma-1)(1+t)·ln((1+t)/t).
pub fn c_star(sigma: f64) -> f64 {
    2.0 * ((sigma - 1.0) / std::f64::consts::E).powf(sigma - 1.0)
}

/// The cutoff c(sigma) = max{c1, c2} with
/// c1 = exp{sigma·2^sigma·ln 2} and c2 = exp{(sigma·2^sigma·c*(sigma))^(1/sigma)}.
pub fn compute_c_sigma(sigma: f64) -> Result<f64> {
    if !(sigma > 1.0) {
        return Err(KamError::Domain(format!(
            "c(sigma) needs sigma > 1, got {sigma}"
        )));
    }
    let s2s = sigma * 2f64.powf(sigma);
    let c1 = (s2s * 2f64.ln()).exp();
    let c2 = (s2s * c_star(sigma)).powf(1.0 / sigma).exp();
    Ok(c1.max(c2))
}

/// Weight function n -> ln^sigma(max(c, |n|)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaWeight {
    pub sigma: f64,
    /// The true analytic cutoff c(sigma).
    pub c_sigma: f64,
    /// Effective cutoff used by this weight; `None` means the true c(sigma).
    pub c_override: Option<f64>,
}

impl SigmaWeight {
    pub fn new(sigma: f64, c_override: Option<f64>) -> Result<Self> {
        if !(sigma > 2.0) {
            return Err(KamError::Domain(format!(
                "weight needs sigma > 2, got {sigma}"
            )));
        }
        if let Some(c) = c_override {
            if !(c >= std::f64::consts::E) {
                return Err(KamError::Domain(format!(
                    "c_override must be >= e, got {c}"
                )));
            }
        }
        Ok(SigmaWeight {
            sigma,
            c_sigma: compute_c_sigma(sigma)?,
            c_override,
        })
    }

    /// Desk-scale default: effective cutoff e, so w(n) = ln^sigma(max(e,|n|)) >= 1.
    pub fn desk(sigma: f64) -> Result<Self> {
        Self::new(sigma, Some(std::f64::consts::E))
    }

    /// Weight with the true analytic cutoff.
    pub fn analytic(sigma: f64) -> Result<Self> {
        Self::new(sigma, None)
    }

    pub fn cutoff(&self) -> f64 {
        self.c_override.unwrap_or(self.c_sigma)
    }

    /// ⌊n⌋ = max{c, |n|}.
    pub fn floor_mode(&self, n: i32) -> f64 {
        self.cutoff().max(n.unsigned_abs() as f64)
    }

    /// w(n) = ln^sigma ⌊n⌋; symmetric in n ↔ -n, constant for |n| <= c.
    pub fn weight(&self, n: i32) -> f64 {
        self.floor_mode(n).ln().powf(self.sigma)
    }

    /// Same, for a nonnegative magnitude |n| given directly.
    pub fn weight_abs(&self, abs_n: u32) -> f64 {
        self.cutoff().max(abs_n as f64).ln().powf(self.sigma)
    }

    /// Two weights agree iff sigma and the effective cutoff agree.
    pub fn compatible(&self, other: &SigmaWeight) -> bool {
        self.sigma == other.sigma && self.cutoff() == other.cutoff()
    }
}
