//! TOML run configuration. One file holds the ~15 coupled parameters;
//! command-line flags override individual fields.

use anyhow::{bail, Context};
use kamtori::coeff::Backend;
use kamtori::engine::{EpsSpec, OmegaSource, RunConfig};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub sigma: Option<f64>,
    pub gamma: Option<f64>,
    /// Explicit ε; mutually exclusive with `eps_r0_target`.
    pub eps: Option<f64>,
    /// Calibrate ε so the initial ‖R0‖⁺ at ρ0 hits this value.
    pub eps_r0_target: Option<f64>,
    pub window: Option<u32>,
    pub steps: Option<u32>,
    pub degree_cap: Option<u32>,
    pub order_cap: Option<u32>,
    pub drop_threshold: Option<f64>,
    pub c_override: Option<f64>,
    pub backend: Option<String>,
    pub freeze: Option<bool>,
    pub seed: Option<u64>,
    pub freeze_tol: Option<f64>,
    pub max_outer: Option<u32>,
    pub torus_samples: Option<u64>,
    pub omega: Option<OmegaConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaConfig {
    /// "sampled" (uniform from the run seed) or "explicit".
    pub source: String,
    pub values: Option<BTreeMap<String, f64>>,
}

/// Flag-level overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub sigma: Option<f64>,
    pub gamma: Option<f64>,
    pub eps: Option<f64>,
    pub eps_r0_target: Option<f64>,
    pub window: Option<u32>,
    pub steps: Option<u32>,
    pub seed: Option<u64>,
    pub backend: Option<String>,
    pub freeze: Option<bool>,
    pub c_override: Option<f64>,
    pub degree_cap: Option<u32>,
    pub order_cap: Option<u32>,
    pub drop_threshold: Option<f64>,
}

pub fn load(path: Option<&Path>, over: &Overrides) -> anyhow::Result<RunConfig> {
    let file: FileConfig = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("cannot read config {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("cannot parse {}", p.display()))?
        }
        None => FileConfig::default(),
    };

    let backend_str = over
        .backend
        .clone()
        .or(file.backend.clone())
        .unwrap_or_else(|| "float64".into());
    let backend = match backend_str.as_str() {
        "float64" => Backend::Float64,
        "rational" => Backend::Rational,
        other => bail!("backend must be \"float64\" or \"rational\", got {other:?}"),
    };

    let eps_explicit = over.eps.or(file.eps);
    let eps_target = over.eps_r0_target.or(file.eps_r0_target);
    let eps = match (eps_explicit, eps_target) {
        (Some(_), Some(_)) => bail!("eps and eps_r0_target are mutually exclusive"),
        (Some(e), None) => EpsSpec::Explicit(e),
        (None, Some(t)) => EpsSpec::CalibrateR0(t),
        (None, None) => EpsSpec::CalibrateR0(1e-8),
    };

    let omega = match &file.omega {
        None => OmegaSource::Sampled,
        Some(o) => match o.source.as_str() {
            "sampled" => OmegaSource::Sampled,
            "explicit" => {
                let values = o
                    .values
                    .as_ref()
                    .context("omega.source = \"explicit\" needs omega.values")?;
                let mut map = BTreeMap::new();
                for (k, v) in values {
                    let n: i32 = k.parse().with_context(|| format!("bad omega mode {k:?}"))?;
                    map.insert(n, *v);
                }
                OmegaSource::Explicit(map)
            }
            other => bail!("omega.source must be \"sampled\" or \"explicit\", got {other:?}"),
        },
    };

    let config = RunConfig {
        sigma: over.sigma.or(file.sigma).unwrap_or(2.5),
        gamma: over.gamma.or(file.gamma).unwrap_or(1e-3),
        eps,
        window: over.window.or(file.window).unwrap_or(3),
        steps: over.steps.or(file.steps).unwrap_or(3),
        degree_cap: over.degree_cap.or(file.degree_cap).unwrap_or(12),
        order_cap: over.order_cap.or(file.order_cap).unwrap_or(12),
        drop_threshold: over.drop_threshold.or(file.drop_threshold).unwrap_or(1e-16),
        c_override: over.c_override.or(file.c_override),
        backend,
        freeze: over.freeze.or(file.freeze).unwrap_or(true),
        omega,
        seed: over.seed.or(file.seed).unwrap_or(42),
        freeze_tol: file.freeze_tol,
        max_outer: file.max_outer.unwrap_or(10),
        torus_samples: file.torus_samples.unwrap_or(100),
    };
    config
        .validate()
        .map_err(|e| anyhow::anyhow!("invalid configuration: {e}"))?;
    Ok(config)
}
