//! Drone-based density extrapolations from per-transect counts.

mod bootstrap;
mod naive;
mod zinb;

use alloc::collections::BTreeMap;
use alloc::string::String;

use serde::{Deserialize, Serialize};

pub use bootstrap::{
    bootstrap_density, bootstrap_iterates, percentile, BootstrapConfig, BootstrapStatistic,
};
pub use naive::{naive_density, zero_fraction};
pub use zinb::{
    fit_zinb, zinb_density, zinb_loglik, zinb_loglik_grad, ZinbFit, ZinbOptions, LN_K_BOUNDS,
    LOGIT_PI_BOUNDS,
};

/// Two-sided 95% normal quantile used for Wald intervals.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rem,
    Naive,
    Bootstrap,
    Zinb,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Rem, Method::Naive, Method::Bootstrap, Method::Zinb];

    pub const fn as_str(self) -> &'static str {
        match self {
            Method::Rem => "rem",
            Method::Naive => "naive",
            Method::Bootstrap => "bootstrap",
            Method::Zinb => "zinb",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.as_str() == s)
    }
}

impl core::fmt::Display for Method {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.pad(self.as_str())
    }
}

/// A density in individuals per km² with optional uncertainty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub method: Method,
    pub density_per_km2: f64,
    pub se: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub n_units: usize,
    #[serde(default)]
    pub diagnostics: BTreeMap<String, String>,
    /// Label of the area × flight day the estimate belongs to, if known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub survey_unit: Option<String>,
}

impl DensityEstimate {
    pub fn point(method: Method, density_per_km2: f64, n_units: usize) -> Self {
        Self {
            method,
            density_per_km2,
            se: None,
            ci_low: None,
            ci_high: None,
            n_units,
            diagnostics: BTreeMap::new(),
            survey_unit: None,
        }
    }

    pub fn note(&mut self, key: &str, value: impl core::fmt::Display) {
        self.diagnostics
            .insert(key.into(), alloc::format!("{value}"));
    }

    pub fn has_ci(&self) -> bool {
        self.ci_low.is_some() && self.ci_high.is_some()
    }

    /// Whether the interval (when present) covers `value`.
    pub fn covers(&self, value: f64) -> Option<bool> {
        match (self.ci_low, self.ci_high) {
            (Some(lo), Some(hi)) => Some(lo <= value && value <= hi),
            _ => None,
        }
    }
}
