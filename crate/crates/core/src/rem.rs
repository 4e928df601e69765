//! Random Encounter Model: density from the rate at which animals moving
//! like gas particles enter camera detection zones.
//!
//! `D = (y / t) · π / (v · r · (2 + θ))` with `y` encounters, `t`
//! camera-days, `v` day range (km/day), `r` detection radius (km) and `θ`
//! detection arc (radians). The result is in individuals per km².

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{DensityEstimate, Method, Z_95};
use crate::field::{validate_encounters, CtDeployment, EncounterSequence};
use crate::math::{sqrt, PI, TAU};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemParams {
    pub day_range_km_per_day: f64,
    pub detection_radius_km: f64,
    pub detection_angle_rad: f64,
    /// Count individuals (Σ group size) instead of sequences.
    pub use_group_size: bool,
}

impl RemParams {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.day_range_km_per_day > 0.0 && self.day_range_km_per_day.is_finite()) {
            problems.push(String::from("day range must be positive"));
        }
        if !(self.detection_radius_km > 0.0 && self.detection_radius_km.is_finite()) {
            problems.push(String::from("detection radius must be positive"));
        }
        if !(self.detection_angle_rad > 0.0 && self.detection_angle_rad < TAU) {
            problems.push(String::from("detection angle must lie in (0, 2π)"));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemInput {
    pub encounters: u64,
    pub effort_camera_days: f64,
    pub params: RemParams,
    /// Variance-to-mean ratio assumed for the encounter count; 1 is Poisson.
    pub variance_inflation: f64,
}

impl RemInput {
    pub fn new(encounters: u64, effort_camera_days: f64, params: RemParams) -> Self {
        Self {
            encounters,
            effort_camera_days,
            params,
            variance_inflation: 1.0,
        }
    }

    /// Builds the input from deployments and their annotated sequences.
    pub fn from_field(
        deployments: &[CtDeployment],
        sequences: &[EncounterSequence],
        params: RemParams,
    ) -> Result<Self> {
        params.validate()?;
        validate_encounters(deployments, sequences)?;
        let t = effort(deployments)?;
        Ok(Self::new(
            encounter_count(sequences, params.use_group_size),
            t,
            params,
        ))
    }
}

/// Number of sequences, or the total number of individuals in them.
pub fn encounter_count(sequences: &[EncounterSequence], use_group_size: bool) -> u64 {
    if use_group_size {
        sequences.iter().map(|s| s.group_size as u64).sum()
    } else {
        sequences.len() as u64
    }
}

/// Total camera-days over all deployments.
pub fn effort(deployments: &[CtDeployment]) -> Result<f64> {
    if deployments.is_empty() {
        return Err(Error::Validation(alloc::vec![String::from(
            "no camera deployments"
        )]));
    }
    let empty: Vec<String> = deployments
        .iter()
        .filter(|d| d.end <= d.start)
        .map(|d| alloc::format!("camera {}: empty active interval", d.camera_id))
        .collect();
    if !empty.is_empty() {
        return Err(Error::Validation(empty));
    }
    Ok(deployments.iter().map(CtDeployment::active_days).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Adequacy {
    Adequate,
    Marginal,
    Inadequate,
}

impl Adequacy {
    pub const fn as_str(self) -> &'static str {
        match self {
            Adequacy::Adequate => "adequate",
            Adequacy::Marginal => "marginal",
            Adequacy::Inadequate => "inadequate",
        }
    }
}

/// 100 or more encounters are adequate, 40 to 99 marginal.
pub fn encounter_adequacy(y: u64) -> Adequacy {
    match y {
        100.. => Adequacy::Adequate,
        40..=99 => Adequacy::Marginal,
        _ => Adequacy::Inadequate,
    }
}

/// `π / (v · r · (2 + θ))`, the density per unit encounter rate.
fn rate_to_density(p: &RemParams) -> f64 {
    PI / (p.day_range_km_per_day * p.detection_radius_km * (2.0 + p.detection_angle_rad))
}

pub fn rem_density(input: &RemInput) -> Result<DensityEstimate> {
    input.params.validate()?;
    if !(input.effort_camera_days > 0.0 && input.effort_camera_days.is_finite()) {
        return Err(Error::config("camera effort must be positive"));
    }
    if !(input.variance_inflation > 0.0) {
        return Err(Error::config("variance inflation must be positive"));
    }
    let y = input.encounters as f64;
    let scale = rate_to_density(&input.params) / input.effort_camera_days;
    let density = y * scale;
    let se = scale * sqrt(input.variance_inflation * y);
    let mut est = DensityEstimate::point(Method::Rem, density, 1);
    est.se = Some(se);
    est.ci_low = Some((density - Z_95 * se).max(0.0));
    est.ci_high = Some(density + Z_95 * se);
    est.note("encounters", input.encounters);
    est.note("effort_camera_days", input.effort_camera_days);
    est.note("adequacy", encounter_adequacy(input.encounters).as_str());
    if input.encounters == 0 {
        est.note("warning", "no encounters; density is zero");
    } else if encounter_adequacy(input.encounters) != Adequacy::Adequate {
        est.note("warning", "fewer than 100 encounters");
    }
    Ok(est)
}
