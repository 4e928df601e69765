//! Field records: drone sightings, per-transect counts, camera deployments
//! and encounter sequences, plus observer reconciliation.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::PlanarPoint;
use crate::math::{floor, TAU};
use crate::planner::SurveyDesign;

pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// UTC instant as whole seconds since the Unix epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub fn days_until(self, later: Timestamp) -> f64 {
        (later.0 - self.0) as f64 / SECONDS_PER_DAY
    }

    pub fn plus_seconds(self, s: i64) -> Timestamp {
        Timestamp(self.0 + s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SightingRecord {
    pub transect_id: String,
    pub species: String,
    pub count: u32,
    pub x_m: f64,
    pub y_m: f64,
    pub timestamp: Timestamp,
    pub observer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransectCount {
    pub transect_id: String,
    pub animal_count: u64,
    pub covered_area_km2: f64,
}

impl TransectCount {
    pub fn new(transect_id: impl Into<String>, animal_count: u64, covered_area_km2: f64) -> Self {
        Self {
            transect_id: transect_id.into(),
            animal_count,
            covered_area_km2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncounterSequence {
    pub camera_id: String,
    pub start: Timestamp,
    pub end: Timestamp,
    pub group_size: u32,
}

impl EncounterSequence {
    pub fn validate(&self) -> Result<()> {
        if self.start > self.end {
            return Err(Error::Validation(alloc::vec![format!(
                "sequence at camera {} ends before it starts",
                self.camera_id
            )]));
        }
        if self.group_size == 0 {
            return Err(Error::Validation(alloc::vec![format!(
                "sequence at camera {} has group size 0",
                self.camera_id
            )]));
        }
        Ok(())
    }
}

pub const DEFAULT_BURST_SIZE: u32 = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtDeployment {
    pub camera_id: String,
    pub position: PlanarPoint,
    pub start: Timestamp,
    pub end: Timestamp,
    pub detection_radius_m: f64,
    pub detection_angle_rad: f64,
    /// Metadata only.
    pub mount_height_m: Option<f64>,
    /// Photos per trigger; metadata only.
    pub burst_size: u32,
}

impl CtDeployment {
    pub fn active_days(&self) -> f64 {
        self.start.days_until(self.end)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.end <= self.start {
            problems.push(format!("camera {}: empty active interval", self.camera_id));
        }
        if !(self.detection_radius_m > 0.0) {
            problems.push(format!(
                "camera {}: detection radius must be positive",
                self.camera_id
            ));
        }
        if !(self.detection_angle_rad > 0.0 && self.detection_angle_rad < TAU) {
            problems.push(format!(
                "camera {}: detection angle must lie in (0, 2π)",
                self.camera_id
            ));
        }
        if !self.position.is_finite() {
            problems.push(format!("camera {}: non-finite position", self.camera_id));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    pub fn covers(&self, t: Timestamp) -> bool {
        self.start <= t && t <= self.end
    }
}

/// Checks that every sequence references a known camera and falls inside
/// that camera's active interval; collects all violations.
pub fn validate_encounters(
    deployments: &[CtDeployment],
    sequences: &[EncounterSequence],
) -> Result<()> {
    let mut problems = Vec::new();
    for d in deployments {
        if let Err(Error::Validation(p)) = d.validate() {
            problems.extend(p);
        }
    }
    let by_id: BTreeMap<&str, &CtDeployment> = deployments
        .iter()
        .map(|d| (d.camera_id.as_str(), d))
        .collect();
    for (k, s) in sequences.iter().enumerate() {
        if let Err(Error::Validation(p)) = s.validate() {
            problems.extend(p);
        }
        match by_id.get(s.camera_id.as_str()) {
            None => problems.push(format!(
                "sequence {}: unknown camera {}",
                k + 1,
                s.camera_id
            )),
            Some(d) if !(d.covers(s.start) && d.covers(s.end)) => problems.push(format!(
                "sequence {}: camera {} was not active over [{}, {}]",
                k + 1,
                s.camera_id,
                s.start.0,
                s.end.0
            )),
            Some(_) => {}
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(problems))
    }
}

/// How to merge annotations of the same transects by several observers.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum ReconcileStrategy {
    /// Per transect, keep the records of the observer with the larger total.
    #[default]
    Max,
    /// Keep only one observer: the named one, or the first seen in the stream.
    First(Option<String>),
    /// Average per-transect totals over all observers, rounding half up.
    MeanRounded,
}

impl ReconcileStrategy {
    /// Parses `max`, `first`, `first:<observer>` or `mean_rounded`.
    pub fn parse(tag: &str) -> Result<Self> {
        match tag {
            "max" => Ok(Self::Max),
            "first" => Ok(Self::First(None)),
            "mean_rounded" => Ok(Self::MeanRounded),
            other => match other.strip_prefix("first:") {
                Some(obs) if !obs.is_empty() => Ok(Self::First(Some(obs.to_string()))),
                _ => Err(Error::config(format!(
                    "unknown reconciliation strategy '{tag}'"
                ))),
            },
        }
    }
}

fn observers_in_order(records: &[SightingRecord]) -> Vec<&str> {
    let mut seen: Vec<&str> = Vec::new();
    for r in records {
        if !seen.contains(&r.observer.as_str()) {
            seen.push(&r.observer);
        }
    }
    seen
}

/// Merges multi-observer annotations into one record stream.
///
/// For `MeanRounded` each transect yields a single record (observer tag
/// `mean`) carrying the rounded mean total and the first record's position
/// and time; transects whose rounded mean is zero yield nothing.
pub fn reconcile_observers(
    records: &[SightingRecord],
    strategy: &ReconcileStrategy,
) -> Vec<SightingRecord> {
    let observers = observers_in_order(records);
    if observers.len() <= 1 {
        return records.to_vec();
    }
    // transect -> observer -> total
    let mut totals: BTreeMap<&str, BTreeMap<&str, u64>> = BTreeMap::new();
    for r in records {
        *totals
            .entry(r.transect_id.as_str())
            .or_default()
            .entry(r.observer.as_str())
            .or_default() += u64::from(r.count);
    }
    match strategy {
        ReconcileStrategy::Max => {
            let chosen: BTreeMap<&str, &str> = totals
                .iter()
                .map(|(t, per_obs)| {
                    let mut best = observers[0];
                    let mut best_total = 0;
                    for o in &observers {
                        let total = per_obs.get(o).copied().unwrap_or(0);
                        if total > best_total {
                            best = o;
                            best_total = total;
                        }
                    }
                    (*t, best)
                })
                .collect();
            records
                .iter()
                .filter(|r| chosen.get(r.transect_id.as_str()) == Some(&r.observer.as_str()))
                .cloned()
                .collect()
        }
        ReconcileStrategy::First(name) => {
            let keep = name.as_deref().unwrap_or(observers[0]);
            records
                .iter()
                .filter(|r| r.observer == keep)
                .cloned()
                .collect()
        }
        ReconcileStrategy::MeanRounded => {
            let n_obs = observers.len() as f64;
            let mut out = Vec::new();
            let mut done: BTreeSet<&str> = BTreeSet::new();
            for r in records {
                if !done.insert(r.transect_id.as_str()) {
                    continue;
                }
                let sum: u64 = totals[r.transect_id.as_str()].values().sum();
                let mean = floor(sum as f64 / n_obs + 0.5) as u32;
                if mean > 0 {
                    out.push(SightingRecord {
                        count: mean,
                        observer: "mean".to_string(),
                        ..r.clone()
                    });
                }
            }
            out
        }
    }
}

/// Transect ids and covered areas of a design, in flight order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TransectCatalog(pub Vec<(String, f64)>);

impl From<&SurveyDesign> for TransectCatalog {
    fn from(design: &SurveyDesign) -> Self {
        Self(
            design
                .transects()
                .map(|t| (t.id.clone(), t.covered_area_km2))
                .collect(),
        )
    }
}

impl TransectCatalog {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// One `TransectCount` per flown transect, zeros included.
pub fn summarize_by_transect(
    records: &[SightingRecord],
    catalog: &TransectCatalog,
) -> Result<Vec<TransectCount>> {
    let index: BTreeMap<&str, usize> = catalog
        .0
        .iter()
        .enumerate()
        .map(|(k, (id, _))| (id.as_str(), k))
        .collect();
    let mut counts = alloc::vec![0u64; catalog.len()];
    let mut unknown: BTreeSet<String> = BTreeSet::new();
    for r in records {
        match index.get(r.transect_id.as_str()) {
            Some(&k) => counts[k] += u64::from(r.count),
            None => {
                unknown.insert(r.transect_id.clone());
            }
        }
    }
    if !unknown.is_empty() {
        return Err(Error::UnknownTransects(unknown.into_iter().collect()));
    }
    Ok(catalog
        .0
        .iter()
        .zip(counts)
        .map(|((id, area), n)| TransectCount::new(id.clone(), n, *area))
        .collect())
}
