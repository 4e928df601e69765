use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ct::{MovementModel, Mover};
use super::{generate_population, SimWorld};
use crate::error::{Error, Result};
use crate::field::TransectCount;
use crate::geom::{in_swath, PlanarPoint};
use crate::planner::{exclusive_areas_km2, SurveyDesign};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionModel {
    /// Probability that an animal inside a swath is recorded.
    pub drone_detection_prob: f64,
}

impl Default for DetectionModel {
    fn default() -> Self {
        Self {
            drone_detection_prob: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DroneSurveyOptions {
    pub detection: DetectionModel,
    /// Let animals move while the drones fly. Off by default.
    pub movement: Option<MovementModel>,
    /// Ground speed along transects; only used with movement.
    pub flight_speed_m_per_s: f64,
}

impl Default for DroneSurveyOptions {
    fn default() -> Self {
        Self {
            detection: DetectionModel::default(),
            movement: None,
            flight_speed_m_per_s: 10.0,
        }
    }
}

/// One animal recorded on a transect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    /// Index of the transect in flight order.
    pub transect: usize,
    pub position: PlanarPoint,
}

/// Records `population` on the transects of `design` and returns the
/// detections with the area each transect reports.
///
/// Static animals are counted at most once: an animal in the overlap of
/// two swaths belongs to the earlier-flown transect, and each transect's
/// area is the part of its swath no earlier transect covered. With movement,
/// the population moves for the flight time of each transect before it is
/// counted, every transect sees everything in its swath (so double counts
/// can happen) and the full swath areas are reported.
pub fn detect_population<R: Rng + ?Sized>(
    population: &[PlanarPoint],
    design: &SurveyDesign,
    options: &DroneSurveyOptions,
    r: &mut R,
) -> Result<(Vec<Detection>, Vec<f64>)> {
    let p = options.detection.drone_detection_prob;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::config("detection probability must lie in [0, 1]"));
    }
    let transects: Vec<_> = design.transects().collect();
    let mut found = Vec::new();
    match options.movement {
        None => {
            for a in population {
                if let Some(k) = transects
                    .iter()
                    .position(|t| in_swath(*a, t.start, t.end, t.swath_width_m))
                {
                    if p >= 1.0 || r.random::<f64>() < p {
                        found.push(Detection {
                            transect: k,
                            position: *a,
                        });
                    }
                }
            }
            found.sort_by_key(|d| d.transect);
            Ok((found, exclusive_areas_km2(design)))
        }
        Some(movement) => {
            if !(options.flight_speed_m_per_s > 0.0) {
                return Err(Error::config("flight speed must be positive"));
            }
            let mut mover = Mover::new(&design.region, population, movement, 1.0, r)?;
            for (k, t) in transects.iter().enumerate() {
                let minutes = t.length_m / options.flight_speed_m_per_s / 60.0;
                mover.advance(minutes, r);
                for a in mover.positions() {
                    if in_swath(*a, t.start, t.end, t.swath_width_m)
                        && (p >= 1.0 || r.random::<f64>() < p)
                    {
                        found.push(Detection {
                            transect: k,
                            position: *a,
                        });
                    }
                }
            }
            Ok((
                found,
                transects.iter().map(|t| t.covered_area_km2).collect(),
            ))
        }
    }
}

/// Every animal inside each transect's full swath, the way the imagery of
/// each transect would show it: an animal in a corner overlap appears once
/// per swath. Pairs with the full (design) transect areas. Static animals
/// only.
pub fn record_swaths<R: Rng + ?Sized>(
    population: &[PlanarPoint],
    design: &SurveyDesign,
    detection: &DetectionModel,
    r: &mut R,
) -> Result<Vec<Detection>> {
    let p = detection.drone_detection_prob;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::config("detection probability must lie in [0, 1]"));
    }
    let mut found = Vec::new();
    for (k, t) in design.transects().enumerate() {
        for a in population {
            if in_swath(*a, t.start, t.end, t.swath_width_m) && (p >= 1.0 || r.random::<f64>() < p)
            {
                found.push(Detection {
                    transect: k,
                    position: *a,
                });
            }
        }
    }
    Ok(found)
}

/// Per-transect totals of [`detect_population`], zeros included.
pub fn count_population<R: Rng + ?Sized>(
    population: &[PlanarPoint],
    design: &SurveyDesign,
    options: &DroneSurveyOptions,
    r: &mut R,
) -> Result<Vec<TransectCount>> {
    let (found, areas) = detect_population(population, design, options, r)?;
    let mut tallies = alloc::vec![0u64; areas.len()];
    for d in &found {
        tallies[d.transect] += 1;
    }
    Ok(design
        .transects()
        .zip(tallies)
        .zip(areas)
        .map(|((t, n), area)| TransectCount::new(t.id.clone(), n, area))
        .collect())
}

/// Generates the world's population and flies `design` over it.
pub fn simulate_drone_survey(
    world: &SimWorld,
    design: &SurveyDesign,
    options: &DroneSurveyOptions,
) -> Result<Vec<TransectCount>> {
    if design.region != world.region {
        return Err(Error::config("design and world cover different regions"));
    }
    let population = generate_population(world)?;
    let mut r = rng::labeled(world.seed, "drone");
    count_population(&population, design, options, &mut r)
}
