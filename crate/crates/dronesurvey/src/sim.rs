//! Simulation configs, parallel recovery experiments and replicate export.

use std::path::Path;

use dronesurvey_core::ecosim::{
    detect_population, generate_population, record_swaths, replicate_seed, run_replicate,
    simulate_ct, summarize_replicates, CtSimOptions, DetectionModel, DroneSurveyOptions,
    EstimatorChoice, MovementModel, Placement, RecoveryReport, RecoverySpec, SimWorld, SurveyPlan,
};
use dronesurvey_core::estimators::{BootstrapConfig, BootstrapStatistic, ZinbOptions};
use dronesurvey_core::field::{CtDeployment, EncounterSequence, SightingRecord, Timestamp};
use dronesurvey_core::grid::GridSpec;
use dronesurvey_core::planner::{plan_design, DesignConfig, StopRule, SurveyDesign};
use dronesurvey_core::rem::RemParams;
use dronesurvey_core::rng;
use dronesurvey_core::{PlanarPoint, SurveyRegion};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::KvConfig;
use crate::csv_io::parse_timestamp;
use crate::error::{read_file, Error, Result};
use crate::geojson::parse_region;

/// A parsed simulation config.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub spec: RecoverySpec,
    pub species: String,
    /// Start of the simulated survey; drone transects are flown from here
    /// and camera deployments start here.
    pub start: Timestamp,
}

fn parse_points(s: &str) -> Result<Vec<PlanarPoint>> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let v: Vec<f64> = p
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::format(format!("bad launch point '{}'", p.trim())))?;
            match v.as_slice() {
                [x, y] if x.is_finite() && y.is_finite() => Ok(PlanarPoint::new(*x, *y)),
                _ => Err(Error::format(format!(
                    "launch point '{}' needs two numbers",
                    p.trim()
                ))),
            }
        })
        .collect()
}

fn region(c: &KvConfig, base: &Path) -> Result<SurveyRegion> {
    if let Some(file) = c.str("region.file") {
        if c.contains("region.width_m") || c.contains("region.height_m") {
            return Err(Error::format(
                "give either region.file or region.width_m/height_m",
            ));
        }
        return parse_region(&read_file(&base.join(file))?);
    }
    let origin = PlanarPoint::new(c.get_or("region.x0_m", 0.0)?, c.get_or("region.y0_m", 0.0)?);
    Ok(SurveyRegion::rectangle(
        origin,
        c.require("region.width_m")?,
        c.require("region.height_m")?,
    )?)
}

/// Cameras on a square lattice (offset by half a spacing from the region's
/// bounding box), filled row by row, skipping points outside the region.
pub fn camera_lattice(
    region: &SurveyRegion,
    count: usize,
    spacing_m: f64,
    start: Timestamp,
    days: f64,
    radius_m: f64,
    angle_rad: f64,
) -> Result<Vec<CtDeployment>> {
    if !(spacing_m > 0.0) {
        return Err(Error::format("camera.spacing_m must be positive"));
    }
    let (lo, hi) = region.bbox();
    let mut out = Vec::new();
    let mut y = lo.y + spacing_m / 2.0;
    while y < hi.y && out.len() < count {
        let mut x = lo.x + spacing_m / 2.0;
        while x < hi.x && out.len() < count {
            let p = PlanarPoint::new(x, y);
            if region.contains(p) {
                out.push(CtDeployment {
                    camera_id: format!("CT{:02}", out.len() + 1),
                    position: p,
                    start,
                    end: start.plus_seconds((days * 86_400.0).round() as i64),
                    detection_radius_m: radius_m,
                    detection_angle_rad: angle_rad,
                    mount_height_m: None,
                    burst_size: dronesurvey_core::field::DEFAULT_BURST_SIZE,
                });
            }
            x += spacing_m;
        }
        y += spacing_m;
    }
    if out.len() < count {
        return Err(Error::format(format!(
            "only {} of {count} cameras fit on a {spacing_m} m lattice in the region",
            out.len()
        )));
    }
    Ok(out)
}

fn movement(c: &KvConfig) -> Result<MovementModel> {
    let m = MovementModel {
        speed_km_per_day: c.require("movement.speed_km_per_day")?,
        mean_leg_minutes: c.get_or("movement.mean_leg_minutes", 60.0)?,
    };
    m.validate()?;
    Ok(m)
}

/// Parses a simulation config. Relative file paths resolve against `base`.
/// `seed_override` replaces the config's `seed`.
///
/// Keys (`key = value`, `#` comments, unknown keys rejected):
///
/// - `seed`, `replicates`, `species`, `start`, `survey` (drone | camera),
///   `estimator` (naive | bootstrap | zinb; camera runs use REM)
/// - `region.file`, or `region.width_m` + `region.height_m` with optional
///   `region.x0_m` / `region.y0_m`
/// - `world.true_density`, `world.placement` (poisson | thomas),
///   `world.thomas.mean_cluster_size`, `world.thomas.cluster_sd_m`
/// - drone: `design.grid_spacing_m`, `design.swath_width_m`,
///   `design.max_transects`, `design.target_coverage_pct` or
///   `design.flights_per_launch`, `design.launch_points` (`x y; x y`),
///   `drone.detection_prob`, `drone.movement`, `drone.flight_speed_m_per_s`,
///   `bootstrap.iterations`, `bootstrap.confidence`, `bootstrap.statistic`
/// - camera: `camera.count`, `camera.spacing_m`, `camera.duration_days`,
///   `camera.detection_radius_m`, `camera.detection_angle_rad`,
///   `camera.step_minutes`, `camera.azimuth_rad`,
///   `movement.speed_km_per_day`, `movement.mean_leg_minutes`, and the four
///   `rem.*` parameters
pub fn parse_simulation(
    text: &str,
    source: &str,
    base: &Path,
    seed_override: Option<u64>,
) -> Result<Simulation> {
    let c = KvConfig::parse(text, source)?;
    let config_seed: u64 = c.get_or("seed", 0)?;
    let seed = seed_override.unwrap_or(config_seed);
    let replicates: usize = c.get_or("replicates", 1)?;
    if replicates == 0 {
        return Err(Error::format("replicates must be at least 1"));
    }
    let species = c.str("species").unwrap_or("roe_deer").to_string();
    let start = match c.str("start") {
        Some(s) => parse_timestamp(s).map_err(Error::Format)?,
        None => parse_timestamp("2024-10-01T00:00:00Z").map_err(Error::Format)?,
    };
    let region = region(&c, base)?;
    let mut world = SimWorld::new(region.clone(), c.require("world.true_density")?, seed);
    world.placement = match c.str("world.placement").unwrap_or("poisson") {
        "poisson" => Placement::Poisson,
        "thomas" => Placement::Thomas {
            mean_cluster_size: c.require("world.thomas.mean_cluster_size")?,
            cluster_sd_m: c.require("world.thomas.cluster_sd_m")?,
        },
        other => return Err(Error::format(format!("unknown world.placement '{other}'"))),
    };
    world.validate()?;

    let estimator_tag = c.str("estimator").unwrap_or("naive").to_string();
    let (survey, estimator) = match c.str("survey").unwrap_or("drone") {
        "drone" => {
            let spacing = c.get_or("design.grid_spacing_m", 350.0)?;
            let grid = GridSpec::for_region(&region, spacing, PlanarPoint::new(0.0, 0.0))?;
            let stop =
                match (
                    c.get::<f64>("design.target_coverage_pct")?,
                    c.get::<usize>("design.flights_per_launch")?,
                ) {
                    (Some(_), Some(_)) => return Err(Error::format(
                        "give design.target_coverage_pct or design.flights_per_launch, not both",
                    )),
                    (_, Some(n)) => StopRule::FlightsPerLaunch(n),
                    (pct, None) => StopRule::TargetCoverage(pct.unwrap_or(17.0) / 100.0),
                };
            let config = DesignConfig {
                max_transects: c.get_or("design.max_transects", 7)?,
                stop,
                swath_width_m: c.get_or("design.swath_width_m", 55.0)?,
                ..DesignConfig::default()
            };
            let launch = parse_points(c.str("design.launch_points").ok_or_else(|| {
                Error::format(format!(
                    "{source}: missing required key 'design.launch_points'"
                ))
            })?)?;
            let design = plan_design(
                &region,
                &grid,
                &launch,
                rng::derive_seed(seed, "plan"),
                &config,
            )?;
            let mut options = DroneSurveyOptions {
                detection: DetectionModel {
                    drone_detection_prob: c.get_or("drone.detection_prob", 1.0)?,
                },
                ..DroneSurveyOptions::default()
            };
            if c.bool("drone.movement")?.unwrap_or(false) {
                options.movement = Some(movement(&c)?);
                options.flight_speed_m_per_s = c.get_or("drone.flight_speed_m_per_s", 10.0)?;
            }
            let estimator = match estimator_tag.as_str() {
                "naive" => EstimatorChoice::Naive,
                "bootstrap" => EstimatorChoice::Bootstrap(BootstrapConfig {
                    iterations: c.get_or("bootstrap.iterations", 1000)?,
                    confidence: c.get_or("bootstrap.confidence", 0.95)?,
                    statistic: match c.str("bootstrap.statistic").unwrap_or("ratio_of_sums") {
                        "ratio_of_sums" => BootstrapStatistic::RatioOfSums,
                        "mean_of_ratios" => BootstrapStatistic::MeanOfRatios,
                        other => {
                            return Err(Error::format(format!(
                                "unknown bootstrap.statistic '{other}'"
                            )))
                        }
                    },
                    seed: 0,
                }),
                "zinb" => EstimatorChoice::Zinb(ZinbOptions::default()),
                other => {
                    return Err(Error::format(format!(
                        "estimator '{other}' does not apply to a drone survey"
                    )))
                }
            };
            (SurveyPlan::Drone { design, options }, estimator)
        }
        "camera" => {
            if estimator_tag != "rem" && c.contains("estimator") {
                return Err(Error::format("camera surveys use estimator = rem"));
            }
            let days: f64 = c.require("camera.duration_days")?;
            let deployments = camera_lattice(
                &region,
                c.require("camera.count")?,
                c.get_or("camera.spacing_m", 350.0)?,
                start,
                days,
                c.require("camera.detection_radius_m")?,
                c.require("camera.detection_angle_rad")?,
            )?;
            let params = RemParams {
                day_range_km_per_day: c.require("rem.day_range_km_per_day")?,
                detection_radius_km: c.require("rem.detection_radius_km")?,
                detection_angle_rad: c.require("rem.detection_angle_rad")?,
                use_group_size: c.require_bool("rem.use_group_size")?,
            };
            params.validate()?;
            let options = CtSimOptions {
                step_minutes: c.get_or("camera.step_minutes", 1.0)?,
                azimuth_rad: c.get_or("camera.azimuth_rad", 0.0)?,
                azimuths: None,
            };
            (
                SurveyPlan::Camera {
                    deployments,
                    movement: movement(&c)?,
                    options,
                    duration_days: days,
                    params,
                },
                EstimatorChoice::Rem,
            )
        }
        other => return Err(Error::format(format!("unknown survey '{other}'"))),
    };
    c.reject_unused()?;
    Ok(Simulation {
        spec: RecoverySpec {
            world,
            survey,
            estimator,
            replicates,
            seed,
        },
        species,
        start,
    })
}

/// Runs the replicates in parallel. Each replicate draws from its own
/// seed-derived streams, so the report does not depend on thread count.
pub fn run_recovery(spec: &RecoverySpec) -> RecoveryReport {
    let outcomes = (0..spec.replicates)
        .into_par_iter()
        .map(|i| run_replicate(spec, i))
        .collect();
    summarize_replicates(spec, outcomes)
}

/// Sighting records of replicate `i` of a drone simulation: one record per
/// detected animal, stamped at the moment its transect is flown.
///
/// Static animals are recorded in every swath they lie in, matching the
/// full transect areas of the design file, so estimates from the exported
/// files are unbiased. The in-memory replicate counts a corner animal once
/// against exclusive areas instead; the two can differ by a few animals.
pub fn replicate_sightings(
    sim: &Simulation,
    design: &SurveyDesign,
    options: &DroneSurveyOptions,
    i: usize,
) -> Result<Vec<SightingRecord>> {
    let seed = replicate_seed(sim.spec.seed, i);
    let world = sim.spec.world.with_seed(seed);
    let population = generate_population(&world)?;
    let mut r = rng::labeled(seed, "drone");
    let found = match options.movement {
        None => record_swaths(&population, design, &options.detection, &mut r)?,
        Some(_) => detect_population(&population, design, options, &mut r)?.0,
    };
    let transects: Vec<_> = design.transects().collect();
    let speed = options.flight_speed_m_per_s;
    let mut elapsed = Vec::with_capacity(transects.len());
    let mut t = 0.0;
    for tr in &transects {
        elapsed.push(t + tr.length_m / speed / 2.0);
        t += tr.length_m / speed;
    }
    Ok(found
        .iter()
        .map(|d| SightingRecord {
            transect_id: transects[d.transect].id.clone(),
            species: sim.species.clone(),
            count: 1,
            x_m: d.position.x,
            y_m: d.position.y,
            timestamp: sim.start.plus_seconds(elapsed[d.transect].round() as i64),
            observer: "sim".into(),
        })
        .collect())
}

pub fn replicate_sequences(sim: &Simulation, i: usize) -> Result<Vec<EncounterSequence>> {
    let SurveyPlan::Camera {
        deployments,
        movement,
        options,
        duration_days,
        ..
    } = &sim.spec.survey
    else {
        return Err(Error::format("not a camera simulation"));
    };
    let world = sim.spec.world.with_seed(replicate_seed(sim.spec.seed, i));
    Ok(simulate_ct(
        &world,
        deployments,
        *movement,
        *duration_days,
        options,
    )?)
}

/// The recovery report as written to `report.json`. Coverage is a number
/// only when there is more than one replicate and the estimator has an
/// interval; otherwise it reads "n/a".
#[derive(Debug, Clone, Serialize)]
pub struct ReportFile {
    pub survey: &'static str,
    pub estimator: &'static str,
    pub seed: u64,
    pub true_density: f64,
    pub replicates: usize,
    pub successful: usize,
    pub mean_estimate: Option<f64>,
    pub relative_bias: Option<f64>,
    pub ci_coverage: serde_json::Value,
    pub mean_observations: Option<f64>,
    pub estimates: Vec<f64>,
    pub failures: Vec<(usize, String)>,
}

impl ReportFile {
    pub fn new(spec: &RecoverySpec, r: &RecoveryReport) -> Self {
        let finite = |x: f64| x.is_finite().then_some(x);
        Self {
            survey: match spec.survey {
                SurveyPlan::Drone { .. } => "drone",
                SurveyPlan::Camera { .. } => "camera",
            },
            estimator: match spec.estimator {
                EstimatorChoice::Naive => "naive",
                EstimatorChoice::Bootstrap(_) => "bootstrap",
                EstimatorChoice::Zinb(_) => "zinb",
                EstimatorChoice::Rem => "rem",
            },
            seed: spec.seed,
            true_density: r.true_density,
            replicates: r.replicates,
            successful: r.estimates.len(),
            mean_estimate: finite(r.mean_estimate),
            relative_bias: finite(r.relative_bias),
            ci_coverage: match r.ci_coverage {
                Some(c) if r.replicates > 1 => c.into(),
                _ => "n/a".into(),
            },
            mean_observations: finite(r.mean_observations),
            estimates: r.estimates.clone(),
            failures: r.failures.clone(),
        }
    }
}
