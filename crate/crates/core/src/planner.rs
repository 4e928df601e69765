//! Systematically randomized transect selection.
//!
//! A flight starts at a launch node and chains up to `max_transects` grid
//! edges. At each turnpoint the next direction is drawn among the unused
//! edges at that node, weighted by `1 / (1 + n_d)` where `n_d` counts the
//! transects already flown towards direction `d` in the whole design. An
//! edge is never flown twice within a design, so animals under one swath are
//! not counted again by a later transect on the same line.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{swath_rectangle, PlanarPoint, SurveyRegion, EPS_M};
use crate::grid::{build_grid, snap_launch_points, GridGraph, GridSpec, Heading};
use crate::rng;

pub const DEFAULT_MAX_TRANSECTS: usize = 7;
pub const DEFAULT_SWATH_WIDTH_M: f64 = 55.0;
pub const DEFAULT_ALTITUDE_AGL_M: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transect {
    pub id: String,
    pub flight_id: u32,
    pub order_in_flight: u32,
    pub edge: usize,
    pub start_node: usize,
    pub end_node: usize,
    pub start: PlanarPoint,
    pub end: PlanarPoint,
    pub heading: Heading,
    pub length_m: f64,
    pub swath_width_m: f64,
    /// Swath rectangle clipped to the region, km².
    pub covered_area_km2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightPlan {
    pub id: u32,
    pub launch_node: usize,
    pub transects: Vec<Transect>,
    pub total_distance_m: f64,
}

impl FlightPlan {
    pub fn covered_area_km2(&self) -> f64 {
        self.transects.iter().map(|t| t.covered_area_km2).sum()
    }
}

/// Transect counts per cardinal direction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionCounts {
    #[serde(rename = "N")]
    pub north: usize,
    #[serde(rename = "E")]
    pub east: usize,
    #[serde(rename = "S")]
    pub south: usize,
    #[serde(rename = "W")]
    pub west: usize,
}

impl DirectionCounts {
    pub fn get(&self, h: Heading) -> usize {
        match h {
            Heading::North => self.north,
            Heading::East => self.east,
            Heading::South => self.south,
            Heading::West => self.west,
        }
    }

    pub fn add(&mut self, h: Heading) {
        match h {
            Heading::North => self.north += 1,
            Heading::East => self.east += 1,
            Heading::South => self.south += 1,
            Heading::West => self.west += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.north + self.east + self.south + self.west
    }
}

/// Grid edges already assigned to a transect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSet(Vec<bool>);

impl EdgeSet {
    pub fn new(n_edges: usize) -> Self {
        Self(alloc::vec![false; n_edges])
    }

    pub fn contains(&self, edge: usize) -> bool {
        self.0[edge]
    }

    /// Marks `edge` as used; returns false if it already was.
    pub fn insert(&mut self, edge: usize) -> bool {
        !core::mem::replace(&mut self.0[edge], true)
    }

    pub fn len(&self) -> usize {
        self.0.iter().filter(|&&u| u).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlightParams {
    pub flight_id: u32,
    /// Number given to the first transect of this flight (`T<n>`).
    pub first_transect_number: usize,
    pub max_transects: usize,
    pub swath_width_m: f64,
    /// The flight ends as soon as its covered area reaches this budget.
    pub area_budget_km2: Option<f64>,
}

/// Area of the swath over edge `a`-`b`, clipped to the region, in km².
pub fn transect_area_km2(
    region: &SurveyRegion,
    a: PlanarPoint,
    b: PlanarPoint,
    swath_width_m: f64,
) -> f64 {
    region.clipped_area(&swath_rectangle(a, b, swath_width_m)) / 1e6
}

/// Chains connected unused edges starting from `start_node`.
///
/// Returns `None` (the empty-flight signal) when the start node has no
/// unused incident edge. The caller is responsible for adding the returned
/// edges to `used`.
#[allow(clippy::too_many_arguments)]
pub fn plan_flight<R: Rng + ?Sized>(
    grid: &GridGraph,
    region: &SurveyRegion,
    start_node: usize,
    rng: &mut R,
    used: &EdgeSet,
    usage: &DirectionCounts,
    params: &FlightParams,
) -> Option<FlightPlan> {
    let mut local_used: Vec<usize> = Vec::new();
    let mut local_usage = *usage;
    let mut transects: Vec<Transect> = Vec::new();
    let mut node = start_node;
    let mut previous: Option<Heading> = None;
    let mut area = 0.0;

    while transects.len() < params.max_transects {
        if let Some(budget) = params.area_budget_km2 {
            if area >= budget {
                break;
            }
        }
        let free = |h: Heading| {
            grid.edge_towards(node, h)
                .filter(|e| !used.contains(*e) && !local_used.contains(e))
        };
        let mut candidates: Vec<(Heading, usize)> = Heading::ALL
            .into_iter()
            .filter_map(|h| free(h).map(|e| (h, e)))
            .collect();
        if candidates.len() > 1 {
            if let Some(prev) = previous {
                candidates.retain(|(h, _)| *h != prev.opposite());
            }
        }
        if candidates.is_empty() {
            break;
        }

        let weights: Vec<f64> = candidates
            .iter()
            .map(|(h, _)| 1.0 / (1.0 + local_usage.get(*h) as f64))
            .collect();
        let total: f64 = weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = candidates.len() - 1;
        for (k, w) in weights.iter().enumerate() {
            if u < *w {
                pick = k;
                break;
            }
            u -= w;
        }
        let (heading, edge) = candidates[pick];
        let next = grid.other_end(edge, node);
        let start = grid.node(node).position;
        let end = grid.node(next).position;
        let covered = transect_area_km2(region, start, end, params.swath_width_m);
        transects.push(Transect {
            id: format!("T{}", params.first_transect_number + transects.len()),
            flight_id: params.flight_id,
            order_in_flight: transects.len() as u32 + 1,
            edge,
            start_node: node,
            end_node: next,
            start,
            end,
            heading,
            length_m: grid.spec().spacing_m,
            swath_width_m: params.swath_width_m,
            covered_area_km2: covered,
        });
        area += covered;
        local_used.push(edge);
        local_usage.add(heading);
        previous = Some(heading);
        node = next;
    }

    if transects.is_empty() {
        return None;
    }
    let total_distance_m = transects.iter().map(|t| t.length_m).sum();
    Some(FlightPlan {
        id: params.flight_id,
        launch_node: start_node,
        transects,
        total_distance_m,
    })
}

/// When the planner stops adding flights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Stop once covered area / region area reaches this fraction.
    TargetCoverage(f64),
    /// Plan this many rounds of one flight per launch node.
    FlightsPerLaunch(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignConfig {
    pub max_transects: usize,
    pub stop: StopRule,
    pub swath_width_m: f64,
    /// Defaults to half the grid spacing.
    pub snap_tolerance_m: Option<f64>,
    pub altitude_agl_m: f64,
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            max_transects: DEFAULT_MAX_TRANSECTS,
            stop: StopRule::TargetCoverage(0.17),
            swath_width_m: DEFAULT_SWATH_WIDTH_M,
            snap_tolerance_m: None,
            altitude_agl_m: DEFAULT_ALTITUDE_AGL_M,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyDesign {
    pub region: SurveyRegion,
    pub grid: GridSpec,
    pub flights: Vec<FlightPlan>,
    pub seed: u64,
    pub swath_width_m: f64,
    pub altitude_agl_m: f64,
    pub max_transects: usize,
    pub stop: StopRule,
    /// False when a coverage target could not be met (partial design).
    pub target_reached: bool,
    /// Launch points (input order) that did not snap to any grid node.
    pub unmapped_launch_points: Vec<usize>,
    pub warnings: Vec<String>,
}

impl SurveyDesign {
    /// All transects in flight order.
    pub fn transects(&self) -> impl Iterator<Item = &Transect> {
        self.flights.iter().flat_map(|f| f.transects.iter())
    }

    pub fn n_transects(&self) -> usize {
        self.flights.iter().map(|f| f.transects.len()).sum()
    }

    pub fn direction_counts(&self) -> DirectionCounts {
        let mut c = DirectionCounts::default();
        for t in self.transects() {
            c.add(t.heading);
        }
        c
    }
}

/// Plans a complete survey: flights from each launch point in turn,
/// round after round, until the stop rule is met or no launch node has an
/// unused edge left.
///
/// With a coverage target the last flight is cut short at the transect that
/// reaches it, so the overshoot is at most one transect area.
pub fn plan_design(
    region: &SurveyRegion,
    grid_spec: &GridSpec,
    launch_points: &[PlanarPoint],
    seed: u64,
    config: &DesignConfig,
) -> Result<SurveyDesign> {
    if config.max_transects == 0 {
        return Err(Error::config("max_transects must be at least 1"));
    }
    if !(config.swath_width_m > 0.0 && config.swath_width_m.is_finite()) {
        return Err(Error::config("swath width must be positive"));
    }
    if let StopRule::TargetCoverage(f) = config.stop {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::config(
                "target coverage must be a fraction in [0, 1]",
            ));
        }
    }
    let grid = build_grid(region, grid_spec)?;
    let tolerance = config.snap_tolerance_m.unwrap_or(grid_spec.spacing_m / 2.0);
    let snapped = snap_launch_points(launch_points, &grid, tolerance)?;
    let mut launch_nodes: Vec<usize> = Vec::new();
    for n in snapped.nodes {
        if !launch_nodes.contains(&n) {
            launch_nodes.push(n);
        }
    }

    let mut rng = rng::labeled(seed, "plan");
    let mut used = EdgeSet::new(grid.edges().len());
    let mut usage = DirectionCounts::default();
    let mut flights: Vec<FlightPlan> = Vec::new();
    let mut covered = 0.0;
    let mut n_transects = 0;

    let target_km2 = match config.stop {
        StopRule::TargetCoverage(f) => Some(f * region.area_km2()),
        StopRule::FlightsPerLaunch(_) => None,
    };
    let max_rounds = match config.stop {
        StopRule::TargetCoverage(_) => usize::MAX,
        StopRule::FlightsPerLaunch(n) => n,
    };
    let reached = |covered: f64| target_km2.is_some_and(|t| covered >= t - 1e-12);

    let mut round = 0;
    while round < max_rounds && !reached(covered) {
        let mut progressed = false;
        for &launch in &launch_nodes {
            if reached(covered) {
                break;
            }
            let params = FlightParams {
                flight_id: flights.len() as u32 + 1,
                first_transect_number: n_transects + 1,
                max_transects: config.max_transects,
                swath_width_m: config.swath_width_m,
                area_budget_km2: target_km2.map(|t| t - covered),
            };
            if let Some(plan) = plan_flight(&grid, region, launch, &mut rng, &used, &usage, &params)
            {
                for t in &plan.transects {
                    used.insert(t.edge);
                    usage.add(t.heading);
                }
                covered += plan.covered_area_km2();
                n_transects += plan.transects.len();
                flights.push(plan);
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
        round += 1;
    }

    let mut warnings = Vec::new();
    let target_reached = target_km2.is_none_or(|_| reached(covered));
    if let (false, Some(t)) = (target_reached, target_km2) {
        warnings.push(format!(
            "coverage target {:.4} km2 not reachable from the launch points; planned {:.4} km2",
            t, covered
        ));
    }
    if !snapped.unmapped.is_empty() {
        warnings.push(format!(
            "{} launch point(s) farther than {} m from any grid node were ignored",
            snapped.unmapped.len(),
            tolerance
        ));
    }

    Ok(SurveyDesign {
        region: region.clone(),
        grid: *grid_spec,
        flights,
        seed,
        swath_width_m: config.swath_width_m,
        altitude_agl_m: config.altitude_agl_m,
        max_transects: config.max_transects,
        stop: config.stop,
        target_reached,
        unmapped_launch_points: snapped.unmapped,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub covered_km2: f64,
    pub covered_fraction: f64,
    pub n_transects: usize,
    pub per_direction_counts: DirectionCounts,
}

/// Covered area is the plain sum of transect areas; swath overlap where
/// perpendicular transects meet at a node is not subtracted.
pub fn coverage(design: &SurveyDesign) -> Coverage {
    let covered_km2: f64 = design.transects().map(|t| t.covered_area_km2).sum();
    Coverage {
        covered_km2,
        covered_fraction: covered_km2 / design.region.area_km2(),
        n_transects: design.n_transects(),
        per_direction_counts: design.direction_counts(),
    }
}

/// Area of each transect's swath (clipped to the region) not already
/// covered by an earlier-flown transect, in km². The values sum to the area
/// of the union of all swaths.
pub fn exclusive_areas_km2(design: &SurveyDesign) -> Vec<f64> {
    // Grid edges are axis-aligned, so swaths are axis-aligned boxes.
    let boxes: Vec<[f64; 4]> = design
        .transects()
        .map(|t| {
            let c = swath_rectangle(t.start, t.end, t.swath_width_m);
            let xs = c.map(|p| p.x);
            let ys = c.map(|p| p.y);
            [
                xs.iter().copied().fold(f64::INFINITY, f64::min),
                ys.iter().copied().fold(f64::INFINITY, f64::min),
                xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                ys.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ]
        })
        .collect();
    let meet = |a: [f64; 4], b: [f64; 4]| -> Option<[f64; 4]> {
        let m = [
            a[0].max(b[0]),
            a[1].max(b[1]),
            a[2].min(b[2]),
            a[3].min(b[3]),
        ];
        (m[2] - m[0] > EPS_M && m[3] - m[1] > EPS_M).then_some(m)
    };
    let area = |b: [f64; 4]| {
        let corners = [
            PlanarPoint::new(b[0], b[1]),
            PlanarPoint::new(b[2], b[1]),
            PlanarPoint::new(b[2], b[3]),
            PlanarPoint::new(b[0], b[3]),
        ];
        design.region.clipped_area(&corners) / 1e6
    };
    (0..boxes.len())
        .map(|i| {
            let earlier: Vec<[f64; 4]> = (0..i).filter_map(|j| meet(boxes[i], boxes[j])).collect();
            // Inclusion-exclusion over the few swaths touching this one.
            let mut overlap = 0.0;
            for mask in 1u32..(1 << earlier.len()) {
                let mut cell = Some(boxes[i]);
                for (k, b) in earlier.iter().enumerate() {
                    if mask & (1 << k) != 0 {
                        cell = cell.and_then(|c| meet(c, *b));
                    }
                }
                if let Some(c) = cell {
                    let sign = if mask.count_ones() % 2 == 1 {
                        1.0
                    } else {
                        -1.0
                    };
                    overlap += sign * area(c);
                }
            }
            (area(boxes[i]) - overlap).max(0.0)
        })
        .collect()
}
