use alloc::string::ToString;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::{generate_population, SimWorld};
use crate::error::{Error, Result};
use crate::field::{CtDeployment, EncounterSequence, Timestamp};
use crate::geom::{PlanarPoint, SurveyRegion};
use crate::math::{atan2, ceil, cos, floor, round, sin, sqrt, PI, TAU};
use crate::rng;

/// Straight-line legs of exponentially distributed duration, each in a
/// uniformly random direction, at constant speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MovementModel {
    pub speed_km_per_day: f64,
    pub mean_leg_minutes: f64,
}

impl MovementModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.speed_km_per_day >= 0.0 && self.speed_km_per_day.is_finite()) {
            return Err(Error::config("movement speed must be non-negative"));
        }
        if !(self.mean_leg_minutes > 0.0) {
            return Err(Error::config("mean leg duration must be positive"));
        }
        Ok(())
    }

    fn metres_per_minute(&self) -> f64 {
        self.speed_km_per_day * 1000.0 / 1440.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtSimOptions {
    pub step_minutes: f64,
    /// Compass bearing of every camera's optical axis; 0 is north.
    pub azimuth_rad: f64,
    /// Per-camera bearings overriding `azimuth_rad`, in deployment order.
    pub azimuths: Option<Vec<f64>>,
}

impl Default for CtSimOptions {
    fn default() -> Self {
        Self {
            step_minutes: 1.0,
            azimuth_rad: 0.0,
            azimuths: None,
        }
    }
}

/// Moves a set of animals inside a region with reflecting boundaries.
pub(crate) struct Mover<'a> {
    region: &'a SurveyRegion,
    positions: Vec<PlanarPoint>,
    headings: Vec<(f64, f64)>,
    leg_left: Vec<f64>,
    model: MovementModel,
    step_minutes: f64,
    carry: f64,
}

fn random_heading<R: Rng + ?Sized>(r: &mut R) -> (f64, f64) {
    let a = r.random::<f64>() * TAU;
    (sin(a), cos(a))
}

impl<'a> Mover<'a> {
    pub(crate) fn new<R: Rng + ?Sized>(
        region: &'a SurveyRegion,
        positions: &[PlanarPoint],
        model: MovementModel,
        step_minutes: f64,
        r: &mut R,
    ) -> Result<Self> {
        model.validate()?;
        if !(step_minutes > 0.0) {
            return Err(Error::config("time step must be positive"));
        }
        let n = positions.len();
        let mut headings = Vec::with_capacity(n);
        let mut leg_left = Vec::with_capacity(n);
        for _ in 0..n {
            headings.push(random_heading(r));
            leg_left.push(model.mean_leg_minutes * r.sample::<f64, _>(Exp1));
        }
        Ok(Self {
            region,
            positions: positions.to_vec(),
            headings,
            leg_left,
            model,
            step_minutes,
            carry: 0.0,
        })
    }

    pub(crate) fn positions(&self) -> &[PlanarPoint] {
        &self.positions
    }

    /// Advances by whole steps covering `minutes` (fractions carry over).
    pub(crate) fn advance<R: Rng + ?Sized>(&mut self, minutes: f64, r: &mut R) {
        self.carry += minutes;
        let steps = floor(self.carry / self.step_minutes);
        self.carry -= steps * self.step_minutes;
        for _ in 0..steps as u64 {
            self.step(r);
        }
    }

    pub(crate) fn step<R: Rng + ?Sized>(&mut self, r: &mut R) {
        let dist = self.model.metres_per_minute() * self.step_minutes;
        if dist <= 0.0 {
            return;
        }
        for i in 0..self.positions.len() {
            self.leg_left[i] -= self.step_minutes;
            if self.leg_left[i] <= 0.0 {
                self.headings[i] = random_heading(r);
                self.leg_left[i] = self.model.mean_leg_minutes * r.sample::<f64, _>(Exp1);
            }
            let p = self.positions[i];
            let (ux, uy) = self.headings[i];
            let q = PlanarPoint::new(p.x + ux * dist, p.y + uy * dist);
            if self.region.contains(q) {
                self.positions[i] = q;
                continue;
            }
            // Reflect off the first boundary edge crossed.
            let mut moved = false;
            if let Some((t, c, d)) = self.region.first_crossing(p, q) {
                let (ex, ey) = (d.x - c.x, d.y - c.y);
                let len = sqrt(ex * ex + ey * ey);
                let (nx, ny) = (-ey / len, ex / len);
                let dot = ux * nx + uy * ny;
                let (rx, ry) = (ux - 2.0 * dot * nx, uy - 2.0 * dot * ny);
                let hit = p.lerp(&q, t);
                let rest = (1.0 - t) * dist;
                let q2 = PlanarPoint::new(hit.x + rx * rest, hit.y + ry * rest);
                self.headings[i] = (rx, ry);
                if self.region.contains(q2) {
                    self.positions[i] = q2;
                    moved = true;
                }
            }
            if !moved {
                // Corner or grazing contact: stay and turn around.
                self.headings[i] = (-ux, -uy);
            }
        }
    }
}

struct Sector {
    x: f64,
    y: f64,
    r2: f64,
    half_angle: f64,
    azimuth: f64,
}

impl Sector {
    fn contains(&self, p: PlanarPoint) -> bool {
        let (dx, dy) = (p.x - self.x, p.y - self.y);
        let d2 = dx * dx + dy * dy;
        if d2 > self.r2 {
            return false;
        }
        if d2 == 0.0 {
            return true;
        }
        let mut diff = atan2(dx, dy) - self.azimuth;
        while diff > PI {
            diff -= TAU;
        }
        while diff < -PI {
            diff += TAU;
        }
        diff.abs() <= self.half_angle
    }
}

/// Buckets cameras by the grid cells their detection discs touch.
struct CameraIndex {
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
}

impl CameraIndex {
    fn new(region: &SurveyRegion, sectors: &[Sector], cell: f64) -> Self {
        let (lo, hi) = region.bbox();
        let nx = ceil((hi.x - lo.x) / cell) as usize + 1;
        let ny = ceil((hi.y - lo.y) / cell) as usize + 1;
        let mut cells = alloc::vec![Vec::new(); nx * ny];
        for (k, s) in sectors.iter().enumerate() {
            let r = sqrt(s.r2);
            let (i0, j0) = Self::clamp_cell(lo, cell, nx, ny, s.x - r, s.y - r);
            let (i1, j1) = Self::clamp_cell(lo, cell, nx, ny, s.x + r, s.y + r);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    cells[j * nx + i].push(k as u32);
                }
            }
        }
        Self {
            x0: lo.x,
            y0: lo.y,
            cell,
            nx,
            ny,
            cells,
        }
    }

    fn clamp_cell(
        lo: PlanarPoint,
        cell: f64,
        nx: usize,
        ny: usize,
        x: f64,
        y: f64,
    ) -> (usize, usize) {
        let i = floor((x - lo.x) / cell).max(0.0) as usize;
        let j = floor((y - lo.y) / cell).max(0.0) as usize;
        (i.min(nx - 1), j.min(ny - 1))
    }

    fn candidates(&self, p: PlanarPoint) -> &[u32] {
        let (i, j) = Self::clamp_cell(
            PlanarPoint::new(self.x0, self.y0),
            self.cell,
            self.nx,
            self.ny,
            p.x,
            p.y,
        );
        &self.cells[j * self.nx + i]
    }
}

/// Simulates camera-trap encounter sequences for a given population.
///
/// Time starts at the earliest deployment start. A camera records while it
/// is active; a sequence opens when its sector goes from empty to occupied
/// and closes when it empties again, with the group size being the largest
/// number of animals seen at once.
pub fn simulate_ct_population(
    region: &SurveyRegion,
    population: &[PlanarPoint],
    deployments: &[CtDeployment],
    movement: MovementModel,
    duration_days: f64,
    options: &CtSimOptions,
    seed: u64,
) -> Result<Vec<EncounterSequence>> {
    movement.validate()?;
    if deployments.is_empty() {
        return Err(Error::config("no camera deployments"));
    }
    if !(duration_days > 0.0 && duration_days.is_finite()) {
        return Err(Error::config("duration must be positive"));
    }
    for d in deployments {
        d.validate()?;
        if !region.contains(d.position) {
            return Err(Error::config(alloc::format!(
                "camera {} lies outside the region",
                d.camera_id
            )));
        }
    }
    if let Some(az) = &options.azimuths {
        if az.len() != deployments.len() {
            return Err(Error::config("one azimuth per deployment is required"));
        }
    }
    let min_r = deployments
        .iter()
        .map(|d| d.detection_radius_m)
        .fold(f64::INFINITY, f64::min);
    let step_len = movement.metres_per_minute() * options.step_minutes;
    if step_len > min_r / 2.0 {
        return Err(Error::config(alloc::format!(
            "time step too coarse: animals move {step_len:.3} m per step but the smallest detection radius is \
             {min_r} m; use a step of at most {:.4} minutes",
            options.step_minutes * min_r / 2.0 / step_len
        )));
    }
    let origin = deployments
        .iter()
        .map(|d| d.start)
        .min()
        .expect("non-empty");
    let horizon = origin.plus_seconds(round(duration_days * 86_400.0) as i64);
    if let Some(d) = deployments.iter().find(|d| d.end > horizon) {
        return Err(Error::config(alloc::format!(
            "camera {} is active beyond the simulated {duration_days} days",
            d.camera_id
        )));
    }

    let sectors: Vec<Sector> = deployments
        .iter()
        .enumerate()
        .map(|(k, d)| Sector {
            x: d.position.x,
            y: d.position.y,
            r2: d.detection_radius_m * d.detection_radius_m,
            half_angle: d.detection_angle_rad / 2.0,
            azimuth: options
                .azimuths
                .as_ref()
                .map_or(options.azimuth_rad, |a| a[k]),
        })
        .collect();
    let max_r = deployments
        .iter()
        .map(|d| d.detection_radius_m)
        .fold(0.0, f64::max);
    let index = CameraIndex::new(region, &sectors, max_r.max(1.0));

    let mut r = rng::labeled(seed, "ct-movement");
    let mut mover = Mover::new(region, population, movement, options.step_minutes, &mut r)?;
    let n_cam = deployments.len();
    let mut inside: Vec<Vec<u32>> = alloc::vec![Vec::new(); population.len()];
    let mut occupancy = alloc::vec![0u32; n_cam];
    let mut open: Vec<Option<(Timestamp, u32)>> = alloc::vec![None; n_cam];
    let mut dirty_flag = alloc::vec![false; n_cam];
    let mut dirty: Vec<usize> = Vec::new();
    let mut was_active = alloc::vec![false; n_cam];
    let mut out = Vec::new();
    let steps = ceil(duration_days * 1440.0 / options.step_minutes) as u64;
    let mut scratch: Vec<u32> = Vec::new();

    for k in 0..=steps {
        if k > 0 {
            mover.step(&mut r);
        }
        let now = origin
            .plus_seconds(round(k as f64 * options.step_minutes * 60.0) as i64)
            .min(horizon);
        for (a, p) in mover.positions().iter().enumerate() {
            scratch.clear();
            for &c in index.candidates(*p) {
                if sectors[c as usize].contains(*p) {
                    scratch.push(c);
                }
            }
            if scratch == inside[a] {
                continue;
            }
            for &c in &inside[a] {
                if !scratch.contains(&c) {
                    occupancy[c as usize] -= 1;
                    if !dirty_flag[c as usize] {
                        dirty_flag[c as usize] = true;
                        dirty.push(c as usize);
                    }
                }
            }
            for &c in &scratch {
                if !inside[a].contains(&c) {
                    occupancy[c as usize] += 1;
                    if !dirty_flag[c as usize] {
                        dirty_flag[c as usize] = true;
                        dirty.push(c as usize);
                    }
                }
            }
            core::mem::swap(&mut inside[a], &mut scratch);
        }
        for c in 0..n_cam {
            let active = deployments[c].covers(now);
            if active != was_active[c] {
                was_active[c] = active;
                if !dirty_flag[c] {
                    dirty_flag[c] = true;
                    dirty.push(c);
                }
            }
        }
        for &c in &dirty {
            dirty_flag[c] = false;
            let seen = if was_active[c] { occupancy[c] } else { 0 };
            match (&mut open[c], seen) {
                (None, 0) => {}
                (None, n) => open[c] = Some((now, n)),
                (Some((_, max)), n) if n > 0 => *max = (*max).max(n),
                (Some((start, max)), _) => {
                    out.push(EncounterSequence {
                        camera_id: deployments[c].camera_id.clone(),
                        start: *start,
                        end: now.min(deployments[c].end),
                        group_size: *max,
                    });
                    open[c] = None;
                }
            }
        }
        dirty.clear();
    }
    for (c, o) in open.iter().enumerate() {
        if let Some((start, max)) = o {
            out.push(EncounterSequence {
                camera_id: deployments[c].camera_id.to_string(),
                start: *start,
                end: horizon.min(deployments[c].end),
                group_size: *max,
            });
        }
    }
    out.sort_by(|a, b| (a.start, &a.camera_id).cmp(&(b.start, &b.camera_id)));
    Ok(out)
}

/// Generates the world's population and simulates the camera deployments.
pub fn simulate_ct(
    world: &SimWorld,
    deployments: &[CtDeployment],
    movement: MovementModel,
    duration_days: f64,
    options: &CtSimOptions,
) -> Result<Vec<EncounterSequence>> {
    let population = generate_population(world)?;
    simulate_ct_population(
        &world.region,
        &population,
        deployments,
        movement,
        duration_days,
        options,
        world.seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;

    fn region() -> SurveyRegion {
        SurveyRegion::rectangle(PlanarPoint::new(0.0, 0.0), 1000.0, 1000.0).unwrap()
    }

    fn camera(k: usize, x: f64, y: f64, days: f64) -> CtDeployment {
        CtDeployment {
            camera_id: format!("C{k}"),
            position: PlanarPoint::new(x, y),
            start: Timestamp(0),
            end: Timestamp((days * 86_400.0) as i64),
            detection_radius_m: 10.0,
            detection_angle_rad: 0.7,
            mount_height_m: None,
            burst_size: 8,
        }
    }

    fn movement(v: f64) -> MovementModel {
        MovementModel {
            speed_km_per_day: v,
            mean_leg_minutes: 30.0,
        }
    }

    #[test]
    fn sector_geometry() {
        let s = Sector {
            x: 0.0,
            y: 0.0,
            r2: 100.0,
            half_angle: 0.35,
            azimuth: 0.0,
        };
        assert!(s.contains(PlanarPoint::new(0.0, 5.0)));
        assert!(!s.contains(PlanarPoint::new(0.0, -5.0)));
        assert!(!s.contains(PlanarPoint::new(5.0, 5.0)));
        assert!(!s.contains(PlanarPoint::new(0.0, 10.5)));
    }

    #[test]
    fn static_animals_outside_sectors_never_trigger() {
        let pop = [
            PlanarPoint::new(100.0, 100.0),
            PlanarPoint::new(700.0, 300.0),
        ];
        let cams = [camera(0, 500.0, 500.0, 2.0)];
        let seqs = simulate_ct_population(
            &region(),
            &pop,
            &cams,
            movement(0.0),
            2.0,
            &CtSimOptions::default(),
            1,
        )
        .unwrap();
        assert!(seqs.is_empty());
    }

    #[test]
    fn coarse_step_is_rejected() {
        let opts = CtSimOptions {
            step_minutes: 60.0,
            ..CtSimOptions::default()
        };
        let err = simulate_ct_population(
            &region(),
            &[],
            &[camera(0, 500.0, 500.0, 1.0)],
            movement(1.0),
            1.0,
            &opts,
            1,
        );
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn animals_stay_inside() {
        let pop: Vec<_> = (0..50)
            .map(|k| PlanarPoint::new(5.0 + k as f64 * 19.0, 995.0 - k as f64 * 19.0))
            .collect();
        let reg = region();
        let mut r = rng::substream(3, 0);
        let mut m = Mover::new(&reg, &pop, movement(20.0), 1.0, &mut r).unwrap();
        for _ in 0..5000 {
            m.step(&mut r);
            assert!(m.positions().iter().all(|p| reg.contains(*p)));
        }
    }

    #[test]
    fn group_size_is_max_concurrent() {
        // Two resting animals inside one sector and one outside form a
        // single sequence spanning the deployment.
        let reg = region();
        let cam = camera(0, 500.0, 500.0, 0.5);
        let pop = [
            PlanarPoint::new(499.0, 505.0),
            PlanarPoint::new(501.0, 506.0),
            PlanarPoint::new(520.0, 505.0),
        ];
        let seqs = simulate_ct_population(
            &reg,
            &pop,
            core::slice::from_ref(&cam),
            movement(0.0),
            0.5,
            &CtSimOptions::default(),
            4,
        )
        .unwrap();
        assert_eq!(seqs.len(), 1);
        assert_eq!(seqs[0].group_size, 2);
        assert_eq!(seqs[0].start, cam.start);
        assert_eq!(seqs[0].end, cam.end);
    }

    #[test]
    fn facing_away_sees_nothing() {
        let cam = camera(0, 500.0, 500.0, 0.5);
        let pop = [PlanarPoint::new(500.0, 505.0)];
        let opts = CtSimOptions {
            azimuths: Some(alloc::vec![PI]),
            ..CtSimOptions::default()
        };
        let seqs =
            simulate_ct_population(&region(), &pop, &[cam], movement(0.0), 0.5, &opts, 4).unwrap();
        assert!(seqs.is_empty());
    }

    #[test]
    fn deterministic() {
        let world = SimWorld::new(region(), 50.0, 8);
        let cams = [camera(0, 300.0, 300.0, 3.0), camera(1, 700.0, 600.0, 3.0)];
        let a = simulate_ct(&world, &cams, movement(1.0), 3.0, &CtSimOptions::default()).unwrap();
        let b = simulate_ct(&world, &cams, movement(1.0), 3.0, &CtSimOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}
