//! Known-truth simulation: synthetic populations, drone counts on planned
//! transects, and camera-trap encounters of animals moving as an ideal gas.

mod ct;
mod drone;
mod recovery;

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{PlanarPoint, SurveyRegion};
use crate::rng;

pub use ct::{simulate_ct, simulate_ct_population, CtSimOptions, MovementModel};
pub use drone::{
    count_population, detect_population, record_swaths, simulate_drone_survey, Detection,
    DetectionModel, DroneSurveyOptions,
};
pub use recovery::{
    recovery_experiment, replicate_seed, run_replicate, summarize_replicates, EstimatorChoice,
    RecoveryReport, RecoverySpec, ReplicateOutcome, SurveyPlan,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Placement {
    Poisson,
    /// Thomas cluster process. Parents arrive at rate
    /// `true_density / mean_cluster_size`, each with a Poisson number of
    /// offspring scattered isotropically with standard deviation
    /// `cluster_sd_m` around it.
    Thomas {
        mean_cluster_size: f64,
        cluster_sd_m: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimWorld {
    pub region: SurveyRegion,
    /// Individuals per km².
    pub true_density: f64,
    pub placement: Placement,
    pub seed: u64,
}

impl SimWorld {
    pub fn new(region: SurveyRegion, true_density: f64, seed: u64) -> Self {
        Self {
            region,
            true_density,
            placement: Placement::Poisson,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.true_density > 0.0 && self.true_density.is_finite()) {
            return Err(Error::config("true density must be positive"));
        }
        if let Placement::Thomas {
            mean_cluster_size,
            cluster_sd_m,
        } = self.placement
        {
            if !(mean_cluster_size > 0.0 && cluster_sd_m > 0.0) {
                return Err(Error::config("Thomas process parameters must be positive"));
            }
        }
        Ok(())
    }

    /// Parent intensity (per km²) of the Thomas process; `None` for Poisson.
    pub fn parent_intensity(&self) -> Option<f64> {
        match self.placement {
            Placement::Poisson => None,
            Placement::Thomas {
                mean_cluster_size, ..
            } => Some(self.true_density / mean_cluster_size),
        }
    }

    pub fn with_seed(&self, seed: u64) -> SimWorld {
        SimWorld {
            seed,
            ..self.clone()
        }
    }
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, r: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|d| d.sample(r) as u64).unwrap_or(0)
}

fn uniform_in<R: Rng + ?Sized>(region: &SurveyRegion, r: &mut R) -> PlanarPoint {
    let (lo, hi) = region.bbox();
    loop {
        let p = PlanarPoint::new(r.random_range(lo.x..hi.x), r.random_range(lo.y..hi.y));
        if region.contains(p) {
            return p;
        }
    }
}

/// Draws animal positions for `world`. Identical worlds give identical
/// populations.
pub fn generate_population(world: &SimWorld) -> Result<Vec<PlanarPoint>> {
    world.validate()?;
    let mut r = rng::labeled(world.seed, "population");
    let region = &world.region;
    match world.placement {
        Placement::Poisson => {
            let n = poisson_count(world.true_density * region.area_km2(), &mut r);
            Ok((0..n).map(|_| uniform_in(region, &mut r)).collect())
        }
        Placement::Thomas {
            mean_cluster_size,
            cluster_sd_m,
        } => {
            // Parents fall in the bounding box grown by a few cluster radii,
            // so clusters centred outside the region still contribute.
            let pad = 5.0 * cluster_sd_m;
            let (lo, hi) = region.bbox();
            let (x0, y0, x1, y1) = (lo.x - pad, lo.y - pad, hi.x + pad, hi.y + pad);
            let window_km2 = (x1 - x0) * (y1 - y0) / 1e6;
            let parents =
                poisson_count(world.true_density / mean_cluster_size * window_km2, &mut r);
            let mut out = Vec::new();
            for _ in 0..parents {
                let c = PlanarPoint::new(r.random_range(x0..x1), r.random_range(y0..y1));
                for _ in 0..poisson_count(mean_cluster_size, &mut r) {
                    let dx: f64 = r.sample(StandardNormal);
                    let dy: f64 = r.sample(StandardNormal);
                    let p = PlanarPoint::new(c.x + cluster_sd_m * dx, c.y + cluster_sd_m * dy);
                    if region.contains(p) {
                        out.push(p);
                    }
                }
            }
            Ok(out)
        }
    }
}
