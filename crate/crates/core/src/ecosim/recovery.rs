use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::ct::{simulate_ct, CtSimOptions, MovementModel};
use super::drone::{simulate_drone_survey, DroneSurveyOptions};
use super::SimWorld;
use crate::error::{Error, Result};
use crate::estimators::{
    bootstrap_density, fit_zinb, naive_density, zinb_density, BootstrapConfig, DensityEstimate,
    ZinbOptions,
};
use crate::field::CtDeployment;
use crate::planner::SurveyDesign;
use crate::rem::{effort, encounter_count, rem_density, RemInput, RemParams};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SurveyPlan {
    Drone {
        design: SurveyDesign,
        options: DroneSurveyOptions,
    },
    Camera {
        deployments: Vec<CtDeployment>,
        movement: MovementModel,
        options: CtSimOptions,
        duration_days: f64,
        params: RemParams,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EstimatorChoice {
    Naive,
    Bootstrap(BootstrapConfig),
    Zinb(ZinbOptions),
    Rem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoverySpec {
    pub world: SimWorld,
    pub survey: SurveyPlan,
    pub estimator: EstimatorChoice,
    pub replicates: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub estimate: DensityEstimate,
    /// Animals counted on transects, or encounters at cameras.
    pub observations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub true_density: f64,
    pub replicates: usize,
    pub estimates: Vec<f64>,
    pub failures: Vec<(usize, String)>,
    pub mean_estimate: f64,
    pub relative_bias: f64,
    /// Fraction of successful replicates whose interval covers the truth.
    pub ci_coverage: Option<f64>,
    pub mean_observations: f64,
}

/// World seed (also used for the bootstrap and ZINB starts) of replicate `i`.
pub fn replicate_seed(seed: u64, i: usize) -> u64 {
    rng::mix64(rng::derive_seed(seed, "replicate") ^ i as u64)
}

/// Runs replicate `i` of `spec`. Each replicate gets its own world seed
/// (and bootstrap/ZINB seed) derived from `(spec.seed, i)`.
pub fn run_replicate(spec: &RecoverySpec, i: usize) -> Result<ReplicateOutcome> {
    let seed = replicate_seed(spec.seed, i);
    let world = spec.world.with_seed(seed);
    match &spec.survey {
        SurveyPlan::Drone { design, options } => {
            let counts = simulate_drone_survey(&world, design, options)?;
            let observations = counts.iter().map(|c| c.animal_count).sum();
            let estimate = match spec.estimator {
                EstimatorChoice::Naive => naive_density(&counts)?,
                EstimatorChoice::Bootstrap(cfg) => {
                    bootstrap_density(&counts, &BootstrapConfig { seed, ..cfg })?
                }
                EstimatorChoice::Zinb(opts) => {
                    let fit = fit_zinb(&counts, &ZinbOptions { seed, ..opts })?;
                    zinb_density(&fit, &counts)?
                }
                EstimatorChoice::Rem => return Err(Error::config("REM needs a camera survey")),
            };
            Ok(ReplicateOutcome {
                replicate: i,
                estimate,
                observations,
            })
        }
        SurveyPlan::Camera {
            deployments,
            movement,
            options,
            duration_days,
            params,
        } => {
            if spec.estimator != EstimatorChoice::Rem {
                return Err(Error::config("camera surveys are analysed with REM"));
            }
            let seqs = simulate_ct(&world, deployments, *movement, *duration_days, options)?;
            let y = encounter_count(&seqs, params.use_group_size);
            let estimate = rem_density(&RemInput::new(y, effort(deployments)?, *params))?;
            Ok(ReplicateOutcome {
                replicate: i,
                estimate,
                observations: y,
            })
        }
    }
}

/// Aggregates replicate outcomes; failed replicates are listed, not fatal.
pub fn summarize_replicates(
    spec: &RecoverySpec,
    outcomes: Vec<Result<ReplicateOutcome>>,
) -> RecoveryReport {
    let truth = spec.world.true_density;
    let mut estimates = Vec::new();
    let mut failures = Vec::new();
    let mut covered = 0usize;
    let mut with_ci = 0usize;
    let mut observations = 0.0;
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(o) => {
                estimates.push(o.estimate.density_per_km2);
                observations += o.observations as f64;
                if let Some(c) = o.estimate.covers(truth) {
                    with_ci += 1;
                    covered += c as usize;
                }
            }
            Err(e) => failures.push((i, alloc::format!("{e}"))),
        }
    }
    let n = estimates.len() as f64;
    let mean_estimate = if n > 0.0 {
        estimates.iter().sum::<f64>() / n
    } else {
        f64::NAN
    };
    let needs_ci = matches!(
        spec.estimator,
        EstimatorChoice::Bootstrap(_) | EstimatorChoice::Zinb(_)
    );
    RecoveryReport {
        true_density: truth,
        replicates: spec.replicates,
        mean_estimate,
        relative_bias: mean_estimate / truth - 1.0,
        ci_coverage: (needs_ci && with_ci > 0).then(|| covered as f64 / with_ci as f64),
        mean_observations: if n > 0.0 { observations / n } else { f64::NAN },
        estimates,
        failures,
    }
}

/// Runs all replicates sequentially and summarizes them.
pub fn recovery_experiment(spec: &RecoverySpec) -> RecoveryReport {
    let outcomes = (0..spec.replicates)
        .map(|i| run_replicate(spec, i))
        .collect();
    summarize_replicates(spec, outcomes)
}
