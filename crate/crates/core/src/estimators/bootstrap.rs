use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::TransectCount;
use crate::math::{floor, sqrt};
use crate::rng;

use super::{DensityEstimate, Method};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BootstrapStatistic {
    /// Σ resampled counts / Σ resampled areas.
    RatioOfSums,
    /// Mean of per-transect densities.
    MeanOfRatios,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub iterations: usize,
    pub confidence: f64,
    pub seed: u64,
    pub statistic: BootstrapStatistic,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            iterations: 1000,
            confidence: 0.95,
            seed: 0,
            statistic: BootstrapStatistic::RatioOfSums,
        }
    }
}

impl BootstrapConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

/// Quantile of sorted data by linear interpolation between order
/// statistics (`(n − 1)·p` rule).
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = floor(h) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// The per-iteration statistics. Iteration `b` draws its `n` indices from
/// ChaCha8 substream `b` of `config.seed`, so any subset of iterations can be
/// recomputed independently.
pub fn bootstrap_iterates(counts: &[TransectCount], config: &BootstrapConfig) -> Result<Vec<f64>> {
    if config.iterations < 1 {
        return Err(Error::config("bootstrap needs at least one iteration"));
    }
    if !(config.confidence > 0.0 && config.confidence < 1.0) {
        return Err(Error::config("confidence must lie in (0, 1)"));
    }
    if counts.is_empty() {
        return Err(Error::degenerate("no transects"));
    }
    if let Some(c) = counts.iter().find(|c| !(c.covered_area_km2 > 0.0)) {
        return Err(Error::degenerate(alloc::format!(
            "transect {} has non-positive covered area",
            c.transect_id
        )));
    }
    let n = counts.len();
    let iterates = (0..config.iterations)
        .map(|b| {
            let mut r = rng::substream(config.seed, b as u64);
            let (mut animals, mut area, mut ratio_sum) = (0.0, 0.0, 0.0);
            for _ in 0..n {
                let c = &counts[r.random_range(0..n)];
                animals += c.animal_count as f64;
                area += c.covered_area_km2;
                ratio_sum += c.animal_count as f64 / c.covered_area_km2;
            }
            match config.statistic {
                BootstrapStatistic::RatioOfSums => animals / area,
                BootstrapStatistic::MeanOfRatios => ratio_sum / n as f64,
            }
        })
        .collect();
    Ok(iterates)
}

/// Mean of the bootstrap iterates with a percentile interval.
pub fn bootstrap_density(
    counts: &[TransectCount],
    config: &BootstrapConfig,
) -> Result<DensityEstimate> {
    let mut iterates = bootstrap_iterates(counts, config)?;
    let b = iterates.len() as f64;
    let mean = iterates.iter().sum::<f64>() / b;
    let var = if iterates.len() > 1 {
        iterates
            .iter()
            .map(|x| (x - mean) * (x - mean))
            .sum::<f64>()
            / (b - 1.0)
    } else {
        0.0
    };
    let sd = sqrt(var);
    iterates.sort_by(f64::total_cmp);
    let alpha = 1.0 - config.confidence;
    let mut est = DensityEstimate::point(Method::Bootstrap, mean, counts.len());
    est.se = Some(sd);
    est.ci_low = Some(percentile(&iterates, alpha / 2.0));
    est.ci_high = Some(percentile(&iterates, 1.0 - alpha / 2.0));
    est.note("iterations", config.iterations);
    est.note("confidence", config.confidence);
    est.note(
        "statistic",
        match config.statistic {
            BootstrapStatistic::RatioOfSums => "ratio_of_sums",
            BootstrapStatistic::MeanOfRatios => "mean_of_ratios",
        },
    );
    est.note("seed", config.seed);
    est.note("monte_carlo_se", sd / sqrt(b));
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;

    #[test]
    fn identical_transects_have_zero_width() {
        let counts: Vec<_> = (0..12)
            .map(|k| TransectCount::new(format!("T{k}"), 2, 0.02))
            .collect();
        let e = bootstrap_density(&counts, &BootstrapConfig::with_seed(5)).unwrap();
        assert!((e.density_per_km2 - 100.0).abs() < 1e-9);
        assert!((e.ci_high.unwrap() - e.ci_low.unwrap()).abs() < 1e-9);
    }

    #[test]
    fn single_transect_equals_naive() {
        let counts = vec![TransectCount::new("T1", 3, 0.019)];
        let e = bootstrap_density(&counts, &BootstrapConfig::with_seed(1)).unwrap();
        assert!((e.density_per_km2 - 3.0 / 0.019).abs() < 1e-9);
        assert_eq!(e.ci_low, e.ci_high);
    }

    #[test]
    fn deterministic_under_seed() {
        let counts: Vec<_> = (0..20)
            .map(|k| TransectCount::new(format!("T{k}"), (k % 4) as u64, 0.019))
            .collect();
        let a = bootstrap_density(&counts, &BootstrapConfig::with_seed(77)).unwrap();
        let b = bootstrap_density(&counts, &BootstrapConfig::with_seed(77)).unwrap();
        let c = bootstrap_density(&counts, &BootstrapConfig::with_seed(78)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.density_per_km2, c.density_per_km2);
    }

    #[test]
    fn config_errors() {
        let counts = vec![TransectCount::new("T1", 3, 0.019)];
        let cfg = BootstrapConfig {
            iterations: 0,
            ..BootstrapConfig::default()
        };
        assert!(matches!(
            bootstrap_density(&counts, &cfg),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn percentile_interpolates() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&xs, 0.0), 1.0);
        assert_eq!(percentile(&xs, 0.5), 3.0);
        assert!((percentile(&xs, 0.1) - 1.4).abs() < 1e-12);
        assert_eq!(percentile(&xs, 1.0), 5.0);
    }
}
