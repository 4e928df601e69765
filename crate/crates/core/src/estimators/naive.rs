use crate::error::{Error, Result};
use crate::field::TransectCount;

use super::{DensityEstimate, Method};

/// Total animals over total covered area.
pub fn naive_density(counts: &[TransectCount]) -> Result<DensityEstimate> {
    if counts.is_empty() {
        return Err(Error::degenerate("no transects"));
    }
    let animals: u64 = counts.iter().map(|c| c.animal_count).sum();
    let area: f64 = counts.iter().map(|c| c.covered_area_km2).sum();
    if !(area > 0.0) {
        return Err(Error::degenerate("total covered area is zero"));
    }
    let mut est = DensityEstimate::point(Method::Naive, animals as f64 / area, counts.len());
    est.note("animals", animals);
    est.note("covered_area_km2", area);
    Ok(est)
}

/// Fraction of transects without any sighting.
pub fn zero_fraction(counts: &[TransectCount]) -> Result<f64> {
    if counts.is_empty() {
        return Err(Error::degenerate("no transects"));
    }
    let zeros = counts.iter().filter(|c| c.animal_count == 0).count();
    Ok(zeros as f64 / counts.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec::Vec;

    /// `n` transects of equal area summing to `area`, with `animals` spread
    /// over the first `occupied` of them.
    fn table_row(n: usize, occupied: usize, animals: u64, area: f64) -> Vec<TransectCount> {
        (0..n)
            .map(|k| {
                let c = if k < occupied {
                    animals / occupied as u64 + u64::from((k as u64) < animals % occupied as u64)
                } else {
                    0
                };
                TransectCount::new(format!("T{}", k + 1), c, area / n as f64)
            })
            .collect()
    }

    #[test]
    fn division() {
        let a = naive_density(&table_row(40, 9, 21, 0.76)).unwrap();
        assert!((a.density_per_km2 - 21.0 / 0.76).abs() < 1e-12);
        assert!((a.density_per_km2 - 27.63).abs() < 0.005);
        let c = naive_density(&table_row(45, 17, 35, 0.93)).unwrap();
        assert!((c.density_per_km2 - 37.63).abs() < 0.005);
        assert!(a.se.is_none() && a.ci_low.is_none());
    }

    #[test]
    fn zero_animals() {
        let e = naive_density(&table_row(10, 0, 0, 0.2)).unwrap();
        assert_eq!(e.density_per_km2, 0.0);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(naive_density(&[]).is_err());
        assert!(naive_density(&[TransectCount::new("T1", 1, 0.0)]).is_err());
        assert!(zero_fraction(&[]).is_err());
    }

    #[test]
    fn zero_fractions_from_table_rows() {
        assert!((zero_fraction(&table_row(40, 9, 21, 0.76)).unwrap() - 0.775).abs() < 1e-12);
        assert!((zero_fraction(&table_row(45, 17, 35, 0.93)).unwrap() - 28.0 / 45.0).abs() < 1e-12);
        assert_eq!(zero_fraction(&table_row(5, 5, 9, 0.1)).unwrap(), 0.0);
    }
}
