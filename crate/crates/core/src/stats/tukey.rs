use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::ptukey::{studentized_range_cdf, studentized_range_quantile};
use super::{anova_type2, FactorModelFit};
use crate::error::{Error, Result};
use crate::math::sqrt;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TukeyPair {
    pub level_a: String,
    pub level_b: String,
    /// `mean(a) − mean(b)`.
    pub mean_diff: f64,
    pub q_statistic: f64,
    pub p_adjusted: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl TukeyPair {
    /// The same comparison with `a` and `b` exchanged.
    pub fn swapped(&self) -> TukeyPair {
        TukeyPair {
            level_a: self.level_b.clone(),
            level_b: self.level_a.clone(),
            mean_diff: -self.mean_diff,
            q_statistic: self.q_statistic,
            p_adjusted: self.p_adjusted,
            ci_low: -self.ci_high,
            ci_high: -self.ci_low,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TukeyResult {
    pub factor: String,
    pub confidence: f64,
    pub residual_df: usize,
    pub residual_ms: f64,
    pub n_per_level: usize,
    pub critical_q: f64,
    pub pairs: Vec<TukeyPair>,
}

impl TukeyResult {
    pub fn pair(&self, a: &str, b: &str) -> Option<TukeyPair> {
        self.pairs.iter().find_map(|p| {
            if p.level_a == a && p.level_b == b {
                Some(p.clone())
            } else if p.level_a == b && p.level_b == a {
                Some(p.swapped())
            } else {
                None
            }
        })
    }
}

/// All-pairs Tukey HSD on the levels of `factor`, using the residual mean
/// square of the fitted model. Requires equal replication per level.
pub fn tukey_hsd(fit: &FactorModelFit, factor: &str, confidence: f64) -> Result<TukeyResult> {
    let f = fit
        .factor(factor)
        .ok_or_else(|| Error::config(alloc::format!("model has no factor '{factor}'")))?;
    let counts = f.counts();
    let n = counts[0];
    if counts.iter().any(|&c| c != n) {
        return Err(Error::config(alloc::format!(
            "factor '{factor}' is unbalanced ({counts:?}); Tukey-Kramer is not supported"
        )));
    }
    let anova = anova_type2(fit)?;
    let k = f.levels.len();
    let df = anova.residual_df as f64;
    let se = sqrt(anova.residual_ms / n as f64);
    let mut means = alloc::vec![0.0; k];
    for (&code, &y) in f.codes.iter().zip(&fit.response) {
        means[code] += y / n as f64;
    }
    let critical_q = studentized_range_quantile(confidence, k, df)?;
    let mut pairs = Vec::new();
    for a in 0..k {
        for b in (a + 1)..k {
            let diff = means[a] - means[b];
            let q = diff.abs() / se;
            pairs.push(TukeyPair {
                level_a: f.levels[a].clone(),
                level_b: f.levels[b].clone(),
                mean_diff: diff,
                q_statistic: q,
                p_adjusted: (1.0 - studentized_range_cdf(q, k, df)?).clamp(0.0, 1.0),
                ci_low: diff - critical_q * se,
                ci_high: diff + critical_q * se,
            });
        }
    }
    Ok(TukeyResult {
        factor: factor.into(),
        confidence,
        residual_df: anova.residual_df,
        residual_ms: anova.residual_ms,
        n_per_level: n,
        critical_q,
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::Method;
    use crate::stats::{fit_additive_model, fit_one_factor, DensityTable, METHOD};

    #[test]
    fn identical_level_means() {
        let mut t = DensityTable::default();
        for (u, d) in [("A", 1.0), ("B", 3.0), ("C", 8.0)] {
            t.push(u, Method::Naive, d);
            t.push(u, Method::Zinb, d + if u == "B" { 0.5 } else { -0.25 });
        }
        let fit = fit_additive_model(&t).unwrap();
        let r = tukey_hsd(&fit, METHOD, 0.95).unwrap();
        let p = &r.pairs[0];
        assert!(p.q_statistic.abs() < 1e-12);
        assert!((p.p_adjusted - 1.0).abs() < 1e-12);
    }

    #[test]
    fn swap_symmetry() {
        let mut t = DensityTable::default();
        for (i, m) in [Method::Naive, Method::Bootstrap, Method::Zinb]
            .into_iter()
            .enumerate()
        {
            for j in 0..4 {
                t.push("U", m, (i * 2 + j % 3) as f64 + 0.1 * j as f64);
            }
        }
        let fit = fit_one_factor(&t).unwrap();
        let r = tukey_hsd(&fit, METHOD, 0.95).unwrap();
        let ab = r.pair("naive", "zinb").unwrap();
        let ba = r.pair("zinb", "naive").unwrap();
        assert_eq!(ab.mean_diff, -ba.mean_diff);
        assert_eq!(ab.p_adjusted, ba.p_adjusted);
        assert!(ab.p_adjusted >= 0.0 && ab.p_adjusted <= 1.0);
    }

    #[test]
    fn unbalanced_rejected() {
        let mut t = DensityTable::default();
        t.push("U", Method::Naive, 1.0);
        t.push("U", Method::Naive, 2.0);
        t.push("U", Method::Zinb, 4.0);
        t.push("U", Method::Zinb, 4.5);
        t.push("U", Method::Zinb, 5.0);
        let fit = fit_one_factor(&t).unwrap();
        assert!(tukey_hsd(&fit, METHOD, 0.95).is_err());
    }
}
