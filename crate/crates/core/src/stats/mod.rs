//! Comparison of density estimates across methods: additive factor model,
//! type II ANOVA and Tukey HSD.

mod ptukey;
mod tukey;

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::Method;
use crate::linalg::{least_squares, LeastSquares, Matrix};
use crate::special::f_sf;

pub use ptukey::{studentized_range_cdf, studentized_range_quantile};
pub use tukey::{tukey_hsd, TukeyPair, TukeyResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub survey_unit: String,
    pub method: Method,
    pub density: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DensityTable {
    pub rows: Vec<DensityRow>,
}

impl DensityTable {
    pub fn new(rows: Vec<DensityRow>) -> Result<Self> {
        let bad: Vec<String> = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.density.is_finite())
            .map(|(k, r)| {
                alloc::format!(
                    "row {}: non-finite density for {} / {}",
                    k + 1,
                    r.survey_unit,
                    r.method
                )
            })
            .collect();
        if !bad.is_empty() {
            return Err(Error::Validation(bad));
        }
        Ok(Self { rows })
    }

    pub fn push(&mut self, survey_unit: impl Into<String>, method: Method, density: f64) {
        self.rows.push(DensityRow {
            survey_unit: survey_unit.into(),
            method,
            density,
        });
    }

    /// Methods present, in canonical order.
    pub fn methods(&self) -> Vec<Method> {
        Method::ALL
            .into_iter()
            .filter(|m| self.rows.iter().any(|r| r.method == *m))
            .collect()
    }

    /// Survey units in order of first appearance.
    pub fn units(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.survey_unit) {
                out.push(r.survey_unit.clone());
            }
        }
        out
    }

    /// Every method × unit cell holds exactly one row.
    pub fn is_complete_crossing(&self) -> bool {
        let (m, u) = (self.methods(), self.units());
        self.rows.len() == m.len() * u.len()
            && m.iter().all(|mm| {
                u.iter().all(|uu| {
                    self.rows
                        .iter()
                        .filter(|r| r.method == *mm && &r.survey_unit == uu)
                        .count()
                        == 1
                })
            })
    }
}

/// A categorical predictor: level names and each observation's level index.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub name: String,
    pub levels: Vec<String>,
    pub codes: Vec<usize>,
}

impl Factor {
    fn from_labels(name: &str, labels: &[String]) -> Factor {
        let mut levels: Vec<String> = Vec::new();
        let codes = labels
            .iter()
            .map(|l| match levels.iter().position(|x| x == l) {
                Some(i) => i,
                None => {
                    levels.push(l.clone());
                    levels.len() - 1
                }
            })
            .collect();
        Factor {
            name: name.to_string(),
            levels,
            codes,
        }
    }

    /// Observations per level.
    pub fn counts(&self) -> Vec<usize> {
        let mut c = alloc::vec![0; self.levels.len()];
        for &k in &self.codes {
            c[k] += 1;
        }
        c
    }
}

/// Least-squares fit of `y ~ 1 + factor₁ + factor₂ + …` with treatment
/// coding.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModelFit {
    pub response: Vec<f64>,
    pub factors: Vec<Factor>,
    pub design: Matrix,
    /// Design columns belonging to each factor.
    pub columns: Vec<Vec<usize>>,
    pub fit: LeastSquares,
}

impl FactorModelFit {
    pub fn n(&self) -> usize {
        self.response.len()
    }

    pub fn residual_df(&self) -> usize {
        self.n() - self.design.cols()
    }

    pub fn residual_ss(&self) -> f64 {
        self.fit.rss
    }

    pub fn factor(&self, name: &str) -> Option<&Factor> {
        self.factors.iter().find(|f| f.name == name)
    }

    /// Residual sum of squares with one factor's columns removed.
    fn rss_without(&self, factor: usize) -> Result<f64> {
        let keep: Vec<usize> = (0..self.design.cols())
            .filter(|c| !self.columns[factor].contains(c))
            .collect();
        Ok(least_squares(&self.design.select_columns(&keep), &self.response)?.rss)
    }
}

/// Fits an additive model in the given factors. Every factor needs at
/// least two levels.
pub fn fit_factor_model(response: &[f64], factors: Vec<Factor>) -> Result<FactorModelFit> {
    let n = response.len();
    for f in &factors {
        if f.codes.len() != n {
            return Err(Error::config(alloc::format!(
                "factor {} has the wrong length",
                f.name
            )));
        }
        if f.levels.len() < 2 {
            return Err(Error::config(alloc::format!(
                "factor {} needs at least two levels",
                f.name
            )));
        }
    }
    let p = 1 + factors.iter().map(|f| f.levels.len() - 1).sum::<usize>();
    let mut design = Matrix::zeros(n, p);
    let mut columns = Vec::with_capacity(factors.len());
    let mut next = 1;
    for i in 0..n {
        design[(i, 0)] = 1.0;
    }
    for f in &factors {
        let cols: Vec<usize> = (next..next + f.levels.len() - 1).collect();
        for (i, &code) in f.codes.iter().enumerate() {
            if code > 0 {
                design[(i, next + code - 1)] = 1.0;
            }
        }
        next += f.levels.len() - 1;
        columns.push(cols);
    }
    let fit = least_squares(&design, response)?;
    Ok(FactorModelFit {
        response: response.to_vec(),
        factors,
        design,
        columns,
        fit,
    })
}

pub const METHOD: &str = "method";
pub const SURVEY_UNIT: &str = "survey_unit";

fn method_factor(table: &DensityTable) -> Factor {
    let labels: Vec<String> = table
        .rows
        .iter()
        .map(|r| r.method.as_str().to_string())
        .collect();
    Factor::from_labels(METHOD, &labels)
}

/// Additive `density ~ method + survey_unit` model (randomized blocks).
pub fn fit_additive_model(table: &DensityTable) -> Result<FactorModelFit> {
    let units: Vec<String> = table.rows.iter().map(|r| r.survey_unit.clone()).collect();
    let y: Vec<f64> = table.rows.iter().map(|r| r.density).collect();
    fit_factor_model(
        &y,
        alloc::vec![
            method_factor(table),
            Factor::from_labels(SURVEY_UNIT, &units)
        ],
    )
}

/// One-way `density ~ method` model.
pub fn fit_one_factor(table: &DensityTable) -> Result<FactorModelFit> {
    let y: Vec<f64> = table.rows.iter().map(|r| r.density).collect();
    fit_factor_model(&y, alloc::vec![method_factor(table)])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaTerm {
    pub name: String,
    pub ss: f64,
    pub df: usize,
    pub ms: f64,
    pub f: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub terms: Vec<AnovaTerm>,
    pub residual_ss: f64,
    pub residual_df: usize,
    pub residual_ms: f64,
}

impl AnovaResult {
    pub fn term(&self, name: &str) -> Option<&AnovaTerm> {
        self.terms.iter().find(|t| t.name == name)
    }
}

/// Type II ANOVA: each factor's SS is the RSS increase when that factor
/// alone is dropped from the full additive model.
pub fn anova_type2(fit: &FactorModelFit) -> Result<AnovaResult> {
    let residual_df = fit.residual_df();
    if residual_df == 0 {
        return Err(Error::PUndefined("no residual degrees of freedom".into()));
    }
    let rss = fit.residual_ss().max(0.0);
    let scale: f64 = fit
        .response
        .iter()
        .map(|y| y * y)
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    if rss <= 1e-24 * scale {
        return Err(Error::PUndefined("residual mean square is zero".into()));
    }
    let residual_ms = rss / residual_df as f64;
    let mut terms = Vec::with_capacity(fit.factors.len());
    for (k, f) in fit.factors.iter().enumerate() {
        let ss = (fit.rss_without(k)? - rss).max(0.0);
        let df = f.levels.len() - 1;
        let ms = ss / df as f64;
        let fstat = ms / residual_ms;
        terms.push(AnovaTerm {
            name: f.name.clone(),
            ss,
            df,
            ms,
            f: fstat,
            p: f_sf(fstat, df as f64, residual_df as f64).clamp(0.0, 1.0),
        });
    }
    Ok(AnovaResult {
        terms,
        residual_ss: rss,
        residual_df,
        residual_ms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;

    fn table(values: &[&[f64]]) -> DensityTable {
        // values[unit][method]
        let mut t = DensityTable::default();
        for (u, row) in values.iter().enumerate() {
            for (m, &v) in row.iter().enumerate() {
                t.push(format!("U{u}"), Method::ALL[m], v);
            }
        }
        t
    }

    #[test]
    fn equal_densities_have_zero_effects() {
        let t = table(&[&[5.0, 5.0], &[5.0, 5.0], &[5.0, 5.0]]);
        let fit = fit_additive_model(&t).unwrap();
        assert!(fit.fit.coefficients[1..].iter().all(|c| c.abs() < 1e-12));
        assert!(fit.residual_ss() < 1e-20);
        assert!(matches!(anova_type2(&fit), Err(Error::PUndefined(_))));
    }

    #[test]
    fn exactly_additive_table() {
        let t = table(&[&[10.0, 20.0], &[30.0, 40.0]]);
        let fit = fit_additive_model(&t).unwrap();
        assert!(fit.residual_ss() < 1e-20);
        assert_eq!(fit.residual_df(), 1);
    }

    #[test]
    fn degrees_of_freedom_for_four_by_six() {
        let vals: Vec<Vec<f64>> = (0..6)
            .map(|u| (0..4).map(|m| ((u * 7 + m * 3) % 11) as f64).collect())
            .collect();
        let rows: Vec<&[f64]> = vals.iter().map(|v| v.as_slice()).collect();
        let fit = fit_additive_model(&table(&rows)).unwrap();
        let a = anova_type2(&fit).unwrap();
        assert_eq!(a.term(METHOD).unwrap().df, 3);
        assert_eq!(a.term(SURVEY_UNIT).unwrap().df, 5);
        assert_eq!(a.residual_df, 15);
        let resid_sum: f64 = fit.fit.residuals.iter().sum();
        assert!(resid_sum.abs() < 1e-10);
    }

    #[test]
    fn single_level_factor_rejected() {
        let mut t = DensityTable::default();
        t.push("U0", Method::Naive, 1.0);
        t.push("U1", Method::Naive, 2.0);
        assert!(fit_one_factor(&t).is_err());
    }

    #[test]
    fn non_finite_rejected() {
        let rows = alloc::vec![DensityRow {
            survey_unit: "A".into(),
            method: Method::Rem,
            density: f64::NAN
        }];
        assert!(DensityTable::new(rows).is_err());
    }
}
