//! Distribution of the studentized range `Q = (max Zᵢ − min Zᵢ) / S` for
//! `k` standard normals and an independent `S = √(χ²_ν / ν)`.

use crate::error::{Error, Result};
use crate::math::{exp, ln, ln_gamma, powf, sqrt, LN_2};
use crate::quadrature::{integrate, QuadOptions};
use crate::special::{normal_interval, normal_pdf};

const Z_LIMIT: f64 = 8.5;
/// Above this many degrees of freedom `S` is treated as exactly 1.
const DF_INFINITE: f64 = 1e6;

fn inner_opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-11,
        max_intervals: 400,
    }
}

/// `P(range of k standard normals ≤ w) = k ∫ φ(z) [Φ(z) − Φ(z − w)]^{k−1} dz`.
fn range_cdf(w: f64, k: usize) -> Result<f64> {
    if w <= 0.0 {
        return Ok(0.0);
    }
    let v = integrate(
        |z| normal_pdf(z) * powf(normal_interval(z - w, z), (k - 1) as f64),
        -Z_LIMIT,
        Z_LIMIT,
        inner_opts(),
    )?;
    Ok((k as f64 * v).clamp(0.0, 1.0))
}

/// Log density of `S = √(χ²_ν / ν)`.
fn ln_scale_density(s: f64, nu: f64) -> f64 {
    0.5 * nu * ln(nu) - ln_gamma(0.5 * nu) - (0.5 * nu - 1.0) * LN_2 + (nu - 1.0) * ln(s)
        - 0.5 * nu * s * s
}

/// `P(Q ≤ q)` for `k ≥ 2` groups and `df ≥ 1` residual degrees of freedom.
pub fn studentized_range_cdf(q: f64, k: usize, df: f64) -> Result<f64> {
    if k < 2 {
        return Err(Error::config("studentized range needs at least two groups"));
    }
    if !(df >= 1.0) {
        return Err(Error::config(
            "studentized range needs at least one degree of freedom",
        ));
    }
    if q.is_nan() {
        return Err(Error::Numeric("q is NaN".into()));
    }
    if q <= 0.0 {
        return Ok(0.0);
    }
    if q.is_infinite() {
        return Ok(1.0);
    }
    if df > DF_INFINITE {
        return range_cdf(q, k);
    }
    let sd = 1.0 / sqrt(2.0 * df);
    let lo = (1.0 - 14.0 * sd).max(0.0);
    let hi = 1.0 + 14.0 * sd + if df < 4.0 { 8.0 } else { 0.0 };
    let mut failure = None;
    let v = integrate(
        |s| {
            if s <= 0.0 {
                return 0.0;
            }
            let dens = exp(ln_scale_density(s, df));
            if dens < 1e-300 {
                return 0.0;
            }
            match range_cdf(q * s, k) {
                Ok(w) => w * dens,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        lo,
        hi,
        QuadOptions {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_intervals: 300,
        },
    )
    .map_err(|e| {
        Error::Numeric(alloc::format!(
            "studentized range (q={q}, k={k}, df={df}): {e}"
        ))
    })?;
    if let Some(e) = failure {
        return Err(Error::Numeric(alloc::format!(
            "studentized range inner integral (q={q}, k={k}, df={df}): {e}"
        )));
    }
    Ok(v.clamp(0.0, 1.0))
}

/// Inverse of [`studentized_range_cdf`] by bisection.
pub fn studentized_range_quantile(p: f64, k: usize, df: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::config("probability must lie in (0, 1)"));
    }
    let mut lo = 0.0;
    let mut hi = 4.0;
    while studentized_range_cdf(hi, k, df)? < p {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Numeric("studentized range quantile diverged".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if studentized_range_cdf(mid, k, df)? < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-9 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::SQRT_2;
    use crate::special::student_t_cdf;

    #[test]
    fn zero_and_infinity() {
        assert_eq!(studentized_range_cdf(0.0, 3, 10.0).unwrap(), 0.0);
        assert_eq!(studentized_range_cdf(f64::INFINITY, 3, 10.0).unwrap(), 1.0);
    }

    #[test]
    fn two_groups_match_t() {
        for &df in &[1.0, 2.0, 5.0, 12.0, 15.0, 60.0] {
            for &q in &[0.3, 1.0, 2.5, 3.77, 6.0] {
                let t = 2.0 * student_t_cdf(q / SQRT_2, df) - 1.0;
                let p = studentized_range_cdf(q, 2, df).unwrap();
                assert!((p - t).abs() < 1e-6, "df={df} q={q}: {p} vs {t}");
            }
        }
    }

    #[test]
    fn infinite_df_two_groups_is_normal() {
        let p = studentized_range_cdf(2.0, 2, 1e9).unwrap();
        let exact = normal_interval(-2.0 / SQRT_2, 2.0 / SQRT_2);
        assert!((p - exact).abs() < 1e-9);
    }

    #[test]
    fn monotone_in_q() {
        let mut last = 0.0;
        for i in 1..40 {
            let p = studentized_range_cdf(i as f64 * 0.2, 4, 15.0).unwrap();
            assert!(p >= last - 1e-12);
            last = p;
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        let q = studentized_range_quantile(0.95, 3, 12.0).unwrap();
        let p = studentized_range_cdf(q, 3, 12.0).unwrap();
        assert!((p - 0.95).abs() < 1e-8);
    }
}
