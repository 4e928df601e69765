//! Estimate files and human-readable tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use dronesurvey_core::rem::RemParams;
use dronesurvey_core::stats::{AnovaResult, TukeyResult};
use dronesurvey_core::{DensityEstimate, Method};
use serde_json::Value;

use crate::config::KvConfig;
use crate::csv_io::{num, read_table};
use crate::error::{Error, Result};

pub const ESTIMATES_HEADER: [&str; 8] = [
    "survey_unit",
    "method",
    "density_per_km2",
    "se",
    "ci_low",
    "ci_high",
    "n_units",
    "diagnostics",
];

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// One CSV row per estimate; diagnostics are folded into `key=value;...`.
pub fn estimates_to_csv(estimates: &[DensityEstimate]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(ESTIMATES_HEADER).expect("in-memory write");
    for e in estimates {
        let diag: Vec<String> = e
            .diagnostics
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        w.write_record([
            e.survey_unit.clone().unwrap_or_default(),
            e.method.to_string(),
            num(e.density_per_km2),
            opt(e.se),
            opt(e.ci_low),
            opt(e.ci_high),
            e.n_units.to_string(),
            diag.join(";"),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

pub fn estimates_to_json(estimates: &[DensityEstimate]) -> String {
    serde_json::to_string_pretty(estimates).expect("estimates serialize") + "\n"
}

pub fn parse_estimates_csv(text: &str) -> Result<Vec<DensityEstimate>> {
    read_table(text.as_bytes(), &ESTIMATES_HEADER[1..3], |row| {
        let method = Method::parse(row.str("method"))
            .ok_or_else(|| format!("unknown method '{}'", row.str("method")))?;
        let density = row.finite("density_per_km2")?;
        if density < 0.0 {
            return Err("density_per_km2 is negative".into());
        }
        let mut e = DensityEstimate::point(method, density, 0);
        e.se = row.optional_finite("se")?;
        e.ci_low = row.optional_finite("ci_low")?;
        e.ci_high = row.optional_finite("ci_high")?;
        if !row.str("n_units").is_empty() {
            e.n_units = row.parse("n_units")?;
        }
        if !row.str("survey_unit").is_empty() {
            e.survey_unit = Some(row.str("survey_unit").to_string());
        }
        for kv in row.str("diagnostics").split(';').filter(|s| !s.is_empty()) {
            let (k, v) = kv.split_once('=').unwrap_or((kv, ""));
            e.diagnostics.insert(k.to_string(), v.to_string());
        }
        Ok(Some(e))
    })?
    .strict()
}

pub fn parse_estimates_json(text: &str) -> Result<Vec<DensityEstimate>> {
    let v: Value =
        serde_json::from_str(text).map_err(|e| Error::format(format!("invalid JSON: {e}")))?;
    let items = match v {
        Value::Array(items) => items,
        obj @ Value::Object(_) => vec![obj],
        _ => {
            return Err(Error::format(
                "expected an estimate object or an array of them",
            ))
        }
    };
    items
        .into_iter()
        .enumerate()
        .map(|(k, item)| {
            serde_json::from_value::<DensityEstimate>(item)
                .map_err(|e| Error::format(format!("estimate {}: {e}", k + 1)))
        })
        .collect()
}

/// Reads an estimate file, choosing the format by extension (`.json` or
/// anything else as CSV).
pub fn read_estimates(path: &Path, text: &str) -> Result<Vec<DensityEstimate>> {
    let estimates = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("json") => parse_estimates_json(text)?,
        _ => parse_estimates_csv(text)?,
    };
    let bad: Vec<String> = estimates
        .iter()
        .enumerate()
        .filter(|(_, e)| {
            !(e.density_per_km2.is_finite() && e.density_per_km2 >= 0.0)
                || matches!((e.ci_low, e.ci_high), (Some(lo), Some(hi)) if !(lo <= hi))
        })
        .map(|(k, _)| format!("{}: estimate {} is malformed", path.display(), k + 1))
        .collect();
    if bad.is_empty() {
        Ok(estimates)
    } else {
        Err(Error::Rows(bad))
    }
}

/// REM parameters from a flat key-value file. All four keys are required;
/// `variance_inflation` is optional.
pub fn parse_rem_params(text: &str, source: &str) -> Result<(RemParams, f64)> {
    let c = KvConfig::parse(text, source)?;
    let params = RemParams {
        day_range_km_per_day: c.require("day_range_km_per_day")?,
        detection_radius_km: c.require("detection_radius_km")?,
        detection_angle_rad: c.require("detection_angle_rad")?,
        use_group_size: c.require_bool("use_group_size")?,
    };
    let vif = c.get_or("variance_inflation", 1.0)?;
    c.reject_unused()?;
    params.validate()?;
    Ok((params, vif))
}

pub fn rem_params_text(p: &RemParams) -> String {
    format!(
        "day_range_km_per_day = {}\ndetection_radius_km = {}\ndetection_angle_rad = {}\nuse_group_size = {}\n",
        p.day_range_km_per_day, p.detection_radius_km, p.detection_angle_rad, p.use_group_size
    )
}

fn cell(x: Option<f64>, prec: usize) -> String {
    x.map(|v| format!("{v:.prec$}"))
        .unwrap_or_else(|| "-".into())
}

pub fn estimates_table(estimates: &[DensityEstimate]) -> String {
    let mut s = format!(
        "{:<12} {:<10} {:>10} {:>9} {:>9} {:>9} {:>7}\n",
        "unit", "method", "density", "se", "ci_low", "ci_high", "n"
    );
    for e in estimates {
        let _ = writeln!(
            s,
            "{:<12} {:<10} {:>10.3} {:>9} {:>9} {:>9} {:>7}",
            e.survey_unit.as_deref().unwrap_or("-"),
            e.method.as_str(),
            e.density_per_km2,
            cell(e.se, 3),
            cell(e.ci_low, 3),
            cell(e.ci_high, 3),
            e.n_units
        );
    }
    s
}

pub fn anova_table(a: &AnovaResult) -> String {
    let mut s = format!(
        "{:<12} {:>12} {:>4} {:>12} {:>9} {:>10}\n",
        "term", "sum_sq", "df", "mean_sq", "F", "p"
    );
    for t in &a.terms {
        let _ = writeln!(
            s,
            "{:<12} {:>12.4} {:>4} {:>12.4} {:>9.4} {:>10.4e}",
            t.name, t.ss, t.df, t.ms, t.f, t.p
        );
    }
    let _ = writeln!(
        s,
        "{:<12} {:>12.4} {:>4} {:>12.4}",
        "residual", a.residual_ss, a.residual_df, a.residual_ms
    );
    s
}

pub fn tukey_table(t: &TukeyResult) -> String {
    let mut s = format!(
        "Tukey HSD on {} ({}% family-wise), residual df {}, q_crit {:.4}\n",
        t.factor,
        t.confidence * 100.0,
        t.residual_df,
        t.critical_q
    );
    let _ = writeln!(
        s,
        "{:<10} {:<10} {:>10} {:>9} {:>10} {:>10} {:>10}",
        "a", "b", "diff", "q", "p_adj", "ci_low", "ci_high"
    );
    for p in &t.pairs {
        let _ = writeln!(
            s,
            "{:<10} {:<10} {:>10.4} {:>9.4} {:>10.4} {:>10.4} {:>10.4}",
            p.level_a, p.level_b, p.mean_diff, p.q_statistic, p.p_adjusted, p.ci_low, p.ci_high
        );
    }
    s
}

pub fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

/// Diagnostics map with stable ordering for printing.
pub fn diagnostics_lines(d: &BTreeMap<String, String>) -> String {
    d.iter().map(|(k, v)| format!("  {k}: {v}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<DensityEstimate> {
        let mut a = DensityEstimate::point(Method::Naive, 27.631578947368418, 40);
        a.survey_unit = Some("A_Oct".into());
        let mut b = DensityEstimate::point(Method::Bootstrap, 28.1, 40);
        b.se = Some(4.2);
        b.ci_low = Some(20.5);
        b.ci_high = Some(36.75);
        b.note("iterations", 1000);
        b.note("statistic", "ratio_of_sums");
        vec![a, b]
    }

    #[test]
    fn csv_round_trip() {
        let e = sample();
        assert_eq!(parse_estimates_csv(&estimates_to_csv(&e)).unwrap(), e);
    }

    #[test]
    fn json_round_trip() {
        let e = sample();
        assert_eq!(parse_estimates_json(&estimates_to_json(&e)).unwrap(), e);
        let one = serde_json::to_string(&e[1]).unwrap();
        assert_eq!(parse_estimates_json(&one).unwrap(), vec![e[1].clone()]);
    }

    #[test]
    fn json_fields() {
        let v: Value = serde_json::from_str(&estimates_to_json(&sample()[1..])).unwrap();
        let o = v[0].as_object().unwrap();
        for k in [
            "method",
            "density_per_km2",
            "se",
            "ci_low",
            "ci_high",
            "n_units",
            "diagnostics",
        ] {
            assert!(o.contains_key(k), "{k}");
        }
    }

    #[test]
    fn rem_params_need_every_key() {
        let full = "day_range_km_per_day = 1\ndetection_radius_km = 0.01\ndetection_angle_rad = 0.7\nuse_group_size = false\n";
        let (p, vif) = parse_rem_params(full, "p").unwrap();
        assert_eq!((p.detection_radius_km, vif), (0.01, 1.0));
        let e =
            parse_rem_params(&full.replace("detection_radius_km = 0.01\n", ""), "p").unwrap_err();
        assert!(e.to_string().contains("detection_radius_km"));
        assert_eq!(parse_rem_params(&rem_params_text(&p), "p").unwrap().0, p);
    }
}
