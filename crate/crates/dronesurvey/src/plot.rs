//! Grouped bar chart of densities by survey unit and method.
//!
//! The CSV and SVG outputs are both rendered from one [`PlotTable`].

use std::fmt::Write as _;

use dronesurvey_core::{DensityEstimate, Method};

use crate::csv_io::num;

#[derive(Debug, Clone, PartialEq)]
pub struct PlotRow {
    pub survey_unit: String,
    pub method: Method,
    pub density: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlotTable {
    /// Units in display order, each holding its bars in method order.
    pub rows: Vec<PlotRow>,
}

impl PlotTable {
    /// Estimates without a survey unit get `fallback_unit`. Units keep the
    /// order in which they first appear; bars within a unit follow the
    /// canonical method order (REM first, then the drone methods).
    pub fn from_estimates<'a>(
        estimates: impl IntoIterator<Item = (&'a DensityEstimate, &'a str)>,
    ) -> PlotTable {
        let mut units: Vec<String> = Vec::new();
        let mut rows = Vec::new();
        for (e, fallback) in estimates {
            let unit = e
                .survey_unit
                .clone()
                .unwrap_or_else(|| fallback.to_string());
            if !units.contains(&unit) {
                units.push(unit.clone());
            }
            rows.push(PlotRow {
                survey_unit: unit,
                method: e.method,
                density: e.density_per_km2,
                ci_low: e.ci_low,
                ci_high: e.ci_high,
            });
        }
        rows.sort_by_key(|r| (units.iter().position(|u| *u == r.survey_unit), r.method));
        PlotTable { rows }
    }

    pub fn units(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.survey_unit.as_str()) {
                out.push(&r.survey_unit);
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(["survey_unit", "method", "density", "ci_low", "ci_high"])
            .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.survey_unit.clone(),
                r.method.to_string(),
                num(r.density),
                r.ci_low.map(num).unwrap_or_default(),
                r.ci_high.map(num).unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8")
    }

    pub fn to_svg(&self) -> String {
        svg(self)
    }
}

fn colour(m: Method) -> &'static str {
    match m {
        Method::Rem => "#7f7f7f",
        Method::Naive => "#c7e9c0",
        Method::Bootstrap => "#74c476",
        Method::Zinb => "#238b45",
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// A "nice" axis maximum and tick step covering `max`.
fn axis(max: f64) -> (f64, f64) {
    if !(max > 0.0) {
        return (1.0, 0.2);
    }
    let raw = max / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .into_iter()
        .map(|f| f * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    ((max / step).ceil() * step, step)
}

fn svg(t: &PlotTable) -> String {
    let units = t.units();
    let per_unit: Vec<usize> = units
        .iter()
        .map(|u| t.rows.iter().filter(|r| r.survey_unit == *u).count())
        .collect();
    let bar_w = 18.0;
    let group_gap = 24.0;
    let (left, right, top, bottom) = (60.0, 130.0, 20.0, 50.0);
    let plot_h = 300.0;
    let plot_w: f64 = per_unit
        .iter()
        .map(|&n| n as f64 * bar_w + group_gap)
        .sum::<f64>()
        + group_gap;
    let width = left + plot_w + right;
    let height = top + plot_h + bottom;
    let top_value = t
        .rows
        .iter()
        .map(|r| r.ci_high.unwrap_or(r.density).max(r.density))
        .fold(0.0, f64::max);
    let (ymax, step) = axis(top_value);
    let y = |v: f64| top + plot_h * (1.0 - v / ymax);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    let mut tick = 0.0;
    while tick <= ymax + 1e-9 * ymax {
        let yy = y(tick);
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#e0e0e0"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            left + plot_w,
            left - 6.0,
            yy + 4.0,
            num((tick * 1e6).round() / 1e6)
        );
        tick += step;
    }
    let _ = writeln!(
        s,
        r##"<text transform="translate(16,{:.2}) rotate(-90)" text-anchor="middle">density (individuals/km²)</text>"##,
        top + plot_h / 2.0
    );
    let mut x = left + group_gap;
    let mut k = 0;
    for (u, &n) in units.iter().zip(&per_unit) {
        let _ = writeln!(s, r#"<g class="unit" data-unit="{}">"#, escape(u));
        for r in &t.rows[k..k + n] {
            let (y0, y1) = (y(r.density), y(0.0));
            let _ = write!(
                s,
                r##"<rect class="bar" x="{x:.2}" y="{y0:.2}" width="{bar_w}" height="{:.2}" fill="{}" stroke="#333333" stroke-width="0.5" data-method="{}" data-density="{}""##,
                y1 - y0,
                colour(r.method),
                r.method,
                num(r.density)
            );
            if let (Some(lo), Some(hi)) = (r.ci_low, r.ci_high) {
                let _ = write!(
                    s,
                    r#" data-ci-low="{}" data-ci-high="{}""#,
                    num(lo),
                    num(hi)
                );
            }
            let _ = writeln!(
                s,
                "><title>{} {}: {}</title></rect>",
                escape(u),
                r.method,
                num(r.density)
            );
            if let (Some(lo), Some(hi)) = (r.ci_low, r.ci_high) {
                let cx = x + bar_w / 2.0;
                let _ = writeln!(
                    s,
                    r##"<path class="whisker" d="M{cx:.2} {:.2}V{:.2}M{:.2} {:.2}H{:.2}M{:.2} {:.2}H{:.2}" stroke="#000000" fill="none"/>"##,
                    y(lo),
                    y(hi),
                    cx - 4.0,
                    y(lo),
                    cx + 4.0,
                    cx - 4.0,
                    y(hi),
                    cx + 4.0
                );
            }
            x += bar_w;
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text></g>"#,
            x - n as f64 * bar_w / 2.0,
            top + plot_h + 18.0,
            escape(u)
        );
        x += group_gap;
        k += n;
    }
    let _ = writeln!(
        s,
        r##"<line x1="{left}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#000000"/><line x1="{left}" y1="{top}" x2="{left}" y2="{:.2}" stroke="#000000"/>"##,
        y(0.0),
        left + plot_w,
        y(0.0),
        y(0.0)
    );
    let present: Vec<Method> = Method::ALL
        .into_iter()
        .filter(|m| t.rows.iter().any(|r| r.method == *m))
        .collect();
    for (i, m) in present.iter().enumerate() {
        let ly = top + 10.0 + 18.0 * i as f64;
        let lx = left + plot_w + 16.0;
        let _ = writeln!(
            s,
            r##"<rect x="{lx:.2}" y="{ly:.2}" width="12" height="12" fill="{}" stroke="#333333" stroke-width="0.5"/><text x="{:.2}" y="{:.2}">{m}</text>"##,
            colour(*m),
            lx + 18.0,
            ly + 10.0
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(unit: &str, m: Method, d: f64, ci: Option<(f64, f64)>) -> DensityEstimate {
        let mut e = DensityEstimate::point(m, d, 40);
        e.survey_unit = Some(unit.into());
        if let Some((lo, hi)) = ci {
            e.ci_low = Some(lo);
            e.ci_high = Some(hi);
        }
        e
    }

    #[test]
    fn single_bar_without_whiskers() {
        let e = [est("A_Oct", Method::Naive, 27.6, None)];
        let t = PlotTable::from_estimates(e.iter().map(|e| (e, "x")));
        let svg = t.to_svg();
        assert_eq!(svg.matches(r#"class="bar""#).count(), 1);
        assert_eq!(svg.matches("whisker").count(), 0);
    }

    #[test]
    fn grouping_and_order() {
        let e = [
            est("B", Method::Zinb, 3.0, Some((1.0, 5.0))),
            est("A", Method::Naive, 1.0, None),
            est("B", Method::Rem, 2.0, None),
        ];
        let t = PlotTable::from_estimates(e.iter().map(|e| (e, "x")));
        assert_eq!(t.units(), vec!["B", "A"]);
        assert_eq!(t.rows[0].method, Method::Rem);
        let svg = t.to_svg();
        assert_eq!(svg.matches(r#"class="unit""#).count(), 2);
        assert_eq!(svg.matches(r#"class="whisker""#).count(), 1);
    }

    #[test]
    fn axis_is_nice() {
        assert_eq!(axis(64.3), (80.0, 20.0));
        assert_eq!(axis(0.9), (1.0, 0.2));
    }
}
