//! Region input and design output as GeoJSON in a planar, metric frame.

use dronesurvey_core::field::TransectCatalog;
use dronesurvey_core::planner::{coverage, StopRule, SurveyDesign};
use dronesurvey_core::{PlanarPoint, Polygon, SurveyRegion};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

fn ring(v: &Value) -> Result<Vec<PlanarPoint>> {
    let pts = v
        .as_array()
        .ok_or_else(|| Error::format("polygon ring is not an array"))?;
    pts.iter()
        .map(|p| match p.as_array().map(Vec::as_slice) {
            Some([x, y, ..]) => match (x.as_f64(), y.as_f64()) {
                (Some(x), Some(y)) => Ok(PlanarPoint::new(x, y)),
                _ => Err(Error::format("coordinate is not numeric")),
            },
            _ => Err(Error::format("position needs two coordinates")),
        })
        .collect()
}

fn polygon_rings(geometry: &Value) -> Result<Vec<Vec<PlanarPoint>>> {
    let kind = geometry.get("type").and_then(Value::as_str).unwrap_or("");
    let coords = geometry
        .get("coordinates")
        .ok_or_else(|| Error::format("geometry has no coordinates"))?;
    let rings = match kind {
        "Polygon" => coords,
        "MultiPolygon" => match coords.as_array().map(Vec::as_slice) {
            Some([single]) => single,
            Some(parts) => {
                return Err(Error::format(format!(
                    "MultiPolygon with {} parts; a survey region must be one polygon",
                    parts.len()
                )))
            }
            None => return Err(Error::format("MultiPolygon coordinates are not an array")),
        },
        other => {
            return Err(Error::format(format!(
                "expected a Polygon or MultiPolygon geometry, found '{other}'"
            )))
        }
    };
    rings
        .as_array()
        .ok_or_else(|| Error::format("polygon coordinates are not an array"))?
        .iter()
        .map(ring)
        .collect()
}

/// Reads a survey region from a GeoJSON Feature or a FeatureCollection
/// holding exactly one polygon feature. The feature (or the collection)
/// must carry a `crs_note` property describing the projected frame.
pub fn parse_region(text: &str) -> Result<SurveyRegion> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| Error::format(format!("invalid GeoJSON: {e}")))?;
    let kind = doc.get("type").and_then(Value::as_str).unwrap_or("");
    let (feature, outer_props) = match kind {
        "Feature" => (&doc, None),
        "FeatureCollection" => {
            let features = doc
                .get("features")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::format("FeatureCollection has no features array"))?;
            match features.as_slice() {
                [f] => (f, doc.get("properties")),
                _ => {
                    return Err(Error::format(format!(
                        "expected exactly one region feature, found {}",
                        features.len()
                    )))
                }
            }
        }
        "Polygon" | "MultiPolygon" => {
            return Err(Error::format(
                "a bare geometry has no properties; wrap it in a Feature with a crs_note",
            ))
        }
        other => return Err(Error::format(format!("unsupported GeoJSON type '{other}'"))),
    };
    let has_note = |p: Option<&Value>| {
        p.and_then(|p| p.get("crs_note"))
            .and_then(Value::as_str)
            .is_some_and(|s| !s.trim().is_empty())
    };
    if !has_note(feature.get("properties")) && !has_note(outer_props) {
        return Err(Error::format(
            "region is missing the required crs_note property",
        ));
    }
    let geometry = feature
        .get("geometry")
        .ok_or_else(|| Error::format("feature has no geometry"))?;
    let rings = polygon_rings(geometry)?;
    if rings.is_empty() {
        return Err(Error::format("polygon has no rings"));
    }
    if rings
        .iter()
        .flatten()
        .all(|p| p.x.abs() <= 180.0 && p.y.abs() <= 90.0)
    {
        return Err(Error::ProjectionRequired);
    }
    let mut polys = rings.into_iter().map(Polygon::new);
    let boundary = polys.next().expect("non-empty")?;
    let holes = polys.collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(SurveyRegion::new(boundary, holes)?)
}

pub fn region_to_geojson(region: &SurveyRegion, crs_note: &str) -> Value {
    let close = |p: &Polygon| {
        let mut v: Vec<[f64; 2]> = p.vertices().iter().map(|q| [q.x, q.y]).collect();
        v.push(v[0]);
        v
    };
    let mut rings = vec![close(region.boundary())];
    rings.extend(region.holes().iter().map(close));
    json!({
        "type": "Feature",
        "properties": { "crs_note": crs_note },
        "geometry": { "type": "Polygon", "coordinates": rings },
    })
}

/// Sidecar summary written next to the design GeoJSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSummary {
    pub seed: u64,
    pub region_area_km2: f64,
    pub grid_spacing_m: f64,
    pub swath_width_m: f64,
    pub altitude_agl_m: f64,
    pub max_transects: usize,
    pub target_coverage_fraction: Option<f64>,
    pub flights_per_launch: Option<usize>,
    pub target_reached: bool,
    pub n_flights: usize,
    pub n_transects: usize,
    pub covered_km2: f64,
    pub covered_fraction: f64,
    pub per_direction_counts: dronesurvey_core::planner::DirectionCounts,
    pub unmapped_launch_points: Vec<usize>,
    pub warnings: Vec<String>,
}

impl DesignSummary {
    pub fn new(design: &SurveyDesign) -> Self {
        let c = coverage(design);
        let (target, rounds) = match design.stop {
            StopRule::TargetCoverage(f) => (Some(f), None),
            StopRule::FlightsPerLaunch(n) => (None, Some(n)),
        };
        Self {
            seed: design.seed,
            region_area_km2: design.region.area_km2(),
            grid_spacing_m: design.grid.spacing_m,
            swath_width_m: design.swath_width_m,
            altitude_agl_m: design.altitude_agl_m,
            max_transects: design.max_transects,
            target_coverage_fraction: target,
            flights_per_launch: rounds,
            target_reached: design.target_reached,
            n_flights: design.flights.len(),
            n_transects: c.n_transects,
            covered_km2: c.covered_km2,
            covered_fraction: c.covered_fraction,
            per_direction_counts: c.per_direction_counts,
            unmapped_launch_points: design.unmapped_launch_points.clone(),
            warnings: design.warnings.clone(),
        }
    }
}

/// FeatureCollection with one LineString per transect, in flight order.
pub fn design_to_geojson(design: &SurveyDesign) -> Value {
    let features: Vec<Value> = design
        .transects()
        .map(|t| {
            json!({
                "type": "Feature",
                "properties": {
                    "transect_id": t.id,
                    "flight_id": t.flight_id,
                    "order_in_flight": t.order_in_flight,
                    "heading": t.heading,
                    "length_m": t.length_m,
                    "swath_width_m": t.swath_width_m,
                    "covered_area_km2": t.covered_area_km2,
                },
                "geometry": {
                    "type": "LineString",
                    "coordinates": [[t.start.x, t.start.y], [t.end.x, t.end.y]],
                },
            })
        })
        .collect();
    let mut doc = Map::new();
    doc.insert("type".into(), "FeatureCollection".into());
    doc.insert(
        "properties".into(),
        json!({
            "seed": design.seed,
            "grid_origin_m": [design.grid.origin.x, design.grid.origin.y],
            "grid_spacing_m": design.grid.spacing_m,
            "swath_width_m": design.swath_width_m,
            "altitude_agl_m": design.altitude_agl_m,
        }),
    );
    doc.insert("features".into(), Value::Array(features));
    Value::Object(doc)
}

/// Reads the transect ids and covered areas back from a design GeoJSON.
pub fn parse_design_catalog(text: &str) -> Result<TransectCatalog> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| Error::format(format!("invalid GeoJSON: {e}")))?;
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::format("design is not a FeatureCollection"))?;
    let mut out = Vec::with_capacity(features.len());
    let mut problems = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (k, f) in features.iter().enumerate() {
        let props = f.get("properties");
        let id = props
            .and_then(|p| p.get("transect_id"))
            .and_then(Value::as_str);
        let area = props
            .and_then(|p| p.get("covered_area_km2"))
            .and_then(Value::as_f64);
        match (id, area) {
            (Some(id), Some(a)) if a > 0.0 && a.is_finite() => {
                if !seen.insert(id.to_string()) {
                    problems.push(format!("feature {}: duplicate transect_id {id}", k + 1));
                }
                out.push((id.to_string(), a));
            }
            (Some(id), Some(_)) => problems.push(format!(
                "feature {}: transect {id} has non-positive area",
                k + 1
            )),
            _ => problems.push(format!(
                "feature {}: needs transect_id and covered_area_km2 properties",
                k + 1
            )),
        }
    }
    if problems.is_empty() {
        Ok(TransectCatalog(out))
    } else {
        Err(Error::Rows(problems))
    }
}
