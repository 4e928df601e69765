//! CSV schemas for field data and density tables.
//!
//! Dialect: comma separated, UTF-8, mandatory header row, quoted fields
//! allowed, ISO-8601 UTC timestamps. Columns are located by name, so their
//! order does not matter; extra columns are ignored.

use std::collections::HashMap;
use std::io::Read;

use chrono::{DateTime, SecondsFormat, Utc};
use dronesurvey_core::field::{
    validate_encounters, CtDeployment, EncounterSequence, SightingRecord, Timestamp, TransectCount,
    DEFAULT_BURST_SIZE,
};
use dronesurvey_core::stats::{DensityRow, DensityTable};
use dronesurvey_core::{Method, PlanarPoint};

use crate::error::{Error, Result};

pub const SIGHTINGS_HEADER: [&str; 7] = [
    "transect_id",
    "species",
    "count",
    "x_m",
    "y_m",
    "timestamp",
    "observer",
];
pub const DEPLOYMENTS_HEADER: [&str; 8] = [
    "camera_id",
    "x_m",
    "y_m",
    "start",
    "end",
    "detection_radius_m",
    "detection_angle_rad",
    "mount_height_m",
];
pub const SEQUENCES_HEADER: [&str; 4] = ["camera_id", "start", "end", "group_size"];
pub const DENSITIES_HEADER: [&str; 3] = ["survey_unit", "method", "density"];
pub const LAUNCH_POINTS_HEADER: [&str; 2] = ["x_m", "y_m"];
pub const COUNTS_HEADER: [&str; 3] = ["transect_id", "animal_count", "covered_area_km2"];

/// A malformed row, by 1-based line number in the file.
#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

impl std::fmt::Display for RowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// Records that parsed, plus the rows that did not.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub errors: Vec<RowError>,
}

impl<T> Parsed<T> {
    /// All records, or every row error as one validation failure.
    pub fn strict(self) -> Result<Vec<T>> {
        if self.errors.is_empty() {
            Ok(self.records)
        } else {
            Err(Error::Rows(
                self.errors.iter().map(ToString::to_string).collect(),
            ))
        }
    }
}

pub struct Row<'a> {
    record: &'a csv::StringRecord,
    columns: &'a HashMap<String, usize>,
}

impl Row<'_> {
    pub fn str(&self, name: &str) -> &str {
        self.columns
            .get(name)
            .and_then(|&i| self.record.get(i))
            .unwrap_or("")
    }

    pub fn text(&self, name: &str) -> std::result::Result<String, String> {
        match self.str(name) {
            "" => Err(format!("{name} is empty")),
            s => Ok(s.to_string()),
        }
    }

    pub fn parse<T: std::str::FromStr>(&self, name: &str) -> std::result::Result<T, String> {
        let s = self.str(name);
        s.parse().map_err(|_| format!("{name}: cannot parse '{s}'"))
    }

    pub fn finite(&self, name: &str) -> std::result::Result<f64, String> {
        let v: f64 = self.parse(name)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("{name} is not finite"))
        }
    }

    pub fn optional_finite(&self, name: &str) -> std::result::Result<Option<f64>, String> {
        if self.str(name).is_empty() {
            Ok(None)
        } else {
            self.finite(name).map(Some)
        }
    }

    pub fn timestamp(&self, name: &str) -> std::result::Result<Timestamp, String> {
        parse_timestamp(self.str(name)).map_err(|e| format!("{name}: {e}"))
    }
}

pub fn parse_timestamp(s: &str) -> std::result::Result<Timestamp, String> {
    let t = DateTime::parse_from_rfc3339(s)
        .map_err(|e| format!("'{s}' is not an ISO-8601 timestamp with offset ({e})"))?;
    if t.timestamp_subsec_nanos() != 0 {
        return Err(format!("'{s}' has sub-second precision"));
    }
    Ok(Timestamp(t.timestamp()))
}

pub fn format_timestamp(t: Timestamp) -> String {
    DateTime::<Utc>::from_timestamp(t.0, 0)
        .map(|d| d.to_rfc3339_opts(SecondsFormat::Secs, true))
        .unwrap_or_else(|| t.0.to_string())
}

/// Reads a headed CSV table. A missing required column is fatal; a row
/// that `parse_row` rejects is recorded with its line number and skipped.
/// `parse_row` returning `Ok(None)` drops the row silently.
pub fn read_table<T, R: Read>(
    reader: R,
    required: &[&str],
    mut parse_row: impl FnMut(&Row) -> std::result::Result<Option<T>, String>,
) -> Result<Parsed<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::format(format!("cannot read header row: {e}")))?
        .clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(Error::format("missing header row"));
    }
    let columns: HashMap<String, usize> = headers
        .iter()
        .enumerate()
        .map(|(i, h)| (h.trim_start_matches('\u{feff}').to_string(), i))
        .collect();
    let missing: Vec<&str> = required
        .iter()
        .copied()
        .filter(|c| !columns.contains_key(*c))
        .collect();
    if !missing.is_empty() {
        return Err(Error::format(format!(
            "missing required column(s): {}",
            missing.join(", ")
        )));
    }
    let mut out = Parsed {
        records: Vec::new(),
        errors: Vec::new(),
    };
    let mut record = csv::StringRecord::new();
    loop {
        let line = rdr.position().line();
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let line = record.position().map_or(line, |p| p.line());
                if record.iter().all(str::is_empty) {
                    continue;
                }
                let row = Row {
                    record: &record,
                    columns: &columns,
                };
                match parse_row(&row) {
                    Ok(Some(r)) => out.records.push(r),
                    Ok(None) => {}
                    Err(message) => out.errors.push(RowError { line, message }),
                }
            }
            Err(e) => {
                let line = e.position().map_or(line, |p| p.line());
                out.errors.push(RowError {
                    line,
                    message: e.to_string(),
                });
                if !matches!(
                    e.kind(),
                    csv::ErrorKind::UnequalLengths { .. } | csv::ErrorKind::Utf8 { .. }
                ) {
                    break;
                }
            }
        }
    }
    Ok(out)
}

/// Parses `transect_id,species,count,x_m,y_m,timestamp,observer`, keeping
/// only `species_filter` when given.
pub fn parse_sightings<R: Read>(
    reader: R,
    species_filter: Option<&str>,
) -> Result<Parsed<SightingRecord>> {
    read_table(reader, &SIGHTINGS_HEADER, |row| {
        let count: u32 = row.parse("count")?;
        if count == 0 {
            return Err("count must be at least 1".into());
        }
        let rec = SightingRecord {
            transect_id: row.text("transect_id")?,
            species: row.text("species")?,
            count,
            x_m: row.finite("x_m")?,
            y_m: row.finite("y_m")?,
            timestamp: row.timestamp("timestamp")?,
            observer: row.text("observer")?,
        };
        Ok(match species_filter {
            Some(s) if s != rec.species => None,
            _ => Some(rec),
        })
    })
}

pub fn parse_deployments<R: Read>(reader: R) -> Result<Parsed<CtDeployment>> {
    read_table(reader, &DEPLOYMENTS_HEADER, |row| {
        let d = CtDeployment {
            camera_id: row.text("camera_id")?,
            position: PlanarPoint::new(row.finite("x_m")?, row.finite("y_m")?),
            start: row.timestamp("start")?,
            end: row.timestamp("end")?,
            detection_radius_m: row.finite("detection_radius_m")?,
            detection_angle_rad: row.finite("detection_angle_rad")?,
            mount_height_m: row.optional_finite("mount_height_m")?,
            burst_size: match row.str("burst_size") {
                "" => DEFAULT_BURST_SIZE,
                _ => row.parse("burst_size")?,
            },
        };
        d.validate().map_err(|e| e.to_string())?;
        Ok(Some(d))
    })
}

pub fn parse_sequences<R: Read>(reader: R) -> Result<Parsed<EncounterSequence>> {
    read_table(reader, &SEQUENCES_HEADER, |row| {
        let s = EncounterSequence {
            camera_id: row.text("camera_id")?,
            start: row.timestamp("start")?,
            end: row.timestamp("end")?,
            group_size: row.parse("group_size")?,
        };
        s.validate().map_err(|e| e.to_string())?;
        Ok(Some(s))
    })
}

/// Parses both camera-trap files strictly and checks that every sequence
/// falls inside an active deployment of its camera.
pub fn parse_encounters<R1: Read, R2: Read>(
    deployments: R1,
    sequences: R2,
) -> Result<(Vec<CtDeployment>, Vec<EncounterSequence>)> {
    let deployments = parse_deployments(deployments)?.strict()?;
    let sequences = parse_sequences(sequences)?.strict()?;
    let mut seen = std::collections::HashSet::new();
    let dups: Vec<String> = deployments
        .iter()
        .filter(|d| !seen.insert(d.camera_id.as_str()))
        .map(|d| format!("camera {} is listed twice", d.camera_id))
        .collect();
    if !dups.is_empty() {
        return Err(Error::Rows(dups));
    }
    validate_encounters(&deployments, &sequences)?;
    Ok((deployments, sequences))
}

pub fn parse_density_table<R: Read>(reader: R) -> Result<DensityTable> {
    let rows = read_table(reader, &DENSITIES_HEADER, |row| {
        let method = Method::parse(row.str("method"))
            .ok_or_else(|| format!("unknown method '{}'", row.str("method")))?;
        Ok(Some(DensityRow {
            survey_unit: row.text("survey_unit")?,
            method,
            density: row.finite("density")?,
        }))
    })?
    .strict()?;
    Ok(DensityTable::new(rows)?)
}

pub fn parse_launch_points<R: Read>(reader: R) -> Result<Vec<PlanarPoint>> {
    read_table(reader, &LAUNCH_POINTS_HEADER, |row| {
        Ok(Some(PlanarPoint::new(
            row.finite("x_m")?,
            row.finite("y_m")?,
        )))
    })?
    .strict()
}

pub fn parse_counts<R: Read>(reader: R) -> Result<Vec<TransectCount>> {
    read_table(reader, &COUNTS_HEADER, |row| {
        let area = row.finite("covered_area_km2")?;
        if area <= 0.0 {
            return Err("covered_area_km2 must be positive".into());
        }
        Ok(Some(TransectCount::new(
            row.text("transect_id")?,
            row.parse("animal_count")?,
            area,
        )))
    })?
    .strict()
}

fn write_rows<I>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

/// Shortest decimal that reads back to the same value.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn write_sightings(records: &[SightingRecord]) -> String {
    write_rows(
        &SIGHTINGS_HEADER,
        records.iter().map(|r| {
            vec![
                r.transect_id.clone(),
                r.species.clone(),
                r.count.to_string(),
                num(r.x_m),
                num(r.y_m),
                format_timestamp(r.timestamp),
                r.observer.clone(),
            ]
        }),
    )
}

pub fn write_deployments(deployments: &[CtDeployment]) -> String {
    write_rows(
        &DEPLOYMENTS_HEADER,
        deployments.iter().map(|d| {
            vec![
                d.camera_id.clone(),
                num(d.position.x),
                num(d.position.y),
                format_timestamp(d.start),
                format_timestamp(d.end),
                num(d.detection_radius_m),
                num(d.detection_angle_rad),
                d.mount_height_m.map(num).unwrap_or_default(),
            ]
        }),
    )
}

pub fn write_sequences(sequences: &[EncounterSequence]) -> String {
    write_rows(
        &SEQUENCES_HEADER,
        sequences.iter().map(|s| {
            vec![
                s.camera_id.clone(),
                format_timestamp(s.start),
                format_timestamp(s.end),
                s.group_size.to_string(),
            ]
        }),
    )
}

pub fn write_density_table(table: &DensityTable) -> String {
    write_rows(
        &DENSITIES_HEADER,
        table
            .rows
            .iter()
            .map(|r| vec![r.survey_unit.clone(), r.method.to_string(), num(r.density)]),
    )
}

pub fn write_counts(counts: &[TransectCount]) -> String {
    write_rows(
        &COUNTS_HEADER,
        counts.iter().map(|c| {
            vec![
                c.transect_id.clone(),
                c.animal_count.to_string(),
                num(c.covered_area_km2),
            ]
        }),
    )
}
