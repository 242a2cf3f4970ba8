//! Shipment data model and CSV interchange.
//!
//! A shipment is observed as a duration (days between shipments) and an
//! average power consumption (MTSWU/day) over that window. The consumed
//! energy is their product. Series travel as CSV with the fixed header
//! `t,duration_days,power_mtswu_per_day[,pattern,diverted]`; numbers are
//! printed in Rust's shortest round-trip decimal form so a parse of a
//! serialized series reproduces it bit for bit.

use std::fmt::Write as _;

use thiserror::Error;

/// Errors from constructing or parsing shipment data.
#[derive(Debug, Error, PartialEq)]
pub enum DataError {
    #[error("shipment {t}: {field} must be strictly positive, got {value}")]
    NonPositive {
        t: u32,
        field: &'static str,
        value: f64,
    },
    #[error("shipment {t}: {field} must be finite")]
    NonFinite { t: u32, field: &'static str },
    #[error("shipment indices must be consecutive from 1: expected {expected}, got {got}")]
    NonConsecutiveIndex { expected: u32, got: u32 },
    #[error("label vector length {got} does not match series length {expected}")]
    LabelLengthMismatch { expected: usize, got: usize },
    #[error("pattern id must be >= 1 at shipment {t}")]
    BadPatternId { t: u32 },
    #[error("missing header row")]
    MissingHeader,
    #[error("bad header: expected `t,duration_days,power_mtswu_per_day[,pattern,diverted]`, got `{0}`")]
    BadHeader(String),
    #[error("data row {row}: expected {expected} fields, got {got}")]
    FieldCount {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("data row {row}: invalid {field} `{text}`")]
    BadField {
        row: usize,
        field: &'static str,
        text: String,
    },
    #[error("data row {row}: blank line inside data section")]
    BlankRow { row: usize },
}

/// One observed shipment: 1-based index, duration, and average power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShipmentObservation {
    t: u32,
    duration_days: f64,
    power: f64,
}

impl ShipmentObservation {
    /// Build an observation, enforcing strict positivity of both modalities.
    pub fn new(t: u32, duration_days: f64, power: f64) -> Result<Self, DataError> {
        for (field, value) in [("duration_days", duration_days), ("power", power)] {
            if !value.is_finite() {
                return Err(DataError::NonFinite { t, field });
            }
            if value <= 0.0 {
                return Err(DataError::NonPositive { t, field, value });
            }
        }
        Ok(Self {
            t,
            duration_days,
            power,
        })
    }

    /// 1-based shipment index.
    pub fn t(&self) -> u32 {
        self.t
    }

    /// Shipment duration in days.
    pub fn duration_days(&self) -> f64 {
        self.duration_days
    }

    /// Average power consumption in MTSWU/day.
    pub fn power(&self) -> f64 {
        self.power
    }

    /// Consumed energy in MTSWU: duration times average power.
    pub fn energy(&self) -> f64 {
        self.duration_days * self.power
    }
}

/// An ordered stream of shipments indexed consecutively from 1.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ShipmentSeries {
    observations: Vec<ShipmentObservation>,
}

impl ShipmentSeries {
    pub fn new(observations: Vec<ShipmentObservation>) -> Result<Self, DataError> {
        for (i, obs) in observations.iter().enumerate() {
            let expected = (i + 1) as u32;
            if obs.t != expected {
                return Err(DataError::NonConsecutiveIndex {
                    expected,
                    got: obs.t,
                });
            }
        }
        Ok(Self { observations })
    }

    /// Build a series from raw `(duration, power)` pairs, assigning indices 1..=n.
    pub fn from_values(values: &[(f64, f64)]) -> Result<Self, DataError> {
        let observations = values
            .iter()
            .enumerate()
            .map(|(i, &(d, p))| ShipmentObservation::new((i + 1) as u32, d, p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { observations })
    }

    pub fn observations(&self) -> &[ShipmentObservation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn durations(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.duration_days).collect()
    }

    pub fn powers(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.power).collect()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.energy()).collect()
    }
}

/// A shipment series with optional per-shipment labels.
///
/// `pattern` holds 1-based customer-pattern ids, `diverted` flags shipments
/// that carry a diversion. The change point is not stored: it is defined as
/// the first diverted index, which keeps serialize/parse a lossless pair
/// (the CSV schema has no change-point column).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSeries {
    series: ShipmentSeries,
    pattern: Option<Vec<u32>>,
    diverted: Option<Vec<bool>>,
}

impl LabeledSeries {
    pub fn new(
        series: ShipmentSeries,
        pattern: Option<Vec<u32>>,
        diverted: Option<Vec<bool>>,
    ) -> Result<Self, DataError> {
        if let Some(p) = &pattern {
            if p.len() != series.len() {
                return Err(DataError::LabelLengthMismatch {
                    expected: series.len(),
                    got: p.len(),
                });
            }
            if let Some(i) = p.iter().position(|&id| id == 0) {
                return Err(DataError::BadPatternId {
                    t: (i + 1) as u32,
                });
            }
        }
        if let Some(d) = &diverted {
            if d.len() != series.len() {
                return Err(DataError::LabelLengthMismatch {
                    expected: series.len(),
                    got: d.len(),
                });
            }
        }
        Ok(Self {
            series,
            pattern,
            diverted,
        })
    }

    /// A series with no label columns at all.
    pub fn unlabeled(series: ShipmentSeries) -> Self {
        Self {
            series,
            pattern: None,
            diverted: None,
        }
    }

    pub fn series(&self) -> &ShipmentSeries {
        &self.series
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn pattern(&self) -> Option<&[u32]> {
        self.pattern.as_deref()
    }

    pub fn diverted(&self) -> Option<&[bool]> {
        self.diverted.as_deref()
    }

    /// True when shipment `t` (1-based) is flagged as diverted.
    pub fn is_diverted(&self, t: u32) -> bool {
        self.diverted
            .as_ref()
            .and_then(|d| d.get((t - 1) as usize))
            .copied()
            .unwrap_or(false)
    }

    /// First shipment index flagged diverted, if any.
    pub fn change_point(&self) -> Option<u32> {
        let diverted = self.diverted.as_ref()?;
        diverted.iter().position(|&d| d).map(|i| (i + 1) as u32)
    }
}

const BASE_COLUMNS: [&str; 3] = ["t", "duration_days", "power_mtswu_per_day"];

/// Parse a shipment series from CSV text.
///
/// Required columns: `t,duration_days,power_mtswu_per_day`. Optional label
/// columns `pattern` and `diverted` (in that order) are recognized from the
/// header. Errors name the offending 1-based data row.
pub fn parse_series(text: &str) -> Result<LabeledSeries, DataError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(DataError::MissingHeader)?;
    let columns: Vec<&str> = header.split(',').collect();
    if columns.len() < 3 || columns[..3] != BASE_COLUMNS {
        return Err(DataError::BadHeader(header.to_string()));
    }
    let (has_pattern, has_diverted) = match &columns[3..] {
        [] => (false, false),
        ["pattern"] => (true, false),
        ["diverted"] => (false, true),
        ["pattern", "diverted"] => (true, true),
        _ => return Err(DataError::BadHeader(header.to_string())),
    };
    let n_fields = columns.len();

    let mut observations = Vec::new();
    let mut pattern = has_pattern.then(Vec::new);
    let mut diverted = has_diverted.then(Vec::new);
    let mut row = 0usize;
    let mut pending_blank: Option<usize> = None;

    for line in lines {
        row += 1;
        if line.is_empty() {
            // Allowed only as the trailing newline artifact.
            if pending_blank.is_none() {
                pending_blank = Some(row);
            }
            continue;
        }
        if let Some(blank_row) = pending_blank {
            return Err(DataError::BlankRow { row: blank_row });
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n_fields {
            return Err(DataError::FieldCount {
                row,
                expected: n_fields,
                got: fields.len(),
            });
        }
        let t = parse_u32(fields[0], row, "t")?;
        let expected = observations.len() as u32 + 1;
        if t != expected {
            return Err(DataError::NonConsecutiveIndex { expected, got: t });
        }
        let duration = parse_f64(fields[1], row, "duration_days")?;
        let power = parse_f64(fields[2], row, "power_mtswu_per_day")?;
        let obs = ShipmentObservation::new(t, duration, power)?;
        let mut next = 3;
        if let Some(p) = pattern.as_mut() {
            let id = parse_u32(fields[next], row, "pattern")?;
            if id == 0 {
                return Err(DataError::BadPatternId { t });
            }
            p.push(id);
            next += 1;
        }
        if let Some(d) = diverted.as_mut() {
            d.push(match fields[next] {
                "0" => false,
                "1" => true,
                other => {
                    return Err(DataError::BadField {
                        row,
                        field: "diverted",
                        text: other.to_string(),
                    })
                }
            });
        }
        observations.push(obs);
    }

    let series = ShipmentSeries::new(observations)?;
    LabeledSeries::new(series, pattern, diverted)
}

/// Render a series to CSV text. The inverse of [`parse_series`].
pub fn serialize_series(series: &LabeledSeries) -> String {
    let mut header = BASE_COLUMNS.join(",");
    if series.pattern().is_some() {
        header.push_str(",pattern");
    }
    if series.diverted().is_some() {
        header.push_str(",diverted");
    }
    let mut out = header;
    out.push('\n');
    for (i, obs) in series.series().observations().iter().enumerate() {
        write!(
            out,
            "{},{},{}",
            obs.t(),
            obs.duration_days(),
            obs.power()
        )
        .expect("writing to String cannot fail");
        if let Some(p) = series.pattern() {
            write!(out, ",{}", p[i]).expect("writing to String cannot fail");
        }
        if let Some(d) = series.diverted() {
            write!(out, ",{}", if d[i] { 1 } else { 0 }).expect("writing to String cannot fail");
        }
        out.push('\n');
    }
    out
}

fn parse_u32(text: &str, row: usize, field: &'static str) -> Result<u32, DataError> {
    text.parse().map_err(|_| DataError::BadField {
        row,
        field,
        text: text.to_string(),
    })
}

fn parse_f64(text: &str, row: usize, field: &'static str) -> Result<f64, DataError> {
    let value: f64 = text.parse().map_err(|_| DataError::BadField {
        row,
        field,
        text: text.to_string(),
    })?;
    if !value.is_finite() {
        return Err(DataError::BadField {
            row,
            field,
            text: text.to_string(),
        });
    }
    Ok(value)
}
