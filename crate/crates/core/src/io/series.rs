//! CSV formats for measured series and simulated trajectories.
//!
//! Measured series: header `time_s,value`, optional `# unit: K|C|deg` line.
//! Trajectories: header `t_s,theta_s_K,theta_L_K`, six decimals, the last
//! column empty for a single-layer wall.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::{MeasurementSeries, Unit};
use crate::simulate::{Channel, Trajectory};
use crate::thermal_model::{AssemblyKind, ThermalState};

pub const SERIES_HEADER: &str = "time_s,value";
pub const TRAJECTORY_HEADER: &str = "t_s,theta_s_K,theta_L_K";

const CELSIUS_OFFSET: f64 = 273.15;

pub fn celsius_to_kelvin(c: f64) -> f64 {
    c + CELSIUS_OFFSET
}

pub fn kelvin_to_celsius(k: f64) -> f64 {
    k - CELSIUS_OFFSET
}

fn parse_err(origin: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: origin.to_string(),
        line,
        message: message.into(),
    }
}

fn unit_directive(text: &str, origin: &str) -> Result<Option<Unit>> {
    for (idx, line) in text.lines().enumerate() {
        let Some(comment) = line.trim().strip_prefix('#') else {
            continue;
        };
        let Some(rest) = comment.trim().strip_prefix("unit:") else {
            continue;
        };
        return match rest.trim() {
            "K" => Ok(Some(Unit::Kelvin)),
            "C" => Ok(Some(Unit::Celsius)),
            "deg" => Ok(Some(Unit::Degrees)),
            other => Err(parse_err(origin, idx + 1, format!("unknown unit `{other}`"))),
        };
    }
    Ok(None)
}

/// Rows of a numeric CSV table with their 1-based line numbers.
fn numeric_rows(text: &str, origin: &str, header: &str) -> Result<Vec<(usize, Vec<Option<f64>>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());
    let found = reader
        .headers()
        .map_err(|e| parse_err(origin, 1, e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if found != header {
        return Err(parse_err(origin, 1, format!("expected header `{header}`, found `{found}`")));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(origin, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let fields = record
            .iter()
            .map(|f| {
                let f = f.trim();
                if f.is_empty() {
                    Ok(None)
                } else {
                    f.parse::<f64>()
                        .map(Some)
                        .map_err(|_| parse_err(origin, line, format!("not a number: `{f}`")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((line, fields));
    }
    Ok(rows)
}

fn check_time(origin: &str, line: usize, t: f64, prev: Option<f64>) -> Result<()> {
    if !t.is_finite() {
        return Err(parse_err(origin, line, "time is not finite"));
    }
    if let Some(p) = prev {
        if t <= p {
            return Err(parse_err(
                origin,
                line,
                format!("time {t} does not increase past {p}"),
            ));
        }
    }
    Ok(())
}

/// Parses a measured series held in memory; Celsius values are stored as kelvin.
pub fn parse_series(text: &str, origin: &str) -> Result<MeasurementSeries> {
    let unit = unit_directive(text, origin)?.unwrap_or(Unit::Kelvin);
    let rows = numeric_rows(text, origin, SERIES_HEADER)?;
    let mut points = Vec::with_capacity(rows.len());
    for (line, fields) in rows {
        let (Some(t), Some(v)) = (fields[0], fields[1]) else {
            return Err(parse_err(origin, line, "empty field"));
        };
        check_time(origin, line, t, points.last().map(|p: &(f64, f64)| p.0))?;
        if !v.is_finite() {
            return Err(parse_err(origin, line, "value is not finite"));
        }
        let v = if unit == Unit::Celsius {
            celsius_to_kelvin(v)
        } else {
            v
        };
        points.push((t, v));
    }
    if points.len() < 2 {
        return Err(parse_err(
            origin,
            0,
            format!("need at least 2 data rows, found {}", points.len()),
        ));
    }
    let stored = if unit == Unit::Celsius { Unit::Kelvin } else { unit };
    MeasurementSeries::new(points, stored, origin)
}

pub fn read_series(path: &Path) -> Result<MeasurementSeries> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_series(&text, &path.display().to_string())
}

/// Serializes a series in the measured-series format.
pub fn format_series(series: &MeasurementSeries) -> String {
    let mut out = String::new();
    let unit = match series.unit() {
        Unit::Kelvin => Some("K"),
        Unit::Celsius => Some("C"),
        Unit::Degrees => Some("deg"),
        Unit::Dimensionless => None,
    };
    if let Some(u) = unit {
        let _ = writeln!(out, "# unit: {u}");
    }
    out.push_str(SERIES_HEADER);
    out.push('\n');
    for &(t, v) in series.points() {
        let _ = writeln!(out, "{t:.6},{v:.6}");
    }
    out
}

pub fn write_series(series: &MeasurementSeries, path: &Path) -> Result<()> {
    std::fs::write(path, format_series(series)).map_err(|e| Error::io(path, e))
}

pub fn format_trajectory(trajectory: &Trajectory) -> String {
    let mut out = String::with_capacity(40 * (trajectory.samples().len() + 1));
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for s in trajectory.samples() {
        let _ = write!(out, "{:.6},{:.6},", s.time, s.silicone);
        if let Some(l) = s.lig {
            let _ = write!(out, "{l:.6}");
        }
        out.push('\n');
    }
    out
}

pub fn write_trajectory(trajectory: &Trajectory, path: &Path) -> Result<()> {
    std::fs::write(path, format_trajectory(trajectory)).map_err(|e| Error::io(path, e))
}

pub fn parse_trajectory(text: &str, origin: &str) -> Result<Trajectory> {
    let rows = numeric_rows(text, origin, TRAJECTORY_HEADER)?;
    let Some((_, first)) = rows.first() else {
        return Err(parse_err(origin, 0, "trajectory has no rows"));
    };
    let kind = if first[2].is_some() {
        AssemblyKind::Bilayer
    } else {
        AssemblyKind::SingleLayer
    };
    let mut samples: Vec<ThermalState> = Vec::with_capacity(rows.len());
    for (line, fields) in rows {
        let (Some(t), Some(s)) = (fields[0], fields[1]) else {
            return Err(parse_err(origin, line, "empty time or silicone field"));
        };
        check_time(origin, line, t, samples.last().map(|p| p.time))?;
        if fields[2].is_some() != (kind == AssemblyKind::Bilayer) {
            return Err(parse_err(origin, line, "LIG column must be filled on every row or none"));
        }
        samples.push(ThermalState {
            time: t,
            silicone: s,
            lig: fields[2],
        });
    }
    Trajectory::from_samples(kind, samples).map_err(|e| parse_err(origin, 0, e.to_string()))
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trajectory(&text, &path.display().to_string())
}

/// Reads either file format; trajectories yield the requested channel.
pub fn read_any_series(path: &Path, channel: Channel) -> Result<MeasurementSeries> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let origin = path.display().to_string();
    let header = text
        .lines()
        .find(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .unwrap_or("")
        .trim();
    if header == TRAJECTORY_HEADER {
        parse_trajectory(&text, &origin)?.series(channel)
    } else {
        parse_series(&text, &origin)
    }
}
