//! Parameter and light-distance sweeps producing one summary row per point.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use crate::calibrate::ParamName;
use crate::error::{Error, Result};
use crate::io::config::RunConfig;
use crate::metrics::{plateau_value, response_time_63, FinalConvention, Plateau};
use crate::thermal_model::ThermalState;

/// Drive multiplier at distance `d` relative to a reference distance:
/// `(d_ref / d)^exponent`.
pub fn illuminance_scale(d: f64, d_ref: f64, exponent: f64) -> Result<f64> {
    for (name, v) in [("distance", d), ("d_ref", d_ref)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(name, format!("must be > 0, got {v}")));
        }
    }
    if !exponent.is_finite() {
        return Err(Error::invalid("exponent", "must be finite"));
    }
    Ok((d_ref / d).powf(exponent))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepOutput {
    T63,
    Peak,
    Steady,
    Plateau,
}

impl FromStr for SweepOutput {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "t63" => Ok(SweepOutput::T63),
            "peak" => Ok(SweepOutput::Peak),
            "steady" => Ok(SweepOutput::Steady),
            "plateau" => Ok(SweepOutput::Plateau),
            other => Err(Error::invalid("output", format!("unknown sweep output `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepPoints {
    /// Explicit values of one model parameter.
    Values { param: ParamName, values: Vec<f64> },
    /// Source distances in metres, mapped to a drive scale.
    Distances {
        distances: Vec<f64>,
        d_ref: f64,
        exponent: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub points: SweepPoints,
    pub outputs: Vec<SweepOutput>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let n = match &self.points {
            SweepPoints::Values { values, .. } => values.len(),
            SweepPoints::Distances {
                distances,
                d_ref,
                exponent,
            } => {
                for &d in distances {
                    illuminance_scale(d, *d_ref, *exponent)?;
                }
                distances.len()
            }
        };
        if n == 0 {
            return Err(Error::invalid("sweep", "needs at least one point"));
        }
        if self.outputs.is_empty() {
            return Err(Error::invalid("outputs", "request at least one output"));
        }
        Ok(())
    }

    fn len(&self) -> usize {
        match &self.points {
            SweepPoints::Values { values, .. } => values.len(),
            SweepPoints::Distances { distances, .. } => distances.len(),
        }
    }

    fn axis_name(&self) -> String {
        match &self.points {
            SweepPoints::Values { param, .. } => param.as_str().to_string(),
            SweepPoints::Distances { .. } => "distance_m".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointResult {
    pub t63: Option<f64>,
    pub peak: Option<f64>,
    pub steady: Option<ThermalState>,
    pub plateau: Option<Plateau>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Swept value as given (parameter value or distance).
    pub value: f64,
    /// Multiplier applied to the light schedule at this point.
    pub scale: f64,
    pub outcome: std::result::Result<PointResult, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub axis: String,
    pub outputs: Vec<SweepOutput>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_err()).count()
    }

    pub fn to_csv(&self) -> String {
        let mut header = vec!["index".to_string(), self.axis.clone(), "scale".into(), "status".into()];
        for o in &self.outputs {
            match o {
                SweepOutput::T63 => header.push("t63_s".into()),
                SweepOutput::Peak => header.push("peak_K".into()),
                SweepOutput::Steady => {
                    header.push("steady_theta_s_K".into());
                    header.push("steady_theta_L_K".into());
                }
                SweepOutput::Plateau => {
                    header.push("plateau_K".into());
                    header.push("plateau_time_s".into());
                }
            }
        }
        header.push("error".into());

        let mut out = header.join(",");
        out.push('\n');
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        for (i, row) in self.rows.iter().enumerate() {
            let _ = write!(out, "{i},{},{:.6}", row.value, row.scale);
            match &row.outcome {
                Ok(r) => {
                    out.push_str(",ok");
                    for o in &self.outputs {
                        match o {
                            SweepOutput::T63 => {
                                let _ = write!(out, ",{}", opt(r.t63));
                            }
                            SweepOutput::Peak => {
                                let _ = write!(out, ",{}", opt(r.peak));
                            }
                            SweepOutput::Steady => {
                                let _ = write!(
                                    out,
                                    ",{},{}",
                                    opt(r.steady.map(|s| s.silicone)),
                                    opt(r.steady.and_then(|s| s.lig))
                                );
                            }
                            SweepOutput::Plateau => {
                                let _ = write!(
                                    out,
                                    ",{},{}",
                                    opt(r.plateau.map(|p| p.value)),
                                    opt(r.plateau.map(|p| p.reach_time))
                                );
                            }
                        }
                    }
                    out.push_str(",\n");
                }
                Err(msg) => {
                    out.push_str(",failed");
                    for o in &self.outputs {
                        let cols = match o {
                            SweepOutput::T63 | SweepOutput::Peak => 1,
                            SweepOutput::Steady | SweepOutput::Plateau => 2,
                        };
                        out.push_str(&",".repeat(cols));
                    }
                    let _ = writeln!(out, ",\"{}\"", msg.replace('"', "'"));
                }
            }
        }
        out
    }
}

fn evaluate_point(
    config: &RunConfig,
    outputs: &[SweepOutput],
    param: ParamName,
    value: f64,
) -> Result<PointResult> {
    let mut scenario = config.scenario.clone();
    param.apply(&mut scenario, value)?;
    let needs_run = outputs
        .iter()
        .any(|o| matches!(o, SweepOutput::T63 | SweepOutput::Peak | SweepOutput::Plateau));
    let series = if needs_run {
        Some(scenario.run()?.series(config.metrics.channel)?)
    } else {
        None
    };

    let mut result = PointResult {
        t63: None,
        peak: None,
        steady: None,
        plateau: None,
    };
    for o in outputs {
        match o {
            SweepOutput::T63 => {
                let s = series.as_ref().expect("series simulated");
                let window = scenario.config.metric_window.min(s.span());
                result.t63 = Some(response_time_63(s, FinalConvention::WindowFinal { window })?.t63);
            }
            SweepOutput::Peak => {
                let s = series.as_ref().expect("series simulated");
                result.peak = Some(s.values().fold(f64::NEG_INFINITY, f64::max));
            }
            SweepOutput::Steady => {
                // steady state under the schedule's brightest interval
                let drive = scenario
                    .schedule
                    .intervals()
                    .iter()
                    .map(|iv| iv.scale)
                    .fold(0.0, f64::max);
                result.steady = Some(scenario.steady_state(drive)?);
            }
            SweepOutput::Plateau => {
                let s = series.as_ref().expect("series simulated");
                let (threshold, window) = plateau_settings(config)?;
                result.plateau = Some(plateau_value(s, threshold, window)?);
            }
        }
    }
    Ok(result)
}

fn plateau_settings(config: &RunConfig) -> Result<(f64, f64)> {
    match (config.metrics.plateau_threshold, config.metrics.plateau_window) {
        (Some(t), Some(w)) => Ok((t, w)),
        _ => Err(Error::invalid(
            "plateau",
            "plateau output needs metrics.plateau_threshold and metrics.plateau_window",
        )),
    }
}

/// Evaluates every sweep point in parallel. Rows come back in input order;
/// a failing point is recorded in its row and does not stop the sweep.
pub fn run_sweep(config: &RunConfig, sweep: &SweepSpec) -> Result<SweepTable> {
    sweep.validate()?;
    if sweep.outputs.contains(&SweepOutput::Plateau) {
        plateau_settings(config)?;
    }
    let points: Vec<(f64, ParamName, f64, f64)> = match &sweep.points {
        SweepPoints::Values { param, values } => values
            .iter()
            .map(|&v| (v, *param, v, if *param == ParamName::Scale { v } else { 1.0 }))
            .collect(),
        SweepPoints::Distances {
            distances,
            d_ref,
            exponent,
        } => distances
            .iter()
            .map(|&d| {
                let s = illuminance_scale(d, *d_ref, *exponent).expect("validated");
                (d, ParamName::Scale, s, s)
            })
            .collect(),
    };
    debug_assert_eq!(points.len(), sweep.len());

    let rows = points
        .par_iter()
        .map(|&(value, param, applied, scale)| SweepRow {
            value,
            scale,
            outcome: evaluate_point(config, &sweep.outputs, param, applied).map_err(|e| e.to_string()),
        })
        .collect();
    Ok(SweepTable {
        axis: sweep.axis_name(),
        outputs: sweep.outputs.clone(),
        rows,
    })
}
