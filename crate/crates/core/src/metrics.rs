//! Descriptors extracted from temperature or bending-angle time series.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Fraction of the baseline-to-final excursion that defines the response time.
pub const RESPONSE_FRACTION: f64 = 0.632;

const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unit {
    Kelvin,
    Celsius,
    /// Bending angle in degrees.
    Degrees,
    Dimensionless,
}

impl Unit {
    pub fn symbol(self) -> &'static str {
        match self {
            Unit::Kelvin => "K",
            Unit::Celsius => "C",
            Unit::Degrees => "deg",
            Unit::Dimensionless => "1",
        }
    }
}

/// Time-stamped samples with strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSeries {
    points: Vec<(f64, f64)>,
    unit: Unit,
    label: String,
}

impl MeasurementSeries {
    pub fn new(points: Vec<(f64, f64)>, unit: Unit, label: impl Into<String>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::MalformedSeries(format!(
                "need at least 2 samples, got {}",
                points.len()
            )));
        }
        for (i, &(t, v)) in points.iter().enumerate() {
            if !t.is_finite() || !v.is_finite() {
                return Err(Error::MalformedSeries(format!("non-finite sample at index {i}")));
            }
            if i > 0 && t <= points[i - 1].0 {
                return Err(Error::MalformedSeries(format!(
                    "time {t} at index {i} does not increase"
                )));
            }
        }
        Ok(MeasurementSeries {
            points,
            unit,
            label: label.into(),
        })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.0)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1)
    }

    pub fn start_time(&self) -> f64 {
        self.points[0].0
    }

    pub fn end_time(&self) -> f64 {
        self.points[self.points.len() - 1].0
    }

    pub fn span(&self) -> f64 {
        self.end_time() - self.start_time()
    }

    pub fn first_value(&self) -> f64 {
        self.points[0].1
    }

    pub fn last_value(&self) -> f64 {
        self.points[self.points.len() - 1].1
    }

    /// Linear interpolation at `t` within the sampled span.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let (t0, t1) = (self.start_time(), self.end_time());
        if t < t0 - TIME_EPS || t > t1 + TIME_EPS {
            return Err(Error::invalid(
                "time",
                format!("{t} lies outside the series span [{t0}, {t1}]"),
            ));
        }
        let idx = self.points.partition_point(|p| p.0 <= t);
        if idx == 0 {
            return Ok(self.points[0].1);
        }
        if idx == self.points.len() {
            return Ok(self.last_value());
        }
        let (ta, va) = self.points[idx - 1];
        let (tb, vb) = self.points[idx];
        Ok(va + (t - ta) / (tb - ta) * (vb - va))
    }

    /// Copy with every value passed through `f`.
    pub fn map_values(&self, unit: Unit, f: impl Fn(f64) -> f64) -> Result<Self> {
        MeasurementSeries::new(
            self.points.iter().map(|&(t, v)| (t, f(v))).collect(),
            unit,
            self.label.clone(),
        )
    }

    /// Samples with `from <= t <= to`.
    pub fn window(&self, from: f64, to: f64) -> Result<Self> {
        MeasurementSeries::new(
            self.points
                .iter()
                .copied()
                .filter(|&(t, _)| t >= from - TIME_EPS && t <= to + TIME_EPS)
                .collect(),
            self.unit,
            self.label.clone(),
        )
    }
}

/// How the "final" level of a response is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FinalConvention {
    /// Value at `window` seconds after the first sample.
    WindowFinal { window: f64 },
    /// Mean of the first plateau (see [`plateau_value`]).
    Plateau { threshold: f64, window: f64 },
    /// Caller-provided level, e.g. a known asymptote.
    Supplied(f64),
}

impl FinalConvention {
    pub fn name(&self) -> &'static str {
        match self {
            FinalConvention::WindowFinal { .. } => "window-final",
            FinalConvention::Plateau { .. } => "plateau",
            FinalConvention::Supplied(_) => "supplied",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseReport {
    pub start_time: f64,
    pub baseline: f64,
    pub final_value: f64,
    pub convention: FinalConvention,
    /// Absolute time of the 63.2% crossing, interpolated between samples.
    pub t63: f64,
    pub peak_value: f64,
    pub peak_time: f64,
}

impl ResponseReport {
    /// Crossing time measured from the first sample.
    pub fn elapsed(&self) -> f64 {
        self.t63 - self.start_time
    }
}

/// 63% response time of a rising or falling series.
///
/// The baseline is the first sample. The crossing is the earliest time the
/// series reaches `baseline + 0.632 (final - baseline)` in the direction of
/// `final`.
pub fn response_time_63(
    series: &MeasurementSeries,
    convention: FinalConvention,
) -> Result<ResponseReport> {
    let baseline = series.first_value();
    let final_value = match convention {
        FinalConvention::WindowFinal { window } => {
            if !(window > 0.0) || window > series.span() + TIME_EPS {
                return Err(Error::MalformedSeries(format!(
                    "window {window} s must be positive and within the series span {} s",
                    series.span()
                )));
            }
            series.value_at(series.start_time() + window)?
        }
        FinalConvention::Plateau { threshold, window } => {
            plateau_value(series, threshold, window)?.value
        }
        FinalConvention::Supplied(v) => {
            if !v.is_finite() {
                return Err(Error::invalid("final", "must be finite"));
            }
            v
        }
    };
    let level = baseline + RESPONSE_FRACTION * (final_value - baseline);
    let direction = (final_value - baseline).signum();
    if final_value == baseline {
        return Err(Error::NoCrossing { level });
    }

    let pts = series.points();
    let hit = pts
        .iter()
        .position(|&(_, v)| (v - level) * direction >= 0.0)
        .ok_or(Error::NoCrossing { level })?;
    // hit > 0 because the baseline sits strictly on the far side of `level`
    let (ta, va) = pts[hit - 1];
    let (tb, vb) = pts[hit];
    let t63 = ta + (level - va) / (vb - va) * (tb - ta);

    let (peak_time, peak_value) = pts
        .iter()
        .copied()
        .fold(pts[0], |best, p| if p.1 > best.1 { p } else { best });

    Ok(ResponseReport {
        start_time: series.start_time(),
        baseline,
        final_value,
        convention,
        t63,
        peak_value,
        peak_time,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plateau {
    /// Mean of the samples inside the first qualifying window.
    pub value: f64,
    /// Start of that window.
    pub reach_time: f64,
}

/// Earliest window `[t*, t* + window]` (starting on a sample) over which the
/// series range stays below `threshold`.
pub fn plateau_value(series: &MeasurementSeries, threshold: f64, window: f64) -> Result<Plateau> {
    if !(threshold > 0.0) {
        return Err(Error::invalid("threshold", format!("must be > 0, got {threshold}")));
    }
    if !(window > 0.0) {
        return Err(Error::invalid("window", format!("must be > 0, got {window}")));
    }
    if series.span() + TIME_EPS < window {
        return Err(Error::MalformedSeries(format!(
            "series span {} s is shorter than the plateau window {window} s",
            series.span()
        )));
    }

    let pts = series.points();
    let end_time = series.end_time();
    let mut maxq: VecDeque<usize> = VecDeque::new();
    let mut minq: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for (i, &(t, _)) in pts.iter().enumerate() {
        let stop = t + window;
        if stop > end_time + TIME_EPS {
            break;
        }
        while next < pts.len() && pts[next].0 <= stop + TIME_EPS {
            let v = pts[next].1;
            while maxq.back().is_some_and(|&j| pts[j].1 <= v) {
                maxq.pop_back();
            }
            maxq.push_back(next);
            while minq.back().is_some_and(|&j| pts[j].1 >= v) {
                minq.pop_back();
            }
            minq.push_back(next);
            next += 1;
        }
        while maxq.front().is_some_and(|&j| j < i) {
            maxq.pop_front();
        }
        while minq.front().is_some_and(|&j| j < i) {
            minq.pop_front();
        }
        let range = pts[maxq[0]].1 - pts[minq[0]].1;
        if range < threshold {
            let n = (next - i) as f64;
            let anchor = pts[i].1;
            let offset = pts[i..next].iter().map(|p| p.1 - anchor).sum::<f64>() / n;
            return Ok(Plateau {
                value: anchor + offset,
                reach_time: t,
            });
        }
    }
    Err(Error::NoPlateau { threshold, window })
}

/// Affine rescaling sending the first value to 0 and `plateau` to 1.
pub fn normalize_curve(series: &MeasurementSeries, plateau: f64) -> Result<MeasurementSeries> {
    let initial = series.first_value();
    if plateau == initial {
        return Err(Error::DegenerateNormalization(initial));
    }
    let span = plateau - initial;
    series.map_values(Unit::Dimensionless, |v| (v - initial) / span)
}

/// Inverse of [`normalize_curve`].
pub fn denormalize_curve(
    series: &MeasurementSeries,
    initial: f64,
    plateau: f64,
    unit: Unit,
) -> Result<MeasurementSeries> {
    let span = plateau - initial;
    series.map_values(unit, |v| initial + v * span)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoolingFit {
    /// Newton cooling time constant, s.
    pub tau: f64,
    pub r_squared: f64,
}

/// Least-squares line through `ln(θ - ambient)` versus time.
pub fn cooling_fit(series: &MeasurementSeries, ambient: f64) -> Result<CoolingFit> {
    let mut xs = Vec::with_capacity(series.len());
    let mut ys = Vec::with_capacity(series.len());
    for (index, &(t, v)) in series.points().iter().enumerate() {
        if v <= ambient {
            return Err(Error::LogDomain {
                index,
                value: v,
                ambient,
            });
        }
        xs.push(t);
        ys.push((v - ambient).ln());
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        let (dx, dy) = (x - mean_x, y - mean_y);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(Error::MalformedSeries(
            "series does not decay toward ambient".into(),
        ));
    }
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(CoolingFit {
        tau: -1.0 / slope,
        r_squared,
    })
}

/// Each peak divided by the first.
pub fn cycle_degradation(peaks: &[f64]) -> Result<Vec<f64>> {
    let first = *peaks
        .first()
        .ok_or_else(|| Error::invalid("peaks", "need at least one peak"))?;
    if !(first > 0.0) {
        return Err(Error::DegenerateBaseline(first));
    }
    Ok(peaks.iter().map(|p| p / first).collect())
}

/// Maximum of each consecutive `period`-long slice of the series, as `(time, value)`.
pub fn cycle_peaks(series: &MeasurementSeries, period: f64) -> Result<Vec<(f64, f64)>> {
    if !(period > 0.0) {
        return Err(Error::invalid("period", format!("must be > 0, got {period}")));
    }
    let t0 = series.start_time();
    let mut peaks: Vec<(usize, (f64, f64))> = Vec::new();
    for &(t, v) in series.points() {
        let cycle = ((t - t0) / period).floor() as usize;
        match peaks.last_mut() {
            Some((c, best)) if *c == cycle => {
                if v > best.1 {
                    *best = (t, v);
                }
            }
            _ => peaks.push((cycle, (t, v))),
        }
    }
    Ok(peaks.into_iter().map(|(_, p)| p).collect())
}

/// Last value of the series over a caller-chosen reference angle.
pub fn angular_change_ratio(series: &MeasurementSeries, reference: f64) -> Result<f64> {
    if !(reference > 0.0) {
        return Err(Error::DegenerateBaseline(reference));
    }
    Ok(series.last_value() / reference)
}
