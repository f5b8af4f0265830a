//! Forward-Euler time stepping of the wall model under a light schedule.

use crate::error::{Error, Result};
use crate::metrics::{MeasurementSeries, Unit};
use crate::thermal_model::{
    derivatives, steady_state, AssemblyKind, Environment, HeatSource, ThermalState, WallAssembly,
};

/// One lit interval `[start, end)` with a drive multiplier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightInterval {
    pub start: f64,
    pub end: f64,
    pub scale: f64,
}

/// Piecewise-constant light drive. Outside every interval the light is off.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LightSchedule {
    intervals: Vec<LightInterval>,
}

impl LightSchedule {
    pub fn new(intervals: Vec<LightInterval>) -> Result<Self> {
        for (i, iv) in intervals.iter().enumerate() {
            if !(iv.start.is_finite() && iv.end.is_finite() && iv.start >= 0.0) {
                return Err(Error::invalid(
                    format!("schedule[{i}]"),
                    "times must be finite and >= 0",
                ));
            }
            if iv.start >= iv.end {
                return Err(Error::invalid(format!("schedule[{i}]"), "start must precede end"));
            }
            if !(iv.scale.is_finite() && iv.scale >= 0.0) {
                return Err(Error::invalid(format!("schedule[{i}]"), "scale must be >= 0"));
            }
            if i > 0 && intervals[i - 1].end > iv.start {
                return Err(Error::invalid(
                    format!("schedule[{i}]"),
                    "intervals must be sorted and non-overlapping",
                ));
            }
        }
        Ok(LightSchedule { intervals })
    }

    /// Light never on.
    pub fn dark() -> Self {
        LightSchedule::default()
    }

    /// Full drive on `[start, end)`.
    pub fn on_between(start: f64, end: f64) -> Result<Self> {
        LightSchedule::new(vec![LightInterval {
            start,
            end,
            scale: 1.0,
        }])
    }

    pub fn intervals(&self) -> &[LightInterval] {
        &self.intervals
    }

    /// Drive multiplier in effect at `t` (intervals are closed on the left).
    pub fn scale_at(&self, t: f64) -> f64 {
        let idx = self.intervals.partition_point(|iv| iv.start <= t);
        match idx.checked_sub(1).map(|i| &self.intervals[i]) {
            Some(iv) if t < iv.end => iv.scale,
            _ => 0.0,
        }
    }

    /// Same timing with every scale multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        LightSchedule::new(
            self.intervals
                .iter()
                .map(|iv| LightInterval {
                    scale: iv.scale * factor,
                    ..*iv
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Integration step, s.
    pub dt: f64,
    /// Simulated span, s.
    pub duration: f64,
    /// Keep every Nth step.
    pub record_stride: usize,
    /// Span after onset whose end value defines "final" for the 63% metric, s.
    pub metric_window: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.01,
            duration: 300.0,
            record_stride: 1,
            metric_window: 300.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("dt", format!("must be > 0, got {}", self.dt)));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::invalid("duration", format!("must be > 0, got {}", self.duration)));
        }
        if self.duration < self.dt {
            return Err(Error::invalid("duration", "must be at least one time step"));
        }
        if self.record_stride == 0 {
            return Err(Error::invalid("record_stride", "must be >= 1"));
        }
        if !(self.metric_window.is_finite() && self.metric_window > 0.0) {
            return Err(Error::invalid("metric_window", "must be > 0"));
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }
}

/// Which node temperature to read from a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Silicone,
    Lig,
    /// Surface wetted by the working liquid: the LIG node in a bilayer,
    /// the silicone node otherwise.
    LiquidContact,
}

impl Channel {
    pub fn resolve(self, kind: AssemblyKind) -> Result<Channel> {
        match (self, kind) {
            (Channel::LiquidContact, AssemblyKind::Bilayer) => Ok(Channel::Lig),
            (Channel::LiquidContact, AssemblyKind::SingleLayer) => Ok(Channel::Silicone),
            (Channel::Lig, AssemblyKind::SingleLayer) => Err(Error::KindMismatch {
                expected: AssemblyKind::Bilayer.name(),
                found: kind.name(),
            }),
            (c, _) => Ok(c),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::Silicone => "silicone",
            Channel::Lig => "lig",
            Channel::LiquidContact => "liquid-contact",
        }
    }
}

impl std::str::FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "silicone" | "theta_s" => Ok(Channel::Silicone),
            "lig" | "theta_L" => Ok(Channel::Lig),
            "liquid-contact" | "liquid_contact" => Ok(Channel::LiquidContact),
            other => Err(Error::invalid("channel", format!("unknown channel `{other}`"))),
        }
    }
}

/// Uniformly sampled node temperatures starting at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    kind: AssemblyKind,
    spacing: f64,
    samples: Vec<ThermalState>,
}

impl Trajectory {
    /// Builds a trajectory from already-recorded samples, checking the
    /// uniform-spacing invariant.
    pub fn from_samples(kind: AssemblyKind, samples: Vec<ThermalState>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::MalformedSeries("trajectory needs at least 2 samples".into()));
        }
        if samples[0].time != 0.0 {
            return Err(Error::MalformedSeries("trajectory must start at t = 0".into()));
        }
        // Span-based spacing keeps times read back from 6-decimal files uniform.
        let spacing = samples[samples.len() - 1].time / (samples.len() - 1) as f64;
        if !(spacing > 0.0) {
            return Err(Error::MalformedSeries("trajectory times must increase".into()));
        }
        for (i, s) in samples.iter().enumerate() {
            let expected = i as f64 * spacing;
            if (s.time - expected).abs() > (2e-6f64).max(1e-9 * expected).min(0.25 * spacing) {
                return Err(Error::MalformedSeries(format!(
                    "sample {i} at t = {} breaks uniform spacing {spacing}",
                    s.time
                )));
            }
            if s.lig.is_some() != (kind == AssemblyKind::Bilayer) {
                return Err(Error::MalformedSeries(format!(
                    "sample {i} does not match a {} wall",
                    kind.name()
                )));
            }
        }
        Ok(Trajectory {
            kind,
            spacing,
            samples,
        })
    }

    pub fn kind(&self) -> AssemblyKind {
        self.kind
    }

    pub fn samples(&self) -> &[ThermalState] {
        &self.samples
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn end_time(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.time)
    }

    fn pick(&self, channel: Channel) -> Result<fn(&ThermalState) -> f64> {
        Ok(match channel.resolve(self.kind)? {
            Channel::Lig => |s: &ThermalState| s.lig.unwrap_or(f64::NAN),
            _ => |s: &ThermalState| s.silicone,
        })
    }

    pub fn values(&self, channel: Channel) -> Result<Vec<f64>> {
        let f = self.pick(channel)?;
        Ok(self.samples.iter().map(f).collect())
    }

    /// One node's temperature history as a kelvin series.
    pub fn series(&self, channel: Channel) -> Result<MeasurementSeries> {
        let f = self.pick(channel)?;
        let resolved = channel.resolve(self.kind)?;
        MeasurementSeries::new(
            self.samples.iter().map(|s| (s.time, f(s))).collect(),
            Unit::Kelvin,
            format!("theta_{}", resolved.name()),
        )
    }

    /// Linear interpolation of one channel at `t`.
    pub fn value_at(&self, channel: Channel, t: f64) -> Result<f64> {
        let f = self.pick(channel)?;
        let end = self.end_time();
        if !(t >= 0.0 && t <= end + 1e-9 * end.max(1.0)) {
            return Err(Error::invalid(
                "time",
                format!("{t} s lies outside the simulated span [0, {end}]"),
            ));
        }
        let pos = (t / self.spacing).min((self.samples.len() - 1) as f64);
        let i = (pos.floor() as usize).min(self.samples.len() - 2);
        let frac = pos - i as f64;
        let (a, b) = (f(&self.samples[i]), f(&self.samples[i + 1]));
        Ok(a + frac * (b - a))
    }
}

/// Smallest lumped time constant of the wall and the layer that sets it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityLimit {
    pub seconds: f64,
    pub layer: &'static str,
}

/// Largest step the explicit update accepts: the smallest ratio of layer
/// capacitance to that layer's total linear loss conductance.
pub fn stability_limit(assembly: &WallAssembly) -> StabilityLimit {
    let silicone = assembly.silicone();
    let k = assembly.coupling_conductance().unwrap_or(0.0);
    let tau = |cap: f64, g: f64| if g > 0.0 { cap / g } else { f64::INFINITY };
    let tau_s = tau(silicone.heat_capacity(), silicone.convective_conductance() + k);
    match assembly.lig() {
        Some(lig) => {
            let tau_l = tau(lig.heat_capacity(), lig.convective_conductance() + k);
            if tau_l < tau_s {
                StabilityLimit {
                    seconds: tau_l,
                    layer: "lig",
                }
            } else {
                StabilityLimit {
                    seconds: tau_s,
                    layer: "silicone",
                }
            }
        }
        None => StabilityLimit {
            seconds: tau_s,
            layer: "silicone",
        },
    }
}

fn advance(
    state: &ThermalState,
    assembly: &WallAssembly,
    source: &HeatSource,
    env: &Environment,
    scale: f64,
    dt: f64,
    time: f64,
) -> Result<ThermalState> {
    let rates = derivatives(state, assembly, source, env, scale)?;
    Ok(ThermalState {
        time,
        silicone: state.silicone + dt * rates.silicone,
        lig: match (state.lig, rates.lig) {
            (Some(theta), Some(rate)) => Some(theta + dt * rate),
            _ => None,
        },
    })
}

/// One forward-Euler step `θ(t + dt) = θ(t) + dt · dθ/dt`.
pub fn euler_step(
    state: &ThermalState,
    assembly: &WallAssembly,
    source: &HeatSource,
    env: &Environment,
    scale: f64,
    dt: f64,
) -> Result<ThermalState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid("dt", format!("must be > 0, got {dt}")));
    }
    advance(state, assembly, source, env, scale, dt, state.time + dt)
}

/// Integrates from ambient over `[0, duration]`, sampling the schedule at the
/// start of every step.
pub fn run(
    assembly: &WallAssembly,
    source: &HeatSource,
    schedule: &LightSchedule,
    env: &Environment,
    config: &SimConfig,
) -> Result<Trajectory> {
    config.validate()?;
    let limit = stability_limit(assembly);
    if config.dt > limit.seconds {
        return Err(Error::Stability {
            dt: config.dt,
            limit: limit.seconds,
            layer: limit.layer,
        });
    }

    let steps = config.steps();
    let mut samples = Vec::with_capacity(steps / config.record_stride + 1);
    let mut state = ThermalState::ambient(assembly, env);
    samples.push(state);
    for k in 0..steps {
        let t = k as f64 * config.dt;
        let next_time = (k + 1) as f64 * config.dt;
        state = advance(
            &state,
            assembly,
            source,
            env,
            schedule.scale_at(t),
            config.dt,
            next_time,
        )?;
        let healthy = |v: f64| v.is_finite() && v > 0.0;
        if !healthy(state.silicone) || !state.lig.is_none_or(healthy) {
            return Err(Error::Numerical(format!(
                "non-physical temperature at t = {next_time} s"
            )));
        }
        if (k + 1) % config.record_stride == 0 {
            samples.push(state);
        }
    }
    Trajectory::from_samples(assembly.kind(), samples)
}

/// Everything needed for one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub assembly: WallAssembly,
    pub source: HeatSource,
    pub env: Environment,
    pub schedule: LightSchedule,
    pub config: SimConfig,
}

impl Scenario {
    /// Reference wall lit continuously for the whole run.
    pub fn table1(kind: AssemblyKind) -> Self {
        let config = SimConfig::default();
        Scenario {
            assembly: match kind {
                AssemblyKind::SingleLayer => WallAssembly::table1_single(),
                AssemblyKind::Bilayer => WallAssembly::table1_bilayer(),
            },
            source: HeatSource::table1(),
            env: Environment::table1(),
            schedule: LightSchedule::on_between(0.0, config.duration).expect("valid schedule"),
            config,
        }
    }

    pub fn run(&self) -> Result<Trajectory> {
        run(
            &self.assembly,
            &self.source,
            &self.schedule,
            &self.env,
            &self.config,
        )
    }

    pub fn steady_state(&self, scale: f64) -> Result<ThermalState> {
        steady_state(&self.assembly, &self.source, &self.env, scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermal_model::{LayerProps, ThermalLayer};

    #[test]
    fn schedule_lookup_is_left_closed() {
        let s = LightSchedule::new(vec![
            LightInterval {
                start: 10.0,
                end: 20.0,
                scale: 1.0,
            },
            LightInterval {
                start: 30.0,
                end: 40.0,
                scale: 0.5,
            },
        ])
        .unwrap();
        assert_eq!(s.scale_at(0.0), 0.0);
        assert_eq!(s.scale_at(10.0), 1.0);
        assert_eq!(s.scale_at(19.999), 1.0);
        assert_eq!(s.scale_at(20.0), 0.0);
        assert_eq!(s.scale_at(35.0), 0.5);
        assert_eq!(s.scale_at(40.0), 0.0);
    }

    #[test]
    fn schedule_invariants() {
        let iv = |start, end| LightInterval {
            start,
            end,
            scale: 1.0,
        };
        assert!(LightSchedule::new(vec![iv(5.0, 5.0)]).is_err());
        assert!(LightSchedule::new(vec![iv(-1.0, 5.0)]).is_err());
        assert!(LightSchedule::new(vec![iv(0.0, 10.0), iv(5.0, 20.0)]).is_err());
        assert!(LightSchedule::new(vec![iv(10.0, 20.0), iv(0.0, 5.0)]).is_err());
        assert!(LightSchedule::new(vec![iv(0.0, 10.0), iv(10.0, 20.0)]).is_ok());
    }

    #[test]
    fn euler_step_values() {
        let a = WallAssembly::table1_single();
        let env = Environment::table1();
        let src = HeatSource::table1();
        let s0 = ThermalState::ambient(&a, &env);
        let s1 = euler_step(&s0, &a, &src, &env, 1.0, 1.0).unwrap();
        assert!((s1.silicone - 298.0934).abs() < 5e-5);
        assert_eq!(s1.time, 1.0);

        let still = euler_step(&s0, &a, &src, &env, 0.0, 1.0).unwrap();
        assert_eq!(still.silicone, s0.silicone);
        assert_eq!(still.time, 1.0);

        let one = euler_step(&s0, &a, &src, &env, 1.0, 0.01).unwrap();
        let half = euler_step(&s0, &a, &src, &env, 1.0, 0.005).unwrap();
        let two = euler_step(&half, &a, &src, &env, 1.0, 0.005).unwrap();
        assert!((one.silicone - two.silicone).abs() < 1e-4);
    }

    #[test]
    fn stability_limits() {
        let bi = stability_limit(&WallAssembly::table1_bilayer());
        assert_eq!(bi.layer, "lig");
        assert!((bi.seconds - 2.8e-3 / (1.8e-3 + 0.02)).abs() < 1e-12);
        assert!((bi.seconds - 0.128).abs() < 5e-4);

        let single = stability_limit(&WallAssembly::table1_single());
        assert!((single.seconds - 113.75).abs() < 1e-9);

        let doubled = |p: &mut LayerProps| {
            p.conv_coeff *= 2.0;
            p.conductivity *= 2.0;
        };
        let s = WallAssembly::table1_bilayer().silicone().modified(doubled).unwrap();
        let l = ThermalLayer::new(LayerProps::table1_lig()).unwrap().modified(doubled).unwrap();
        let halved = stability_limit(&WallAssembly::bilayer(s, l));
        assert!((halved.seconds - bi.seconds / 2.0).abs() < 1e-15);
    }

    #[test]
    fn oversized_step_rejected_naming_layer() {
        let mut sc = Scenario::table1(AssemblyKind::Bilayer);
        sc.config.dt = 0.2;
        match sc.run() {
            Err(Error::Stability { layer, .. }) => assert_eq!(layer, "lig"),
            other => panic!("expected stability error, got {other:?}"),
        }
    }

    #[test]
    fn dark_run_stays_at_ambient() {
        let mut sc = Scenario::table1(AssemblyKind::Bilayer);
        sc.schedule = LightSchedule::dark();
        sc.config.duration = 50.0;
        let traj = sc.run().unwrap();
        assert!(traj
            .samples()
            .iter()
            .all(|s| s.silicone == 298.0 && s.lig == Some(298.0)));
    }

    #[test]
    fn stride_controls_spacing() {
        let mut sc = Scenario::table1(AssemblyKind::SingleLayer);
        sc.config.duration = 10.0;
        sc.config.record_stride = 50;
        let traj = sc.run().unwrap();
        assert_eq!(traj.samples().len(), 21);
        assert!((traj.spacing() - 0.5).abs() < 1e-12);
        assert!((traj.end_time() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn interpolation_hits_samples_and_midpoints() {
        let mut sc = Scenario::table1(AssemblyKind::Bilayer);
        sc.config.duration = 2.0;
        let traj = sc.run().unwrap();
        let v = traj.values(Channel::Lig).unwrap();
        assert_eq!(traj.value_at(Channel::Lig, 0.0).unwrap(), v[0]);
        let mid = traj.value_at(Channel::Lig, 0.015).unwrap();
        assert!((mid - 0.5 * (v[1] + v[2])).abs() < 1e-9);
        assert!(traj.value_at(Channel::Lig, 2.5).is_err());
        assert!(traj.value_at(Channel::Lig, 2.0).is_ok());
    }

    #[test]
    fn channel_resolution() {
        assert_eq!(
            Channel::LiquidContact.resolve(AssemblyKind::Bilayer).unwrap(),
            Channel::Lig
        );
        assert_eq!(
            Channel::LiquidContact.resolve(AssemblyKind::SingleLayer).unwrap(),
            Channel::Silicone
        );
        assert!(Channel::Lig.resolve(AssemblyKind::SingleLayer).is_err());
    }
}
