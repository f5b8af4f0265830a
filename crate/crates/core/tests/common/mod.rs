//! Independent oracles and property checks shared by the integration suites.

#![allow(dead_code)]

use nalgebra::{Matrix2, Vector2};
use photothermal_core::io::series::{format_series, format_trajectory, parse_series, parse_trajectory};
use photothermal_core::io::sweep::{run_sweep, SweepOutput, SweepPoints, SweepSpec};
use photothermal_core::io::RunConfig;
use photothermal_core::metrics::{response_time_63, FinalConvention, MeasurementSeries, Unit};
use photothermal_core::thermal_model::{derivatives, steady_state};
use photothermal_core::{
    AssemblyKind, Environment, HeatSource, LayerProps, ThermalLayer, ThermalState, WallAssembly,
};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

/// Linear constant-flux bilayer as `dx/dt = M x + b`, `x = (θ_s − θ_e, θ_L − θ_e)`,
/// assembled from raw layer properties.
pub struct LinearBilayer {
    pub m: Matrix2<f64>,
    pub b: Vector2<f64>,
    pub ambient: f64,
}

impl LinearBilayer {
    pub fn new(s: &LayerProps, l: &LayerProps, power: f64, ambient: f64, scale: f64) -> Self {
        let cap_s = s.specific_heat * s.density * s.area * s.thickness;
        let cap_l = l.specific_heat * l.density * l.area * l.thickness;
        let g_s = f64::from(s.conv_faces) * s.conv_coeff * s.area;
        let g_l = f64::from(l.conv_faces) * l.conv_coeff * l.area;
        let k = s.conductivity * s.area / s.thickness;
        let m = Matrix2::new(
            -(g_s + k) / cap_s,
            k / cap_s,
            k / cap_l,
            -(g_l + k) / cap_l,
        );
        let b = Vector2::new(
            s.absorptance * power * scale / cap_s,
            l.absorptance * power * scale / cap_l,
        );
        LinearBilayer { m, b, ambient }
    }

    pub fn table1() -> Self {
        LinearBilayer::new(
            &LayerProps::table1_silicone(1),
            &LayerProps::table1_lig(),
            0.075,
            298.0,
            1.0,
        )
    }

    /// Steady excess temperatures via LU.
    pub fn steady_excess(&self) -> Vector2<f64> {
        -self.m.lu().solve(&self.b).expect("non-singular")
    }

    /// Exact `(θ_s, θ_L)` at `t` starting from ambient.
    pub fn exact(&self, t: f64) -> (f64, f64) {
        let ss = self.steady_excess();
        let x = ss - (self.m * t).exp() * ss;
        (self.ambient + x[0], self.ambient + x[1])
    }
}

/// `θ_e + P/G (1 − e^(−t/τ))` for a single layer lit from `t = 0`.
pub fn single_layer_exact(t: f64) -> f64 {
    let p = 0.17 * 0.075;
    let g = 2.0 * 6.0 * 1e-4;
    let cap = 1300.0 * 1050.0 * 1e-4 * 1e-3;
    298.0 + p / g * (1.0 - (-t * g / cap).exp())
}

pub fn exp_series(tau: f64, amplitude: f64, step: f64, span: f64) -> MeasurementSeries {
    let n = (span / step).round() as usize;
    MeasurementSeries::new(
        (0..=n)
            .map(|i| {
                let t = i as f64 * step;
                (t, 298.0 + amplitude * (1.0 - (-t / tau).exp()))
            })
            .collect(),
        Unit::Kelvin,
        "synthetic",
    )
    .unwrap()
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg.into()))
    }
}

pub fn random_bilayer() -> impl Strategy<Value = (WallAssembly, f64)> {
    (
        0.0..0.5f64,
        0.3..1.0f64,
        1.0..30.0f64,
        1.0..60.0f64,
        0.05..1.0f64,
        0.5e-3..3e-3f64,
        0.01..0.5f64,
    )
        .prop_map(|(a_s, a_l, h_s, h_l, lambda, x, power)| {
            let s = ThermalLayer::new(LayerProps {
                absorptance: a_s,
                conv_coeff: h_s,
                conductivity: lambda,
                thickness: x,
                ..LayerProps::table1_silicone(1)
            })
            .unwrap();
            let l = ThermalLayer::new(LayerProps {
                absorptance: a_l,
                conv_coeff: h_l,
                ..LayerProps::table1_lig()
            })
            .unwrap();
            (WallAssembly::bilayer(s, l), power)
        })
}

pub fn random_single() -> impl Strategy<Value = (WallAssembly, f64)> {
    (0.01..1.0f64, 1.0..30.0f64, 1u8..=2, 0.01..0.5f64).prop_map(|(a, h, faces, power)| {
        let s = ThermalLayer::new(LayerProps {
            absorptance: a,
            conv_coeff: h,
            conv_faces: faces,
            ..LayerProps::table1_silicone(2)
        })
        .unwrap();
        (WallAssembly::single(s), power)
    })
}

pub fn random_assembly() -> impl Strategy<Value = (WallAssembly, f64)> {
    prop_oneof![random_single(), random_bilayer()]
}

/// t63 is unchanged by any positive affine map of the values.
pub fn check_t63_affine(
    tau: f64,
    amplitude: f64,
    gain: f64,
    offset: f64,
    window: f64,
) -> Result<(), TestCaseError> {
    let s = exp_series(tau, amplitude, 0.5, 600.0);
    let mapped = s.map_values(Unit::Kelvin, |v| gain * v + offset).unwrap();
    let conv = FinalConvention::WindowFinal { window };
    let a = response_time_63(&s, conv).unwrap().t63;
    let b = response_time_63(&mapped, conv).unwrap().t63;
    ensure((a - b).abs() < 1e-6 * a.max(1.0), format!("t63 {a} vs {b}"))
}

/// Steady-state temperatures zero every rate of the matching right-hand side.
pub fn check_steady_rhs(
    assembly: &WallAssembly,
    source: &HeatSource,
    scale: f64,
    tol: f64,
) -> Result<(), TestCaseError> {
    let env = Environment::table1();
    let ss = steady_state(assembly, source, &env, scale).unwrap();
    let rates = derivatives(&ss, assembly, source, &env, scale).unwrap();
    ensure(rates.silicone.abs() < tol, format!("dθ_s/dt = {}", rates.silicone))?;
    ensure(
        rates.lig.is_none_or(|r| r.abs() < tol),
        format!("dθ_L/dt = {:?}", rates.lig),
    )
}

/// Steady temperatures rise strictly with drive scale and with source power.
pub fn check_steady_monotone(
    assembly: &WallAssembly,
    power: f64,
    s1: f64,
    s2: f64,
) -> Result<(), TestCaseError> {
    let env = Environment::table1();
    let (lo, hi) = if s1 < s2 { (s1, s2) } else { (s2, s1) };
    prop_assume!(hi - lo > 1e-6);
    let src = HeatSource::constant_flux(power).unwrap();
    let a = steady_state(assembly, &src, &env, lo).unwrap();
    let b = steady_state(assembly, &src, &env, hi).unwrap();
    ensure(b.silicone > a.silicone, "θ_s not increasing in scale")?;
    ensure(
        b.lig.zip(a.lig).is_none_or(|(x, y)| x > y),
        "θ_L not increasing in scale",
    )?;
    let stronger = HeatSource::constant_flux(power * (hi / lo.max(1e-3)).max(1.01)).unwrap();
    let c = steady_state(assembly, &stronger, &env, lo).unwrap();
    ensure(c.silicone > a.silicone, "θ_s not increasing in Q_h")
}

/// Series and trajectory files read back to their printed precision.
pub fn check_round_trip(values: &[f64], step: f64) -> Result<(), TestCaseError> {
    let s = MeasurementSeries::new(
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| (i as f64 * step, v))
            .collect(),
        Unit::Kelvin,
        "rt",
    )
    .unwrap();
    let back = parse_series(&format_series(&s), "rt").unwrap();
    ensure(back.len() == s.len(), "length changed")?;
    for (a, b) in s.points().iter().zip(back.points()) {
        ensure((a.0 - b.0).abs() <= 5e-7 && (a.1 - b.1).abs() <= 5e-7, format!("{a:?} vs {b:?}"))?;
    }

    let samples: Vec<ThermalState> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| ThermalState {
            time: i as f64 * step,
            silicone: v,
            lig: Some(v + 1.0),
        })
        .collect();
    let traj = photothermal_core::Trajectory::from_samples(AssemblyKind::Bilayer, samples).unwrap();
    let back = parse_trajectory(&format_trajectory(&traj), "rt").unwrap();
    for (a, b) in traj.samples().iter().zip(back.samples()) {
        ensure((a.silicone - b.silicone).abs() <= 5e-7, "θ_s drifted")?;
        ensure((a.lig.unwrap() - b.lig.unwrap()).abs() <= 5e-7, "θ_L drifted")?;
    }
    Ok(())
}

/// Sweeps are bit-identical across runs and keep input order.
pub fn check_sweep_determinism(scales: &[f64]) -> Result<(), TestCaseError> {
    let mut cfg = RunConfig::preset("table1_bilayer").unwrap();
    cfg.scenario.config.duration = 20.0;
    cfg.scenario.config.metric_window = 20.0;
    cfg.scenario.config.record_stride = 10;
    let spec = SweepSpec {
        points: SweepPoints::Values {
            param: photothermal_core::ParamName::Scale,
            values: scales.to_vec(),
        },
        outputs: vec![SweepOutput::T63, SweepOutput::Peak, SweepOutput::Steady],
    };
    let a = run_sweep(&cfg, &spec).unwrap();
    let b = run_sweep(&cfg, &spec).unwrap();
    ensure(a == b, "sweep not deterministic")?;
    ensure(a.to_csv() == b.to_csv(), "sweep csv differs")?;
    for (row, &v) in a.rows.iter().zip(scales) {
        ensure(row.value == v, "row order changed")?;
    }
    Ok(())
}
