//! Lumped-capacitance photothermal model of a light-driven soft-actuator wall.
//!
//! Two wall configurations are modeled: a bare silicone layer, and a silicone
//! layer carrying a laser-induced graphene (LIG) absorber on its inner face.
//! The crate integrates their heat balances under a light schedule, extracts
//! response metrics from simulated or measured series, and calibrates model
//! parameters against measurements.

pub mod calibrate;
pub mod error;
pub mod io;
pub mod metrics;
pub mod simulate;
pub mod thermal_model;

pub use calibrate::{fit, objective, CalibrationProblem, CalibrationResult, ParamName, ParamSpec};
pub use error::{Error, ExitClass, Result};
pub use metrics::{FinalConvention, MeasurementSeries, ResponseReport, Unit};
pub use simulate::{Channel, LightInterval, LightSchedule, Scenario, SimConfig, Trajectory};
pub use thermal_model::{
    AssemblyKind, Environment, HeatSource, LayerProps, ThermalLayer, ThermalState, WallAssembly,
};
