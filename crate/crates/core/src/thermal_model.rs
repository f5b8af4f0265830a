//! Lumped-capacitance heat balance for a light-irradiated actuator wall.
//!
//! A wall is either a single silicone layer or a silicone layer carrying a
//! LIG absorber on its inner face. Each layer is one temperature node. Heat
//! enters by absorbed light (constant flux or grey-body radiation), leaves by
//! convection to the environment, and in the bilayer flows from the LIG node
//! into the silicone node by conduction through the silicone thickness.
//!
//! All quantities are SI: kelvin, seconds, watts, metres.

use crate::error::{Error, Result};

/// Stefan-Boltzmann constant, W·m⁻²·K⁻⁴.
pub const STEFAN_BOLTZMANN: f64 = 5.670_374_42e-8;

/// Largest energy residual accepted from the iterative radiative steady-state solve, W.
pub const STEADY_RESIDUAL_TOL: f64 = 1e-9;

const BISECTION_CAP: usize = 400;

/// Raw material and geometric properties of one wall layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerProps {
    /// J/(kg·K)
    pub specific_heat: f64,
    /// kg/m³
    pub density: f64,
    /// m
    pub thickness: f64,
    /// Heat-transfer area, m².
    pub area: f64,
    pub emissivity: f64,
    /// Fraction of the source power absorbed in constant-flux mode.
    pub absorptance: f64,
    /// W/(m·K). Only the silicone layer's value enters any flux law.
    pub conductivity: f64,
    /// Convective coefficient to the environment, W/(m²·K).
    pub conv_coeff: f64,
    /// Number of faces exchanging convectively with the environment (0, 1 or 2).
    pub conv_faces: u8,
}

impl LayerProps {
    /// Silicone wall properties from the reference parameter set.
    pub fn table1_silicone(conv_faces: u8) -> Self {
        LayerProps {
            specific_heat: 1300.0,
            density: 1050.0,
            thickness: 1.0e-3,
            area: 1.0e-4,
            emissivity: 0.9,
            absorptance: 0.17,
            conductivity: 0.2,
            conv_coeff: 6.0,
            conv_faces,
        }
    }

    /// LIG absorber properties from the reference parameter set.
    pub fn table1_lig() -> Self {
        LayerProps {
            specific_heat: 700.0,
            density: 400.0,
            thickness: 1.0e-4,
            area: 1.0e-4,
            emissivity: 0.95,
            absorptance: 0.83,
            // unused by the flux laws
            conductivity: 1.0,
            conv_coeff: 18.0,
            conv_faces: 1,
        }
    }
}

/// A validated wall layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalLayer {
    props: LayerProps,
}

fn require_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and > 0, got {value}")))
    }
}

fn require_unit_interval(name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must lie in [0, 1], got {value}")))
    }
}

impl ThermalLayer {
    pub fn new(props: LayerProps) -> Result<Self> {
        require_positive("specific_heat", props.specific_heat)?;
        require_positive("density", props.density)?;
        require_positive("thickness", props.thickness)?;
        require_positive("area", props.area)?;
        require_positive("conductivity", props.conductivity)?;
        require_positive("conv_coeff", props.conv_coeff)?;
        require_unit_interval("emissivity", props.emissivity)?;
        require_unit_interval("absorptance", props.absorptance)?;
        if props.conv_faces > 2 {
            return Err(Error::invalid(
                "conv_faces",
                format!("must be 0, 1 or 2, got {}", props.conv_faces),
            ));
        }
        Ok(ThermalLayer { props })
    }

    pub fn props(&self) -> &LayerProps {
        &self.props
    }

    /// Returns a copy with `edit` applied, re-validated.
    pub fn modified(&self, edit: impl FnOnce(&mut LayerProps)) -> Result<Self> {
        let mut props = self.props;
        edit(&mut props);
        ThermalLayer::new(props)
    }

    /// Lumped capacitance `c · ρ · A · x`, J/K.
    pub fn heat_capacity(&self) -> f64 {
        let p = &self.props;
        p.specific_heat * p.density * p.area * p.thickness
    }

    /// Linear convective loss conductance `faces · h · A`, W/K.
    pub fn convective_conductance(&self) -> f64 {
        f64::from(self.props.conv_faces) * self.props.conv_coeff * self.props.area
    }

    /// Conductance `λ · A / x` across this layer's thickness, W/K.
    pub fn conduction_conductance(&self) -> f64 {
        self.props.conductivity * self.props.area / self.props.thickness
    }
}

/// Light source driving the wall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeatSource {
    /// Grey body at a fixed temperature exchanging radiation with each layer.
    RadiativeBody { temperature: f64, emissivity: f64 },
    /// Lamp delivering a fixed power; each layer absorbs its absorptance share.
    ConstantFlux { power: f64 },
}

impl HeatSource {
    pub fn radiative(temperature: f64, emissivity: f64) -> Result<Self> {
        require_positive("source_temperature", temperature)?;
        if !(emissivity > 0.0 && emissivity <= 1.0) {
            return Err(Error::invalid(
                "source_emissivity",
                format!("must lie in (0, 1], got {emissivity}"),
            ));
        }
        Ok(HeatSource::RadiativeBody {
            temperature,
            emissivity,
        })
    }

    pub fn constant_flux(power: f64) -> Result<Self> {
        if !(power.is_finite() && power >= 0.0) {
            return Err(Error::invalid("power", format!("must be finite and >= 0, got {power}")));
        }
        Ok(HeatSource::ConstantFlux { power })
    }

    /// 75 mW constant-flux lamp.
    pub fn table1() -> Self {
        HeatSource::ConstantFlux { power: 0.075 }
    }

    pub fn mode_name(&self) -> &'static str {
        match self {
            HeatSource::RadiativeBody { .. } => "radiative",
            HeatSource::ConstantFlux { .. } => "constant_flux",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Environment {
    ambient_temperature: f64,
}

impl Environment {
    pub fn new(ambient_temperature: f64) -> Result<Self> {
        require_positive("ambient_temperature", ambient_temperature)?;
        Ok(Environment {
            ambient_temperature,
        })
    }

    /// 298 K laboratory ambient.
    pub fn table1() -> Self {
        Environment {
            ambient_temperature: 298.0,
        }
    }

    pub fn ambient(&self) -> f64 {
        self.ambient_temperature
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AssemblyKind {
    SingleLayer,
    Bilayer,
}

impl AssemblyKind {
    pub fn name(self) -> &'static str {
        match self {
            AssemblyKind::SingleLayer => "single",
            AssemblyKind::Bilayer => "bilayer",
        }
    }
}

/// Wall configuration. In the bilayer the LIG node couples to the silicone
/// node through the silicone conductance `λ_s · A / x`; the LIG layer's own
/// conductivity is never used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WallAssembly {
    SingleLayer { silicone: ThermalLayer },
    Bilayer { silicone: ThermalLayer, lig: ThermalLayer },
}

impl WallAssembly {
    pub fn single(silicone: ThermalLayer) -> Self {
        WallAssembly::SingleLayer { silicone }
    }

    pub fn bilayer(silicone: ThermalLayer, lig: ThermalLayer) -> Self {
        WallAssembly::Bilayer { silicone, lig }
    }

    /// Silicone wall convecting from both faces.
    pub fn table1_single() -> Self {
        let silicone = ThermalLayer::new(LayerProps::table1_silicone(2)).expect("valid preset");
        WallAssembly::single(silicone)
    }

    /// Silicone wall with a LIG absorber, one convecting face per layer.
    pub fn table1_bilayer() -> Self {
        let silicone = ThermalLayer::new(LayerProps::table1_silicone(1)).expect("valid preset");
        let lig = ThermalLayer::new(LayerProps::table1_lig()).expect("valid preset");
        WallAssembly::bilayer(silicone, lig)
    }

    pub fn kind(&self) -> AssemblyKind {
        match self {
            WallAssembly::SingleLayer { .. } => AssemblyKind::SingleLayer,
            WallAssembly::Bilayer { .. } => AssemblyKind::Bilayer,
        }
    }

    pub fn silicone(&self) -> &ThermalLayer {
        match self {
            WallAssembly::SingleLayer { silicone } | WallAssembly::Bilayer { silicone, .. } => {
                silicone
            }
        }
    }

    pub fn lig(&self) -> Option<&ThermalLayer> {
        match self {
            WallAssembly::SingleLayer { .. } => None,
            WallAssembly::Bilayer { lig, .. } => Some(lig),
        }
    }

    /// LIG→silicone conductance, W/K. `None` for a single layer.
    pub fn coupling_conductance(&self) -> Option<f64> {
        match self {
            WallAssembly::SingleLayer { .. } => None,
            WallAssembly::Bilayer { silicone, .. } => Some(silicone.conduction_conductance()),
        }
    }

    /// Non-fatal physical plausibility warnings.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let WallAssembly::Bilayer { silicone, lig } = self {
            let sum = silicone.props().absorptance + lig.props().absorptance;
            if sum > 1.0 + 1e-12 {
                out.push(format!(
                    "absorptances sum to {sum:.4} > 1: the layers absorb more than the incident power"
                ));
            }
        }
        out
    }
}

/// Node temperatures at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalState {
    pub time: f64,
    pub silicone: f64,
    /// Present only for a bilayer wall.
    pub lig: Option<f64>,
}

impl ThermalState {
    /// All nodes at ambient at `t = 0`.
    pub fn ambient(assembly: &WallAssembly, env: &Environment) -> Self {
        let theta = env.ambient();
        ThermalState {
            time: 0.0,
            silicone: theta,
            lig: assembly.lig().map(|_| theta),
        }
    }
}

/// Temperature rates of change, K/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub silicone: f64,
    pub lig: Option<f64>,
}

/// Net grey-body radiative exchange from a hot to a cold surface of equal area, W.
pub fn radiative_exchange(
    theta_hot: f64,
    eps_hot: f64,
    theta_cold: f64,
    eps_cold: f64,
    area: f64,
) -> Result<f64> {
    for (name, eps) in [("emissivity_hot", eps_hot), ("emissivity_cold", eps_cold)] {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::invalid(name, format!("must lie in (0, 1], got {eps}")));
        }
    }
    require_positive("theta_hot", theta_hot)?;
    require_positive("theta_cold", theta_cold)?;
    let view = 1.0 / eps_hot + 1.0 / eps_cold - 1.0;
    Ok(STEFAN_BOLTZMANN * (theta_hot.powi(4) - theta_cold.powi(4)) * area / view)
}

/// Power absorbed by `layer` from a constant-flux source, W.
pub fn absorbed_power(source: &HeatSource, layer: &ThermalLayer, scale: f64) -> Result<f64> {
    match source {
        HeatSource::ConstantFlux { power } => Ok(layer.props().absorptance * power * scale),
        HeatSource::RadiativeBody { .. } => Err(Error::ModeMismatch(
            "absorbed_power requires a constant-flux source".into(),
        )),
    }
}

/// Conductive flow from the LIG node into the silicone node, W.
pub fn conduction_flow(theta_lig: f64, theta_silicone: f64, silicone: &ThermalLayer) -> f64 {
    silicone.conduction_conductance() * (theta_lig - theta_silicone)
}

/// Power delivered to a layer at temperature `theta` by the source, W.
fn source_input(source: &HeatSource, layer: &ThermalLayer, theta: f64, scale: f64) -> Result<f64> {
    match *source {
        HeatSource::ConstantFlux { .. } => absorbed_power(source, layer, scale),
        HeatSource::RadiativeBody {
            temperature,
            emissivity,
        } => {
            if scale == 0.0 {
                return Ok(0.0);
            }
            let props = layer.props();
            let q = radiative_exchange(temperature, emissivity, theta, props.emissivity, props.area)?;
            Ok(scale * q)
        }
    }
}

fn check_scale(scale: f64) -> Result<()> {
    if scale.is_finite() && scale >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("scale", format!("must be finite and >= 0, got {scale}")))
    }
}

/// dθ_s/dt for a single silicone wall, K/s.
pub fn rhs_single(
    state: &ThermalState,
    assembly: &WallAssembly,
    source: &HeatSource,
    env: &Environment,
    scale: f64,
) -> Result<f64> {
    let WallAssembly::SingleLayer { silicone } = assembly else {
        return Err(Error::KindMismatch {
            expected: AssemblyKind::SingleLayer.name(),
            found: assembly.kind().name(),
        });
    };
    check_scale(scale)?;
    let q_in = source_input(source, silicone, state.silicone, scale)?;
    let q_out = silicone.convective_conductance() * (state.silicone - env.ambient());
    Ok((q_in - q_out) / silicone.heat_capacity())
}

/// `(dθ_s/dt, dθ_L/dt)` for the silicone + LIG wall, K/s.
pub fn rhs_bilayer(
    state: &ThermalState,
    assembly: &WallAssembly,
    source: &HeatSource,
    env: &Environment,
    scale: f64,
) -> Result<(f64, f64)> {
    let WallAssembly::Bilayer { silicone, lig } = assembly else {
        return Err(Error::KindMismatch {
            expected: AssemblyKind::Bilayer.name(),
            found: assembly.kind().name(),
        });
    };
    check_scale(scale)?;
    let theta_s = state.silicone;
    let theta_l = state
        .lig
        .ok_or_else(|| Error::invalid("lig_temperature", "missing for a bilayer state"))?;
    let ambient = env.ambient();

    let q_ls = conduction_flow(theta_l, theta_s, silicone);
    let q_lig = source_input(source, lig, theta_l, scale)?
        - lig.convective_conductance() * (theta_l - ambient)
        - q_ls;
    let q_sil = source_input(source, silicone, theta_s, scale)?
        - silicone.convective_conductance() * (theta_s - ambient)
        + q_ls;
    Ok((q_sil / silicone.heat_capacity(), q_lig / lig.heat_capacity()))
}

/// Dispatches to the right-hand side matching the assembly kind.
pub fn derivatives(
    state: &ThermalState,
    assembly: &WallAssembly,
    source: &HeatSource,
    env: &Environment,
    scale: f64,
) -> Result<Rates> {
    match assembly {
        WallAssembly::SingleLayer { .. } => Ok(Rates {
            silicone: rhs_single(state, assembly, source, env, scale)?,
            lig: None,
        }),
        WallAssembly::Bilayer { .. } => {
            let (ds, dl) = rhs_bilayer(state, assembly, source, env, scale)?;
            Ok(Rates {
                silicone: ds,
                lig: Some(dl),
            })
        }
    }
}

/// Stored-energy rate plus convective losses minus absorbed power, W.
///
/// Zero up to rounding for any state: the conduction term cancels between
/// the two node balances.
pub fn energy_residual(
    state: &ThermalState,
    assembly: &WallAssembly,
    source: &HeatSource,
    env: &Environment,
    scale: f64,
) -> Result<f64> {
    let rates = derivatives(state, assembly, source, env, scale)?;
    let ambient = env.ambient();
    let silicone = assembly.silicone();
    let mut residual = silicone.heat_capacity() * rates.silicone
        + silicone.convective_conductance() * (state.silicone - ambient)
        - source_input(source, silicone, state.silicone, scale)?;
    if let (Some(lig), Some(theta_l), Some(rate_l)) = (assembly.lig(), state.lig, rates.lig) {
        residual += lig.heat_capacity() * rate_l + lig.convective_conductance() * (theta_l - ambient)
            - source_input(source, lig, theta_l, scale)?;
    }
    Ok(residual)
}

/// Temperatures at which every node balance vanishes.
///
/// Constant-flux drive is solved in closed form; radiative drive by nested
/// bisection on the monotone node balances.
pub fn steady_state(
    assembly: &WallAssembly,
    source: &HeatSource,
    env: &Environment,
    scale: f64,
) -> Result<ThermalState> {
    check_scale(scale)?;
    let ambient = env.ambient();
    let (silicone, lig) = match *source {
        HeatSource::ConstantFlux { .. } => steady_linear(assembly, source, ambient, scale)?,
        HeatSource::RadiativeBody { temperature, .. } => {
            steady_radiative(assembly, source, ambient, temperature, scale)?
        }
    };
    Ok(ThermalState {
        time: f64::INFINITY,
        silicone,
        lig,
    })
}

fn steady_linear(
    assembly: &WallAssembly,
    source: &HeatSource,
    ambient: f64,
    scale: f64,
) -> Result<(f64, Option<f64>)> {
    match assembly {
        WallAssembly::SingleLayer { silicone } => {
            let p = absorbed_power(source, silicone, scale)?;
            if p == 0.0 {
                return Ok((ambient, None));
            }
            let g = silicone.convective_conductance();
            if g <= 0.0 {
                return Err(Error::Numerical(
                    "driven wall without convective loss has no finite steady state".into(),
                ));
            }
            Ok((ambient + p / g, None))
        }
        WallAssembly::Bilayer { silicone, lig } => {
            let p_s = absorbed_power(source, silicone, scale)?;
            let p_l = absorbed_power(source, lig, scale)?;
            if p_s == 0.0 && p_l == 0.0 {
                return Ok((ambient, Some(ambient)));
            }
            let g_s = silicone.convective_conductance();
            let g_l = lig.convective_conductance();
            let k = silicone.conduction_conductance();
            // (g_s + k) u - k v = p_s ;  -k u + (g_l + k) v = p_l
            let det = (g_s + k) * (g_l + k) - k * k;
            if det <= 0.0 {
                return Err(Error::Numerical(
                    "driven wall without convective loss has no finite steady state".into(),
                ));
            }
            let u = (p_s * (g_l + k) + k * p_l) / det;
            let v = ((g_s + k) * p_l + k * p_s) / det;
            Ok((ambient + u, Some(ambient + v)))
        }
    }
}

/// Root of a non-increasing function on `[lo, hi]` with `f(lo) >= 0 >= f(hi)`.
fn bisect_decreasing(mut f: impl FnMut(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<f64> {
    for _ in 0..BISECTION_CAP {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Numerical(format!(
        "bisection did not converge in {BISECTION_CAP} iterations"
    )))
}

fn steady_radiative(
    assembly: &WallAssembly,
    source: &HeatSource,
    ambient: f64,
    source_temperature: f64,
    scale: f64,
) -> Result<(f64, Option<f64>)> {
    if scale == 0.0 {
        return Ok((ambient, assembly.lig().map(|_| ambient)));
    }
    let lo = ambient.min(source_temperature);
    let hi = ambient.max(source_temperature);
    let residual_check = |residual: f64, node: &str| {
        if residual.abs() < STEADY_RESIDUAL_TOL {
            Ok(())
        } else {
            Err(Error::Numerical(format!(
                "{node} steady-state residual {residual:e} W exceeds {STEADY_RESIDUAL_TOL:e} W"
            )))
        }
    };

    match assembly {
        WallAssembly::SingleLayer { silicone } => {
            let g = silicone.convective_conductance();
            let balance = |theta: f64| -> Result<f64> {
                Ok(source_input(source, silicone, theta, scale)? - g * (theta - ambient))
            };
            let theta = bisect_decreasing(balance, lo, hi)?;
            residual_check(balance(theta)?, "silicone")?;
            Ok((theta, None))
        }
        WallAssembly::Bilayer { silicone, lig } => {
            let g_s = silicone.convective_conductance();
            let g_l = lig.convective_conductance();
            let k = silicone.conduction_conductance();
            let lig_balance = |theta_l: f64, theta_s: f64| -> Result<f64> {
                Ok(source_input(source, lig, theta_l, scale)?
                    - g_l * (theta_l - ambient)
                    - k * (theta_l - theta_s))
            };
            let solve_lig = |theta_s: f64| -> Result<f64> {
                bisect_decreasing(
                    |theta_l| lig_balance(theta_l, theta_s),
                    lo.min(theta_s),
                    hi.max(theta_s),
                )
            };
            let silicone_balance = |theta_s: f64, theta_l: f64| -> Result<f64> {
                Ok(source_input(source, silicone, theta_s, scale)? - g_s * (theta_s - ambient)
                    + k * (theta_l - theta_s))
            };
            let theta_s = bisect_decreasing(
                |theta_s| silicone_balance(theta_s, solve_lig(theta_s)?),
                lo,
                hi,
            )?;
            let theta_l = solve_lig(theta_s)?;
            residual_check(lig_balance(theta_l, theta_s)?, "lig")?;
            residual_check(silicone_balance(theta_s, theta_l)?, "silicone")?;
            Ok((theta_s, Some(theta_l)))
        }
    }
}
