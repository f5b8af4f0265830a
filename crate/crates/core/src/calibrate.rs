//! Least-squares calibration of model parameters against a measured
//! temperature series, using a bounded Nelder-Mead simplex search.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::metrics::{MeasurementSeries, Unit};
use crate::simulate::{Channel, Scenario};
use crate::thermal_model::{HeatSource, WallAssembly};

/// Model quantities that can be fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamName {
    AlphaS,
    AlphaL,
    HSe,
    HLe,
    Qh,
    Scale,
}

impl ParamName {
    pub const ALL: [ParamName; 6] = [
        ParamName::AlphaS,
        ParamName::AlphaL,
        ParamName::HSe,
        ParamName::HLe,
        ParamName::Qh,
        ParamName::Scale,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ParamName::AlphaS => "alpha_s",
            ParamName::AlphaL => "alpha_L",
            ParamName::HSe => "h_se",
            ParamName::HLe => "h_Le",
            ParamName::Qh => "Q_h",
            ParamName::Scale => "scale",
        }
    }

    /// Writes `value` into the matching field of `scenario`.
    pub fn apply(self, scenario: &mut Scenario, value: f64) -> Result<()> {
        let name = self.as_str();
        let need_lig = || Error::invalid(name, "only defined for a bilayer wall");
        match self {
            ParamName::AlphaS | ParamName::HSe => {
                let silicone = scenario.assembly.silicone().modified(|p| match self {
                    ParamName::AlphaS => p.absorptance = value,
                    _ => p.conv_coeff = value,
                });
                let silicone = silicone.map_err(|e| rename(e, name))?;
                scenario.assembly = match scenario.assembly {
                    WallAssembly::SingleLayer { .. } => WallAssembly::single(silicone),
                    WallAssembly::Bilayer { lig, .. } => WallAssembly::bilayer(silicone, lig),
                };
            }
            ParamName::AlphaL | ParamName::HLe => {
                let WallAssembly::Bilayer { silicone, lig } = scenario.assembly else {
                    return Err(need_lig());
                };
                let lig = lig
                    .modified(|p| match self {
                        ParamName::AlphaL => p.absorptance = value,
                        _ => p.conv_coeff = value,
                    })
                    .map_err(|e| rename(e, name))?;
                scenario.assembly = WallAssembly::bilayer(silicone, lig);
            }
            ParamName::Qh => {
                let HeatSource::ConstantFlux { .. } = scenario.source else {
                    return Err(Error::ModeMismatch(
                        "Q_h can only be fitted for a constant-flux source".into(),
                    ));
                };
                scenario.source = HeatSource::constant_flux(value).map_err(|e| rename(e, name))?;
            }
            ParamName::Scale => {
                scenario.schedule = scenario.schedule.scaled(value).map_err(|e| rename(e, name))?;
            }
        }
        Ok(())
    }
}

fn rename(err: Error, name: &str) -> Error {
    match err {
        Error::InvalidParameter { reason, .. } => Error::invalid(name, reason),
        other => other,
    }
}

impl fmt::Display for ParamName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ParamName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ParamName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::invalid("parameter", format!("unknown parameter `{s}`")))
    }
}

/// A free parameter with its search box and starting value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSpec {
    pub name: ParamName,
    pub lower: f64,
    pub upper: f64,
    pub initial: f64,
}

impl ParamSpec {
    pub fn new(name: ParamName, lower: f64, upper: f64, initial: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::invalid(
                name.as_str(),
                format!("degenerate bounds [{lower}, {upper}]"),
            ));
        }
        if !(lower..=upper).contains(&initial) {
            return Err(Error::invalid(
                name.as_str(),
                format!("initial guess {initial} outside [{lower}, {upper}]"),
            ));
        }
        Ok(ParamSpec {
            name,
            lower,
            upper,
            initial,
        })
    }

    fn width(&self) -> f64 {
        self.upper - self.lower
    }

    fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lower, self.upper)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationProblem {
    target: MeasurementSeries,
    free: Vec<ParamSpec>,
    scenario: Scenario,
    channel: Channel,
}

impl CalibrationProblem {
    pub fn new(
        target: MeasurementSeries,
        free: Vec<ParamSpec>,
        mut scenario: Scenario,
        channel: Channel,
    ) -> Result<Self> {
        if free.is_empty() {
            return Err(Error::invalid("free", "at least one free parameter is required"));
        }
        for (i, p) in free.iter().enumerate() {
            if free[..i].iter().any(|q| q.name == p.name) {
                return Err(Error::invalid(p.name.as_str(), "listed more than once"));
            }
            p.name.apply(&mut scenario.clone(), p.initial)?;
        }
        if target.unit() != Unit::Kelvin {
            return Err(Error::MalformedSeries(format!(
                "calibration target must be in kelvin, got {}",
                target.unit().symbol()
            )));
        }
        if target.start_time() < 0.0 || target.end_time() > scenario.config.duration + 1e-9 {
            return Err(Error::MalformedSeries(format!(
                "target spans [{}, {}] s but the simulation covers [0, {}] s",
                target.start_time(),
                target.end_time(),
                scenario.config.duration
            )));
        }
        channel.resolve(scenario.assembly.kind())?;
        scenario.config.record_stride = 1;
        Ok(CalibrationProblem {
            target,
            free,
            scenario,
            channel,
        })
    }

    pub fn free(&self) -> &[ParamSpec] {
        &self.free
    }

    pub fn target(&self) -> &MeasurementSeries {
        &self.target
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn initial_guess(&self) -> Vec<f64> {
        self.free.iter().map(|p| p.initial).collect()
    }

    /// Scenario with `values` written into the free parameters.
    pub fn scenario_at(&self, values: &[f64]) -> Result<Scenario> {
        if values.len() != self.free.len() {
            return Err(Error::invalid(
                "candidate",
                format!("expected {} values, got {}", self.free.len(), values.len()),
            ));
        }
        let mut scenario = self.scenario.clone();
        for (p, &v) in self.free.iter().zip(values) {
            p.name.apply(&mut scenario, v)?;
        }
        Ok(scenario)
    }
}

/// Sum of squared differences between the simulated channel, linearly
/// interpolated to the target's time stamps, and the target values. K².
pub fn objective(problem: &CalibrationProblem, candidate: &[f64]) -> Result<f64> {
    for (p, &v) in problem.free.iter().zip(candidate) {
        if !(p.lower..=p.upper).contains(&v) {
            return Err(Error::invalid(
                p.name.as_str(),
                format!("candidate {v} outside [{}, {}]", p.lower, p.upper),
            ));
        }
    }
    let traj = problem.scenario_at(candidate)?.run()?;
    let mut sse = 0.0;
    for &(t, measured) in problem.target.points() {
        let r = traj.value_at(problem.channel, t)? - measured;
        sse += r * r;
    }
    Ok(sse)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_iterations: usize,
    /// Converged once `f_worst - f_best <= rel_tol · (|f_best| + |f_worst|) / 2 + abs_tol`.
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Initial simplex edge as a fraction of each parameter's box width.
    pub initial_step: f64,
    /// Weight of the squared normalized distance outside the box.
    pub penalty: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_iterations: 500,
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            initial_step: 0.05,
            penalty: 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub params: Vec<(ParamName, f64)>,
    pub sse: f64,
    pub rmse: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl CalibrationResult {
    pub fn get(&self, name: ParamName) -> Option<f64> {
        self.params.iter().find(|p| p.0 == name).map(|p| p.1)
    }
}

pub fn fit(problem: &CalibrationProblem) -> Result<CalibrationResult> {
    fit_with(problem, &NelderMeadOptions::default())
}

pub fn fit_with(problem: &CalibrationProblem, options: &NelderMeadOptions) -> Result<CalibrationResult> {
    let free = &problem.free;
    let penalized = |x: &[f64]| -> Result<f64> {
        let clamped: Vec<f64> = free.iter().zip(x).map(|(p, &v)| p.clamp(v)).collect();
        let outside: f64 = free
            .iter()
            .zip(x.iter().zip(&clamped))
            .map(|(p, (&v, &c))| ((v - c) / p.width()).powi(2))
            .sum();
        Ok(objective(problem, &clamped)? + options.penalty * outside)
    };

    let x0 = problem.initial_guess();
    let mut vertices = Vec::with_capacity(free.len() + 1);
    vertices.push(x0.clone());
    for (i, p) in free.iter().enumerate() {
        let step = options.initial_step * p.width();
        let mut x = x0.clone();
        x[i] = if x0[i] + step <= p.upper {
            x0[i] + step
        } else {
            x0[i] - step
        };
        vertices.push(x);
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = vertices
        .into_iter()
        .map(|x| penalized(&x).map(|f| (x, f)))
        .collect::<Result<_>>()?;

    let (iterations, converged) = nelder_mead(&mut simplex, &penalized, options)?;

    let best: Vec<f64> = free
        .iter()
        .zip(&simplex[0].0)
        .map(|(p, &v)| p.clamp(v))
        .collect();
    let sse = objective(problem, &best)?;
    Ok(CalibrationResult {
        params: free.iter().map(|p| p.name).zip(best).collect(),
        sse,
        rmse: (sse / problem.target.len() as f64).sqrt(),
        iterations,
        converged,
    })
}

/// Minimizes `f` from the given simplex. On return `simplex[0]` holds the
/// best vertex. Returns the iteration count and whether the spread test passed.
fn nelder_mead(
    simplex: &mut [(Vec<f64>, f64)],
    f: &impl Fn(&[f64]) -> Result<f64>,
    options: &NelderMeadOptions,
) -> Result<(usize, bool)> {
    const REFLECT: f64 = 1.0;
    const EXPAND: f64 = 2.0;
    const CONTRACT: f64 = 0.5;
    const SHRINK: f64 = 0.5;

    let n = simplex.len() - 1;
    let lerp = |from: &[f64], to: &[f64], t: f64| -> Vec<f64> {
        from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect()
    };

    let mut iteration = 0;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (f_best, f_worst) = (simplex[0].1, simplex[n].1);
        let spread = f_worst - f_best;
        if spread <= options.rel_tol * 0.5 * (f_best.abs() + f_worst.abs()) + options.abs_tol {
            return Ok((iteration, true));
        }
        if iteration >= options.max_iterations {
            return Ok((iteration, false));
        }
        iteration += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let worst = simplex[n].0.clone();

        let xr = lerp(&centroid, &worst, -REFLECT);
        let fr = f(&xr)?;
        if fr < f_best {
            let xe = lerp(&centroid, &xr, EXPAND);
            let fe = f(&xe)?;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc, accept) = if fr < f_worst {
            let xc = lerp(&centroid, &xr, CONTRACT);
            let fc = f(&xc)?;
            let ok = fc <= fr;
            (xc, fc, ok)
        } else {
            let xc = lerp(&centroid, &worst, CONTRACT);
            let fc = f(&xc)?;
            let ok = fc < f_worst;
            (xc, fc, ok)
        };
        if accept {
            simplex[n] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x = lerp(&best, &vertex.0, SHRINK);
            let fx = f(&x)?;
            *vertex = (x, fx);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermal_model::AssemblyKind;

    fn short_bilayer() -> Scenario {
        let mut sc = Scenario::table1(AssemblyKind::Bilayer);
        sc.config.duration = 60.0;
        sc
    }

    fn target_from(sc: &Scenario, offset: f64) -> MeasurementSeries {
        let traj = sc.run().unwrap();
        MeasurementSeries::new(
            (0..=60)
                .map(|i| {
                    let t = i as f64;
                    (t, traj.value_at(Channel::LiquidContact, t).unwrap() + offset)
                })
                .collect(),
            Unit::Kelvin,
            "synthetic",
        )
        .unwrap()
    }

    #[test]
    fn param_names_round_trip() {
        for p in ParamName::ALL {
            assert_eq!(p.as_str().parse::<ParamName>().unwrap(), p);
        }
        assert!("alpha".parse::<ParamName>().is_err());
    }

    #[test]
    fn spec_rejects_bad_bounds() {
        assert!(ParamSpec::new(ParamName::AlphaL, 0.5, 0.5, 0.5).is_err());
        assert!(ParamSpec::new(ParamName::AlphaL, 0.0, 1.0, 1.5).is_err());
        assert!(ParamSpec::new(ParamName::AlphaL, 1.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn problem_rejects_lig_param_on_single_wall() {
        let sc = Scenario::table1(AssemblyKind::SingleLayer);
        let target = target_from(&short_bilayer(), 0.0);
        let spec = ParamSpec::new(ParamName::AlphaL, 0.0, 1.0, 0.8).unwrap();
        assert!(CalibrationProblem::new(target, vec![spec], sc, Channel::LiquidContact).is_err());
    }

    #[test]
    fn problem_rejects_target_beyond_duration() {
        let mut sc = short_bilayer();
        let target = target_from(&sc, 0.0);
        sc.config.duration = 30.0;
        let spec = ParamSpec::new(ParamName::AlphaL, 0.0, 1.0, 0.8).unwrap();
        assert!(CalibrationProblem::new(target, vec![spec], sc, Channel::LiquidContact).is_err());
    }

    #[test]
    fn objective_self_consistent_and_offset() {
        let sc = short_bilayer();
        let spec = ParamSpec::new(ParamName::AlphaL, 0.0, 1.0, 0.83).unwrap();
        let exact = CalibrationProblem::new(target_from(&sc, 0.0), vec![spec], sc.clone(), Channel::LiquidContact)
            .unwrap();
        assert!(objective(&exact, &[0.83]).unwrap() < 1e-10);

        let shifted = CalibrationProblem::new(target_from(&sc, 1.0), vec![spec], sc, Channel::LiquidContact)
            .unwrap();
        assert!((objective(&shifted, &[0.83]).unwrap() - 61.0).abs() < 1e-9);
        assert!(objective(&shifted, &[1.5]).is_err());
    }

    #[test]
    fn objective_detects_model_mismatch() {
        let mut single = Scenario::table1(AssemblyKind::SingleLayer);
        single.config.duration = 60.0;
        let target = target_from(&single, 0.0);
        let spec = ParamSpec::new(ParamName::AlphaL, 0.0, 1.0, 0.83).unwrap();
        let p = CalibrationProblem::new(target, vec![spec], short_bilayer(), Channel::Silicone).unwrap();
        assert!(objective(&p, &[0.83]).unwrap() > 0.0);
    }

    #[test]
    fn fit_starting_at_optimum() {
        let sc = short_bilayer();
        let spec = ParamSpec::new(ParamName::AlphaL, 0.0, 1.0, 0.83).unwrap();
        let p = CalibrationProblem::new(target_from(&sc, 0.0), vec![spec], sc, Channel::LiquidContact)
            .unwrap();
        let r = fit(&p).unwrap();
        assert!(r.converged);
        assert!(r.iterations <= 50, "took {} iterations", r.iterations);
        assert!((r.get(ParamName::AlphaL).unwrap() - 0.83).abs() < 1e-4);
    }

    #[test]
    fn fit_respects_bounds() {
        // optimum 0.83 sits above the box; the fit must stop at the wall
        let sc = short_bilayer();
        let spec = ParamSpec::new(ParamName::AlphaL, 0.2, 0.6, 0.4).unwrap();
        let p = CalibrationProblem::new(target_from(&sc, 0.0), vec![spec], sc, Channel::LiquidContact)
            .unwrap();
        let r = fit(&p).unwrap();
        let a = r.get(ParamName::AlphaL).unwrap();
        assert!((0.2..=0.6).contains(&a));
        assert!((a - 0.6).abs() < 1e-6);
        assert!(r.sse <= objective(&p, &[0.4]).unwrap());
    }

    #[test]
    fn iteration_cap_reports_unconverged() {
        let sc = short_bilayer();
        let spec = ParamSpec::new(ParamName::AlphaL, 0.0, 1.0, 0.3).unwrap();
        let p = CalibrationProblem::new(target_from(&sc, 0.0), vec![spec], sc, Channel::LiquidContact)
            .unwrap();
        let opts = NelderMeadOptions {
            max_iterations: 3,
            ..Default::default()
        };
        let r = fit_with(&p, &opts).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
    }
}
