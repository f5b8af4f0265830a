//! `photothermal` command-line interface.
//!
//! Exit codes: 0 success, 1 usage error, 2 bad input data, 3 numerical
//! failure, 4 partial sweep failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::calibrate::{fit_with, CalibrationProblem, NelderMeadOptions, ParamName, ParamSpec};
use crate::error::{Error, ExitClass, Result};
use crate::io::config::{load_config, RunConfig};
use crate::io::series::{kelvin_to_celsius, read_any_series, read_series, write_series, write_trajectory};
use crate::io::sweep::{run_sweep, SweepOutput, SweepPoints, SweepSpec};
use crate::metrics::{
    angular_change_ratio, cooling_fit, cycle_degradation, cycle_peaks, normalize_curve,
    plateau_value, response_time_63, FinalConvention, MeasurementSeries,
};
use crate::simulate::Channel;

#[derive(Debug, Parser)]
#[command(name = "photothermal", version, about = "Photothermal actuator wall simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Source {
    /// Bundled preset name (table1_single, table1_bilayer)
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Path to a configuration file
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Source {
    fn load(&self) -> Result<RunConfig> {
        match (&self.preset, &self.config) {
            (Some(name), None) => RunConfig::preset(name),
            (None, Some(path)) => load_config(path),
            _ => Err(Error::invalid("preset", "give exactly one of --preset or --config")),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ChannelArg {
    Silicone,
    Lig,
    LiquidContact,
}

impl From<ChannelArg> for Channel {
    fn from(c: ChannelArg) -> Self {
        match c {
            ChannelArg::Silicone => Channel::Silicone,
            ChannelArg::Lig => Channel::Lig,
            ChannelArg::LiquidContact => Channel::LiquidContact,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConventionArg {
    WindowFinal,
    Plateau,
    Supplied,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the wall model and write the trajectory CSV
    Simulate {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        stride: Option<usize>,
        /// Output path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print steady-state temperatures
    Steady {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
    /// Response metrics of a trajectory or measured series
    Metrics {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "liquid-contact")]
        channel: ChannelArg,
        #[arg(long, value_enum, default_value = "window-final")]
        convention: ConventionArg,
        /// Window for the window-final convention, s
        #[arg(long, default_value_t = 300.0)]
        window: f64,
        /// Final level for the supplied convention
        #[arg(long = "final")]
        final_value: Option<f64>,
        #[arg(long)]
        plateau_threshold: Option<f64>,
        #[arg(long)]
        plateau_window: Option<f64>,
        /// Ambient temperature for the cooling fit, K (default: first sample)
        #[arg(long)]
        ambient: Option<f64>,
        /// Start of the cooling segment, s (default: time of the peak)
        #[arg(long)]
        cooling_from: Option<f64>,
    },
    /// Fit model parameters to a measured temperature series
    Calibrate {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        target: PathBuf,
        /// NAME=LOWER:UPPER:INITIAL, repeatable
        #[arg(long = "param", required = true)]
        params: Vec<String>,
        #[arg(long, value_enum, default_value = "liquid-contact")]
        channel: ChannelArg,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
    },
    /// Evaluate metrics across parameter values or source distances
    Sweep {
        #[command(flatten)]
        source: Source,
        /// Parameter to sweep (with --values)
        #[arg(long, requires = "values")]
        param: Option<String>,
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        /// Source distances in millimetres
        #[arg(long, value_delimiter = ',', conflicts_with = "param")]
        distances_mm: Option<Vec<f64>>,
        #[arg(long, default_value_t = 50.0)]
        d_ref_mm: f64,
        #[arg(long, default_value_t = 1.0)]
        exponent: f64,
        #[arg(long, value_delimiter = ',', default_value = "t63,peak,steady")]
        outputs: Vec<String>,
        #[arg(long)]
        plateau_threshold: Option<f64>,
        #[arg(long)]
        plateau_window: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Normalize a bending-angle series and report plateau, t63 and cycle ratios
    AnalyzeBending {
        file: PathBuf,
        /// Largest angle change inside the plateau window, degrees
        #[arg(long)]
        plateau_threshold: f64,
        #[arg(long)]
        plateau_window: f64,
        /// Cycle length for multi-cycle files, s
        #[arg(long)]
        cycle_period: Option<f64>,
        /// Reference angle for the angular change ratio
        #[arg(long)]
        reference: Option<f64>,
        /// Normalized curve output
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses `argv` (program name first) and runs the command.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// As [`cli_main`] with explicit output streams.
pub fn run_cli<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    0
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    ExitClass::Usage as i32
                }
            };
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_class() as i32
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

fn write_text(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => emit(out, text),
    }
}

fn warn_config(cfg: &RunConfig, err: &mut dyn Write) {
    for w in cfg.scenario.assembly.warnings() {
        let _ = writeln!(err, "warning: {w}");
    }
}

fn kc(k: f64) -> String {
    format!("{k:.4} K ({:.4} C)", kelvin_to_celsius(k))
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Simulate {
            source,
            duration,
            dt,
            stride,
            out: path,
        } => {
            let mut cfg = source.load()?;
            warn_config(&cfg, err);
            let sim = &mut cfg.scenario.config;
            if let Some(d) = duration {
                sim.duration = d;
            }
            if let Some(d) = dt {
                sim.dt = d;
            }
            if let Some(s) = stride {
                sim.record_stride = s;
            }
            let traj = cfg.scenario.run()?;
            match path {
                Some(p) => write_trajectory(&traj, &p)?,
                None => emit(out, &crate::io::series::format_trajectory(&traj))?,
            }
        }
        Command::Steady { source, scale } => {
            let cfg = source.load()?;
            warn_config(&cfg, err);
            let ss = cfg.scenario.steady_state(scale)?;
            let mut text = format!("theta_s = {}\n", kc(ss.silicone));
            if let Some(l) = ss.lig {
                text.push_str(&format!("theta_L = {}\n", kc(l)));
            }
            emit(out, &text)?;
        }
        Command::Metrics {
            file,
            channel,
            convention,
            window,
            final_value,
            plateau_threshold,
            plateau_window,
            ambient,
            cooling_from,
        } => {
            let series = read_any_series(&file, channel.into())?;
            let plateau = match (plateau_threshold, plateau_window) {
                (Some(t), Some(w)) => Some((t, w)),
                (None, None) => None,
                _ => {
                    return Err(Error::invalid(
                        "plateau",
                        "--plateau-threshold and --plateau-window go together",
                    ))
                }
            };
            let conv = match convention {
                ConventionArg::WindowFinal => FinalConvention::WindowFinal { window },
                ConventionArg::Supplied => FinalConvention::Supplied(
                    final_value.ok_or_else(|| Error::invalid("final", "--final is required"))?,
                ),
                ConventionArg::Plateau => {
                    let (threshold, window) = plateau.ok_or_else(|| {
                        Error::invalid("plateau", "plateau convention needs --plateau-threshold/--plateau-window")
                    })?;
                    FinalConvention::Plateau { threshold, window }
                }
            };
            emit(out, &metrics_report(&series, conv, plateau, ambient, cooling_from)?)?;
        }
        Command::Calibrate {
            source,
            target,
            params,
            channel,
            max_iter,
        } => {
            let cfg = source.load()?;
            warn_config(&cfg, err);
            let target = read_any_series(&target, channel.into())?;
            let free = params.iter().map(|p| parse_param_spec(p)).collect::<Result<Vec<_>>>()?;
            let problem = CalibrationProblem::new(target, free, cfg.scenario, channel.into())?;
            let options = NelderMeadOptions {
                max_iterations: max_iter,
                ..Default::default()
            };
            let r = fit_with(&problem, &options)?;
            let mut text = String::new();
            for (name, v) in &r.params {
                text.push_str(&format!("{name}={v:.6}\n"));
            }
            text.push_str(&format!(
                "sse_K2={:.6e}\nrmse_K={:.6e}\niterations={}\nconverged={}\n",
                r.sse, r.rmse, r.iterations, r.converged
            ));
            emit(out, &text)?;
        }
        Command::Sweep {
            source,
            param,
            values,
            distances_mm,
            d_ref_mm,
            exponent,
            outputs,
            plateau_threshold,
            plateau_window,
            out: path,
        } => {
            let mut cfg = source.load()?;
            warn_config(&cfg, err);
            if plateau_threshold.is_some() {
                cfg.metrics.plateau_threshold = plateau_threshold;
            }
            if plateau_window.is_some() {
                cfg.metrics.plateau_window = plateau_window;
            }
            let points = match (param, values, distances_mm) {
                (Some(p), Some(values), None) => SweepPoints::Values {
                    param: p.parse::<ParamName>()?,
                    values,
                },
                (None, None, Some(d)) => SweepPoints::Distances {
                    distances: d.iter().map(|mm| mm * 1e-3).collect(),
                    d_ref: d_ref_mm * 1e-3,
                    exponent,
                },
                _ => {
                    return Err(Error::invalid(
                        "sweep",
                        "give either --param with --values, or --distances-mm",
                    ))
                }
            };
            let outputs = outputs
                .iter()
                .map(|o| o.trim().parse::<SweepOutput>())
                .collect::<Result<Vec<_>>>()?;
            let table = run_sweep(&cfg, &SweepSpec { points, outputs })?;
            write_text(path.as_deref(), &table.to_csv(), out)?;
            if table.failures() > 0 {
                let _ = writeln!(err, "error: {} of {} sweep points failed", table.failures(), table.rows.len());
                return Ok(ExitClass::PartialFailure as i32);
            }
        }
        Command::AnalyzeBending {
            file,
            plateau_threshold,
            plateau_window,
            cycle_period,
            reference,
            out: path,
        } => {
            let series = read_series(&file)?;
            let plateau = plateau_value(&series, plateau_threshold, plateau_window)?;
            let report = response_time_63(
                &series,
                FinalConvention::Plateau {
                    threshold: plateau_threshold,
                    window: plateau_window,
                },
            )?;
            let normalized = normalize_curve(&series, plateau.value)?;
            write_series(&normalized, &path)?;
            let mut text = format!(
                "initial={:.6}\nplateau={:.6}\nplateau_time_s={:.6}\nt63_s={:.6}\n",
                series.first_value(),
                plateau.value,
                plateau.reach_time,
                report.elapsed()
            );
            if let Some(period) = cycle_period {
                let peaks = cycle_peaks(&series, period)?;
                let values: Vec<f64> = peaks.iter().map(|p| p.1).collect();
                let ratios = cycle_degradation(&values)?;
                for (i, ((t, v), r)) in peaks.iter().zip(&ratios).enumerate() {
                    text.push_str(&format!(
                        "cycle_{n}_peak={v:.6}\ncycle_{n}_peak_time_s={t:.6}\ncycle_{n}_ratio={r:.6}\n",
                        n = i + 1
                    ));
                }
            }
            if let Some(r) = reference {
                text.push_str(&format!(
                    "angular_change_ratio={:.6}\n",
                    angular_change_ratio(&series, r)?
                ));
            }
            emit(out, &text)?;
        }
    }
    Ok(0)
}

fn metrics_report(
    series: &MeasurementSeries,
    convention: FinalConvention,
    plateau: Option<(f64, f64)>,
    ambient: Option<f64>,
    cooling_from: Option<f64>,
) -> Result<String> {
    let r = response_time_63(series, convention)?;
    let mut text = format!(
        "series={}\nconvention={}\nbaseline_K={:.6}\nfinal_K={:.6}\nt63_s={:.6}\npeak_K={:.6}\npeak_C={:.6}\npeak_time_s={:.6}\n",
        series.label(),
        convention.name(),
        r.baseline,
        r.final_value,
        r.elapsed(),
        r.peak_value,
        kelvin_to_celsius(r.peak_value),
        r.peak_time
    );
    if let Some((threshold, window)) = plateau {
        let p = plateau_value(series, threshold, window)?;
        text.push_str(&format!(
            "plateau_K={:.6}\nplateau_time_s={:.6}\n",
            p.value, p.reach_time
        ));
    }
    let ambient = ambient.unwrap_or(r.baseline);
    let from = cooling_from.unwrap_or(r.peak_time);
    let fit = series
        .window(from, series.end_time())
        .and_then(|seg| cooling_fit(&seg, ambient));
    match fit {
        Ok(f) => text.push_str(&format!(
            "cooling_tau_s={:.6}\ncooling_r2={:.8}\n",
            f.tau, f.r_squared
        )),
        Err(_) => text.push_str("cooling_tau_s=NA\ncooling_r2=NA\n"),
    }
    Ok(text)
}

fn parse_param_spec(text: &str) -> Result<ParamSpec> {
    let bad = || Error::invalid("param", format!("expected NAME=LOWER:UPPER:INITIAL, got `{text}`"));
    let (name, range) = text.split_once('=').ok_or_else(bad)?;
    let nums: Vec<f64> = range
        .split(':')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let [lower, upper, initial] = nums[..] else {
        return Err(bad());
    };
    ParamSpec::new(name.trim().parse()?, lower, upper, initial)
}
