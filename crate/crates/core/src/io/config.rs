//! Sectioned `key = value` run configuration files and the bundled presets.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::simulate::{Channel, LightInterval, LightSchedule, Scenario, SimConfig};
use crate::thermal_model::{
    AssemblyKind, Environment, HeatSource, LayerProps, ThermalLayer, WallAssembly,
};

/// Environment variable naming a directory searched for `<preset>.ini` before
/// the built-in presets.
pub const PRESET_DIR_VAR: &str = "PHOTOTHERMAL_PRESET_DIR";

const PRESETS: &[(&str, &str)] = &[
    ("table1_single", include_str!("../../presets/table1_single.ini")),
    ("table1_bilayer", include_str!("../../presets/table1_bilayer.ini")),
];

/// Metric choices carried alongside the simulation setup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSettings {
    pub channel: Channel,
    pub plateau_threshold: Option<f64>,
    pub plateau_window: Option<f64>,
}

impl Default for MetricSettings {
    fn default() -> Self {
        MetricSettings {
            channel: Channel::LiquidContact,
            plateau_threshold: None,
            plateau_window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub metrics: MetricSettings,
}

impl RunConfig {
    pub fn preset_names() -> impl Iterator<Item = &'static str> {
        PRESETS.iter().map(|p| p.0)
    }

    /// Loads a named preset, preferring `$PHOTOTHERMAL_PRESET_DIR/<name>.ini`.
    pub fn preset(name: &str) -> Result<Self> {
        if let Some(dir) = std::env::var_os(PRESET_DIR_VAR) {
            let path = Path::new(&dir).join(format!("{name}.ini"));
            if path.is_file() {
                return load_config(&path);
            }
        }
        let (_, text) = PRESETS
            .iter()
            .find(|p| p.0 == name)
            .ok_or_else(|| Error::invalid("preset", format!("unknown preset `{name}`")))?;
        parse_config(text, &format!("<preset {name}>"))
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, &path.display().to_string())
}

struct Entry {
    value: String,
    line: usize,
    used: bool,
}

struct Section {
    line: usize,
    entries: HashMap<String, Entry>,
}

struct Document<'a> {
    origin: &'a str,
    sections: HashMap<String, Section>,
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("assembly", &["kind"]),
    ("environment", &["ambient_temperature"]),
    ("source", &["mode", "power", "temperature", "emissivity"]),
    ("silicone", LAYER_KEYS),
    ("lig", LAYER_KEYS),
    ("schedule", &["intervals"]),
    ("simulation", &["dt", "duration", "record_stride", "metric_window"]),
    ("metrics", &["channel", "plateau_threshold", "plateau_window"]),
];

const LAYER_KEYS: &[&str] = &[
    "specific_heat",
    "density",
    "thickness",
    "area",
    "emissivity",
    "absorptance",
    "conductivity",
    "conv_coeff",
    "conv_faces",
];

impl<'a> Document<'a> {
    fn parse(text: &str, origin: &'a str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: origin.to_string(),
            line,
            message,
        };
        let mut sections: HashMap<String, Section> = HashMap::new();
        let mut current: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with(';') {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(line, format!("malformed section header `{trimmed}`")))?
                    .trim()
                    .to_string();
                if !SECTIONS.iter().any(|s| s.0 == name) {
                    return Err(err(line, format!("unknown section `[{name}]`")));
                }
                if sections.contains_key(&name) {
                    return Err(err(line, format!("duplicate section `[{name}]`")));
                }
                sections.insert(
                    name.clone(),
                    Section {
                        line,
                        entries: HashMap::new(),
                    },
                );
                current = Some(name);
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `key = value`, got `{trimmed}`")))?;
            let key = key.trim().to_string();
            let section_name = current
                .as_ref()
                .ok_or_else(|| err(line, format!("key `{key}` appears before any section")))?;
            let allowed = SECTIONS.iter().find(|s| s.0 == section_name).map(|s| s.1).unwrap_or(&[]);
            if !allowed.contains(&key.as_str()) {
                return Err(err(line, format!("unknown key `{section_name}.{key}`")));
            }
            let section = sections.get_mut(section_name).expect("section registered");
            if section.entries.contains_key(&key) {
                return Err(err(line, format!("duplicate key `{section_name}.{key}`")));
            }
            section.entries.insert(
                key,
                Entry {
                    value: value.trim().to_string(),
                    line,
                    used: false,
                },
            );
        }
        if sections.is_empty() {
            return Err(err(0, "configuration is empty".into()));
        }
        Ok(Document { origin, sections })
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.origin.to_string(),
            line,
            message: message.into(),
        }
    }

    fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    fn line_of(&self, section: &str, key: &str) -> usize {
        self.sections.get(section).map_or(0, |s| {
            s.entries.get(key).map_or(s.line, |e| e.line)
        })
    }

    fn raw(&mut self, section: &str, key: &str) -> Option<(String, usize)> {
        let entry = self.sections.get_mut(section)?.entries.get_mut(key)?;
        entry.used = true;
        Some((entry.value.clone(), entry.line))
    }

    fn optional<T: std::str::FromStr>(&mut self, section: &str, key: &str) -> Result<Option<T>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some((value, line)) => value.parse::<T>().map(Some).map_err(|_| {
                self.err(line, format!("`{section}.{key}`: cannot parse `{value}`"))
            }),
        }
    }

    fn required<T: std::str::FromStr>(&mut self, section: &str, key: &str) -> Result<T> {
        let line = self.line_of(section, key);
        self.optional(section, key)?
            .ok_or_else(|| self.err(line, format!("missing key `{section}.{key}`")))
    }

    /// Re-labels a validation failure with the offending key and its line.
    fn locate(&self, section: &str, err: Error) -> Error {
        match err {
            Error::InvalidParameter { name, reason } => {
                let key = name.split('[').next().unwrap_or(&name);
                self.err(self.line_of(section, key), format!("`{section}.{name}`: {reason}"))
            }
            other => other,
        }
    }
}

fn parse_layer(doc: &mut Document, section: &str, default_faces: u8) -> Result<ThermalLayer> {
    if !doc.has_section(section) {
        return Err(doc.err(0, format!("missing section `[{section}]`")));
    }
    let props = LayerProps {
        specific_heat: doc.required(section, "specific_heat")?,
        density: doc.required(section, "density")?,
        thickness: doc.required(section, "thickness")?,
        area: doc.required(section, "area")?,
        emissivity: doc.required(section, "emissivity")?,
        absorptance: doc.required(section, "absorptance")?,
        conductivity: doc.required(section, "conductivity")?,
        conv_coeff: doc.required(section, "conv_coeff")?,
        conv_faces: doc.optional(section, "conv_faces")?.unwrap_or(default_faces),
    };
    ThermalLayer::new(props).map_err(|e| doc.locate(section, e))
}

fn parse_intervals(text: &str) -> std::result::Result<Vec<LightInterval>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let parts: Vec<&str> = item.split(':').map(str::trim).collect();
            let num = |s: &str| s.parse::<f64>().map_err(|_| format!("bad number `{s}` in `{item}`"));
            match parts.as_slice() {
                [start, end] => Ok(LightInterval {
                    start: num(start)?,
                    end: num(end)?,
                    scale: 1.0,
                }),
                [start, end, scale] => Ok(LightInterval {
                    start: num(start)?,
                    end: num(end)?,
                    scale: num(scale)?,
                }),
                _ => Err(format!("expected `start:end[:scale]`, got `{item}`")),
            }
        })
        .collect()
}

/// Parses and validates a configuration held in memory. `origin` labels errors.
pub fn parse_config(text: &str, origin: &str) -> Result<RunConfig> {
    let mut doc = Document::parse(text, origin)?;

    let kind_line = doc.line_of("assembly", "kind");
    let kind = match doc.required::<String>("assembly", "kind")?.as_str() {
        "single" => AssemblyKind::SingleLayer,
        "bilayer" => AssemblyKind::Bilayer,
        other => {
            return Err(doc.err(kind_line, format!("`assembly.kind`: unknown kind `{other}`")));
        }
    };

    let ambient: f64 = doc.required("environment", "ambient_temperature")?;
    let env = Environment::new(ambient).map_err(|e| doc.locate("environment", e))?;

    let mode_line = doc.line_of("source", "mode");
    let source = match doc.required::<String>("source", "mode")?.as_str() {
        "constant_flux" => {
            let power = doc.required("source", "power")?;
            HeatSource::constant_flux(power)
        }
        "radiative" => {
            let temperature = doc.required("source", "temperature")?;
            let emissivity = doc.required("source", "emissivity")?;
            HeatSource::radiative(temperature, emissivity)
        }
        other => {
            return Err(doc.err(mode_line, format!("`source.mode`: unknown mode `{other}`")));
        }
    }
    .map_err(|e| match e {
        Error::InvalidParameter { name, reason } => {
            let key = name.trim_start_matches("source_").to_string();
            doc.err(doc.line_of("source", &key), format!("`source.{key}`: {reason}"))
        }
        other => other,
    })?;

    let assembly = match kind {
        AssemblyKind::SingleLayer => {
            if doc.has_section("lig") {
                return Err(doc.err(
                    doc.line_of("lig", ""),
                    "`[lig]` is only allowed for a bilayer assembly",
                ));
            }
            WallAssembly::single(parse_layer(&mut doc, "silicone", 2)?)
        }
        AssemblyKind::Bilayer => {
            let silicone = parse_layer(&mut doc, "silicone", 1)?;
            let lig = parse_layer(&mut doc, "lig", 1)?;
            WallAssembly::bilayer(silicone, lig)
        }
    };

    let defaults = SimConfig::default();
    let config = SimConfig {
        dt: doc.optional("simulation", "dt")?.unwrap_or(defaults.dt),
        duration: doc.optional("simulation", "duration")?.unwrap_or(defaults.duration),
        record_stride: doc
            .optional("simulation", "record_stride")?
            .unwrap_or(defaults.record_stride),
        metric_window: doc
            .optional("simulation", "metric_window")?
            .unwrap_or(defaults.metric_window),
    };
    config.validate().map_err(|e| doc.locate("simulation", e))?;

    let schedule = match doc.raw("schedule", "intervals") {
        None => LightSchedule::on_between(0.0, config.duration)?,
        Some((text, line)) => {
            let intervals = parse_intervals(&text)
                .map_err(|m| doc.err(line, format!("`schedule.intervals`: {m}")))?;
            LightSchedule::new(intervals).map_err(|e| match e {
                Error::InvalidParameter { name, reason } => {
                    doc.err(line, format!("`schedule.intervals` {name}: {reason}"))
                }
                other => other,
            })?
        }
    };

    let channel_line = doc.line_of("metrics", "channel");
    let channel = match doc.raw("metrics", "channel") {
        None => Channel::LiquidContact,
        Some((text, _)) => text
            .parse::<Channel>()
            .and_then(|c| c.resolve(kind).map(|_| c))
            .map_err(|e| doc.err(channel_line, format!("`metrics.channel`: {e}")))?,
    };
    let metrics = MetricSettings {
        channel,
        plateau_threshold: doc.optional("metrics", "plateau_threshold")?,
        plateau_window: doc.optional("metrics", "plateau_window")?,
    };
    for (key, v) in [
        ("plateau_threshold", metrics.plateau_threshold),
        ("plateau_window", metrics.plateau_window),
    ] {
        if let Some(v) = v {
            if !(v > 0.0) {
                return Err(doc.err(doc.line_of("metrics", key), format!("`metrics.{key}`: must be > 0")));
            }
        }
    }

    // every key of a section that was never read belongs to an unused section
    for (name, section) in &doc.sections {
        if let Some((key, entry)) = section.entries.iter().find(|(_, e)| !e.used) {
            return Err(doc.err(entry.line, format!("key `{name}.{key}` is not used by this configuration")));
        }
    }

    Ok(RunConfig {
        scenario: Scenario {
            assembly,
            source,
            env,
            schedule,
            config,
        },
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_text() -> &'static str {
        PRESETS[0].1
    }

    #[test]
    fn bilayer_preset_matches_reference_values() {
        let cfg = RunConfig::preset("table1_bilayer").unwrap();
        let sc = &cfg.scenario;
        assert_eq!(sc.assembly, WallAssembly::table1_bilayer());
        assert_eq!(sc.source, HeatSource::ConstantFlux { power: 0.075 });
        assert_eq!(sc.env.ambient(), 298.0);
        assert_eq!(sc.assembly.silicone().props().absorptance, 0.17);
        assert_eq!(sc.assembly.lig().unwrap().props().absorptance, 0.83);
        assert_eq!(sc.config, SimConfig::default());
    }

    #[test]
    fn single_preset_matches_reference_values() {
        let cfg = RunConfig::preset("table1_single").unwrap();
        assert_eq!(cfg.scenario.assembly, WallAssembly::table1_single());
        assert_eq!(cfg.scenario.schedule.scale_at(299.99), 1.0);
        assert_eq!(cfg.scenario.schedule.scale_at(300.0), 0.0);
    }

    #[test]
    fn unknown_preset() {
        assert!(RunConfig::preset("nope").is_err());
    }

    fn expect_parse_error(text: &str) -> (usize, String) {
        match parse_config(text, "test.ini") {
            Err(Error::Parse { line, message, .. }) => (line, message),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_rejected() {
        expect_parse_error("");
        expect_parse_error("# only comments\n\n");
    }

    #[test]
    fn out_of_range_emissivity_names_key_and_line() {
        let text = single_text().replace("emissivity = 0.9", "emissivity = 1.3");
        let (line, msg) = expect_parse_error(&text);
        assert!(msg.contains("silicone.emissivity"), "{msg}");
        let expected = text.lines().position(|l| l.contains("1.3")).unwrap() + 1;
        assert_eq!(line, expected);
    }

    #[test]
    fn unknown_key_and_section_rejected() {
        let text = single_text().replace("density = 1050", "density = 1050\ncolour = red");
        let (_, msg) = expect_parse_error(&text);
        assert!(msg.contains("silicone.colour"));
        let (_, msg) = expect_parse_error(&format!("{}\n[extra]\n", single_text()));
        assert!(msg.contains("[extra]"));
    }

    #[test]
    fn lig_section_on_single_wall_rejected() {
        let text = format!("{}\n{}", single_text(), "[lig]\ndensity = 400\n");
        expect_parse_error(&text);
    }

    #[test]
    fn missing_key_reported() {
        let text = single_text().replace("density = 1050\n", "");
        let (_, msg) = expect_parse_error(&text);
        assert!(msg.contains("silicone.density"));
    }

    #[test]
    fn unparsable_number_reported() {
        let text = single_text().replace("power = 0.075", "power = lots");
        let (_, msg) = expect_parse_error(&text);
        assert!(msg.contains("source.power"));
    }

    #[test]
    fn conv_faces_default_by_kind() {
        let text = single_text().replace("conv_faces = 2\n", "");
        let cfg = parse_config(&text, "t").unwrap();
        assert_eq!(cfg.scenario.assembly.silicone().props().conv_faces, 2);
        let bi = PRESETS[1].1.replace("conv_faces = 1\n", "");
        let cfg = parse_config(&bi, "t").unwrap();
        assert_eq!(cfg.scenario.assembly.silicone().props().conv_faces, 1);
        assert_eq!(cfg.scenario.assembly.lig().unwrap().props().conv_faces, 1);
    }

    #[test]
    fn schedule_parsing() {
        let text = single_text().replace("intervals = 0:300:1", "intervals = 0:100, 150:200:0.5");
        let cfg = parse_config(&text, "t").unwrap();
        let s = &cfg.scenario.schedule;
        assert_eq!(s.intervals().len(), 2);
        assert_eq!(s.scale_at(160.0), 0.5);
        let bad = single_text().replace("intervals = 0:300:1", "intervals = 100:50");
        expect_parse_error(&bad);
        let dark = single_text().replace("intervals = 0:300:1", "intervals =");
        assert!(parse_config(&dark, "t").unwrap().scenario.schedule.intervals().is_empty());
    }

    #[test]
    fn radiative_source_section() {
        let text = single_text().replace(
            "mode = constant_flux\npower = 0.075",
            "mode = radiative\ntemperature = 420\nemissivity = 0.9",
        );
        let cfg = parse_config(&text, "t").unwrap();
        assert_eq!(cfg.scenario.source, HeatSource::radiative(420.0, 0.9).unwrap());
        // power has no meaning for a radiative source
        let stray = text.replace("emissivity = 0.9\n\n[silicone]", "emissivity = 0.9\npower = 1\n\n[silicone]");
        expect_parse_error(&stray);
    }

    #[test]
    fn lig_channel_on_single_wall_rejected() {
        let text = single_text().replace("channel = liquid-contact", "channel = lig");
        expect_parse_error(&text);
    }
}
