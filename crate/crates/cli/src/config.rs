//! Flat `key = value` scenario documents.
//!
//! One entry per line, `#` starts a comment, keys carry dotted section
//! prefixes and lists are comma separated. Parsing starts from the preset
//! named by the mandatory `scenario` key and applies the document on top.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use asymphot::{DispersionConvention, Refinement};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("invalid value for `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

macro_rules! keyword_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(&self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!(
                        "expected one of {}, got `{other}`",
                        [$($text),+].join(", ")
                    )),
                }
            }
        }
    };
}

keyword_enum!(ScenarioTag {
    FlatSpdc => "flat-spdc",
    PplnCounter => "ppln-counter",
    BraggSfwm => "bragg-sfwm",
    Custom => "custom",
});

keyword_enum!(Process {
    Spdc => "spdc",
    Sfwm => "sfwm",
});

keyword_enum!(MirrorKind {
    Identity => "identity",
    Flat => "flat",
    Bragg => "bragg",
});

keyword_enum!(PolingTarget {
    Dk => "dk",
    Dk1 => "dk1",
    Dk2 => "dk2",
    Dk12 => "dk12",
});

keyword_enum!(SweepParam {
    Length => "length",
    Reflection => "reflection",
    Layers => "layers",
    PolingPeriod => "poling-period",
});

keyword_enum!(SweepScale {
    Micrometres => "um",
    PolingPeriod => "poling-period",
});

keyword_enum!(ChannelLayout {
    Groups => "groups",
    Pairs => "pairs",
});

#[derive(Debug, Clone, PartialEq)]
pub struct StructureConfig {
    pub length_um: f64,
    pub mirrors: MirrorKind,
    pub r1: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BraggConfig {
    pub n1: f64,
    pub n2: f64,
    /// `None` picks `2π / (n_eff k_P)`.
    pub period_um: Option<f64>,
    pub layers: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModesConfig {
    /// Pump, signal, idler.
    pub index: [f64; 3],
    pub group_index: [f64; 3],
    /// `None` picks `k_P`, `k_P/2` and `k_P/2` (SPDC) or `3k_P/2` (SFWM).
    pub ref_wavenumber: [Option<f64>; 3],
    pub convention: DispersionConvention,
    pub channel_left_index: f64,
    pub channel_right_index: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeConfig {
    pub enabled: bool,
    /// `k₀ = center_frac · k_P`.
    pub center_frac: f64,
    /// `σ = width_frac · k₀`.
    pub width_frac: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolingConfig {
    pub enabled: bool,
    pub target: PolingTarget,
    /// `None` quasi-phase-matches `target` at the degenerate point.
    pub period_um: Option<f64>,
    /// `None` starts the first domain at the left face.
    pub offset_um: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    /// Grid centre as a fraction of `k_P`.
    pub center_frac: f64,
    /// Half width as a fraction of the centre; `None` uses `5σ` with the
    /// envelope enabled and `0.2` otherwise.
    pub half_width_frac: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionConfig {
    /// One column per stack size; empty disables the table.
    pub layers: Vec<usize>,
    pub count: usize,
    pub center_frac: f64,
    pub half_width_frac: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepValues {
    Range { start: f64, stop: f64, steps: usize },
    List(Vec<f64>),
}

impl SweepValues {
    pub fn values(&self) -> Vec<f64> {
        match self {
            SweepValues::List(v) => v.clone(),
            SweepValues::Range { start, stop, steps } => {
                if *steps == 1 {
                    return vec![*start];
                }
                let step = (stop - start) / (*steps - 1) as f64;
                (0..*steps)
                    .map(|i| {
                        if i == steps - 1 {
                            *stop
                        } else {
                            start + i as f64 * step
                        }
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub param: SweepParam,
    pub values: SweepValues,
    /// Unit of length sweeps.
    pub scale: SweepScale,
    /// Optional second parameter; one column group per value.
    pub series: Option<(SweepParam, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    /// File stem; `None` uses the scenario tag.
    pub name: Option<String>,
    pub normalize: bool,
    pub spectrum: bool,
    pub channels: ChannelLayout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: ScenarioTag,
    pub process: Process,
    pub pump_wavelength_nm: f64,
    pub structure: StructureConfig,
    pub bragg: BraggConfig,
    pub modes: ModesConfig,
    pub envelope: EnvelopeConfig,
    pub poling: PolingConfig,
    pub counter_terms: bool,
    pub g_eff: f64,
    pub grid: GridConfig,
    pub quadrature: Refinement,
    pub transmission: TransmissionConfig,
    pub sweep: Option<SweepConfig>,
    pub output: OutputConfig,
}

impl ScenarioConfig {
    pub fn name(&self) -> &str {
        self.output
            .name
            .as_deref()
            .unwrap_or_else(|| self.scenario.as_str())
    }

    /// Down-conversion in a flat-mirror cavity, the default for `flat-spdc`
    /// and `custom`.
    fn flat_spdc() -> Self {
        Self {
            scenario: ScenarioTag::FlatSpdc,
            process: Process::Spdc,
            pump_wavelength_nm: 750.0,
            structure: StructureConfig {
                length_um: 10.15,
                mirrors: MirrorKind::Flat,
                r1: 0.3,
                r2: -0.3,
            },
            bragg: BraggConfig {
                n1: 1.5,
                n2: 1.6,
                period_um: None,
                layers: 30,
            },
            modes: ModesConfig {
                index: [2.18, 2.14, 2.22],
                group_index: [2.28, 2.18, 2.27],
                ref_wavenumber: [None; 3],
                convention: DispersionConvention::Standard,
                channel_left_index: 1.0,
                channel_right_index: 1.0,
            },
            envelope: EnvelopeConfig {
                enabled: true,
                center_frac: 0.5,
                width_frac: 0.04,
            },
            poling: PolingConfig {
                enabled: false,
                target: PolingTarget::Dk2,
                period_um: None,
                offset_um: None,
            },
            counter_terms: false,
            g_eff: 1.0,
            grid: GridConfig {
                center_frac: 0.5,
                half_width_frac: None,
                count: 1001,
            },
            quadrature: Refinement::default(),
            transmission: TransmissionConfig {
                layers: Vec::new(),
                count: 200,
                center_frac: 0.5,
                half_width_frac: 0.2,
            },
            sweep: Some(SweepConfig {
                param: SweepParam::Length,
                values: SweepValues::Range {
                    start: 9.0,
                    stop: 11.0,
                    steps: 201,
                },
                scale: SweepScale::Micrometres,
                series: Some((SweepParam::Reflection, vec![0.0, 0.2, 0.4])),
            }),
            output: OutputConfig {
                name: None,
                normalize: true,
                spectrum: true,
                channels: ChannelLayout::Groups,
            },
        }
    }

    fn ppln_counter() -> Self {
        let base = Self::flat_spdc();
        Self {
            scenario: ScenarioTag::PplnCounter,
            structure: StructureConfig {
                length_um: 20.0,
                mirrors: MirrorKind::Identity,
                r1: 0.0,
                r2: 0.0,
            },
            modes: ModesConfig {
                index: [2.18, 2.14, 2.14],
                group_index: [2.28, 2.18, 2.18],
                ..base.modes.clone()
            },
            poling: PolingConfig {
                enabled: true,
                ..base.poling.clone()
            },
            counter_terms: true,
            sweep: Some(SweepConfig {
                param: SweepParam::Length,
                values: SweepValues::Range {
                    start: 10.0,
                    stop: 200.0,
                    steps: 20,
                },
                scale: SweepScale::PolingPeriod,
                series: None,
            }),
            output: OutputConfig {
                spectrum: false,
                channels: ChannelLayout::Pairs,
                ..base.output.clone()
            },
            ..base
        }
    }

    fn bragg_sfwm() -> Self {
        let base = Self::flat_spdc();
        Self {
            scenario: ScenarioTag::BraggSfwm,
            process: Process::Sfwm,
            structure: StructureConfig {
                length_um: 9.98,
                mirrors: MirrorKind::Bragg,
                r1: 0.0,
                r2: 0.0,
            },
            modes: ModesConfig {
                index: [2.18, 2.15, 2.19],
                group_index: [2.28, 2.18, 2.32],
                ..base.modes.clone()
            },
            envelope: EnvelopeConfig {
                enabled: false,
                ..base.envelope.clone()
            },
            grid: GridConfig {
                center_frac: 0.5,
                half_width_frac: Some(0.05),
                count: 8001,
            },
            transmission: TransmissionConfig {
                layers: vec![10, 20, 30],
                ..base.transmission.clone()
            },
            sweep: None,
            ..base
        }
    }

    pub fn defaults_for(tag: ScenarioTag) -> Self {
        match tag {
            ScenarioTag::FlatSpdc => Self::flat_spdc(),
            ScenarioTag::PplnCounter => Self::ppln_counter(),
            ScenarioTag::BraggSfwm => Self::bragg_sfwm(),
            ScenarioTag::Custom => Self {
                scenario: ScenarioTag::Custom,
                sweep: None,
                ..Self::flat_spdc()
            },
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(field, format!("must be positive, got {v}")))
            }
        };
        let reflection = |field: &str, v: f64| {
            if v.is_finite() && v.abs() < 1.0 {
                Ok(())
            } else {
                Err(invalid(field, format!("must satisfy |r| < 1, got {v}")))
            }
        };
        positive("pump.wavelength_nm", self.pump_wavelength_nm)?;
        positive("structure.length_um", self.structure.length_um)?;
        reflection("structure.r1", self.structure.r1)?;
        reflection("structure.r2", self.structure.r2)?;
        positive("bragg.n1", self.bragg.n1)?;
        positive("bragg.n2", self.bragg.n2)?;
        if let Some(p) = self.bragg.period_um {
            positive("bragg.period_um", p)?;
        }
        if self.bragg.layers == 0 {
            return Err(invalid("bragg.layers", "must be at least 1"));
        }
        for (i, name) in ["pump", "signal", "idler"].iter().enumerate() {
            positive(&format!("modes.{name}.index"), self.modes.index[i])?;
            positive(
                &format!("modes.{name}.group_index"),
                self.modes.group_index[i],
            )?;
            if let Some(k) = self.modes.ref_wavenumber[i] {
                positive(&format!("modes.{name}.ref_wavenumber"), k)?;
            }
        }
        positive("channel.left_index", self.modes.channel_left_index)?;
        positive("channel.right_index", self.modes.channel_right_index)?;
        positive("envelope.center_frac", self.envelope.center_frac)?;
        positive("envelope.width_frac", self.envelope.width_frac)?;
        if let Some(p) = self.poling.period_um {
            positive("poling.period_um", p)?;
        }
        if let Some(o) = self.poling.offset_um {
            if !o.is_finite() {
                return Err(invalid("poling.offset_um", "must be finite"));
            }
        }
        if self.poling.enabled && self.process == Process::Sfwm {
            return Err(invalid(
                "poling.enabled",
                "poling applies to down-conversion only",
            ));
        }
        positive("coupling.g_eff", self.g_eff)?;
        positive("grid.center_frac", self.grid.center_frac)?;
        if let Some(h) = self.grid.half_width_frac {
            positive("grid.half_width_frac", h)?;
        }
        if self.grid.count < 3 {
            return Err(invalid("grid.count", "needs at least 3 points"));
        }
        self.quadrature
            .validate()
            .map_err(|e| invalid("quadrature", e.to_string()))?;
        if self.transmission.count < 2 {
            return Err(invalid("transmission.count", "needs at least 2 points"));
        }
        if self.transmission.layers.contains(&0) {
            return Err(invalid(
                "transmission.layers",
                "stack sizes must be at least 1",
            ));
        }
        positive("transmission.center_frac", self.transmission.center_frac)?;
        positive(
            "transmission.half_width_frac",
            self.transmission.half_width_frac,
        )?;
        if let Some(sweep) = &self.sweep {
            match &sweep.values {
                SweepValues::List(v) if v.is_empty() => {
                    return Err(invalid("sweep.values", "sweep list is empty"))
                }
                SweepValues::List(v) if v.iter().any(|x| !x.is_finite()) => {
                    return Err(invalid("sweep.values", "sweep values must be finite"))
                }
                SweepValues::Range { steps: 0, .. } => {
                    return Err(invalid("sweep.steps", "must be at least 1"))
                }
                SweepValues::Range { start, stop, .. }
                    if !(start.is_finite() && stop.is_finite()) =>
                {
                    return Err(invalid("sweep.start", "sweep range must be finite"))
                }
                _ => {}
            }
            let mut params = vec![(sweep.param, "sweep.param")];
            if let Some((p, values)) = &sweep.series {
                if values.is_empty() {
                    return Err(invalid("sweep.series_values", "series list is empty"));
                }
                if *p == sweep.param {
                    return Err(invalid(
                        "sweep.series_param",
                        "series must differ from the swept parameter",
                    ));
                }
                params.push((*p, "sweep.series_param"));
            }
            for (p, field) in params {
                let needs = match p {
                    SweepParam::Reflection if self.structure.mirrors != MirrorKind::Flat => {
                        Some("flat mirrors")
                    }
                    SweepParam::Layers if self.structure.mirrors != MirrorKind::Bragg => {
                        Some("Bragg mirrors")
                    }
                    SweepParam::PolingPeriod if !self.poling.enabled => Some("poling"),
                    _ => None,
                };
                if let Some(what) = needs {
                    return Err(invalid(field, format!("sweeping {p} requires {what}")));
                }
            }
        }
        if let Some(name) = &self.output.name {
            if name.is_empty() || name.contains(['/', '\\']) {
                return Err(invalid(
                    "output.name",
                    "must be a plain, non-empty file stem",
                ));
            }
        }
        Ok(())
    }
}

/// Built-in scenarios, addressable as `@name` on the command line.
pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub config: fn() -> ScenarioConfig,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "flat-spdc",
        summary: "SPDC between flat mirrors (r1 = -r2 = 0.3, l = 10.15 um): spectra per channel group and total rate vs length for r = 0, 0.2, 0.4",
        config: ScenarioConfig::flat_spdc,
    },
    Preset {
        name: "ppln-counter",
        summary: "counter-propagating SPDC in a periodically poled crystal, QPM on dK2: total rate vs length in poling periods",
        config: ScenarioConfig::ppln_counter,
    },
    Preset {
        name: "bragg-sfwm",
        summary: "SFWM between Bragg reflectors (N = 30, l = 9.98 um): stop-band transmission for N = 10, 20, 30 and the signal spectrum",
        config: ScenarioConfig::bragg_sfwm,
    },
    Preset {
        name: "bragg-sfwm-caption",
        summary: "bragg-sfwm with the alternate index set (2.18, 2.14, 2.22)/(2.28, 2.18, 2.27)",
        config: bragg_sfwm_caption,
    },
];

fn bragg_sfwm_caption() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::bragg_sfwm();
    cfg.modes.index = [2.18, 2.14, 2.22];
    cfg.modes.group_index = [2.28, 2.18, 2.27];
    cfg.output.name = Some("bragg-sfwm-caption".into());
    cfg
}

pub fn preset(name: &str) -> Option<ScenarioConfig> {
    PRESETS
        .iter()
        .find(|p| p.name == name)
        .map(|p| (p.config)())
}

struct Entry<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

fn tokenize(text: &str) -> Result<Vec<Entry<'_>>, ConfigError> {
    let mut seen: HashMap<&str, usize> = HashMap::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty()
            || !key
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '.' || c == '_')
        {
            return Err(ConfigError::Syntax {
                line,
                message: format!("malformed key `{key}`"),
            });
        }
        if value.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                message: format!("missing value for `{key}`"),
            });
        }
        if let Some(first) = seen.insert(key, line) {
            return Err(ConfigError::Syntax {
                line,
                message: format!("`{key}` already set on line {first}"),
            });
        }
        out.push(Entry { line, key, value });
    }
    Ok(out)
}

fn parse_value<T: FromStr>(field: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e: T::Err| invalid(field, format!("cannot parse `{value}`: {e}")))
}

fn parse_auto(field: &str, value: &str) -> Result<Option<f64>, ConfigError> {
    if value == "auto" {
        Ok(None)
    } else {
        parse_value(field, value).map(Some)
    }
}

fn parse_list<T: FromStr>(field: &str, value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    if value == "none" {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|v| parse_value(field, v.trim()))
        .collect()
}

#[derive(Default)]
struct SweepDraft {
    param: Option<Option<SweepParam>>,
    start: Option<f64>,
    stop: Option<f64>,
    steps: Option<usize>,
    values: Option<Vec<f64>>,
    scale: Option<SweepScale>,
    series_param: Option<Option<SweepParam>>,
    series_values: Option<Vec<f64>>,
}

impl SweepDraft {
    fn touched(&self) -> bool {
        self.param.is_some()
            || self.start.is_some()
            || self.stop.is_some()
            || self.steps.is_some()
            || self.values.is_some()
            || self.scale.is_some()
            || self.series_param.is_some()
            || self.series_values.is_some()
    }

    fn resolve(self, inherited: Option<SweepConfig>) -> Result<Option<SweepConfig>, ConfigError> {
        if !self.touched() {
            return Ok(inherited);
        }
        let param = match self.param {
            Some(None) => {
                return if self.touched_beyond_param() {
                    Err(invalid(
                        "sweep.param",
                        "sweep keys given while the sweep is disabled",
                    ))
                } else {
                    Ok(None)
                };
            }
            Some(Some(p)) => p,
            None => match &inherited {
                Some(s) => s.param,
                None => {
                    return Err(invalid(
                        "sweep.param",
                        "sweep keys given without a parameter",
                    ))
                }
            },
        };
        let range_keys = self.start.is_some() || self.stop.is_some() || self.steps.is_some();
        let values = match (self.values, range_keys) {
            (Some(_), true) => {
                return Err(invalid(
                    "sweep.values",
                    "give either a value list or start/stop/steps, not both",
                ))
            }
            (Some(list), false) => SweepValues::List(list),
            (None, true) => match (self.start, self.stop, self.steps) {
                (Some(start), Some(stop), Some(steps)) => SweepValues::Range { start, stop, steps },
                _ => {
                    return Err(invalid(
                        "sweep.start",
                        "a range sweep needs sweep.start, sweep.stop and sweep.steps",
                    ))
                }
            },
            (None, false) => match &inherited {
                Some(s) if s.param == param => s.values.clone(),
                _ => return Err(invalid("sweep.values", "no sweep values given")),
            },
        };
        let inherited_same = inherited.as_ref().filter(|s| s.param == param);
        let scale = self
            .scale
            .or(inherited_same.map(|s| s.scale))
            .unwrap_or(SweepScale::Micrometres);
        if scale == SweepScale::PolingPeriod && param != SweepParam::Length {
            return Err(invalid("sweep.scale", "only length sweeps can be scaled"));
        }
        let series = match (self.series_param, self.series_values) {
            (Some(None), None) => None,
            (Some(None), Some(_)) => {
                return Err(invalid(
                    "sweep.series_values",
                    "series values without a series",
                ))
            }
            (Some(Some(p)), Some(v)) => Some((p, v)),
            (Some(Some(_)), None) => {
                return Err(invalid(
                    "sweep.series_values",
                    "series parameter without values",
                ))
            }
            (None, Some(v)) => match inherited_same.and_then(|s| s.series.clone()) {
                Some((p, _)) => Some((p, v)),
                None => {
                    return Err(invalid(
                        "sweep.series_param",
                        "series values without a series",
                    ))
                }
            },
            (None, None) => inherited_same.and_then(|s| s.series.clone()),
        };
        Ok(Some(SweepConfig {
            param,
            values,
            scale,
            series,
        }))
    }

    fn touched_beyond_param(&self) -> bool {
        self.start.is_some()
            || self.stop.is_some()
            || self.steps.is_some()
            || self.values.is_some()
            || self.scale.is_some()
            || matches!(self.series_param, Some(Some(_)))
            || self.series_values.is_some()
    }
}

fn parse_optional_param(field: &str, value: &str) -> Result<Option<SweepParam>, ConfigError> {
    if value == "none" {
        Ok(None)
    } else {
        parse_value(field, value).map(Some)
    }
}

fn mode_slot(name: &str) -> Option<usize> {
    match name {
        "pump" => Some(0),
        "signal" => Some(1),
        "idler" => Some(2),
        _ => None,
    }
}

fn apply(
    cfg: &mut ScenarioConfig,
    sweep: &mut SweepDraft,
    entry: &Entry<'_>,
) -> Result<(), ConfigError> {
    let (k, v) = (entry.key, entry.value);
    match k {
        "scenario" => {}
        "process" => cfg.process = parse_value(k, v)?,
        "pump.wavelength_nm" => cfg.pump_wavelength_nm = parse_value(k, v)?,
        "structure.length_um" => cfg.structure.length_um = parse_value(k, v)?,
        "structure.mirrors" => cfg.structure.mirrors = parse_value(k, v)?,
        "structure.r1" => cfg.structure.r1 = parse_value(k, v)?,
        "structure.r2" => cfg.structure.r2 = parse_value(k, v)?,
        "structure.r" => {
            let r: f64 = parse_value(k, v)?;
            cfg.structure.r1 = r;
            cfg.structure.r2 = -r;
        }
        "bragg.n1" => cfg.bragg.n1 = parse_value(k, v)?,
        "bragg.n2" => cfg.bragg.n2 = parse_value(k, v)?,
        "bragg.period_um" => cfg.bragg.period_um = parse_auto(k, v)?,
        "bragg.layers" => cfg.bragg.layers = parse_value(k, v)?,
        "channel.left_index" => cfg.modes.channel_left_index = parse_value(k, v)?,
        "channel.right_index" => cfg.modes.channel_right_index = parse_value(k, v)?,
        "modes.convention" => cfg.modes.convention = parse_value(k, v)?,
        "envelope.enabled" => cfg.envelope.enabled = parse_value(k, v)?,
        "envelope.center_frac" => cfg.envelope.center_frac = parse_value(k, v)?,
        "envelope.width_frac" => cfg.envelope.width_frac = parse_value(k, v)?,
        "poling.enabled" => cfg.poling.enabled = parse_value(k, v)?,
        "poling.target" => cfg.poling.target = parse_value(k, v)?,
        "poling.period_um" => cfg.poling.period_um = parse_auto(k, v)?,
        "poling.offset_um" => cfg.poling.offset_um = parse_auto(k, v)?,
        "overlap.counter_terms" => cfg.counter_terms = parse_value(k, v)?,
        "coupling.g_eff" => cfg.g_eff = parse_value(k, v)?,
        "grid.center_frac" => cfg.grid.center_frac = parse_value(k, v)?,
        "grid.half_width_frac" => cfg.grid.half_width_frac = parse_auto(k, v)?,
        "grid.count" => cfg.grid.count = parse_value(k, v)?,
        "quadrature.initial_count" => cfg.quadrature.initial_count = parse_value(k, v)?,
        "quadrature.rel_tol" => cfg.quadrature.rel_tol = parse_value(k, v)?,
        "quadrature.max_count" => cfg.quadrature.max_count = parse_value(k, v)?,
        "transmission.layers" => cfg.transmission.layers = parse_list(k, v)?,
        "transmission.count" => cfg.transmission.count = parse_value(k, v)?,
        "transmission.center_frac" => cfg.transmission.center_frac = parse_value(k, v)?,
        "transmission.half_width_frac" => cfg.transmission.half_width_frac = parse_value(k, v)?,
        "sweep.param" => sweep.param = Some(parse_optional_param(k, v)?),
        "sweep.start" => sweep.start = Some(parse_value(k, v)?),
        "sweep.stop" => sweep.stop = Some(parse_value(k, v)?),
        "sweep.steps" => sweep.steps = Some(parse_value(k, v)?),
        "sweep.values" => sweep.values = Some(parse_list(k, v)?),
        "sweep.scale" => sweep.scale = Some(parse_value(k, v)?),
        "sweep.series_param" => sweep.series_param = Some(parse_optional_param(k, v)?),
        "sweep.series_values" => sweep.series_values = Some(parse_list(k, v)?),
        "output.name" => {
            cfg.output.name = if v == "auto" {
                None
            } else {
                Some(v.to_string())
            }
        }
        "output.normalize" => cfg.output.normalize = parse_value(k, v)?,
        "output.spectrum" => cfg.output.spectrum = parse_value(k, v)?,
        "output.channels" => cfg.output.channels = parse_value(k, v)?,
        _ => {
            let parts: Vec<&str> = k.split('.').collect();
            let slot = match parts.as_slice() {
                ["modes", mode, _] => mode_slot(mode),
                _ => None,
            };
            let unknown = || ConfigError::UnknownKey {
                line: entry.line,
                key: k.to_string(),
            };
            let slot = slot.ok_or_else(unknown)?;
            match parts[2] {
                "index" => cfg.modes.index[slot] = parse_value(k, v)?,
                "group_index" => cfg.modes.group_index[slot] = parse_value(k, v)?,
                "ref_wavenumber" => cfg.modes.ref_wavenumber[slot] = parse_auto(k, v)?,
                _ => return Err(unknown()),
            }
        }
    }
    Ok(())
}

/// Parses a scenario document. Every key not given keeps the value of the
/// preset named by `scenario`.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let entries = tokenize(text)?;
    let tag_entry = entries
        .iter()
        .find(|e| e.key == "scenario")
        .ok_or_else(|| invalid("scenario", "every document needs exactly one scenario tag"))?;
    let tag: ScenarioTag = parse_value("scenario", tag_entry.value)?;
    let mut cfg = ScenarioConfig::defaults_for(tag);
    let mut draft = SweepDraft::default();
    for entry in &entries {
        apply(&mut cfg, &mut draft, entry)?;
    }
    cfg.sweep = draft.resolve(cfg.sweep.take())?;
    cfg.validate()?;
    Ok(cfg)
}

fn join<T: fmt::Display>(values: &[T]) -> String {
    if values.is_empty() {
        "none".into()
    } else {
        values
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    }
}

fn auto(v: Option<f64>) -> String {
    v.map_or_else(|| "auto".into(), |x| x.to_string())
}

/// Every key of `cfg` in canonical order. Reparsing the lines yields `cfg`.
pub fn config_lines(cfg: &ScenarioConfig) -> Vec<String> {
    let mut out: Vec<(String, String)> = vec![
        ("scenario".into(), cfg.scenario.to_string()),
        ("process".into(), cfg.process.to_string()),
        (
            "pump.wavelength_nm".into(),
            cfg.pump_wavelength_nm.to_string(),
        ),
        (
            "structure.length_um".into(),
            cfg.structure.length_um.to_string(),
        ),
        (
            "structure.mirrors".into(),
            cfg.structure.mirrors.to_string(),
        ),
        ("structure.r1".into(), cfg.structure.r1.to_string()),
        ("structure.r2".into(), cfg.structure.r2.to_string()),
        ("bragg.n1".into(), cfg.bragg.n1.to_string()),
        ("bragg.n2".into(), cfg.bragg.n2.to_string()),
        ("bragg.period_um".into(), auto(cfg.bragg.period_um)),
        ("bragg.layers".into(), cfg.bragg.layers.to_string()),
        (
            "channel.left_index".into(),
            cfg.modes.channel_left_index.to_string(),
        ),
        (
            "channel.right_index".into(),
            cfg.modes.channel_right_index.to_string(),
        ),
    ];
    for (i, name) in ["pump", "signal", "idler"].iter().enumerate() {
        out.push((
            format!("modes.{name}.index"),
            cfg.modes.index[i].to_string(),
        ));
        out.push((
            format!("modes.{name}.group_index"),
            cfg.modes.group_index[i].to_string(),
        ));
        out.push((
            format!("modes.{name}.ref_wavenumber"),
            auto(cfg.modes.ref_wavenumber[i]),
        ));
    }
    out.extend([
        ("modes.convention".into(), cfg.modes.convention.to_string()),
        ("envelope.enabled".into(), cfg.envelope.enabled.to_string()),
        (
            "envelope.center_frac".into(),
            cfg.envelope.center_frac.to_string(),
        ),
        (
            "envelope.width_frac".into(),
            cfg.envelope.width_frac.to_string(),
        ),
        ("poling.enabled".into(), cfg.poling.enabled.to_string()),
        ("poling.target".into(), cfg.poling.target.to_string()),
        ("poling.period_um".into(), auto(cfg.poling.period_um)),
        ("poling.offset_um".into(), auto(cfg.poling.offset_um)),
        (
            "overlap.counter_terms".into(),
            cfg.counter_terms.to_string(),
        ),
        ("coupling.g_eff".into(), cfg.g_eff.to_string()),
        ("grid.center_frac".into(), cfg.grid.center_frac.to_string()),
        (
            "grid.half_width_frac".into(),
            auto(cfg.grid.half_width_frac),
        ),
        ("grid.count".into(), cfg.grid.count.to_string()),
        (
            "quadrature.initial_count".into(),
            cfg.quadrature.initial_count.to_string(),
        ),
        (
            "quadrature.rel_tol".into(),
            cfg.quadrature.rel_tol.to_string(),
        ),
        (
            "quadrature.max_count".into(),
            cfg.quadrature.max_count.to_string(),
        ),
        ("transmission.layers".into(), join(&cfg.transmission.layers)),
        (
            "transmission.count".into(),
            cfg.transmission.count.to_string(),
        ),
        (
            "transmission.center_frac".into(),
            cfg.transmission.center_frac.to_string(),
        ),
        (
            "transmission.half_width_frac".into(),
            cfg.transmission.half_width_frac.to_string(),
        ),
    ]);
    match &cfg.sweep {
        None => out.push(("sweep.param".into(), "none".into())),
        Some(s) => {
            out.push(("sweep.param".into(), s.param.to_string()));
            match &s.values {
                SweepValues::Range { start, stop, steps } => {
                    out.push(("sweep.start".into(), start.to_string()));
                    out.push(("sweep.stop".into(), stop.to_string()));
                    out.push(("sweep.steps".into(), steps.to_string()));
                }
                SweepValues::List(v) => out.push(("sweep.values".into(), join(v))),
            }
            out.push(("sweep.scale".into(), s.scale.to_string()));
            match &s.series {
                None => out.push(("sweep.series_param".into(), "none".into())),
                Some((p, v)) => {
                    out.push(("sweep.series_param".into(), p.to_string()));
                    out.push(("sweep.series_values".into(), join(v)));
                }
            }
        }
    }
    out.extend([
        (
            "output.name".into(),
            cfg.output.name.clone().unwrap_or_else(|| "auto".into()),
        ),
        ("output.normalize".into(), cfg.output.normalize.to_string()),
        ("output.spectrum".into(), cfg.output.spectrum.to_string()),
        ("output.channels".into(), cfg.output.channels.to_string()),
    ]);
    out.into_iter().map(|(k, v)| format!("{k} = {v}")).collect()
}

pub fn serialize_config(cfg: &ScenarioConfig) -> String {
    let mut s = config_lines(cfg).join("\n");
    s.push('\n');
    s
}

/// Prefix of the metadata lines that carry the resolved configuration.
pub const METADATA_CONFIG_PREFIX: &str = "# config: ";

/// Recovers the configuration embedded in an emitted CSV file.
pub fn config_from_metadata(csv: &str) -> Result<ScenarioConfig, ConfigError> {
    let doc: Vec<&str> = csv
        .lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| l.strip_prefix(METADATA_CONFIG_PREFIX))
        .collect();
    parse_config(&doc.join("\n"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_takes_preset_values() {
        let cfg =
            parse_config("scenario = flat-spdc\npump.wavelength_nm = 750\nstructure.r = 0.3\n")
                .unwrap();
        assert_eq!(cfg.structure.length_um, 10.15);
        assert_eq!(cfg.structure.r1, 0.3);
        assert_eq!(cfg.structure.r2, -0.3);
        assert_eq!(cfg.modes.index, [2.18, 2.14, 2.22]);
        assert_eq!(cfg.modes.group_index, [2.28, 2.18, 2.27]);
        assert_eq!(cfg, preset("flat-spdc").unwrap());
    }

    #[test]
    fn negative_length_names_the_field() {
        let err = parse_config("scenario = flat-spdc\nstructure.length_um = -1\n").unwrap_err();
        match err {
            ConfigError::Invalid { field, .. } => assert_eq!(field, "structure.length_um"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn error_categories_are_distinct() {
        assert!(matches!(
            parse_config("scenario = flat-spdc\nthis line is wrong\n"),
            Err(ConfigError::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            parse_config("scenario = flat-spdc\n\nstructure.colour = red\n"),
            Err(ConfigError::UnknownKey { line: 3, .. })
        ));
        assert!(matches!(
            parse_config("scenario = flat-spdc\nmodes.axion.index = 2\n"),
            Err(ConfigError::UnknownKey { line: 2, .. })
        ));
        assert!(matches!(
            parse_config("scenario = flat-spdc\nstructure.r1 = 1.5\n"),
            Err(ConfigError::Invalid { .. })
        ));
        assert!(matches!(
            parse_config("scenario = flat-spdc\nscenario = custom\n"),
            Err(ConfigError::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            parse_config("structure.r1 = 0.1\n"),
            Err(ConfigError::Invalid { .. })
        ));
    }

    #[test]
    fn every_preset_round_trips() {
        for p in PRESETS {
            let cfg = (p.config)();
            cfg.validate().unwrap();
            let text = serialize_config(&cfg);
            assert_eq!(parse_config(&text).unwrap(), cfg, "{}", p.name);
        }
    }

    #[test]
    fn sweep_keys_resolve() {
        let cfg =
            parse_config("scenario = custom\nsweep.param = length\nsweep.values = 10, 10, 10\n")
                .unwrap();
        let s = cfg.sweep.unwrap();
        assert_eq!(s.values.values(), vec![10.0; 3]);
        assert_eq!(s.series, None);

        let cfg = parse_config("scenario = flat-spdc\nsweep.param = none\n").unwrap();
        assert!(cfg.sweep.is_none());

        let cfg = parse_config("scenario = flat-spdc\nsweep.series_values = 0.1\n").unwrap();
        assert_eq!(
            cfg.sweep.unwrap().series,
            Some((SweepParam::Reflection, vec![0.1]))
        );

        assert!(parse_config("scenario = custom\nsweep.values = 1\n").is_err());
        assert!(
            parse_config("scenario = custom\nsweep.param = layers\nsweep.values = 1, 2\n").is_err()
        );
        assert!(parse_config(
            "scenario = custom\nsweep.param = length\nsweep.values = 1\nsweep.start = 2\n"
        )
        .is_err());
    }

    #[test]
    fn range_sweep_hits_both_ends() {
        let v = SweepValues::Range {
            start: 9.0,
            stop: 11.0,
            steps: 201,
        }
        .values();
        assert_eq!(v.len(), 201);
        assert_eq!(v[0], 9.0);
        assert_eq!(v[200], 11.0);
        assert!((v[100] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let cfg =
            parse_config("# header\n\nscenario = bragg-sfwm   # trailing\n  bragg.layers = 12\n")
                .unwrap();
        assert_eq!(cfg.bragg.layers, 12);
        assert_eq!(cfg.process, Process::Sfwm);
    }
}
