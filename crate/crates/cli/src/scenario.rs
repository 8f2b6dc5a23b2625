use std::f64::consts::PI;

use asymphot::{
    bragg_stack, converged_total_rate, effective_index, mismatch_set_sfwm, mismatch_set_spdc,
    normalize, qpm_period, spectral_rate, stopband_center, transmission, wavenumber_from_nm,
    BraggSpec, Cavity, ChannelGroup, ChannelPair, DetectorEnvelope, EffectiveCoupling, MismatchSet,
    ModeSet, Normalization, PairSource, PolingProfile, SfwmModel, SpdcModel, TotalRates,
    WavenumberGrid,
};
use rayon::prelude::*;

use crate::config::{
    config_lines, ChannelLayout, ConfigError, MirrorKind, PolingTarget, Process, ScenarioConfig,
    SweepParam, SweepScale, METADATA_CONFIG_PREFIX,
};
use crate::table::{format_number, OutputTable};
use crate::CliError;

pub enum Source {
    Spdc(SpdcModel),
    Sfwm(SfwmModel),
}

impl Source {
    pub fn as_dyn(&self) -> &dyn PairSource {
        match self {
            Source::Spdc(m) => m,
            Source::Sfwm(m) => m,
        }
    }
}

/// Model objects built from a configuration.
pub struct Resolved {
    pub k_pump: f64,
    pub modes: ModeSet,
    pub cavity: Cavity,
    pub bragg_period: f64,
    pub poling: PolingProfile,
    pub envelope: DetectorEnvelope,
    pub k_min: f64,
    pub k_max: f64,
    pub source: Source,
}

fn model_err(context: impl Into<String>) -> impl FnOnce(asymphot::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Model { context, source }
}

fn target_mismatch(target: PolingTarget, mm: &MismatchSet) -> f64 {
    match target {
        PolingTarget::Dk => mm.dk,
        PolingTarget::Dk1 => mm.dk1,
        PolingTarget::Dk2 => mm.dk2,
        PolingTarget::Dk12 => mm.dk12,
    }
}

pub fn resolve(cfg: &ScenarioConfig) -> Result<Resolved, CliError> {
    cfg.validate()?;
    let k_pump =
        wavenumber_from_nm(cfg.pump_wavelength_nm).map_err(model_err("pump wavelength"))?;
    let idler_ref = match cfg.process {
        Process::Spdc => 0.5 * k_pump,
        Process::Sfwm => 1.5 * k_pump,
    };
    let defaults = [k_pump, 0.5 * k_pump, idler_ref];
    let refs: [f64; 3] =
        std::array::from_fn(|i| cfg.modes.ref_wavenumber[i].unwrap_or(defaults[i]));
    let mut modes = ModeSet::with_references(refs, cfg.modes.index, cfg.modes.group_index)
        .map_err(model_err("mode dispersions"))?
        .with_convention(cfg.modes.convention);
    modes.channel_left_index = cfg.modes.channel_left_index;
    modes.channel_right_index = cfg.modes.channel_right_index;

    let bragg_period = cfg
        .bragg
        .period_um
        .unwrap_or_else(|| 2.0 * PI / (effective_index(cfg.bragg.n1, cfg.bragg.n2) * k_pump));
    let s = &cfg.structure;
    let cavity = match s.mirrors {
        MirrorKind::Identity => Cavity::bare(s.length_um),
        MirrorKind::Flat => Cavity::flat(s.r1, s.r2, s.length_um),
        MirrorKind::Bragg => Cavity::bragg(
            cfg.bragg.n1,
            cfg.bragg.n2,
            bragg_period,
            cfg.bragg.layers,
            s.length_um,
        ),
    }
    .map_err(model_err("structure"))?;

    let poling = if cfg.poling.enabled {
        let period = match cfg.poling.period_um {
            Some(p) => p,
            None => {
                let mm = mismatch_set_spdc(&modes, 0.5 * k_pump, 0.5 * k_pump, k_pump)
                    .map_err(model_err("poling period"))?;
                qpm_period(target_mismatch(cfg.poling.target, &mm))
                    .map_err(model_err("poling period"))?
            }
        };
        let offset = cfg.poling.offset_um.unwrap_or(-0.5 * s.length_um);
        PolingProfile::new(period, offset).map_err(model_err("poling"))?
    } else {
        PolingProfile::disabled()
    };

    let center = cfg.envelope.center_frac * k_pump;
    let envelope = if cfg.envelope.enabled {
        DetectorEnvelope::gaussian(center, cfg.envelope.width_frac * center)
            .map_err(model_err("detector envelope"))?
    } else {
        DetectorEnvelope::disabled()
    };
    let grid_center = cfg.grid.center_frac * k_pump;
    let half_width = match cfg.grid.half_width_frac {
        Some(h) => h * grid_center,
        None if cfg.envelope.enabled => 5.0 * envelope.width,
        None => 0.2 * grid_center,
    };

    let coupling = EffectiveCoupling::new(cfg.g_eff).map_err(model_err("coupling"))?;
    let source = match cfg.process {
        Process::Spdc => Source::Spdc(SpdcModel {
            cavity,
            modes,
            coupling,
            poling,
            counter_terms: cfg.counter_terms,
            k_pump,
        }),
        Process::Sfwm => Source::Sfwm(SfwmModel {
            cavity,
            modes,
            coupling,
            k_pump,
        }),
    };
    Ok(Resolved {
        k_pump,
        modes,
        cavity,
        bragg_period,
        poling,
        envelope,
        k_min: grid_center - half_width,
        k_max: grid_center + half_width,
        source,
    })
}

/// Degenerate-point mismatches, reported in metadata.
fn degenerate_mismatch(r: &Resolved, process: Process) -> Option<MismatchSet> {
    let k = r.k_pump;
    match process {
        Process::Spdc => mismatch_set_spdc(&r.modes, 0.5 * k, 0.5 * k, k).ok(),
        Process::Sfwm => mismatch_set_sfwm(&r.modes, 0.5 * k, 1.5 * k, k, k).ok(),
    }
}

fn header_metadata(cfg: &ScenarioConfig, r: &Resolved, kind: &str) -> Vec<String> {
    let mut m = vec![
        format!("asymphot {}", env!("CARGO_PKG_VERSION")),
        format!("table: {kind}"),
    ];
    m.extend(
        config_lines(cfg)
            .into_iter()
            .map(|l| format!("{}{l}", METADATA_CONFIG_PREFIX.trim_start_matches("# "))),
    );
    m.push(format!(
        "derived: k_pump_rad_per_um = {}",
        format_number(r.k_pump)
    ));
    if cfg.structure.mirrors == MirrorKind::Bragg || !cfg.transmission.layers.is_empty() {
        m.push(format!(
            "derived: bragg_period_um = {}",
            format_number(r.bragg_period)
        ));
    }
    if r.poling.enabled {
        m.push(format!(
            "derived: poling_period_um = {}, poling_offset_um = {}",
            format_number(r.poling.period),
            format_number(r.poling.offset)
        ));
    }
    if let Some(mm) = degenerate_mismatch(r, cfg.process) {
        m.push(format!(
            "derived: degenerate mismatch dk = {}, dk1 = {}, dk2 = {}, dk12 = {}",
            format_number(mm.dk),
            format_number(mm.dk1),
            format_number(mm.dk2),
            format_number(mm.dk12)
        ));
    }
    m
}

fn normalization_line(column: &str, n: &Normalization) -> String {
    format!(
        "normalization: {column} raw_max = {}, normalized = {}",
        format_number(n.raw_max),
        n.normalized
    )
}

/// Per-column output, normalized if requested, with its record.
fn finish_column(
    name: &str,
    raw: Vec<Option<f64>>,
    normalize_output: bool,
    metadata: &mut Vec<String>,
) -> Vec<Option<f64>> {
    if normalize_output {
        let (values, record) = normalize(&raw);
        metadata.push(normalization_line(name, &record));
        values
    } else {
        let raw_max = raw.iter().flatten().fold(0.0f64, |m, v| m.max(*v));
        metadata.push(normalization_line(
            name,
            &Normalization {
                raw_max,
                normalized: false,
            },
        ));
        raw
    }
}

/// Channel columns of a layout, each as a list of pairs to add up.
fn channel_columns(layout: ChannelLayout) -> Vec<(&'static str, Vec<ChannelPair>)> {
    match layout {
        ChannelLayout::Groups => ChannelGroup::ALL
            .iter()
            .map(|g| (g.label(), g.pairs().to_vec()))
            .collect(),
        ChannelLayout::Pairs => ChannelPair::ALL
            .iter()
            .zip(["RR", "LL", "RL", "LR"])
            .map(|(p, label)| (label, vec![*p]))
            .collect(),
    }
}

fn combine(per_pair: &[f64; 4], pairs: &[ChannelPair]) -> f64 {
    pairs.iter().map(|p| per_pair[p.index()]).sum()
}

fn totals_metadata(layout: ChannelLayout, totals: &TotalRates) -> Vec<String> {
    let parts: Vec<String> = channel_columns(layout)
        .iter()
        .map(|(label, pairs)| {
            format!(
                "{label} = {}",
                format_number(combine(&totals.per_pair, pairs))
            )
        })
        .collect();
    vec![
        format!("total: {}", parts.join(", ")),
        format!(
            "convergence: points = {}, last_relative_change = {}, converged = {}",
            totals.quadrature.count,
            format_number(totals.quadrature.last_change),
            totals.quadrature.converged
        ),
    ]
}

/// Transmission of isolated stacks over the configured window, one column
/// per stack size.
pub fn transmission_table(cfg: &ScenarioConfig) -> Result<OutputTable, CliError> {
    let r = resolve(cfg)?;
    let t = &cfg.transmission;
    let center = t.center_frac * r.k_pump;
    let grid = WavenumberGrid::new(
        center - t.half_width_frac * center,
        center + t.half_width_frac * center,
        t.count,
    )
    .map_err(model_err("transmission grid"))?;
    let mut columns = vec!["k_rad_per_um".to_string()];
    columns.extend(t.layers.iter().map(|n| format!("T_N{n}")));
    let mut table = OutputTable::new("transmission", columns);
    table.metadata = header_metadata(cfg, &r, "transmission");
    table.metadata.push(format!(
        "derived: stop_band_center_rad_per_um = {}",
        format_number(stopband_center(cfg.bragg.n1, cfg.bragg.n2, r.bragg_period))
    ));
    table
        .metadata
        .push("normalization: none, transmission is absolute".into());
    let rows: Vec<Vec<Option<f64>>> = grid
        .values
        .par_iter()
        .map(|&k| {
            let mut row = vec![Some(k)];
            for &layers in &t.layers {
                let spec = BraggSpec {
                    n1: cfg.bragg.n1,
                    n2: cfg.bragg.n2,
                    period: r.bragg_period,
                    layers,
                    start: 0.0,
                };
                let m = bragg_stack(&spec, k).map_err(model_err(format!("stack N = {layers}")))?;
                row.push(match transmission(&m) {
                    Ok(v) => Some(v),
                    Err(e) if e.is_singular() => None,
                    Err(e) => return Err(model_err(format!("stack N = {layers} at k = {k}"))(e)),
                });
            }
            Ok(row)
        })
        .collect::<Result<_, CliError>>()?;
    let singular: Vec<String> = rows
        .iter()
        .filter(|row| row.iter().any(Option::is_none))
        .map(|row| format_number(row[0].unwrap_or(f64::NAN)))
        .collect();
    table.metadata.push(singular_line("k", &singular));
    for row in rows {
        table.push_row(row);
    }
    Ok(table)
}

fn singular_line(axis: &str, points: &[String]) -> String {
    if points.is_empty() {
        "singular: none".into()
    } else {
        format!(
            "singular: empty fields where the cavity solution has a pole, {axis} = {}",
            points.join("; ")
        )
    }
}

/// Spectral rate per channel column on the configured signal grid.
pub fn spectrum_table(cfg: &ScenarioConfig) -> Result<OutputTable, CliError> {
    let r = resolve(cfg)?;
    let grid =
        WavenumberGrid::new(r.k_min, r.k_max, cfg.grid.count).map_err(model_err("signal grid"))?;
    let spec =
        spectral_rate(r.source.as_dyn(), &r.envelope, &grid).map_err(model_err("spectral rate"))?;
    let layout = channel_columns(cfg.output.channels);
    let mut columns = vec!["k1_rad_per_um".to_string()];
    columns.extend(layout.iter().map(|(label, _)| format!("S_{label}")));
    let mut table = OutputTable::new("spectrum", columns.clone());
    let mut metadata = header_metadata(cfg, &r, "spectrum");
    let mut data: Vec<Vec<Option<f64>>> = vec![grid.values.iter().map(|k| Some(*k)).collect()];
    for ((_, pairs), name) in layout.iter().zip(&columns[1..]) {
        let raw: Vec<Option<f64>> = (0..grid.count())
            .map(|i| pairs.iter().map(|p| spec.raw[p.index()][i]).sum())
            .collect();
        data.push(finish_column(
            name,
            raw,
            cfg.output.normalize,
            &mut metadata,
        ));
    }
    let singular: Vec<String> = spec
        .singular_points()
        .into_iter()
        .map(format_number)
        .collect();
    metadata.push(singular_line("k1", &singular));
    match converged_total_rate(
        r.source.as_dyn(),
        &r.envelope,
        r.k_min,
        r.k_max,
        &cfg.quadrature,
    ) {
        Ok(totals) => metadata.extend(totals_metadata(cfg.output.channels, &totals)),
        Err(e) if e.is_singular() => metadata.push(format!("total: not computed, {e}")),
        Err(e) => return Err(model_err("total rate")(e)),
    }
    table.metadata = metadata;
    for i in 0..grid.count() {
        table.push_row(data.iter().map(|c| c[i]).collect());
    }
    Ok(table)
}

/// Converged total rates for one configuration, per channel pair.
pub fn total_rates(cfg: &ScenarioConfig) -> Result<TotalRates, CliError> {
    let r = resolve(cfg)?;
    converged_total_rate(
        r.source.as_dyn(),
        &r.envelope,
        r.k_min,
        r.k_max,
        &cfg.quadrature,
    )
    .map_err(model_err("total rate"))
}

fn set_param(
    cfg: &mut ScenarioConfig,
    param: SweepParam,
    value: f64,
    field: &str,
) -> Result<(), ConfigError> {
    match param {
        SweepParam::Length => cfg.structure.length_um = value,
        SweepParam::Reflection => {
            cfg.structure.r1 = value;
            cfg.structure.r2 = -value;
        }
        SweepParam::Layers => {
            if !(value >= 1.0 && value.fract() == 0.0 && value <= u32::MAX as f64) {
                return Err(ConfigError::Invalid {
                    field: field.to_string(),
                    message: format!("layer counts must be positive integers, got {value}"),
                });
            }
            cfg.bragg.layers = value as usize;
        }
        SweepParam::PolingPeriod => cfg.poling.period_um = Some(value),
    }
    cfg.validate()
}

/// Total rate per channel column for every sweep value (and series value).
pub fn sweep(cfg: &ScenarioConfig) -> Result<OutputTable, CliError> {
    let spec = cfg.sweep.as_ref().ok_or_else(|| ConfigError::Invalid {
        field: "sweep.param".into(),
        message: "no sweep is configured".into(),
    })?;
    let base = resolve(cfg)?;
    let raw_values = spec.values.values();
    let scaled = spec.scale == SweepScale::PolingPeriod;
    if scaled && !base.poling.enabled {
        return Err(ConfigError::Invalid {
            field: "sweep.scale".into(),
            message: "scaling by the poling period requires poling".into(),
        }
        .into());
    }
    let values: Vec<f64> = if scaled {
        raw_values.iter().map(|v| v * base.poling.period).collect()
    } else {
        raw_values.clone()
    };
    let series: Vec<Option<(SweepParam, f64)>> = match &spec.series {
        Some((p, vs)) => vs.iter().map(|v| Some((*p, *v))).collect(),
        None => vec![None],
    };
    let jobs: Vec<(usize, usize)> = (0..series.len())
        .flat_map(|s| (0..values.len()).map(move |v| (s, v)))
        .collect();
    let results: Vec<TotalRates> = jobs
        .par_iter()
        .map(|&(s, v)| {
            let mut row_cfg = cfg.clone();
            if let Some((p, x)) = series[s] {
                set_param(&mut row_cfg, p, x, "sweep.series_values")?;
            }
            set_param(&mut row_cfg, spec.param, values[v], "sweep.values")?;
            total_rates(&row_cfg)
                .map_err(|e| e.in_context(format!("{} = {}", spec.param, values[v])))
        })
        .collect::<Result<_, CliError>>()?;

    let layout = channel_columns(cfg.output.channels);
    let mut columns = Vec::new();
    if scaled {
        columns.push("length_poling_periods".to_string());
    }
    columns.push(
        match spec.param {
            SweepParam::Length => "length_um",
            SweepParam::Reflection => "reflection",
            SweepParam::Layers => "layers",
            SweepParam::PolingPeriod => "poling_period_um",
        }
        .to_string(),
    );
    let leading = columns.len();
    for s in &series {
        for (label, _) in &layout {
            columns.push(match s {
                Some((p, x)) => format!("R_{label}@{p}={x}"),
                None => format!("R_{label}"),
            });
        }
    }
    let mut table = OutputTable::new("sweep", columns.clone());
    let mut metadata = header_metadata(cfg, &base, "sweep");
    let mut data: Vec<Vec<Option<f64>>> = Vec::new();
    if scaled {
        data.push(raw_values.iter().map(|v| Some(*v)).collect());
    }
    data.push(values.iter().map(|v| Some(*v)).collect());
    let mut name_iter = columns[leading..].iter();
    for s in 0..series.len() {
        for (_, pairs) in &layout {
            let raw = (0..values.len())
                .map(|v| Some(combine(&results[s * values.len() + v].per_pair, pairs)))
                .collect();
            let name = name_iter.next().expect("one name per column");
            data.push(finish_column(
                name,
                raw,
                cfg.output.normalize,
                &mut metadata,
            ));
        }
    }
    let max_points = results
        .iter()
        .map(|t| t.quadrature.count)
        .max()
        .unwrap_or(0);
    let max_change = results
        .iter()
        .map(|t| t.quadrature.last_change)
        .fold(0.0f64, f64::max);
    let unconverged = results.iter().filter(|t| !t.quadrature.converged).count();
    metadata.push(format!(
        "convergence: rows = {}, max_points = {max_points}, max_last_relative_change = {}, unconverged = {unconverged}",
        results.len(),
        format_number(max_change)
    ));
    metadata.push("singular: none".into());
    table.metadata = metadata;
    for i in 0..values.len() {
        table.push_row(data.iter().map(|c| c[i]).collect());
    }
    Ok(table)
}

/// Every table a configuration asks for, in a fixed order.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Vec<OutputTable>, CliError> {
    let mut tables = Vec::new();
    if cfg.structure.mirrors == MirrorKind::Bragg && !cfg.transmission.layers.is_empty() {
        tables.push(transmission_table(cfg)?);
    }
    if cfg.output.spectrum {
        tables.push(spectrum_table(cfg)?);
    }
    if cfg.sweep.is_some() {
        tables.push(sweep(cfg)?);
    }
    if tables.is_empty() {
        return Err(ConfigError::Invalid {
            field: "output.spectrum".into(),
            message: "the configuration produces no tables".into(),
        }
        .into());
    }
    Ok(tables)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_config, preset};

    #[test]
    fn identical_stack_indices_transmit_fully() {
        let mut cfg = preset("bragg-sfwm").unwrap();
        cfg.bragg.n2 = cfg.bragg.n1;
        cfg.transmission.count = 25;
        let t = transmission_table(&cfg).unwrap();
        for name in ["T_N10", "T_N20", "T_N30"] {
            for v in t.column(name).unwrap() {
                assert!((v.unwrap() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn repeated_sweep_values_give_identical_rows() {
        let cfg = parse_config(
            "scenario = custom\nsweep.param = length\nsweep.values = 10, 10, 10\noutput.normalize = false\n",
        )
        .unwrap();
        let t = sweep(&cfg).unwrap();
        assert_eq!(t.rows.len(), 3);
        assert_eq!(t.rows[0], t.rows[1]);
        assert_eq!(t.rows[1], t.rows[2]);
    }

    #[test]
    fn zero_reflection_sweep_has_empty_ll() {
        let cfg = parse_config(
            "scenario = custom\nsweep.param = reflection\nsweep.values = 0\noutput.normalize = false\n",
        )
        .unwrap();
        let t = sweep(&cfg).unwrap();
        assert_eq!(t.column("R_LL").unwrap(), vec![Some(0.0)]);
        assert!(t.column("R_RR").unwrap()[0].unwrap() > 0.0);
    }

    #[test]
    fn sweeping_layers_needs_bragg_mirrors() {
        let mut cfg = preset("flat-spdc").unwrap();
        cfg.sweep.as_mut().unwrap().param = SweepParam::Layers;
        cfg.sweep.as_mut().unwrap().series = None;
        assert!(matches!(sweep(&cfg), Err(CliError::Config(_))));
    }

    #[test]
    fn degenerate_spectrum_is_symmetric_in_mixed_channels() {
        let mut cfg = preset("flat-spdc").unwrap();
        cfg.modes.index = [2.18, 2.14, 2.14];
        cfg.modes.group_index = [2.28, 2.18, 2.18];
        cfg.grid.count = 201;
        cfg.output.normalize = false;
        cfg.envelope.enabled = false;
        cfg.sweep = None;
        let t = spectrum_table(&cfg).unwrap();
        let mixed = t.column("S_RL+LR").unwrap();
        let n = mixed.len();
        for i in 0..n {
            let (a, b) = (mixed[i].unwrap(), mixed[n - 1 - i].unwrap());
            assert!((a - b).abs() <= 1e-9 * a.abs().max(b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn poling_period_is_resolved_at_the_degenerate_point() {
        let cfg = preset("ppln-counter").unwrap();
        let r = resolve(&cfg).unwrap();
        let k = r.k_pump;
        let dk2 = k * (2.18 - 2.14 + 2.14);
        assert!((r.poling.period - 2.0 * PI / dk2).abs() < 1e-12);
        assert_eq!(r.poling.offset, -0.5 * cfg.structure.length_um);
    }
}
