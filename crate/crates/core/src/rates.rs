//! Coupling coefficients and pair-generation rates in the undepleted-pump,
//! continuous-wave limit.
//!
//! Energy conservation fixes the idler at `k₂ = k_P − k₁` for down-conversion
//! and `k₂ = 2k_P − k₁` for four-wave mixing, so every rate is a function of
//! the signal wavenumber alone. All physical prefactors (transverse overlap,
//! pump amplitude, ħ, ε₀, c) are folded into one effective coupling, and
//! results are meaningful up to that constant.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dispersion::{ModeSet, WavenumberGrid};
use crate::error::{Error, Mode, Result};
use crate::overlap::{
    mismatch_set_sfwm, mismatch_set_spdc, overlap_sfwm, overlap_spdc, PolingProfile,
};
use crate::quadrature::{integrate_until_converged, trapezoid, Converged, Refinement};
use crate::transfer::{AsymptoticKind, Cavity, CavityAmplitudes};

/// Folded multiplicative constant in front of every coupling coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveCoupling {
    pub g_eff: f64,
}

impl Default for EffectiveCoupling {
    fn default() -> Self {
        Self { g_eff: 1.0 }
    }
}

impl EffectiveCoupling {
    pub fn new(g_eff: f64) -> Result<Self> {
        if !(g_eff.is_finite() && g_eff > 0.0) {
            return Err(Error::Config(format!(
                "effective coupling must be positive, got {g_eff}"
            )));
        }
        Ok(Self { g_eff })
    }
}

/// Gaussian detector response `exp(-(k − k₀)² / 2σ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorEnvelope {
    pub center: f64,
    pub width: f64,
    pub enabled: bool,
}

impl DetectorEnvelope {
    pub fn disabled() -> Self {
        Self {
            center: 0.0,
            width: 0.0,
            enabled: false,
        }
    }

    pub fn gaussian(center: f64, width: f64) -> Result<Self> {
        let env = Self {
            center,
            width,
            enabled: true,
        };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        if self.enabled && !(self.width.is_finite() && self.width > 0.0) {
            return Err(Error::Config(format!(
                "detector width must be positive, got {}",
                self.width
            )));
        }
        Ok(())
    }
}

pub fn detector_envelope(env: &DetectorEnvelope, k1: f64) -> f64 {
    if !env.enabled {
        return 1.0;
    }
    let x = (k1 - env.center) / env.width;
    (-0.5 * x * x).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exit {
    Left,
    Right,
}

impl Exit {
    fn kind(self) -> AsymptoticKind {
        match self {
            Exit::Left => AsymptoticKind::OutLeft,
            Exit::Right => AsymptoticKind::OutRight,
        }
    }

    fn index(self) -> usize {
        match self {
            Exit::Left => 0,
            Exit::Right => 1,
        }
    }
}

/// Which channels the signal and idler photons leave through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChannelPair {
    pub signal: Exit,
    pub idler: Exit,
}

impl ChannelPair {
    pub const RR: Self = Self {
        signal: Exit::Right,
        idler: Exit::Right,
    };
    pub const LL: Self = Self {
        signal: Exit::Left,
        idler: Exit::Left,
    };
    pub const RL: Self = Self {
        signal: Exit::Right,
        idler: Exit::Left,
    };
    pub const LR: Self = Self {
        signal: Exit::Left,
        idler: Exit::Right,
    };
    /// Fixed order used by every per-pair array in this module.
    pub const ALL: [Self; 4] = [Self::RR, Self::LL, Self::RL, Self::LR];

    pub fn index(&self) -> usize {
        Self::ALL
            .iter()
            .position(|p| p == self)
            .expect("ALL lists every pair")
    }
}

impl fmt::Display for ChannelPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = |e: Exit| match e {
            Exit::Left => 'L',
            Exit::Right => 'R',
        };
        write!(f, "{}{}", c(self.signal), c(self.idler))
    }
}

/// The reporting groups used in tables: RR, LL and the sum RL + LR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelGroup {
    RR,
    LL,
    Mixed,
}

impl ChannelGroup {
    pub const ALL: [Self; 3] = [Self::RR, Self::LL, Self::Mixed];

    pub fn pairs(&self) -> &'static [ChannelPair] {
        match self {
            ChannelGroup::RR => &[ChannelPair::RR],
            ChannelGroup::LL => &[ChannelPair::LL],
            ChannelGroup::Mixed => &[ChannelPair::RL, ChannelPair::LR],
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ChannelGroup::RR => "RR",
            ChannelGroup::LL => "LL",
            ChannelGroup::Mixed => "RL+LR",
        }
    }

    /// Sums the members of this group out of a per-pair array.
    pub fn combine(&self, per_pair: &[f64; 4]) -> f64 {
        self.pairs().iter().map(|p| per_pair[p.index()]).sum()
    }
}

/// Signal and idler out-modes for both exits, plus the pump in-mode.
struct SolvedModes {
    signal: [CavityAmplitudes; 2],
    idler: [CavityAmplitudes; 2],
}

fn solve_out_modes(
    cavity: &Cavity,
    mode: Mode,
    material_k: f64,
    k: f64,
) -> Result<[CavityAmplitudes; 2]> {
    let solve = |exit: Exit| {
        cavity
            .amplitudes(material_k, k, exit.kind())
            .map_err(|e| e.at(mode, k))
    };
    Ok([solve(Exit::Left)?, solve(Exit::Right)?])
}

/// Anything that yields the four channel-pair couplings as a function of the
/// signal wavenumber, with the idler on shell.
pub trait PairSource: Sync {
    fn pump_wavenumber(&self) -> f64;

    /// Idler wavenumber fixed by energy conservation.
    fn idler_wavenumber(&self, k1: f64) -> f64;

    /// Open interval of admissible signal wavenumbers.
    fn signal_range(&self) -> (f64, f64);

    /// Couplings for [`ChannelPair::ALL`] at signal wavenumber `k1`.
    fn couplings(&self, k1: f64) -> Result<[Complex64; 4]>;
}

/// Down-conversion of a pump entering from the left.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdcModel {
    pub cavity: Cavity,
    pub modes: ModeSet,
    pub coupling: EffectiveCoupling,
    pub poling: PolingProfile,
    pub counter_terms: bool,
    pub k_pump: f64,
}

impl SpdcModel {
    fn pump_mode(&self, k3: f64) -> Result<CavityAmplitudes> {
        let kk = self
            .modes
            .pump_wavenumber(k3)
            .map_err(|e| e.at(Mode::Pump, k3))?;
        self.cavity
            .amplitudes(kk, k3, AsymptoticKind::InLeft)
            .map_err(|e| e.at(Mode::Pump, k3))
    }

    fn out_modes(&self, k1: f64, k2: f64) -> Result<SolvedModes> {
        let ks = self
            .modes
            .signal_wavenumber(k1)
            .map_err(|e| e.at(Mode::Signal, k1))?;
        let ki = self
            .modes
            .idler_wavenumber(k2)
            .map_err(|e| e.at(Mode::Idler, k2))?;
        Ok(SolvedModes {
            signal: solve_out_modes(&self.cavity, Mode::Signal, ks, k1)?,
            idler: solve_out_modes(&self.cavity, Mode::Idler, ki, k2)?,
        })
    }

    fn couplings_at(&self, k1: f64, k2: f64, k3: f64) -> Result<[Complex64; 4]> {
        let pump = self.pump_mode(k3)?;
        let out = self.out_modes(k1, k2)?;
        let mm = mismatch_set_spdc(&self.modes, k1, k2, k3)?;
        let prefactor = self.coupling.g_eff * (k1 * k2 * k3).sqrt();
        let mut j = [Complex64::new(0.0, 0.0); 4];
        for pair in ChannelPair::ALL {
            let overlap = overlap_spdc(
                &out.signal[pair.signal.index()],
                &out.idler[pair.idler.index()],
                &pump,
                &mm,
                self.cavity.length,
                &self.poling,
                self.counter_terms,
            );
            j[pair.index()] = overlap.total * prefactor;
        }
        Ok(j)
    }

    /// `J_{XX'}(k₁, k₂, k₃)` up to the folded constant: `g √(k₁k₂k₃) I_{XX'}`.
    pub fn coupling(&self, k1: f64, k2: f64, k3: f64, pair: ChannelPair) -> Result<Complex64> {
        Ok(self.couplings_at(k1, k2, k3)?[pair.index()])
    }
}

impl PairSource for SpdcModel {
    fn pump_wavenumber(&self) -> f64 {
        self.k_pump
    }

    fn idler_wavenumber(&self, k1: f64) -> f64 {
        self.k_pump - k1
    }

    fn signal_range(&self) -> (f64, f64) {
        (0.0, self.k_pump)
    }

    fn couplings(&self, k1: f64) -> Result<[Complex64; 4]> {
        self.couplings_at(k1, self.k_pump - k1, self.k_pump)
    }
}

/// Four-wave mixing with both pump photons at `k_pump`, entering from the left.
#[derive(Debug, Clone, PartialEq)]
pub struct SfwmModel {
    pub cavity: Cavity,
    pub modes: ModeSet,
    pub coupling: EffectiveCoupling,
    pub k_pump: f64,
}

impl SfwmModel {
    /// `J^SFWM(k₁, k₂, k₃, k₄)` up to the folded constant: `g √(k₁k₂k₃k₄) I`.
    pub fn coupling(
        &self,
        k1: f64,
        k2: f64,
        k3: f64,
        k4: f64,
        pair: ChannelPair,
    ) -> Result<Complex64> {
        Ok(self.couplings_at(k1, k2, k3, k4)?[pair.index()])
    }

    fn pump_mode(&self, k: f64) -> Result<CavityAmplitudes> {
        let kk = self
            .modes
            .pump_wavenumber(k)
            .map_err(|e| e.at(Mode::Pump, k))?;
        self.cavity
            .amplitudes(kk, k, AsymptoticKind::InLeft)
            .map_err(|e| e.at(Mode::Pump, k))
    }

    fn couplings_at(&self, k1: f64, k2: f64, k3: f64, k4: f64) -> Result<[Complex64; 4]> {
        let p3 = self.pump_mode(k3)?;
        let p4 = if k4 == k3 { p3 } else { self.pump_mode(k4)? };
        let ks = self
            .modes
            .signal_wavenumber(k1)
            .map_err(|e| e.at(Mode::Signal, k1))?;
        let ki = self
            .modes
            .idler_wavenumber(k2)
            .map_err(|e| e.at(Mode::Idler, k2))?;
        let signal = solve_out_modes(&self.cavity, Mode::Signal, ks, k1)?;
        let idler = solve_out_modes(&self.cavity, Mode::Idler, ki, k2)?;
        let mm = mismatch_set_sfwm(&self.modes, k1, k2, k3, k4)?;
        let prefactor = self.coupling.g_eff * (k1 * k2 * k3 * k4).sqrt();
        let mut j = [Complex64::new(0.0, 0.0); 4];
        for pair in ChannelPair::ALL {
            let overlap = overlap_sfwm(
                &signal[pair.signal.index()],
                &idler[pair.idler.index()],
                &p3,
                &p4,
                &mm,
                self.cavity.length,
            );
            j[pair.index()] = overlap.total * prefactor;
        }
        Ok(j)
    }
}

impl PairSource for SfwmModel {
    fn pump_wavenumber(&self) -> f64 {
        self.k_pump
    }

    fn idler_wavenumber(&self, k1: f64) -> f64 {
        2.0 * self.k_pump - k1
    }

    fn signal_range(&self) -> (f64, f64) {
        (0.0, 2.0 * self.k_pump)
    }

    fn couplings(&self, k1: f64) -> Result<[Complex64; 4]> {
        self.couplings_at(k1, 2.0 * self.k_pump - k1, self.k_pump, self.k_pump)
    }
}

/// Spectral densities `η(k₁) |J|²` for all four pairs at one signal wavenumber.
pub fn spectral_densities<S: PairSource + ?Sized>(
    source: &S,
    env: &DetectorEnvelope,
    k1: f64,
) -> Result<[f64; 4]> {
    let (lo, hi) = source.signal_range();
    if !(k1 > lo && k1 < hi) {
        return Err(Error::Domain(format!(
            "signal wavenumber {k1} lies outside ({lo}, {hi})"
        )));
    }
    let eta = detector_envelope(env, k1);
    let j = source.couplings(k1)?;
    Ok(j.map(|c| eta * c.norm_sqr()))
}

/// Record that makes a normalized array invertible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub raw_max: f64,
    pub normalized: bool,
}

/// Per-pair spectral rates over a signal grid. `None` marks a grid point at
/// which the cavity solution is singular.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    pub grid: WavenumberGrid,
    /// Indexed like [`ChannelPair::ALL`]; each inner vector runs over the grid.
    pub raw: [Vec<Option<f64>>; 4],
}

impl SpectralResult {
    pub fn pair(&self, pair: ChannelPair) -> &[Option<f64>] {
        &self.raw[pair.index()]
    }

    pub fn group(&self, group: ChannelGroup) -> Vec<Option<f64>> {
        (0..self.grid.count())
            .map(|i| {
                group
                    .pairs()
                    .iter()
                    .map(|p| self.raw[p.index()][i])
                    .sum::<Option<f64>>()
            })
            .collect()
    }

    pub fn singular_points(&self) -> Vec<f64> {
        self.grid
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| self.raw.iter().any(|s| s[*i].is_none()))
            .map(|(_, k)| *k)
            .collect()
    }
}

/// Divides by the largest finite entry so that it becomes exactly 1.
/// An all-zero series is returned unchanged and flagged as not normalized.
pub fn normalize(series: &[Option<f64>]) -> (Vec<Option<f64>>, Normalization) {
    let raw_max = series.iter().flatten().fold(0.0f64, |m, v| m.max(*v));
    if raw_max > 0.0 {
        (
            series.iter().map(|v| v.map(|x| x / raw_max)).collect(),
            Normalization {
                raw_max,
                normalized: true,
            },
        )
    } else {
        (
            series.to_vec(),
            Normalization {
                raw_max,
                normalized: false,
            },
        )
    }
}

/// Evaluates the spectral rate of every channel pair on `grid`.
pub fn spectral_rate<S: PairSource + ?Sized>(
    source: &S,
    env: &DetectorEnvelope,
    grid: &WavenumberGrid,
) -> Result<SpectralResult> {
    env.validate()?;
    let rows: Vec<Option<[f64; 4]>> = grid
        .values
        .par_iter()
        .map(|&k1| match spectral_densities(source, env, k1) {
            Ok(v) => Ok(Some(v)),
            Err(e) if e.is_singular() => {
                log::warn!("singular grid point: {e}");
                Ok(None)
            }
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let raw = std::array::from_fn(|p| rows.iter().map(|r| r.map(|v| v[p])).collect());
    Ok(SpectralResult {
        grid: grid.clone(),
        raw,
    })
}

/// Down-conversion spectrum: `η(k₁) |J(k₁, k_P − k₁, k_P)|²`.
pub fn spectral_rate_spdc(
    model: &SpdcModel,
    env: &DetectorEnvelope,
    grid: &WavenumberGrid,
) -> Result<SpectralResult> {
    spectral_rate(model, env, grid)
}

/// Four-wave-mixing spectrum: `η(k₁) |J(k₁, 2k_P − k₁, k_P, k_P)|²`.
pub fn spectral_rate_sfwm(
    model: &SfwmModel,
    env: &DetectorEnvelope,
    grid: &WavenumberGrid,
) -> Result<SpectralResult> {
    spectral_rate(model, env, grid)
}

/// Trapezoid integral of each raw per-pair spectrum over its grid.
pub fn total_rate(spectral: &SpectralResult) -> Result<[f64; 4]> {
    if spectral.grid.count() < 3 {
        return Err(Error::Config(format!(
            "total rate needs at least 3 grid points, got {}",
            spectral.grid.count()
        )));
    }
    let mut out = [0.0; 4];
    for (p, series) in spectral.raw.iter().enumerate() {
        let values: Option<Vec<f64>> = series.iter().copied().collect();
        let values = values.ok_or_else(|| {
            Error::Numerical("cannot integrate a spectrum with singular points".into())
        })?;
        out[p] = trapezoid(&values, spectral.grid.spacing());
    }
    Ok(out)
}

/// Total rates per pair, refining the signal grid until converged.
#[derive(Debug, Clone, PartialEq)]
pub struct TotalRates {
    /// Indexed like [`ChannelPair::ALL`].
    pub per_pair: [f64; 4],
    pub quadrature: Converged,
}

impl TotalRates {
    pub fn group(&self, group: ChannelGroup) -> f64 {
        group.combine(&self.per_pair)
    }
}

pub fn converged_total_rate<S: PairSource + ?Sized>(
    source: &S,
    env: &DetectorEnvelope,
    k_min: f64,
    k_max: f64,
    settings: &Refinement,
) -> Result<TotalRates> {
    env.validate()?;
    let out = integrate_until_converged(
        |k1| spectral_densities(source, env, k1).map(|v| v.to_vec()),
        k_min,
        k_max,
        settings,
    )?;
    let per_pair = [out.values[0], out.values[1], out.values[2], out.values[3]];
    Ok(TotalRates {
        per_pair,
        quadrature: out,
    })
}
