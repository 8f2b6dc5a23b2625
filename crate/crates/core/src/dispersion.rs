//! Wavenumber conventions and linearized material dispersion.
//!
//! All wavenumbers are vacuum wavenumbers in rad/µm and all lengths are in
//! µm. A material wavenumber `K(k)` is the propagation constant inside a
//! medium for light of vacuum wavenumber `k`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Vacuum speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// rad/µm to rad/m.
const PER_MICRON: f64 = 1.0e6;

/// How the first-order expansion of `K(k)` about the reference point is written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DispersionConvention {
    /// `K(k) = n k_ref + n_g (k - k_ref)`: slope equals the group index.
    #[default]
    Standard,
    /// `K(k) = n k + n_g (k - k_ref)`: the alternative printed form, whose
    /// slope is `n + n_g`.
    VerbatimPaper,
}

impl DispersionConvention {
    pub fn as_str(&self) -> &'static str {
        match self {
            DispersionConvention::Standard => "standard",
            DispersionConvention::VerbatimPaper => "verbatim-paper",
        }
    }
}

impl fmt::Display for DispersionConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DispersionConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(DispersionConvention::Standard),
            "verbatim-paper" => Ok(DispersionConvention::VerbatimPaper),
            other => Err(Error::Config(format!(
                "unknown dispersion convention `{other}` (expected standard or verbatim-paper)"
            ))),
        }
    }
}

/// Linearized dispersion of one mode about a reference vacuum wavenumber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearDispersion {
    /// Refractive index at the reference wavenumber.
    pub n_ref: f64,
    /// Group index at the reference wavenumber.
    pub n_group: f64,
    /// Reference vacuum wavenumber, rad/µm.
    pub k_ref: f64,
}

impl LinearDispersion {
    pub fn new(n_ref: f64, n_group: f64, k_ref: f64) -> Result<Self> {
        let d = Self {
            n_ref,
            n_group,
            k_ref,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n_ref", self.n_ref),
            ("n_group", self.n_group),
            ("k_ref", self.k_ref),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Material wavenumber `K(k)` in rad/µm.
    pub fn wavenumber(&self, k: f64, convention: DispersionConvention) -> Result<f64> {
        material_wavenumber(self, k, convention)
    }
}

/// Evaluates the linearized material wavenumber at vacuum wavenumber `k`.
pub fn material_wavenumber(
    d: &LinearDispersion,
    k: f64,
    convention: DispersionConvention,
) -> Result<f64> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::Domain(format!(
            "vacuum wavenumber must be positive, got {k}"
        )));
    }
    let detuning = d.n_group * (k - d.k_ref);
    Ok(match convention {
        DispersionConvention::Standard => d.n_ref * d.k_ref + detuning,
        DispersionConvention::VerbatimPaper => d.n_ref * k + detuning,
    })
}

/// Angular frequency `ω = c k` in rad/s for a vacuum wavenumber in rad/µm.
pub fn angular_frequency(k: f64) -> Result<f64> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::Domain(format!(
            "vacuum wavenumber must be positive, got {k}"
        )));
    }
    Ok(SPEED_OF_LIGHT * k * PER_MICRON)
}

/// Vacuum wavenumber in rad/µm for a wavelength in nm.
pub fn wavenumber_from_nm(wavelength_nm: f64) -> Result<f64> {
    if !(wavelength_nm.is_finite() && wavelength_nm > 0.0) {
        return Err(Error::Config(format!(
            "wavelength must be positive, got {wavelength_nm} nm"
        )));
    }
    Ok(2.0 * std::f64::consts::PI / (wavelength_nm * 1e-3))
}

/// Dispersions of the three interacting modes plus the channel indices.
///
/// The channels are dispersionless; the cavity material is described per
/// mode. For four-wave mixing both annihilated photons use `pump`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSet {
    pub pump: LinearDispersion,
    pub signal: LinearDispersion,
    pub idler: LinearDispersion,
    pub channel_left_index: f64,
    pub channel_right_index: f64,
    pub convention: DispersionConvention,
}

impl ModeSet {
    /// Degenerate down-conversion references: signal and idler expanded about `k_pump / 2`.
    pub fn spdc(k_pump: f64, index: [f64; 3], group_index: [f64; 3]) -> Result<Self> {
        Self::with_references([k_pump, k_pump / 2.0, k_pump / 2.0], index, group_index)
    }

    /// Arbitrary reference wavenumbers in (pump, signal, idler) order.
    pub fn with_references(
        k_ref: [f64; 3],
        index: [f64; 3],
        group_index: [f64; 3],
    ) -> Result<Self> {
        let set = Self {
            pump: LinearDispersion::new(index[0], group_index[0], k_ref[0])?,
            signal: LinearDispersion::new(index[1], group_index[1], k_ref[1])?,
            idler: LinearDispersion::new(index[2], group_index[2], k_ref[2])?,
            channel_left_index: 1.0,
            channel_right_index: 1.0,
            convention: DispersionConvention::Standard,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn with_convention(mut self, convention: DispersionConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.pump.validate()?;
        self.signal.validate()?;
        self.idler.validate()?;
        for (name, v) in [
            ("channel_left_index", self.channel_left_index),
            ("channel_right_index", self.channel_right_index),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn pump_wavenumber(&self, k: f64) -> Result<f64> {
        self.pump.wavenumber(k, self.convention)
    }

    pub fn signal_wavenumber(&self, k: f64) -> Result<f64> {
        self.signal.wavenumber(k, self.convention)
    }

    pub fn idler_wavenumber(&self, k: f64) -> Result<f64> {
        self.idler.wavenumber(k, self.convention)
    }

    /// `K_L = n_L k`.
    pub fn left_channel_wavenumber(&self, k: f64) -> f64 {
        self.channel_left_index * k
    }

    /// `K_R = n_R k`.
    pub fn right_channel_wavenumber(&self, k: f64) -> f64 {
        self.channel_right_index * k
    }
}

/// Uniformly spaced, strictly increasing vacuum wavenumbers.
#[derive(Debug, Clone, PartialEq)]
pub struct WavenumberGrid {
    pub k_min: f64,
    pub k_max: f64,
    pub values: Vec<f64>,
}

impl WavenumberGrid {
    pub fn new(k_min: f64, k_max: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::Config(format!(
                "grid needs at least 2 points, got {count}"
            )));
        }
        if !(k_min.is_finite() && k_max.is_finite() && k_max > k_min) {
            return Err(Error::Config(format!(
                "grid bounds must satisfy k_min < k_max, got [{k_min}, {k_max}]"
            )));
        }
        let step = (k_max - k_min) / (count - 1) as f64;
        let values = (0..count)
            .map(|i| {
                if i == count - 1 {
                    k_max
                } else {
                    k_min + i as f64 * step
                }
            })
            .collect();
        Ok(Self {
            k_min,
            k_max,
            values,
        })
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }

    pub fn spacing(&self) -> f64 {
        (self.k_max - self.k_min) / (self.count() - 1) as f64
    }

    /// Halves the spacing; every existing point stays on the grid.
    pub fn refined(&self) -> Self {
        Self::new(self.k_min, self.k_max, 2 * self.count() - 1)
            .expect("refining a valid grid is valid")
    }
}

/// Uniform grid on `[center - half_width, center + half_width]`.
pub fn build_grid(center: f64, half_width: f64, count: usize) -> Result<WavenumberGrid> {
    if !(half_width.is_finite() && half_width > 0.0) {
        return Err(Error::Config(format!(
            "grid half width must be positive, got {half_width}"
        )));
    }
    WavenumberGrid::new(center - half_width, center + half_width, count)
}
