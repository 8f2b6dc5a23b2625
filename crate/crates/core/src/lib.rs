//! Photon-pair generation in Fabry-Pérot cavities with reflections.
//!
//! The cavity is described by 2×2 transfer matrices; the intracavity
//! amplitudes of the pump in-mode and the signal/idler out-modes feed a
//! longitudinal overlap integral, which in turn gives coupling coefficients
//! and spectral and total pair-generation rates for down-conversion (SPDC)
//! and four-wave mixing (SFWM).
//!
//! Units: vacuum wavenumbers in rad/µm, lengths in µm.

pub mod dispersion;
pub mod error;
pub mod overlap;
pub mod quadrature;
pub mod rates;
pub mod transfer;

pub use dispersion::{
    angular_frequency, build_grid, material_wavenumber, wavenumber_from_nm, DispersionConvention,
    LinearDispersion, ModeSet, WavenumberGrid,
};
pub use error::{Error, Mode, Result};
pub use overlap::{
    mismatch_set_sfwm, mismatch_set_spdc, overlap_sfwm, overlap_spdc, phase_integral, poling_gamma,
    qpm_period, sinc, MismatchSet, OverlapResult, PolingProfile, Term,
};
pub use quadrature::{integrate_until_converged, trapezoid, Converged, Refinement};
pub use rates::{
    converged_total_rate, detector_envelope, normalize, spectral_densities, spectral_rate,
    spectral_rate_sfwm, spectral_rate_spdc, total_rate, ChannelGroup, ChannelPair,
    DetectorEnvelope, EffectiveCoupling, Exit, Normalization, PairSource, SfwmModel, SpdcModel,
    SpectralResult, TotalRates,
};
pub use transfer::{
    bragg_stack, compose, effective_index, flat_mirror, interface, reflection, shift_frame,
    solve_cavity, solve_cavity_oracle, stopband_center, transmission, AsymptoticKind, BraggSpec,
    Cavity, CavityAmplitudes, InterfaceForm, MirrorSpec, TransferMatrix2,
};
