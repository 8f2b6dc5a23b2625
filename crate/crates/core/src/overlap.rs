//! Longitudinal overlap integrals over the interaction region.
//!
//! Inside the cavity every mode is `e₊ e^{iKz} + e₋ e^{-iKz}`. Multiplying
//! the conjugated signal and idler profiles by the pump profile gives eight
//! plane-wave products, each integrated against the nonlinear coefficient
//! `γ(z)` over `[-ℓ/2, ℓ/2]`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::dispersion::ModeSet;
use crate::error::{Error, Result};
use crate::transfer::CavityAmplitudes;

/// `sin(x)/x`, with the removable singularity handled by its series.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Square-wave sign of the nonlinear coefficient along the crystal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolingProfile {
    pub enabled: bool,
    /// Poling period Λ, µm.
    pub period: f64,
    /// Position `z₀` where a positive domain begins, µm.
    pub offset: f64,
}

impl Default for PolingProfile {
    fn default() -> Self {
        Self::disabled()
    }
}

impl PolingProfile {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            period: 0.0,
            offset: 0.0,
        }
    }

    pub fn new(period: f64, offset: f64) -> Result<Self> {
        let p = Self {
            enabled: true,
            period,
            offset,
        };
        p.validate()?;
        Ok(p)
    }

    /// Poling whose first positive domain starts at the left face of a
    /// crystal of the given length.
    pub fn from_left_face(period: f64, length: f64) -> Result<Self> {
        Self::new(period, -0.5 * length)
    }

    pub fn validate(&self) -> Result<()> {
        if self.enabled && !(self.period.is_finite() && self.period > 0.0) {
            return Err(Error::Config(format!(
                "poling period must be positive, got {}",
                self.period
            )));
        }
        if self.enabled && !self.offset.is_finite() {
            return Err(Error::Config("poling offset must be finite".into()));
        }
        Ok(())
    }
}

/// `sign(sin(2π(z - z₀)/Λ))`, taking `+1` on domain walls and when poling is off.
pub fn poling_gamma(profile: &PolingProfile, z: f64) -> f64 {
    if !profile.enabled {
        return 1.0;
    }
    let s = (2.0 * PI * (z - profile.offset) / profile.period).sin();
    if s < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Poling period that quasi-phase-matches the mismatch `dk`.
pub fn qpm_period(dk: f64) -> Result<f64> {
    if dk == 0.0 {
        return Err(Error::AlreadyPhaseMatched);
    }
    if !dk.is_finite() {
        return Err(Error::Domain(format!("mismatch must be finite, got {dk}")));
    }
    Ok(2.0 * PI / dk.abs())
}

/// `∫_a^b e^{i dk z} dz`, stable as `dk → 0`.
fn segment_integral(dk: f64, a: f64, b: f64) -> Complex64 {
    let width = b - a;
    Complex64::from_polar(width * sinc(0.5 * dk * width), 0.5 * dk * (a + b))
}

/// `∫ γ(z) e^{i dk z} dz` over `[-ℓ/2, ℓ/2]`.
///
/// Without poling this is the real `ℓ sinc(dk ℓ/2)`. With poling the window
/// is cut at every domain wall and each domain is integrated in closed form.
pub fn phase_integral(dk: f64, length: f64, profile: &PolingProfile) -> Complex64 {
    let (lo, hi) = (-0.5 * length, 0.5 * length);
    if !profile.enabled {
        return Complex64::new(length * sinc(0.5 * dk * length), 0.0);
    }
    let half = 0.5 * profile.period;
    let mut j = ((lo - profile.offset) / half).floor() as i64;
    let mut acc = Complex64::new(0.0, 0.0);
    loop {
        let start = profile.offset + j as f64 * half;
        if start >= hi {
            break;
        }
        let a = start.max(lo);
        let b = (start + half).min(hi);
        if b > a {
            let part = segment_integral(dk, a, b);
            if j.rem_euclid(2) == 0 {
                acc += part;
            } else {
                acc -= part;
            }
        }
        j += 1;
    }
    acc
}

/// The four material-wavenumber combinations that appear in the overlap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MismatchSet {
    /// `K₃ − K₁ − K₂`
    pub dk: f64,
    /// `K₃ + K₁ − K₂`
    pub dk1: f64,
    /// `K₃ − K₁ + K₂`
    pub dk2: f64,
    /// `K₃ + K₁ + K₂`
    pub dk12: f64,
}

impl MismatchSet {
    /// From the signal, idler and (total) pump material wavenumbers.
    pub fn from_material(k_signal: f64, k_idler: f64, k_pump: f64) -> Self {
        Self {
            dk: k_pump - k_signal - k_idler,
            dk1: k_pump + k_signal - k_idler,
            dk2: k_pump - k_signal + k_idler,
            dk12: k_pump + k_signal + k_idler,
        }
    }
}

/// Mismatches for down-conversion of a pump at `k3` into `k1` (signal) and `k2` (idler).
pub fn mismatch_set_spdc(modes: &ModeSet, k1: f64, k2: f64, k3: f64) -> Result<MismatchSet> {
    Ok(MismatchSet::from_material(
        modes.signal_wavenumber(k1)?,
        modes.idler_wavenumber(k2)?,
        modes.pump_wavenumber(k3)?,
    ))
}

/// Mismatches for four-wave mixing; the two pump photons enter as `K₃ + K₄`.
pub fn mismatch_set_sfwm(
    modes: &ModeSet,
    k1: f64,
    k2: f64,
    k3: f64,
    k4: f64,
) -> Result<MismatchSet> {
    Ok(MismatchSet::from_material(
        modes.signal_wavenumber(k1)?,
        modes.idler_wavenumber(k2)?,
        modes.pump_wavenumber(k3)? + modes.pump_wavenumber(k4)?,
    ))
}

/// One of the eight plane-wave products, named by the propagation
/// directions of (signal, idler, pump).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    /// (+,+,+), mismatch `+ΔK`
    Forward,
    /// (−,−,−), mismatch `−ΔK`
    Backward,
    /// (−,+,+), mismatch `+ΔK₁`
    SignalReversed,
    /// (+,−,−), mismatch `−ΔK₁`
    SignalReversedBackward,
    /// (+,−,+), mismatch `+ΔK₂`
    IdlerReversed,
    /// (−,+,−), mismatch `−ΔK₂`
    IdlerReversedBackward,
    /// (−,−,+), mismatch `+ΔK₁₂`
    PairReversed,
    /// (+,+,−), mismatch `−ΔK₁₂`
    PairReversedBackward,
}

impl Term {
    pub const ALL: [Term; 8] = [
        Term::Forward,
        Term::Backward,
        Term::SignalReversed,
        Term::SignalReversedBackward,
        Term::IdlerReversed,
        Term::IdlerReversedBackward,
        Term::PairReversed,
        Term::PairReversedBackward,
    ];

    /// Directions of (signal, idler, pump): `true` for right-moving.
    pub fn signs(&self) -> (bool, bool, bool) {
        match self {
            Term::Forward => (true, true, true),
            Term::Backward => (false, false, false),
            Term::SignalReversed => (false, true, true),
            Term::SignalReversedBackward => (true, false, false),
            Term::IdlerReversed => (true, false, true),
            Term::IdlerReversedBackward => (false, true, false),
            Term::PairReversed => (false, false, true),
            Term::PairReversedBackward => (true, true, false),
        }
    }

    pub fn mismatch(&self, mm: &MismatchSet) -> f64 {
        match self {
            Term::Forward => mm.dk,
            Term::Backward => -mm.dk,
            Term::SignalReversed => mm.dk1,
            Term::SignalReversedBackward => -mm.dk1,
            Term::IdlerReversed => mm.dk2,
            Term::IdlerReversedBackward => -mm.dk2,
            Term::PairReversed => mm.dk12,
            Term::PairReversedBackward => -mm.dk12,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (s, i, p) = self.signs();
        let c = |b: bool| if b { '+' } else { '-' };
        write!(f, "({},{},{})", c(s), c(i), c(p))
    }
}

/// The overlap integral with its per-term decomposition, in µm.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapResult {
    pub total: Complex64,
    pub terms: Vec<(Term, Complex64)>,
}

impl OverlapResult {
    fn from_terms(terms: Vec<(Term, Complex64)>) -> Self {
        let total = terms.iter().map(|(_, v)| v).sum();
        Self { total, terms }
    }

    pub fn term(&self, which: Term) -> Option<Complex64> {
        self.terms
            .iter()
            .find(|(t, _)| *t == which)
            .map(|(_, v)| *v)
    }
}

fn amplitude(a: &CavityAmplitudes, right_moving: bool) -> Complex64 {
    if right_moving {
        a.e_plus
    } else {
        a.e_minus
    }
}

/// Down-conversion overlap. With `counter_terms` off only the two products
/// in which all three fields co-propagate are kept.
pub fn overlap_spdc(
    signal: &CavityAmplitudes,
    idler: &CavityAmplitudes,
    pump: &CavityAmplitudes,
    mm: &MismatchSet,
    length: f64,
    profile: &PolingProfile,
    counter_terms: bool,
) -> OverlapResult {
    let selected: &[Term] = if counter_terms {
        &Term::ALL
    } else {
        &Term::ALL[..2]
    };
    let terms = selected
        .iter()
        .map(|&term| {
            let (s, i, p) = term.signs();
            let product =
                amplitude(signal, s).conj() * amplitude(idler, i).conj() * amplitude(pump, p);
            let value = if product == Complex64::new(0.0, 0.0) {
                product
            } else {
                product * phase_integral(term.mismatch(mm), length, profile)
            };
            (term, value)
        })
        .collect();
    OverlapResult::from_terms(terms)
}

/// Four-wave-mixing overlap, co-propagating products only.
pub fn overlap_sfwm(
    signal: &CavityAmplitudes,
    idler: &CavityAmplitudes,
    pump3: &CavityAmplitudes,
    pump4: &CavityAmplitudes,
    mm: &MismatchSet,
    length: f64,
) -> OverlapResult {
    let envelope = length * sinc(0.5 * mm.dk * length);
    let forward = signal.e_plus.conj() * idler.e_plus.conj() * pump3.e_plus * pump4.e_plus;
    let backward = signal.e_minus.conj() * idler.e_minus.conj() * pump3.e_minus * pump4.e_minus;
    OverlapResult::from_terms(vec![
        (Term::Forward, forward * envelope),
        (Term::Backward, backward * envelope),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transfer::{solve_cavity, AsymptoticKind, TransferMatrix2};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn empty(kind: AsymptoticKind) -> CavityAmplitudes {
        let id = TransferMatrix2::IDENTITY;
        solve_cavity(&id, &id, kind).unwrap()
    }

    /// Composite midpoint rule on cells anchored at the poling offset, so
    /// that no cell straddles a domain wall.
    fn midpoint_oracle(
        dk: f64,
        length: f64,
        profile: &PolingProfile,
        per_period: usize,
    ) -> Complex64 {
        let h = profile.period / per_period as f64;
        let (lo, hi) = (-0.5 * length, 0.5 * length);
        let mut i = ((lo - profile.offset) / h).floor() as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        loop {
            let a = profile.offset + i as f64 * h;
            if a >= hi {
                break;
            }
            let (ca, cb) = (a.max(lo), (a + h).min(hi));
            if cb > ca {
                let mid = 0.5 * (ca + cb);
                acc += Complex64::from_polar((cb - ca) * poling_gamma(profile, mid), dk * mid);
            }
            i += 1;
        }
        acc
    }

    #[test]
    fn sinc_values() {
        assert_eq!(sinc(0.0), 1.0);
        assert!(sinc(PI).abs() < 1e-15);
        assert_relative_eq!(sinc(1e-7), (1e-7f64).sin() / 1e-7, max_relative = 1e-15);
        assert_relative_eq!(sinc(2e-6), (2e-6f64).sin() / 2e-6, max_relative = 1e-15);
    }

    #[test]
    fn gamma_examples() {
        let off = PolingProfile::disabled();
        assert_eq!(poling_gamma(&off, 0.37), 1.0);
        let p = PolingProfile::new(2.0, 0.0).unwrap();
        assert_eq!(poling_gamma(&p, 0.5), 1.0);
        assert_eq!(poling_gamma(&p, 1.5), -1.0);
        assert_eq!(poling_gamma(&p, 0.0), 1.0);
        let shifted = PolingProfile::new(2.0, 2.0).unwrap();
        for z in [-3.3, -0.1, 0.2, 0.9, 1.7, 4.4] {
            assert_eq!(poling_gamma(&p, z), poling_gamma(&shifted, z));
        }
        assert!(PolingProfile::new(0.0, 0.0).is_err());
    }

    #[test]
    fn qpm_examples() {
        assert_relative_eq!(qpm_period(PI).unwrap(), 2.0, max_relative = 1e-15);
        assert_relative_eq!(qpm_period(2.0 * PI).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(qpm_period(-PI).unwrap(), 2.0, max_relative = 1e-15);
        assert!(matches!(qpm_period(0.0), Err(Error::AlreadyPhaseMatched)));
    }

    #[test]
    fn unpoled_integral_examples() {
        let off = PolingProfile::disabled();
        assert_eq!(phase_integral(0.0, 10.0, &off), Complex64::new(10.0, 0.0));
        assert!(phase_integral(2.0 * PI / 10.0, 10.0, &off).norm() < 1e-14);
    }

    #[test]
    fn quasi_phase_matched_integral_grows_at_two_over_pi() {
        let period = 0.7;
        let dk = 2.0 * PI / period;
        for periods in [1usize, 5, 40] {
            let length = periods as f64 * period;
            let profile = PolingProfile::from_left_face(period, length).unwrap();
            let got = phase_integral(dk, length, &profile).norm();
            assert!((got - 2.0 * length / PI).abs() < 1e-10, "{periods}: {got}");
            let oracle = midpoint_oracle(dk, length, &profile, 100_000).norm();
            assert_relative_eq!(got, oracle, max_relative = 1e-8);
        }
    }

    #[test]
    fn poled_integral_with_equal_domains_everywhere_is_unpoled_up_to_sign() {
        // a period longer than twice the crystal leaves a single positive domain
        let profile = PolingProfile::new(100.0, -5.0).unwrap();
        let a = phase_integral(0.8, 10.0, &profile);
        let b = phase_integral(0.8, 10.0, &PolingProfile::disabled());
        assert!((a - b).norm() < 1e-13);
    }

    #[test]
    fn mismatch_identities() {
        let kp = 2.0 * PI / 0.75;
        let modes = ModeSet::spdc(kp, [2.18, 2.14, 2.22], [2.28, 2.18, 2.27]).unwrap();
        let mm = mismatch_set_spdc(&modes, kp / 2.0, kp / 2.0, kp).unwrap();
        assert!(mm.dk.abs() < 1e-13);
        let (k1, k2) = (
            modes.signal_wavenumber(kp / 2.0).unwrap(),
            modes.idler_wavenumber(kp / 2.0).unwrap(),
        );
        let k3 = modes.pump_wavenumber(kp).unwrap();
        assert_relative_eq!(mm.dk12, mm.dk + 2.0 * k1 + 2.0 * k2, max_relative = 1e-14);
        assert_relative_eq!(mm.dk1 + mm.dk2, 2.0 * k3, max_relative = 1e-14);
        assert!(mismatch_set_spdc(&modes, -1.0, kp, kp).is_err());

        let sfwm = mismatch_set_sfwm(&modes, 4.0, 5.0, kp, kp).unwrap();
        let direct = 2.0 * modes.pump_wavenumber(kp).unwrap()
            - modes.signal_wavenumber(4.0).unwrap()
            - modes.idler_wavenumber(5.0).unwrap();
        assert_relative_eq!(sfwm.dk, direct, max_relative = 1e-14);
    }

    #[test]
    fn identity_mirror_overlaps() {
        let mm = MismatchSet::from_material(9.0, 9.3, 18.0);
        let ell = 10.0;
        let off = PolingProfile::disabled();
        let (inl, outr, outl) = (
            empty(AsymptoticKind::InLeft),
            empty(AsymptoticKind::OutRight),
            empty(AsymptoticKind::OutLeft),
        );
        let rr = overlap_spdc(&outr, &outr, &inl, &mm, ell, &off, false);
        assert_relative_eq!(
            rr.total.norm(),
            ell * sinc(mm.dk * ell / 2.0).abs(),
            max_relative = 1e-14
        );
        assert_eq!(rr.term(Term::Backward).unwrap(), Complex64::new(0.0, 0.0));

        let lr = overlap_spdc(&outl, &outr, &inl, &mm, ell, &off, false);
        assert_eq!(lr.total, Complex64::new(0.0, 0.0));

        let rr8 = overlap_spdc(&outr, &outr, &inl, &mm, ell, &off, true);
        assert_eq!(rr8.terms.len(), 8);
        assert_eq!(rr8.total, rr.total);
    }

    #[test]
    fn counter_propagating_term_dominates_under_qpm() {
        let mm = MismatchSet::from_material(9.0, 9.1, 18.3);
        let period = qpm_period(mm.dk2).unwrap();
        let length = 30.0 * period;
        let profile = PolingProfile::from_left_face(period, length).unwrap();
        let (inl, outr, outl) = (
            empty(AsymptoticKind::InLeft),
            empty(AsymptoticKind::OutRight),
            empty(AsymptoticKind::OutLeft),
        );
        let res = overlap_spdc(&outr, &outl, &inl, &mm, length, &profile, true);
        let main = res.term(Term::IdlerReversed).unwrap();
        assert!((main.norm() - 2.0 * length / PI).abs() < 1e-9);
        for (t, v) in &res.terms {
            if *t != Term::IdlerReversed {
                assert!(v.norm() < 1e-3 * main.norm(), "{t}: {v}");
            }
        }
    }

    #[test]
    fn sfwm_overlap_examples() {
        let mm = MismatchSet::from_material(9.0, 27.0, 36.0);
        let (inl, outr, outl) = (
            empty(AsymptoticKind::InLeft),
            empty(AsymptoticKind::OutRight),
            empty(AsymptoticKind::OutLeft),
        );
        let co = overlap_sfwm(&outr, &outr, &inl, &inl, &mm, 7.5);
        assert_relative_eq!(co.total.re, 7.5, max_relative = 1e-15);
        assert_eq!(
            overlap_sfwm(&outl, &outr, &inl, &inl, &mm, 7.5)
                .total
                .norm(),
            0.0
        );

        let mut doubled = inl;
        doubled.e_plus *= 2.0;
        let big = overlap_sfwm(&outr, &outr, &doubled, &doubled, &mm, 7.5);
        assert_relative_eq!(
            big.total.norm_sqr(),
            16.0 * co.total.norm_sqr(),
            max_relative = 1e-14
        );
    }

    proptest! {
        #[test]
        fn unpoled_integral_is_real_and_bounded(dk in -20.0f64..20.0, ell in 0.1f64..50.0) {
            let off = PolingProfile::disabled();
            let plus = phase_integral(dk, ell, &off);
            let minus = phase_integral(-dk, ell, &off);
            prop_assert!((minus - plus.conj()).norm() <= 1e-12 * ell);
            prop_assert!(plus.norm() <= ell * (1.0 + 1e-15));
            if dk != 0.0 {
                prop_assert!(plus.norm() <= (2.0 / dk.abs()).min(ell) * (1.0 + 1e-12));
            }
        }

        #[test]
        fn poled_integral_matches_midpoint_quadrature(
            dk in -15.0f64..15.0, periods in 0.5f64..6.0, period in 0.3f64..2.0, z0 in -3.0f64..3.0,
        ) {
            let length = periods * period;
            let profile = PolingProfile::new(period, z0).unwrap();
            let exact = phase_integral(dk, length, &profile);
            let oracle = midpoint_oracle(dk, length, &profile, 20_000);
            // midpoint error on each full cell is (1 - sinc(dk h / 2)) of its exact value
            let h = period / 20_000.0;
            let tol = 1e-10 * length + (1.0 - sinc(0.5 * dk * h)) * length * 2.0;
            prop_assert!((exact - oracle).norm() <= tol, "{exact} vs {oracle}");
        }

        #[test]
        fn term_total_is_sum(
            re in proptest::collection::vec(-1.0f64..1.0, 6),
            ell in 1.0f64..20.0, dk in -3.0f64..3.0,
        ) {
            let mk = |a: f64, b: f64, kind| CavityAmplitudes {
                kind,
                e_plus: Complex64::new(a, b),
                e_minus: Complex64::new(b, -a),
                f_plus: Complex64::new(1.0, 0.0),
                f_minus: Complex64::new(0.0, 0.0),
                g_plus: Complex64::new(0.0, 0.0),
                g_minus: Complex64::new(0.0, 0.0),
            };
            let s = mk(re[0], re[1], AsymptoticKind::OutRight);
            let i = mk(re[2], re[3], AsymptoticKind::OutLeft);
            let p = mk(re[4], re[5], AsymptoticKind::InLeft);
            let mm = MismatchSet::from_material(4.0, 4.0 + dk, 8.0);
            let profile = PolingProfile::new(0.9, -ell / 2.0).unwrap();
            let res = overlap_spdc(&s, &i, &p, &mm, ell, &profile, true);
            let sum: Complex64 = res.terms.iter().map(|(_, v)| v).sum();
            prop_assert!((sum - res.total).norm() <= 1e-12 * (1.0 + res.total.norm()));
        }
    }
}
