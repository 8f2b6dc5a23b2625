use asymphot::{
    normalize, spectral_densities, total_rate, wavenumber_from_nm, Cavity, ChannelPair,
    DetectorEnvelope, EffectiveCoupling, ModeSet, PairSource, PolingProfile, SfwmModel, SpdcModel,
    SpectralResult, WavenumberGrid,
};
use proptest::prelude::*;

fn kp() -> f64 {
    wavenumber_from_nm(750.0).unwrap()
}

fn spdc(cavity: Cavity, modes: ModeSet, g: f64, counter: bool) -> SpdcModel {
    SpdcModel {
        cavity,
        modes,
        coupling: EffectiveCoupling::new(g).unwrap(),
        poling: PolingProfile::disabled(),
        counter_terms: counter,
        k_pump: kp(),
    }
}

fn fig4_modes() -> ModeSet {
    ModeSet::spdc(kp(), [2.18, 2.14, 2.22], [2.28, 2.18, 2.27]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectra_are_non_negative(
        r1 in -0.95f64..0.95,
        r2 in -0.95f64..0.95,
        length in 1.0f64..30.0,
        frac in 0.3f64..0.7,
        counter in any::<bool>(),
    ) {
        let model = spdc(Cavity::flat(r1, r2, length).unwrap(), fig4_modes(), 1.0, counter);
        let env = DetectorEnvelope::gaussian(0.5 * kp(), 0.04 * 0.5 * kp()).unwrap();
        for v in spectral_densities(&model, &env, frac * kp()).unwrap() {
            prop_assert!(v >= 0.0 && v.is_finite());
        }
    }

    #[test]
    fn coupling_scale_enters_squared(
        s in 0.01f64..100.0,
        r in 0.0f64..0.9,
        frac in 0.45f64..0.55,
    ) {
        let env = DetectorEnvelope::disabled();
        let cavity = Cavity::flat(r, -r, 10.15).unwrap();
        let base = spdc(cavity, fig4_modes(), 1.0, true);
        let scaled = spdc(cavity, fig4_modes(), s, true);
        let a = spectral_densities(&base, &env, frac * kp()).unwrap();
        let b = spectral_densities(&scaled, &env, frac * kp()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((y - s * s * x).abs() <= 1e-12 * (s * s * x).abs().max(1e-300));
        }
        let k = kp();
        let modes = ModeSet::with_references([k, k / 2.0, 1.5 * k], [2.18, 2.15, 2.19], [2.28, 2.18, 2.32]).unwrap();
        let f1 = SfwmModel { cavity, modes, coupling: EffectiveCoupling::new(1.0).unwrap(), k_pump: k };
        let fs = SfwmModel { coupling: EffectiveCoupling::new(s).unwrap(), ..f1.clone() };
        let a = spectral_densities(&f1, &env, frac * k).unwrap();
        let b = spectral_densities(&fs, &env, frac * k).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((y - s * s * x).abs() <= 1e-12 * (s * s * x).abs().max(1e-300));
        }
    }

    #[test]
    fn mixed_channels_mirror_for_symmetric_cavities(
        r in 0.0f64..0.9,
        length in 2.0f64..20.0,
        frac in 0.4f64..0.6,
    ) {
        let k = kp();
        let modes = ModeSet::spdc(k, [2.18, 2.14, 2.14], [2.28, 2.18, 2.18]).unwrap();
        let model = spdc(Cavity::flat(r, -r, length).unwrap(), modes, 1.0, true);
        let env = DetectorEnvelope::disabled();
        let a = spectral_densities(&model, &env, frac * k).unwrap();
        let b = spectral_densities(&model, &env, k - frac * k).unwrap();
        let (rl, lr) = (a[ChannelPair::RL.index()], b[ChannelPair::LR.index()]);
        prop_assert!((rl - lr).abs() <= 1e-10 * rl.abs().max(lr.abs()).max(1e-300), "{} vs {}", rl, lr);
    }

    #[test]
    fn bare_crystal_never_emits_left_pairs(length in 1.0f64..50.0, frac in 0.2f64..0.8) {
        let model = spdc(Cavity::bare(length).unwrap(), fig4_modes(), 1.0, false);
        let v = spectral_densities(&model, &DetectorEnvelope::disabled(), frac * kp()).unwrap();
        prop_assert_eq!(v[ChannelPair::LL.index()], 0.0);
        prop_assert_eq!(v[ChannelPair::RL.index()], 0.0);
        prop_assert_eq!(v[ChannelPair::LR.index()], 0.0);
        prop_assert!(v[ChannelPair::RR.index()] > 0.0);
    }

    #[test]
    fn normalized_maximum_is_one(values in prop::collection::vec(0.0f64..1e6, 1..50)) {
        let series: Vec<Option<f64>> = values.iter().map(|v| Some(*v)).collect();
        let (n, rec) = normalize(&series);
        let max = n.iter().flatten().fold(0.0f64, |m, v| m.max(*v));
        if rec.normalized {
            prop_assert_eq!(max, 1.0);
            for (a, b) in n.iter().zip(&values) {
                prop_assert!((a.unwrap() * rec.raw_max - b).abs() <= 1e-9 * b.max(1.0));
            }
        } else {
            prop_assert!(values.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn trapezoid_total_of_a_constant(h in 0.0f64..1e3, lo in 0.1f64..5.0, w in 0.1f64..5.0, n in 3usize..200) {
        let grid = WavenumberGrid::new(lo, lo + w, n).unwrap();
        let spec = SpectralResult { grid, raw: std::array::from_fn(|_| vec![Some(h); n]) };
        for t in total_rate(&spec).unwrap() {
            prop_assert!((t - h * w).abs() <= 1e-12 * (h * w).max(1.0));
        }
    }
}

#[test]
fn idler_follows_energy_conservation() {
    let k = kp();
    let model = spdc(Cavity::bare(5.0).unwrap(), fig4_modes(), 1.0, false);
    assert_eq!(model.idler_wavenumber(0.3 * k), k - 0.3 * k);
    let modes = ModeSet::with_references(
        [k, k / 2.0, 1.5 * k],
        [2.18, 2.15, 2.19],
        [2.28, 2.18, 2.32],
    )
    .unwrap();
    let sfwm = SfwmModel {
        cavity: Cavity::bare(5.0).unwrap(),
        modes,
        coupling: EffectiveCoupling::default(),
        k_pump: k,
    };
    assert_eq!(sfwm.idler_wavenumber(0.3 * k), 2.0 * k - 0.3 * k);
}
