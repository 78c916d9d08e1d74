use adc_planner::linalg::CMatrix;
use adc_planner::power::PowerModel;
use adc_planner::quantizer::{BetaTable, QuantizerSpec};
use adc_planner::rates::{
    aqnm_spectral_efficiency, analog_combiner_csit, realization_rate, waterfill, ChannelRealization, LinkConfig,
};
use adc_planner::{Architecture, Csit};
use num_complex::Complex;
use proptest::prelude::*;

fn channel(nr: usize, nt: usize) -> impl Strategy<Value = ChannelRealization<f64>> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), nr * nt).prop_map(move |v| {
        let data = v.into_iter().map(|(re, im)| Complex::new(re, im)).collect();
        ChannelRealization::new(CMatrix::from_rows(nr, nt, data).unwrap())
    })
}

fn arch_csit() -> impl Strategy<Value = (Architecture, Csit)> {
    prop_oneof![
        Just((Architecture::Digital, Csit::Yes)),
        Just((Architecture::Digital, Csit::No)),
        Just((Architecture::Analog, Csit::Yes)),
        Just((Architecture::Analog, Csit::No)),
    ]
}

proptest! {
    #[test]
    fn waterfill_spends_exactly_the_budget(
        lambda2 in prop::collection::vec(1e-3f64..10.0, 1..8),
        power in 1e-3f64..1e3,
    ) {
        let a = waterfill(&lambda2, power, 1.0).unwrap();
        let total: f64 = a.q.iter().sum();
        prop_assert!((total - power).abs() <= 1e-9 * power);
        prop_assert!(a.q.iter().all(|&q| q >= 0.0));
        // stronger eigen-channels never get less power
        for i in 0..lambda2.len() {
            for j in 0..lambda2.len() {
                if lambda2[i] > lambda2[j] {
                    prop_assert!(a.q[i] >= a.q[j] - 1e-12);
                }
            }
        }
    }

    #[test]
    fn aqnm_efficiency_is_bounded_and_monotone(snr in 1e-4f64..1e4, b1 in 0.01f64..0.99, b2 in 0.01f64..0.99) {
        let (lo, hi) = if b1 < b2 { (b1, b2) } else { (b2, b1) };
        let a = aqnm_spectral_efficiency(snr, lo);
        prop_assert!(a >= aqnm_spectral_efficiency(snr, hi));
        prop_assert!(a <= -lo.log2());
        prop_assert!(a <= (1.0 + snr).log2());
        prop_assert!(aqnm_spectral_efficiency(snr * 2.0, lo) >= a);
    }

    #[test]
    fn rates_shrink_with_distortion(
        ch in channel(3, 2),
        (arch, csit) in arch_csit(),
        db in -20.0f64..20.0,
        w in 1e8f64..7e9,
        b1 in 0.0f64..1.0,
        b2 in 0.0f64..1.0,
    ) {
        let (lo, hi) = if b1 < b2 { (b1, b2) } else { (b2, b1) };
        let cfg = LinkConfig::from_full_band_snr_db(db, 7e9, 2, 3, arch, csit);
        let r_lo = realization_rate(&ch, &cfg, w, lo).unwrap();
        let r_hi = realization_rate(&ch, &cfg, w, hi).unwrap();
        prop_assert!(r_hi >= 0.0);
        prop_assert!(r_lo >= r_hi * (1.0 - 1e-12) - 1e-3);
        let r_one = realization_rate(&ch, &cfg, w, 1.0).unwrap();
        prop_assert!(r_one.abs() <= 1e-6 * r_lo.max(1.0));
    }

    #[test]
    fn csit_combiner_is_unit_modulus(ch in channel(4, 3)) {
        prop_assume!(!ch.h.is_zero());
        let c = analog_combiner_csit(&ch, 500, 1e-12).unwrap();
        prop_assert!(c.wr.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        let wt_norm: f64 = c.wt.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((wt_norm - 1.0).abs() < 1e-12);
        // ‖w‖² = Nr, so the gain is at most Nr·tr(HHᴴ)
        let trace = ch.h.gram_rows().diag_re().iter().sum::<f64>();
        prop_assert!(c.gain2 <= 4.0 * trace * (1.0 + 1e-12));
    }

    #[test]
    fn max_bandwidth_is_affordable(
        (arch, _) in arch_csit(),
        nr in 1usize..8,
        bins in 2usize..32,
        budget_mw in 1.0f64..1000.0,
    ) {
        let model = PowerModel::<f64>::default();
        let budget = budget_mw * 1e-3;
        if let Ok(w) = model.max_bandwidth(arch, nr, bins, budget) {
            prop_assert!(w > 0.0);
            let p = model.p_total(arch, nr, w, bins);
            prop_assert!((p - budget).abs() <= 1e-12 * budget);
        }
    }

    #[test]
    fn adc_power_is_bilinear(w in 1e6f64..1e10, bins in 1usize..64, k in 1usize..4) {
        let model = PowerModel::<f64>::default();
        let p = model.p_adc(w, bins);
        prop_assert!((model.p_adc(w * k as f64, bins) - p * k as f64).abs() <= 1e-12 * p * k as f64);
        prop_assert!((model.p_adc(w, bins * k) - p * k as f64).abs() <= 1e-12 * p * k as f64);
    }

    #[test]
    fn quantizer_output_is_a_level(z in -6.0f64..6.0, bins in 1usize..16) {
        let spec = QuantizerSpec::<f64>::lloyd_max(bins).unwrap();
        let q = spec.quantize(z, 1.0);
        prop_assert!(spec.levels.iter().any(|&l| l == q));
        // nearest level
        let best = spec.levels.iter().map(|&l| (l - z).abs()).fold(f64::INFINITY, f64::min);
        prop_assert!(((q - z).abs() - best).abs() < 1e-9);
    }
}

#[test]
fn beta_strictly_decreases_with_resolution() {
    let t = BetaTable::<f64>::lloyd_max(64).unwrap();
    let mut prev = t.get(1).unwrap();
    assert_eq!(prev, 1.0);
    for b in 2..=64 {
        let beta = t.get(b).unwrap();
        assert!(beta < prev && beta > 0.0, "b={b}");
        prev = beta;
    }
}

#[test]
fn f32_and_f64_quantizers_agree() {
    for b in [2, 4, 8] {
        let a = QuantizerSpec::<f32>::lloyd_max(b).unwrap().beta as f64;
        let c = QuantizerSpec::<f64>::lloyd_max(b).unwrap().beta;
        assert!((a - c).abs() < 1e-5, "b={b}: {a} vs {c}");
    }
}
