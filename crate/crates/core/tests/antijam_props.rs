use std::f64::consts::TAU;

use num_complex::Complex64;
use proptest::prelude::*;

use nrjam::antijam::{
    apply_correction, correct_report, dirichlet_leakage_bound, select_m_prime_negation, select_m_prime_paper,
    verify_restoration, AntijamConfig, CorrectionSignal, Policy,
};
use nrjam::detector::{detect, DetectorConfig, ReferenceSource};
use nrjam::jammer::{apply_frequency_shift, JammerConfig};
use nrjam::ofdm::{spectrum, synthesize};

fn tone(f: f64, value: Complex64, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|t| value * Complex64::from_polar(1.0, TAU * f * t as f64 / n as f64) / n as f64)
        .collect()
}

/// Whether some `k` in `[0, N)` and `|z| <= 4` give `m' + k + i = z N`,
/// with every quantity doubled so half-integers stay exact.
fn resonates(twice_m: i64, twice_i: i64, n: i64) -> bool {
    (0..n).any(|k| (-4..=4).any(|z| twice_m + 2 * k + twice_i == 2 * z * n))
}

proptest! {
    #[test]
    fn correction_is_invertible(
        samples in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..256),
        m in -20.0f64..20.0,
        amp in 0.1f64..10.0,
        phase in -6.3f64..6.3,
    ) {
        let x: Vec<Complex64> = samples.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
        let n = x.len();
        let c = CorrectionSignal::new(m, amp, phase, Policy::OffsetNegation).unwrap();
        let back = apply_correction(&apply_correction(&x, &c, n).unwrap(), &c.inverse(), n).unwrap();
        for (a, b) in back.iter().zip(&x) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn negation_restores_orthogonality(n in 4usize..=128, i in 0usize..128, m in -10.0f64..10.0, phase in -3.0f64..3.0) {
        let i = i % n;
        let attacked = tone(i as f64 + m, Complex64::from_polar(1.0, phase), n);
        let fixed = apply_correction(&attacked, &select_m_prime_negation(m), n).unwrap();
        let bins = spectrum(&fixed).unwrap();
        for (k, b) in bins.iter().enumerate() {
            if k != i {
                prop_assert!(b.norm() < 1e-9, "k={k} leak={}", b.norm());
            }
        }
        prop_assert!((bins[i].norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn near_miss_leakage_is_bounded(i in 0usize..64, m in -6.0f64..6.0, delta in -0.01f64..0.01, amp in 0.1f64..10.0, phase in -3.0f64..3.0) {
        let n = 64;
        let x_i = Complex64::new(0.7, -0.7);
        let contribution = tone(i as f64 + m, x_i * Complex64::from_polar(amp, phase), n);
        let c = CorrectionSignal::new(-(m + delta), 1.0 / amp, -phase, Policy::OffsetNegation).unwrap();
        let bins = spectrum(&apply_correction(&contribution, &c, n).unwrap()).unwrap();
        let bound = dirichlet_leakage_bound(0.01, n);
        for (k, b) in bins.iter().enumerate() {
            if k != i {
                prop_assert!(b.norm() / x_i.norm() <= bound * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn noiseless_attack_is_fully_corrected(seed in 0u64..500, target in 0usize..64, m in -3.0f64..3.0) {
        prop_assume!((m - m.round()).abs() > 0.02);
        let reference = ReferenceSource::SeededQpsk { seed }.symbols(64).unwrap();
        let clean = synthesize(&reference, 64).unwrap();
        let jam = JammerConfig::frequency_shift(vec![target], m, 1.5, 0.2);
        let rx = apply_frequency_shift(&clean, &reference, &jam).unwrap().0;
        let cfg = DetectorConfig::default();
        let report = detect(&rx, &reference, &cfg).unwrap();
        let (fixed, _) = correct_report(&rx, &reference, &report, &AntijamConfig::default()).unwrap();
        let out = verify_restoration(&rx, &fixed, &reference, &cfg).unwrap();
        prop_assert_eq!(out.psi_before, 63);
        prop_assert_eq!(out.psi_after, 0);
    }
}

#[test]
fn paper_rule_exhaustive() {
    for n in [4i64, 8, 16] {
        for twice_i in 0..2 * n {
            let candidates: Vec<i64> = (-2 * n..=2 * n).collect();
            for &twice_m in &candidates {
                let accepted = select_m_prime_paper(twice_i as f64 / 2.0, n as usize, &[twice_m as f64 / 2.0]).is_some();
                assert_eq!(accepted, !resonates(twice_m, twice_i, n), "n={n} i={twice_i}/2 m={twice_m}/2");
                if twice_i % 2 == 0 {
                    assert_eq!(accepted, twice_m % 2 != 0);
                }
            }
            if twice_i % 2 == 0 {
                let integers: Vec<f64> = (0..n).map(|m| m as f64).collect();
                assert_eq!(select_m_prime_paper(twice_i as f64 / 2.0, n as usize, &integers), None);
            }
        }
    }
}

#[test]
fn paper_rule_examples() {
    assert_eq!(select_m_prime_paper(5.0, 8, &[1.0]), None);
    assert!(resonates(2, 10, 8));
    assert_eq!(select_m_prime_paper(5.0, 8, &[0.5]), Some(0.5));
    let all: Vec<f64> = (0..8).map(f64::from).collect();
    assert_eq!(select_m_prime_paper(5.0, 8, &all), None);
}

#[test]
fn identity_correction_is_a_no_op() {
    let x = vec![Complex64::new(0.3, -1.2), Complex64::new(2.0, 0.5)];
    assert_eq!(apply_correction(&x, &CorrectionSignal::identity(), 2).unwrap(), x);
    assert!(apply_correction(&x, &CorrectionSignal::identity(), 3).is_err());
}
