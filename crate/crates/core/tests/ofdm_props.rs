mod common;

use num_complex::Complex64;
use proptest::prelude::*;

use nrjam::ofdm::{geometric_sum, inner_product, spectrum, synthesize_bins, SubcarrierWaveform};

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0).prop_map(|(re, im)| Complex64::new(re, im)), len)
}

fn sized_pair() -> impl Strategy<Value = (Vec<Complex64>, Vec<Complex64>)> {
    (2usize..=128).prop_flat_map(|n| (complex_vec(n), complex_vec(n)))
}

proptest! {
    #[test]
    fn synthesis_is_linear((a, b) in sized_pair(), alpha in -5.0f64..5.0, beta in -5.0f64..5.0) {
        let mix: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x * alpha + y * beta).collect();
        let lhs = synthesize_bins(&mix);
        let xa = synthesize_bins(&a);
        let xb = synthesize_bins(&b);
        for t in 0..a.len() {
            prop_assert!((lhs[t] - (xa[t] * alpha + xb[t] * beta)).norm() < 1e-9);
        }
    }

    #[test]
    fn parseval((a, _) in sized_pair()) {
        let x = synthesize_bins(&a);
        let n = a.len() as f64;
        let time: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        let freq: f64 = a.iter().map(|v| v.norm_sqr()).sum();
        prop_assert!((time * n - freq).abs() <= 1e-9 * freq.max(1.0));
    }

    #[test]
    fn round_trip_matches_dft_oracle((a, _) in sized_pair()) {
        let x = synthesize_bins(&a);
        let back = spectrum(&x).unwrap();
        let oracle = common::dft(&x);
        for k in 0..a.len() {
            prop_assert!((back[k] - a[k]).norm() < 1e-9);
            prop_assert!((oracle[k] - a[k]).norm() < 1e-9);
        }
    }

    #[test]
    fn geometric_sum_matches_brute_force(n in 1usize..=2048, scale in -4.0f64..4.0) {
        let d = scale * n as f64;
        let got = geometric_sum(d, n).unwrap();
        let want = common::geometric_sum_brute(d, n);
        prop_assert!((got - want).norm() < 1e-9, "d={d} n={n} got={got} want={want}");
    }

    #[test]
    fn geometric_sum_integer_values(n in 1usize..=512, z in -2000i64..2000) {
        let g = geometric_sum(z as f64, n).unwrap();
        if z.rem_euclid(n as i64) == 0 {
            prop_assert_eq!(g, Complex64::new(n as f64, 0.0));
        } else {
            prop_assert_eq!(g, Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn distinct_integer_subcarriers_are_orthogonal(n in 2usize..=128, k in 0usize..128, i in 0usize..128, pk in 0.0f64..6.3, pi in 0.0f64..6.3) {
        let (k, i) = (k % n, i % n);
        let ck = SubcarrierWaveform::tone(k as f64, 1.0, pk, n);
        let ci = SubcarrierWaveform::tone(i as f64, 1.0, pi, n);
        let o = inner_product(&ck, &ci).unwrap();
        if k == i {
            prop_assert!((o.norm() - 1.0).abs() < 1e-12);
        } else {
            prop_assert!(o.norm() < 1e-12);
        }
    }
}

#[test]
fn geometric_sum_near_singular_points() {
    for &n in &[8usize, 64, 2048] {
        for &d in &[1e-12, -1e-12, n as f64 + 1e-10, 3.0 * n as f64 - 1e-11] {
            let got = geometric_sum(d, n).unwrap();
            let want = common::geometric_sum_brute(d, n);
            assert!((got - want).norm() < 1e-9, "d={d} n={n}");
        }
    }
    assert!(geometric_sum(f64::NAN, 8).is_err());
    assert!(geometric_sum(0.5, 0).is_err());
}
