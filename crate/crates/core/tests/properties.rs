use approx::assert_abs_diff_eq;
use cvtf_core::fidelity::lower_bound_uni;
use cvtf_core::fock::{mean_photon, mean_total_photon};
use cvtf_core::{exact_bi_fidelity, exact_uni_fidelity, BipartiteSpectrum, SchmidtSpectrum};
use proptest::prelude::*;

fn probs(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, 1..=max_len).prop_filter_map("zero mass", |v| {
        let s: f64 = v.iter().sum();
        (s > 1e-6).then(|| v.iter().map(|x| x / s).collect())
    })
}

fn grid(max_side: usize) -> impl Strategy<Value = BipartiteSpectrum> {
    (1..=max_side).prop_flat_map(|side| {
        prop::collection::vec(0.0f64..1.0, side * side).prop_filter_map("zero mass", move |v| {
            let s: f64 = v.iter().sum();
            (s > 1e-6).then(|| {
                BipartiteSpectrum::from_flat(side, &v.iter().map(|x| x / s).collect::<Vec<_>>()).unwrap()
            })
        })
    })
}

fn transpose(g: &BipartiteSpectrum) -> BipartiteSpectrum {
    let side = g.side();
    let flat: Vec<f64> = (0..side * side).map(|i| g.get(i % side, i / side)).collect();
    BipartiteSpectrum::from_flat(side, &flat).unwrap()
}

proptest! {
    #[test]
    fn spectra_are_normalized(p in probs(12)) {
        let s = SchmidtSpectrum::new(&p).unwrap();
        prop_assert!((s.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(s.probs().iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn mean_photon_is_linear(p in probs(8), q in probs(8), t in 0.0f64..1.0) {
        let n = p.len().max(q.len());
        let a = SchmidtSpectrum::new(&p).unwrap().padded(n - 1);
        let b = SchmidtSpectrum::new(&q).unwrap().padded(n - 1);
        let mix: Vec<f64> = a.probs().iter().zip(b.probs()).map(|(x, y)| t * x + (1.0 - t) * y).collect();
        let m = SchmidtSpectrum::new(&mix).unwrap();
        prop_assert!((mean_photon(&m) - (t * mean_photon(&a) + (1.0 - t) * mean_photon(&b))).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip(p in probs(10), g in grid(4)) {
        let s = SchmidtSpectrum::new(&p).unwrap();
        let back: SchmidtSpectrum = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        prop_assert_eq!(back, s);
        let back: BipartiteSpectrum = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn lower_bound_holds(p in probs(8), xi in 0.0f64..3.0) {
        let s = SchmidtSpectrum::new(&p).unwrap();
        prop_assert!(lower_bound_uni(&s, xi) <= exact_uni_fidelity(&s, xi) + 1e-14);
    }

    #[test]
    fn lower_bound_saturates_on_two_levels(p1 in 0.0f64..1.0, xi in 0.0f64..3.0) {
        let s = SchmidtSpectrum::new(&[1.0 - p1, p1]).unwrap();
        prop_assert!((lower_bound_uni(&s, xi) - exact_uni_fidelity(&s, xi)).abs() < 1e-12);
    }

    #[test]
    fn product_grid_factorizes(p in probs(5), q in probs(5), xi in 0.0f64..2.0, xp in 0.0f64..2.0) {
        let n = p.len().max(q.len()) - 1;
        let a = SchmidtSpectrum::new(&p).unwrap().padded(n);
        let b = SchmidtSpectrum::new(&q).unwrap().padded(n);
        let g = BipartiteSpectrum::product(&a, &b);
        let lhs = exact_bi_fidelity(&g, xi, xp);
        let rhs = exact_uni_fidelity(&a, xi) * exact_uni_fidelity(&b, xp);
        prop_assert!((lhs - rhs).abs() < 1e-13);
    }

    #[test]
    fn swapping_modes_swaps_noise(g in grid(4), xi in 0.0f64..2.0, xp in 0.0f64..2.0) {
        let lhs = exact_bi_fidelity(&g, xi, xp);
        let rhs = exact_bi_fidelity(&transpose(&g), xp, xi);
        prop_assert!((lhs - rhs).abs() < 1e-14);
        prop_assert!((mean_total_photon(&g) - mean_total_photon(&transpose(&g))).abs() < 1e-13);
    }

    #[test]
    fn fidelity_in_unit_interval(g in grid(4), xi in 0.0f64..5.0, xp in 0.0f64..5.0) {
        let f = exact_bi_fidelity(&g, xi, xp);
        prop_assert!(f > 0.0 && f <= 1.0 + 1e-14);
    }

    #[test]
    fn fidelity_decreases_with_noise(p in probs(6), xi in 0.0f64..2.0, dxi in 0.01f64..1.0) {
        let s = SchmidtSpectrum::new(&p).unwrap();
        prop_assert!(exact_uni_fidelity(&s, xi + dxi) <= exact_uni_fidelity(&s, xi) + 1e-14);
    }
}

#[test]
fn zero_noise_is_perfect() {
    let s = SchmidtSpectrum::new(&[0.1, 0.2, 0.7]).unwrap();
    assert_abs_diff_eq!(exact_uni_fidelity(&s, 0.0), 1.0, epsilon = 1e-15);
}
