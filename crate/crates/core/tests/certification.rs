use approx::assert_abs_diff_eq;
use cvtf_core::closedform::{split_grid, split_three_case, SplitQuadratic};
use cvtf_core::optimize::{grid_oracle, minimize_bi, minimize_uni};
use cvtf_core::{
    exact_bi_fidelity, optimal_bi_asym, optimal_bi_equal, optimal_uni, submult_gap, MinimizeOptions,
    PolytopeSpec,
};

#[test]
fn uni_optimizer_certifies_closed_form() {
    let opts = MinimizeOptions::default();
    for xi in [0.05, 0.3, 1.5] {
        for f in [0.2, 0.6, 1.0] {
            let e = f * (1.0 + xi) / (1.0 + 3.0 * xi);
            let r = minimize_uni(&PolytopeSpec::uni(8, e).unwrap(), xi, &opts).unwrap();
            let c = optimal_uni(e, xi).unwrap();
            assert_abs_diff_eq!(r.value, c.fidelity, epsilon = 1e-10);
            let p = r.probs();
            assert_abs_diff_eq!(p[1], e, epsilon = 1e-6);
            assert!(p[2..].iter().all(|x| x.abs() < 1e-6));
            assert_eq!(r.starts_agreeing, opts.starts);
        }
    }
}

#[test]
fn asym_closed_form_is_full_polytope_optimum() {
    let opts = MinimizeOptions::default();
    for &(e, xi, xp) in &[(0.1, 0.0, 2.0), (0.1, 5.0, 2.0), (0.125, 3.0, 2.0), (0.15, 2.0, 4.0), (0.05, 0.5, 1.5)] {
        let r = minimize_bi(&PolytopeSpec::bi(5, e).unwrap(), xi, xp, &opts).unwrap();
        let c = optimal_bi_asym(e, xi, xp).unwrap();
        assert_abs_diff_eq!(r.value, c.fidelity, epsilon = 1e-10);
        let g = r.minimizer.as_bi().unwrap();
        assert_abs_diff_eq!(g.get(1, 0), c.p_split.unwrap(), epsilon = 1e-6);
    }
}

#[test]
fn three_case_split_is_not_optimal() {
    // the three-case branches give strictly worse (higher) fidelity than the optimum
    for &(e, xi, xp) in &[(0.1, 0.0, 2.0), (0.1, 5.0, 2.0), (0.125, 3.0, 2.0), (0.15, 2.0, 4.0)] {
        let three = split_three_case(e, xi, xp).clamp(0.0, 2.0 * e);
        let f_three = exact_bi_fidelity(&split_grid(e, three).unwrap(), xi, xp);
        let f_opt = optimal_bi_asym(e, xi, xp).unwrap().fidelity;
        assert!(f_opt < f_three - 1e-6, "{e} {xi} {xp}: {f_opt} vs {f_three}");
    }
}

#[test]
fn corrected_split_is_continuous() {
    let (xi, xp) = (5.0, 2.0);
    let mut prev: Option<f64> = None;
    for k in 0..=600 {
        let e = 0.15 * k as f64 / 600.0;
        let x = SplitQuadratic::new(e, xi, xp).minimizer();
        if let Some(p) = prev {
            assert!((x - p).abs() < 2e-3);
        }
        prev = Some(x);
    }
}

#[test]
fn optimal_fidelities_decrease_in_energy() {
    for xi in [0.1, 0.7] {
        let bound = (1.0 + xi) / (1.0 + 3.0 * xi);
        let vals: Vec<f64> = (0..=50).map(|k| optimal_uni(bound * k as f64 / 50.0, xi).unwrap().fidelity).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
        let bound = (1.0 + xi) / (2.0 + 3.0 * xi) / 2.0;
        let vals: Vec<f64> = (0..=50).map(|k| optimal_bi_equal(bound * k as f64 / 50.0, xi).unwrap().fidelity).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
    }
}

#[test]
fn two_mode_optimum_is_submultiplicative() {
    for xi in [0.05, 0.1, 1.0] {
        let bound = (1.0 + xi) / (2.0 + 3.0 * xi) / 2.0;
        for k in 1..=20 {
            let e = bound * k as f64 / 20.0;
            let u = optimal_uni(e, xi).unwrap().fidelity;
            assert!(optimal_bi_equal(e, xi).unwrap().fidelity < u * u);
            assert!(submult_gap(e, xi).unwrap() > 0.0);
        }
    }
}

#[test]
fn optimizer_never_loses_to_lattice() {
    let opts = MinimizeOptions::default();
    let spec = PolytopeSpec::uni(3, 0.95).unwrap();
    let g = grid_oracle(&spec, 0.1, None, 0.02).unwrap();
    let r = minimize_uni(&spec, 0.1, &opts).unwrap();
    assert!(r.value <= g.value + 1e-9);

    let spec = PolytopeSpec::bi(1, 0.35).unwrap();
    let g = grid_oracle(&spec, 0.4, Some(1.3), 0.01).unwrap();
    let r = minimize_bi(&spec, 0.4, 1.3, &opts).unwrap();
    assert!(r.value <= g.value + 1e-9);
}
