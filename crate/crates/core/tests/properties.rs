use std::collections::BTreeMap;

use nalgebra::DMatrix;
use proptest::prelude::*;

use germlab::experiments::{in_n_eps, random_linear_map};
use germlab::measure::{classify_density, unit_ball_volume, DensityEstimate};
use germlab::separating::Bisector;
use germlab::tangent_cone::{horn_membership, HornNeighborhood, HornPiece};
use germlab::{eval, parse_polynomial, weighted_scale, DensityClass, VarietySpec, WeightVector};

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bisector_is_antisymmetric(a in prop::collection::vec(point(3), 1..6), b in prop::collection::vec(point(3), 1..6), p in point(3)) {
        let ab = Bisector::new(&a, &b);
        let ba = Bisector::new(&b, &a);
        prop_assert!((ab.value(&p) + ba.value(&p)).abs() < 1e-12);
    }

    #[test]
    fn horns_are_nested(p in point(3), c in 0.1..2.0f64, alpha in 1.1..3.0f64) {
        let axis = HornPiece::Linear(DMatrix::from_column_slice(3, 1, &[0.0, 0.0, 1.0]));
        let small = HornNeighborhood::new(vec![axis.clone()], c, alpha).unwrap();
        let large = HornNeighborhood::new(vec![axis], 2.0 * c, alpha).unwrap();
        prop_assert!(!horn_membership(&p, &small) || horn_membership(&p, &large));
    }

    #[test]
    fn scaling_preserves_the_germ(re in -1.0..1.0f64, im in -1.0..1.0f64, t in 0.05..1.0f64, u in 0.05..1.0f64) {
        // x^2 + y^2 + z^3 with x = i y and z = 0, scaled by weights (3, 3, 2).
        let spec = VarietySpec::a_k(2);
        let w = WeightVector::new(vec![3, 3, 2]).unwrap();
        let p = vec![-im, re, re, im, 0.0, 0.0];
        let q = weighted_scale(&p, &w, t).unwrap();
        prop_assert!(eval(&spec, &q).unwrap()[0].norm() < 1e-12);
        let composed = weighted_scale(&q, &w, u).unwrap();
        let direct = weighted_scale(&p, &w, t * u).unwrap();
        for (a, b) in composed.iter().zip(&direct) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn circle_action_preserves_brieskorn(p in point(6), theta in 0.0..6.3f64) {
        // exp(i theta) acts with weights (qr, pr, pq) on X(p, q, r).
        let spec = VarietySpec::brieskorn(2, 4, 5);
        let weights = [20.0, 10.0, 8.0];
        let rotated: Vec<f64> = (0..3)
            .flat_map(|j| {
                let (s, c) = (weights[j] * theta).sin_cos();
                [c * p[2 * j] - s * p[2 * j + 1], s * p[2 * j] + c * p[2 * j + 1]]
            })
            .collect();
        let a = eval(&spec, &p).unwrap()[0].norm();
        let b = eval(&spec, &rotated).unwrap()[0].norm();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
    }

    #[test]
    fn density_exponent_ignores_constant_factors(beta in -0.5..1.5f64, k in 0.1..10.0f64) {
        let grid: Vec<f64> = (0..7).map(|i| 0.1 * 0.5f64.powi(i)).collect();
        let ratios: Vec<f64> = grid.iter().map(|e| e.powf(beta)).collect();
        let scaled: Vec<f64> = ratios.iter().map(|r| k * r).collect();
        let a = DensityEstimate::from_ratios(2, &grid, ratios, vec![0.0; 7]);
        let b = DensityEstimate::from_ratios(2, &grid, scaled, vec![0.0; 7]);
        prop_assert!((a.beta - beta).abs() < 1e-9);
        prop_assert!((a.beta - b.beta).abs() < 1e-9);
        if beta > 0.3 {
            prop_assert_eq!(classify_density(&a, 0.2, 0.05), DensityClass::Zero);
        }
    }

    #[test]
    fn n_eps_is_symmetric(p in point(6), eps in 0.0..1.0f64) {
        let swapped = vec![p[0], p[1], p[4], p[5], p[2], p[3]];
        prop_assert_eq!(in_n_eps(&p, eps), in_n_eps(&swapped, eps));
    }

    #[test]
    fn random_maps_are_well_conditioned(seed in any::<u64>(), n in 2usize..8) {
        let s = random_linear_map(n, 3.0, seed).svd(false, false).singular_values;
        let hi = s.max();
        let lo = s.min();
        prop_assert!(lo >= 1.0 - 1e-9 && hi <= 3.0 + 1e-9);
    }

    #[test]
    fn polynomial_display_round_trips(c in prop::collection::vec(-3i32..4, 4), e in prop::collection::vec(0u32..5, 12)) {
        let vars: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        let src: Vec<String> = (0..4)
            .map(|i| format!("{}*x^{}*y^{}*z^{}", c[i], e[3 * i], e[3 * i + 1], e[3 * i + 2]))
            .collect();
        let p = parse_polynomial(&src.join(" + "), &vars, &BTreeMap::new()).unwrap();
        let q = parse_polynomial(&p.display_with(&vars), &vars, &BTreeMap::new()).unwrap();
        let z = [num_complex::Complex64::new(0.3, -0.2), num_complex::Complex64::new(-0.7, 0.1), num_complex::Complex64::new(0.5, 0.4)];
        prop_assert!((p.eval(&z) - q.eval(&z)).norm() < 1e-9);
    }
}

#[test]
fn ball_volumes_follow_recursion() {
    for k in 2..12 {
        let a = unit_ball_volume(k).unwrap();
        let b = 2.0 * std::f64::consts::PI / k as f64 * unit_ball_volume(k - 2).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }
}
