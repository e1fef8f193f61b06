use std::sync::Arc;

use proptest::prelude::*;

use semiprop_core::convergence::convergence_table;
use semiprop_core::lattice::{
    conformal_imaginary_part_residual, conformal_transport_derivative, functional_hj_residual, lattice_greens_function,
    LatticeConfig, LatticeField, Quadratic1d, Signature,
};
use semiprop_core::propagator::assemble_from_fields;
use semiprop_core::quadratic::{van_vleck_check, HarmonicOscillator, HarmonicTransport, HarmonicAction};
use semiprop_core::{finite_difference, Axis, Complex64, ComplexField, Factor, Grid1d, Order, PropagatorFactors, SpacetimeGrid};

fn grid() -> SpacetimeGrid {
    SpacetimeGrid::from_extents(-1.0, 1.0, 9, 0.2, 1.0, 5).unwrap()
}

fn field(g: &SpacetimeGrid, a: f64, b: f64, cc: f64) -> ComplexField {
    ComplexField::from_fn(g, "f", |x, t| Complex64::new(a * x + b * t, cc * x * t)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn assembly_is_multiplicative(a in -1.0..1.0f64, b in -1.0..1.0f64, cc in -1.0..1.0f64, d in -1.0..1.0f64, hbar in 0.3..3.0f64) {
        let g = grid();
        let (r1, r2) = (field(&g, a, b, 0.0), field(&g, d, 0.0, cc));
        let (s1, s2) = (field(&g, b, d, 0.0), field(&g, cc, a, 0.0));
        let sum = |p: &ComplexField, q: &ComplexField| p.zip_with(q, |u, v| u + v).unwrap();
        let whole = assemble_from_fields(&sum(&r1, &r2), &sum(&s1, &s2), hbar).unwrap();
        let k1 = assemble_from_fields(&r1, &s1, hbar).unwrap();
        let k2 = assemble_from_fields(&r2, &s2, hbar).unwrap();
        let prod = k1.zip_with(&k2, |u, v| u * v).unwrap();
        let gap = whole.zip_with(&prod, |u, v| u - v).unwrap().max_abs().unwrap();
        prop_assert!(gap <= 1e-12 * whole.max_abs().unwrap().max(1.0));
    }

    #[test]
    fn quadratics_differentiate_exactly(c0 in -2.0..2.0f64, c1 in -2.0..2.0f64, c2 in -2.0..2.0f64) {
        let g = grid();
        let f = ComplexField::from_fn(&g, "q", |x, t| Complex64::new(c0 + c1 * x + c2 * x * x + t, 0.0)).unwrap();
        let dx = finite_difference(&f, Axis::Space, Order::First).unwrap();
        let dxx = finite_difference(&f, Axis::Space, Order::Second).unwrap();
        for j in 0..g.n_t() {
            for i in 0..g.n_x() {
                if dx.is_valid(i, j) {
                    prop_assert!((dx.at(i, j).re - (c1 + 2.0 * c2 * g.x(i))).abs() < 1e-11);
                }
                if dxx.is_valid(i, j) {
                    prop_assert!((dxx.at(i, j).re - 2.0 * c2).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn euclidean_functional_is_nonnegative(values in prop::collection::vec(-2.0..2.0f64, 16), m in 0.1..3.0f64) {
        let cfg = LatticeConfig::new(vec![4, 4], 0.7, Signature::Euclidean, m).unwrap();
        let q = lattice_greens_function(&cfg).unwrap();
        let v = functional_hj_residual(&q, &LatticeField::new(cfg, values).unwrap()).unwrap();
        prop_assert!(v.re >= 0.0 && v.im == 0.0);
    }

    #[test]
    fn green_function_is_symmetric(n0 in 2usize..5, n1 in 2usize..5, m in 0.2..2.0f64) {
        let cfg = LatticeConfig::new(vec![n0, n1], 1.0, Signature::Euclidean, m).unwrap();
        prop_assert!(lattice_greens_function(&cfg).unwrap().asymmetry() < 1e-12);
    }

    #[test]
    fn imaginary_part_vanishes_for_analytic_transport(
        sigma in prop::collection::vec(-1.5..1.5f64, 9),
        phi in prop::collection::vec(-1.0..1.0f64, 9),
        lambda in -3.0..3.0f64,
    ) {
        let cfg = LatticeConfig::new(vec![3, 3], 1.0, Signature::Euclidean, 1.0).unwrap();
        let sigma = LatticeField::new(cfg.clone(), sigma).unwrap();
        let phi = LatticeField::new(cfg, phi).unwrap();
        let w = Quadratic1d { c0: 2.0, c1: 0.5, c2: 0.0 };
        let dr = conformal_transport_derivative(&sigma, lambda).unwrap();
        let r = conformal_imaginary_part_residual(&sigma, &phi, &w, &dr, lambda).unwrap();
        prop_assert!(r.iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn van_vleck_ignores_constant_shift_of_r(offset in -3.0..3.0f64) {
        let g = SpacetimeGrid::from_extents(-1.0, 1.0, 9, 0.3, 2.5, 7).unwrap();
        let x0s = Grid1d::new(-0.5, 0.5, 5).unwrap();
        let build = |r_offset: f64| {
            let osc = HarmonicOscillator { mass: 1.0, omega: 1.0, r_offset };
            PropagatorFactors::new(
                Factor::Closed(Arc::new(HarmonicTransport { omega: 1.0, offset: r_offset })),
                Factor::Closed(Arc::new(HarmonicAction { mass: 1.0, omega: 1.0, x0: 0.0 })),
                1.0,
                1.0,
            )
            .unwrap()
            .with_two_point(Arc::new(osc), 0.0)
        };
        let base = van_vleck_check(&build(0.0), &g, &x0s, None).unwrap();
        let shifted = van_vleck_check(&build(offset), &g, &x0s, None).unwrap();
        prop_assert!(shifted.max_deviation <= 1e-6);
        prop_assert!((shifted.constant - base.constant * (-offset).exp()).abs() <= 1e-12 * base.constant.max(1.0) * (-offset).exp().max(1.0));
    }

    #[test]
    fn power_law_has_its_own_order(p in 0.5..6.0f64, scale in 1e-6..1.0f64) {
        let levels: Vec<(f64, f64)> = [0.1, 0.05, 0.025].iter().map(|h: &f64| (*h, scale * h.powf(p))).collect();
        let rows = convergence_table(&levels, 0.0).unwrap();
        prop_assert!(rows[1..].iter().all(|r| (r.order.unwrap() - p).abs() < 1e-9));
    }
}
