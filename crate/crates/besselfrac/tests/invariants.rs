use besselfrac::grid::{test_function, OperatorParams, TestKind};
use besselfrac::kernels::{classical_poisson, gauss_weierstrass, heat_kernel, k_sigma, poisson_kernel};
use besselfrac::operators::{calibrate_extension_constant, extension_constant, frac_power, RouteTag};
use besselfrac::quad::QuadratureSpec;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn heat_kernel_symmetric_and_positive(lambda in 0.3f64..4.0, t in 0.05f64..5.0, x in 0.05f64..6.0, y in 0.05f64..6.0) {
        let p = OperatorParams::new(lambda, 0.5).unwrap();
        let a = heat_kernel(&p, t, x, y).unwrap().value;
        let b = heat_kernel(&p, t, y, x).unwrap().value;
        prop_assert!(a > 0.0);
        prop_assert!(rel(a, b) < 1e-13);
    }

    #[test]
    fn dirichlet_heat_kernel(t in 0.05f64..5.0, x in 0.05f64..6.0, y in 0.05f64..6.0) {
        let p = OperatorParams::new(1.0, 0.5).unwrap();
        let w = heat_kernel(&p, t, x, y).unwrap().value;
        let want = gauss_weierstrass(t, x - y) - gauss_weierstrass(t, x + y);
        prop_assert!((w - want).abs() <= 1e-10 * want.abs() + 1e-300, "{w} vs {want}");
    }

    #[test]
    fn ksigma_symmetric_and_positive(lambda in 0.5f64..3.0, sigma in 0.1f64..0.9, x in 0.2f64..4.0, gap in 0.05f64..2.0) {
        let p = OperatorParams::new(lambda, sigma).unwrap();
        let spec = QuadratureSpec::default();
        let y = x + gap;
        let a = k_sigma(&p, x, y, &spec).unwrap().value;
        let b = k_sigma(&p, y, x, &spec).unwrap().value;
        prop_assert!(a > 0.0);
        prop_assert!(rel(a, b) < 1e-7, "{a} vs {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn dirichlet_poisson_kernel(t in 0.1f64..3.0, x in 0.1f64..4.0, y in 0.1f64..4.0) {
        let p = OperatorParams::new(1.0, 0.5).unwrap();
        let spec = QuadratureSpec::default().with_tolerances(1e-13, 1e-11);
        let v = poisson_kernel(&p, t, x, y, &spec).unwrap().value;
        let want = classical_poisson(t, x - y) - classical_poisson(t, x + y);
        prop_assert!(rel(v, want) < 1e-8, "{v} vs {want}");
    }

    #[test]
    fn heat_and_pointwise_routes_agree(lambda in 0.6f64..3.0, sigma in 0.1f64..0.9, x in 0.3f64..3.0) {
        let p = OperatorParams::new(lambda, sigma).unwrap();
        let u = test_function(TestKind::Phi { lambda, a: 1.0 }).unwrap();
        let spec = QuadratureSpec::default();
        let h = frac_power(&p, &u, x, RouteTag::Heat, &spec).unwrap().value;
        let w = frac_power(&p, &u, x, RouteTag::Pointwise, &spec).unwrap().value;
        prop_assert!((h - w).abs() <= 1e-5 * h.abs().max(1e-2), "{h} vs {w}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn extension_constant_is_universal(sigma in 0.15f64..0.85, x in 0.4f64..2.5) {
        let p = OperatorParams::new(1.0, sigma).unwrap();
        let f = test_function(TestKind::Phi { lambda: 1.0, a: 1.0 }).unwrap();
        let c = calibrate_extension_constant(&p, &f, x, &QuadratureSpec::default()).unwrap();
        prop_assert!(rel(c, extension_constant(sigma).unwrap()) < 1e-6, "{c}");
    }
}
