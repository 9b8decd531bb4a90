use proptest::prelude::*;

use riesz_core::circle::{self, AnalyticPoly};
use riesz_core::lemma::{self, LEMMA_TOL};
use riesz_core::measures::{self, CircleMeasure};
use riesz_core::polytorus::{self, MultiIndex, TrigPoly};
use riesz_core::{blaschke, Complex64};

fn complex() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn poly(max_degree: usize) -> impl Strategy<Value = AnalyticPoly> {
    prop::collection::vec(complex(), 1..=max_degree + 1).prop_map(AnalyticPoly::new)
}

fn radii() -> impl Strategy<Value = (f64, f64)> {
    (0.0..0.97f64, 0.0..1.0f64).prop_map(|(rho, u)| (rho * u, rho))
}

fn trig(dims: usize, lo: i32, hi: i32) -> impl Strategy<Value = TrigPoly> {
    prop::collection::vec((prop::collection::vec(lo..=hi, dims), complex()), 0..8)
        .prop_map(|terms| TrigPoly::from_terms(terms.into_iter().map(|(k, a)| (MultiIndex::new(k), a))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dilation_inequality_holds(f in poly(12), (r, rho) in radii()) {
        let rep = lemma::check_main_lemma(&f, r, rho, 1024).unwrap();
        prop_assert!(rep.holds_main(), "{rep:?}");
        prop_assert!(rep.holds_adjusted(), "{rep:?}");
        prop_assert!(rep.norm_r <= rep.norm_rho + LEMMA_TOL * (1.0 + rep.norm_rho));
    }

    #[test]
    fn both_sides_scale_with_the_modulus(f in poly(8), (r, rho) in radii(), c in complex()) {
        let a = lemma::check_main_lemma(&f, r, rho, 512).unwrap();
        let b = lemma::check_main_lemma(&f.scale(c), r, rho, 512).unwrap();
        let s = c.norm();
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * (1.0 + x.abs().max(y.abs()));
        prop_assert!(close(b.lhs, s * a.lhs), "{} {}", b.lhs, s * a.lhs);
        prop_assert!(close(b.norm_rho, s * a.norm_rho));
        prop_assert!(close(b.rhs_main, s * a.rhs_main) || s * a.rhs_main < 1e-6);
    }

    #[test]
    fn trapezoid_recovers_dilated_coefficients(f in poly(15), r in 0.0..1.0f64) {
        let coeffs = circle::dilate(&f, r, 64).unwrap().fourier_coefficients();
        for (k, a) in f.coeffs().iter().enumerate() {
            prop_assert!((coeffs[k] - a * r.powi(k as i32)).norm() < 1e-12);
        }
        prop_assert!(coeffs[f.degree() + 1..].iter().all(|c| c.norm() < 1e-12));
    }

    #[test]
    fn parseval_matches_quadrature(f in poly(10), r in 0.0..1.0f64) {
        let quad = circle::norm_l2(&circle::dilate(&f, r, 64).unwrap());
        prop_assert!((quad - f.norm_l2_parseval(r)).abs() < 1e-12 * (1.0 + quad));
    }

    #[test]
    fn poly_text_round_trips(f in poly(10)) {
        prop_assert_eq!(AnalyticPoly::parse(&f.to_text()).unwrap(), f);
    }

    #[test]
    fn factorization_is_faithful(f in poly(10), (r, rho) in radii()) {
        prop_assume!(rho > 0.05);
        let tr = blaschke::trace_with_nudge(&f, r, rho, 1024, 3).unwrap();
        prop_assert!(tr.boundary_defect < 1e-12);
        prop_assert!(tr.residual < 1e-9);
        prop_assert!(tr.verify().is_ok(), "{}", tr.to_record());
    }

    #[test]
    fn abschnitt_is_idempotent_and_composes(t in trig(4, -2, 2), d in 0usize..5, e in 0usize..5) {
        let once = polytorus::abschnitt(&t, d);
        prop_assert_eq!(polytorus::abschnitt(&once, d), once.clone());
        prop_assert_eq!(polytorus::abschnitt(&polytorus::abschnitt(&t, e), d), polytorus::abschnitt(&t, d.min(e)));
        prop_assert!(once.dimension() <= d);
        prop_assert_eq!(polytorus::abschnitt(&t, 4), t);
    }

    #[test]
    fn substitution_agrees_with_truncation(p in trig(4, 0, 3), d in 0usize..6) {
        prop_assert_eq!(polytorus::abschnitt_substitution(&p, d).unwrap(), polytorus::abschnitt(&p, d));
    }

    #[test]
    fn products_evaluate_pointwise(a in trig(3, -2, 2), b in trig(3, -2, 2), angles in prop::collection::vec(0.0..6.3f64, 3)) {
        let chi: Vec<Complex64> = angles.iter().map(|&t| Complex64::from_polar(1.0, t)).collect();
        let lhs = a.mul(&b).evaluate(&chi);
        let rhs = a.evaluate(&chi) * b.evaluate(&chi);
        prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + rhs.norm()));
    }

    #[test]
    fn trig_text_round_trips(t in trig(3, -3, 3)) {
        prop_assert_eq!(TrigPoly::parse(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn chains_of_abschnitte_reconstruct(p in trig(4, 0, 2), depth in 1usize..6) {
        let chain = polytorus::abschnitt_chain(&p, depth);
        prop_assert_eq!(polytorus::chain_reconstruct(&chain).unwrap(), polytorus::abschnitt(&p, depth));
    }

    #[test]
    fn edited_chains_are_rejected(p in trig(3, 0, 2), a in complex()) {
        prop_assume!(a.norm() > 1e-3);
        let mut chain = polytorus::abschnitt_chain(&p, 3);
        chain[1].add_term(MultiIndex::unit(1), a);
        prop_assert!(polytorus::chain_reconstruct(&chain).is_err());
    }

    #[test]
    fn point_mass_extension_is_the_kernel(theta in 0.0..6.28f64, z in complex()) {
        prop_assume!(z.norm() < 0.95);
        let mu = CircleMeasure::point_mass(theta).unwrap();
        let zeta = Complex64::from_polar(1.0, theta);
        let v = mu.poisson_extension(z).unwrap();
        prop_assert!((v.re - measures::poisson_kernel(zeta, z)).abs() < 1e-10 * (1.0 + v.re));
        prop_assert!(v.im.abs() < 1e-12);
    }

    #[test]
    fn analytic_densities_extend_analytically(c in prop::collection::vec(complex(), 1..6), z in complex()) {
        prop_assume!(z.norm() < 0.95);
        let mu = CircleMeasure::from_coefficients(0, &c).unwrap();
        prop_assert!(mu.is_analytic(16, 1e-12).unwrap().analytic);
        let f = AnalyticPoly::new(c);
        prop_assert!((mu.poisson_extension(z).unwrap() - f.evaluate(z)).norm() < 1e-10 * (1.0 + f.evaluate(z).norm()));
    }
}
