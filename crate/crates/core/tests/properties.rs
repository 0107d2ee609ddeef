use num_complex::Complex64;
use proptest::prelude::*;
use std::sync::{Arc, OnceLock};

use watsonlab::group::{bruhat_factor, evaluate_word, inverse, multiply, GroupElement};
use watsonlab::space::{build_grid, inner_product, norm, parity_project, Parity, SampledFunction, SpaceTag, WeightedGrid};
use watsonlab::special::{bessel_k, phi_bessel, psi_s};
use watsonlab::transforms::{dilate, r_apply, rho_s_q_closed, RepParams};

fn grid() -> &'static Arc<WeightedGrid> {
    static G: OnceLock<Arc<WeightedGrid>> = OnceLock::new();
    G.get_or_init(|| build_grid(30.0, 1024, 3.0).unwrap())
}

fn entry() -> impl Strategy<Value = f64> {
    -3.0..3.0f64
}

fn invertible() -> impl Strategy<Value = GroupElement> {
    (entry(), entry(), entry(), entry())
        .prop_filter("well conditioned", |(a, b, c, d)| (a * d - b * c).abs() > 1e-2)
        .prop_map(|(a, b, c, d)| GroupElement::new(a, b, c, d).unwrap())
}

fn tag() -> impl Strategy<Value = SpaceTag> {
    prop_oneof![
        (0.05..0.95f64).prop_map(|s| SpaceTag::h(s).unwrap()),
        (0.05..0.95f64).prop_map(|s| SpaceTag::v(s).unwrap()),
        Just(SpaceTag::plain()),
    ]
}

// A random smooth test function: a shifted, modulated Gaussian.
fn bump() -> impl Strategy<Value = SampledFunction> {
    (-2.0..2.0f64, 0.5..2.0f64, -2.0..2.0f64, -1.0..1.0f64).prop_map(|(c, w, om, ph)| {
        SampledFunction::from_fn(grid(), Parity::None, move |x| {
            Complex64::from_polar((-(x - c) * (x - c) / (2.0 * w * w)).exp(), om * x + ph)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bruhat_round_trip(g in invertible()) {
        let w = bruhat_factor(&g).unwrap();
        prop_assert!(w.len() <= 4);
        prop_assert!(evaluate_word(&w).rel_diff(&g) < 1e-11);
    }

    #[test]
    fn determinant_is_multiplicative(g in invertible(), h in invertible()) {
        let gh = multiply(&g, &h);
        prop_assert!((gh.det() - g.det() * h.det()).abs() <= 1e-12 * (1.0 + (g.det() * h.det()).abs()) * 100.0);
        let e = multiply(&g, &inverse(&g).unwrap());
        prop_assert!(e.rel_diff(&GroupElement::identity()) < 1e-10);
    }

    #[test]
    fn cauchy_schwarz(f in bump(), g in bump(), t in tag()) {
        let fg = inner_product(&f, &g, t).unwrap();
        let ff = inner_product(&f, &f, t).unwrap().re;
        let gg = inner_product(&g, &g, t).unwrap().re;
        prop_assert!(fg.norm_sqr() <= ff * gg + 1e-12);
        let gf = inner_product(&g, &f, t).unwrap();
        prop_assert!((gf - fg.conj()).norm() <= 1e-14 * (1.0 + fg.norm()));
    }

    #[test]
    fn parities_are_orthogonal(f in bump(), g in bump(), t in tag()) {
        let e = parity_project(&f, Parity::Even);
        let o = parity_project(&g, Parity::Odd);
        prop_assert!(inner_product(&e, &o, t).unwrap().norm() <= 1e-12);
        let back = e.add(&parity_project(&f, Parity::Odd)).unwrap();
        prop_assert!(back.sub(&f).unwrap().max_abs() <= 1e-15);
    }

    #[test]
    fn closed_form_q_preserves_hs_norm(
        a in 0.5..2.0f64, d in 0.5..2.0f64, c in -2.0..2.0f64, sa in any::<bool>(), s in 0.1..0.9f64,
    ) {
        let p = RepParams::new(s).unwrap();
        let a = if sa { a } else { -a };
        let q = GroupElement::q(a, c, d).unwrap();
        let lam = SampledFunction::gaussian(grid());
        let out = rho_s_q_closed(&q, &lam, &p).unwrap();
        let n0 = norm(&lam, p.h_tag());
        prop_assert!((norm(&out, p.h_tag()) / n0 - 1.0).abs() < 1e-6);
        let r = r_apply(&GroupElement::gamma(a, d).unwrap(), &lam, &p).unwrap();
        prop_assert!((norm(&r, p.h_tag()) / n0 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn dilation_preserves_l2(a in 0.5..2.0f64) {
        let lam = SampledFunction::gaussian(grid());
        let t = dilate(a, &lam).unwrap();
        prop_assert!((norm(&t, SpaceTag::plain()) / norm(&lam, SpaceTag::plain()) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn phi_even_positive_psi_odd(x in 0.0..40.0f64, s in 0.02..0.98f64) {
        let v = phi_bessel(x, s);
        prop_assert!(v > 0.0 || x > 35.0);
        prop_assert_eq!(v, phi_bessel(-x, s));
        let p = psi_s(x, s).unwrap();
        prop_assert_eq!(p.re, 0.0);
        prop_assert_eq!(psi_s(-x, s).unwrap(), -p);
    }

    #[test]
    fn bessel_k_decreasing(nu in 0.0..0.999f64, z in 0.05..20.0f64) {
        prop_assert!(bessel_k(nu, z * 1.01).unwrap() < bessel_k(nu, z).unwrap());
    }
}
