use std::sync::Arc;

use gibc_core::linalg::{adjoint, max_abs_diff, singular_values};
use gibc_core::multiplier::{
    accretivity_integral_report, build_multiplier, build_multiplier_with, multiplier_norm, positivity_test,
    TripleProductTensor,
};
use gibc_core::spectrum::build_curve_spectrum;
use gibc_core::{c64, BoundaryGeometry, BoundarySpectrum, SpectralFunction};
use proptest::prelude::*;

const N: usize = 25;

fn circle() -> Arc<BoundarySpectrum> {
    Arc::new(build_curve_spectrum(&BoundaryGeometry::unit_circle(), N).unwrap())
}

fn coeffs(len: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len)
}

fn function(spec: &Arc<BoundarySpectrum>, c: &[(f64, f64)]) -> SpectralFunction {
    SpectralFunction::new(spec.clone(), c.iter().map(|&(a, b)| c64::new(a, b)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn adjoint_is_conjugate_symbol(c in coeffs(N), n in 3usize..=12) {
        let spec = circle();
        let phi = function(&spec, &c);
        let a = build_multiplier(&phi, 0.5, 0.5, n).unwrap();
        let b = build_multiplier(&phi.conj(), 0.5, 0.5, n).unwrap();
        prop_assert_eq!(max_abs_diff(adjoint(a.matrix().as_ref()).as_ref(), b.matrix().as_ref()), 0.0);
    }

    #[test]
    fn matrix_is_linear_in_the_symbol(c in coeffs(N), d in coeffs(N), x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let spec = circle();
        let tensor = TripleProductTensor::new(spec.clone());
        let (f, g) = (function(&spec, &c), function(&spec, &d));
        let a = c64::new(x, y);
        let combo = f.scale(a).add(&g).unwrap();
        let lhs = build_multiplier_with(&tensor, &combo, 0.0, 0.0, 12).unwrap();
        let mf = build_multiplier_with(&tensor, &f, 0.0, 0.0, 12).unwrap();
        let mg = build_multiplier_with(&tensor, &g, 0.0, 0.0, 12).unwrap();
        let rhs = mf.matrix() * faer::Scale(a) + mg.matrix();
        prop_assert!(max_abs_diff(lhs.matrix().as_ref(), rhs.as_ref()) < 1e-13);
    }

    #[test]
    fn real_symbols_give_real_symmetric_matrices(c in prop::collection::vec(-1.0f64..1.0, N)) {
        let spec = circle();
        let phi = SpectralFunction::from_real(spec, &c).unwrap();
        let a = build_multiplier(&phi, 0.0, 0.0, 15).unwrap();
        let m = a.matrix();
        for i in 0..15 {
            for j in 0..15 {
                prop_assert_eq!(m[(i, j)].im, 0.0);
                prop_assert_eq!(m[(i, j)].re, m[(j, i)].re);
            }
        }
    }

    #[test]
    fn swapping_exponents_transposes(c in prop::collection::vec(-1.0f64..1.0, N), s1 in 0.0f64..1.0, s2 in 0.0f64..1.0) {
        let spec = circle();
        let phi = SpectralFunction::from_real(spec, &c).unwrap();
        let a = build_multiplier(&phi, s1, s2, 15).unwrap();
        let b = a.with_exponents(s2, s1);
        let wa = a.weighted();
        let wb = b.weighted();
        let scale = wa.norm_max();
        prop_assert!(max_abs_diff(wa.transpose().to_owned().as_ref(), wb.as_ref()) <= 1e-14 * scale);
        let (na, nb) = (multiplier_norm(&a).unwrap(), multiplier_norm(&b).unwrap());
        prop_assert!((na - nb).abs() <= 1e-12 * na.max(1e-300));
    }

    #[test]
    fn raising_exponents_does_not_raise_the_norm(
        c in coeffs(N), s1 in 0.0f64..0.5, s2 in 0.0f64..0.5, d1 in 0.0f64..0.5, d2 in 0.0f64..0.5,
    ) {
        let spec = circle();
        let phi = function(&spec, &c);
        let low = build_multiplier(&phi, s1, s2, 12).unwrap();
        let high = low.with_exponents(s1 + d1, s2 + d2);
        // Weight ratios w(s)/w(t) for s <= t are at most one on every mode.
        let ws = |t: f64| spec.ht_weights(t);
        let ratio = |s: f64, t: f64| ws(s).iter().zip(ws(t)).take(12).map(|(a, b)| a / b).fold(0.0, f64::max);
        let bound = ratio(s1, s1 + d1) * ratio(s2, s2 + d2);
        prop_assert!(bound <= 1.0 + 1e-15);
        let (nl, nh) = (multiplier_norm(&low).unwrap(), multiplier_norm(&high).unwrap());
        prop_assert!(nh <= bound * nl * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn scaling_scales_the_norm(c in coeffs(N), x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let spec = circle();
        let phi = function(&spec, &c);
        let a = c64::new(x, y);
        let n1 = multiplier_norm(&build_multiplier(&phi, 0.5, 0.5, 12).unwrap()).unwrap();
        let n2 = multiplier_norm(&build_multiplier(&phi.scale(a), 0.5, 0.5, 12).unwrap()).unwrap();
        prop_assert!((n2 - a.norm() * n1).abs() <= 1e-12 * (1.0 + n2));
    }

    #[test]
    fn positivity_and_integral_tests_agree(mean in -0.5f64..2.0, c in prop::collection::vec(-0.4f64..0.4, 8)) {
        let spec = circle();
        let mut all = vec![mean * (2.0 * std::f64::consts::PI).sqrt()];
        all.extend(c);
        let phi = SpectralFunction::from_real(spec, &all).unwrap();
        let p = positivity_test(&phi, 12).unwrap();
        let q = accretivity_integral_report(&phi, 12, 16, 7).unwrap();
        prop_assert_eq!(p.is_nonneg, q.passed, "min eig {} vs integral {}", p.min_eig, q.min_value);
    }
}

#[test]
fn weighted_constant_profile_is_closed_form() {
    let spec = circle();
    let one = SpectralFunction::constant(spec.clone(), c64::new(1.0, 0.0));
    let a = build_multiplier(&one, 0.5, 0.5, N).unwrap();
    let sv = singular_values(a.weighted().as_ref()).unwrap();
    let mut expect: Vec<f64> = spec.mu().iter().map(|&mu| if mu == 0.0 { 1.0 } else { 1.0 / (mu.sqrt() + 1.0) }).collect();
    expect.sort_by(|a, b| b.total_cmp(a));
    for (s, e) in sv.iter().zip(&expect) {
        assert!((s - e).abs() < 1e-13, "{s} vs {e}");
    }
}
