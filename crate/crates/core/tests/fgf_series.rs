use std::sync::Arc;

use gibc_core::fgf::{
    convergence_classifier, partial_sum_norms, sample_fgf, sample_random_impedance, xi, ClassifierOptions, KernelLaw,
    RandomImpedanceSpec, Verdict,
};
use gibc_core::geometry::icosphere;
use gibc_core::multiplier::positivity_test;
use gibc_core::spectrum::{build_curve_spectrum, build_surface_spectrum, SurfaceSolverOptions};
use gibc_core::{BoundaryGeometry, BoundarySpectrum};
use proptest::prelude::*;

fn circle(n: usize) -> Arc<BoundarySpectrum> {
    Arc::new(build_curve_spectrum(&BoundaryGeometry::unit_circle(), n).unwrap())
}

fn sphere(n: usize) -> Arc<BoundarySpectrum> {
    let s = icosphere(4, 1.0, [0.0; 3]);
    let g = BoundaryGeometry::surface(s.vertices, s.triangles).unwrap();
    Arc::new(build_surface_spectrum(&g, n, &SurfaceSolverOptions::default()).unwrap())
}

/// `(mu^{-t} + 1)^{-1}` for `t < 0`, written out independently of the crate.
fn weight_sq(mu: f64, t: f64) -> f64 {
    if t >= 0.0 {
        mu.powf(t) + 1.0
    } else {
        1.0 / (mu.powf(-t) + 1.0)
    }
}

#[test]
fn sphere_classifier_sees_convergence_below_threshold() {
    let spec = sphere(257);
    let checkpoints = [32, 64, 128, 256];
    // The d = 3 tail at t = -0.5, s = 1 decays like N^{-1/2}, so the last
    // doubling at N = 256 still moves the norm by about 2%.
    let opts = ClassifierOptions { eps_conv: 0.03, ..Default::default() };
    let below = convergence_classifier(spec.clone(), 1.0, -0.5, &checkpoints, &opts).unwrap();
    assert_eq!(below.threshold, 0.0);
    assert_eq!(below.verdict, Verdict::Converges, "{:?}", below.ratios);
    assert!(below.ratios.windows(2).all(|w| w[1] < w[0]), "{:?}", below.ratios);

    // Deterministic series with all draws equal to one, summed directly.
    let mu = spec.mu();
    let partial = |n: usize| (1..n).map(|k| weight_sq(mu[k], -0.5) / mu[k]).sum::<f64>().sqrt();
    let direct: Vec<f64> = checkpoints.windows(2).map(|w| partial(w[1]) / partial(w[0])).collect();
    assert!(direct.windows(2).all(|w| w[1] < w[0]));
    for (emp, det) in below.ratios.iter().zip(&direct) {
        assert!((emp - det).abs() < 0.02, "median ratio {emp} vs deterministic {det}");
    }

    let above = convergence_classifier(spec, 1.0, 0.5, &checkpoints, &opts).unwrap();
    assert_eq!(above.verdict, Verdict::Diverges, "{:?}", above.ratios);
}

#[test]
fn circle_classifier_examples() {
    let spec = circle(4097);
    let cps: Vec<usize> = (0..7).map(|k| 64 << k).collect();
    let opts = ClassifierOptions::default();
    assert_eq!(convergence_classifier(spec.clone(), 1.0, 0.0, &cps, &opts).unwrap().verdict, Verdict::Converges);
    assert_eq!(convergence_classifier(spec.clone(), 1.0, 1.0, &cps, &opts).unwrap().verdict, Verdict::Diverges);
    let near = convergence_classifier(spec, 1.0, 0.45, &cps, &opts).unwrap();
    assert_eq!(near.verdict, Verdict::Indeterminate);
}

#[test]
fn critical_index_grows_without_settling() {
    let spec = circle(4097);
    let cps: Vec<usize> = (0..7).map(|k| 64 << k).collect();
    let norms = partial_sum_norms(spec, 1.0, 3, 0.5, &cps).unwrap();
    let incr: Vec<f64> = norms.windows(2).map(|w| w[1] * w[1] - w[0] * w[0]).collect();
    // Log-type growth: each doubling adds roughly the same amount to |S_N|^2.
    let mean = incr.iter().sum::<f64>() / incr.len() as f64;
    assert!(mean > 0.5, "{incr:?}");
    assert!(incr.iter().all(|d| *d > 0.3 * mean), "{incr:?}");
}

#[test]
fn variance_law_holds_across_seed_windows() {
    // Pooled over 4 disjoint windows of 10^4 seeds and 10 modes, the
    // standardized variance errors should look like standard normals.
    let spec = circle(41);
    let m = 10_000u64;
    let mut z2 = Vec::new();
    for w in 0..4 {
        let mut sum2 = [0.0; 10];
        for seed in w * m..(w + 1) * m {
            let sample = sample_fgf(spec.clone(), 2.0, 41, seed).unwrap();
            for k in 0..10 {
                let n = 4 * (k + 1);
                sum2[k] += sample.coeffs[n].powi(2);
            }
        }
        for k in 0..10 {
            let n = 4 * (k + 1);
            let rel = sum2[k] / m as f64 * spec.mu()[n].powi(2) - 1.0;
            z2.push((rel / (2.0 / m as f64).sqrt()).powi(2));
        }
    }
    let mean_sq = z2.iter().sum::<f64>() / z2.len() as f64;
    assert!((0.5..1.6).contains(&mean_sq), "mean squared z-score {mean_sq}");
}

#[test]
fn circle_s2_mode_with_mu_4_has_variance_one_sixteenth() {
    let spec = circle(5);
    assert_eq!(spec.mu()[3], 4.0);
    let m = 10_000;
    let var = (0..m).map(|seed| sample_fgf(spec.clone(), 2.0, 5, seed).unwrap().coeffs[3].powi(2)).sum::<f64>()
        / m as f64;
    assert!((var * 16.0 - 1.0).abs() < 0.05, "{var}");
}

#[test]
fn random_impedance_lies_in_h_minus_half() {
    let spec = circle(4097);
    let r = RandomImpedanceSpec { c: 1.0, s: 0.2, kernel_weights: vec![], kernel_law: KernelLaw::default() };
    for seed in 0..3 {
        let z = sample_random_impedance(spec.clone(), &r, 4097, seed).unwrap();
        let norms: Vec<f64> = [256, 512, 1024, 2048, 4096].iter().map(|&n| z.band_limited(n).ht_norm(-0.45)).collect();
        let incr: Vec<f64> = norms.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(incr.windows(2).all(|w| w[1] < w[0]), "{norms:?}");
        assert!(incr.last().unwrap() / norms[3] < 0.02, "{norms:?}");
        // Above the threshold the increments grow instead.
        let rough: Vec<f64> = [256, 512, 1024, 2048, 4096].iter().map(|&n| z.band_limited(n).ht_norm(-0.15)).collect();
        let rincr: Vec<f64> = rough.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(rincr.windows(2).all(|w| w[1] > w[0]), "{rough:?}");
    }
}

#[test]
fn kernel_only_impedance_is_a_positive_constant() {
    let spec = circle(9);
    let r = RandomImpedanceSpec { c: 0.0, s: 1.0, kernel_weights: vec![1.0], kernel_law: KernelLaw::default() };
    for seed in 0..10 {
        let z = sample_random_impedance(spec.clone(), &r, 9, seed).unwrap();
        assert!(z.coeffs()[0].re > 0.0);
        assert!(z.coeffs()[1..].iter().all(|c| c.re == 0.0 && c.im == 0.0));
        assert!(positivity_test(&z, 9).unwrap().is_nonneg);
    }
    let none = RandomImpedanceSpec { c: 0.0, s: 1.0, kernel_weights: vec![0.0], kernel_law: KernelLaw::default() };
    let z = sample_random_impedance(spec, &none, 9, 0).unwrap();
    assert!(z.coeffs().iter().all(|c| c.re == 0.0 && c.im == 0.0));
}

#[test]
fn negative_kernel_weight_is_rejected() {
    let r = RandomImpedanceSpec { c: 1.0, s: 0.3, kernel_weights: vec![-1.0], kernel_law: KernelLaw::default() };
    assert!(sample_random_impedance(circle(9), &r, 9, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn samples_reproduce_bit_for_bit(seed in any::<u64>(), s in 0.0f64..3.0, n in 2usize..60) {
        let spec = circle(60);
        let a = sample_fgf(spec.clone(), s, n, seed).unwrap();
        let b = sample_fgf(spec.clone(), s, n, seed).unwrap();
        prop_assert_eq!(a.coeffs.iter().map(|c| c.to_bits()).collect::<Vec<_>>(),
                        b.coeffs.iter().map(|c| c.to_bits()).collect::<Vec<_>>());
        let longer = sample_fgf(spec, s, 60, seed).unwrap();
        prop_assert_eq!(&longer.coeffs[..n], &a.coeffs[..]);
    }

    #[test]
    fn kernel_modes_vanish_and_draws_scale(seed in any::<u64>(), s in 0.0f64..3.0) {
        let spec = Arc::new(build_curve_spectrum(
            &BoundaryGeometry::curves(vec![
                gibc_core::geometry::CurveComponent::Circle { center: [0.0, 0.0], radius: 1.0 },
                gibc_core::geometry::CurveComponent::Circle { center: [5.0, 0.0], radius: 0.5 },
            ]).unwrap(), 30).unwrap());
        let a = sample_fgf(spec.clone(), s, 30, seed).unwrap();
        prop_assert_eq!(spec.b0(), 2);
        prop_assert!(a.coeffs[0] == 0.0 && a.coeffs[1] == 0.0);
        for n in 2..30 {
            let expect = xi(seed, n) * spec.mu()[n].powf(-s / 2.0);
            prop_assert!((a.coeffs[n] - expect).abs() <= 1e-15 * expect.abs().max(1e-300));
        }
    }

    #[test]
    fn impedance_real_part_is_the_kernel_part(seed in any::<u64>(), w in 0.0f64..3.0, c in -2.0f64..2.0) {
        let spec = circle(33);
        let r = RandomImpedanceSpec { c, s: 0.3, kernel_weights: vec![w], kernel_law: KernelLaw::default() };
        let z = sample_random_impedance(spec, &r, 33, seed).unwrap();
        prop_assert!(z.coeffs()[0].im == 0.0 && z.coeffs()[0].re >= 0.0);
        prop_assert!(z.coeffs()[1..].iter().all(|x| x.re == 0.0));
    }
}
