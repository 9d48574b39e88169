use std::f64::consts::PI;

use gibc_core::acoustic::{
    annulus_mesh, assemble_pencil, boundary_spectrum, disk_mesh, polygon_mesh, refinement_study, solve_pencil,
    verify_mdissipativity, SolveOptions,
};
use gibc_core::fgf::{sample_random_impedance, KernelLaw, RandomImpedanceSpec};
use gibc_core::impedance::{selfadjointness_criterion, ImpedanceOperator, Symbol};
use gibc_core::multiplier::{cantor_measure_coeffs, TripleProductTensor};
use gibc_core::{c64, SpectralFunction};

/// `J_m(x) = (1/pi) ∫_0^pi cos(m τ - x sin τ) dτ` by the trapezoidal rule,
/// which is spectrally accurate for this periodic integrand.
fn bessel_j(m: i32, x: f64) -> f64 {
    let k = 400;
    let h = PI / k as f64;
    let f = |t: f64| (m as f64 * t - x * t.sin()).cos();
    (0..=k).map(|i| f(i as f64 * h) * if i == 0 || i == k { 0.5 } else { 1.0 }).sum::<f64>() * h / PI
}

fn first_jp_zero(m: i32) -> f64 {
    let jp = |x: f64| 0.5 * (bessel_j(m - 1, x) - bessel_j(m + 1, x));
    let (mut lo, mut hi) = (0.5, 0.5);
    while jp(lo) * jp(hi + 0.01) > 0.0 {
        hi += 0.01;
    }
    hi += 0.01;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if jp(lo) * jp(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn constant(spec: &std::sync::Arc<gibc_core::BoundarySpectrum>, z0: f64, n: usize) -> ImpedanceOperator {
    ImpedanceOperator::multiplier(&SpectralFunction::constant(spec.clone(), c64::new(z0, 0.0)), n).unwrap()
}

#[test]
fn neumann_disk_matches_bessel_zeros() {
    let mesh = disk_mesh([0.0, 0.0], 1.0, 0.05).unwrap();
    let spec = boundary_spectrum(&mesh, 129).unwrap();
    let pencil = assemble_pencil(&mesh, &spec, &ImpedanceOperator::zero(spec.clone(), 64).unwrap(), None).unwrap();
    let rep = solve_pencil(&pencil, 14, c64::new(0.0, 0.5), &SolveOptions::default()).unwrap();
    assert!(rep.zero_cluster_size >= 1);
    assert!(rep.all_converged());
    let mut pos: Vec<f64> = rep.eigenvalues.iter().filter(|l| l.norm() > 1e-6 && l.re > 0.0).map(|l| l.re).collect();
    pos.sort_by(f64::total_cmp);
    let oracle = [first_jp_zero(1), first_jp_zero(2), first_jp_zero(0)];
    assert!((oracle[0] - 1.8412).abs() < 1e-4 && (oracle[1] - 3.0542).abs() < 1e-4);
    for (got, want) in pos.iter().zip([oracle[0], oracle[0], oracle[1], oracle[1], oracle[2]]) {
        assert!((got - want).abs() / want < 0.02, "{got} vs {want}");
    }
    assert!(((pos[0] * pos[0]) - 3.390).abs() / 3.390 < 0.02);
}

#[test]
fn constant_impedance_matches_boundary_mass_on_smooth_traces() {
    let outer: Vec<[f64; 2]> =
        (0..64).map(|k| 2.0 * PI * k as f64 / 64.0).map(|a| [a.cos(), a.sin()]).collect();
    let mesh = polygon_mesh(&outer, &[], 0.1).unwrap();
    let spec = boundary_spectrum(&mesh, 129).unwrap();
    let z0 = 2.0;
    let pencil = assemble_pencil(&mesh, &spec, &constant(&spec, z0, 129), Some(64)).unwrap();
    assert_eq!(pencil.boundary_dofs.len(), 64);
    for k in 0..4 {
        let u: Vec<f64> = pencil
            .boundary_dofs
            .iter()
            .map(|&v| {
                let p = mesh.vertices[v];
                (k as f64 * p[1].atan2(p[0])).cos() + 0.3 * p[0]
            })
            .collect();
        let (mut bq, mut mq) = (0.0, 0.0);
        for i in 0..64 {
            for j in 0..64 {
                bq += u[i] * pencil.b[(i, j)].re * u[j];
                mq += u[i] * z0 * pencil.boundary_mass[(i, j)] * u[j];
            }
        }
        assert!((bq - mq).abs() / mq < 0.01, "k={k}: {bq} vs {mq}");
    }
}

#[test]
fn damping_sweep_moves_the_lowest_mode_down() {
    let mesh = disk_mesh([0.0, 0.0], 1.0, 0.1).unwrap();
    let spec = boundary_spectrum(&mesh, 129).unwrap();
    let tensor = TripleProductTensor::new(spec.clone());
    let base = assemble_pencil(&mesh, &spec, &ImpedanceOperator::zero(spec.clone(), 64).unwrap(), None).unwrap();
    let mut target = c64::new(first_jp_zero(1), 0.0);
    let mut last_im = 0.0;
    for step in 0..8 {
        let eta = 0.1 + 1.9 * step as f64 / 7.0;
        let r = RandomImpedanceSpec { c: 0.0, s: 1.0, kernel_weights: vec![1.0], kernel_law: KernelLaw::Constant { value: eta } };
        let zeta = sample_random_impedance(spec.clone(), &r, 129, 0).unwrap();
        let z = ImpedanceOperator::multiplier_with(&tensor, &zeta, base.n_b).unwrap();
        let rep = solve_pencil(&base.with_impedance(&z).unwrap(), 12, target, &SolveOptions::default()).unwrap();
        let next = *rep.eigenvalues.iter().min_by(|a, b| (**a - target).norm().total_cmp(&(**b - target).norm())).unwrap();
        assert!(next.im <= last_im + 1e-12, "eta {eta}: {next} after Im {last_im}");
        last_im = next.im;
        target = next;
    }
    assert!(last_im < -1e-2);
}

#[test]
fn real_impedance_gives_mirror_pairs() {
    let mesh = disk_mesh([0.0, 0.0], 1.0, 0.1).unwrap();
    let spec = boundary_spectrum(&mesh, 129).unwrap();
    let phi = SpectralFunction::from_real(spec.clone(), &[1.5, 0.3, -0.2, 0.1]).unwrap();
    let z = ImpedanceOperator::multiplier(&phi, 64).unwrap();
    let pencil = assemble_pencil(&mesh, &spec, &z, None).unwrap();
    let rep = solve_pencil(&pencil, 24, c64::new(0.0, 0.0), &SolveOptions::default()).unwrap();
    let far = rep.eigenvalues.iter().map(|l| l.norm()).fold(0.0, f64::max);
    for l in rep.eigenvalues.iter().filter(|l| l.norm() > 1e-6 && l.norm() < 0.9 * far) {
        let mirror = c64::new(-l.re, l.im);
        let d = rep.eigenvalues.iter().map(|m| (m - mirror).norm()).fold(f64::INFINITY, f64::min);
        assert!(d <= 1e-8 * (1.0 + l.norm()), "{l} has no mirror ({d:e})");
    }
}

#[test]
fn selfadjoint_symbol_gives_real_spectrum() {
    let mesh = disk_mesh([0.0, 0.0], 1.0, 0.1).unwrap();
    let spec = boundary_spectrum(&mesh, 129).unwrap();
    let sym = Symbol { coeff: c64::new(0.0, 1.0), c1: 1.0, t: 1.0 };
    let z = ImpedanceOperator::symbol(spec.clone(), sym, 64).unwrap();
    assert!(selfadjointness_criterion(&z).unwrap());
    let pencil = assemble_pencil(&mesh, &spec, &z, None).unwrap();
    let rep = solve_pencil(&pencil, 20, c64::new(0.0, 0.5), &SolveOptions::default()).unwrap();
    assert!(rep.real_within_tol && rep.in_lower_halfplane);
    let md = verify_mdissipativity(&pencil, &rep, &[]).unwrap();
    assert!(md.herm_check.abs() <= md.herm_tol);
}

#[test]
fn annulus_keeps_its_kernel_and_dissipates() {
    let mesh = annulus_mesh([0.0, 0.0], 0.5, 1.0, 0.1).unwrap();
    let spec = boundary_spectrum(&mesh, 129).unwrap();
    assert_eq!(spec.b0(), 2);
    let pencil = assemble_pencil(&mesh, &spec, &constant(&spec, 1.0, 64), None).unwrap();
    let rep = solve_pencil(&pencil, 16, c64::new(0.0, 0.5), &SolveOptions::default()).unwrap();
    assert!(rep.zero_cluster_size >= pencil.domain_components);
    assert!(rep.in_lower_halfplane);
}

#[test]
fn refinement_is_cauchy_for_constant_and_cantor_impedances() {
    let levels: Vec<_> = [0.1, 0.05, 0.025]
        .into_iter()
        .map(|h| {
            let mesh = disk_mesh([0.0, 0.0], 1.0, h).unwrap();
            let spec = boundary_spectrum(&mesh, 257).unwrap();
            (mesh, spec)
        })
        .collect();
    let opts = SolveOptions::default();
    let one: Vec<_> = levels
        .iter()
        .zip([0.1, 0.05, 0.025])
        .map(|((m, s), h)| (h, assemble_pencil(m, s, &constant(s, 1.0, 64), None).unwrap()))
        .collect();
    let t = refinement_study(&one, 4, c64::new(0.0, 0.5), None, &opts).unwrap();
    assert!(!t.ambiguous && t.all_converged);
    assert!(t.last_change.iter().all(|c| *c <= 0.005), "{:?}", t.last_change);

    let cantor: Vec<_> = levels
        .iter()
        .zip([0.1, 0.05, 0.025])
        .map(|((m, s), h)| {
            let phi = cantor_measure_coeffs(s.clone(), 1.0 / 3.0, 0, 257, 1 << 18, 3).unwrap().scale(c64::new(1.0, 0.5));
            let z = ImpedanceOperator::multiplier(&phi, 64).unwrap();
            (h, assemble_pencil(m, s, &z, None).unwrap())
        })
        .collect();
    let t = refinement_study(&cantor, 4, c64::new(0.0, 0.5), None, &opts).unwrap();
    assert!(!t.ambiguous && t.all_converged);
    assert!(t.last_change.iter().all(|c| *c <= 0.005), "{:?}", t.last_change);
    for v in t.values.last().unwrap() {
        assert!(v[1] < -1e-6, "tracked value {v:?} is real");
    }
}
