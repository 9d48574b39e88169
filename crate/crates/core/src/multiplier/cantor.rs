use std::sync::Arc;

use faer::c64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::function::SpectralFunction;
use crate::par::map_indices;
use crate::spectrum::{BoundarySpectrum, CurveModeKind, Modes};

pub const DEFAULT_CANTOR_SAMPLES: usize = 1 << 20;

const CHUNK: usize = 1 << 12;

/// Coefficients `c_n = ∫ Y_n dmu` of the middle-interval Cantor probability
/// measure with contraction ratio `r`, pushed forward to curve component
/// `component` by `s = L x`.
///
/// The measure is sampled through its iterated function system
/// `x -> r x`, `x -> r x + 1 - r`: the first `log2(samples)` digits run
/// through every cylinder exactly once (stratification), the remaining
/// digits are random. Coefficients are exact moments of the resulting
/// discrete measure, so its multiplier matrices are positive semidefinite.
pub fn cantor_measure_coeffs(
    spectrum: Arc<BoundarySpectrum>,
    r: f64,
    component: usize,
    n_trunc: usize,
    samples: usize,
    seed: u64,
) -> Result<SpectralFunction> {
    if !(r > 0.0 && r < 0.5) {
        return Err(Error::InvalidParameter(format!("Cantor ratio must lie in (0, 1/2), got {r}")));
    }
    let Modes::Curve(modes) = spectrum.modes() else {
        return Err(Error::InvalidGeometry("Cantor measures need an arclength-parametrized curve".into()));
    };
    if component >= spectrum.geometry().component_count() {
        return Err(Error::InvalidParameter(format!("no component {component}")));
    }
    if n_trunc > spectrum.count() {
        return Err(Error::TruncationExceeded { requested: n_trunc, available: spectrum.count() });
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("at least one sample is needed".into()));
    }
    let levels = (usize::BITS - 1 - samples.leading_zeros()).min(40) as usize;
    let strata = 1usize << levels;
    let per_stratum = samples / strata;
    // Enough extra random digits to reach machine precision.
    let tail_digits = (53.0 / (1.0 / r).log2()).ceil() as usize + 1;
    let kmax = modes[..n_trunc].iter().filter(|m| m.component == component).map(|m| m.k).max().unwrap_or(0);

    let chunks = strata.div_ceil(CHUNK);
    let partial = map_indices(chunks, |ch| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(ch as u64);
        let mut sums = vec![c64::new(0.0, 0.0); kmax + 1];
        let scale_tail = r.powi(levels as i32);
        for stratum in ch * CHUNK..((ch + 1) * CHUNK).min(strata) {
            let mut head = 0.0;
            let mut w = 1.0 - r;
            for d in 0..levels {
                if (stratum >> (levels - 1 - d)) & 1 == 1 {
                    head += w;
                }
                w *= r;
            }
            for _ in 0..per_stratum {
                let mut tail = 0.0;
                let mut w = 1.0 - r;
                for _ in 0..tail_digits {
                    if rng.random::<bool>() {
                        tail += w;
                    }
                    w *= r;
                }
                let x = head + scale_tail * tail;
                let step = c64::from_polar(1.0, 2.0 * std::f64::consts::PI * x);
                let mut z = c64::new(1.0, 0.0);
                for s in sums.iter_mut() {
                    *s += z;
                    z *= step;
                }
            }
        }
        sums
    });
    let total = (strata * per_stratum) as f64;
    let mut moments = vec![c64::new(0.0, 0.0); kmax + 1];
    for p in &partial {
        for (m, s) in moments.iter_mut().zip(p) {
            *m += s;
        }
    }
    moments.iter_mut().for_each(|m| *m /= total);

    let coeffs: Vec<c64> = modes
        .iter()
        .enumerate()
        .map(|(n, m)| {
            if n >= n_trunc || m.component != component {
                return c64::new(0.0, 0.0);
            }
            let l = m.length;
            let v = match m.kind {
                CurveModeKind::Constant => l.powf(-0.5),
                CurveModeKind::Cos => (2.0 / l).sqrt() * moments[m.k].re,
                CurveModeKind::Sin => (2.0 / l).sqrt() * moments[m.k].im,
            };
            c64::new(v, 0.0)
        })
        .collect();
    SpectralFunction::new(spectrum, coeffs)
}
