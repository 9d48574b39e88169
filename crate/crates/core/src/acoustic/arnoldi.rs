//! Arnoldi iteration with full reorthogonalization for the eigenvalues of
//! largest modulus of a complex linear operator.

use faer::{c64, Mat};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::linalg::linalg_err;

pub(crate) struct RitzPair {
    pub theta: c64,
    pub vector: Vec<c64>,
}

fn norm(v: faer::ColRef<'_, c64>) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Grows the Krylov space until the `wanted` Ritz values of largest modulus
/// have estimates below `tol * |theta|`, or `max_dim` is reached. Returns the
/// `wanted` pairs either way.
pub(crate) fn largest_ritz_pairs(
    n: usize,
    mut apply: impl FnMut(&[c64], &mut [c64]) -> Result<()>,
    wanted: usize,
    max_dim: usize,
    tol: f64,
    seed: u64,
) -> Result<Vec<RitzPair>> {
    let max_dim = max_dim.min(n).max(wanted.min(n));
    let mut v = Mat::<c64>::zeros(n, max_dim + 1);
    let mut h = Mat::<c64>::zeros(max_dim + 1, max_dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..n {
        v[(i, 0)] = c64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
    }
    let nv = norm(v.col(0));
    v.col_mut(0).iter_mut().for_each(|x| *x /= nv);

    let step = (wanted / 2).max(10);
    let mut next_check = (2 * wanted + 10).min(max_dim);
    let mut w = vec![c64::new(0.0, 0.0); n];
    let mut m = 0;
    let mut breakdown = false;
    loop {
        while m < next_check && !breakdown {
            let x: Vec<c64> = v.col(m).iter().copied().collect();
            apply(&x, &mut w)?;
            let mut wc = Mat::from_fn(n, 1, |i, _| w[i]);
            let w0 = norm(wc.col(0));
            for _ in 0..2 {
                let basis = v.as_ref().subcols(0, m + 1);
                let coef = basis.adjoint() * wc.as_ref();
                wc -= basis * &coef;
                for i in 0..=m {
                    h[(i, m)] += coef[(i, 0)];
                }
            }
            let beta = norm(wc.col(0));
            h[(m + 1, m)] = c64::new(beta, 0.0);
            m += 1;
            if beta <= 1e-13 * w0 {
                breakdown = true;
            } else {
                for i in 0..n {
                    v[(i, m)] = wc[(i, 0)] / beta;
                }
            }
        }
        let hm = h.as_ref().subrows(0, m).subcols(0, m).to_owned();
        let eig = hm.eigen().map_err(linalg_err)?;
        let s: Vec<c64> = eig.S().column_vector().iter().copied().collect();
        let u = eig.U();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| s[b].norm().total_cmp(&s[a].norm()));
        let beta = if breakdown { 0.0 } else { h[(m, m - 1)].re };
        let take = wanted.min(m);
        let mut pairs = Vec::with_capacity(take);
        let mut all_ok = true;
        for &k in &order[..take] {
            let y = u.col(k);
            let yn = norm(y);
            // |h_{m+1,m} y_m| for the unit Ritz coefficient vector y.
            let estimate = beta * y[m - 1].norm() / yn;
            if estimate > tol * s[k].norm() {
                all_ok = false;
            }
            pairs.push(k);
        }
        if all_ok || breakdown || m >= max_dim {
            let basis = v.as_ref().subcols(0, m);
            return Ok(pairs
                .into_iter()
                .map(|k| {
                    let x = basis * u.col(k);
                    let nx = norm(x.as_ref());
                    RitzPair { theta: s[k], vector: x.iter().map(|c| *c / nx).collect() }
                })
                .collect());
        }
        next_check = (m + step).min(max_dim);
    }
}
