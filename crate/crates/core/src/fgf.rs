//! Fractional Gaussian fields `Xi_s = sum_{n > b0} xi_n mu_n^{-s/2} Y_n` and
//! random impedance coefficients built from them.
//!
//! Every random draw comes from a ChaCha stream keyed by `(seed, domain)` and
//! selected by the mode index, so a realization is fixed independently of
//! truncation, thread count and evaluation order.

use std::sync::Arc;

use faer::c64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::SpectralFunction;
use crate::par::map_indices;
use crate::spectrum::{ht_weight, BoundarySpectrum};

const DOMAIN_XI: u64 = 0x7869_5f67_6175_7373; // "xi_gauss"
const DOMAIN_ETA: u64 = 0x6574_615f_6b65_726e; // "eta_kern"

fn stream(seed: u64, domain: u64, n: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(n as u64);
    rng
}

/// The standard normal `xi_n` of realization `seed`.
pub fn xi(seed: u64, n: usize) -> f64 {
    StandardNormal.sample(&mut stream(seed, DOMAIN_XI, n))
}

#[derive(Clone, Debug)]
pub struct FgfSample {
    pub spectrum: Arc<BoundarySpectrum>,
    pub s: f64,
    pub n_trunc: usize,
    pub seed: u64,
    /// Zero on the kernel modes.
    pub xi: Vec<f64>,
    pub coeffs: Vec<f64>,
    /// `s - (d - 1) / 2`.
    pub hurst: f64,
}

#[derive(Serialize, Deserialize)]
struct SampleFile {
    s: f64,
    seed: u64,
    n_trunc: usize,
    coeffs: Vec<f64>,
}

impl FgfSample {
    pub fn to_function(&self) -> SpectralFunction {
        SpectralFunction::from_real(self.spectrum.clone(), &self.coeffs).expect("within truncation")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&SampleFile {
            s: self.s,
            seed: self.seed,
            n_trunc: self.n_trunc,
            coeffs: self.coeffs.clone(),
        })?)
    }
}

fn check_truncation(spec: &BoundarySpectrum, n_trunc: usize) -> Result<()> {
    if n_trunc > spec.count() {
        return Err(Error::TruncationExceeded { requested: n_trunc, available: spec.count() });
    }
    if n_trunc > spec.b0() && !(spec.mu()[spec.b0()] > 0.0) {
        return Err(Error::InvalidParameter("first non-kernel eigenvalue is not positive".into()));
    }
    Ok(())
}

fn hurst(spec: &BoundarySpectrum, s: f64) -> f64 {
    s - (spec.dim_ambient() as f64 - 1.0) / 2.0
}

pub fn sample_fgf(spec: Arc<BoundarySpectrum>, s: f64, n_trunc: usize, seed: u64) -> Result<FgfSample> {
    check_truncation(&spec, n_trunc)?;
    let b0 = spec.b0();
    let xi: Vec<f64> = (0..n_trunc).map(|n| if n < b0 { 0.0 } else { xi(seed, n) }).collect();
    let coeffs = xi
        .iter()
        .zip(spec.mu())
        .enumerate()
        .map(|(n, (&x, &mu))| if n < b0 { 0.0 } else { x * mu.powf(-s / 2.0) })
        .collect();
    Ok(FgfSample { hurst: hurst(&spec, s), spectrum: spec, s, n_trunc, seed, xi, coeffs })
}

/// `|S_N|_t` at each checkpoint for coefficients `coeffs` (one realization).
pub fn partial_norms_of(spec: &BoundarySpectrum, coeffs: &[f64], t: f64, checkpoints: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut acc = 0.0;
    let mut n = 0;
    for &cp in checkpoints {
        while n < cp {
            acc += ht_weight(spec.mu()[n], t, n < spec.b0()).powi(2) * coeffs[n] * coeffs[n];
            n += 1;
        }
        out.push(acc.sqrt());
    }
    out
}

fn check_checkpoints(spec: &BoundarySpectrum, checkpoints: &[usize]) -> Result<()> {
    if checkpoints.is_empty() || checkpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("checkpoints must be non-empty and increasing".into()));
    }
    check_truncation(spec, *checkpoints.last().unwrap())
}

/// `H^t` norms of the partial sums `S_N` of one realization.
pub fn partial_sum_norms(
    spec: Arc<BoundarySpectrum>,
    s: f64,
    seed: u64,
    t: f64,
    checkpoints: &[usize],
) -> Result<Vec<f64>> {
    check_checkpoints(&spec, checkpoints)?;
    let sample = sample_fgf(spec.clone(), s, *checkpoints.last().unwrap(), seed)?;
    Ok(partial_norms_of(&spec, &sample.coeffs, t, checkpoints))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Converges,
    Diverges,
    Indeterminate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassifierOptions {
    pub seeds: usize,
    pub base_seed: u64,
    /// Converges iff the median last-doubling ratio is at most `1 + eps_conv`.
    pub eps_conv: f64,
    /// Inputs this close to the threshold are reported as indeterminate.
    pub margin: f64,
}

impl Default for ClassifierOptions {
    fn default() -> Self {
        ClassifierOptions { seeds: 50, base_seed: 0, eps_conv: 0.01, margin: 0.1 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassifierReport {
    pub verdict: Verdict,
    /// Verdict from the ratio alone, before the margin band is applied.
    pub raw_verdict: Verdict,
    pub s: f64,
    pub t: f64,
    pub threshold: f64,
    pub checkpoints: Vec<usize>,
    /// Median over seeds of `|S_{2N}|_t / |S_N|_t` for each doubling.
    pub ratios: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl ClassifierReport {
    /// The verdict the threshold predicts (`None` inside the margin band).
    pub fn expected(&self, margin: f64) -> Option<Verdict> {
        if (self.t - self.threshold).abs() < margin {
            None
        } else if self.t < self.threshold {
            Some(Verdict::Converges)
        } else {
            Some(Verdict::Diverges)
        }
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Empirical convergence of the series in `H^t` from doubling ratios of
/// partial-sum norms over many realizations.
pub fn convergence_classifier(
    spec: Arc<BoundarySpectrum>,
    s: f64,
    t: f64,
    checkpoints: &[usize],
    opts: &ClassifierOptions,
) -> Result<ClassifierReport> {
    check_checkpoints(&spec, checkpoints)?;
    if opts.seeds < 30 {
        return Err(Error::InvalidParameter(format!("{} seeds given, at least 30 needed", opts.seeds)));
    }
    if checkpoints.len() < 4 || checkpoints.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::InvalidParameter("need at least 4 checkpoints, each double the previous".into()));
    }
    let seeds: Vec<u64> = (0..opts.seeds as u64).map(|i| opts.base_seed.wrapping_add(i)).collect();
    let per_seed = map_indices(seeds.len(), |i| {
        let sample = sample_fgf(spec.clone(), s, *checkpoints.last().unwrap(), seeds[i]).expect("checked");
        partial_norms_of(&spec, &sample.coeffs, t, checkpoints)
    });
    let ratios: Vec<f64> = (1..checkpoints.len())
        .map(|j| {
            let mut r: Vec<f64> = per_seed.iter().map(|p| p[j] / p[j - 1]).collect();
            median(&mut r)
        })
        .collect();
    let raw_verdict =
        if *ratios.last().unwrap() <= 1.0 + opts.eps_conv { Verdict::Converges } else { Verdict::Diverges };
    let threshold = hurst(&spec, s);
    let verdict = if (t - threshold).abs() < opts.margin { Verdict::Indeterminate } else { raw_verdict };
    Ok(ClassifierReport {
        verdict,
        raw_verdict,
        s,
        t,
        threshold,
        checkpoints: checkpoints.to_vec(),
        ratios,
        seeds,
    })
}

/// Law of the nonnegative kernel factors `eta_n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum KernelLaw {
    Exponential { rate: f64 },
    Uniform { low: f64, high: f64 },
    Constant { value: f64 },
}

impl Default for KernelLaw {
    fn default() -> Self {
        KernelLaw::Exponential { rate: 1.0 }
    }
}

impl KernelLaw {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            KernelLaw::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            KernelLaw::Uniform { low, high } => low >= 0.0 && high > low && high.is_finite(),
            KernelLaw::Constant { value } => value > 0.0 && value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("kernel law {self:?} is not a positive law with finite mean")))
        }
    }

    /// The draw `eta_n` of realization `seed`.
    pub fn draw(&self, seed: u64, n: usize) -> f64 {
        let mut rng = stream(seed, DOMAIN_ETA, n);
        match *self {
            KernelLaw::Exponential { rate } => Exp::new(rate).expect("validated").sample(&mut rng),
            KernelLaw::Uniform { low, high } => Uniform::new(low, high).expect("validated").sample(&mut rng),
            KernelLaw::Constant { value } => value,
        }
    }
}

/// `zeta = i c Xi_s + sum_{n <= b0} c_n eta_n Y_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomImpedanceSpec {
    pub c: f64,
    pub s: f64,
    pub kernel_weights: Vec<f64>,
    #[serde(default)]
    pub kernel_law: KernelLaw,
}

impl RandomImpedanceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0) {
            return Err(Error::InvalidParameter(format!("FGF index s must be positive, got {}", self.s)));
        }
        if !self.c.is_finite() {
            return Err(Error::InvalidParameter("scale c must be finite".into()));
        }
        if let Some(w) = self.kernel_weights.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::InvalidParameter(format!("negative kernel weight {w}")));
        }
        self.kernel_law.validate()
    }

    /// True when some kernel weight is positive (the non-selfadjoint branch).
    pub fn has_kernel_part(&self) -> bool {
        self.kernel_weights.iter().any(|&w| w > 0.0)
    }
}

/// One random impedance coefficient. The FGF part enters with the imaginary
/// unit, so its real part is exactly the nonnegative kernel combination.
pub fn sample_random_impedance(
    spec: Arc<BoundarySpectrum>,
    rspec: &RandomImpedanceSpec,
    n_trunc: usize,
    seed: u64,
) -> Result<SpectralFunction> {
    rspec.validate()?;
    if rspec.kernel_weights.len() > spec.b0() {
        return Err(Error::InvalidParameter(format!(
            "{} kernel weights for {} kernel modes",
            rspec.kernel_weights.len(),
            spec.b0()
        )));
    }
    let fgf = sample_fgf(spec.clone(), rspec.s, n_trunc, seed)?;
    let mut coeffs: Vec<c64> = fgf.coeffs.iter().map(|&x| c64::new(0.0, rspec.c * x)).collect();
    for (n, &w) in rspec.kernel_weights.iter().enumerate() {
        if n < coeffs.len() {
            coeffs[n] = c64::new(w * rspec.kernel_law.draw(seed, n), 0.0);
        }
    }
    SpectralFunction::new(spec, coeffs)
}
