//! Functions and distributions on the boundary, stored by their coefficients
//! in the eigenbasis.

use std::sync::Arc;

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{ht_weight, BoundarySpectrum, Modes};

/// `f = sum_n c_n Y_n` over the modes of a spectrum. Coefficient `n` is the
/// pairing `<f, Y_n>`; indices are 0-based.
#[derive(Clone, Debug)]
pub struct SpectralFunction {
    spectrum: Arc<BoundarySpectrum>,
    coeffs: Vec<c64>,
}

#[derive(Serialize, Deserialize)]
struct CoeffFile {
    coeffs_re: Vec<f64>,
    coeffs_im: Vec<f64>,
}

impl SpectralFunction {
    pub fn new(spectrum: Arc<BoundarySpectrum>, coeffs: Vec<c64>) -> Result<Self> {
        if coeffs.len() > spectrum.count() {
            return Err(Error::TruncationExceeded { requested: coeffs.len(), available: spectrum.count() });
        }
        let mut coeffs = coeffs;
        coeffs.resize(spectrum.count(), c64::new(0.0, 0.0));
        Ok(SpectralFunction { spectrum, coeffs })
    }

    pub fn from_real(spectrum: Arc<BoundarySpectrum>, coeffs: &[f64]) -> Result<Self> {
        Self::new(spectrum, coeffs.iter().map(|&x| c64::new(x, 0.0)).collect())
    }

    pub fn zeros(spectrum: Arc<BoundarySpectrum>) -> Self {
        let n = spectrum.count();
        SpectralFunction { spectrum, coeffs: vec![c64::new(0.0, 0.0); n] }
    }

    /// The constant function `value`: on component `j` it is
    /// `value * |component j|^{1/2}` times the normalized kernel mode.
    pub fn constant(spectrum: Arc<BoundarySpectrum>, value: c64) -> Self {
        let measures = spectrum.geometry().component_measures();
        let mut f = Self::zeros(spectrum);
        for (j, m) in measures.iter().enumerate() {
            f.coeffs[j] = value * m.sqrt();
        }
        f
    }

    /// The single mode `Y_n`.
    pub fn mode(spectrum: Arc<BoundarySpectrum>, n: usize) -> Result<Self> {
        if n >= spectrum.count() {
            return Err(Error::TruncationExceeded { requested: n + 1, available: spectrum.count() });
        }
        let mut f = Self::zeros(spectrum);
        f.coeffs[n] = c64::new(1.0, 0.0);
        Ok(f)
    }

    pub fn spectrum(&self) -> &Arc<BoundarySpectrum> {
        &self.spectrum
    }

    pub fn coeffs(&self) -> &[c64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn map(&self, f: impl Fn(c64) -> c64) -> Self {
        SpectralFunction { spectrum: self.spectrum.clone(), coeffs: self.coeffs.iter().map(|&c| f(c)).collect() }
    }

    pub fn conj(&self) -> Self {
        self.map(|c| c.conj())
    }

    pub fn re(&self) -> Self {
        self.map(|c| c64::new(c.re, 0.0))
    }

    pub fn im(&self) -> Self {
        self.map(|c| c64::new(c.im, 0.0))
    }

    pub fn scale(&self, a: c64) -> Self {
        self.map(|c| a * c)
    }

    pub fn add(&self, other: &SpectralFunction) -> Result<Self> {
        self.check_same(other)?;
        Ok(SpectralFunction {
            spectrum: self.spectrum.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    /// Keep the first `n` coefficients, zero the rest.
    pub fn band_limited(&self, n: usize) -> Self {
        let mut f = self.clone();
        for c in f.coeffs.iter_mut().skip(n) {
            *c = c64::new(0.0, 0.0);
        }
        f
    }

    fn check_same(&self, other: &SpectralFunction) -> Result<()> {
        if Arc::ptr_eq(&self.spectrum, &other.spectrum) || self.spectrum.mu() == other.spectrum.mu() {
            Ok(())
        } else {
            Err(Error::InvalidParameter("functions live on different spectra".into()))
        }
    }

    /// `(sum_n w_n(t)^2 |c_n|^2)^{1/2}`.
    pub fn ht_norm(&self, t: f64) -> f64 {
        ht_norm(self, t)
    }

    /// Point value at arclength `s` on curve component `component`.
    pub fn eval_curve(&self, component: usize, s: f64) -> Option<c64> {
        let Modes::Curve(modes) = self.spectrum.modes() else { return None };
        Some(
            modes
                .iter()
                .zip(&self.coeffs)
                .filter(|(m, _)| m.component == component)
                .map(|(m, &c)| c * m.value(s))
                .sum(),
        )
    }

    /// Vertex values (surfaces only).
    pub fn nodal_values(&self) -> Option<Vec<c64>> {
        let y = self.spectrum.nodal_modes()?;
        Some(
            (0..y.nrows())
                .map(|v| (0..y.ncols()).map(|n| self.coeffs[n] * y[(v, n)]).sum())
                .collect(),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&CoeffFile {
            coeffs_re: self.coeffs.iter().map(|c| c.re).collect(),
            coeffs_im: self.coeffs.iter().map(|c| c.im).collect(),
        })?)
    }

    pub fn from_json(spectrum: Arc<BoundarySpectrum>, text: &str) -> Result<Self> {
        let f: CoeffFile = serde_json::from_str(text)?;
        if f.coeffs_re.len() != f.coeffs_im.len() {
            return Err(Error::InvalidParameter("coeffs_re and coeffs_im differ in length".into()));
        }
        Self::new(spectrum, f.coeffs_re.iter().zip(&f.coeffs_im).map(|(&a, &b)| c64::new(a, b)).collect())
    }
}

/// Graph norm in `H^t`: `(sum_n w_n(t)^2 |c_n|^2)^{1/2}`.
pub fn ht_norm(f: &SpectralFunction, t: f64) -> f64 {
    let spec = f.spectrum();
    f.coeffs
        .iter()
        .zip(spec.mu())
        .enumerate()
        .map(|(n, (c, &mu))| ht_weight(mu, t, n < spec.b0()).powi(2) * c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundaryGeometry;
    use crate::spectrum::build_curve_spectrum;

    fn circle(n: usize) -> Arc<BoundarySpectrum> {
        Arc::new(build_curve_spectrum(&BoundaryGeometry::unit_circle(), n).unwrap())
    }

    #[test]
    fn kernel_mode_has_unit_norm_for_all_t() {
        let f = SpectralFunction::mode(circle(9), 0).unwrap();
        for t in [-2.0, -0.5, 0.0, 0.3, 4.0] {
            assert_eq!(f.ht_norm(t), 1.0);
        }
    }

    #[test]
    fn nonkernel_mode_norms() {
        let s = circle(9);
        let f = SpectralFunction::mode(s.clone(), 5).unwrap();
        let mu = s.mu()[5];
        assert_eq!(mu, 9.0);
        assert!((f.ht_norm(0.5) - (mu.powf(0.5) + 1.0).sqrt()).abs() < 1e-14);
        assert!((f.ht_norm(-0.5) - (mu.powf(0.5) + 1.0).powf(-0.5)).abs() < 1e-14);
    }

    #[test]
    fn constant_evaluates_to_its_value() {
        let f = SpectralFunction::constant(circle(5), c64::new(2.0, -1.0));
        let v = f.eval_curve(0, 1.234).unwrap();
        assert!((v - c64::new(2.0, -1.0)).norm() < 1e-14);
    }

    #[test]
    fn json_round_trip() {
        let s = circle(4);
        let f = SpectralFunction::new(s.clone(), vec![c64::new(1.0, 2.0), c64::new(-0.5, 0.0)]).unwrap();
        let g = SpectralFunction::from_json(s, &f.to_json().unwrap()).unwrap();
        assert_eq!(f.coeffs(), g.coeffs());
    }

    #[test]
    fn re_im_conj_are_coefficientwise() {
        let f = SpectralFunction::new(circle(3), vec![c64::new(1.0, 2.0); 3]).unwrap();
        assert_eq!(f.conj().coeffs()[1], c64::new(1.0, -2.0));
        assert_eq!(f.re().coeffs()[1], c64::new(1.0, 0.0));
        assert_eq!(f.im().coeffs()[1], c64::new(2.0, 0.0));
    }
}
