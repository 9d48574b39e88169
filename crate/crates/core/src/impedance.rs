//! Boundary impedance operators `Z` in the eigenbasis, their `L^2`
//! conjugates `Z~ = (Δ+1)^{-1/4} Z (Δ+1)^{-1/4}` and Cayley transforms.
//!
//! At finite truncation every accretive matrix is maximal accretive, so
//! [`is_accretive`] is also the maximal-accretivity check.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use faer::linalg::solvers::DenseSolveCore;
use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fgf::{sample_random_impedance, RandomImpedanceSpec};
use crate::function::SpectralFunction;
use crate::linalg::{
    adjoint, frobenius, max_abs_diff, min_hermitian_eigenvalue, scale_rows_cols, singular_values,
    spectral_norm, CMat,
};
use crate::multiplier::{build_multiplier_with, cantor_measure_coeffs, tol_psd, TripleProductTensor};
use crate::spectrum::{fractional_power_weights, BoundarySpectrum};

/// `g(mu) = coeff * (mu + c1)^{t/2}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Symbol {
    pub coeff: c64,
    pub c1: f64,
    pub t: f64,
}

impl Symbol {
    pub fn eval(&self, mu: f64) -> c64 {
        if self.t == 0.0 {
            return self.coeff;
        }
        self.coeff * (mu + self.c1).powf(self.t / 2.0)
    }

    fn check(&self, mu: &[f64]) -> Result<()> {
        if self.t == 0.0 {
            return Ok(());
        }
        for &m in mu {
            let base = m + self.c1;
            if base < 0.0 || (base == 0.0 && self.t < 0.0) {
                return Err(Error::InvalidParameter(format!("symbol {self} undefined at mu = {m}")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (re, im) = (self.coeff.re, self.coeff.im);
        let head = match (re == 0.0, im == 0.0) {
            (_, true) => format!("{re}"),
            (true, false) => format!("i*{im}"),
            _ => format!("({re}+i*{im})"),
        };
        write!(f, "{head}*(mu+{})^({})", self.c1, self.t / 2.0)
    }
}

struct Cursor<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_str(&mut self, t: &str) -> bool {
        if self.s[self.pos..].starts_with(t.as_bytes()) {
            self.pos += t.len();
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Option<f64> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            let exp_sign = (c == b'+' || c == b'-') && matches!(self.s.get(self.pos.wrapping_sub(1)), Some(b'e' | b'E'));
            if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                self.pos += 1;
            } else {
                break;
            }
        }
        std::str::from_utf8(&self.s[start..self.pos]).ok()?.parse().ok()
    }

    /// `x`, `(x)` or `(p/q)`.
    fn exponent(&mut self) -> Option<f64> {
        if self.eat(b'(') {
            let sign = if self.eat(b'-') { -1.0 } else { 1.0 };
            let p = self.number()?;
            let v = if self.eat(b'/') { p / self.number()? } else { p };
            self.eat(b')').then_some(sign * v)
        } else {
            let sign = if self.eat(b'-') { -1.0 } else { 1.0 };
            Some(sign * self.number()?)
        }
    }
}

impl FromStr for Symbol {
    type Err = Error;

    /// Grammar: `[+|-][i*][c2*](mu[+c1])[^e]` or `[+|-][i*]c2`, where the
    /// exponent `e = t/2` is a number, `(x)` or `(p/q)`.
    fn from_str(text: &str) -> Result<Self> {
        let cleaned: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::InvalidParameter(format!("cannot parse symbol {text:?}"));
        let mut cur = Cursor { s: cleaned.as_bytes(), pos: 0 };
        let sign = if cur.eat(b'-') {
            -1.0
        } else {
            cur.eat(b'+');
            1.0
        };
        let imag = if cur.eat(b'i') {
            if !cur.eat(b'*') && cur.pos < cur.s.len() {
                return Err(bad());
            }
            true
        } else {
            false
        };
        let mut c2 = 1.0;
        if matches!(cur.peek(), Some(c) if c.is_ascii_digit() || c == b'.') {
            c2 = cur.number().ok_or_else(bad)?;
            if cur.pos == cur.s.len() {
                let coeff = if imag { c64::new(0.0, sign * c2) } else { c64::new(sign * c2, 0.0) };
                return Ok(Symbol { coeff, c1: 0.0, t: 0.0 });
            }
            if !cur.eat(b'*') {
                return Err(bad());
            }
        } else if imag && cur.pos == cur.s.len() {
            return Ok(Symbol { coeff: c64::new(0.0, sign), c1: 0.0, t: 0.0 });
        }
        let paren = cur.eat(b'(');
        if !cur.eat_str("mu") {
            return Err(bad());
        }
        let mut c1 = 0.0;
        if cur.eat(b'+') {
            c1 = cur.number().ok_or_else(bad)?;
        } else if cur.eat(b'-') {
            c1 = -cur.number().ok_or_else(bad)?;
        }
        if paren && !cur.eat(b')') {
            return Err(bad());
        }
        let e = if cur.eat(b'^') { cur.exponent().ok_or_else(bad)? } else { 1.0 };
        if cur.pos != cur.s.len() {
            return Err(bad());
        }
        let coeff = if imag { c64::new(0.0, sign * c2) } else { c64::new(sign * c2, 0.0) };
        Ok(Symbol { coeff, c1, t: 2.0 * e })
    }
}

#[derive(Clone, Debug)]
pub enum ImpedanceKind {
    Multiplier(SpectralFunction),
    Symbol(Symbol),
    Matrix,
}

/// A realized impedance `Z^[m][n] = <Z Y_n, Y_m>` on the first `n_trunc` modes.
#[derive(Clone, Debug)]
pub struct ImpedanceOperator {
    spectrum: Arc<BoundarySpectrum>,
    kind: ImpedanceKind,
    matrix: CMat,
}

impl ImpedanceOperator {
    /// Multiplication by `phi`, realized at unit weights.
    pub fn multiplier(phi: &SpectralFunction, n_trunc: usize) -> Result<Self> {
        let tensor = TripleProductTensor::new(phi.spectrum().clone());
        Self::multiplier_with(&tensor, phi, n_trunc)
    }

    pub fn multiplier_with(tensor: &TripleProductTensor, phi: &SpectralFunction, n_trunc: usize) -> Result<Self> {
        let m = build_multiplier_with(tensor, phi, 0.0, 0.0, n_trunc)?;
        Ok(ImpedanceOperator {
            spectrum: phi.spectrum().clone(),
            kind: ImpedanceKind::Multiplier(phi.clone()),
            matrix: m.matrix().clone(),
        })
    }

    pub fn symbol(spectrum: Arc<BoundarySpectrum>, symbol: Symbol, n_trunc: usize) -> Result<Self> {
        if n_trunc > spectrum.count() {
            return Err(Error::TruncationExceeded { requested: n_trunc, available: spectrum.count() });
        }
        symbol.check(&spectrum.mu()[..n_trunc])?;
        let g: Vec<c64> = spectrum.mu()[..n_trunc].iter().map(|&mu| symbol.eval(mu)).collect();
        let matrix = Mat::from_fn(n_trunc, n_trunc, |i, j| if i == j { g[i] } else { c64::new(0.0, 0.0) });
        Ok(ImpedanceOperator { spectrum, kind: ImpedanceKind::Symbol(symbol), matrix })
    }

    pub fn matrix(spectrum: Arc<BoundarySpectrum>, matrix: CMat) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidParameter(format!("{}x{} impedance matrix", matrix.nrows(), matrix.ncols())));
        }
        if matrix.nrows() > spectrum.count() {
            return Err(Error::TruncationExceeded { requested: matrix.nrows(), available: spectrum.count() });
        }
        Ok(ImpedanceOperator { spectrum, kind: ImpedanceKind::Matrix, matrix })
    }

    /// The Neumann case `Z = 0`.
    pub fn zero(spectrum: Arc<BoundarySpectrum>, n_trunc: usize) -> Result<Self> {
        Self::matrix(spectrum, Mat::zeros(n_trunc, n_trunc))
    }

    pub fn kind(&self) -> &ImpedanceKind {
        &self.kind
    }

    pub fn spectrum(&self) -> &Arc<BoundarySpectrum> {
        &self.spectrum
    }

    pub fn n_trunc(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn realized(&self) -> &CMat {
        &self.matrix
    }
}

fn quarter_weights(spec: &BoundarySpectrum, n: usize, sign: f64) -> Vec<f64> {
    fractional_power_weights(spec, sign * 0.5, 1.0).expect("positive shift")[..n].to_vec()
}

/// `Λ^{-1/4} Z^ Λ^{-1/4}` with `Λ = diag(mu_n + 1)`.
pub fn conjugate_to_l2(z: &ImpedanceOperator) -> CMat {
    let w = quarter_weights(&z.spectrum, z.n_trunc(), -1.0);
    scale_rows_cols(z.matrix.as_ref(), &w, &w)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccretivityReport {
    pub verdict: bool,
    pub min_herm_eig: f64,
    pub tol: f64,
}

/// `Re <Z f, f> >= 0` for all `f`, tested on the Hermitian part of `Z^`.
pub fn is_accretive(z: &ImpedanceOperator) -> Result<AccretivityReport> {
    matrix_accretivity(z.matrix.as_ref())
}

pub fn matrix_accretivity(a: faer::MatRef<'_, c64>) -> Result<AccretivityReport> {
    let min_herm_eig = min_hermitian_eigenvalue(a)?;
    let tol = tol_psd(a);
    Ok(AccretivityReport { verdict: min_herm_eig >= -tol, min_herm_eig, tol })
}

/// Adjoint with respect to the boundary pairing: `Z^*` in the eigenbasis.
pub fn natural_adjoint(z: &ImpedanceOperator) -> ImpedanceOperator {
    let kind = match &z.kind {
        ImpedanceKind::Multiplier(phi) => ImpedanceKind::Multiplier(phi.conj()),
        ImpedanceKind::Symbol(s) => ImpedanceKind::Symbol(Symbol { coeff: s.coeff.conj(), ..*s }),
        ImpedanceKind::Matrix => ImpedanceKind::Matrix,
    };
    ImpedanceOperator { spectrum: z.spectrum.clone(), kind, matrix: adjoint(z.matrix.as_ref()) }
}

/// `Z^♮ = -Z`, i.e. `||Z^ + Z^*|| <= tol_psd`.
pub fn selfadjointness_criterion(z: &ImpedanceOperator) -> Result<bool> {
    let a = z.matrix.as_ref();
    let sum = Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] + a[(j, i)].conj());
    Ok(spectral_norm(sum.as_ref())? <= tol_psd(a))
}

#[derive(Clone, Debug)]
pub struct CayleyPair {
    pub z_tilde: CMat,
    pub k: CMat,
    pub norm_k: f64,
}

fn shifted(a: faer::MatRef<'_, c64>, s: f64) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| if i == j { a[(i, j)] + s } else { a[(i, j)] })
}

/// `(Z~ - I)(Z~ + I)^{-1}`.
pub fn cayley_matrix(z_tilde: faer::MatRef<'_, c64>) -> Result<CMat> {
    let n = z_tilde.nrows();
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let plus = shifted(z_tilde, 1.0);
    let sv = singular_values(plus.as_ref())?;
    let sigma_min = *sv.last().unwrap();
    if sigma_min <= 1e-13 * sv[0].max(1.0) {
        return Err(Error::SingularCayley { sigma_min });
    }
    let inv = plus.partial_piv_lu().inverse();
    Ok(shifted(z_tilde, -1.0) * inv)
}

/// `(I + K)(I - K)^{-1}`.
pub fn inverse_cayley(k: faer::MatRef<'_, c64>) -> Result<CMat> {
    let n = k.nrows();
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let minus = Mat::from_fn(n, n, |i, j| if i == j { 1.0 - k[(i, j)] } else { -k[(i, j)] });
    let sv = singular_values(minus.as_ref())?;
    let sigma_min = *sv.last().unwrap();
    if sigma_min <= 1e-13 * sv[0].max(1.0) {
        return Err(Error::InvalidParameter(format!("1 is in the spectrum of K (sigma_min {sigma_min:.3e})")));
    }
    Ok(shifted(k, 1.0) * minus.partial_piv_lu().inverse())
}

pub fn cayley(z: &ImpedanceOperator) -> Result<CayleyPair> {
    let z_tilde = conjugate_to_l2(z);
    let k = cayley_matrix(z_tilde.as_ref())?;
    let norm_k = spectral_norm(k.as_ref())?;
    Ok(CayleyPair { z_tilde, k, norm_k })
}

/// `Λ^{1/4} [T_Z]_F Λ^{1/4}`. A bounded everywhere-defined truncation is its
/// own Friedrichs extension, so this returns `Z^` itself; the round trip is
/// checked to `1e-12` relative to `max |Z^|`.
pub fn friedrichs_conjugated(z: &ImpedanceOperator) -> Result<CMat> {
    let z_tilde = conjugate_to_l2(z);
    let rep = matrix_accretivity(z_tilde.as_ref())?;
    if !rep.verdict {
        return Err(Error::NotAccretive { min_eig: rep.min_herm_eig });
    }
    let w = quarter_weights(&z.spectrum, z.n_trunc(), 1.0);
    let back = scale_rows_cols(z_tilde.as_ref(), &w, &w);
    let scale = (0..z.n_trunc())
        .flat_map(|j| (0..z.n_trunc()).map(move |i| (i, j)))
        .map(|(i, j)| z.matrix[(i, j)].norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let err = max_abs_diff(back.as_ref(), z.matrix.as_ref());
    if err > 1e-12 * scale {
        return Err(Error::Linalg(format!("Friedrichs round trip off by {err:.3e}")));
    }
    Ok(back)
}

/// Three independent accretivity checks of one operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccretivityCrossCheck {
    pub herm_z: bool,
    pub herm_z_tilde: bool,
    /// `None` when `Z~ + I` is singular.
    pub contraction: Option<bool>,
    pub norm_k: Option<f64>,
    pub agree: bool,
}

pub fn accretivity_cross_check(z: &ImpedanceOperator) -> Result<AccretivityCrossCheck> {
    let herm_z = is_accretive(z)?.verdict;
    let zt = conjugate_to_l2(z);
    let herm_z_tilde = matrix_accretivity(zt.as_ref())?.verdict;
    let (contraction, norm_k) = match cayley_matrix(zt.as_ref()) {
        Ok(k) => {
            let n = spectral_norm(k.as_ref())?;
            (Some(n <= 1.0 + 1e-10), Some(n))
        }
        Err(Error::SingularCayley { .. }) => (None, None),
        Err(e) => return Err(e),
    };
    let agree = herm_z == herm_z_tilde && contraction.unwrap_or(false) == herm_z;
    Ok(AccretivityCrossCheck { herm_z, herm_z_tilde, contraction, norm_k, agree })
}

/// Source of a multiplier symbol in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum PhiConfig {
    Constant {
        re: f64,
        #[serde(default)]
        im: f64,
    },
    Coeffs {
        coeffs_re: Vec<f64>,
        #[serde(default)]
        coeffs_im: Vec<f64>,
    },
    Cantor {
        r: f64,
        #[serde(default)]
        component: usize,
        #[serde(default = "default_cantor_samples")]
        samples: usize,
        #[serde(default)]
        seed: u64,
    },
    Random {
        #[serde(flatten)]
        spec: RandomImpedanceSpec,
        #[serde(default)]
        seed: u64,
    },
}

fn default_cantor_samples() -> usize {
    crate::multiplier::DEFAULT_CANTOR_SAMPLES
}

impl PhiConfig {
    /// Coefficients on every mode of `spectrum`.
    pub fn realize(&self, spectrum: Arc<BoundarySpectrum>) -> Result<SpectralFunction> {
        match self {
            PhiConfig::Constant { re, im } => Ok(SpectralFunction::constant(spectrum, c64::new(*re, *im))),
            PhiConfig::Coeffs { coeffs_re, coeffs_im } => {
                let c = coeffs_re
                    .iter()
                    .enumerate()
                    .map(|(i, &r)| c64::new(r, coeffs_im.get(i).copied().unwrap_or(0.0)))
                    .collect();
                SpectralFunction::new(spectrum, c)
            }
            PhiConfig::Cantor { r, component, samples, seed } => {
                let n = spectrum.count();
                cantor_measure_coeffs(spectrum, *r, *component, n, *samples, *seed)
            }
            PhiConfig::Random { spec, seed } => {
                let n = spectrum.count();
                sample_random_impedance(spectrum, spec, n, *seed)
            }
        }
    }
}

/// `{"kind": "multiplier" | "symbol" | "matrix", ...}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ImpedanceConfig {
    Multiplier { phi: PhiConfig },
    Symbol { symbol: String },
    Matrix {
        re: Vec<Vec<f64>>,
        #[serde(default)]
        im: Vec<Vec<f64>>,
    },
}

impl ImpedanceConfig {
    pub fn realize(&self, spectrum: Arc<BoundarySpectrum>, n_trunc: usize) -> Result<ImpedanceOperator> {
        match self {
            ImpedanceConfig::Multiplier { phi } => {
                let f = phi.realize(spectrum)?;
                ImpedanceOperator::multiplier(&f, n_trunc)
            }
            ImpedanceConfig::Symbol { symbol } => ImpedanceOperator::symbol(spectrum, symbol.parse()?, n_trunc),
            ImpedanceConfig::Matrix { re, im } => {
                let n = re.len();
                if re.iter().any(|r| r.len() != n) || (!im.is_empty() && (im.len() != n || im.iter().any(|r| r.len() != n))) {
                    return Err(Error::InvalidParameter("impedance matrix rows must be square and consistent".into()));
                }
                let m = Mat::from_fn(n, n, |i, j| c64::new(re[i][j], if im.is_empty() { 0.0 } else { im[i][j] }));
                ImpedanceOperator::matrix(spectrum, m)
            }
        }
    }
}

/// Relative Frobenius distance `||A - B|| / ||B||`.
pub fn relative_error(a: faer::MatRef<'_, c64>, b: faer::MatRef<'_, c64>) -> f64 {
    let d = Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] - b[(i, j)]);
    frobenius(d.as_ref()) / frobenius(b).max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::identity;
    use crate::geometry::BoundaryGeometry;
    use crate::spectrum::build_curve_spectrum;

    fn circle(n: usize) -> Arc<BoundarySpectrum> {
        Arc::new(build_curve_spectrum(&BoundaryGeometry::unit_circle(), n).unwrap())
    }

    #[test]
    fn symbol_grammar() {
        let s: Symbol = "-i*2*(mu+1)^(1/2)".parse().unwrap();
        assert_eq!(s, Symbol { coeff: c64::new(0.0, -2.0), c1: 1.0, t: 1.0 });
        let s: Symbol = "(mu+1)^(1/2)".parse().unwrap();
        assert_eq!(s, Symbol { coeff: c64::new(1.0, 0.0), c1: 1.0, t: 1.0 });
        let s: Symbol = "3 * (mu + 0.5) ^ -1".parse().unwrap();
        assert_eq!(s, Symbol { coeff: c64::new(3.0, 0.0), c1: 0.5, t: -2.0 });
        let s: Symbol = "i*mu".parse().unwrap();
        assert_eq!(s, Symbol { coeff: c64::new(0.0, 1.0), c1: 0.0, t: 2.0 });
        let s: Symbol = "+2.5".parse().unwrap();
        assert_eq!(s, Symbol { coeff: c64::new(2.5, 0.0), c1: 0.0, t: 0.0 });
        for bad in ["", "mu+", "2(mu+1)", "(mu+1)^(1/2", "x*(mu)", "i2"] {
            assert!(bad.parse::<Symbol>().is_err(), "{bad}");
        }
        let round: Symbol = s.to_string().parse().unwrap();
        assert_eq!(round.coeff, s.coeff);
    }

    #[test]
    fn conjugation_examples() {
        let spec = circle(20);
        let id = ImpedanceOperator::matrix(spec.clone(), identity(20)).unwrap();
        let zt = conjugate_to_l2(&id);
        for n in 0..20 {
            let exact = (spec.mu()[n] + 1.0).powf(-0.5);
            assert!((zt[(n, n)].re - exact).abs() <= 4.0 * f64::EPSILON * exact);
        }
        let sym = ImpedanceOperator::symbol(spec, "(mu+1)^(1/2)".parse().unwrap(), 20).unwrap();
        let zt = conjugate_to_l2(&sym);
        assert!(max_abs_diff(zt.as_ref(), identity(20).as_ref()) < 1e-15);
    }

    #[test]
    fn accretivity_examples() {
        let spec = circle(31);
        let one = ImpedanceOperator::multiplier(&SpectralFunction::constant(spec.clone(), c64::new(1.0, 0.0)), 31).unwrap();
        assert!(is_accretive(&one).unwrap().verdict);
        assert!(!selfadjointness_criterion(&one).unwrap());
        let imag = ImpedanceOperator::symbol(spec.clone(), "i*(mu+1)^(1/2)".parse().unwrap(), 31).unwrap();
        let rep = is_accretive(&imag).unwrap();
        assert!(rep.verdict && rep.min_herm_eig == 0.0);
        assert!(selfadjointness_criterion(&imag).unwrap());
        assert!(selfadjointness_criterion(&ImpedanceOperator::zero(spec, 31).unwrap()).unwrap());
    }

    #[test]
    fn adjoint_examples() {
        let spec = circle(21);
        let phi = SpectralFunction::new(
            spec.clone(),
            (0..21).map(|n| c64::new(1.0 / (1.0 + n as f64), 0.3 / (2.0 + n as f64))).collect(),
        )
        .unwrap();
        let z = ImpedanceOperator::multiplier(&phi, 21).unwrap();
        let adj = natural_adjoint(&z);
        let rebuilt = ImpedanceOperator::multiplier(&phi.conj(), 21).unwrap();
        assert_eq!(max_abs_diff(adj.realized().as_ref(), rebuilt.realized().as_ref()), 0.0);
        let twice = natural_adjoint(&adj);
        assert_eq!(max_abs_diff(twice.realized().as_ref(), z.realized().as_ref()), 0.0);

        let real = ImpedanceOperator::multiplier(&phi.re(), 21).unwrap();
        assert_eq!(max_abs_diff(natural_adjoint(&real).realized().as_ref(), real.realized().as_ref()), 0.0);

        let sym = ImpedanceOperator::symbol(spec, "i*2*(mu+1)^(1/2)".parse().unwrap(), 21).unwrap();
        let neg = natural_adjoint(&sym);
        for n in 0..21 {
            assert_eq!(neg.realized()[(n, n)], -sym.realized()[(n, n)]);
        }
    }

    #[test]
    fn cayley_examples() {
        let spec = circle(9);
        let zero = ImpedanceOperator::zero(spec.clone(), 9).unwrap();
        let c = cayley(&zero).unwrap();
        assert_eq!(max_abs_diff(c.k.as_ref(), identity(9).as_ref().map(|x| -*x).as_ref()), 0.0);
        assert!((c.norm_k - 1.0).abs() < 1e-14);
        let one = ImpedanceOperator::symbol(spec, "(mu+1)^(1/2)".parse().unwrap(), 9).unwrap();
        let c = cayley(&one).unwrap();
        assert!(c.norm_k < 1e-15);
        let back = inverse_cayley(c.k.as_ref()).unwrap();
        assert!(max_abs_diff(back.as_ref(), identity(9).as_ref()) < 1e-15);
    }

    #[test]
    fn singular_cayley_is_reported() {
        let spec = circle(3);
        let m = Mat::from_fn(3, 3, |i, j| if i == j { c64::new(-(spec.mu()[i] + 1.0).sqrt(), 0.0) } else { c64::new(0.0, 0.0) });
        let z = ImpedanceOperator::matrix(spec, m).unwrap();
        assert!(matches!(cayley(&z), Err(Error::SingularCayley { .. })));
        assert!(!accretivity_cross_check(&z).unwrap().herm_z);
    }

    #[test]
    fn friedrichs_examples() {
        let spec = circle(15);
        let id = ImpedanceOperator::matrix(spec.clone(), identity(15)).unwrap();
        assert!(max_abs_diff(friedrichs_conjugated(&id).unwrap().as_ref(), identity(15).as_ref()) < 1e-15);
        let neg = ImpedanceOperator::matrix(spec, identity(15).as_ref().map(|x| -*x)).unwrap();
        assert!(matches!(friedrichs_conjugated(&neg), Err(Error::NotAccretive { .. })));
    }

    #[test]
    fn config_round_trip() {
        let text = r#"{"kind":"symbol","symbol":"-i*2*(mu+1)^(1/2)"}"#;
        let cfg: ImpedanceConfig = serde_json::from_str(text).unwrap();
        let z = cfg.realize(circle(10), 10).unwrap();
        assert_eq!(z.realized()[(0, 0)], c64::new(0.0, -2.0));
        let text = r#"{"kind":"multiplier","phi":{"type":"random","c":1.0,"s":0.5,"kernel_weights":[1.0]}}"#;
        let cfg: ImpedanceConfig = serde_json::from_str(text).unwrap();
        let z = cfg.realize(circle(40), 20).unwrap();
        assert!(is_accretive(&z).unwrap().verdict);
        let text = r#"{"kind":"matrix","re":[[1,0],[0,1]]}"#;
        let cfg: ImpedanceConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.realize(circle(4), 2).unwrap().n_trunc(), 2);
    }
}
