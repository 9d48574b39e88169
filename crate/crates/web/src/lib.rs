//! Three operations for the demo page: polygon spectra with their Weyl fit,
//! fractional Gaussian fields on the unit circle, and the `L^q` multiplier
//! classification. Each returns JSON.

use std::f64::consts::PI;
use std::sync::Arc;

use gibc_core::fgf::sample_fgf;
use gibc_core::geometry::CurveComponent;
use gibc_core::multiplier::{lq_embedding_case, LqEmbeddingQuery};
use gibc_core::spectrum::{build_curve_spectrum, weyl_diagnostic};
use gibc_core::BoundaryGeometry;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Spectrum of the closed polygon `xy = [x0, y0, x1, y1, ...]` with `n`
/// modes, and the Weyl fit over `fit_lo..=n`.
pub fn polygon_spectrum_json(xy: &[f64], n: usize, fit_lo: usize) -> Result<String, String> {
    if xy.len() % 2 != 0 || xy.len() < 6 {
        return Err("need at least three (x, y) pairs".into());
    }
    let pts = xy.chunks(2).map(|p| [p[0], p[1]]).collect();
    let geom = BoundaryGeometry::curves(vec![CurveComponent::Polyline(pts)]).map_err(|e| e.to_string())?;
    let spec = build_curve_spectrum(&geom, n).map_err(|e| e.to_string())?;
    let fit = weyl_diagnostic(&spec, fit_lo, n).map_err(|e| e.to_string())?;
    Ok(json!({
        "perimeter": geom.total_measure(),
        "mu": spec.mu(),
        "slope": fit.slope,
        "intercept": fit.intercept,
        "c_lower": fit.c_lower,
        "c_upper": fit.c_upper,
    })
    .to_string())
}

/// One realization of the field of index `s` on the unit circle, truncated
/// to `n` modes and evaluated at `points` equispaced angles.
pub fn fgf_circle_json(s: f64, n: usize, seed: u64, points: usize) -> Result<String, String> {
    let spec = build_curve_spectrum(&BoundaryGeometry::unit_circle(), n).map_err(|e| e.to_string())?;
    let sample = sample_fgf(Arc::new(spec), s, n, seed).map_err(|e| e.to_string())?;
    let f = sample.to_function();
    let x: Vec<f64> = (0..points).map(|k| 2.0 * PI * k as f64 / points as f64).collect();
    let y: Vec<f64> = x.iter().map(|&a| f.eval_curve(0, a).map_or(0.0, |v| v.re)).collect();
    Ok(json!({ "x": x, "y": y, "hurst": sample.hurst }).to_string())
}

/// Which sufficient condition places `L^q` (`q <= 0` meaning infinity) in
/// the multipliers `H^{s1} -> H^{-s2}` on a boundary of a domain in `R^d`.
pub fn lq_case_json(d: usize, s1: f64, s2: f64, q: f64) -> Result<String, String> {
    let q = if q <= 0.0 { f64::INFINITY } else { q };
    let v = lq_embedding_case(&LqEmbeddingQuery { d, s1, s2, q }).map_err(|e| e.to_string())?;
    Ok(json!({ "case": v.case.label(), "embeds": v.embeds }).to_string())
}

#[wasm_bindgen]
pub fn polygon_spectrum(xy: &[f64], n: usize, fit_lo: usize) -> Result<String, JsError> {
    polygon_spectrum_json(xy, n, fit_lo).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn fgf_circle(s: f64, n: usize, seed: u64, points: usize) -> Result<String, JsError> {
    fgf_circle_json(s, n, seed, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn lq_case(d: usize, s1: f64, s2: f64, q: f64) -> Result<String, JsError> {
    lq_case_json(d, s1, s2, q).map_err(|e| JsError::new(&e))
}
