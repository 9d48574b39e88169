//! The experiments behind `gibc run`.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use gibc_core::acoustic::{
    assemble_pencil, boundary_spectrum, default_n_b, default_resolvent_grid, monte_carlo_spectrum, refinement_study,
    solve_pencil, verify_mdissipativity, SolveOptions,
};
use gibc_core::fgf::{convergence_classifier, ClassifierOptions, Verdict};
use gibc_core::impedance::{accretivity_cross_check, cayley, selfadjointness_criterion, ImpedanceOperator};
use gibc_core::multiplier::{
    build_multiplier_with, compactness_profile, multiplier_norm, positivity_test, TripleProductTensor,
};
use gibc_core::spectrum::weyl_diagnostic;
use gibc_core::c64;
use rayon::prelude::*;
use serde_json::json;

use crate::cache;
use crate::config::{
    AcousticParams, Experiment, ExperimentConfig, FgfParams, ImpedanceParams, MonteCarloParams, ProfileParams,
    WeylParams,
};
use crate::manifest::Assertion;

/// An artifact before it is written: `(id, kind, file name, contents)`.
pub struct Output {
    pub id: &'static str,
    pub kind: &'static str,
    pub file: &'static str,
    pub contents: Vec<u8>,
}

#[derive(Default)]
pub struct Outcome {
    pub outputs: Vec<Output>,
    pub assertions: Vec<Assertion>,
}

impl Outcome {
    fn output(&mut self, id: &'static str, kind: &'static str, file: &'static str, contents: impl Into<Vec<u8>>) {
        self.outputs.push(Output { id, kind, file, contents: contents.into() });
    }

    fn assert(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.assertions.push(Assertion { name: name.into(), passed, detail: detail.into() });
    }
}

pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    match &cfg.experiment {
        Experiment::Weyl(p) => weyl(p, out),
        Experiment::FgfConvergence(p) => fgf(p, cfg.seed, out),
        Experiment::MultiplierProfile(p) => profile(p, out),
        Experiment::ImpedanceCheck(p) => impedance(p, out),
        Experiment::AcousticSpectrum(p) => acoustic(p, cfg),
        Experiment::MonteCarlo(p) => monte_carlo(p, cfg),
    }
}

fn pretty(v: &impl serde::Serialize) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn weyl(p: &WeylParams, out: &Path) -> Result<Outcome> {
    let geom = p.geometry.build()?;
    let (spec, _) = cache::spectrum(out, &geom, p.n, p.geometry.mass())?;
    let fit = weyl_diagnostic(&spec, p.fit_lo, p.fit_hi)?;
    let expected = p.expected_slope.unwrap_or(2.0 / (spec.dim_ambient() as f64 - 1.0));
    let mut o = Outcome::default();
    o.output("spectrum", "spectrum", "spectrum.csv", spec.to_csv());
    o.output(
        "weyl_fit",
        "weyl_fit",
        "weyl_fit.json",
        pretty(&json!({
            "fit_lo": p.fit_lo,
            "fit_hi": p.fit_hi,
            "slope": fit.slope,
            "intercept": fit.intercept,
            "c_lower": fit.c_lower,
            "c_upper": fit.c_upper,
            "expected_slope": expected,
            "b0": spec.b0(),
            "orthonormality_error": spec.orthonormality_error(),
        }))?,
    );
    o.assert(
        "weyl_slope",
        (fit.slope - expected).abs() <= p.slope_tol,
        format!("slope {:.4}, expected {expected:.4} +- {}", fit.slope, p.slope_tol),
    );
    let orth = spec.orthonormality_error();
    o.assert("orthonormality", orth <= spec.tol_orth(), format!("{orth:.2e} <= {:.2e}", spec.tol_orth()));
    Ok(o)
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Converges => "converges",
        Verdict::Diverges => "diverges",
        Verdict::Indeterminate => "indeterminate",
    }
}

fn fgf(p: &FgfParams, seed: u64, out: &Path) -> Result<Outcome> {
    let geom = p.geometry.build()?;
    let checkpoints = p.checkpoints();
    let n = *checkpoints.last().unwrap();
    let (spec, _) = cache::spectrum(out, &geom, n, p.geometry.mass())?;
    let spec = Arc::new(spec);
    let opts = ClassifierOptions { seeds: p.seeds, base_seed: seed, eps_conv: p.eps_conv, margin: p.margin };
    let mut o = Outcome::default();
    let mut reports = Vec::new();
    let mut table = String::from("s,t,threshold,last_ratio,verdict,expected\n");
    let mut ratios = String::from("s,t,checkpoint,ratio\n");
    for &s in &p.s {
        for &t in &p.t {
            let r = convergence_classifier(spec.clone(), s, t, &checkpoints, &opts)?;
            let expected = r.expected(p.margin);
            let last = *r.ratios.last().unwrap();
            let exp_name = expected.map(verdict_name).unwrap_or("none");
            writeln!(table, "{s},{t},{},{last},{},{exp_name}", r.threshold, verdict_name(r.verdict))?;
            for (k, q) in r.ratios.iter().enumerate() {
                writeln!(ratios, "{s},{t},{},{q}", checkpoints[k + 1])?;
            }
            match expected {
                Some(e) => o.assert(
                    format!("verdict s={s} t={t}"),
                    r.verdict == e,
                    format!("{} (ratio {last:.4}), threshold {:.3}", verdict_name(r.verdict), r.threshold),
                ),
                None => o.assert(
                    format!("verdict s={s} t={t}"),
                    r.verdict == Verdict::Indeterminate,
                    format!("inside the margin band, raw verdict {}", verdict_name(r.raw_verdict)),
                ),
            }
            reports.push(r);
        }
    }
    o.output("classifier", "classifier_table", "classifier.csv", table);
    o.output("ratios", "classifier_ratios", "ratios.csv", ratios);
    o.output("reports", "classifier_reports", "classifier.json", pretty(&reports)?);
    Ok(o)
}

fn profile(p: &ProfileParams, out: &Path) -> Result<Outcome> {
    let geom = p.geometry.build()?;
    let (spec, _) = cache::spectrum(out, &geom, p.n, p.geometry.mass())?;
    let spec = Arc::new(spec);
    let phi = p.phi.realize(spec.clone())?;
    let tensor = TripleProductTensor::new(spec.clone());
    let mut trunc = p.n_trunc.clone();
    trunc.sort_unstable();
    trunc.dedup();
    let mut csv = String::from("n_trunc,k,sigma_k\n");
    let mut norms = String::from("n_trunc,norm\n");
    let mut norm_values = Vec::new();
    for &n in &trunc {
        let a = build_multiplier_with(&tensor, &phi, p.s1, p.s2, n)?;
        let prof = compactness_profile(&a, &p.ranks)?;
        for (k, sv) in p.ranks.iter().zip(&prof) {
            writeln!(csv, "{n},{k},{sv}")?;
        }
        let norm = multiplier_norm(&a)?;
        writeln!(norms, "{n},{norm}")?;
        norm_values.push(norm);
    }
    let mut o = Outcome::default();
    o.output("profile", "profile", "profile.csv", csv);
    o.output("norms", "norms", "norms.csv", norms);
    if let Some(max) = p.max_norm_change {
        if norm_values.len() >= 2 {
            let (a, b) = (norm_values[norm_values.len() - 2], norm_values[norm_values.len() - 1]);
            let change = (b - a).abs() / b.max(f64::MIN_POSITIVE);
            o.assert("norm_stable", change <= max, format!("relative change {change:.3e} <= {max:.1e}"));
        }
    }
    if let Some(want) = p.expect_nonneg {
        let pos = positivity_test(&phi, *trunc.last().unwrap())?;
        o.assert(
            "positivity",
            pos.is_nonneg == want,
            format!("min eigenvalue {:.3e}, tolerance {:.1e}", pos.min_eig, pos.tol),
        );
    }
    Ok(o)
}

fn impedance(p: &ImpedanceParams, out: &Path) -> Result<Outcome> {
    let geom = p.geometry.build()?;
    let (spec, _) = cache::spectrum(out, &geom, p.n, p.geometry.mass())?;
    let z = p.impedance.realize(Arc::new(spec), p.n_trunc)?;
    let x = accretivity_cross_check(&z)?;
    let selfadjoint = selfadjointness_criterion(&z)?;
    let norm_k = cayley(&z).ok().map(|c| c.norm_k);
    let mut o = Outcome::default();
    o.output(
        "impedance",
        "impedance_report",
        "impedance.json",
        pretty(&json!({ "cross_check": x, "selfadjoint": selfadjoint, "cayley_norm": norm_k }))?,
    );
    o.assert("checks_agree", x.agree, format!("{x:?}"));
    if let Some(want) = p.expect_accretive {
        o.assert("accretive", x.herm_z == want, format!("accretive = {}", x.herm_z));
    }
    Ok(o)
}

fn shift(s: [f64; 2]) -> c64 {
    c64::new(s[0], s[1])
}

fn solve_options(cfg: &ExperimentConfig) -> SolveOptions {
    let d = SolveOptions::default();
    SolveOptions {
        residual_tol: cfg.tolerances.residual_tol.unwrap_or(d.residual_tol),
        zero_tol: cfg.tolerances.zero_tol.unwrap_or(d.zero_tol),
        seed: cfg.seed,
        ..d
    }
}

fn acoustic(p: &AcousticParams, cfg: &ExperimentConfig) -> Result<Outcome> {
    let opts = solve_options(cfg);
    let max_violation = cfg.tolerances.resolvent_violation.unwrap_or(1e-6);
    let mesh = p.mesh.build()?;
    let spec = boundary_spectrum(&mesh, p.spectrum_count)?;
    let n_b = p.n_b.unwrap_or_else(|| default_n_b(&mesh));
    let z = p.impedance.realize(spec.clone(), n_b).context("realizing the impedance")?;
    let pencil = assemble_pencil(&mesh, &spec, &z, Some(n_b))?;
    let rep = solve_pencil(&pencil, p.n_wanted, shift(p.shift), &opts)?;
    let mut o = Outcome::default();
    o.output("eigenvalues", "eigen_cloud", "eigenvalues.csv", rep.to_csv());
    o.output("eigen_report", "eigen_report", "eigenvalues.json", rep.to_json()?.into_bytes());
    o.assert("converged", rep.all_converged(), format!("{} eigenpairs", rep.eigenvalues.len()));
    o.assert("lower_halfplane", rep.in_lower_halfplane, format!("max Im {:.3e}", rep.max_imag()));
    if let Some(want) = p.expect_real {
        o.assert("real_spectrum", rep.real_within_tol == want, format!("real = {}", rep.real_within_tol));
    }
    if p.resolvent_check {
        let md = verify_mdissipativity(&pencil, &rep, &default_resolvent_grid())?;
        o.assert(
            "m_dissipative",
            md.herm_check >= -md.herm_tol && md.halfplane_ok && md.max_violation <= max_violation,
            format!("Herm(B) min {:.2e}, resolvent violation {:.2e}", md.herm_check, md.max_violation),
        );
        o.output("mdiss", "mdiss_report", "mdiss.json", pretty(&md)?);
    }
    if !p.refine_h.is_empty() {
        let levels = p
            .refine_h
            .par_iter()
            .map(|&h| {
                let m = p.mesh.build_with_h(Some(h))?;
                let s = boundary_spectrum(&m, p.spectrum_count)?;
                let nb = p.n_b.unwrap_or_else(|| default_n_b(&m));
                let z = p.impedance.realize(s.clone(), nb)?;
                Ok((h, assemble_pencil(&m, &s, &z, Some(nb))?))
            })
            .collect::<Result<Vec<_>>>()?;
        let table = refinement_study(&levels, p.n_track, shift(p.shift), None, &opts)?;
        o.assert(
            "refinement",
            !table.ambiguous && table.all_converged,
            format!("last changes {:?}", table.last_change),
        );
        o.output("refinement", "refinement_table", "refinement.json", pretty(&table)?);
    }
    Ok(o)
}

fn monte_carlo(p: &MonteCarloParams, cfg: &ExperimentConfig) -> Result<Outcome> {
    let seed = cfg.seed;
    let mesh = p.mesh.build()?;
    let spec = boundary_spectrum(&mesh, p.spectrum_count)?;
    let n_b = p.n_b.unwrap_or_else(|| default_n_b(&mesh));
    let base = assemble_pencil(&mesh, &spec, &ImpedanceOperator::zero(spec.clone(), n_b)?, Some(n_b))?;
    let tensor = TripleProductTensor::new(spec);
    let opts = solve_options(cfg);
    let rep =
        monte_carlo_spectrum(&base, &tensor, &p.random, p.n_samples, seed, p.n_wanted, shift(p.shift), &opts)?;
    let mut o = Outcome::default();
    o.output("cloud", "eigen_cloud", "cloud.csv", rep.cloud_csv());
    o.output("ensemble", "ensemble_report", "ensemble.json", pretty(&rep)?);
    let want_real = if p.random.has_kernel_part() { 0.0 } else { 1.0 };
    o.assert("no_failures", rep.failures == 0, format!("{} failed samples", rep.failures));
    o.assert(
        "lower_halfplane",
        rep.fraction_halfplane == 1.0,
        format!("fraction {:.3}", rep.fraction_halfplane),
    );
    o.assert(
        "real_fraction",
        rep.fraction_real == want_real,
        format!("fraction {:.3}, expected {want_real}", rep.fraction_real),
    );
    Ok(o)
}
