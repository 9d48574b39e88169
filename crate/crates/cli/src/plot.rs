//! Long-format `series,x,y` tables for plotting tools.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};

use crate::manifest::{ArtifactEntry, Manifest};

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Result<Table> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut lines = text.lines().filter(|l| !l.is_empty());
        let header = lines.next().context("empty table")?.split(',').map(str::to_string).collect();
        let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
        Ok(Table { header, rows })
    }

    fn col(&self, name: &str) -> Result<usize> {
        self.header.iter().position(|h| h == name).with_context(|| format!("no column `{name}`"))
    }
}

fn num(s: &str) -> Result<f64> {
    s.parse().with_context(|| format!("`{s}` is not a number"))
}

/// The plot table for artifact `id` of the run at `dir`.
pub fn emit(manifest: &Manifest, dir: &Path, id: &str) -> Result<String> {
    let entry = manifest.artifact(id).with_context(|| {
        let ids: Vec<&str> = manifest.artifacts.iter().map(|a| a.id.as_str()).collect();
        format!("no artifact `{id}` (have {})", ids.join(", "))
    })?;
    let table = Table::read(&dir.join(&entry.path))?;
    let mut out = String::from("series,x,y\n");
    match entry.kind.as_str() {
        "spectrum" => spectrum(manifest, dir, &table, &mut out)?,
        "eigen_cloud" => {
            let (re, im, sid) = (table.col("re")?, table.col("im")?, table.col("sample_id")?);
            for r in &table.rows {
                writeln!(out, "{},{},{}", r[sid], r[re], r[im])?;
            }
        }
        "profile" => {
            let (n, k, sv) = (table.col("n_trunc")?, table.col("k")?, table.col("sigma_k")?);
            for r in &table.rows {
                writeln!(out, "n_trunc={},{},{}", r[n], r[k], r[sv])?;
            }
        }
        "classifier_ratios" => {
            let (s, t, c, q) = (table.col("s")?, table.col("t")?, table.col("checkpoint")?, table.col("ratio")?);
            for r in &table.rows {
                writeln!(out, "s={} t={},{},{}", r[s], r[t], r[c], r[q])?;
            }
        }
        other => bail!("artifact `{id}` has kind `{other}`, which has no plot"),
    }
    Ok(out)
}

/// Eigenvalues against `n`, plus the fitted power law over the fit range
/// when the run produced one.
fn spectrum(manifest: &Manifest, dir: &Path, table: &Table, out: &mut String) -> Result<()> {
    let (n, mu) = (table.col("n")?, table.col("mu_n")?);
    for r in &table.rows {
        writeln!(out, "spectrum,{},{}", r[n], r[mu])?;
    }
    let Some(ArtifactEntry { path, .. }) = manifest.artifacts.iter().find(|a| a.kind == "weyl_fit") else {
        return Ok(());
    };
    let text = std::fs::read_to_string(dir.join(path))?;
    let fit: serde_json::Value = serde_json::from_str(&text)?;
    let get = |k: &str| fit[k].as_f64().with_context(|| format!("weyl fit lacks `{k}`"));
    let (slope, intercept) = (get("slope")?, get("intercept")?);
    let (lo, hi) = (get("fit_lo")? as usize, get("fit_hi")? as usize);
    for r in &table.rows {
        let k = num(&r[n])?;
        if k >= lo as f64 && k <= hi as f64 {
            writeln!(out, "power_law,{},{}", r[n], (intercept + slope * k.ln()).exp())?;
        }
    }
    Ok(())
}
