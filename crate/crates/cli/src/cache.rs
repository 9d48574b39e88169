//! On-disk cache of boundary spectra, keyed by geometry and mode count.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use gibc_core::spectrum::{build_spectrum, MassKind, SurfaceSolverOptions};
use gibc_core::{BoundaryGeometry, BoundarySpectrum};

use crate::manifest::sha256_hex;

pub fn cache_path(root: &Path, geom: &BoundaryGeometry, n: usize, mass: MassKind) -> Result<PathBuf> {
    let key = format!("{}|{:?}", geom.to_json()?, mass);
    Ok(root.join(".cache").join(format!("spectrum-{}-{n}.bin", sha256_hex(key.as_bytes()))))
}

/// Reads the cached spectrum when present and readable, otherwise computes
/// and stores it. Returns whether the cache was hit.
pub fn spectrum(root: &Path, geom: &BoundaryGeometry, n: usize, mass: MassKind) -> Result<(BoundarySpectrum, bool)> {
    let path = cache_path(root, geom, n, mass)?;
    if let Ok(f) = File::open(&path) {
        if let Ok(s) = BoundarySpectrum::read_binary(geom.clone(), &mut BufReader::new(f)) {
            if s.count() == n {
                return Ok((s, true));
            }
        }
    }
    let opts = SurfaceSolverOptions { mass, ..Default::default() };
    let spec = build_spectrum(geom, n, &opts)?;
    std::fs::create_dir_all(path.parent().unwrap()).context("creating cache directory")?;
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?);
        spec.write_binary(&mut w)?;
    }
    std::fs::rename(&tmp, &path)?;
    Ok((spec, false))
}
