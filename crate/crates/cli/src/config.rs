//! Experiment configuration files (`schema_version` 1).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gibc_core::acoustic::{annulus_mesh, disk_mesh, polygon_mesh, DomainMesh};
use gibc_core::fgf::RandomImpedanceSpec;
use gibc_core::geometry::{icosphere, CurveComponent};
use gibc_core::impedance::{ImpedanceConfig, PhiConfig};
use gibc_core::spectrum::MassKind;
use gibc_core::BoundaryGeometry;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(flatten)]
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// Overrides for the eigensolver and dissipativity checks.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_tol: Option<f64>,
    /// Largest accepted resolvent bound violation (default `1e-6`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolvent_violation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", content = "params", rename_all = "snake_case")]
pub enum Experiment {
    Weyl(WeylParams),
    FgfConvergence(FgfParams),
    MultiplierProfile(ProfileParams),
    ImpedanceCheck(ImpedanceParams),
    AcousticSpectrum(AcousticParams),
    MonteCarlo(MonteCarloParams),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Weyl(_) => "weyl",
            Experiment::FgfConvergence(_) => "fgf_convergence",
            Experiment::MultiplierProfile(_) => "multiplier_profile",
            Experiment::ImpedanceCheck(_) => "impedance_check",
            Experiment::AcousticSpectrum(_) => "acoustic_spectrum",
            Experiment::MonteCarlo(_) => "monte_carlo",
        }
    }
}

/// Boundary geometry for the spectral experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GeometrySource {
    Circle {
        #[serde(default = "one")]
        radius: f64,
    },
    RegularPolygon {
        sides: usize,
        #[serde(default = "one")]
        radius: f64,
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    Icosphere {
        level: usize,
        #[serde(default = "one")]
        radius: f64,
        #[serde(default)]
        consistent_mass: bool,
    },
    /// Geometry JSON as written by `BoundaryGeometry::to_json`.
    File {
        path: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

impl GeometrySource {
    pub fn build(&self) -> Result<BoundaryGeometry> {
        Ok(match self {
            GeometrySource::Circle { radius } => {
                BoundaryGeometry::curves(vec![CurveComponent::Circle { center: [0.0, 0.0], radius: *radius }])?
            }
            GeometrySource::RegularPolygon { sides, radius } => BoundaryGeometry::regular_polygon(*sides, *radius)?,
            GeometrySource::Polygon { vertices } => {
                BoundaryGeometry::curves(vec![CurveComponent::Polyline(vertices.clone())])?
            }
            GeometrySource::Icosphere { level, radius, .. } => {
                let s = icosphere(*level, *radius, [0.0; 3]);
                BoundaryGeometry::surface(s.vertices, s.triangles)?
            }
            GeometrySource::File { path } => BoundaryGeometry::from_json(
                &std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
            )?,
        })
    }

    pub fn mass(&self) -> MassKind {
        match self {
            GeometrySource::Icosphere { consistent_mass: true, .. } => MassKind::Consistent,
            _ => MassKind::Lumped,
        }
    }

    fn file(&self) -> Option<&Path> {
        match self {
            GeometrySource::File { path } => Some(path),
            _ => None,
        }
    }
}

/// Planar domain for the acoustic experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MeshSource {
    Disk {
        #[serde(default = "one")]
        radius: f64,
        h: f64,
    },
    Annulus {
        r_in: f64,
        r_out: f64,
        h: f64,
    },
    Polygon {
        outer: Vec<[f64; 2]>,
        #[serde(default)]
        holes: Vec<Vec<[f64; 2]>>,
        h: f64,
    },
    /// Mesh JSON as written by `DomainMesh::to_json`.
    File {
        path: PathBuf,
    },
}

impl MeshSource {
    pub fn build(&self) -> Result<DomainMesh> {
        self.build_with_h(None)
    }

    /// The same domain meshed at `h` (generated meshes only).
    pub fn build_with_h(&self, h_override: Option<f64>) -> Result<DomainMesh> {
        Ok(match self {
            MeshSource::Disk { radius, h } => disk_mesh([0.0, 0.0], *radius, h_override.unwrap_or(*h))?,
            MeshSource::Annulus { r_in, r_out, h } => annulus_mesh([0.0, 0.0], *r_in, *r_out, h_override.unwrap_or(*h))?,
            MeshSource::Polygon { outer, holes, h } => polygon_mesh(outer, holes, h_override.unwrap_or(*h))?,
            MeshSource::File { path } => {
                if h_override.is_some() {
                    bail!("mesh files cannot be refined; use a generated mesh for refinement studies");
                }
                DomainMesh::from_json(
                    &std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
                )?
            }
        })
    }

    fn file(&self) -> Option<&Path> {
        match self {
            MeshSource::File { path } => Some(path),
            _ => None,
        }
    }

    fn h(&self) -> Option<f64> {
        match self {
            MeshSource::Disk { h, .. } | MeshSource::Annulus { h, .. } | MeshSource::Polygon { h, .. } => Some(*h),
            MeshSource::File { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylParams {
    pub geometry: GeometrySource,
    pub n: usize,
    pub fit_lo: usize,
    pub fit_hi: usize,
    /// Expected slope; defaults to `2 / (d - 1)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_slope: Option<f64>,
    #[serde(default = "default_slope_tol")]
    pub slope_tol: f64,
}

fn default_slope_tol() -> f64 {
    0.05
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FgfParams {
    pub geometry: GeometrySource,
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    /// First checkpoint; each later one doubles it.
    pub first_checkpoint: usize,
    pub doublings: usize,
    #[serde(default = "default_eps_conv")]
    pub eps_conv: f64,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

fn default_seeds() -> usize {
    50
}

fn default_eps_conv() -> f64 {
    0.01
}

fn default_margin() -> f64 {
    0.1
}

impl FgfParams {
    pub fn checkpoints(&self) -> Vec<usize> {
        (0..=self.doublings).map(|k| self.first_checkpoint << k).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    pub geometry: GeometrySource,
    /// Spectrum size; the symbol is realized on all of it.
    pub n: usize,
    pub phi: PhiConfig,
    pub s1: f64,
    pub s2: f64,
    pub n_trunc: Vec<usize>,
    pub ranks: Vec<usize>,
    /// Fail if the norm moves more than this between the last two truncations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_norm_change: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_nonneg: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImpedanceParams {
    pub geometry: GeometrySource,
    pub n: usize,
    pub n_trunc: usize,
    pub impedance: ImpedanceConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_accretive: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcousticParams {
    pub mesh: MeshSource,
    /// Boundary spectrum size; must cover `n_b`.
    pub spectrum_count: usize,
    pub impedance: ImpedanceConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_b: Option<usize>,
    pub n_wanted: usize,
    #[serde(default = "default_shift")]
    pub shift: [f64; 2],
    #[serde(default = "yes")]
    pub resolvent_check: bool,
    /// Mesh sizes for a refinement study of the lowest `n_track` values.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub refine_h: Vec<f64>,
    #[serde(default = "default_track")]
    pub n_track: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_real: Option<bool>,
}

fn default_shift() -> [f64; 2] {
    [0.0, 0.5]
}

fn yes() -> bool {
    true
}

fn default_track() -> usize {
    5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloParams {
    pub mesh: MeshSource,
    pub spectrum_count: usize,
    pub random: RandomImpedanceSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_b: Option<usize>,
    pub n_samples: usize,
    pub n_wanted: usize,
    #[serde(default = "default_shift")]
    pub shift: [f64; 2],
}

/// Sets `path` (dot separated) in `root` to `value`, parsed as JSON when it
/// parses and kept as a string otherwise.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment.split_once('=').with_context(|| format!("override `{assignment}` lacks `=`"))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        let last = i + 1 == keys.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert(key.to_string(), value);
                    return Ok(());
                }
                map.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = key.parse().with_context(|| format!("`{key}` is not an array index in `{path}`"))?;
                let len = items.len();
                let slot = items.get_mut(idx).with_context(|| format!("index {idx} out of range ({len}) in `{path}`"))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => bail!("`{path}` descends into a scalar"),
        };
    }
    Ok(())
}

/// Parses a config file with overrides applied.
pub fn load(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    let cfg: ExperimentConfig = serde_json::from_value(value).context("config does not match the schema")?;
    Ok(cfg)
}

/// Every problem with `cfg`, checked before any compute.
pub fn validate(cfg: &ExperimentConfig) -> Vec<String> {
    let mut errs = Vec::new();
    if cfg.schema_version != SCHEMA_VERSION {
        errs.push(format!("schema_version {} unsupported (expected {SCHEMA_VERSION})", cfg.schema_version));
    }
    let mut need_file = |p: Option<&Path>| {
        if let Some(p) = p {
            if !p.is_file() {
                errs.push(format!("file {} does not exist", p.display()));
            }
        }
    };
    match &cfg.experiment {
        Experiment::Weyl(p) => need_file(p.geometry.file()),
        Experiment::FgfConvergence(p) => need_file(p.geometry.file()),
        Experiment::MultiplierProfile(p) => need_file(p.geometry.file()),
        Experiment::ImpedanceCheck(p) => need_file(p.geometry.file()),
        Experiment::AcousticSpectrum(p) => need_file(p.mesh.file()),
        Experiment::MonteCarlo(p) => need_file(p.mesh.file()),
    }
    let t = &cfg.tolerances;
    for (name, v) in [("residual_tol", t.residual_tol), ("zero_tol", t.zero_tol), ("resolvent_violation", t.resolvent_violation)] {
        if v.is_some_and(|v| !(v > 0.0 && v.is_finite())) {
            errs.push(format!("tolerances.{name} must be positive and finite"));
        }
    }
    let mut check = |ok: bool, msg: &str| {
        if !ok {
            errs.push(msg.to_string());
        }
    };
    match &cfg.experiment {
        Experiment::Weyl(p) => {
            check(p.n >= 2, "weyl: n must be at least 2");
            check(p.fit_lo >= 1 && p.fit_hi >= p.fit_lo + 19, "weyl: fit range needs at least 20 points");
            check(p.fit_hi <= p.n, "weyl: fit_hi exceeds n");
            check(p.slope_tol > 0.0, "weyl: slope_tol must be positive");
        }
        Experiment::FgfConvergence(p) => {
            check(!p.s.is_empty() && !p.t.is_empty(), "fgf_convergence: s and t must be non-empty");
            check(p.s.iter().all(|&s| s >= 0.0), "fgf_convergence: s must be nonnegative");
            check(p.seeds >= 30, "fgf_convergence: at least 30 seeds");
            check(p.first_checkpoint >= 2 && p.doublings >= 3, "fgf_convergence: need 4 or more checkpoints");
            check(p.eps_conv > 0.0 && p.margin >= 0.0, "fgf_convergence: eps_conv > 0 and margin >= 0");
        }
        Experiment::MultiplierProfile(p) => {
            check(!p.n_trunc.is_empty(), "multiplier_profile: n_trunc must be non-empty");
            check(p.n_trunc.iter().all(|&k| k >= 1 && k <= p.n), "multiplier_profile: n_trunc outside 1..=n");
            check(!p.ranks.is_empty(), "multiplier_profile: ranks must be non-empty");
            let smallest = p.n_trunc.iter().copied().min().unwrap_or(0);
            check(p.ranks.iter().all(|&r| r >= 1 && r <= smallest), "multiplier_profile: ranks outside 1..=min n_trunc");
        }
        Experiment::ImpedanceCheck(p) => {
            check(p.n_trunc >= 1 && p.n_trunc <= p.n, "impedance_check: n_trunc outside 1..=n");
        }
        Experiment::AcousticSpectrum(p) => {
            check(p.n_wanted >= 1, "acoustic_spectrum: n_wanted must be positive");
            check(p.n_b.is_none_or(|b| b <= p.spectrum_count), "acoustic_spectrum: n_b exceeds spectrum_count");
            check(p.mesh.h().is_none_or(|h| h > 0.0), "acoustic_spectrum: h must be positive");
            if !p.refine_h.is_empty() {
                check(p.refine_h.len() >= 3, "acoustic_spectrum: refinement needs 3 or more mesh sizes");
                check(p.refine_h.iter().all(|&h| h > 0.0), "acoustic_spectrum: refine_h must be positive");
                check(p.mesh.file().is_none(), "acoustic_spectrum: refinement needs a generated mesh");
                check(p.n_track >= 1, "acoustic_spectrum: n_track must be positive");
            }
        }
        Experiment::MonteCarlo(p) => {
            check(p.n_samples >= 1 && p.n_wanted >= 1, "monte_carlo: n_samples and n_wanted must be positive");
            check(p.n_b.is_none_or(|b| b <= p.spectrum_count), "monte_carlo: n_b exceeds spectrum_count");
            if let Err(e) = p.random.validate() {
                errs.push(format!("monte_carlo: {e}"));
            }
        }
    }
    errs
}
