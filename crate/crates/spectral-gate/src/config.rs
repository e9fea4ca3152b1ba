//! Scenario configuration: one schema-validated JSON file per run.
//!
//! Unknown keys are rejected everywhere. Complex numbers are written either
//! as a plain number (purely real) or as a two-element `[re, im]` array.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;

use crate::catalog::{Moduli, PhaseLayout, PresetName};
use crate::error::{Error, Result};
use crate::field::Grid;
use crate::solver::SplitFactors;
use crate::translation::CertifierConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// A complex scalar in config files: `1.5` or `[1.5, -0.25]`.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(untagged)]
pub enum ComplexSpec {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexSpec> for Complex64 {
    fn from(v: ComplexSpec) -> Self {
        match v {
            ComplexSpec::Real(x) => Complex64::new(x, 0.0),
            ComplexSpec::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub sizes: Vec<usize>,
    pub cell: Option<Vec<f64>>,
}

impl GridSection {
    pub fn build(&self) -> Result<Grid> {
        let cell = self
            .cell
            .clone()
            .unwrap_or_else(|| vec![1.0; self.sizes.len()]);
        Grid::new(&self.sizes, &cell)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetSection {
    pub name: String,
    pub d: Option<usize>,
}

impl PresetSection {
    pub fn resolve(&self) -> Result<(PresetName, usize)> {
        let name: PresetName = self.name.parse()?;
        Ok((name, self.d.unwrap_or_else(|| name.default_dim())))
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "kebab-case")]
pub enum LayoutSection {
    Single,
    Laminate { axis: usize, fraction: f64 },
    Checkerboard,
    Disk { center: Vec<f64>, radius: f64 },
    VoxelCsv { path: String },
}

impl LayoutSection {
    pub fn build(&self, grid: &Grid, base_dir: &Path) -> Result<PhaseLayout> {
        match self {
            LayoutSection::Single => Ok(PhaseLayout::single_phase(grid)),
            LayoutSection::Laminate { axis, fraction } => {
                PhaseLayout::laminate(grid, *axis, *fraction)
            }
            LayoutSection::Checkerboard => Ok(PhaseLayout::checkerboard(grid)),
            LayoutSection::Disk { center, radius } => PhaseLayout::disk(grid, center, *radius),
            LayoutSection::VoxelCsv { path } => {
                let text = std::fs::read_to_string(base_dir.join(path))?;
                PhaseLayout::from_voxel_csv(grid, &text)
            }
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub vary: Option<usize>,
    pub fixed: Option<Vec<ComplexSpec>>,
    pub re: [f64; 2],
    pub im: [f64; 2],
    pub resolution: [usize; 2],
    pub budget: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranslationFileSection {
    pub path: String,
    pub ell: usize,
    pub id: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifierSection {
    pub theta_samples: Option<usize>,
    pub refine: Option<bool>,
    pub t_max_factor: Option<f64>,
    /// Built-in translation names: "zero", "rotation-2d".
    pub translations: Option<Vec<String>>,
    pub translation_files: Option<Vec<TranslationFileSection>>,
    pub qstar_directions: Option<usize>,
}

impl CertifierSection {
    pub fn certifier_config(&self) -> CertifierConfig {
        let mut cfg = CertifierConfig::default();
        if let Some(n) = self.theta_samples {
            cfg.theta_samples = n;
        }
        if let Some(r) = self.refine {
            cfg.refine = r;
        }
        if let Some(t) = self.t_max_factor {
            cfg.t_max_factor = t;
        }
        cfg
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub oracle_cap: Option<usize>,
    /// "neumann" | "dense" | "inverse-form" | "splitting"
    pub method: Option<String>,
    pub split_factors: Option<[ComplexSpec; 4]>,
}

impl SolverSection {
    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(1e-10)
    }
    pub fn max_iter(&self) -> usize {
        self.max_iter.unwrap_or(20_000)
    }
    pub fn oracle_cap(&self) -> usize {
        self.oracle_cap.unwrap_or(crate::solver::DEFAULT_ORACLE_CAP)
    }
    pub fn method(&self) -> &str {
        self.method.as_deref().unwrap_or("neumann")
    }
    pub fn factors(&self) -> SplitFactors {
        match self.split_factors {
            None => SplitFactors::default(),
            Some([ce, cj, de, dj]) => SplitFactors {
                c_e: ce.into(),
                c_j: cj.into(),
                d_e: de.into(),
                d_j: dj.into(),
            },
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlochSection {
    pub rho: Vec<ComplexSpec>,
    pub kappa: Vec<ComplexSpec>,
    pub omegas: Vec<ComplexSpec>,
    pub k_vertices: Vec<Vec<f64>>,
    pub per_segment: Option<usize>,
    pub singular_tol: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertiesSection {
    pub which: Vec<String>,
    pub samples: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityCheckSection {
    pub presets: Option<Vec<String>>,
    pub trials: Option<usize>,
    pub grid_points: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub enabled: bool,
    /// Which phase indicator enters the compressed operator (default 1).
    pub phase: Option<usize>,
    pub coincidence_tol: Option<f64>,
}

/// Top-level scenario configuration.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub seed: Option<u64>,
    pub output_dir: Option<String>,
    pub grid: Option<GridSection>,
    pub preset: Option<PresetSection>,
    pub layout: Option<LayoutSection>,
    /// Per-phase named moduli.
    pub phases: Option<Vec<BTreeMap<String, ComplexSpec>>>,
    /// Pencil evaluation point (one complex number per phase).
    pub z: Option<Vec<ComplexSpec>>,
    pub scan: Option<ScanSection>,
    pub certifier: Option<CertifierSection>,
    pub solver: Option<SolverSection>,
    pub bloch: Option<BlochSection>,
    pub properties: Option<PropertiesSection>,
    pub identity_check: Option<IdentityCheckSection>,
    pub oracle: Option<OracleSection>,
    /// Optional projector cache path, reused across runs when present.
    pub projector_cache: Option<String>,
}

impl ScenarioConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: ScenarioConfig = serde_json::from_str(&text).map_err(|e| {
            Error::Config(format!("{} (line {}, column {})", e, e.line(), e.column()))
        })?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (this build expects {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn phase_moduli(&self) -> Result<Vec<Moduli>> {
        let phases = self
            .phases
            .as_ref()
            .ok_or_else(|| Error::Config("this command needs a 'phases' section".into()))?;
        Ok(phases
            .iter()
            .map(|m| {
                m.iter()
                    .map(|(k, &v)| (k.clone(), Complex64::from(v)))
                    .collect::<Moduli>()
            })
            .collect())
    }

    pub fn require<'a, T>(&self, field: Option<&'a T>, name: &str) -> Result<&'a T> {
        field.ok_or_else(|| Error::Config(format!("this command needs a '{name}' section")))
    }
}
