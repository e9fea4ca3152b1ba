//! Parameter-plane scans: certified exclusion regions for the generalized
//! spectrum, and the dense eigen-oracle for two-phase instances.
//!
//! A scan varies one complex pencil parameter over a rectangular grid while
//! the others stay fixed (homogeneity makes the normalization z₁ = 1
//! canonical for two-phase problems). Every scan point gets one of three
//! verdicts: certified (a coercivity certificate exists, so the point is
//! outside the generalized spectrum), uncertified (no certificate found —
//! not a spectrum claim), or unscanned (point budget exhausted). The eigen
//! oracle may additionally overlay exact spectrum points; an overlay that
//! lands on a certified node is a soundness violation and fails the run.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{OperatorField, PhaseLayout};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, spectral_norm};
use crate::pencil::{CoercivityCertificate, OperatorPencil};
use crate::solver::{assemble_subspace_matrix, Subspace};
use crate::translation::{certify_from_matrices, CertifierConfig, Translation};

/// Rectangular scan of one complex pencil parameter.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanSpec {
    /// Index of the varying parameter.
    pub vary: usize,
    /// Fixed parameter values; the entry at `vary` is ignored.
    pub fixed: Vec<[f64; 2]>,
    pub re_range: [f64; 2],
    pub re_steps: usize,
    pub im_range: [f64; 2],
    pub im_steps: usize,
    /// Optional point budget; points beyond it stay unscanned.
    pub budget: Option<usize>,
}

impl ScanSpec {
    pub fn len(&self) -> usize {
        self.re_steps * self.im_steps
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Varying value at (row, col); rows sweep Im ascending, cols Re.
    pub fn value_at(&self, row: usize, col: usize) -> Complex64 {
        let re = if self.re_steps <= 1 {
            self.re_range[0]
        } else {
            self.re_range[0]
                + (self.re_range[1] - self.re_range[0]) * col as f64 / (self.re_steps - 1) as f64
        };
        let im = if self.im_steps <= 1 {
            self.im_range[0]
        } else {
            self.im_range[0]
                + (self.im_range[1] - self.im_range[0]) * row as f64 / (self.im_steps - 1) as f64
        };
        Complex64::new(re, im)
    }

    pub fn z_vector(&self, row: usize, col: usize) -> Vec<Complex64> {
        let mut z: Vec<Complex64> = self
            .fixed
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        z[self.vary] = self.value_at(row, col);
        z
    }

    fn validate(&self, n_params: usize) -> Result<()> {
        if self.vary >= n_params || self.fixed.len() != n_params {
            return Err(Error::InvalidArgument(
                "scan parameter indices do not match the pencil".into(),
            ));
        }
        if self.re_steps == 0 || self.im_steps == 0 {
            return Err(Error::InvalidArgument(
                "scan needs at least one step per axis".into(),
            ));
        }
        Ok(())
    }

    /// Nearest scan node to a complex value, with its distance.
    pub fn nearest_node(&self, z: Complex64) -> (usize, usize, f64) {
        let clamp = |v: f64, lo: f64, hi: f64, steps: usize| -> usize {
            if steps <= 1 || hi == lo {
                0
            } else {
                let t = ((v - lo) / (hi - lo) * (steps - 1) as f64).round();
                t.clamp(0.0, (steps - 1) as f64) as usize
            }
        };
        let col = clamp(z.re, self.re_range[0], self.re_range[1], self.re_steps);
        let row = clamp(z.im, self.im_range[0], self.im_range[1], self.im_steps);
        let node = self.value_at(row, col);
        (row, col, (node - z).norm())
    }
}

/// Verdict at one scan point.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum PointStatus {
    Certified { certificate: CoercivityCertificate },
    Uncertified,
    OracleSpectrum { sigma_min: f64 },
    Unscanned,
}

impl PointStatus {
    pub fn label(&self) -> &'static str {
        match self {
            PointStatus::Certified { .. } => "certified",
            PointStatus::Uncertified => "uncertified",
            PointStatus::OracleSpectrum { .. } => "oracle-spectrum",
            PointStatus::Unscanned => "unscanned",
        }
    }
}

/// Scan metadata carried into the exported artifacts.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct MapMetadata {
    pub preset: String,
    pub layout: String,
    pub theta_samples: usize,
    pub translation_ids: Vec<String>,
    pub seed: u64,
}

/// A completed parameter-plane scan.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumMap {
    pub scan: ScanSpec,
    pub metadata: MapMetadata,
    /// Row-major over (im row, re col).
    pub points: Vec<PointStatus>,
}

impl SpectrumMap {
    pub fn status(&self, row: usize, col: usize) -> &PointStatus {
        &self.points[row * self.scan.re_steps + col]
    }

    pub fn count(&self, label: &str) -> usize {
        self.points.iter().filter(|p| p.label() == label).count()
    }

    /// Overlay oracle spectrum points and run the soundness cross-check:
    /// no certified node may lie within `coincidence_tol` of an oracle point,
    /// and the node nearest to each in-window oracle point must not be
    /// certified.
    pub fn overlay_oracle(&mut self, oracle: &[f64], coincidence_tol: f64) -> Result<()> {
        for z in oracle {
            let z = Complex64::new(*z, 0.0);
            // any node within the coincidence tolerance must be uncertified
            for row in 0..self.scan.im_steps {
                for col in 0..self.scan.re_steps {
                    let node = self.scan.value_at(row, col);
                    if (node - z).norm() <= coincidence_tol {
                        if let PointStatus::Certified { .. } = self.status(row, col) {
                            return Err(Error::SoundnessViolation(format!(
                                "certified node {node} coincides with oracle spectrum point {z}"
                            )));
                        }
                    }
                }
            }
            let (row, col, dist) = self.scan.nearest_node(z);
            let spacing = (self.scan.value_at(0, 1.min(self.scan.re_steps - 1))
                - self.scan.value_at(0, 0))
            .norm()
            .max(f64::MIN_POSITIVE);
            if dist <= 0.5 * spacing + 1e-12 {
                let idx = row * self.scan.re_steps + col;
                match &self.points[idx] {
                    PointStatus::Certified { .. } => {
                        return Err(Error::SoundnessViolation(format!(
                            "oracle spectrum point {z} falls in the certified region"
                        )));
                    }
                    PointStatus::Unscanned => {}
                    _ => self.points[idx] = PointStatus::OracleSpectrum { sigma_min: 0.0 },
                }
            }
        }
        Ok(())
    }
}

/// Scan the parameter plane, certifying each point independently.
///
/// Certified points carry their certificates; points beyond the budget are
/// reported unscanned rather than silently dropped. For multiphase pencils
/// the per-point work uses only the evaluated per-phase matrices.
pub fn map_spectrum_region(
    pencil: &OperatorPencil,
    scan: &ScanSpec,
    library: &[Translation],
    cfg: &CertifierConfig,
    metadata: MapMetadata,
) -> Result<SpectrumMap> {
    scan.validate(pencil.len())?;
    for tr in library {
        if !tr.is_verified_pass() {
            return Err(Error::UnverifiedTranslation(tr.id().to_string()));
        }
    }
    let total = scan.len();
    let budget = scan.budget.unwrap_or(total).min(total);

    let statuses: Vec<PointStatus> = (0..budget)
        .into_par_iter()
        .map(|idx| {
            let (row, col) = (idx / scan.re_steps, idx % scan.re_steps);
            let z = scan.z_vector(row, col);
            let mats = match pencil.evaluated_phase_matrices(&z)? {
                Some((layout, mats)) => layout
                    .present_phases()
                    .into_iter()
                    .map(|i| mats[i].clone())
                    .collect(),
                None => pencil.evaluate(&z)?.distinct_matrices(),
            };
            let beta = mats.iter().map(spectral_norm).fold(0.0, f64::max);
            let cert = certify_from_matrices(&mats, beta, library, cfg)?;
            Ok(match cert {
                Some(certificate) => PointStatus::Certified { certificate },
                None => PointStatus::Uncertified,
            })
        })
        .collect::<Result<_>>()?;

    let mut points = statuses;
    points.resize(total, PointStatus::Unscanned);
    let mut metadata = metadata;
    metadata.theta_samples = cfg.theta_samples;
    metadata.translation_ids = library.iter().map(|t| t.id().to_string()).collect();
    Ok(SpectrumMap {
        scan: scan.clone(),
        metadata,
        points,
    })
}

/// Exact spectrum points of a two-phase pencil `z₁ χ₁ I + z₂ χ₂ I` in the
/// normalized variable `z₂/z₁`: the Hermitian eigenvalues μ of the
/// compressed indicator `Γ₁ χ Γ₁` give the points `1 − 1/μ` for μ > 0.
///
/// Every returned value, substituted into the pencil, makes the dense oracle
/// report a generalized-spectrum hit.
pub fn eigen_oracle_spectrum(
    sub: &Subspace,
    layout: &PhaseLayout,
    phase: usize,
    cap: usize,
) -> Result<Vec<f64>> {
    if phase >= layout.num_phases() {
        return Err(Error::InvalidArgument(format!(
            "phase {phase} out of range"
        )));
    }
    let dim = sub.shape().dim();
    let id = DMatrix::<Complex64>::identity(dim, dim);
    let zero = DMatrix::<Complex64>::zeros(dim, dim);
    let mats: Vec<DMatrix<Complex64>> = (0..layout.num_phases())
        .map(|i| if i == phase { id.clone() } else { zero.clone() })
        .collect();
    let chi = OperatorField::from_phase_matrices(layout, &mats, sub.shape())?;
    let a = assemble_subspace_matrix(&chi, sub, cap)?;
    // the compressed indicator is a product of orthogonal projections, so
    // its spectrum lies in [0, 1]; clamp eigensolver noise above 1
    let mut points: Vec<f64> = hermitian_eigenvalues(&a)
        .into_iter()
        .filter(|&mu| mu > 1e-12)
        .map(|mu| 1.0 - 1.0 / mu.min(1.0))
        .collect();
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(points)
}
