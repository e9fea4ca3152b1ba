//! Canonical-form catalog: shapes, symbols and coefficient builders for the
//! supported physical equations, plus multiphase layouts.
//!
//! Every preset fixes three things: the tensor shape of the E-field column,
//! the per-wavevector symbol map whose range is the E-subspace, and a builder
//! that turns named scalar moduli into the pointwise coefficient matrix L.
//! All moduli are dimensionless; matrix-valued moduli enter isotropically
//! (scalar times identity). Anisotropic tensors can be assembled directly
//! through [`OperatorField::from_phase_matrices`].

use std::collections::BTreeMap;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{Field, Grid, TensorShape};
use crate::linalg::{hermitian_part, is_finite_matrix, try_inverse};
use crate::projection::{build_projection, SymbolMap};

/// Named complex scalar moduli for one phase.
pub type Moduli = BTreeMap<String, Complex64>;

/// Convenience constructor for a moduli map from `(name, value)` pairs.
pub fn moduli(pairs: &[(&str, Complex64)]) -> Moduli {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ci(k: f64) -> Complex64 {
    Complex64::new(0.0, k)
}

// ---------------------------------------------------------------------------
// Preset names
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PresetName {
    Conductivity,
    Acoustics,
    Maxwell,
    Elastodynamics,
    SchrodingerFreq,
    Thermoacoustics,
    Thermoelasticity,
    KirchhoffPlate,
    MindlinPlate,
    DirichletLaplacian,
}

pub const ALL_PRESETS: [PresetName; 10] = [
    PresetName::Conductivity,
    PresetName::Acoustics,
    PresetName::Maxwell,
    PresetName::Elastodynamics,
    PresetName::SchrodingerFreq,
    PresetName::Thermoacoustics,
    PresetName::Thermoelasticity,
    PresetName::KirchhoffPlate,
    PresetName::MindlinPlate,
    PresetName::DirichletLaplacian,
];

impl PresetName {
    pub fn as_str(&self) -> &'static str {
        match self {
            PresetName::Conductivity => "conductivity",
            PresetName::Acoustics => "acoustics",
            PresetName::Maxwell => "maxwell",
            PresetName::Elastodynamics => "elastodynamics",
            PresetName::SchrodingerFreq => "schrodinger_freq",
            PresetName::Thermoacoustics => "thermoacoustics",
            PresetName::Thermoelasticity => "thermoelasticity",
            PresetName::KirchhoffPlate => "kirchhoff_plate",
            PresetName::MindlinPlate => "mindlin_plate",
            PresetName::DirichletLaplacian => "dirichlet_laplacian",
        }
    }

    /// Default spatial dimension used by the batch tools.
    pub fn default_dim(&self) -> usize {
        match self {
            PresetName::Maxwell => 3,
            _ => 2,
        }
    }
}

impl FromStr for PresetName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ALL_PRESETS
            .iter()
            .find(|p| p.as_str() == s)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("unknown preset '{s}'")))
    }
}

impl std::fmt::Display for PresetName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

// ---------------------------------------------------------------------------
// Isotropic fourth-order tensors as matrices on flattened gradients
// ---------------------------------------------------------------------------

/// Matrix of the isotropic fourth-order tensor
/// `T_{(ab)(ce)} = lam δ_ab δ_ce + mu (δ_ac δ_be + δ_ae δ_bc)`
/// acting on row-major flattened d×d gradients.
fn iso_fourth_order(d: usize, lam: Complex64, mu: Complex64) -> DMatrix<Complex64> {
    let n = d * d;
    DMatrix::from_fn(n, n, |row, col| {
        let (a, b) = (row / d, row % d);
        let (ce, e) = (col / d, col % d);
        let mut v = Complex64::ZERO;
        if a == b && ce == e {
            v += lam;
        }
        if a == ce && b == e {
            v += mu;
        }
        if a == e && b == ce {
            v += mu;
        }
        v
    })
}

/// Row-major flattening of the d×d identity, as a column vector.
fn vec_identity(d: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(d * d, 1, |row, _| {
        if row / d == row % d {
            Complex64::ONE
        } else {
            Complex64::ZERO
        }
    })
}

// ---------------------------------------------------------------------------
// Symbols
// ---------------------------------------------------------------------------

fn gradient_symbol(d: usize) -> SymbolMap {
    SymbolMap::new(
        TensorShape::vector(d),
        d,
        1,
        true,
        Box::new(move |k: &[f64]| DMatrix::from_iterator(d, 1, k.iter().map(|&kj| ci(kj)))),
    )
}

/// `(∇p, p)` style symbol: S(k) = (i k, 1)ᵀ.
fn gradient_potential_symbol(d: usize) -> SymbolMap {
    let shape = TensorShape::new(vec![(d, 1), (1, 1)]).unwrap();
    let eval = move |k: &[f64], with_potential: bool| {
        let mut col: Vec<Complex64> = k.iter().map(|&kj| ci(kj)).collect();
        col.push(if with_potential {
            Complex64::ONE
        } else {
            Complex64::ZERO
        });
        DMatrix::from_column_slice(d + 1, 1, &col)
    };
    SymbolMap::new(shape, d, 1, false, Box::new(move |k: &[f64]| eval(k, true)))
        .with_infinity_limit(Box::new(move |k: &[f64]| eval(k, false)))
}

/// Maxwell symbol: S(k) = (i [k]_× , I₃) stacked, acting on the electric field.
fn maxwell_symbol() -> SymbolMap {
    let shape = TensorShape::new(vec![(3, 1), (3, 1)]).unwrap();
    let eval = move |k: &[f64], with_field: bool| {
        let mut s = DMatrix::<Complex64>::zeros(6, 3);
        // cross-product matrix [k]_× rows
        s[(0, 1)] = ci(-k[2]);
        s[(0, 2)] = ci(k[1]);
        s[(1, 0)] = ci(k[2]);
        s[(1, 2)] = ci(-k[0]);
        s[(2, 0)] = ci(-k[1]);
        s[(2, 1)] = ci(k[0]);
        if with_field {
            for j in 0..3 {
                s[(3 + j, j)] = Complex64::ONE;
            }
        }
        s
    };
    SymbolMap::new(shape, 3, 3, false, Box::new(move |k: &[f64]| eval(k, true)))
        .with_infinity_limit(Box::new(move |k: &[f64]| eval(k, false)))
}

/// `(∇u, u)` symbol for a d-component potential.
fn gradient_vector_symbol(d: usize) -> SymbolMap {
    let shape = TensorShape::new(vec![(d, d), (d, 1)]).unwrap();
    let eval = move |k: &[f64], with_potential: bool| {
        let mut s = DMatrix::<Complex64>::zeros(d * d + d, d);
        for beta in 0..d {
            for j in 0..d {
                s[(j * d + beta, beta)] = ci(k[j]);
            }
            if with_potential {
                s[(d * d + beta, beta)] = Complex64::ONE;
            }
        }
        s
    };
    SymbolMap::new(shape, d, d, false, Box::new(move |k: &[f64]| eval(k, true)))
        .with_infinity_limit(Box::new(move |k: &[f64]| eval(k, false)))
}

/// `(∇v, v, ∇φ, φ)` symbol shared by the thermo-coupled forms: a d-component
/// potential paired with a scalar one.
fn thermo_symbol(d: usize) -> SymbolMap {
    let shape = TensorShape::new(vec![(d, d), (d, 1), (d, 1), (1, 1)]).unwrap();
    let dim = d * d + 2 * d + 1;
    let eval = move |k: &[f64], with_potential: bool| {
        let mut s = DMatrix::<Complex64>::zeros(dim, d + 1);
        for beta in 0..d {
            for j in 0..d {
                s[(j * d + beta, beta)] = ci(k[j]);
            }
            if with_potential {
                s[(d * d + beta, beta)] = Complex64::ONE;
            }
        }
        for j in 0..d {
            s[(d * d + d + j, d)] = ci(k[j]);
        }
        if with_potential {
            s[(dim - 1, d)] = Complex64::ONE;
        }
        s
    };
    SymbolMap::new(
        shape,
        d,
        d + 1,
        false,
        Box::new(move |k: &[f64]| eval(k, true)),
    )
    .with_infinity_limit(Box::new(move |k: &[f64]| eval(k, false)))
}

/// Kirchhoff symbol: S(k) = (−k⊗k, i)ᵀ on `(∇∇v, i v)`.
fn kirchhoff_symbol() -> SymbolMap {
    let shape = TensorShape::new(vec![(2, 2), (1, 1)]).unwrap();
    let eval = move |k: &[f64], with_potential: bool| {
        let mut col = Vec::with_capacity(5);
        for i in 0..2 {
            for j in 0..2 {
                col.push(c(-k[i] * k[j], 0.0));
            }
        }
        col.push(if with_potential {
            ci(1.0)
        } else {
            Complex64::ZERO
        });
        DMatrix::from_column_slice(5, 1, &col)
    };
    SymbolMap::new(shape, 2, 1, false, Box::new(move |k: &[f64]| eval(k, true)))
        .with_infinity_limit(Box::new(move |k: &[f64]| eval(k, false)))
}

/// Mindlin symbol on the 8-component E-column, potentials (ψx, ψy, w).
/// The common factor ω of the E-components drops out of the range.
fn mindlin_symbol() -> SymbolMap {
    let shape = TensorShape::new(vec![(5, 1), (3, 1)]).unwrap();
    let eval = move |k: &[f64], with_potential: bool| {
        let (kx, ky) = (k[0], k[1]);
        let mut s = DMatrix::<Complex64>::zeros(8, 3);
        // bending rows: ψ_{x,x}, ψ_{y,y}, ψ_{x,y} + ψ_{y,x}
        s[(0, 0)] = c(kx, 0.0);
        s[(1, 1)] = c(ky, 0.0);
        s[(2, 0)] = c(ky, 0.0);
        s[(2, 1)] = c(kx, 0.0);
        // shear rows: ψ − ∇w
        s[(3, 2)] = c(-kx, 0.0);
        s[(4, 2)] = c(-ky, 0.0);
        if with_potential {
            s[(3, 0)] = ci(-1.0);
            s[(4, 1)] = ci(-1.0);
            // zeroth-order rows: ψx, ψy, w
            s[(5, 0)] = c(-1.0, 0.0);
            s[(6, 1)] = c(-1.0, 0.0);
            s[(7, 2)] = c(-1.0, 0.0);
        }
        s
    };
    SymbolMap::new(shape, 2, 3, false, Box::new(move |k: &[f64]| eval(k, true)))
        .with_infinity_limit(Box::new(move |k: &[f64]| eval(k, false)))
}

// ---------------------------------------------------------------------------
// PhysicsPreset
// ---------------------------------------------------------------------------

/// A canonical-form equation: tensor shape, symbol map and coefficient builder.
pub struct PhysicsPreset {
    name: PresetName,
    d: usize,
    shape: TensorShape,
    symbol: SymbolMap,
    moduli_keys: &'static [&'static str],
}

/// Construct a preset for a supported `(name, d)` pair.
pub fn build_preset(name: PresetName, d: usize) -> Result<PhysicsPreset> {
    use PresetName::*;
    let ok_dim = match name {
        Maxwell => d == 3,
        KirchhoffPlate | MindlinPlate => d == 2,
        _ => d == 2 || d == 3,
    };
    if !ok_dim {
        return Err(Error::InvalidArgument(format!(
            "preset {name} does not support dimension {d}"
        )));
    }
    let symbol = match name {
        Conductivity => gradient_symbol(d),
        Acoustics | SchrodingerFreq | DirichletLaplacian => gradient_potential_symbol(d),
        Maxwell => maxwell_symbol(),
        Elastodynamics => gradient_vector_symbol(d),
        Thermoacoustics | Thermoelasticity => thermo_symbol(d),
        KirchhoffPlate => kirchhoff_symbol(),
        MindlinPlate => mindlin_symbol(),
    };
    let moduli_keys: &'static [&'static str] = match name {
        Conductivity => &["sigma"],
        Acoustics => &["rho", "kappa", "omega"],
        Maxwell => &["mu", "epsilon", "omega"],
        Elastodynamics => &["lambda", "mu", "rho", "omega"],
        SchrodingerFreq => &["a", "energy", "v"],
        Thermoacoustics => &[
            "mu",
            "mu_b",
            "thermal_k",
            "rho0",
            "t0",
            "cp",
            "alpha0",
            "beta_t",
            "omega",
        ],
        Thermoelasticity => &[
            "lambda",
            "mu",
            "rho",
            "beta",
            "kappa_theta",
            "c",
            "t0",
            "omega",
        ],
        KirchhoffPlate => &["young", "nu", "h", "rho", "omega"],
        MindlinPlate => &["young", "nu", "shear_g", "shear_k", "h", "rho", "omega"],
        DirichletLaplacian => &["z"],
    };
    let shape = symbol.shape().clone();
    Ok(PhysicsPreset {
        name,
        d,
        shape,
        symbol,
        moduli_keys,
    })
}

impl PhysicsPreset {
    pub fn name(&self) -> PresetName {
        self.name
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn shape(&self) -> &TensorShape {
        &self.shape
    }

    pub fn symbol(&self) -> &SymbolMap {
        &self.symbol
    }

    pub fn into_symbol(self) -> SymbolMap {
        self.symbol
    }

    pub fn moduli_keys(&self) -> &'static [&'static str] {
        self.moduli_keys
    }

    fn get(&self, m: &Moduli, key: &str) -> Result<Complex64> {
        m.get(key).copied().ok_or_else(|| {
            Error::InvalidArgument(format!("preset {} needs modulus '{key}'", self.name))
        })
    }

    /// Coefficient matrix L of one phase from named moduli.
    pub fn phase_matrix(&self, m: &Moduli) -> Result<DMatrix<Complex64>> {
        for key in m.keys() {
            if !self.moduli_keys.contains(&key.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "preset {} does not take modulus '{key}'",
                    self.name
                )));
            }
        }
        let d = self.d;
        let dim = self.shape.dim();
        let mut l = DMatrix::<Complex64>::zeros(dim, dim);
        match self.name {
            PresetName::Conductivity => {
                let sigma = self.get(m, "sigma")?;
                for i in 0..d {
                    l[(i, i)] = sigma;
                }
            }
            PresetName::Acoustics => {
                let rho = self.get(m, "rho")?;
                let kappa = self.get(m, "kappa")?;
                let omega = self.get(m, "omega")?;
                let inv = -(omega * rho).finv();
                for i in 0..d {
                    l[(i, i)] = inv;
                }
                l[(d, d)] = omega / kappa;
            }
            PresetName::Maxwell => {
                let mu = self.get(m, "mu")?;
                let eps = self.get(m, "epsilon")?;
                let omega = self.get(m, "omega")?;
                let inv = -(omega * mu).finv();
                for i in 0..3 {
                    l[(i, i)] = inv;
                    l[(3 + i, 3 + i)] = omega * eps;
                }
            }
            PresetName::Elastodynamics => {
                let lam = self.get(m, "lambda")?;
                let mu = self.get(m, "mu")?;
                let rho = self.get(m, "rho")?;
                let omega = self.get(m, "omega")?;
                let cmat = iso_fourth_order(d, lam, mu);
                let scale = -omega.finv();
                l.view_mut((0, 0), (d * d, d * d))
                    .copy_from(&cmat.map(|v| v * scale));
                for i in 0..d {
                    l[(d * d + i, d * d + i)] = omega * rho;
                }
            }
            PresetName::SchrodingerFreq => {
                let a = self.get(m, "a")?;
                let energy = self.get(m, "energy")?;
                let v = self.get(m, "v")?;
                for i in 0..d {
                    l[(i, i)] = -a;
                }
                l[(d, d)] = energy - v;
            }
            PresetName::Thermoacoustics => {
                let mu = self.get(m, "mu")?;
                let mu_b = self.get(m, "mu_b")?;
                let k_th = self.get(m, "thermal_k")?;
                let rho0 = self.get(m, "rho0")?;
                let t0 = self.get(m, "t0")?;
                let cp = self.get(m, "cp")?;
                let alpha0 = self.get(m, "alpha0")?;
                let beta_t = self.get(m, "beta_t")?;
                let omega = self.get(m, "omega")?;
                let n = d * d;
                // i 𝒟 − (I⊗I)/(ω β_T)
                let visc = iso_fourth_order(d, mu_b - mu * c(2.0 / 3.0, 0.0), mu);
                let trace_proj = iso_fourth_order(d, Complex64::ONE, Complex64::ZERO);
                let l11 =
                    visc.map(|v| v * ci(1.0)) - trace_proj.map(|v| v * (omega * beta_t).finv());
                l.view_mut((0, 0), (n, n)).copy_from(&l11);
                let coupling = ci(1.0) * alpha0 * t0 / beta_t;
                let vid = vec_identity(d);
                l.view_mut((0, dim - 1), (n, 1))
                    .copy_from(&vid.map(|v| v * coupling));
                l.view_mut((dim - 1, 0), (1, n))
                    .copy_from(&vid.transpose().map(|v| v * (-coupling)));
                for i in 0..d {
                    l[(n + i, n + i)] = omega * rho0;
                    l[(n + d + i, n + d + i)] = ci(1.0) * k_th * t0;
                }
                // adiabatic compressibility β₀ = β_T − α₀² T₀ / (ρ₀ C_p)
                let beta0 = beta_t - alpha0 * alpha0 * t0 / (rho0 * cp);
                l[(dim - 1, dim - 1)] = omega * rho0 * cp * t0 * beta0 / beta_t;
            }
            PresetName::Thermoelasticity => {
                let lam = self.get(m, "lambda")?;
                let mu = self.get(m, "mu")?;
                let rho = self.get(m, "rho")?;
                let beta = self.get(m, "beta")?;
                let kappa_theta = self.get(m, "kappa_theta")?;
                let heat_c = self.get(m, "c")?;
                let t0 = self.get(m, "t0")?;
                let omega = self.get(m, "omega")?;
                let n = d * d;
                let cmat = iso_fourth_order(d, lam, mu);
                let scale = -omega.finv();
                l.view_mut((0, 0), (n, n))
                    .copy_from(&cmat.map(|v| v * scale));
                let coupling = ci(1.0) * beta * t0;
                let vid = vec_identity(d);
                l.view_mut((0, dim - 1), (n, 1))
                    .copy_from(&vid.map(|v| v * coupling));
                l.view_mut((dim - 1, 0), (1, n))
                    .copy_from(&vid.transpose().map(|v| v * (-coupling)));
                for i in 0..d {
                    l[(n + i, n + i)] = omega * rho;
                    l[(n + d + i, n + d + i)] = ci(1.0) * t0 * kappa_theta;
                }
                l[(dim - 1, dim - 1)] = omega * t0 * rho * heat_c;
            }
            PresetName::KirchhoffPlate => {
                let young = self.get(m, "young")?;
                let nu = self.get(m, "nu")?;
                let h = self.get(m, "h")?;
                let rho = self.get(m, "rho")?;
                let omega = self.get(m, "omega")?;
                let flex = young * h * h * h / ((Complex64::ONE - nu * nu) * c(12.0, 0.0));
                let rigidity =
                    iso_fourth_order(2, flex * nu, flex * (Complex64::ONE - nu) * c(0.5, 0.0));
                let scale = -omega.finv();
                l.view_mut((0, 0), (4, 4))
                    .copy_from(&rigidity.map(|v| v * scale));
                l[(4, 4)] = h * omega * rho;
            }
            PresetName::MindlinPlate => {
                let young = self.get(m, "young")?;
                let nu = self.get(m, "nu")?;
                let g = self.get(m, "shear_g")?;
                let kc = self.get(m, "shear_k")?;
                let h = self.get(m, "h")?;
                let rho = self.get(m, "rho")?;
                let omega = self.get(m, "omega")?;
                let flex = young * h * h * h / ((Complex64::ONE - nu * nu) * c(12.0, 0.0));
                let mut dmat = DMatrix::<Complex64>::zeros(5, 5);
                dmat[(0, 0)] = flex;
                dmat[(1, 1)] = flex;
                dmat[(0, 1)] = nu * flex;
                dmat[(1, 0)] = nu * flex;
                dmat[(2, 2)] = (Complex64::ONE - nu) * flex * c(0.5, 0.0);
                dmat[(3, 3)] = kc * g * h;
                dmat[(4, 4)] = kc * g * h;
                let scale = -omega.finv();
                l.view_mut((0, 0), (5, 5))
                    .copy_from(&dmat.map(|v| v * scale));
                let rot = omega * rho * h * h * h / c(12.0, 0.0);
                l[(5, 5)] = rot;
                l[(6, 6)] = rot;
                l[(7, 7)] = omega * rho * h;
            }
            PresetName::DirichletLaplacian => {
                let z = self.get(m, "z")?;
                for i in 0..d {
                    l[(i, i)] = Complex64::ONE;
                }
                l[(d, d)] = -z;
            }
        }
        if !is_finite_matrix(&l) {
            return Err(Error::InvalidArgument(format!(
                "preset {} produced non-finite coefficients",
                self.name
            )));
        }
        Ok(l)
    }
}

impl std::fmt::Debug for PhysicsPreset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PhysicsPreset")
            .field("name", &self.name)
            .field("d", &self.d)
            .field("dim", &self.shape.dim())
            .finish()
    }
}

/// Hermitian defect of passivity: smallest eigenvalue of the Hermitian part
/// of `L/i`. Non-negative for passive moduli with `Im ω ≥ 0`.
pub fn passivity_defect(l: &DMatrix<Complex64>) -> f64 {
    let li = l.map(|v| v * ci(-1.0));
    crate::linalg::lambda_min_hermitian(&hermitian_part(&li))
}

// ---------------------------------------------------------------------------
// Phase layouts
// ---------------------------------------------------------------------------

/// Assignment of each grid point to one of `m` phases. By construction the
/// indicator functions partition the cell.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseLayout {
    grid: Grid,
    num_phases: usize,
    phase_of: Vec<u16>,
}

impl PhaseLayout {
    pub fn single_phase(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            num_phases: 1,
            phase_of: vec![0; grid.len()],
        }
    }

    /// Two-phase laminate normal to `axis`; `fraction` is the volume fraction
    /// of phase 0 (layers with normalized coordinate below `fraction`).
    pub fn laminate(grid: &Grid, axis: usize, fraction: f64) -> Result<Self> {
        if axis >= grid.dim() {
            return Err(Error::InvalidArgument(format!(
                "laminate axis {axis} out of range"
            )));
        }
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::InvalidArgument(
                "laminate fraction must be in [0, 1]".into(),
            ));
        }
        let n = grid.sizes()[axis];
        let phase_of = (0..grid.len())
            .map(|x| {
                let i = grid.coords(x)[axis];
                if ((i as f64) + 0.5) / n as f64 <= fraction {
                    0
                } else {
                    1
                }
            })
            .collect();
        Ok(Self {
            grid: grid.clone(),
            num_phases: 2,
            phase_of,
        })
    }

    /// Two-phase checkerboard with half-cell tiles along each axis.
    pub fn checkerboard(grid: &Grid) -> Self {
        let phase_of = (0..grid.len())
            .map(|x| {
                let coords = grid.coords(x);
                let parity: usize = coords
                    .iter()
                    .zip(grid.sizes())
                    .map(|(&i, &n)| 2 * i / n)
                    .sum();
                (parity % 2) as u16
            })
            .collect();
        Self {
            grid: grid.clone(),
            num_phases: 2,
            phase_of,
        }
    }

    /// Two-phase disk inclusion (phase 1 inside). Center in fractional cell
    /// coordinates, radius in physical units.
    pub fn disk(grid: &Grid, center: &[f64], radius: f64) -> Result<Self> {
        if center.len() != grid.dim() {
            return Err(Error::InvalidArgument(
                "disk center dimension mismatch".into(),
            ));
        }
        let phase_of = (0..grid.len())
            .map(|x| {
                let coords = grid.coords(x);
                let dist2: f64 = coords
                    .iter()
                    .zip(grid.sizes().iter().zip(grid.cell().iter()))
                    .zip(center.iter())
                    .map(|((&i, (&n, &a)), &cj)| {
                        let t = ((i as f64 + 0.5) / n as f64 - cj) * a;
                        t * t
                    })
                    .sum();
                if dist2.sqrt() <= radius {
                    1
                } else {
                    0
                }
            })
            .collect();
        Ok(Self {
            grid: grid.clone(),
            num_phases: 2,
            phase_of,
        })
    }

    /// Layout from explicit per-point phase indices in `0..num_phases`.
    pub fn from_phase_indices(grid: &Grid, phase_of: Vec<u16>, num_phases: usize) -> Result<Self> {
        if phase_of.len() != grid.len() {
            return Err(Error::DimensionMismatch(
                "phase index list length != grid size".into(),
            ));
        }
        if num_phases == 0 || phase_of.iter().any(|&p| p as usize >= num_phases) {
            return Err(Error::InvalidArgument("phase index out of range".into()));
        }
        Ok(Self {
            grid: grid.clone(),
            num_phases,
            phase_of,
        })
    }

    /// Layout from 0/1 indicator fields; they must partition the cell.
    pub fn from_indicators(grid: &Grid, indicators: &[Vec<f64>]) -> Result<Self> {
        let m = indicators.len();
        if m == 0 {
            return Err(Error::InvalidArgument("need at least one indicator".into()));
        }
        let mut phase_of = vec![0u16; grid.len()];
        for x in 0..grid.len() {
            let mut sum = 0.0;
            let mut phase = None;
            for (i, chi) in indicators.iter().enumerate() {
                if chi.len() != grid.len() {
                    return Err(Error::DimensionMismatch(
                        "indicator length != grid size".into(),
                    ));
                }
                let v = chi[x];
                if v != 0.0 && v != 1.0 {
                    return Err(Error::InvalidArgument(format!(
                        "indicator {i} is not 0/1-valued at point {x}"
                    )));
                }
                sum += v;
                if v == 1.0 {
                    phase = Some(i as u16);
                }
            }
            if sum != 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "indicators do not partition the cell at point {x} (sum {sum})"
                )));
            }
            phase_of[x] = phase.unwrap();
        }
        Ok(Self {
            grid: grid.clone(),
            num_phases: m,
            phase_of,
        })
    }

    /// Voxel import: one CSV line per grid point, `i1,i2[,i3],phase`.
    pub fn from_voxel_csv(grid: &Grid, text: &str) -> Result<Self> {
        let d = grid.dim();
        let mut phase_of = vec![u16::MAX; grid.len()];
        let mut max_phase = 0u16;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(|s| s.trim()).collect();
            if parts.len() != d + 1 {
                return Err(Error::Format(format!(
                    "voxel line {}: expected {} fields, got {}",
                    lineno + 1,
                    d + 1,
                    parts.len()
                )));
            }
            let mut coords = Vec::with_capacity(d);
            for (axis, p) in parts[..d].iter().enumerate() {
                let i: usize = p
                    .parse()
                    .map_err(|_| Error::Format(format!("voxel line {}: bad index", lineno + 1)))?;
                if i >= grid.sizes()[axis] {
                    return Err(Error::Format(format!(
                        "voxel line {}: index {i} out of range on axis {axis}",
                        lineno + 1
                    )));
                }
                coords.push(i);
            }
            let phase: u16 = parts[d]
                .parse()
                .map_err(|_| Error::Format(format!("voxel line {}: bad phase id", lineno + 1)))?;
            max_phase = max_phase.max(phase);
            phase_of[grid.flat_index(&coords)] = phase;
        }
        if phase_of.contains(&u16::MAX) {
            return Err(Error::Format(
                "voxel import does not cover every grid point".into(),
            ));
        }
        Ok(Self {
            grid: grid.clone(),
            num_phases: max_phase as usize + 1,
            phase_of,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn num_phases(&self) -> usize {
        self.num_phases
    }

    pub fn phase_at(&self, x: usize) -> usize {
        self.phase_of[x] as usize
    }

    pub fn volume_fraction(&self, phase: usize) -> f64 {
        let count = self
            .phase_of
            .iter()
            .filter(|&&p| p as usize == phase)
            .count();
        count as f64 / self.grid.len() as f64
    }

    /// Phases that actually occur in the layout, ascending.
    pub fn present_phases(&self) -> Vec<usize> {
        let mut present = vec![false; self.num_phases];
        for &p in &self.phase_of {
            present[p as usize] = true;
        }
        present
            .iter()
            .enumerate()
            .filter_map(|(i, &p)| if p { Some(i) } else { None })
            .collect()
    }

    /// Scalar 0/1 indicator field of one phase.
    pub fn indicator_field(&self, phase: usize) -> Field {
        let shape = TensorShape::vector(1);
        let mut f = Field::zeros(&self.grid, &shape);
        for x in 0..self.grid.len() {
            if self.phase_at(x) == phase {
                f.values_mut()[x] = Complex64::ONE;
            }
        }
        f
    }
}

// ---------------------------------------------------------------------------
// Operator fields
// ---------------------------------------------------------------------------

/// A field of dim×dim matrices: the pointwise coefficient L(x).
#[derive(Clone, Debug)]
pub struct OperatorField {
    grid: Grid,
    shape: TensorShape,
    /// N × dim × dim, row-major per point.
    data: Vec<Complex64>,
    provenance: Option<MultiphaseProvenance>,
}

/// Multiphase origin of an operator field: the layout plus per-phase matrices.
/// Certificates exploit this to reduce grid minima to phase minima.
#[derive(Clone, Debug)]
pub struct MultiphaseProvenance {
    pub layout: PhaseLayout,
    pub phase_matrices: Vec<DMatrix<Complex64>>,
}

impl OperatorField {
    pub fn constant(grid: &Grid, shape: &TensorShape, m: &DMatrix<Complex64>) -> Result<Self> {
        let layout = PhaseLayout::single_phase(grid);
        Self::from_phase_matrices(&layout, std::slice::from_ref(m), shape)
    }

    pub fn identity(grid: &Grid, shape: &TensorShape) -> Self {
        let dim = shape.dim();
        Self::constant(grid, shape, &DMatrix::identity(dim, dim)).expect("identity fits")
    }

    /// Pointwise `L(x) = Σ_i χ_i(x) L_i`.
    pub fn from_phase_matrices(
        layout: &PhaseLayout,
        matrices: &[DMatrix<Complex64>],
        shape: &TensorShape,
    ) -> Result<Self> {
        if matrices.len() != layout.num_phases() {
            return Err(Error::DimensionMismatch(format!(
                "layout has {} phases but {} matrices given",
                layout.num_phases(),
                matrices.len()
            )));
        }
        let dim = shape.dim();
        for m in matrices {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "phase matrix is {}x{}, expected {dim}x{dim}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        let grid = layout.grid().clone();
        let n = grid.len();
        let mut data = vec![Complex64::ZERO; n * dim * dim];
        for x in 0..n {
            let m = &matrices[layout.phase_at(x)];
            let base = x * dim * dim;
            for i in 0..dim {
                for j in 0..dim {
                    data[base + i * dim + j] = m[(i, j)];
                }
            }
        }
        Ok(Self {
            grid,
            shape: shape.clone(),
            data,
            provenance: Some(MultiphaseProvenance {
                layout: layout.clone(),
                phase_matrices: matrices.to_vec(),
            }),
        })
    }

    /// Build from an explicit per-point closure (no multiphase provenance).
    pub fn from_fn(
        grid: &Grid,
        shape: &TensorShape,
        f: impl Fn(usize) -> DMatrix<Complex64>,
    ) -> Result<Self> {
        let dim = shape.dim();
        let n = grid.len();
        let mut data = vec![Complex64::ZERO; n * dim * dim];
        for x in 0..n {
            let m = f(x);
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::DimensionMismatch(
                    "per-point matrix has wrong size".into(),
                ));
            }
            if !is_finite_matrix(&m) {
                return Err(Error::InvalidArgument(format!(
                    "non-finite matrix at point {x}"
                )));
            }
            let base = x * dim * dim;
            for i in 0..dim {
                for j in 0..dim {
                    data[base + i * dim + j] = m[(i, j)];
                }
            }
        }
        Ok(Self {
            grid: grid.clone(),
            shape: shape.clone(),
            data,
            provenance: None,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn shape(&self) -> &TensorShape {
        &self.shape
    }

    pub fn provenance(&self) -> Option<&MultiphaseProvenance> {
        self.provenance.as_ref()
    }

    pub fn matrix_at(&self, x: usize) -> DMatrix<Complex64> {
        let dim = self.shape.dim();
        let base = x * dim * dim;
        DMatrix::from_fn(dim, dim, |i, j| self.data[base + i * dim + j])
    }

    /// Matrices that occur in the field: per-phase matrices for multiphase
    /// provenance (phases actually present), otherwise the deduplicated set
    /// of per-point matrices.
    pub fn distinct_matrices(&self) -> Vec<DMatrix<Complex64>> {
        if let Some(p) = &self.provenance {
            return p
                .layout
                .present_phases()
                .into_iter()
                .map(|i| p.phase_matrices[i].clone())
                .collect();
        }
        let mut out: Vec<DMatrix<Complex64>> = Vec::new();
        for x in 0..self.grid.len() {
            let m = self.matrix_at(x);
            if !out.contains(&m) {
                out.push(m);
            }
        }
        out
    }

    /// Pointwise matrix–vector product `(L P)(x) = L(x) P(x)`.
    pub fn apply(&self, f: &Field) -> Result<Field> {
        if f.grid() != &self.grid || f.shape() != &self.shape {
            return Err(Error::DimensionMismatch(
                "operator/field layout mismatch".into(),
            ));
        }
        let dim = self.shape.dim();
        let mut out = Field::zeros(&self.grid, &self.shape);
        out.values_mut()
            .par_chunks_mut(dim)
            .zip(f.values().par_chunks(dim))
            .zip(self.data.par_chunks(dim * dim))
            .for_each(|((dst, src), mat)| {
                for i in 0..dim {
                    let mut acc = Complex64::ZERO;
                    for j in 0..dim {
                        acc += mat[i * dim + j] * src[j];
                    }
                    dst[i] = acc;
                }
            });
        Ok(out)
    }

    pub fn scale(&self, a: Complex64) -> OperatorField {
        let mut out = self.clone();
        for v in out.data.iter_mut() {
            *v *= a;
        }
        if let Some(p) = out.provenance.as_mut() {
            for m in p.phase_matrices.iter_mut() {
                *m = m.map(|v| v * a);
            }
        }
        out
    }

    fn zip_with(
        &self,
        other: &OperatorField,
        f: impl Fn(&DMatrix<Complex64>, &DMatrix<Complex64>) -> DMatrix<Complex64>,
    ) -> Result<OperatorField> {
        if self.grid != other.grid || self.shape != other.shape {
            return Err(Error::DimensionMismatch(
                "operator field layout mismatch".into(),
            ));
        }
        // Preserve multiphase provenance when both sides share the layout.
        if let (Some(a), Some(b)) = (&self.provenance, &other.provenance) {
            if a.layout == b.layout {
                let mats: Vec<_> = a
                    .phase_matrices
                    .iter()
                    .zip(b.phase_matrices.iter())
                    .map(|(x, y)| f(x, y))
                    .collect();
                return OperatorField::from_phase_matrices(&a.layout, &mats, &self.shape);
            }
        }
        let mut out = OperatorField::from_fn(&self.grid, &self.shape, |x| {
            f(&self.matrix_at(x), &other.matrix_at(x))
        })?;
        out.provenance = None;
        Ok(out)
    }

    pub fn add(&self, other: &OperatorField) -> Result<OperatorField> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &OperatorField) -> Result<OperatorField> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise matrix product `(A B)(x) = A(x) B(x)`.
    pub fn matmul(&self, other: &OperatorField) -> Result<OperatorField> {
        self.zip_with(other, |a, b| a * b)
    }

    /// Pointwise inverse; errors at the first singular point.
    pub fn pointwise_inverse(&self) -> Result<OperatorField> {
        let map_one = |x: usize, m: &DMatrix<Complex64>| -> Result<DMatrix<Complex64>> {
            try_inverse(m, 1e-12).ok_or_else(|| {
                let (smin, _) = crate::linalg::singular_extremes(m);
                Error::PointwiseSingular {
                    index: x,
                    sigma_min: smin,
                }
            })
        };
        if let Some(p) = &self.provenance {
            let present = p.layout.present_phases();
            let mut mats = Vec::with_capacity(p.phase_matrices.len());
            for (i, m) in p.phase_matrices.iter().enumerate() {
                // only phases present in the layout must be invertible
                if present.contains(&i) {
                    mats.push(map_one(i, m)?);
                } else {
                    mats.push(DMatrix::zeros(m.nrows(), m.ncols()));
                }
            }
            return OperatorField::from_phase_matrices(&p.layout, &mats, &self.shape);
        }
        let dim = self.shape.dim();
        let n = self.grid.len();
        let mut data = vec![Complex64::ZERO; n * dim * dim];
        for x in 0..n {
            let inv = map_one(x, &self.matrix_at(x))?;
            let base = x * dim * dim;
            for i in 0..dim {
                for j in 0..dim {
                    data[base + i * dim + j] = inv[(i, j)];
                }
            }
        }
        Ok(Self {
            grid: self.grid.clone(),
            shape: self.shape.clone(),
            data,
            provenance: None,
        })
    }

    /// Assemble the pointwise 2×2 block operator
    /// `[[B11, B12], [B21, B22]]` on the doubled tensor space. Multiphase
    /// provenance survives when all four blocks share one layout.
    pub fn block2x2(
        b11: &OperatorField,
        b12: &OperatorField,
        b21: &OperatorField,
        b22: &OperatorField,
    ) -> Result<OperatorField> {
        for b in [b12, b21, b22] {
            if b.grid != b11.grid || b.shape != b11.shape {
                return Err(Error::DimensionMismatch("block layouts differ".into()));
            }
        }
        let dim = b11.shape.dim();
        let doubled = b11.shape.repeated(2);
        let compose = |m11: &DMatrix<Complex64>,
                       m12: &DMatrix<Complex64>,
                       m21: &DMatrix<Complex64>,
                       m22: &DMatrix<Complex64>| {
            let mut m = DMatrix::<Complex64>::zeros(2 * dim, 2 * dim);
            m.view_mut((0, 0), (dim, dim)).copy_from(m11);
            m.view_mut((0, dim), (dim, dim)).copy_from(m12);
            m.view_mut((dim, 0), (dim, dim)).copy_from(m21);
            m.view_mut((dim, dim), (dim, dim)).copy_from(m22);
            m
        };
        let layouts_match = [b11, b12, b21, b22].iter().all(|b| {
            b.provenance
                .as_ref()
                .map(|p| Some(&p.layout) == b11.provenance.as_ref().map(|q| &q.layout))
                .unwrap_or(false)
        });
        if layouts_match {
            let p11 = b11.provenance.as_ref().unwrap();
            let mats: Vec<DMatrix<Complex64>> = (0..p11.phase_matrices.len())
                .map(|i| {
                    compose(
                        &p11.phase_matrices[i],
                        &b12.provenance.as_ref().unwrap().phase_matrices[i],
                        &b21.provenance.as_ref().unwrap().phase_matrices[i],
                        &b22.provenance.as_ref().unwrap().phase_matrices[i],
                    )
                })
                .collect();
            return OperatorField::from_phase_matrices(&p11.layout, &mats, &doubled);
        }
        OperatorField::from_fn(&b11.grid, &doubled, |x| {
            compose(
                &b11.matrix_at(x),
                &b12.matrix_at(x),
                &b21.matrix_at(x),
                &b22.matrix_at(x),
            )
        })
    }

    /// Split into Hermitian and anti-Hermitian parts, `L = L_A + L_B`.
    pub fn hermitian_split(&self) -> (OperatorField, OperatorField) {
        let anti = |m: &DMatrix<Complex64>| m - hermitian_part(m);
        if let Some(p) = &self.provenance {
            let a: Vec<_> = p.phase_matrices.iter().map(hermitian_part).collect();
            let b: Vec<_> = p.phase_matrices.iter().map(anti).collect();
            return (
                OperatorField::from_phase_matrices(&p.layout, &a, &self.shape).unwrap(),
                OperatorField::from_phase_matrices(&p.layout, &b, &self.shape).unwrap(),
            );
        }
        let a = OperatorField::from_fn(&self.grid, &self.shape, |x| {
            hermitian_part(&self.matrix_at(x))
        })
        .unwrap();
        let b =
            OperatorField::from_fn(&self.grid, &self.shape, |x| anti(&self.matrix_at(x))).unwrap();
        (a, b)
    }
}

/// Assemble the pointwise coefficient of a multiphase medium,
/// `L(x) = Σ_i χ_i(x) L_i`, from per-phase moduli.
pub fn assemble_multiphase_l(
    preset: &PhysicsPreset,
    layout: &PhaseLayout,
    phase_moduli: &[Moduli],
) -> Result<OperatorField> {
    if phase_moduli.len() != layout.num_phases() {
        return Err(Error::DimensionMismatch(format!(
            "layout has {} phases but {} moduli sets given",
            layout.num_phases(),
            phase_moduli.len()
        )));
    }
    let matrices: Vec<DMatrix<Complex64>> = phase_moduli
        .iter()
        .map(|m| preset.phase_matrix(m))
        .collect::<Result<_>>()?;
    OperatorField::from_phase_matrices(layout, &matrices, preset.shape())
}

/// Numerical check of the key orthogonality identity for a preset: draws
/// random E-space and J-space fields through the projections and returns the
/// largest normalized pairing `|(J, E)| / (‖P‖ ‖Q‖)`.
///
/// On the periodic cell the divergence-form boundary terms of the key
/// identities vanish, so this is the discrete form of those identities.
pub fn check_key_identity(
    preset: &PhysicsPreset,
    grid: &Grid,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let pi = build_projection(preset.symbol(), grid)?;
    pi.verify_subspace_orthogonality(trials, seed)
}
