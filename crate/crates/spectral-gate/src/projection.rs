//! Spectral projections onto the differential-constraint subspace.
//!
//! Each physical form constrains the admissible fields E to a subspace that
//! is block-diagonal in Fourier space: the coefficient at wavevector k must
//! lie in `E_k = range S(k)` for a per-wavevector symbol matrix S. The
//! orthogonal projection Γ₁ applies the per-k projector between a forward and
//! an inverse transform; Γ₂ = I − Γ₁ projects onto the complementary
//! (divergence-type) subspace.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{inner_product, norm, Direction, Field, Grid, TensorShape};
use crate::fourier::transform;
use crate::linalg::{complete_unitary, is_finite_matrix, orthonormal_range, spectral_norm};

/// Relative singular-value cutoff for the rank of S(k). Symbols such as the
/// Mindlin one lose rank on submanifolds of k; a relative tolerance keeps the
/// projectors stable there.
pub const RANK_TOL: f64 = 1e-10;

type SymbolFn = dyn Fn(&[f64]) -> DMatrix<Complex64> + Send + Sync;

/// Per-wavevector symbol matrix whose range defines the constraint subspace.
pub struct SymbolMap {
    shape: TensorShape,
    spatial_dim: usize,
    potential_dim: usize,
    scale_invariant: bool,
    eval: Box<SymbolFn>,
    /// Leading-order symbol for the |k| → ∞ limit, used by the radial
    /// sampling of the Q*-checker for symbols that are not scale invariant.
    eval_infinity: Option<Box<SymbolFn>>,
}

impl SymbolMap {
    pub fn new(
        shape: TensorShape,
        spatial_dim: usize,
        potential_dim: usize,
        scale_invariant: bool,
        eval: Box<SymbolFn>,
    ) -> Self {
        Self {
            shape,
            spatial_dim,
            potential_dim,
            scale_invariant,
            eval,
            eval_infinity: None,
        }
    }

    pub fn with_infinity_limit(mut self, eval: Box<SymbolFn>) -> Self {
        self.eval_infinity = Some(eval);
        self
    }

    pub fn shape(&self) -> &TensorShape {
        &self.shape
    }

    /// Dimension of the wavevector argument (2 or 3).
    pub fn spatial_dim(&self) -> usize {
        self.spatial_dim
    }

    pub fn potential_dim(&self) -> usize {
        self.potential_dim
    }

    pub fn scale_invariant(&self) -> bool {
        self.scale_invariant
    }

    /// Evaluate S(k), validating dimensions and finiteness.
    pub fn eval(&self, k: &[f64]) -> Result<DMatrix<Complex64>> {
        let s = (self.eval)(k);
        if s.nrows() != self.shape.dim() || s.ncols() != self.potential_dim {
            return Err(Error::Symbol(format!(
                "symbol returned {}x{}, expected {}x{}",
                s.nrows(),
                s.ncols(),
                self.shape.dim(),
                self.potential_dim
            )));
        }
        if !is_finite_matrix(&s) {
            return Err(Error::Symbol(format!(
                "non-finite symbol entries at k = {k:?}"
            )));
        }
        Ok(s)
    }

    /// The |k| → ∞ limit symbol, if one was supplied.
    pub fn eval_infinity(&self, k: &[f64]) -> Option<DMatrix<Complex64>> {
        self.eval_infinity.as_ref().map(|f| f(k))
    }
}

impl std::fmt::Debug for SymbolMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SymbolMap")
            .field("dim", &self.shape.dim())
            .field("potential_dim", &self.potential_dim)
            .field("scale_invariant", &self.scale_invariant)
            .finish()
    }
}

/// Cached per-wavevector projectors onto `E_k` plus a full unitary
/// `[E-basis | J-basis]` per k.
pub struct ProjectionOperator {
    grid: Grid,
    shape: TensorShape,
    projectors: Vec<DMatrix<Complex64>>,
    unitaries: Vec<DMatrix<Complex64>>,
    ranks: Vec<usize>,
    e_dim: usize,
}

/// Build the projection operator for a symbol on a grid.
///
/// For every lattice wavevector the projector onto `range S(k)` is obtained
/// from a rank-revealing orthogonalization of the symbol columns.
pub fn build_projection(symbol: &SymbolMap, grid: &Grid) -> Result<ProjectionOperator> {
    if grid.dim() != symbol.spatial_dim() {
        return Err(Error::DimensionMismatch(format!(
            "symbol expects {}-dimensional wavevectors, grid is {}-dimensional",
            symbol.spatial_dim(),
            grid.dim()
        )));
    }
    let n = grid.len();
    let per_k: Vec<(DMatrix<Complex64>, DMatrix<Complex64>, usize)> = (0..n)
        .into_par_iter()
        .map(|x| {
            let k = grid.wavevector(x);
            let s = symbol.eval(&k)?;
            let basis = orthonormal_range(&s, RANK_TOL);
            let rank = basis.ncols();
            let pi = &basis * basis.adjoint();
            let unitary = complete_unitary(&basis);
            Ok((pi, unitary, rank))
        })
        .collect::<Result<_>>()?;

    let mut projectors = Vec::with_capacity(n);
    let mut unitaries = Vec::with_capacity(n);
    let mut ranks = Vec::with_capacity(n);
    for (pi, u, r) in per_k {
        projectors.push(pi);
        unitaries.push(u);
        ranks.push(r);
    }
    let e_dim = ranks.iter().sum();
    Ok(ProjectionOperator {
        grid: grid.clone(),
        shape: symbol.shape().clone(),
        projectors,
        unitaries,
        ranks,
        e_dim,
    })
}

impl ProjectionOperator {
    /// Rebuild from stored per-k unitaries and ranks (projector cache).
    pub fn from_unitaries(
        grid: Grid,
        shape: TensorShape,
        unitaries: Vec<DMatrix<Complex64>>,
        ranks: Vec<usize>,
    ) -> Result<Self> {
        let dim = shape.dim();
        if unitaries.len() != grid.len() || ranks.len() != grid.len() {
            return Err(Error::DimensionMismatch(
                "one unitary and rank per lattice point".into(),
            ));
        }
        for (u, &r) in unitaries.iter().zip(ranks.iter()) {
            if u.nrows() != dim || u.ncols() != dim || r > dim {
                return Err(Error::DimensionMismatch(
                    "stored unitary has wrong size".into(),
                ));
            }
        }
        let projectors: Vec<DMatrix<Complex64>> = unitaries
            .iter()
            .zip(ranks.iter())
            .map(|(u, &r)| {
                let b = u.columns(0, r).into_owned();
                &b * b.adjoint()
            })
            .collect();
        let e_dim = ranks.iter().sum();
        Ok(Self {
            grid,
            shape,
            projectors,
            unitaries,
            ranks,
            e_dim,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn shape(&self) -> &TensorShape {
        &self.shape
    }

    /// Projector matrix Π(k) at flat lattice index `x`.
    pub fn projector(&self, x: usize) -> &DMatrix<Complex64> {
        &self.projectors[x]
    }

    /// Full unitary `[E-basis | J-basis]` at flat lattice index `x`.
    pub fn unitary(&self, x: usize) -> &DMatrix<Complex64> {
        &self.unitaries[x]
    }

    /// Rank of `E_k` at flat lattice index `x`.
    pub fn rank(&self, x: usize) -> usize {
        self.ranks[x]
    }

    /// Total dimension of the discrete E-subspace, `Σ_k rank S(k)`.
    pub fn e_dim(&self) -> usize {
        self.e_dim
    }

    pub fn check_field(&self, f: &Field) -> Result<()> {
        if f.grid() != &self.grid || f.shape() != &self.shape {
            return Err(Error::DimensionMismatch(
                "field does not match projection grid/shape".into(),
            ));
        }
        Ok(())
    }

    fn apply_per_k(&self, f: &Field, complement: bool) -> Result<Field> {
        self.check_field(f)?;
        let dim = self.shape.dim();
        let mut hat = transform(f, Direction::Forward);
        hat.values_mut()
            .par_chunks_mut(dim)
            .zip(self.projectors.par_iter())
            .for_each(|(coeff, pi)| {
                let mut out = vec![Complex64::ZERO; dim];
                for i in 0..dim {
                    let mut acc = Complex64::ZERO;
                    for j in 0..dim {
                        acc += pi[(i, j)] * coeff[j];
                    }
                    out[i] = if complement { coeff[i] - acc } else { acc };
                }
                coeff.copy_from_slice(&out);
            });
        Ok(transform(&hat, Direction::Inverse))
    }

    /// Orthogonal projection onto the E-subspace.
    pub fn apply_gamma1(&self, f: &Field) -> Result<Field> {
        self.apply_per_k(f, false)
    }

    /// Complementary projection Γ₂ = I − Γ₁ onto the J-subspace.
    pub fn apply_gamma2(&self, f: &Field) -> Result<Field> {
        self.apply_per_k(f, true)
    }

    /// Max over random pairs of `|(Γ₂P, Γ₁Q)| / (‖P‖ ‖Q‖)`.
    pub fn verify_subspace_orthogonality(&self, trials: usize, seed: u64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for t in 0..trials {
            let p = Field::random(&self.grid, &self.shape, seed.wrapping_add(2 * t as u64));
            let q = Field::random(&self.grid, &self.shape, seed.wrapping_add(2 * t as u64 + 1));
            let jp = self.apply_gamma2(&p)?;
            let eq = self.apply_gamma1(&q)?;
            let denom = norm(&p) * norm(&q);
            if denom == 0.0 {
                continue;
            }
            let val = inner_product(&jp, &eq)?.norm() / denom;
            worst = worst.max(val);
        }
        Ok(worst)
    }

    /// Exact operator-level defects `(‖Γ₁² − Γ₁‖, ‖Γ₁ − Γ₁†‖)`, computed as
    /// the max over lattice k of the per-block spectral norms.
    pub fn projector_algebra_defects(&self) -> (f64, f64) {
        let mut idem: f64 = 0.0;
        let mut selfadj: f64 = 0.0;
        for pi in &self.projectors {
            idem = idem.max(spectral_norm(&(pi * pi - pi)));
            selfadj = selfadj.max(spectral_norm(&(pi.adjoint() - pi)));
        }
        (idem, selfadj)
    }
}

impl std::fmt::Debug for ProjectionOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProjectionOperator")
            .field("grid", &self.grid)
            .field("dim", &self.shape.dim())
            .field("e_dim", &self.e_dim)
            .finish()
    }
}
