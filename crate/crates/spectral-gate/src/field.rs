//! Discrete periodic fields with values in a tensor space.
//!
//! A [`Field`] samples a tensor-valued function on a regular periodic grid.
//! The inner product is volume-averaged,
//!
//! ```text
//! (P, Q) = (1/N) Σ_x Σ_c P_c(x) · conj(Q_c(x)),
//! ```
//!
//! so norms and the coercivity/boundedness constants derived from them do not
//! depend on grid resolution. The division by N is the discrete analogue of
//! dividing by the cell volume.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the tensor space the field takes values in.
///
/// The value at each grid point is a list of complex matrix blocks, flattened
/// row-major within each block, blocks in declared order. This flattening is
/// part of the on-disk format and is fixed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorShape {
    blocks: Vec<(usize, usize)>,
    dim: usize,
}

impl TensorShape {
    pub fn new(blocks: Vec<(usize, usize)>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidArgument(
                "tensor shape needs at least one block".into(),
            ));
        }
        if blocks.iter().any(|&(r, c)| r == 0 || c == 0) {
            return Err(Error::InvalidArgument(
                "tensor shape blocks must be non-empty".into(),
            ));
        }
        let dim = blocks.iter().map(|&(r, c)| r * c).sum();
        Ok(Self { blocks, dim })
    }

    /// Single column-vector block of length `n`.
    pub fn vector(n: usize) -> Self {
        Self::new(vec![(n, 1)]).expect("n >= 1")
    }

    /// Total flattened complex dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[(usize, usize)] {
        &self.blocks
    }

    /// Flat offset of block `b` in the component vector.
    pub fn block_offset(&self, b: usize) -> usize {
        self.blocks[..b].iter().map(|&(r, c)| r * c).sum()
    }

    /// Shape whose block list is this one repeated `times` times (the
    /// doubled space of the splitting solver uses `times = 2`).
    pub fn repeated(&self, times: usize) -> Self {
        let mut blocks = Vec::with_capacity(self.blocks.len() * times);
        for _ in 0..times {
            blocks.extend_from_slice(&self.blocks);
        }
        Self {
            blocks,
            dim: self.dim * times,
        }
    }
}

/// Regular periodic grid over the unit cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    sizes: Vec<usize>,
    cell: Vec<f64>,
}

impl Grid {
    pub fn new(sizes: &[usize], cell: &[f64]) -> Result<Self> {
        let d = sizes.len();
        if !(d == 2 || d == 3) {
            return Err(Error::InvalidArgument(format!(
                "grid dimension must be 2 or 3, got {d}"
            )));
        }
        if cell.len() != d {
            return Err(Error::InvalidArgument(
                "cell length list must match grid dimension".into(),
            ));
        }
        if sizes.iter().any(|&n| n < 2) {
            return Err(Error::InvalidArgument(
                "each axis needs at least 2 points".into(),
            ));
        }
        if cell.iter().any(|&a| !a.is_finite() || a <= 0.0) {
            return Err(Error::InvalidArgument(
                "cell lengths must be positive".into(),
            ));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            cell: cell.to_vec(),
        })
    }

    /// `d`-dimensional grid with `n` points per axis on the unit cell.
    pub fn cubic(d: usize, n: usize) -> Result<Self> {
        Self::new(&vec![n; d], &vec![1.0; d])
    }

    pub fn dim(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn cell(&self) -> &[f64] {
        &self.cell
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Multi-index of the flat point index (row-major, last axis fastest).
    pub fn coords(&self, mut flat: usize) -> Vec<usize> {
        let d = self.dim();
        let mut out = vec![0; d];
        for axis in (0..d).rev() {
            out[axis] = flat % self.sizes[axis];
            flat /= self.sizes[axis];
        }
        out
    }

    pub fn flat_index(&self, coords: &[usize]) -> usize {
        let mut flat = 0;
        for (axis, &i) in coords.iter().enumerate() {
            flat = flat * self.sizes[axis] + i;
        }
        flat
    }

    /// Wavevector of the lattice point with flat index `flat`.
    ///
    /// Frequencies follow the standard DFT convention: index `m` maps to the
    /// signed integer `m` for `m <= N/2` and `m - N` otherwise, scaled by
    /// `2π / cell length` per axis.
    pub fn wavevector(&self, flat: usize) -> Vec<f64> {
        let coords = self.coords(flat);
        coords
            .iter()
            .zip(self.sizes.iter().zip(self.cell.iter()))
            .map(|(&m, (&n, &a))| {
                let signed = if m <= n / 2 {
                    m as isize
                } else {
                    m as isize - n as isize
                };
                2.0 * std::f64::consts::PI * signed as f64 / a
            })
            .collect()
    }
}

/// Direction of the discrete Fourier transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// A tensor-valued function sampled on a periodic grid.
///
/// Values are stored point-major: `values[x * dim + c]` is component `c` at
/// flat grid index `x`. This keeps the per-point component vector contiguous,
/// which is what the pointwise operator products and per-wavevector
/// projections consume.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    shape: TensorShape,
    values: Vec<Complex64>,
}

impl Field {
    pub fn zeros(grid: &Grid, shape: &TensorShape) -> Self {
        let n = grid.len() * shape.dim();
        Self {
            grid: grid.clone(),
            shape: shape.clone(),
            values: vec![Complex64::ZERO; n],
        }
    }

    pub fn from_values(grid: &Grid, shape: &TensorShape, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() * shape.dim() {
            return Err(Error::DimensionMismatch(format!(
                "field storage needs {} values, got {}",
                grid.len() * shape.dim(),
                values.len()
            )));
        }
        if values
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::InvalidArgument("field values must be finite".into()));
        }
        Ok(Self {
            grid: grid.clone(),
            shape: shape.clone(),
            values,
        })
    }

    /// Field with the same component vector at every grid point.
    pub fn constant(grid: &Grid, shape: &TensorShape, value: &[Complex64]) -> Result<Self> {
        if value.len() != shape.dim() {
            return Err(Error::DimensionMismatch(
                "constant value length != shape dim".into(),
            ));
        }
        let mut values = Vec::with_capacity(grid.len() * shape.dim());
        for _ in 0..grid.len() {
            values.extend_from_slice(value);
        }
        Ok(Self {
            grid: grid.clone(),
            shape: shape.clone(),
            values,
        })
    }

    /// Deterministic complex-Gaussian field: independent components with
    /// standard-normal real and imaginary parts scaled by 1/√2.
    pub fn random(grid: &Grid, shape: &TensorShape, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = StandardNormal;
        let n = grid.len() * shape.dim();
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        let values = (0..n)
            .map(|_| {
                let re: f64 = normal.sample(&mut rng);
                let im: f64 = normal.sample(&mut rng);
                Complex64::new(re * scale, im * scale)
            })
            .collect();
        Self {
            grid: grid.clone(),
            shape: shape.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn shape(&self) -> &TensorShape {
        &self.shape
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// Component vector at flat grid index `x`.
    pub fn point(&self, x: usize) -> &[Complex64] {
        let dim = self.shape.dim();
        &self.values[x * dim..(x + 1) * dim]
    }

    pub fn point_mut(&mut self, x: usize) -> &mut [Complex64] {
        let dim = self.shape.dim();
        &mut self.values[x * dim..(x + 1) * dim]
    }

    pub fn same_layout(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid || self.shape != other.shape {
            return Err(Error::DimensionMismatch(
                "fields differ in grid or tensor shape".into(),
            ));
        }
        Ok(())
    }

    pub fn scale(&self, a: Complex64) -> Field {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v *= a;
        }
        out
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.same_layout(other)?;
        let mut out = self.clone();
        for (v, w) in out.values.iter_mut().zip(other.values.iter()) {
            *v += w;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.same_layout(other)?;
        let mut out = self.clone();
        for (v, w) in out.values.iter_mut().zip(other.values.iter()) {
            *v -= w;
        }
        Ok(out)
    }

    /// In-place `self += a * other`.
    pub fn axpy(&mut self, a: Complex64, other: &Field) -> Result<()> {
        self.same_layout(other)?;
        for (v, w) in self.values.iter_mut().zip(other.values.iter()) {
            *v += a * w;
        }
        Ok(())
    }
}

/// Volume-averaged inner product `(1/N) Σ_x Σ_c P(x) conj(Q(x))`.
///
/// Linear in the first argument, antilinear in the second.
pub fn inner_product(p: &Field, q: &Field) -> Result<Complex64> {
    p.same_layout(q)?;
    let mut acc = Complex64::ZERO;
    for (a, b) in p.values.iter().zip(q.values.iter()) {
        acc += a * b.conj();
    }
    Ok(acc / p.grid.len() as f64)
}

/// Norm induced by [`inner_product`].
pub fn norm(p: &Field) -> f64 {
    let mut acc = 0.0;
    for v in p.values.iter() {
        acc += v.norm_sqr();
    }
    (acc / p.grid.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_inner_product_is_volume_average() {
        let grid = Grid::cubic(2, 4).unwrap();
        let shape = TensorShape::vector(3);
        let ones = vec![Complex64::ONE; 3];
        let p = Field::constant(&grid, &shape, &ones).unwrap();
        let ip = inner_product(&p, &p).unwrap();
        assert!((ip - Complex64::new(3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_field_inner_product_and_norm() {
        let grid = Grid::cubic(2, 4).unwrap();
        let shape = TensorShape::vector(2);
        let p = Field::random(&grid, &shape, 11);
        let q = Field::zeros(&grid, &shape);
        assert_eq!(inner_product(&p, &q).unwrap(), Complex64::ZERO);
        assert_eq!(norm(&q), 0.0);
    }

    #[test]
    fn inner_product_matches_brute_force_double_loop() {
        // Independent oracle: explicit double loop over points and components.
        let grid = Grid::cubic(2, 8).unwrap();
        let shape = TensorShape::new(vec![(2, 2), (1, 1)]).unwrap();
        let p = Field::random(&grid, &shape, 1);
        let q = Field::random(&grid, &shape, 2);

        let mut acc = Complex64::ZERO;
        for x in 0..grid.len() {
            for c in 0..shape.dim() {
                acc += p.point(x)[c] * q.point(x)[c].conj();
            }
        }
        let oracle = acc / grid.len() as f64;

        let ip = inner_product(&p, &q).unwrap();
        assert!((ip - oracle).norm() < 1e-13);
        assert!((norm(&p) - inner_product(&p, &p).unwrap().re.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn inner_product_is_conjugate_symmetric_and_sesquilinear() {
        let grid = Grid::cubic(2, 4).unwrap();
        let shape = TensorShape::vector(2);
        let p = Field::random(&grid, &shape, 3);
        let q = Field::random(&grid, &shape, 4);
        let r = Field::random(&grid, &shape, 5);
        let a = Complex64::new(0.3, -1.2);
        let b = Complex64::new(-0.7, 0.4);

        let pq = inner_product(&p, &q).unwrap();
        let qp = inner_product(&q, &p).unwrap();
        assert!((pq - qp.conj()).norm() < 1e-13);

        // Linear in the first slot.
        let mut lin = p.scale(a);
        lin.axpy(b, &r).unwrap();
        let lhs = inner_product(&lin, &q).unwrap();
        let rhs = a * pq + b * inner_product(&r, &q).unwrap();
        assert!((lhs - rhs).norm() < 1e-13);

        // Antilinear in the second slot.
        let lhs = inner_product(&q, &p.scale(a)).unwrap();
        let rhs = a.conj() * qp;
        assert!((lhs - rhs).norm() < 1e-13);
    }

    #[test]
    fn norm_is_absolutely_homogeneous() {
        let grid = Grid::cubic(2, 4).unwrap();
        let shape = TensorShape::vector(3);
        let p = Field::random(&grid, &shape, 9);
        let a = Complex64::new(-2.5, 1.5);
        assert!((norm(&p.scale(a)) - a.norm() * norm(&p)).abs() < 1e-13);
    }

    #[test]
    fn random_field_is_deterministic_per_seed() {
        let grid = Grid::cubic(2, 4).unwrap();
        let shape = TensorShape::vector(2);
        let p = Field::random(&grid, &shape, 42);
        let q = Field::random(&grid, &shape, 42);
        let r = Field::random(&grid, &shape, 43);
        assert_eq!(p, q);
        assert!(norm(&p.sub(&r).unwrap()) > 0.0);
    }

    #[test]
    fn random_component_mean_is_small() {
        // Law of large numbers: the mean of 10^4 samples of one component.
        let grid = Grid::new(&[100, 100], &[1.0, 1.0]).unwrap();
        let shape = TensorShape::vector(1);
        let p = Field::random(&grid, &shape, 7);
        let mean: Complex64 = p.values().iter().sum::<Complex64>() / p.values().len() as f64;
        assert!(mean.norm() < 0.05, "mean {mean} too large");
    }

    #[test]
    fn mismatched_fields_error() {
        let g1 = Grid::cubic(2, 4).unwrap();
        let g2 = Grid::cubic(2, 8).unwrap();
        let shape = TensorShape::vector(2);
        let p = Field::zeros(&g1, &shape);
        let q = Field::zeros(&g2, &shape);
        assert!(matches!(
            inner_product(&p, &q),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn flat_index_round_trip_and_wavevectors() {
        let grid = Grid::new(&[4, 6], &[1.0, 2.0]).unwrap();
        for flat in 0..grid.len() {
            assert_eq!(grid.flat_index(&grid.coords(flat)), flat);
        }
        // index 0 is k = 0; one step along the last axis is 2π/cell.
        assert_eq!(grid.wavevector(0), vec![0.0, 0.0]);
        let k = grid.wavevector(1);
        assert!((k[1] - std::f64::consts::PI).abs() < 1e-15); // 2π/2
                                                              // Beyond Nyquist the frequency is negative.
        let k = grid.wavevector(grid.flat_index(&[3, 0]));
        assert!((k[0] + 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }
}
