//! Artifact formats: the binary field container, the projector cache, CSV
//! and PGM exports.
//!
//! Binary container (little-endian throughout):
//!
//! ```text
//! SGF1 | u32 version | u32 d | u32 sizes[d] | f64 cell[d]
//!      | u32 n_blocks | (u32 rows, u32 cols)…
//!      | N·dim × (f64 re, f64 im)      — values in point-major order,
//!                                        components flattened row-major
//!                                        within block, blocks in order
//! ```
//!
//! The projector cache `SGP1` shares the header and stores, per lattice
//! point, the subspace rank followed by the full dim×dim unitary.
//!
//! Text artifacts print every floating-point number with 17 significant
//! digits so that re-parsing reproduces the exact f64, and identical inputs
//! produce byte-identical files.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::bloch::BlochPoint;
use crate::error::{Error, Result};
use crate::field::{Field, Grid, TensorShape};
use crate::projection::ProjectionOperator;
use crate::spectrum::{PointStatus, SpectrumMap};

const FIELD_MAGIC: &[u8; 4] = b"SGF1";
const PROJECTOR_MAGIC: &[u8; 4] = b"SGP1";
const FORMAT_VERSION: u32 = 1;

/// 17-significant-digit scientific formatting, round-trip exact for f64.
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

// ---------------------------------------------------------------------------
// little-endian primitives
// ---------------------------------------------------------------------------

struct Writer<W: Write>(W);

impl<W: Write> Writer<W> {
    fn u32(&mut self, v: u32) -> Result<()> {
        self.0.write_all(&v.to_le_bytes())?;
        Ok(())
    }
    fn f64(&mut self, v: f64) -> Result<()> {
        self.0.write_all(&v.to_le_bytes())?;
        Ok(())
    }
    fn c64(&mut self, v: Complex64) -> Result<()> {
        self.f64(v.re)?;
        self.f64(v.im)
    }
}

struct Reader<R: Read>(R);

impl<R: Read> Reader<R> {
    fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.0.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }
    fn f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        self.0.read_exact(&mut b)?;
        Ok(f64::from_le_bytes(b))
    }
    fn c64(&mut self) -> Result<Complex64> {
        Ok(Complex64::new(self.f64()?, self.f64()?))
    }
}

fn write_header<W: Write>(
    w: &mut Writer<W>,
    magic: &[u8; 4],
    grid: &Grid,
    shape: &TensorShape,
) -> Result<()> {
    w.0.write_all(magic)?;
    w.u32(FORMAT_VERSION)?;
    w.u32(grid.dim() as u32)?;
    for &n in grid.sizes() {
        w.u32(n as u32)?;
    }
    for &a in grid.cell() {
        w.f64(a)?;
    }
    w.u32(shape.blocks().len() as u32)?;
    for &(r, c) in shape.blocks() {
        w.u32(r as u32)?;
        w.u32(c as u32)?;
    }
    Ok(())
}

fn read_header<R: Read>(r: &mut Reader<R>, magic: &[u8; 4]) -> Result<(Grid, TensorShape)> {
    let mut m = [0u8; 4];
    r.0.read_exact(&mut m)?;
    if &m != magic {
        return Err(Error::Format(format!(
            "bad magic: expected {:?}, got {:?}",
            String::from_utf8_lossy(magic),
            String::from_utf8_lossy(&m)
        )));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported container version {version}"
        )));
    }
    let d = r.u32()? as usize;
    if !(2..=3).contains(&d) {
        return Err(Error::Format(format!("bad dimension {d}")));
    }
    let mut sizes = Vec::with_capacity(d);
    for _ in 0..d {
        sizes.push(r.u32()? as usize);
    }
    let mut cell = Vec::with_capacity(d);
    for _ in 0..d {
        cell.push(r.f64()?);
    }
    let grid = Grid::new(&sizes, &cell)?;
    let n_blocks = r.u32()? as usize;
    let mut blocks = Vec::with_capacity(n_blocks);
    for _ in 0..n_blocks {
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        blocks.push((rows, cols));
    }
    Ok((grid, TensorShape::new(blocks)?))
}

// ---------------------------------------------------------------------------
// field container
// ---------------------------------------------------------------------------

pub fn save_field(path: &Path, field: &Field) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = Writer(std::io::BufWriter::new(file));
    write_header(&mut w, FIELD_MAGIC, field.grid(), field.shape())?;
    for v in field.values() {
        w.c64(*v)?;
    }
    w.0.flush()?;
    Ok(())
}

pub fn load_field(path: &Path) -> Result<Field> {
    let file = std::fs::File::open(path)?;
    let mut r = Reader(std::io::BufReader::new(file));
    let (grid, shape) = read_header(&mut r, FIELD_MAGIC)?;
    let n = grid.len() * shape.dim();
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        values.push(r.c64()?);
    }
    Field::from_values(&grid, &shape, values)
}

/// Debug CSV export: one row per (point, component).
pub fn field_to_csv(field: &Field) -> String {
    let mut out = String::from("x_index,component,re,im\n");
    let dim = field.shape().dim();
    for x in 0..field.grid().len() {
        for c in 0..dim {
            let v = field.point(x)[c];
            out.push_str(&format!("{x},{c},{},{}\n", fmt_g17(v.re), fmt_g17(v.im)));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// projector cache
// ---------------------------------------------------------------------------

pub fn save_projector(path: &Path, pi: &ProjectionOperator) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = Writer(std::io::BufWriter::new(file));
    write_header(&mut w, PROJECTOR_MAGIC, pi.grid(), pi.shape())?;
    let dim = pi.shape().dim();
    for x in 0..pi.grid().len() {
        w.u32(pi.rank(x) as u32)?;
        let u = pi.unitary(x);
        for i in 0..dim {
            for j in 0..dim {
                w.c64(u[(i, j)])?;
            }
        }
    }
    w.0.flush()?;
    Ok(())
}

pub fn load_projector(path: &Path) -> Result<ProjectionOperator> {
    let file = std::fs::File::open(path)?;
    let mut r = Reader(std::io::BufReader::new(file));
    let (grid, shape) = read_header(&mut r, PROJECTOR_MAGIC)?;
    let dim = shape.dim();
    let n = grid.len();
    let mut unitaries = Vec::with_capacity(n);
    let mut ranks = Vec::with_capacity(n);
    for _ in 0..n {
        ranks.push(r.u32()? as usize);
        let mut u = DMatrix::<Complex64>::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                u[(i, j)] = r.c64()?;
            }
        }
        unitaries.push(u);
    }
    ProjectionOperator::from_unitaries(grid, shape, unitaries, ranks)
}

// ---------------------------------------------------------------------------
// spectrum map exports
// ---------------------------------------------------------------------------

/// CSV export: `re,im,status,theta,alpha,beta,t,translation_id`, scan order.
pub fn map_to_csv(map: &SpectrumMap) -> String {
    let mut out = String::from("re,im,status,theta,alpha,beta,t,translation_id\n");
    for row in 0..map.scan.im_steps {
        for col in 0..map.scan.re_steps {
            let z = map.scan.value_at(row, col);
            let status = map.status(row, col);
            match status {
                PointStatus::Certified { certificate: c } => {
                    out.push_str(&format!(
                        "{},{},certified,{},{},{},{},{}\n",
                        fmt_g17(z.re),
                        fmt_g17(z.im),
                        fmt_g17(c.theta),
                        fmt_g17(c.alpha),
                        fmt_g17(c.beta),
                        fmt_g17(c.t),
                        c.translation_id.as_deref().unwrap_or("")
                    ));
                }
                other => {
                    out.push_str(&format!(
                        "{},{},{},,,,,\n",
                        fmt_g17(z.re),
                        fmt_g17(z.im),
                        other.label()
                    ));
                }
            }
        }
    }
    out
}

/// Binary PGM heatmap. Gray levels: certified 255, unscanned 128,
/// oracle-spectrum 64, uncertified 0. The top image row is the largest Im.
pub fn map_to_pgm(map: &SpectrumMap) -> Vec<u8> {
    let w = map.scan.re_steps;
    let h = map.scan.im_steps;
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    for row in (0..h).rev() {
        for col in 0..w {
            let level: u8 = match map.status(row, col) {
                PointStatus::Certified { .. } => 255,
                PointStatus::Unscanned => 128,
                PointStatus::OracleSpectrum { .. } => 64,
                PointStatus::Uncertified => 0,
            };
            out.push(level);
        }
    }
    out
}

/// Band report CSV: `path_param,omega_re,omega_im,certified,sigma_min`.
pub fn band_to_csv(points: &[BlochPoint]) -> String {
    let mut out = String::from("path_param,omega_re,omega_im,certified,sigma_min\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_g17(p.path_param),
            fmt_g17(p.omega[0]),
            fmt_g17(p.omega[1]),
            p.certified,
            fmt_g17(p.sigma_min)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::norm;
    use crate::spectrum::{MapMetadata, ScanSpec};

    #[test]
    fn field_container_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid::new(&[4, 6], &[1.0, 2.0]).unwrap();
        let shape = TensorShape::new(vec![(2, 2), (1, 1)]).unwrap();
        let f = Field::random(&grid, &shape, 99);
        let path = dir.path().join("field.sgf");
        save_field(&path, &f).unwrap();
        let g = load_field(&path).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn bad_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bogus.sgf");
        std::fs::write(&path, b"NOPE").unwrap();
        assert!(matches!(load_field(&path), Err(Error::Format(_))));
    }

    #[test]
    fn projector_cache_round_trip() {
        use crate::catalog::{build_preset, PresetName};
        use crate::projection::build_projection;
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid::cubic(2, 8).unwrap();
        let preset = build_preset(PresetName::Acoustics, 2).unwrap();
        let pi = build_projection(preset.symbol(), &grid).unwrap();
        let path = dir.path().join("proj.sgp");
        save_projector(&path, &pi).unwrap();
        let pi2 = load_projector(&path).unwrap();
        assert_eq!(pi.e_dim(), pi2.e_dim());
        let f = Field::random(&grid, pi.shape(), 5);
        let a = pi.apply_gamma1(&f).unwrap();
        let b = pi2.apply_gamma1(&f).unwrap();
        assert!(norm(&a.sub(&b).unwrap()) < 1e-14 * norm(&f));
    }

    #[test]
    fn g17_round_trips_f64() {
        for &x in &[
            1.0,
            -0.1,
            std::f64::consts::PI,
            1.2345678901234567e-300,
            6.02e23,
        ] {
            let s = fmt_g17(x);
            let y: f64 = s.parse().unwrap();
            assert_eq!(x, y, "{s}");
        }
    }

    #[test]
    fn map_exports_are_deterministic() {
        let scan = ScanSpec {
            vary: 1,
            fixed: vec![[1.0, 0.0], [0.0, 0.0]],
            re_range: [-1.0, 1.0],
            re_steps: 3,
            im_range: [-1.0, 1.0],
            im_steps: 2,
            budget: None,
        };
        let map = SpectrumMap {
            scan,
            metadata: MapMetadata::default(),
            points: vec![
                PointStatus::Uncertified,
                PointStatus::Unscanned,
                PointStatus::OracleSpectrum { sigma_min: 0.0 },
                PointStatus::Uncertified,
                PointStatus::Uncertified,
                PointStatus::Uncertified,
            ],
        };
        let a = map_to_csv(&map);
        let b = map_to_csv(&map);
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 7);
        let pgm = map_to_pgm(&map);
        assert!(pgm.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(pgm.len(), b"P5\n3 2\n255\n".len() + 6);
        // empty map: header-only csv
        let empty = SpectrumMap {
            scan: ScanSpec {
                vary: 1,
                fixed: vec![[1.0, 0.0], [0.0, 0.0]],
                re_range: [0.0, 0.0],
                re_steps: 0,
                im_range: [0.0, 0.0],
                im_steps: 0,
                budget: None,
            },
            metadata: MapMetadata::default(),
            points: vec![],
        };
        assert_eq!(
            map_to_csv(&empty),
            "re,im,status,theta,alpha,beta,t,translation_id\n"
        );
    }
}
