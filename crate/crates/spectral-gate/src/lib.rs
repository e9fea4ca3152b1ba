//! Certified exclusion regions for the generalized spectrum of physical
//! operator pencils on periodic cells.
//!
//! Many linear physical equations — conductivity, frequency-domain acoustics,
//! Maxwell, elastodynamics, plate and thermo-coupled equations — share one
//! canonical form: a constitutive law `J(x) = L(x) E(x) − h(x)` relating
//! fields that live in complementary subspaces of the square-integrable
//! fields on a periodic cell. The operator `L` depends linearly on a vector
//! of complex parameters; the set of parameter values where the projected
//! operator fails to be invertible is its generalized spectrum.
//!
//! This crate implements the full pipeline around that form:
//!
//! * [`field`] / [`fourier`] — tensor-valued periodic fields, volume-averaged
//!   inner products, unitary transforms;
//! * [`projection`] — per-wavevector projections Γ₁/Γ₂ built from symbol maps;
//! * [`catalog`] — the canonical-form presets and multiphase assembly;
//! * [`pencil`] — operator pencils, boundedness β and coercivity α constants;
//! * [`translation`] — Q*-convexity verification of translation operators and
//!   the certificate search;
//! * [`solver`] — the shifted Neumann series for the Green's operator, a
//!   dense oracle, the inverse-form and splitting routes, and analytic
//!   property checks (Herglotz signs, homogeneity, normalization);
//! * [`spectrum`] / [`bloch`] — parameter-plane maps with certified exclusion
//!   regions and Floquet–Bloch scans;
//! * [`config`] / [`run`] / [`io`] — the batch front door and artifact
//!   formats.
//!
//! The guide in `book/` walks through the same pipeline chapter by chapter;
//! its code snippets compile and run as doc-tests of this crate (see
//! [`guide`]).

pub mod bloch;
pub mod catalog;
pub mod config;
pub mod error;
pub mod field;
pub mod fourier;
pub mod guide;
pub mod io;
pub mod linalg;
pub mod pencil;
pub mod projection;
pub mod run;
pub mod solver;
pub mod spectrum;
pub mod translation;

pub use error::{Error, Result};
pub use field::{inner_product, norm, Direction, Field, Grid, TensorShape};
pub use fourier::transform;
pub use projection::{build_projection, ProjectionOperator, SymbolMap};
