//! The book chapters, included as doc comments so that every code sample in
//! `book/` compiles and runs under `cargo test --doc`. mdbook cannot pull the
//! crate into its own test harness, so the chapters are mounted here instead
//! and the two stay in sync by construction.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/fields.md")]
pub mod fields {}

#[doc = include_str!("../../../book/src/projections.md")]
pub mod projections {}

#[doc = include_str!("../../../book/src/catalog.md")]
pub mod catalog {}

#[doc = include_str!("../../../book/src/certificates.md")]
pub mod certificates {}

#[doc = include_str!("../../../book/src/solver.md")]
pub mod solver {}

#[doc = include_str!("../../../book/src/spectrum_maps.md")]
pub mod spectrum_maps {}

#[doc = include_str!("../../../book/src/bloch.md")]
pub mod bloch {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
