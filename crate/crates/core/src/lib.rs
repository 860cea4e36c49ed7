//! Curl eigenvalues on tetrahedral meshes under Lagrangian boundary conditions.
//!
//! The crate is organised along the pipeline
//! `mesh` → `complex` → `spectrum` → `hadamard` → `shapeopt`:
//! meshes with tagged homology, Whitney-form cochain complexes, the
//! self-adjoint discrete curl for a chosen Lagrangian subspace of boundary
//! cohomology, Hadamard shape derivatives with finite-difference validation
//! and eigenvalue tracking, and volume-normalised eigenvalue optimisation.

pub mod complex;
pub mod error;
pub mod hadamard;
pub mod linalg;
pub mod mesh;
pub mod shapeopt;
pub mod sparse;
pub mod spectrum;

pub use error::{Error, Result};

/// Version string embedded in every serialized report.
pub const VERSION: &str = concat!("curlspec ", env!("CARGO_PKG_VERSION"));
