//! The discrete curl operator under a Lagrangian boundary condition.
//!
//! Eigenfields are computed from the compact inverse of curl on its range:
//! a field is u = d1ζ, where ζ is an edge potential vanishing on the
//! boundary up to a boundary class, and the Rayleigh quotient
//! ⟨ζ, u⟩ / ‖u‖² gives 1/λ. The generalized problem K x = λ S x, with
//! K = ‖d1ζ‖²_{M2} positive definite and S the symmetrised curl pairing, is
//! solved by shift-invert block Lanczos. Edge proxies v of the 1-form
//! field are reconstructed as λζ plus a discrete gradient chosen so that
//! d0ᵀM1v = 0.

mod constraint;
mod lagrangian;
mod output;
mod solve;

pub use constraint::{
    assemble_curl, constraint_space, constraint_space_unchecked, harmonic_fields, lagrangian_violation,
    m1_orthonormalize, ConstraintHandle, Coulomb, CurlMatrices, HarmonicFields,
};
pub use lagrangian::{LagrangianSpec, Preset};
pub use output::{point_vectors, write_vtk};
pub use solve::{
    check_selfadjointness, cluster_multiplicity, richardson_gap_tol, solve_spectrum, Cluster, ConstraintViolation,
    EigenResult, SolverOptions,
};

use crate::complex::{build_complex_with, homology_basis, Assembly, CochainComplex, HomologyBasis};
use crate::mesh::TetMesh;
use crate::Result;

/// Complex, homology and constrained pencil of one mesh and boundary
/// condition.
pub struct Discretization {
    pub complex: CochainComplex,
    pub basis: HomologyBasis,
    pub handle: ConstraintHandle,
}

impl Discretization {
    pub fn new(mesh: &TetMesh, lag: &LagrangianSpec) -> Result<Self> {
        Self::with_assembly(mesh, lag, Assembly::Parallel)
    }

    pub fn with_assembly(mesh: &TetMesh, lag: &LagrangianSpec, assembly: Assembly) -> Result<Self> {
        let complex = build_complex_with(mesh, assembly)?;
        let basis = homology_basis(&complex)?;
        let handle = constraint_space(&complex, &basis, lag)?;
        Ok(Discretization { complex, basis, handle })
    }

    /// Skips the Lagrangian validation (negative controls).
    pub fn unchecked(mesh: &TetMesh, lag: &LagrangianSpec) -> Result<Self> {
        let complex = build_complex_with(mesh, Assembly::Parallel)?;
        let basis = homology_basis(&complex)?;
        let handle = constraint_space_unchecked(&complex, &basis, lag)?;
        Ok(Discretization { complex, basis, handle })
    }

    pub fn solve(&self, k: usize, shift: f64, opts: &SolverOptions) -> Result<EigenResult> {
        solve_spectrum(&self.complex, &self.basis, &self.handle, k, shift, opts)
    }
}
