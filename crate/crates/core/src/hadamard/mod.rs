//! First variation of curl eigenvalues under domain deformation.
//!
//! For an eigenfield u with ‖u‖ = 1 and a motion with normal speed f,
//! λ̇ = −λ ∫_∂Ω f |u|² dσ; on a degenerate cluster the matrix
//! −λ ∫ f (u_i·u_j) dσ has the branch derivatives as eigenvalues.
//!
//! Discretely the curl pairing is metric-free and Whitney 2-forms move by
//! Piola transport, so for any piecewise-linear vertex motion X the exact
//! derivative of the discrete eigenvalue is −λ ∫ |u|² div X − 2 u·(DX)u.
//! Condensing this volume form through the harmonic extension gives a
//! nodal boundary density ("recovered"), which is what `shape_derivative`
//! integrates. The raw Whitney trace |v|² is kept for comparison.

mod density;
mod fd;
mod split;
mod track;

pub use density::{
    boundary_density, cross_density, cross_term, shape_derivative, tet_fields, vertex_loads, volume_form,
    whitney_cross_density, whitney_trace_density, BoundaryDensity, DensityContext, DensityMethod,
};
pub use fd::{derivative_matrix, fd_check, nearest_cluster, relative_error, FdOptions, FdReport, FdRow};
pub use split::{split_experiment, SplitOptions, SplitStatistics, SplitTrial};
pub use track::{
    best_matching, lowdin, overlap_matrix, rellich_align, select_by_projection, subspace_cosine, track_family,
    TrackOptions, TrackedFamily,
};
