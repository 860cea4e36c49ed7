//! Volume-normalised eigenvalue optimisation.
//!
//! The functional is |Ω|^{1/3} λ, which is scale invariant, so the volume
//! constraint needs no projection. Shapes are affine families
//! x + Σ c_i X_i over a base mesh. Gradients are exact derivatives of the
//! discrete functional (volume form of the Hadamard derivative); the
//! boundary-integral form is reported next to them.

mod certificate;
mod family;
mod optimize;

pub use certificate::{cone_decompose, extremality_certificate, ExtremalityReport, CERTIFICATE_MAX_ITERS};
pub use family::ShapeFamily;
pub use optimize::{optimize, Direction, OptimizeOptions, OptimizeResult, StopReason, TrajectoryPoint};

use crate::complex::barycentric_gradients;
use crate::hadamard::{cross_density, tet_fields, volume_form, DensityContext};
use crate::mesh::{vertex_normals, DeformationField, TetMesh, Vec3};
use crate::spectrum::{Discretization, EigenResult, LagrangianSpec, SolverOptions};
use crate::{Error, Result};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Which eigenvalues are optimised: the `multiplicity` eigenvalues nearest
/// `shift` (with `multiplicity` = 0 meaning the cluster of the nearest one).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigenTarget {
    pub shift: f64,
    pub multiplicity: usize,
    /// Extra eigenpairs solved for.
    pub extra: usize,
    /// Which member of the group (0 = lowest) the optimiser acts on.
    pub member: usize,
}

impl Default for EigenTarget {
    fn default() -> Self {
        EigenTarget { shift: 4.5, multiplicity: 0, extra: 2, member: 0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormalizedEigenvalue {
    /// Target eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    pub volume: f64,
    /// |Ω|^{1/3} times each target eigenvalue.
    pub normalized: Vec<f64>,
}

/// Solved target group: discretization, eigenpairs and group indices.
pub(crate) struct Evaluated {
    pub disc: Discretization,
    pub result: EigenResult,
    pub group: Vec<usize>,
}

pub(crate) fn evaluate(mesh: &TetMesh, lag: &LagrangianSpec, target: &EigenTarget, opts: &SolverOptions) -> Result<Evaluated> {
    let disc = Discretization::new(mesh, lag)?;
    let want = target.multiplicity.max(1) + target.extra;
    let result = disc.solve(want, target.shift, opts)?;
    let mut idx: Vec<usize> = (0..result.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| {
        (result.eigenvalues[a] - target.shift).abs().total_cmp(&(result.eigenvalues[b] - target.shift).abs())
    });
    let m = if target.multiplicity == 0 {
        result.cluster_of(idx[0]).map_or(1, |c| c.len)
    } else {
        target.multiplicity
    };
    let mut group = idx[..m.min(idx.len())].to_vec();
    group.sort_unstable();
    Ok(Evaluated { disc, result, group })
}

/// |Ω|^{1/3} λ for the target eigenvalues.
pub fn normalized_eigenvalue(
    mesh: &TetMesh,
    lag: &LagrangianSpec,
    target: &EigenTarget,
    opts: &SolverOptions,
) -> Result<NormalizedEigenvalue> {
    let e = evaluate(mesh, lag, target, opts)?;
    let volume = mesh.volume();
    let eigenvalues: Vec<f64> = e.group.iter().map(|&i| e.result.eigenvalues[i]).collect();
    let normalized = eigenvalues.iter().map(|l| volume.cbrt() * l).collect();
    Ok(NormalizedEigenvalue { eigenvalues, volume, normalized })
}

/// d|Ω|/dt = Σ_T |T| div X, exact for the piecewise-linear motion.
pub fn volume_derivative(mesh: &TetMesh, x: &[[f64; 3]]) -> f64 {
    mesh.tets
        .iter()
        .enumerate()
        .map(|(t, tv)| {
            let (g, vol) = barycentric_gradients(&mesh.tet_points(t));
            vol * (0..4).map(|k| Vec3::from(x[tv[k]]).dot(&g[k])).sum::<f64>()
        })
        .sum()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Gradient {
    /// Normalised value of the differentiated eigenvalue (or cluster mean).
    pub value: f64,
    pub lambda: f64,
    pub volume: f64,
    pub multiplicity: usize,
    /// Flagged when the differentiated eigenvalue is degenerate; the
    /// components are then derivatives of the cluster mean and
    /// `intervals` hold the branch-derivative hulls.
    pub degenerate: bool,
    pub components: Vec<f64>,
    pub intervals: Vec<(f64, f64)>,
    /// Boundary-integral form −λ|Ω|^{1/3}∫f|u|² + ⅓λ|Ω|^{-2/3}∫f with the
    /// recovered density and f = X·ν.
    pub boundary_components: Vec<f64>,
    /// Normalised derivative matrices over the cluster, one per component.
    #[serde(skip)]
    pub matrices: Vec<DMatrix<f64>>,
}

impl Gradient {
    pub fn norm(&self) -> f64 {
        self.components.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Gradient of the normalised eigenvalue of the cluster `fields`
/// (face cochains, M2-orthonormal) with eigenvalue `lambda` on `mesh`.
pub(crate) fn cluster_gradient(
    disc: &Discretization,
    lambda: f64,
    fields: &[Vec<f64>],
    displacements: &[&DeformationField],
    parallel: bool,
) -> Result<Gradient> {
    let mesh = &disc.complex.mesh;
    let cc = &disc.complex;
    let m = fields.len();
    let volume = mesh.volume();
    let v13 = volume.cbrt();
    let tf: Vec<_> = fields.iter().map(|u| tet_fields(cc, u)).collect();
    let ctx = DensityContext::new(mesh)?;
    let normals = vertex_normals(mesh);
    let mut rho = vec![vec![None; m]; m];
    for i in 0..m {
        for j in i..m {
            rho[i][j] = Some(cross_density(cc, &ctx, &fields[i], &fields[j]));
        }
    }
    let component = |x: &&DeformationField| -> (f64, (f64, f64), f64, DMatrix<f64>) {
        let dv = volume_derivative(mesh, &x.displacement);
        let vm = DMatrix::from_fn(m, m, |a, b| -lambda * volume_form(cc, &tf[a], &tf[b], &x.displacement));
        let e = vm.clone().symmetric_eigen().eigenvalues;
        let corr = lambda * dv / (3.0 * volume.powf(2.0 / 3.0));
        let lo = e.iter().copied().fold(f64::INFINITY, f64::min) * v13 + corr;
        let hi = e.iter().copied().fold(f64::NEG_INFINITY, f64::max) * v13 + corr;
        let mean = vm.trace() / m as f64 * v13 + corr;
        // boundary form
        let mut f = vec![0.0; mesh.vertices.len()];
        for &v in &ctx.boundary_vertices {
            f[v] = Vec3::from(x.displacement[v]).dot(&normals[v]);
        }
        let flux: f64 = ctx.boundary_vertices.iter().map(|&v| f[v] * ctx.areas[v]).sum();
        let bm = DMatrix::from_fn(m, m, |a, b| {
            let (i, j) = if a <= b { (a, b) } else { (b, a) };
            -lambda * rho[i][j].as_ref().unwrap().integrate(&f)
        });
        let bmean = bm.trace() / m as f64 * v13 + lambda * flux / (3.0 * volume.powf(2.0 / 3.0));
        let nm = vm * v13 + DMatrix::identity(m, m) * corr;
        (mean, (lo, hi), bmean, nm)
    };
    let parts: Vec<(f64, (f64, f64), f64, DMatrix<f64>)> = if parallel {
        displacements.par_iter().map(component).collect()
    } else {
        displacements.iter().map(component).collect()
    };
    Ok(Gradient {
        value: v13 * lambda,
        lambda,
        volume,
        multiplicity: m,
        degenerate: m > 1,
        components: parts.iter().map(|p| p.0).collect(),
        intervals: parts.iter().map(|p| p.1).collect(),
        boundary_components: parts.iter().map(|p| p.2).collect(),
        matrices: parts.into_iter().map(|p| p.3).collect(),
    })
}

/// ∂(|Ω|^{1/3} λ)/∂c_i at c for the cluster of the target eigenvalue
/// nearest the shift.
pub fn gradient(
    family: &ShapeFamily,
    c: &[f64],
    lag: &LagrangianSpec,
    target: &EigenTarget,
    opts: &SolverOptions,
    parallel: bool,
) -> Result<Gradient> {
    let mesh = family.mesh_at(c)?;
    let e = evaluate(&mesh, lag, &EigenTarget { multiplicity: 0, ..target.clone() }, opts)?;
    let c0 = e.result.cluster_of(e.group[0]).ok_or_else(|| Error::InvalidParameter("no cluster".into()))?;
    let range = EigenResult::range(c0);
    let lambda = c0.mean;
    let fields = &e.result.fields[range];
    let xs: Vec<&DeformationField> = family.fields.iter().collect();
    cluster_gradient(&e.disc, lambda, fields, &xs, parallel)
}
