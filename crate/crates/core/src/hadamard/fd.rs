use super::density::{cross_density, volume_form, tet_fields, whitney_cross_density, DensityContext, DensityMethod};
use super::track::{rellich_align, select_by_projection, solve_deformed};
use crate::mesh::{DeformationField, TetMesh};
use crate::spectrum::{Discretization, EigenResult, LagrangianSpec, SolverOptions};
use crate::{Error, Result};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FdOptions {
    /// The checked cluster is the one containing the eigenvalue nearest
    /// this shift.
    pub shift: f64,
    /// Eigenpairs solved for at every mesh.
    pub k: usize,
    /// Step sizes relative to the mesh diameter.
    pub deltas: Vec<f64>,
    pub method: DensityMethod,
    /// |λ| below which a field is treated as harmonic.
    pub kernel_threshold: f64,
    pub min_overlap: f64,
    pub parallel: bool,
    pub solver: SolverOptions,
}

impl Default for FdOptions {
    fn default() -> Self {
        FdOptions {
            shift: 4.0,
            k: 6,
            deltas: vec![1e-3, 5e-4, 2.5e-4, 1.25e-4],
            method: DensityMethod::Recovered,
            kernel_threshold: 1e-8,
            min_overlap: 0.8,
            parallel: true,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FdRow {
    /// Absolute step.
    pub delta: f64,
    /// Central differences per analytic branch, ascending.
    pub fd: Vec<f64>,
    pub rel_err: Vec<f64>,
    /// Subspace cosine of the ±δ clusters against t = 0.
    pub overlap: f64,
    /// max over pairs i<j of |D_ij| / (λ ∫|f| |u_i||u_j|) in the Rellich
    /// basis obtained at this δ (0 for simple eigenvalues).
    pub cross_ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FdReport {
    pub eigenvalues: Vec<f64>,
    pub lambda: f64,
    pub multiplicity: usize,
    pub method: DensityMethod,
    /// Eigenvalues of the boundary-formula derivative matrix, ascending.
    pub formula: Vec<f64>,
    /// Same from the volume form with the actual vertex motion; this is the
    /// exact derivative of the discrete eigenvalues.
    pub volume_formula: Vec<f64>,
    /// λ ∫ |f| |ρ| dσ, the floor of the relative-error denominator.
    pub scale: f64,
    pub sweep: Vec<FdRow>,
    /// Observed orders log2(e_k / e_{k+1}) of successive FD differences.
    pub orders: Vec<f64>,
    /// Largest branch error at the best step of the sweep.
    pub rel_error: f64,
    pub best_delta: f64,
    /// Cross-term ratio at the best step.
    pub cross_ratio: f64,
}

/// |fd − formula| / max(|fd|, |formula|, scale).
pub fn relative_error(fd: f64, formula: f64, scale: f64) -> f64 {
    let d = fd.abs().max(formula.abs()).max(scale);
    if d == 0.0 {
        0.0
    } else {
        (fd - formula).abs() / d
    }
}

fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Picks the cluster containing the eigenvalue nearest `shift`.
pub fn nearest_cluster(r: &EigenResult, shift: f64) -> Result<std::ops::Range<usize>> {
    let i = (0..r.eigenvalues.len())
        .min_by(|&a, &b| (r.eigenvalues[a] - shift).abs().total_cmp(&(r.eigenvalues[b] - shift).abs()))
        .ok_or_else(|| Error::InvalidParameter("no eigenvalues".into()))?;
    let c = r.cluster_of(i).ok_or_else(|| Error::InvalidParameter("eigenvalue outside clusters".into()))?;
    Ok(EigenResult::range(c))
}

/// Derivative matrix −λ ∫ f ρ(u_i, u_j) dσ of a cluster.
pub fn derivative_matrix(
    disc: &Discretization,
    ctx: &DensityContext,
    lambda: f64,
    fields: &[Vec<f64>],
    proxies: &[Vec<f64>],
    speed: &[f64],
    method: DensityMethod,
) -> DMatrix<f64> {
    let m = fields.len();
    let mut d = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let rho = match method {
                DensityMethod::Recovered => cross_density(&disc.complex, ctx, &fields[i], &fields[j]),
                DensityMethod::WhitneyTrace => whitney_cross_density(&disc.complex, ctx, &proxies[i], &proxies[j]),
            };
            let v = -lambda * rho.integrate(speed);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

fn combine(vs: &[Vec<f64>], a: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..a.ncols())
        .map(|j| {
            let mut w = vec![0.0; vs[0].len()];
            for (i, v) in vs.iter().enumerate() {
                crate::sparse::axpy(a[(i, j)], v, &mut w);
            }
            w
        })
        .collect()
}

/// Compares the Hadamard formula with central differences of the tracked
/// eigenvalues along Ω_t = (id + tX)(Ω), over a sweep of steps.
pub fn fd_check(
    mesh: &TetMesh,
    field: &DeformationField,
    lag: &LagrangianSpec,
    opts: &FdOptions,
) -> Result<FdReport> {
    let disc = Discretization::new(mesh, lag)?;
    let base = disc.solve(opts.k, opts.shift, &opts.solver)?;
    let range = nearest_cluster(&base, opts.shift)?;
    let m = range.len();
    let vals: Vec<f64> = base.eigenvalues[range.clone()].to_vec();
    let lambda = vals.iter().sum::<f64>() / m as f64;
    if lambda.abs() <= opts.kernel_threshold {
        return Err(Error::ZeroEigenvalue(lambda));
    }
    let fields: Vec<Vec<f64>> = base.fields[range.clone()].to_vec();
    let proxies: Vec<Vec<f64>> = base.eigenvectors[range.clone()].to_vec();
    let ctx = DensityContext::new(mesh)?;
    let speed = field.speed_per_vertex(mesh.vertices.len());
    let cc = &disc.complex;

    let dmat = derivative_matrix(&disc, &ctx, lambda, &fields, &proxies, &speed, opts.method);
    let formula = sorted_eigenvalues(&dmat);
    let tf: Vec<_> = fields.iter().map(|u| tet_fields(cc, u)).collect();
    let vmat = DMatrix::from_fn(m, m, |i, j| -lambda * volume_form(cc, &tf[i], &tf[j], &field.displacement));
    let volume_formula = sorted_eigenvalues(&vmat);
    let scale = (0..m)
        .map(|i| {
            let rho = cross_density(cc, &ctx, &fields[i], &fields[i]);
            lambda.abs() * rho.integrate_abs(&speed)
        })
        .fold(0.0f64, f64::max);

    let diam = mesh.diameter();
    let jobs: Vec<f64> = opts.deltas.iter().flat_map(|&d| [d * diam, -d * diam]).collect();
    let solve = |t: &f64| -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        // the user's shift, not λ: for invariant motions λ would sit exactly
        // on an eigenvalue and stall the other Ritz pairs
        let (_, r) = solve_deformed(mesh, field, *t, lag, opts.k, opts.shift, &opts.solver)?;
        let pick = select_by_projection(&cc.m2, &fields, &r.fields, m);
        Ok((pick.iter().map(|&j| r.eigenvalues[j]).collect(), pick.iter().map(|&j| r.fields[j].clone()).collect()))
    };
    let solved: Vec<Result<_>> =
        if opts.parallel { jobs.par_iter().map(solve).collect() } else { jobs.iter().map(solve).collect() };
    let solved: Vec<_> = solved.into_iter().collect::<Result<_>>()?;

    let mut sweep = Vec::with_capacity(opts.deltas.len());
    for (k, pair) in solved.chunks(2).enumerate() {
        let delta = jobs[2 * k];
        let ((lp, up), (lm, um)) = (&pair[0], &pair[1]);
        let (a, pi, cos) = rellich_align(&cc.m2, &fields, up, um);
        if cos < opts.min_overlap {
            return Err(Error::BranchLoss { t: delta, overlap: cos });
        }
        let mut fd: Vec<f64> = (0..m).map(|j| (lp[j] - lm[pi[j]]) / (2.0 * delta)).collect();
        fd.sort_by(f64::total_cmp);
        let rel_err = fd.iter().zip(&formula).map(|(x, y)| relative_error(*x, *y, scale)).collect();
        let mut cross_ratio = 0.0f64;
        if m > 1 {
            let w = combine(&fields, &a);
            let rho: Vec<_> = w.iter().map(|x| cross_density(cc, &ctx, x, x)).collect();
            for i in 0..m {
                for j in i + 1..m {
                    let num = lambda * cross_density(cc, &ctx, &w[i], &w[j]).integrate(&speed);
                    let den: f64 = rho[i]
                        .vertices
                        .iter()
                        .enumerate()
                        .map(|(b, &v)| {
                            speed[v].abs() * (rho[i].nodal[b] * rho[j].nodal[b]).abs().sqrt() * rho[i].areas[b]
                        })
                        .sum::<f64>()
                        * lambda.abs();
                    if den > 0.0 {
                        cross_ratio = cross_ratio.max(num.abs() / den);
                    }
                }
            }
        }
        sweep.push(FdRow { delta, fd, rel_err, overlap: cos, cross_ratio });
    }
    let diffs: Vec<f64> = sweep
        .windows(2)
        .map(|w| w[0].fd.iter().zip(&w[1].fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .collect();
    let orders = diffs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let best = sweep
        .iter()
        .min_by(|a, b| {
            let ea = a.rel_err.iter().fold(0.0f64, |x, y| x.max(*y));
            let eb = b.rel_err.iter().fold(0.0f64, |x, y| x.max(*y));
            ea.total_cmp(&eb)
        })
        .ok_or_else(|| Error::InvalidParameter("empty step sweep".into()))?;
    Ok(FdReport {
        eigenvalues: vals,
        lambda,
        multiplicity: m,
        method: opts.method,
        formula,
        volume_formula,
        scale,
        rel_error: best.rel_err.iter().fold(0.0, |x, y| x.max(*y)),
        best_delta: best.delta,
        cross_ratio: best.cross_ratio,
        orders,
        sweep,
    })
}
