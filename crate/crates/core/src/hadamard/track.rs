use crate::mesh::{deform, DeformationField, TetMesh};
use crate::sparse::{dot, Csr};
use crate::spectrum::{Discretization, EigenResult, LagrangianSpec, SolverOptions};
use crate::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// M2 overlaps a_iᵀ M2 b_j between two sets of face cochains on meshes
/// with the same connectivity.
pub fn overlap_matrix(m2: &Csr, a: &[Vec<f64>], b: &[Vec<f64>]) -> DMatrix<f64> {
    let mb: Vec<Vec<f64>> = b.iter().map(|x| m2.mul_vec(x)).collect();
    DMatrix::from_fn(a.len(), b.len(), |i, j| dot(&a[i], &mb[j]))
}

/// Smallest singular value of a square overlap matrix: the cosine of the
/// largest principal angle between the two subspaces.
pub fn subspace_cosine(o: &DMatrix<f64>) -> f64 {
    if o.is_empty() {
        return 1.0;
    }
    o.singular_values().min()
}

/// Permutation π maximising Σ |o[i, π(i)]|. Exhaustive for small
/// clusters, greedy otherwise.
pub fn best_matching(o: &DMatrix<f64>) -> Vec<usize> {
    let m = o.nrows();
    if m <= 7 {
        let mut best = (f64::NEG_INFINITY, (0..m).collect::<Vec<_>>());
        let mut perm: Vec<usize> = (0..m).collect();
        permute(&mut perm, 0, &mut |p| {
            let s: f64 = p.iter().enumerate().map(|(i, &j)| o[(i, j)].abs()).sum();
            if s > best.0 + 1e-14 {
                best = (s, p.to_vec());
            }
        });
        return best.1;
    }
    let mut taken = vec![false; m];
    let mut out = vec![0; m];
    let mut entries: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
    entries.sort_by(|a, b| o[*b].abs().total_cmp(&o[*a].abs()));
    let mut done = vec![false; m];
    for (i, j) in entries {
        if !done[i] && !taken[j] {
            out[i] = j;
            done[i] = true;
            taken[j] = true;
        }
    }
    out
}

fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}

/// Indices of the `m` vectors of `new` with the largest projection onto
/// span(`reference`), returned in ascending index order.
pub fn select_by_projection(m2: &Csr, reference: &[Vec<f64>], new: &[Vec<f64>], m: usize) -> Vec<usize> {
    let o = overlap_matrix(m2, reference, new);
    let mut w: Vec<(usize, f64)> = (0..new.len()).map(|j| (j, o.column(j).norm_squared())).collect();
    w.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut pick: Vec<usize> = w[..m.min(new.len())].iter().map(|p| p.0).collect();
    pick.sort_unstable();
    pick
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackOptions {
    /// Extra eigenpairs solved for beyond the tracked cluster.
    pub extra: usize,
    /// Principal-angle cosine below which a step is reported as lost.
    pub min_overlap: f64,
    pub solver: SolverOptions,
}

impl Default for TrackOptions {
    fn default() -> Self {
        TrackOptions { extra: 2, min_overlap: 0.8, solver: SolverOptions::default() }
    }
}

/// Branches followed along Ω_t = (id + tX)(Ω). Branch labels are fixed at
/// the first step and kept by eigenvector overlap, so crossings stay on
/// their analytic branch.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrackedFamily {
    pub t: Vec<f64>,
    /// eigenvalues[step][branch]
    pub eigenvalues: Vec<Vec<f64>>,
    /// Subspace cosine against the previous step (1 at the first step).
    pub overlaps: Vec<f64>,
    /// Steps at which two branches swap their eigenvalue order.
    pub crossings: Vec<(usize, usize, usize)>,
    /// Face cochains of each branch at each step.
    #[serde(skip)]
    pub fields: Vec<Vec<Vec<f64>>>,
}

impl TrackedFamily {
    pub fn num_branches(&self) -> usize {
        self.eigenvalues.first().map_or(0, |e| e.len())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,branch,eigenvalue,overlap\n");
        for (k, t) in self.t.iter().enumerate() {
            for (b, l) in self.eigenvalues[k].iter().enumerate() {
                s.push_str(&format!("{t:.10e},{b},{l:.15e},{:.6}\n", self.overlaps[k]));
            }
        }
        s
    }
}

/// Solves for `k` eigenpairs near `shift` on the deformed mesh.
pub(crate) fn solve_deformed(
    mesh: &TetMesh,
    field: &DeformationField,
    t: f64,
    lag: &LagrangianSpec,
    k: usize,
    shift: f64,
    opts: &SolverOptions,
) -> Result<(Discretization, EigenResult)> {
    let moved = deform(mesh, field, t)?;
    let d = Discretization::new(&moved, lag)?;
    let r = d.solve(k, shift, opts)?;
    Ok((d, r))
}

/// Tracks the `m` eigenvalues nearest `shift` at t_grid[0] along the
/// family. Each step is shifted at the previous cluster mean times the
/// initial shift-to-mean ratio.
pub fn track_family(
    mesh: &TetMesh,
    field: &DeformationField,
    lag: &LagrangianSpec,
    shift: f64,
    m: usize,
    t_grid: &[f64],
    opts: &TrackOptions,
) -> Result<TrackedFamily> {
    if t_grid.is_empty() || m == 0 {
        return Err(Error::InvalidParameter("empty parameter grid or cluster".into()));
    }
    let k = m + opts.extra;
    let (d, r) = solve_deformed(mesh, field, t_grid[0], lag, k, shift, &opts.solver)?;
    let mut idx: Vec<usize> = (0..r.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| (r.eigenvalues[a] - shift).abs().total_cmp(&(r.eigenvalues[b] - shift).abs()));
    let mut pick = idx[..m].to_vec();
    pick.sort_unstable();
    let mut prev_vals: Vec<f64> = pick.iter().map(|&i| r.eigenvalues[i]).collect();
    let mean0 = prev_vals.iter().sum::<f64>() / m as f64;
    let ratio = if mean0 != 0.0 { shift / mean0 } else { 1.0 };
    let mut prev: Vec<Vec<f64>> = pick.iter().map(|&i| r.fields[i].clone()).collect();
    let mut prev_m2 = d.complex.m2.clone();
    let mut out = TrackedFamily {
        t: vec![t_grid[0]],
        eigenvalues: vec![prev_vals.clone()],
        overlaps: vec![1.0],
        crossings: vec![],
        fields: vec![prev.clone()],
    };
    for &t in &t_grid[1..] {
        // keep the shift's relative offset from the cluster so it never
        // lands exactly on a tracked eigenvalue
        let mean = prev_vals.iter().sum::<f64>() / m as f64;
        let (d, r) = solve_deformed(mesh, field, t, lag, k, mean * ratio, &opts.solver)?;
        let pick = select_by_projection(&prev_m2, &prev, &r.fields, m);
        let cand: Vec<Vec<f64>> = pick.iter().map(|&j| r.fields[j].clone()).collect();
        let o = overlap_matrix(&prev_m2, &prev, &cand);
        let cos = subspace_cosine(&o);
        if cos < opts.min_overlap {
            return Err(Error::BranchLoss { t, overlap: cos });
        }
        let pi = best_matching(&o);
        let mut vals = Vec::with_capacity(m);
        let mut vecs = Vec::with_capacity(m);
        for (i, &j) in pi.iter().enumerate() {
            let s = if o[(i, j)] < 0.0 { -1.0 } else { 1.0 };
            vals.push(r.eigenvalues[pick[j]]);
            vecs.push(cand[j].iter().map(|x| s * x).collect::<Vec<f64>>());
        }
        let step = out.t.len();
        for a in 0..m {
            for b in a + 1..m {
                // differences inside the cluster tolerance are ties, not order
                let tie = |x: f64, y: f64| (x - y).abs() < opts.solver.gap_tol * x.abs().max(y.abs());
                if tie(prev_vals[a], prev_vals[b]) || tie(vals[a], vals[b]) {
                    continue;
                }
                if (prev_vals[a] - prev_vals[b]).signum() * (vals[a] - vals[b]).signum() < 0.0 {
                    out.crossings.push((step, a, b));
                }
            }
        }
        out.t.push(t);
        out.eigenvalues.push(vals.clone());
        out.overlaps.push(cos);
        out.fields.push(vecs.clone());
        prev_vals = vals;
        prev = vecs;
        prev_m2 = d.complex.m2.clone();
    }
    Ok(out)
}

/// Rellich basis of a cluster from eigenvectors at ±δ.
///
/// `plus`/`minus` are cochains at t = ±δ; their projections onto the
/// t = 0 cluster `base` (M2-orthonormal) approximate the analytic branch
/// directions. Returns the coefficient matrix (columns: aligned basis in
/// terms of `base`, orthonormal), the matching π from plus to minus
/// branches, and the smallest subspace cosine.
pub fn rellich_align(
    m2: &Csr,
    base: &[Vec<f64>],
    plus: &[Vec<f64>],
    minus: &[Vec<f64>],
) -> (DMatrix<f64>, Vec<usize>, f64) {
    let ap = overlap_matrix(m2, base, plus);
    let am = overlap_matrix(m2, base, minus);
    let cos = subspace_cosine(&ap).min(subspace_cosine(&am));
    let pm = ap.transpose() * &am;
    let pi = best_matching(&pm);
    let m = base.len();
    let mut a = DMatrix::zeros(m, m);
    for j in 0..m {
        let s = if pm[(j, pi[j])] < 0.0 { -1.0 } else { 1.0 };
        let col = ap.column(j) + s * am.column(pi[j]);
        a.set_column(j, &col);
    }
    (lowdin(&a), pi, cos)
}

/// A (AᵀA)^{-1/2}.
pub fn lowdin(a: &DMatrix<f64>) -> DMatrix<f64> {
    let g = a.transpose() * a;
    let e = g.symmetric_eigen();
    let inv_sqrt = DMatrix::from_diagonal(&e.eigenvalues.map(|x| 1.0 / x.max(1e-300).sqrt()));
    a * (&e.eigenvectors * inv_sqrt * e.eigenvectors.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matching_finds_the_permutation() {
        let o = DMatrix::from_row_slice(3, 3, &[0.1, 0.9, 0.0, 0.0, 0.2, -0.95, 0.99, 0.0, 0.1]);
        assert_eq!(best_matching(&o), vec![1, 2, 0]);
    }

    #[test]
    fn lowdin_is_orthonormal() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.1, 0.8]);
        let q = lowdin(&a);
        assert!((q.transpose() * &q - DMatrix::identity(2, 2)).norm() < 1e-12);
    }
}
