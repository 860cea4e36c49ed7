//! Homology of the boundary surface: cycle bases (α, β), cut surfaces Σ,
//! the intersection form, and cocycles dual to the cycle basis.

use super::snf::{smith_normal_form, sparse_rank};
use super::{triangle_wedge, CochainComplex};
use crate::linalg::cg;
use crate::sparse::{dot, Cholesky, Csr};
use crate::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;
use std::collections::VecDeque;

/// Sparse chain: (simplex index, coefficient).
pub type Chain = Vec<(usize, f64)>;

#[derive(Clone, Debug, Serialize)]
pub struct HomologyBasis {
    /// Total boundary genus ℓ.
    pub genus: usize,
    pub genus_per_component: Vec<usize>,
    pub alpha_cycles: Vec<Chain>,
    pub beta_cycles: Vec<Chain>,
    /// Interior face chains with ∂Σ_j homologous to α_j on the boundary.
    pub cut_surfaces: Vec<Chain>,
    /// Algebraic intersection numbers on ∂D (outward orientation) of the
    /// cycles (α_1..α_ℓ, β_1..β_ℓ).
    pub intersection_matrix: Vec<Vec<i64>>,
    pub from_tags: bool,
    #[serde(skip)]
    pub cohomology: BoundaryCohomology,
}

#[derive(Clone, Debug, Default)]
pub struct BoundaryCohomology {
    /// Edge cocycles supported on boundary edges; cocycle a has period 1 on
    /// cycle a and 0 on the others (cycles ordered α then β).
    pub dual_cocycles: Vec<Vec<f64>>,
    /// W_ab = ∫_∂D η_a ∧ η_b.
    pub wedge: Vec<Vec<f64>>,
}

impl BoundaryCohomology {
    /// Boundary cocycle with the given period vector.
    pub fn cocycle(&self, periods: &[f64]) -> Vec<f64> {
        let n = self.dual_cocycles.first().map_or(0, |c| c.len());
        let mut out = vec![0.0; n];
        for (p, c) in periods.iter().zip(&self.dual_cocycles) {
            if *p != 0.0 {
                crate::sparse::axpy(*p, c, &mut out);
            }
        }
        out
    }
}

impl HomologyBasis {
    pub fn dimension(&self) -> usize {
        2 * self.genus
    }

    /// Cycles in basis order: α_1..α_ℓ, β_1..β_ℓ.
    pub fn cycles(&self) -> impl Iterator<Item = &Chain> {
        self.alpha_cycles.iter().chain(self.beta_cycles.iter())
    }
}

/// Signed sums of an edge cochain over the basis cycles (α then β).
pub fn period_vector(basis: &HomologyBasis, v: &[f64]) -> Vec<f64> {
    basis.cycles().map(|c| c.iter().map(|&(e, s)| s * v[e]).sum()).collect()
}

/// Signed sums of a face cochain over the cut surfaces.
pub fn flux_vector(basis: &HomologyBasis, u: &[f64]) -> Vec<f64> {
    basis.cut_surfaces.iter().map(|c| c.iter().map(|&(f, s)| s * u[f]).sum()).collect()
}

/// ∫_∂D ι*a ∧ ι*b for Whitney 1-forms with edge values `a`, `b`, using the
/// outward orientation of the boundary.
pub fn boundary_wedge(cc: &CochainComplex, a: &[f64], b: &[f64]) -> f64 {
    let mut total = 0.0;
    for f in &cc.mesh.boundary_faces {
        let mut va = [0.0; 3];
        let mut vb = [0.0; 3];
        for k in 0..3 {
            let (e, s) = cc.edge(f[k], f[(k + 1) % 3]).expect("boundary edge");
            va[k] = s * a[e];
            vb[k] = s * b[e];
        }
        total += triangle_wedge(va, vb);
    }
    total
}

fn sparsify(v: &[f64]) -> Chain {
    v.iter().enumerate().filter(|(_, &x)| x != 0.0).map(|(i, &x)| (i, x)).collect()
}

/// Minimal-energy extension of boundary edge cochains into the interior:
/// `min ‖d1(η + x)‖_W` over cochains x supported on the interior cotree.
/// The residual vanishes exactly when η is the trace of a closed cochain.
pub struct ClosedExtension {
    pub cotree: Vec<usize>,
    /// d1 restricted to cotree columns.
    pub d1c: Csr,
    weight: Csr,
    chol: Option<Cholesky>,
}

impl ClosedExtension {
    pub fn new(cc: &CochainComplex, weight: &Csr) -> Result<ClosedExtension> {
        let cotree = cc.interior_cotree();
        let rows: Vec<usize> = (0..cc.num_faces()).collect();
        let d1c = cc.d1.submatrix(&rows, &cotree);
        let chol = if cotree.is_empty() { None } else { Some(Cholesky::new(&weight.congruence(&d1c))?) };
        Ok(ClosedExtension { cotree, d1c, weight: weight.clone(), chol })
    }

    /// Returns the extended edge cochain and its face residual d1(η + x).
    pub fn extend(&self, cc: &CochainComplex, eta: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let rhs: Vec<Vec<f64>> = eta
            .iter()
            .map(|e| {
                let r = self.weight.mul_vec(&cc.d1.mul_vec(e));
                self.d1c.tmul_vec(&r).into_iter().map(|x| -x).collect()
            })
            .collect();
        let xs = match &self.chol {
            Some(c) => c.solve_block(&rhs),
            None => rhs.clone(),
        };
        let mut ext = Vec::with_capacity(eta.len());
        let mut res = Vec::with_capacity(eta.len());
        for (e, x) in eta.iter().zip(&xs) {
            let mut z = e.clone();
            for (k, &c) in self.cotree.iter().enumerate() {
                z[c] += x[k];
            }
            res.push(cc.d1.mul_vec(&z));
            ext.push(z);
        }
        (ext, res)
    }
}

/// Tree–cotree decomposition of the boundary surface.
struct SurfaceTreeCotree {
    /// Generator cycles as dense edge chains, and their dual cocycles
    /// (⟨η_g, γ_h⟩ = δ_gh).
    cycles: Vec<Vec<f64>>,
    cocycles: Vec<Vec<f64>>,
}

fn surface_tree_cotree(cc: &CochainComplex) -> SurfaceTreeCotree {
    let nv = cc.num_vertices();
    let ne = cc.num_edges();
    // primal spanning forest (BFS)
    let mut adj: Vec<Vec<(usize, usize)>> = vec![vec![]; nv];
    for &e in &cc.boundary_edges {
        let [a, b] = cc.edges[e];
        adj[a].push((b, e));
        adj[b].push((a, e));
    }
    let mut parent_edge = vec![usize::MAX; nv];
    let mut visited = vec![false; nv];
    let mut in_tree = vec![false; ne];
    for &r in &cc.boundary_vertices {
        if visited[r] {
            continue;
        }
        visited[r] = true;
        let mut q = VecDeque::from([r]);
        while let Some(x) = q.pop_front() {
            for &(y, e) in &adj[x] {
                if !visited[y] {
                    visited[y] = true;
                    parent_edge[y] = e;
                    in_tree[e] = true;
                    q.push_back(y);
                }
            }
        }
    }
    // dual spanning forest over boundary faces across non-tree edges
    let nbf = cc.boundary_faces.len();
    let mut edge_faces: Vec<Vec<usize>> = vec![vec![]; ne];
    for (k, &(f, _)) in cc.boundary_faces.iter().enumerate() {
        for (e, _) in cc.d1.row(f) {
            edge_faces[e].push(k);
        }
    }
    let mut in_dual = vec![false; ne];
    let mut face_parent = vec![usize::MAX; nbf];
    let mut seen = vec![false; nbf];
    let mut order = Vec::with_capacity(nbf);
    for r in 0..nbf {
        if seen[r] {
            continue;
        }
        seen[r] = true;
        let mut q = VecDeque::from([r]);
        while let Some(k) = q.pop_front() {
            order.push(k);
            for (e, _) in cc.d1.row(cc.boundary_faces[k].0) {
                if in_tree[e] {
                    continue;
                }
                for &k2 in &edge_faces[e] {
                    if !seen[k2] {
                        seen[k2] = true;
                        face_parent[k2] = e;
                        in_dual[e] = true;
                        q.push_back(k2);
                    }
                }
            }
        }
    }
    let generators: Vec<usize> = cc.boundary_edges.iter().copied().filter(|&e| !in_tree[e] && !in_dual[e]).collect();

    let path_to_root = |mut x: usize, sign: f64, chain: &mut [f64]| {
        while parent_edge[x] != usize::MAX {
            let e = parent_edge[x];
            let [a, b] = cc.edges[e];
            let (y, s) = if x == a { (b, 1.0) } else { (a, -1.0) };
            chain[e] += sign * s;
            x = y;
        }
    };
    let mut cycles = Vec::with_capacity(generators.len());
    let mut cocycles = Vec::with_capacity(generators.len());
    for &g in &generators {
        let [a, b] = cc.edges[g];
        let mut c = vec![0.0; ne];
        c[g] = 1.0;
        path_to_root(b, 1.0, &mut c);
        path_to_root(a, -1.0, &mut c);
        cycles.push(c);

        let mut eta = vec![0.0; ne];
        eta[g] = 1.0;
        for &k in order.iter().rev() {
            let p = face_parent[k];
            if p == usize::MAX {
                continue;
            }
            let f = cc.boundary_faces[k].0;
            let mut s = 0.0;
            let mut coef = 0.0;
            for (e, d) in cc.d1.row(f) {
                if e == p {
                    coef = d;
                } else {
                    s += d * eta[e];
                }
            }
            eta[p] = -s / coef;
        }
        cocycles.push(eta);
    }
    SurfaceTreeCotree { cycles, cocycles }
}

/// Rank of H₁(∂D) from integer ranks of the boundary incidence matrices.
fn boundary_betti1(cc: &CochainComplex) -> usize {
    let mut vpos = vec![usize::MAX; cc.num_vertices()];
    for (k, &v) in cc.boundary_vertices.iter().enumerate() {
        vpos[v] = k;
    }
    let d1_rows: Vec<Vec<(usize, i64)>> = cc
        .boundary_edges
        .iter()
        .map(|&e| {
            let [a, b] = cc.edges[e];
            vec![(vpos[a], -1), (vpos[b], 1)]
        })
        .collect();
    let d2_rows: Vec<Vec<(usize, i64)>> =
        cc.boundary_faces.iter().map(|&(f, _)| cc.d1.row(f).map(|(e, x)| (e, x as i64)).collect()).collect();
    cc.boundary_edges.len() - sparse_rank(&d1_rows) - sparse_rank(&d2_rows)
}

fn round_matrix(m: &DMatrix<f64>, tol: f64) -> Option<Vec<Vec<i64>>> {
    let mut out = vec![vec![0i64; m.ncols()]; m.nrows()];
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let r = m[(i, j)].round();
            if (m[(i, j)] - r).abs() > tol {
                return None;
            }
            out[i][j] = r as i64;
        }
    }
    Some(out)
}

/// Best rational approximation with denominator at most `max_den`.
fn rationalize(x: f64, max_den: i64) -> (i64, i64) {
    let (mut h0, mut h1, mut k0, mut k1) = (0i64, 1i64, 1i64, 0i64);
    let mut y = x;
    for _ in 0..40 {
        let a = y.floor();
        let (h2, k2) = (a as i64 * h1 + h0, a as i64 * k1 + k0);
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = y - a;
        if frac.abs() < 1e-12 {
            break;
        }
        y = 1.0 / frac;
    }
    (h1, k1)
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Builds the boundary homology basis. Meshes tagged with `alpha_j`,
/// `beta_j`, `cut_j` for j = 1..ℓ use the tags; otherwise the basis is
/// computed: bounding cycles are the annihilator of the classes that extend
/// closed into D, found exactly via Smith normal form.
pub fn homology_basis(cc: &CochainComplex) -> Result<HomologyBasis> {
    let chis = cc.mesh.boundary_euler_characteristics();
    let genus_per_component: Vec<usize> = chis.iter().map(|&c| ((2 - c) / 2).max(0) as usize).collect();
    let genus: usize = genus_per_component.iter().sum();
    let betti = boundary_betti1(cc);
    if betti != 2 * genus {
        return Err(Error::HomologyRankMismatch { expected: 2 * genus, found: betti });
    }
    let tc = surface_tree_cotree(cc);
    if tc.cycles.len() != 2 * genus {
        return Err(Error::HomologyRankMismatch { expected: 2 * genus, found: tc.cycles.len() });
    }
    let tagged = genus > 0
        && (1..=genus).all(|j| {
            let m = &cc.mesh;
            m.curve_tags.contains_key(&format!("alpha_{j}"))
                && m.curve_tags.contains_key(&format!("beta_{j}"))
                && m.surface_tags.contains_key(&format!("cut_{j}"))
        });
    let (alphas, betas, cuts) = if genus == 0 {
        (vec![], vec![], vec![])
    } else if tagged {
        tagged_cycles(cc, genus)?
    } else {
        computed_cycles(cc, &tc, genus)?
    };

    // periods of the generator cocycles on the chosen cycles
    let cycles: Vec<&Vec<f64>> = alphas.iter().chain(betas.iter()).collect();
    let n = 2 * genus;
    let p = DMatrix::from_fn(n, n, |g, a| dot(&tc.cocycles[g], cycles[a]));
    let p_int = round_matrix(&p, 1e-8).ok_or_else(|| Error::InvalidParameter("cycle periods are not integral".into()))?;
    let s = smith_normal_form(&p_int);
    if s.rank() != n || !s.is_unimodular_on_rank() {
        return Err(Error::HomologyRankMismatch { expected: n, found: s.d.iter().filter(|&&d| d == 1).count() });
    }
    // dual cocycles: X = P^{-T}
    let x = p.clone().try_inverse().expect("unimodular").transpose();
    let ne = cc.num_edges();
    let dual: Vec<Vec<f64>> = (0..n)
        .map(|a| {
            let mut c = vec![0.0; ne];
            for g in 0..n {
                let coef = x[(g, a)].round();
                if coef != 0.0 {
                    crate::sparse::axpy(coef, &tc.cocycles[g], &mut c);
                }
            }
            c
        })
        .collect();
    let w = DMatrix::from_fn(n, n, |a, b| if a < b { boundary_wedge(cc, &dual[a], &dual[b]) } else { 0.0 });
    let w = &w - w.transpose();
    let omega = if n == 0 {
        vec![]
    } else {
        let wi = w.clone().try_inverse().ok_or(Error::HomologyRankMismatch { expected: n, found: 0 })?;
        round_matrix(&wi.transpose(), 1e-6)
            .ok_or_else(|| Error::InvalidParameter("intersection form is not integral".into()))?
    };
    let wedge = (0..n).map(|a| (0..n).map(|b| w[(a, b)]).collect()).collect();
    Ok(HomologyBasis {
        genus,
        genus_per_component,
        alpha_cycles: alphas.iter().map(|c| sparsify(c)).collect(),
        beta_cycles: betas.iter().map(|c| sparsify(c)).collect(),
        cut_surfaces: cuts.iter().map(|c| sparsify(c)).collect(),
        intersection_matrix: omega,
        from_tags: tagged,
        cohomology: BoundaryCohomology { dual_cocycles: dual, wedge },
    })
}

type Cycles = (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>);

fn tagged_cycles(cc: &CochainComplex, genus: usize) -> Result<Cycles> {
    let m = &cc.mesh;
    let mut alphas = Vec::new();
    let mut betas = Vec::new();
    let mut cuts = Vec::new();
    for j in 1..=genus {
        let a = cc.edge_chain(&m.curve_tags[&format!("alpha_{j}")])?;
        let b = cc.edge_chain(&m.curve_tags[&format!("beta_{j}")])?;
        let mut s = cc.face_chain(&m.surface_tags[&format!("cut_{j}")])?;
        let ds = cc.d1.tmul_vec(&s);
        let same = ds.iter().zip(&a).all(|(x, y)| x == y);
        let opposite = ds.iter().zip(&a).all(|(x, y)| *x == -y);
        if opposite && !same {
            s.iter_mut().for_each(|x| *x = -*x);
        } else if !same {
            return Err(Error::InvalidParameter(format!("boundary of cut_{j} is not alpha_{j}")));
        }
        alphas.push(a);
        betas.push(b);
        cuts.push(s);
    }
    Ok((alphas, betas, cuts))
}

fn computed_cycles(cc: &CochainComplex, tc: &SurfaceTreeCotree, genus: usize) -> Result<Cycles> {
    let n = 2 * genus;
    let ext = ClosedExtension::new(cc, &Csr::identity(cc.num_faces()))?;
    let (_, res) = ext.extend(cc, &tc.cocycles);
    let g = DMatrix::from_fn(n, n, |a, b| dot(&res[a], &res[b]));
    let eig = SymmetricEigen::new(g.clone());
    let scale = eig.eigenvalues.amax().max(1e-300);
    let null: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i].abs() < 1e-9 * scale).collect();
    if null.len() != genus {
        return Err(Error::HomologyRankMismatch { expected: genus, found: null.len() });
    }
    // projector onto the annihilator of the extendable classes
    let nb = DMatrix::from_fn(n, genus, |i, k| eig.eigenvectors[(i, null[k])]);
    let proj = DMatrix::identity(n, n) - &nb * nb.transpose();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let fr: Vec<(i64, i64)> = (0..n).map(|j| rationalize(proj[(i, j)], 1000)).collect();
        let l = fr.iter().fold(1i64, |acc, &(_, d)| acc / gcd(acc, d) * d);
        rows.push(fr.iter().map(|&(h, d)| h * (l / d)).collect::<Vec<i64>>());
    }
    let s = smith_normal_form(&rows);
    if s.rank() != genus {
        return Err(Error::HomologyRankMismatch { expected: genus, found: s.rank() });
    }
    let basis = s.v_inv[..genus].to_vec();
    let combine = |coef: &[i128]| {
        let mut c = vec![0.0; cc.num_edges()];
        for (k, &x) in coef.iter().enumerate() {
            if x != 0 {
                crate::sparse::axpy(x as f64, &tc.cycles[k], &mut c);
            }
        }
        c
    };
    let mut alphas = Vec::new();
    let mut cuts = Vec::new();
    for y in &basis {
        let yf: Vec<f64> = y.iter().map(|&x| x as f64).collect();
        let defect = (nb.transpose() * DMatrix::from_column_slice(n, 1, &yf)).norm();
        if defect > 1e-8 * yf.iter().map(|x| x * x).sum::<f64>().sqrt() {
            return Err(Error::HomologyRankMismatch { expected: genus, found: 0 });
        }
        let alpha = combine(y);
        // face chain c with ∂c = α, least-norm; keep its interior part
        let apply = |z: &[f64]| cc.d1.tmul_vec(&cc.d1.mul_vec(z));
        let (z, resid) = cg(apply, &alpha, 1e-12, 20 * cc.num_edges());
        if resid > 1e-8 {
            return Err(Error::SolverFailure { residual: resid });
        }
        let mut c = cc.d1.mul_vec(&z);
        for (f, x) in c.iter_mut().enumerate() {
            if cc.is_boundary_face[f] || x.abs() < 1e-12 {
                *x = 0.0;
            }
        }
        alphas.push(alpha);
        cuts.push(c);
    }
    let betas = s.v_inv[genus..n].iter().map(|y| combine(y)).collect();
    Ok((alphas, betas, cuts))
}
