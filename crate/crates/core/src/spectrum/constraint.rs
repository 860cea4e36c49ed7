use super::lagrangian::LagrangianSpec;
use crate::complex::homology::ClosedExtension;
use crate::complex::{flux_vector, period_vector, CochainComplex, HomologyBasis};
use crate::linalg::sym_eigen;
use crate::sparse::{dot, Cholesky, Csr};
use crate::{Error, Result};
use nalgebra::DMatrix;

/// Element-assembled curl matrices on edge cochains.
#[derive(Clone, Debug)]
pub struct CurlMatrices {
    /// C_ij = ∫ curl φ_j · φ_i
    pub c: Csr,
    pub c_sym: Csr,
    /// C − Cᵀ; supported on boundary edge pairs, equal to minus the
    /// boundary wedge pairing of tangential traces.
    pub skew: Csr,
    /// ∫ curl φ_i · curl φ_j = d1ᵀ M2 d1
    pub stiffness: Csr,
}

pub fn assemble_curl(cc: &CochainComplex) -> CurlMatrices {
    let locals = cc.local_matrices();
    let c = cc.scatter_edges(&locals, |l| &l.c);
    let stiffness = cc.scatter_edges(&locals, |l| &l.k);
    let ct = c.transpose();
    CurlMatrices { c_sym: c.axpby(0.5, &ct, 0.5), skew: c.axpby(1.0, &ct, -1.0), c, stiffness }
}

/// Removes the discrete gradient part of edge cochains: v ↦ v − d0φ with
/// d0ᵀM1(v − d0φ) = 0 against all vertex functions.
pub struct Coulomb {
    keep: Vec<usize>,
    chol: Cholesky,
}

impl Coulomb {
    pub fn new(cc: &CochainComplex) -> Result<Coulomb> {
        let l0 = cc.m1.congruence(&cc.d0);
        // one pinned vertex per connected component
        let nv = cc.num_vertices();
        let mut parent: Vec<usize> = (0..nv).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &[a, b] in &cc.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
        let mut pinned = std::collections::HashSet::new();
        let mut keep = Vec::with_capacity(nv);
        for v in 0..nv {
            if pinned.insert(find(&mut parent, v)) {
                continue;
            }
            keep.push(v);
        }
        let chol = Cholesky::new(&l0.submatrix(&keep, &keep))?;
        Ok(Coulomb { keep, chol })
    }

    pub fn project(&self, cc: &CochainComplex, vs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let rhs: Vec<Vec<f64>> = vs
            .iter()
            .map(|v| {
                let g = cc.d0.tmul_vec(&cc.m1.mul_vec(v));
                self.keep.iter().map(|&i| g[i]).collect()
            })
            .collect();
        let phis = self.chol.solve_block(&rhs);
        vs.iter()
            .zip(phis)
            .map(|(v, phi)| {
                let mut full = vec![0.0; cc.num_vertices()];
                for (k, &i) in self.keep.iter().enumerate() {
                    full[i] = phi[k];
                }
                let dp = cc.d0.mul_vec(&full);
                v.iter().zip(&dp).map(|(a, b)| a - b).collect()
            })
            .collect()
    }

    /// max |d0ᵀ M1 v| relative to ‖M1 v‖.
    pub fn divergence_defect(&self, cc: &CochainComplex, v: &[f64]) -> f64 {
        let mv = cc.m1.mul_vec(v);
        let g = cc.d0.tmul_vec(&mv);
        g.iter().fold(0.0f64, |a, x| a.max(x.abs())) / mv.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1e-300)
    }
}

/// M1-orthonormalises edge cochains (modified Gram–Schmidt, dropping
/// dependent vectors).
pub fn m1_orthonormalize(cc: &CochainComplex, vs: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut mout: Vec<Vec<f64>> = Vec::new();
    for mut v in vs {
        let n0 = dot(&v, &cc.m1.mul_vec(&v)).sqrt();
        for _ in 0..2 {
            for (o, mo) in out.iter().zip(&mout) {
                let c = dot(mo, &v);
                crate::sparse::axpy(-c, o, &mut v);
            }
        }
        let mv = cc.m1.mul_vec(&v);
        let n = dot(&v, &mv).sqrt();
        if n > 1e-8 * n0 {
            out.push(v.iter().map(|x| x / n).collect());
            mout.push(mv.iter().map(|x| x / n).collect());
        }
    }
    out
}

/// Discrete harmonic fields: closed, co-closed, boundary-tangent.
#[derive(Clone, Debug)]
pub struct HarmonicFields {
    pub dimension: usize,
    /// M2-orthonormal face cochains spanning the harmonic 2-forms.
    pub faces: Vec<Vec<f64>>,
    /// M1-orthonormal edge proxies: closed extensions of the boundary
    /// classes in L_D, orthogonal to gradients.
    pub proxies: Vec<Vec<f64>>,
    /// Flux of the face basis through the cut surfaces, ℓ × dimension.
    pub flux_matrix: Vec<Vec<f64>>,
    pub flux_condition: f64,
    /// Orthonormal basis (period coordinates) of L_D, the boundary classes
    /// of closed forms on D.
    pub ld_basis: DMatrix<f64>,
    pub gram_eigenvalues: Vec<f64>,
}

/// Harmonic fields from the minimal-energy extensions of all boundary
/// classes: the extension energy vanishes on L_D and its range is the
/// harmonic space.
pub fn harmonic_fields(cc: &CochainComplex, basis: &HomologyBasis) -> Result<HarmonicFields> {
    let ext = ClosedExtension::new(cc, &cc.m2)?;
    let coulomb = Coulomb::new(cc)?;
    harmonic_fields_with(cc, basis, &ext, &coulomb)
}

pub(crate) fn harmonic_fields_with(
    cc: &CochainComplex,
    basis: &HomologyBasis,
    ext: &ClosedExtension,
    coulomb: &Coulomb,
) -> Result<HarmonicFields> {
    let l = basis.genus;
    let n = 2 * l;
    if l == 0 {
        return Ok(HarmonicFields {
            dimension: 0,
            faces: vec![],
            proxies: vec![],
            flux_matrix: vec![],
            flux_condition: 1.0,
            ld_basis: DMatrix::zeros(0, 0),
            gram_eigenvalues: vec![],
        });
    }
    let (_, res) = ext.extend(cc, &basis.cohomology.dual_cocycles);
    let mres: Vec<Vec<f64>> = res.iter().map(|r| cc.m2.mul_vec(r)).collect();
    let g = DMatrix::from_fn(n, n, |a, b| dot(&res[a], &mres[b]));
    let (vals, vecs) = sym_eigen(&g);
    let top = vals.last().copied().unwrap_or(0.0).max(1e-300);
    let range: Vec<usize> = (0..n).filter(|&i| vals[i] > 1e-8 * top).collect();
    let null: Vec<usize> = (0..n).filter(|&i| vals[i] <= 1e-8 * top).collect();
    if range.len() != l {
        return Err(Error::DimensionMismatch { expected: l, found: range.len() });
    }
    if null.len() != l {
        return Err(Error::DimensionMismatch { expected: l, found: n - null.len() });
    }
    let faces: Vec<Vec<f64>> = range
        .iter()
        .map(|&k| {
            let mut h = vec![0.0; cc.num_faces()];
            for a in 0..n {
                crate::sparse::axpy(vecs[(a, k)] / vals[k].sqrt(), &res[a], &mut h);
            }
            h
        })
        .collect();
    let flux: Vec<Vec<f64>> = faces.iter().map(|h| flux_vector(basis, h)).collect();
    let fm = DMatrix::from_fn(l, l, |j, k| flux[k][j]);
    let sv = fm.clone().svd(false, false).singular_values;
    let flux_condition = if sv.min() > 0.0 { sv.max() / sv.min() } else { f64::INFINITY };
    let ld_basis = DMatrix::from_fn(n, l, |a, k| vecs[(a, null[k])]);
    let proxies = closed_proxies(cc, basis, ext, coulomb, &ld_basis);
    if proxies.len() != l {
        return Err(Error::DimensionMismatch { expected: l, found: proxies.len() });
    }
    Ok(HarmonicFields {
        dimension: l,
        faces,
        proxies,
        flux_matrix: (0..l).map(|j| (0..l).map(|k| fm[(j, k)]).collect()).collect(),
        flux_condition,
        ld_basis,
        gram_eigenvalues: vals,
    })
}

/// Closed, gradient-free edge cochains with boundary classes given by the
/// columns of `classes` (which must lie in L_D), M1-orthonormalised.
pub(crate) fn closed_proxies(
    cc: &CochainComplex,
    basis: &HomologyBasis,
    ext: &ClosedExtension,
    coulomb: &Coulomb,
    classes: &DMatrix<f64>,
) -> Vec<Vec<f64>> {
    if classes.ncols() == 0 {
        return vec![];
    }
    let etas: Vec<Vec<f64>> = (0..classes.ncols())
        .map(|k| basis.cohomology.cocycle(classes.column(k).as_slice()))
        .collect();
    let (z, _) = ext.extend(cc, &etas);
    m1_orthonormalize(cc, coulomb.project(cc, &z))
}

/// Everything the eigensolver needs for one boundary condition.
pub struct ConstraintHandle {
    pub genus: usize,
    pub lagrangian: LagrangianSpec,
    pub f: DMatrix<f64>,
    /// Orthonormal bases in period coordinates.
    pub l_basis: DMatrix<f64>,
    pub kernel_classes: DMatrix<f64>,
    /// Boundary classes κ_i spanning π_Q(L) and their lifts ψ_i ∈ L.
    pub kappa: Vec<Vec<f64>>,
    pub psi: Vec<Vec<f64>>,
    pub cotree: Vec<usize>,
    /// Unknowns (cotree potentials, κ coordinates) → edge potential ζ.
    pub p: Csr,
    /// Closed extensions of ψ_i − κ_i, added to ζ to form the potential
    /// whose boundary class lies in L.
    pub gamma: Vec<Vec<f64>>,
    /// Reduced pencil K x = λ S x.
    pub k: Csr,
    pub s: Csr,
    /// max |T − Tᵀ| / max |T| of the unsymmetrised curl form; zero for a
    /// Lagrangian boundary condition.
    pub asymmetry: f64,
    pub isotropic: bool,
    pub curl: CurlMatrices,
    pub harmonic: HarmonicFields,
    /// Edge proxies of harmonic fields in the kernel (class in L ∩ L_D).
    pub kernel_proxies: Vec<Vec<f64>>,
    pub(crate) coulomb: Coulomb,
}

impl ConstraintHandle {
    pub fn num_unknowns(&self) -> usize {
        self.p.ncols
    }

    /// Dimension of the harmonic kernel retained by this boundary condition.
    pub fn kernel_dimension(&self) -> usize {
        self.kernel_classes.ncols()
    }
}

fn orthonormal_columns(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.unwrap();
    let top = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > tol * top.max(1.0)).collect();
    DMatrix::from_fn(m.nrows(), keep.len(), |i, k| u[(i, keep[k])])
}

fn null_space(m: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    if m.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    let (vals, vecs) = sym_eigen(&(m.transpose() * m));
    let top = vals.last().copied().unwrap_or(0.0).max(1e-300);
    let keep: Vec<usize> = (0..n).filter(|&i| vals[i] <= 1e-14 * top.max(1.0)).collect();
    DMatrix::from_fn(n, keep.len(), |i, k| vecs[(i, keep[k])])
}

/// Validates the Lagrangian against the intersection form and builds the
/// constrained pencil.
pub fn constraint_space(cc: &CochainComplex, basis: &HomologyBasis, lag: &LagrangianSpec) -> Result<ConstraintHandle> {
    lag.validate(basis)?;
    constraint_space_unchecked(cc, basis, lag)
}

/// As [`constraint_space`] without the Lagrangian checks; a non-isotropic
/// F yields a non-symmetric curl form, which is symmetrised. Used as a
/// negative control.
pub fn constraint_space_unchecked(
    cc: &CochainComplex,
    basis: &HomologyBasis,
    lag: &LagrangianSpec,
) -> Result<ConstraintHandle> {
    let l = basis.genus;
    let n = 2 * l;
    let f = lag.matrix(l)?;
    let ext = ClosedExtension::new(cc, &cc.m2)?;
    let coulomb = Coulomb::new(cc)?;
    let harmonic = harmonic_fields_with(cc, basis, &ext, &coulomb)?;

    let l_basis = null_space(&f, n);
    let ld = &harmonic.ld_basis;
    let proj_q = DMatrix::identity(n, n) - ld * ld.transpose();
    let ql = &proj_q * &l_basis;
    let e_basis = orthonormal_columns(&ql, 1e-10);
    let kernel_coords = null_space(&ql, l_basis.ncols());
    let kernel_classes = orthonormal_columns(&(&l_basis * kernel_coords), 1e-10);
    let mut kappa = Vec::new();
    let mut psi = Vec::new();
    if e_basis.ncols() > 0 {
        let pinv = ql.clone().pseudo_inverse(1e-10).map_err(|e| Error::InconsistentLagrangian(e.to_string()))?;
        for i in 0..e_basis.ncols() {
            let e = e_basis.column(i).into_owned();
            let c = &pinv * &e;
            kappa.push(e.as_slice().to_vec());
            psi.push((&l_basis * c).as_slice().to_vec());
        }
    }

    let cotree = ext.cotree.clone();
    let nc = cotree.len();
    let ne_ = kappa.len();
    let ne = cc.num_edges();
    let mut trip: Vec<(usize, usize, f64)> = cotree.iter().enumerate().map(|(k, &e)| (e, k, 1.0)).collect();
    let mut psi_trip = Vec::new();
    let mut gamma = Vec::with_capacity(ne_);
    for i in 0..ne_ {
        let kt = basis.cohomology.cocycle(&kappa[i]);
        for (e, &x) in kt.iter().enumerate() {
            if x != 0.0 {
                trip.push((e, nc + i, x));
            }
        }
        let pt = basis.cohomology.cocycle(&psi[i]);
        for (e, &x) in pt.iter().enumerate() {
            if x != 0.0 {
                psi_trip.push((e, nc + i, x));
            }
        }
        let diff: Vec<f64> = psi[i].iter().zip(&kappa[i]).map(|(a, b)| a - b).collect();
        let (z, r) = ext.extend(cc, &[basis.cohomology.cocycle(&diff)]);
        let rn = dot(&r[0], &cc.m2.mul_vec(&r[0])).sqrt();
        if rn > 1e-8 * (1.0 + dot(&z[0], &z[0]).sqrt()) {
            return Err(Error::SolverFailure { residual: rn });
        }
        gamma.push(z.into_iter().next().unwrap());
    }
    let p = Csr::from_triplets(ne, nc + ne_, &trip);
    let psi_map = Csr::from_triplets(ne, nc + ne_, &psi_trip);
    let curl = assemble_curl(cc);
    let k = curl.stiffness.congruence(&p);
    let pt = p.transpose();
    let t1 = pt.matmul(&curl.c.matmul(&p));
    let t2 = pt.matmul(&curl.skew.matmul(&psi_map));
    let t = t1.axpby(1.0, &t2, -1.0);
    let tt = t.transpose();
    let asymmetry = t.axpby(1.0, &tt, -1.0).max_abs() / t.max_abs().max(1e-300);
    let s = t.axpby(0.5, &tt, 0.5);
    let kernel_proxies = closed_proxies(cc, basis, &ext, &coulomb, &kernel_classes);
    let isotropic = lag.validate(basis).is_ok();
    Ok(ConstraintHandle {
        genus: l,
        lagrangian: lag.clone(),
        f,
        l_basis,
        kernel_classes,
        kappa,
        psi,
        cotree,
        p,
        gamma,
        k,
        s,
        asymmetry,
        isotropic,
        curl,
        harmonic,
        kernel_proxies,
        coulomb,
    })
}

/// Periods of an edge cochain under F: the Lagrangian constraint values.
pub fn lagrangian_violation(handle: &ConstraintHandle, basis: &HomologyBasis, v: &[f64]) -> f64 {
    if handle.f.nrows() == 0 {
        return 0.0;
    }
    let p = period_vector(basis, v);
    let pv = nalgebra::DVector::from_vec(p);
    (&handle.f * pv).amax()
}
