use super::constraint::{lagrangian_violation, ConstraintHandle};
use crate::complex::{flux_vector, CochainComplex, HomologyBasis};
use crate::linalg::{block_lanczos, LanczosOptions};
use crate::sparse::{axpy, dot, norm, Lu};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::ops::Range;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Relative residual of the shift-inverted Ritz pairs.
    pub tol: f64,
    pub block_size: usize,
    pub max_basis: usize,
    pub max_applications: usize,
    pub max_shift_retries: usize,
    /// Relative gap below which neighbouring eigenvalues form one cluster.
    pub gap_tol: f64,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            block_size: 4,
            max_basis: 120,
            max_applications: 4000,
            max_shift_retries: 5,
            gap_tol: 1e-6,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ConstraintViolation {
    /// max |d0ᵀ M1 v| / max |M1 v|
    pub divergence: f64,
    /// max |flux through the cut surfaces| (constrained for zero flux)
    pub flux: f64,
    /// max |F · periods(v)|
    pub lagrangian: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Cluster {
    pub start: usize,
    pub len: usize,
    pub mean: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenResult {
    /// Sorted ascending; units 1/length.
    pub eigenvalues: Vec<f64>,
    pub shift: f64,
    pub shift_retries: usize,
    /// ‖Kx − λSx‖ / ‖Kx‖ of the reduced pencil.
    pub residual_norms: Vec<f64>,
    pub constraint_violations: Vec<ConstraintViolation>,
    pub clusters: Vec<Cluster>,
    pub gap_tol: f64,
    pub harmonic_dimension: usize,
    /// Harmonic fields retained in the kernel by the boundary condition.
    pub lagrangian_kernel_dimension: usize,
    pub flux_condition: f64,
    /// max |v_iᵀ M1 v_j − δ_ij| over the returned proxies.
    pub orthonormality_defect: f64,
    pub operator_applications: usize,
    /// Edge proxies, M1-normalised, orthogonal to gradients and to the kernel.
    #[serde(skip)]
    pub eigenvectors: Vec<Vec<f64>>,
    /// Face cochains u = d1ζ, M2-orthonormal.
    #[serde(skip)]
    pub fields: Vec<Vec<f64>>,
    /// Reduced unknowns x with xᵀKx = 1.
    #[serde(skip)]
    pub potentials: Vec<Vec<f64>>,
    #[serde(skip)]
    pub harmonic_basis: Vec<Vec<f64>>,
}

impl EigenResult {
    /// Index of the first eigenvalue > 0.
    pub fn first_positive(&self) -> Option<usize> {
        self.eigenvalues.iter().position(|&l| l > 0.0)
    }

    pub fn cluster_of(&self, i: usize) -> Option<&Cluster> {
        self.clusters.iter().find(|c| (c.start..c.start + c.len).contains(&i))
    }

    pub fn range(c: &Cluster) -> Range<usize> {
        c.start..c.start + c.len
    }
}

/// Maximal runs of sorted eigenvalues whose consecutive relative gaps are
/// below `gap_tol`.
pub fn cluster_multiplicity(eigenvalues: &[f64], gap_tol: f64) -> Vec<Cluster> {
    let mut out: Vec<Cluster> = Vec::new();
    let mut start = 0;
    for i in 1..=eigenvalues.len() {
        let split = i == eigenvalues.len() || {
            let (a, b) = (eigenvalues[i - 1], eigenvalues[i]);
            (b - a).abs() >= gap_tol * a.abs().max(b.abs())
        };
        if split {
            let len = i - start;
            let mean = eigenvalues[start..i].iter().sum::<f64>() / len as f64;
            out.push(Cluster { start, len, mean });
            start = i;
        }
    }
    out
}

/// Gap tolerance from two refinement levels: `factor` times the Richardson
/// estimate of the fine-level error for convergence order `order`.
pub fn richardson_gap_tol(coarse: f64, fine: f64, order: f64, factor: f64) -> f64 {
    factor * (fine - coarse).abs() / (2f64.powf(order) - 1.0) / fine.abs()
}

/// The k eigenvalues nearest `shift` by shift-invert block Lanczos.
pub fn solve_spectrum(
    cc: &CochainComplex,
    basis: &HomologyBasis,
    handle: &ConstraintHandle,
    k: usize,
    shift: f64,
    opts: &SolverOptions,
) -> Result<EigenResult> {
    let n = handle.num_unknowns();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("k = {k} outside 1..={n}")));
    }
    let lopts = LanczosOptions {
        block_size: opts.block_size,
        max_basis: opts.max_basis,
        tol: opts.tol,
        max_applications: opts.max_applications,
        seed: opts.seed,
    };
    // A shift almost on an eigenvalue can stall the other Ritz pairs at a
    // roundoff floor; both that and a singular factorization move the
    // shift by 1% and retry.
    let mut sigma = shift;
    let mut retries = 0;
    let mut applications = 0;
    let lz = loop {
        let a = handle.k.axpby(1.0, &handle.s, -sigma);
        let attempt = Lu::new(&a).and_then(|lu| {
            let op = |xs: &[Vec<f64>]| {
                let sx: Vec<Vec<f64>> = xs.iter().map(|x| handle.s.mul_vec(x)).collect();
                lu.solve_block(&sx)
            };
            block_lanczos(n, op, |x| handle.k.mul_vec(x), k, &lopts)
        });
        match attempt {
            Ok(lz) => break lz,
            Err(e @ (Error::FactorizationFailure(_) | Error::NoConvergence { .. })) => {
                if let Error::NoConvergence { iterations, .. } = &e {
                    applications += iterations;
                }
                if retries >= opts.max_shift_retries {
                    return Err(e);
                }
                retries += 1;
                sigma += 0.01 * sigma.abs().max(1e-2);
            }
            Err(e) => return Err(e),
        }
    };
    let applications = applications + lz.applications;

    let mut pairs: Vec<(f64, Vec<f64>)> = lz.values.iter().zip(lz.vectors).map(|(&nu, x)| (sigma + 1.0 / nu, x)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let nc = handle.cotree.len();
    let mut eigenvalues = Vec::with_capacity(k);
    let mut residual_norms = Vec::with_capacity(k);
    let mut potentials = Vec::with_capacity(k);
    let mut fields = Vec::with_capacity(k);
    let mut raw = Vec::with_capacity(k);
    for (lam, x) in pairs {
        let kx = handle.k.mul_vec(&x);
        let mut r = kx.clone();
        axpy(-lam, &handle.s.mul_vec(&x), &mut r);
        residual_norms.push(norm(&r) / norm(&kx).max(1e-300));
        let zeta = handle.p.mul_vec(&x);
        let u = cc.d1.mul_vec(&zeta);
        let mut a = zeta;
        for (i, g) in handle.gamma.iter().enumerate() {
            axpy(x[nc + i], g, &mut a);
        }
        a.iter_mut().for_each(|t| *t *= lam);
        raw.push(a);
        eigenvalues.push(lam);
        fields.push(u);
        potentials.push(x);
    }
    let mut eigenvectors = handle.coulomb.project(cc, &raw);
    for v in eigenvectors.iter_mut() {
        for h in &handle.kernel_proxies {
            let c = dot(&cc.m1.mul_vec(h), v);
            axpy(-c, h, v);
        }
        let nv = dot(v, &cc.m1.mul_vec(v)).sqrt();
        v.iter_mut().for_each(|t| *t /= nv);
    }
    let mut orthonormality_defect = 0.0f64;
    let mv: Vec<Vec<f64>> = eigenvectors.iter().map(|v| cc.m1.mul_vec(v)).collect();
    for i in 0..k {
        for j in 0..k {
            let g = dot(&eigenvectors[i], &mv[j]) - (i == j) as i32 as f64;
            orthonormality_defect = orthonormality_defect.max(g.abs());
        }
    }
    let constraint_violations = eigenvectors
        .iter()
        .zip(&fields)
        .map(|(v, u)| ConstraintViolation {
            divergence: handle.coulomb.divergence_defect(cc, v),
            flux: flux_vector(basis, u).iter().fold(0.0f64, |a, x| a.max(x.abs())),
            lagrangian: lagrangian_violation(handle, basis, v),
        })
        .collect();
    Ok(EigenResult {
        clusters: cluster_multiplicity(&eigenvalues, opts.gap_tol),
        gap_tol: opts.gap_tol,
        eigenvalues,
        shift: sigma,
        shift_retries: retries,
        residual_norms,
        constraint_violations,
        harmonic_dimension: handle.harmonic.dimension,
        lagrangian_kernel_dimension: handle.kernel_dimension(),
        flux_condition: handle.harmonic.flux_condition,
        orthonormality_defect,
        operator_applications: applications,
        eigenvectors,
        fields,
        potentials,
        harmonic_basis: handle.harmonic.proxies.clone(),
    })
}

/// max |v_iᵀ (C − Cᵀ) v_j| over the returned edge proxies: the boundary
/// pairing, which the Lagrangian condition must kill.
pub fn check_selfadjointness(handle: &ConstraintHandle, result: &EigenResult) -> f64 {
    let sv: Vec<Vec<f64>> = result.eigenvectors.iter().map(|v| handle.curl.skew.mul_vec(v)).collect();
    let mut worst = 0.0f64;
    for v in &result.eigenvectors {
        for s in &sv {
            worst = worst.max(dot(v, s).abs());
        }
    }
    worst
}
