use crate::hadamard::BoundaryDensity;
use crate::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// H = β diag(τ) βᵀ with β orthogonal and τ ≥ 0. Negative eigenvalues
/// above −1e-10‖H‖ are clipped to zero.
pub fn cone_decompose(h: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch { expected: h.nrows(), found: h.ncols() });
    }
    let sym = (h + h.transpose()) * 0.5;
    let e = sym.symmetric_eigen();
    let scale = e.eigenvalues.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let min = e.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -1e-10 * scale {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let tau = e.eigenvalues.iter().map(|&x| x.max(0.0)).collect();
    Ok((e.eigenvectors, tau))
}

fn psd_projection(h: &DMatrix<f64>) -> DMatrix<f64> {
    let e = ((h + h.transpose()) * 0.5).symmetric_eigen();
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(|x| x.max(0.0)));
    &e.eigenvectors * d * e.eigenvectors.transpose()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtremalityReport {
    /// Cluster size.
    pub m: usize,
    /// Number of nonzero weights τ_j.
    pub family_size: usize,
    pub h: Vec<Vec<f64>>,
    pub tau: Vec<f64>,
    /// Columns: rotated basis in terms of the cluster basis.
    pub beta: Vec<Vec<f64>>,
    /// Area-weighted mean of Σ H_ij ρ_ij.
    pub c0: f64,
    /// sup_b |Σ H_ij ρ_ij(b) − c0| / c0.
    pub residual: f64,
    pub iterations: usize,
}

pub const CERTIFICATE_MAX_ITERS: usize = 500;

/// Searches for PSD H with Σ H_ij ρ_ij ≡ const on the boundary: projected
/// gradient on the area-weighted least-squares misfit to the constant 1,
/// projecting onto the PSD cone after every step. A heuristic: a large
/// residual is evidence of non-extremality, not a proof.
///
/// `densities[i][j]` is the cross density of fields i and j (all sharing
/// the same boundary vertices and areas).
pub fn extremality_certificate(densities: &[Vec<BoundaryDensity>]) -> Result<ExtremalityReport> {
    let m = densities.len();
    if m == 0 || densities.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidParameter("cross densities must form a square array".into()));
    }
    let nb = densities[0][0].nodal.len();
    let w: Vec<f64> = densities[0][0].areas.clone();
    let total: f64 = w.iter().sum();
    // linear map H ↦ Σ H_ij ρ_ij(b) on symmetric H, in terms of the
    // upper-triangular coordinates
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i..m).map(move |j| (i, j))).collect();
    let apply = |h: &DMatrix<f64>| -> Vec<f64> {
        (0..nb)
            .map(|b| {
                let mut s = 0.0;
                for &(i, j) in &pairs {
                    let f = if i == j { 1.0 } else { 2.0 };
                    s += f * h[(i, j)] * densities[i][j].nodal[b];
                }
                s
            })
            .collect()
    };
    // gradient of ½ Σ w_b (R(H)_b − 1)² with respect to symmetric H
    let grad = |h: &DMatrix<f64>| -> DMatrix<f64> {
        let r = apply(h);
        let mut g = DMatrix::zeros(m, m);
        for b in 0..nb {
            let e = w[b] * (r[b] - 1.0) / total;
            for &(i, j) in &pairs {
                g[(i, j)] += e * densities[i][j].nodal[b];
                if i != j {
                    g[(j, i)] += e * densities[i][j].nodal[b];
                }
            }
        }
        g
    };
    // Lipschitz bound from the Gram matrix of the coordinate images
    let basis: Vec<DMatrix<f64>> = pairs
        .iter()
        .map(|&(i, j)| {
            let mut e = DMatrix::zeros(m, m);
            e[(i, j)] = 1.0;
            e[(j, i)] = 1.0;
            if i == j {
                e[(i, i)] = 1.0;
            }
            e
        })
        .collect();
    let images: Vec<Vec<f64>> = basis.iter().map(|e| apply(e)).collect();
    let np = pairs.len();
    let gram = DMatrix::from_fn(np, np, |a, b| {
        (0..nb).map(|k| w[k] * images[a][k] * images[b][k]).sum::<f64>() / total
    });
    let lip = gram.symmetric_eigen().eigenvalues.iter().fold(0.0f64, |a, x| a.max(*x)).max(1e-300) * 2.0;

    let mut h = DMatrix::identity(m, m);
    let r0 = apply(&h);
    let mean0 = (0..nb).map(|b| w[b] * r0[b]).sum::<f64>() / total;
    if mean0 > 0.0 {
        h /= mean0;
    }
    let mut iterations = 0;
    for it in 0..CERTIFICATE_MAX_ITERS {
        let g = grad(&h);
        let next = psd_projection(&(&h - g / lip));
        let change = (&next - &h).norm();
        h = next;
        iterations = it + 1;
        if change <= 1e-13 * h.norm().max(1e-300) {
            break;
        }
    }
    let r = apply(&h);
    let c0 = (0..nb).map(|b| w[b] * r[b]).sum::<f64>() / total;
    let residual = if c0 > 0.0 { r.iter().fold(0.0f64, |a, x| a.max((x - c0).abs())) / c0 } else { f64::INFINITY };
    let (beta, tau) = cone_decompose(&h)?;
    let tmax = tau.iter().fold(0.0f64, |a, x| a.max(*x));
    Ok(ExtremalityReport {
        m,
        family_size: tau.iter().filter(|&&t| t > 1e-10 * tmax).count(),
        h: (0..m).map(|i| h.row(i).iter().copied().collect()).collect(),
        tau,
        beta: (0..m).map(|j| beta.column(j).iter().copied().collect()).collect(),
        c0,
        residual,
        iterations,
    })
}
