//! Iterative solvers: conjugate gradients and a thick-restart block Lanczos
//! method for operators self-adjoint in a positive-definite inner product.

use crate::sparse::{axpy, dot};
use crate::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Conjugate gradients for a symmetric positive semi-definite operator with
/// a consistent right-hand side. Returns the solution and the relative
/// residual ‖b − Ax‖/‖b‖.
pub fn cg(apply: impl Fn(&[f64]) -> Vec<f64>, b: &[f64], tol: f64, max_iter: usize) -> (Vec<f64>, f64) {
    let n = b.len();
    let bn = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bn == 0.0 {
        return (x, 0.0);
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    for _ in 0..max_iter {
        if rr.sqrt() <= tol * bn {
            break;
        }
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let a = rr / pap;
        axpy(a, &p, &mut x);
        axpy(-a, &ap, &mut r);
        let rr2 = dot(&r, &r);
        let beta = rr2 / rr;
        rr = rr2;
        p.iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + beta * *pi);
    }
    let ax = apply(&x);
    let res: f64 = b.iter().zip(&ax).map(|(bi, ai)| (bi - ai) * (bi - ai)).sum::<f64>().sqrt();
    (x, res / bn)
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues ascending.
pub fn sym_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (vec![], DMatrix::zeros(0, 0));
    }
    let sym = (m + m.transpose()) * 0.5;
    let e = SymmetricEigen::new(sym);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| e.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

#[derive(Clone, Debug)]
pub struct LanczosOptions {
    pub block_size: usize,
    pub max_basis: usize,
    /// Relative residual ‖Op y − θy‖_B ≤ tol·|θ|.
    pub tol: f64,
    /// Cap on single-vector operator applications.
    pub max_applications: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions { block_size: 4, max_basis: 120, tol: 1e-10, max_applications: 4000, seed: 0x5eed }
    }
}

#[derive(Clone, Debug)]
pub struct LanczosResult {
    /// Ritz values of largest magnitude, in decreasing |θ|.
    pub values: Vec<f64>,
    /// B-orthonormal Ritz vectors.
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub applications: usize,
}

/// Finds the `k` eigenvalues of largest magnitude of an operator that is
/// self-adjoint in the inner product ⟨x, y⟩ = xᵀBy. `op` maps a block of
/// vectors; `b` applies B to one vector.
pub fn block_lanczos(
    n: usize,
    op: impl Fn(&[Vec<f64>]) -> Vec<Vec<f64>>,
    b: impl Fn(&[f64]) -> Vec<f64>,
    k: usize,
    opts: &LanczosOptions,
) -> Result<LanczosResult> {
    let bs = opts.block_size.max(1);
    if k == 0 {
        return Ok(LanczosResult { values: vec![], vectors: vec![], residuals: vec![], applications: 0 });
    }
    if k + bs > n {
        return dense_fallback(n, &op, &b, k);
    }
    let max_basis = opts.max_basis.max(k + 3 * bs).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v: Vec<Vec<f64>> = Vec::new();
    let mut bv: Vec<Vec<f64>> = Vec::new();
    let mut w: Vec<Vec<f64>> = Vec::new();
    let mut applications = 0;

    // B-orthonormalises candidates against the basis and among themselves
    let orthonormalize = |cand: Vec<Vec<f64>>, v: &[Vec<f64>], bv: &[Vec<f64>], rng: &mut ChaCha8Rng| {
        let mut out: Vec<Vec<f64>> = Vec::new();
        let mut bout: Vec<Vec<f64>> = Vec::new();
        for mut x in cand {
            let mut tries = 0;
            loop {
                let bx0 = b(&x);
                let n0 = dot(&x, &bx0).max(0.0).sqrt();
                for _ in 0..2 {
                    for (vi, bvi) in v.iter().zip(bv).chain(out.iter().zip(&bout)) {
                        let c = dot(bvi, &x);
                        axpy(-c, vi, &mut x);
                    }
                }
                let bx = b(&x);
                let nx = dot(&x, &bx).max(0.0).sqrt();
                if nx > 1e-8 * n0 && nx > 0.0 {
                    out.push(x.iter().map(|t| t / nx).collect());
                    bout.push(bx.iter().map(|t| t / nx).collect());
                    break;
                }
                tries += 1;
                if tries > 3 {
                    break;
                }
                x = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
            }
        }
        (out, bout)
    };

    let start: Vec<Vec<f64>> = (0..bs.max(k.min(2 * bs))).map(|_| (0..n).map(|_| rng.gen::<f64>() - 0.5).collect()).collect();
    let (mut block, mut bblock) = orthonormalize(start, &v, &bv, &mut rng);
    loop {
        // expand
        if block.is_empty() {
            let r: Vec<Vec<f64>> = (0..bs).map(|_| (0..n).map(|_| rng.gen::<f64>() - 0.5).collect()).collect();
            (block, bblock) = orthonormalize(r, &v, &bv, &mut rng);
        }
        let wb = op(&block);
        applications += block.len();
        v.extend(block.drain(..));
        bv.extend(bblock.drain(..));
        w.extend(wb);

        let m = v.len();
        let want = k.min(m);
        if m >= k + bs || m >= max_basis {
            // Rayleigh–Ritz
            let t = DMatrix::from_fn(m, m, |i, j| dot(&bv[i], &w[j]));
            let (vals, s) = sym_eigen(&t);
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| vals[b].abs().total_cmp(&vals[a].abs()));
            let combine = |basis: &[Vec<f64>], col: usize| {
                let mut y = vec![0.0; n];
                for i in 0..m {
                    let c = s[(i, col)];
                    if c != 0.0 {
                        axpy(c, &basis[i], &mut y);
                    }
                }
                y
            };
            let keep = (k + bs).min(m);
            let mut ys = Vec::with_capacity(keep);
            let mut bys = Vec::with_capacity(keep);
            let mut wys = Vec::with_capacity(keep);
            let mut res = Vec::with_capacity(keep);
            let mut resid_vecs = Vec::new();
            for &c in order.iter().take(keep) {
                let y = combine(&v, c);
                let by = combine(&bv, c);
                let wy = combine(&w, c);
                let mut r = wy.clone();
                axpy(-vals[c], &y, &mut r);
                let rn = dot(&r, &b(&r)).max(0.0).sqrt();
                res.push(rn / vals[c].abs().max(1e-300));
                resid_vecs.push(r);
                ys.push(y);
                bys.push(by);
                wys.push(wy);
            }
            let converged = res.iter().take(want).filter(|&&r| r <= opts.tol).count();
            if converged == k {
                return Ok(LanczosResult {
                    values: order.iter().take(k).map(|&c| vals[c]).collect(),
                    vectors: ys.into_iter().take(k).collect(),
                    residuals: res.into_iter().take(k).collect(),
                    applications,
                });
            }
            if applications >= opts.max_applications {
                return Err(Error::NoConvergence {
                    iterations: applications,
                    converged,
                    wanted: k,
                    worst_residual: res.iter().take(k).cloned().fold(0.0, f64::max),
                });
            }
            if m + bs > max_basis {
                // thick restart on the wanted Ritz vectors
                v = ys;
                bv = bys;
                w = wys;
                let cand: Vec<Vec<f64>> = resid_vecs
                    .into_iter()
                    .zip(&res)
                    .filter(|(_, &r)| r > opts.tol)
                    .map(|(r, _)| r)
                    .take(bs)
                    .collect();
                let (nb, nbb) = orthonormalize(cand, &v, &bv, &mut rng);
                block = nb;
                bblock = nbb;
                continue;
            }
        }
        // next block: operator image of the newest block
        let m = v.len();
        let from = m.saturating_sub(bs);
        let cand: Vec<Vec<f64>> = w[from..m].to_vec();
        let (nb, nbb) = orthonormalize(cand, &v, &bv, &mut rng);
        block = nb;
        bblock = nbb;
    }
}

/// Dense Rayleigh–Ritz on a full basis for tiny problems.
fn dense_fallback(
    n: usize,
    op: &impl Fn(&[Vec<f64>]) -> Vec<Vec<f64>>,
    b: &impl Fn(&[f64]) -> Vec<f64>,
    k: usize,
) -> Result<LanczosResult> {
    let e: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| (i == j) as i32 as f64).collect()).collect();
    let bm = DMatrix::from_fn(n, n, |i, j| b(&e[j])[i]);
    let w = op(&e);
    let wm = DMatrix::from_fn(n, n, |i, j| w[j][i]);
    // B-orthonormal basis via Cholesky of B
    let l = bm.clone().cholesky().ok_or(Error::FactorizationFailure("inner product not definite".into()))?;
    let linv = l.l().try_inverse().ok_or(Error::FactorizationFailure("singular inner product".into()))?;
    let t = &linv * &bm * &wm * linv.transpose();
    let (vals, s) = sym_eigen(&t);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| vals[c].abs().total_cmp(&vals[a].abs()));
    let basis = linv.transpose() * s;
    let k = k.min(n);
    Ok(LanczosResult {
        values: order.iter().take(k).map(|&c| vals[c]).collect(),
        vectors: order.iter().take(k).map(|&c| basis.column(c).iter().cloned().collect()).collect(),
        residuals: vec![0.0; k],
        applications: n,
    })
}
