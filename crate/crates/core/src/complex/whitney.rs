//! Closed-form element matrices of lowest-order Whitney forms on an affine
//! tetrahedron. With λ the barycentric coordinates,
//! ∫λ_aλ_b = |T|(1+δ_ab)/20 and ∫λ_a = |T|/4 make every entry exact.

use crate::mesh::Vec3;
use nalgebra::Matrix3;

/// Local edges (i<j in local numbering) and faces (i<j<k).
pub const LOCAL_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];
pub const LOCAL_FACES: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];

/// Gradients of the barycentric coordinates and the signed volume.
pub fn barycentric_gradients(p: &[Vec3; 4]) -> ([Vec3; 4], f64) {
    let j = Matrix3::from_columns(&[p[1] - p[0], p[2] - p[0], p[3] - p[0]]);
    let vol = j.determinant() / 6.0;
    let jinv_t = j.try_inverse().unwrap_or_else(Matrix3::zeros).transpose();
    let g1: Vec3 = jinv_t.column(0).into();
    let g2: Vec3 = jinv_t.column(1).into();
    let g3: Vec3 = jinv_t.column(2).into();
    ([-(g1 + g2 + g3), g1, g2, g3], vol)
}

#[derive(Clone, Debug)]
pub struct LocalMatrices {
    pub vol: f64,
    pub grads: [Vec3; 4],
    pub m0: [[f64; 4]; 4],
    pub m1: [[f64; 6]; 6],
    pub m2: [[f64; 4]; 4],
    /// ∫ curl φ_i · curl φ_j
    pub k: [[f64; 6]; 6],
    /// c[i][j] = ∫ curl φ_j · φ_i
    pub c: [[f64; 6]; 6],
}

fn mass_lambda(vol: f64, a: usize, b: usize) -> f64 {
    vol * if a == b { 2.0 } else { 1.0 } / 20.0
}

/// Constant curl of the local Whitney 1-form of edge (i,j): 2∇λ_i×∇λ_j.
pub fn edge_curl(g: &[Vec3; 4], e: usize) -> Vec3 {
    let [i, j] = LOCAL_EDGES[e];
    2.0 * g[i].cross(&g[j])
}

/// Value at barycentric point `l` of the Whitney 1-form of local edge `e`.
pub fn edge_form(g: &[Vec3; 4], e: usize, l: &[f64; 4]) -> Vec3 {
    let [i, j] = LOCAL_EDGES[e];
    l[i] * g[j] - l[j] * g[i]
}

/// Value at barycentric point `l` of the Whitney 2-form of local face `f`.
pub fn face_form(g: &[Vec3; 4], f: usize, l: &[f64; 4]) -> Vec3 {
    let [i, j, k] = LOCAL_FACES[f];
    2.0 * (l[i] * g[j].cross(&g[k]) + l[j] * g[k].cross(&g[i]) + l[k] * g[i].cross(&g[j]))
}

pub fn local_matrices(p: &[Vec3; 4]) -> LocalMatrices {
    let (g, vol) = barycentric_gradients(p);
    let mut m0 = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            m0[a][b] = mass_lambda(vol, a, b);
        }
    }
    let mut m1 = [[0.0; 6]; 6];
    let mut k = [[0.0; 6]; 6];
    let mut c = [[0.0; 6]; 6];
    let curls: Vec<Vec3> = (0..6).map(|e| edge_curl(&g, e)).collect();
    for (r, &[i, j]) in LOCAL_EDGES.iter().enumerate() {
        // ∫ φ_ij = |T|/4 (∇λ_j − ∇λ_i)
        let mean = (g[j] - g[i]) * (vol / 4.0);
        for (s, &[kk, l]) in LOCAL_EDGES.iter().enumerate() {
            m1[r][s] = mass_lambda(vol, i, kk) * g[j].dot(&g[l]) - mass_lambda(vol, i, l) * g[j].dot(&g[kk])
                - mass_lambda(vol, j, kk) * g[i].dot(&g[l])
                + mass_lambda(vol, j, l) * g[i].dot(&g[kk]);
            k[r][s] = vol * curls[r].dot(&curls[s]);
            c[r][s] = curls[s].dot(&mean);
        }
    }
    let mut m2 = [[0.0; 4]; 4];
    let cyc = |f: [usize; 3]| [(f[0], f[1], f[2]), (f[1], f[2], f[0]), (f[2], f[0], f[1])];
    for (r, &fr) in LOCAL_FACES.iter().enumerate() {
        for (s, &fs) in LOCAL_FACES.iter().enumerate() {
            let mut v = 0.0;
            for (a, a1, a2) in cyc(fr) {
                let ca = g[a1].cross(&g[a2]);
                for (b, b1, b2) in cyc(fs) {
                    v += mass_lambda(vol, a, b) * ca.dot(&g[b1].cross(&g[b2]));
                }
            }
            m2[r][s] = 4.0 * v;
        }
    }
    LocalMatrices { vol, grads: g, m0, m1, m2, k, c }
}

/// ∫_T W(a) ∧ W(b) for Whitney 1-forms on an oriented triangle, given the
/// cochain values on the oriented edges (0→1, 1→2, 2→0). Metric-free.
pub fn triangle_wedge(a: [f64; 3], b: [f64; 3]) -> f64 {
    // ∫ λ_p λ_q dλ_r∧dλ_s = (1+δ_pq)/24 · s(r,s), s cyclic = +1
    let s = |r: usize, t: usize| -> f64 {
        if r == t {
            0.0
        } else if (r + 1) % 3 == t {
            1.0
        } else {
            -1.0
        }
    };
    let m = |p: usize, q: usize| if p == q { 2.0 } else { 1.0 } / 24.0;
    let edges = [(0usize, 1usize), (1, 2), (2, 0)];
    let mut total = 0.0;
    for (ea, &(i, j)) in edges.iter().enumerate() {
        for (eb, &(k, l)) in edges.iter().enumerate() {
            let w = m(i, k) * s(j, l) - m(i, l) * s(j, k) - m(j, k) * s(i, l) + m(j, l) * s(i, k);
            total += a[ea] * b[eb] * w;
        }
    }
    total
}
