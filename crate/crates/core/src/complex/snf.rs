//! Exact integer linear algebra: Smith normal form with transforms for the
//! small matrices of boundary homology, and sparse rank for incidence
//! matrices.

use std::collections::HashMap;

/// `u · a · v = diag(d)` with `u`, `v` unimodular; `v_inv` is the inverse
/// of `v`.
#[derive(Clone, Debug)]
pub struct Smith {
    pub d: Vec<i128>,
    pub u: Vec<Vec<i128>>,
    pub v: Vec<Vec<i128>>,
    pub v_inv: Vec<Vec<i128>>,
}

impl Smith {
    pub fn rank(&self) -> usize {
        self.d.iter().filter(|&&x| x != 0).count()
    }

    /// True when every nonzero invariant factor is 1 (no torsion).
    pub fn is_unimodular_on_rank(&self) -> bool {
        self.d.iter().all(|&x| x == 0 || x == 1)
    }
}

fn identity(n: usize) -> Vec<Vec<i128>> {
    (0..n).map(|i| (0..n).map(|j| (i == j) as i128).collect()).collect()
}

pub fn smith_normal_form(a: &[Vec<i64>]) -> Smith {
    let m = a.len();
    let n = if m == 0 { 0 } else { a[0].len() };
    let mut a: Vec<Vec<i128>> = a.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut u = identity(m);
    let mut v = identity(n);
    let mut vi = identity(n);

    // row_i += q·row_k
    let row_add = |a: &mut Vec<Vec<i128>>, u: &mut Vec<Vec<i128>>, i: usize, k: usize, q: i128| {
        for j in 0..a[i].len() {
            a[i][j] += q * a[k][j];
        }
        for j in 0..u[i].len() {
            u[i][j] += q * u[k][j];
        }
    };
    // col_j += q·col_k
    let col_add = |a: &mut Vec<Vec<i128>>, v: &mut Vec<Vec<i128>>, vi: &mut Vec<Vec<i128>>, j: usize, k: usize, q: i128| {
        for r in a.iter_mut() {
            r[j] += q * r[k];
        }
        for r in v.iter_mut() {
            r[j] += q * r[k];
        }
        // inverse: row_k −= q·row_j
        for c in 0..vi[k].len() {
            vi[k][c] -= q * vi[j][c];
        }
    };

    let mut t = 0;
    while t < m.min(n) {
        // smallest nonzero pivot in the trailing block
        let mut best: Option<(usize, usize)> = None;
        for i in t..m {
            for j in t..n {
                if a[i][j] != 0 && best.map_or(true, |(bi, bj)| a[i][j].abs() < a[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        a.swap(t, pi);
        u.swap(t, pi);
        for r in a.iter_mut() {
            r.swap(t, pj);
        }
        for r in v.iter_mut() {
            r.swap(t, pj);
        }
        vi.swap(t, pj);
        loop {
            let mut dirty = false;
            for i in t + 1..m {
                if a[i][t] != 0 {
                    let q = a[i][t].div_euclid(a[t][t]);
                    row_add(&mut a, &mut u, i, t, -q);
                    if a[i][t] != 0 {
                        dirty = true;
                    }
                }
            }
            for j in t + 1..n {
                if a[t][j] != 0 {
                    let q = a[t][j].div_euclid(a[t][t]);
                    col_add(&mut a, &mut v, &mut vi, j, t, -q);
                    if a[t][j] != 0 {
                        dirty = true;
                    }
                }
            }
            if dirty {
                // move the smallest remainder in row/column t to the pivot
                let mut best = (t, t);
                for i in t + 1..m {
                    if a[i][t] != 0 && a[i][t].abs() < a[best.0][best.1].abs() {
                        best = (i, t);
                    }
                }
                for j in t + 1..n {
                    if a[t][j] != 0 && a[t][j].abs() < a[best.0][best.1].abs() {
                        best = (t, j);
                    }
                }
                if best.0 != t {
                    a.swap(t, best.0);
                    u.swap(t, best.0);
                } else if best.1 != t {
                    for r in a.iter_mut() {
                        r.swap(t, best.1);
                    }
                    for r in v.iter_mut() {
                        r.swap(t, best.1);
                    }
                    vi.swap(t, best.1);
                }
                continue;
            }
            // divisibility of the trailing block by the pivot
            let p = a[t][t];
            let bad = (t + 1..m).find(|&i| (t + 1..n).any(|j| a[i][j] % p != 0));
            match bad {
                Some(i) => row_add(&mut a, &mut u, t, i, 1),
                None => break,
            }
        }
        if a[t][t] < 0 {
            for x in a[t].iter_mut() {
                *x = -*x;
            }
            for x in u[t].iter_mut() {
                *x = -*x;
            }
        }
        t += 1;
    }
    let d = (0..m.min(n)).map(|i| a[i][i]).collect();
    Smith { d, u, v, v_inv: vi }
}

/// Integer basis of the saturation of the row space of `a`: the lattice
/// of integer vectors in its rational span.
pub fn saturated_row_basis(a: &[Vec<i64>]) -> Vec<Vec<i128>> {
    let s = smith_normal_form(a);
    s.v_inv[..s.rank()].to_vec()
}

const PRIME: u64 = 2_147_483_647;

fn inv_mod(a: u64) -> u64 {
    let (mut r, mut b, mut e) = (1u64, a % PRIME, PRIME - 2);
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % PRIME;
        }
        b = b * b % PRIME;
        e >>= 1;
    }
    r
}

/// Rank of a sparse integer matrix given as rows of (column, value) pairs,
/// by elimination modulo a large prime. For incidence matrices (all
/// determinantal divisors 1 on surfaces) this equals the rational rank.
pub fn sparse_rank(rows: &[Vec<(usize, i64)>]) -> usize {
    let to_mod = |x: i64| (x.rem_euclid(PRIME as i64)) as u64;
    let mut pivots: HashMap<usize, Vec<(usize, u64)>> = HashMap::new();
    for r in rows {
        let mut row: Vec<(usize, u64)> = r.iter().map(|&(c, x)| (c, to_mod(x))).filter(|&(_, x)| x != 0).collect();
        row.sort_by_key(|&(c, _)| c);
        while let Some(&(lead, val)) = row.first() {
            match pivots.get(&lead) {
                None => {
                    let s = inv_mod(val);
                    row.iter_mut().for_each(|(_, x)| *x = *x * s % PRIME);
                    pivots.insert(lead, row);
                    break;
                }
                Some(p) => {
                    // row −= val·p (p has leading 1)
                    let mut out = Vec::with_capacity(row.len() + p.len());
                    let (mut i, mut j) = (0, 0);
                    while i < row.len() || j < p.len() {
                        let ci = row.get(i).map_or(usize::MAX, |x| x.0);
                        let cj = p.get(j).map_or(usize::MAX, |x| x.0);
                        if ci < cj {
                            out.push(row[i]);
                            i += 1;
                        } else {
                            let sub = val * p[j].1 % PRIME;
                            let x = if ci == cj {
                                let x = (row[i].1 + PRIME - sub) % PRIME;
                                i += 1;
                                x
                            } else {
                                (PRIME - sub) % PRIME
                            };
                            if x != 0 {
                                out.push((cj, x));
                            }
                            j += 1;
                        }
                    }
                    row = out;
                }
            }
        }
    }
    pivots.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mul(a: &[Vec<i128>], b: &[Vec<i128>]) -> Vec<Vec<i128>> {
        (0..a.len()).map(|i| (0..b[0].len()).map(|j| (0..b.len()).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
    }

    #[test]
    fn smith_of_known_matrix() {
        let a = vec![vec![2, 4, 4], vec![-6, 6, 12], vec![10, -4, -16]];
        let s = smith_normal_form(&a);
        assert_eq!(s.d, vec![2, 6, 12]);
        let a128: Vec<Vec<i128>> = a.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
        let d = mul(&mul(&s.u, &a128), &s.v);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(d[i][j], if i == j { s.d[i] } else { 0 });
            }
        }
        assert_eq!(mul(&s.v, &s.v_inv), identity(3));
    }

    #[test]
    fn saturation_divides_out_common_factors() {
        let b = saturated_row_basis(&[vec![2, 4, 0]]);
        assert_eq!(b.len(), 1);
        let r: Vec<i128> = b[0].iter().map(|x| x.abs()).collect();
        assert_eq!(r, vec![1, 2, 0]);
    }

    #[test]
    fn sparse_rank_of_cycle_graph() {
        // incidence of a 4-cycle: rank 3
        let rows: Vec<Vec<(usize, i64)>> = (0..4).map(|e| vec![(e, -1), ((e + 1) % 4, 1)]).collect();
        assert_eq!(sparse_rank(&rows), 3);
    }
}
