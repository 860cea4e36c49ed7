use curlspec::complex::snf::{smith_normal_form, sparse_rank};
use curlspec::complex::{build_complex, flux_vector, homology_basis, period_vector};
use curlspec::mesh::{generate_ball, generate_handlebody, generate_solid_torus, TetMesh};
use curlspec::sparse::{Cholesky, Csr};
use proptest::prelude::*;

fn zero_product(a: &Csr, b: &Csr) -> bool {
    a.matmul(b).data.iter().all(|&x| x == 0.0)
}

fn meshes() -> Vec<TetMesh> {
    vec![
        generate_ball(1.0, 1).unwrap(),
        generate_solid_torus(2.0, 0.5, 1).unwrap(),
        generate_handlebody(2, 0).unwrap(),
    ]
}

#[test]
fn incidence_compositions_vanish_exactly() {
    for m in meshes() {
        let c = build_complex(&m).unwrap();
        assert!(zero_product(&c.d1, &c.d0), "{}", m.domain_name);
        assert!(zero_product(&c.d2, &c.d1), "{}", m.domain_name);
    }
}

#[test]
fn single_tet_complex() {
    let m = TetMesh::new(vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], vec![[0, 1, 2, 3]], "tet").unwrap();
    let c = build_complex(&m).unwrap();
    assert_eq!((c.num_edges(), c.num_faces()), (6, 4));
    assert!(zero_product(&c.d1, &c.d0));
}

#[test]
fn gradient_rank_is_vertices_minus_one() {
    let m = generate_ball(1.0, 1).unwrap();
    let c = build_complex(&m).unwrap();
    let rows: Vec<Vec<(usize, i64)>> = (0..c.num_edges()).map(|e| c.d0.row(e).map(|(j, x)| (j, x as i64)).collect()).collect();
    assert_eq!(sparse_rank(&rows), c.num_vertices() - 1);
}

#[test]
fn mass_matrices_are_positive_definite() {
    for m in meshes() {
        let c = build_complex(&m).unwrap();
        for mm in [&c.m0, &c.m1, &c.m2] {
            assert!(mm.asymmetry() < 1e-14 * mm.max_abs());
            Cholesky::new(mm).unwrap();
        }
    }
}

#[test]
fn mass_matrix_scaling_exponents() {
    // volume s³ times pullback: 0-forms s³, 1-forms s, 2-forms s⁻¹
    let m = generate_solid_torus(2.0, 0.5, 0).unwrap();
    let a = build_complex(&m).unwrap();
    let s = 1.7;
    let b = build_complex(&m.scaled(s)).unwrap();
    for (ma, mb, p) in [(&a.m0, &b.m0, 3), (&a.m1, &b.m1, 1), (&a.m2, &b.m2, -1)] {
        let f = s.powi(p);
        for (x, y) in ma.data.iter().zip(&mb.data) {
            assert!((y - f * x).abs() <= 1e-12 * (f * x).abs().max(1e-300) + 1e-15);
        }
    }
}

#[test]
fn ball_has_trivial_boundary_homology() {
    let c = build_complex(&generate_ball(1.0, 1).unwrap()).unwrap();
    let h = homology_basis(&c).unwrap();
    assert_eq!(h.genus, 0);
    assert!(h.alpha_cycles.is_empty() && h.cut_surfaces.is_empty() && h.intersection_matrix.is_empty());
}

#[test]
fn solid_torus_intersection_matrix() {
    let c = build_complex(&generate_solid_torus(2.0, 0.5, 1).unwrap()).unwrap();
    let h = homology_basis(&c).unwrap();
    assert_eq!(h.genus, 1);
    assert!(h.from_tags);
    assert_eq!(h.intersection_matrix, vec![vec![0, 1], vec![-1, 0]]);
}

#[test]
fn genus_two_intersection_form_is_unimodular_and_skew() {
    let c = build_complex(&generate_handlebody(2, 0).unwrap()).unwrap();
    let h = homology_basis(&c).unwrap();
    assert_eq!(h.genus, 2);
    assert_eq!(h.alpha_cycles.len() + h.beta_cycles.len(), 4);
    let om = &h.intersection_matrix;
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(om[i][j], -om[j][i]);
        }
    }
    // a skew unimodular integer form is congruent to the standard one
    let s = smith_normal_form(om);
    assert_eq!(s.d, vec![1, 1, 1, 1]);
    // the tagged basis is already symplectic
    assert_eq!(om, &vec![vec![0, 0, 1, 0], vec![0, 0, 0, 1], vec![-1, 0, 0, 0], vec![0, -1, 0, 0]]);
}

fn untagged(mut m: TetMesh) -> TetMesh {
    m.curve_tags.clear();
    m.surface_tags.clear();
    m
}

#[test]
fn computed_basis_on_untagged_meshes() {
    for (m, g) in [(generate_solid_torus(2.0, 0.5, 1).unwrap(), 1), (generate_handlebody(2, 0).unwrap(), 2)] {
        let c = build_complex(&untagged(m)).unwrap();
        let h = homology_basis(&c).unwrap();
        assert!(!h.from_tags);
        assert_eq!(h.genus, g);
        assert_eq!(h.cut_surfaces.len(), g);
        let s = smith_normal_form(&h.intersection_matrix);
        assert!(s.d.iter().all(|&d| d == 1));
        // α cycles bound: their cut surfaces are relative cycles whose
        // boundary differs from α only on the boundary surface
        for (sig, a) in h.cut_surfaces.iter().zip(&h.alpha_cycles) {
            let mut dense = vec![0.0; c.num_faces()];
            sig.iter().for_each(|&(f, x)| dense[f] = x);
            let ds = c.d1.tmul_vec(&dense);
            let mut diff = ds.clone();
            a.iter().for_each(|&(e, x)| diff[e] -= x);
            for (e, d) in diff.iter().enumerate() {
                assert!(d.abs() < 1e-6 || c.is_boundary_edge[e]);
            }
        }
    }
}

#[test]
fn periods_of_gradients_vanish() {
    let m = generate_handlebody(1, 0).unwrap();
    let c = build_complex(&m).unwrap();
    let h = homology_basis(&c).unwrap();
    let p: Vec<f64> = m.vertices.iter().map(|v| (3.0 * v[0]).sin() + v[1] * v[2]).collect();
    let v = c.d0.mul_vec(&p);
    assert!(period_vector(&h, &v).iter().all(|x| x.abs() < 1e-12));
}

#[test]
fn angular_form_periods_on_torus() {
    let m = generate_solid_torus(2.0, 0.5, 1).unwrap();
    let c = build_complex(&m).unwrap();
    let h = homology_basis(&c).unwrap();
    let th: Vec<f64> = m.vertices.iter().map(|v| v[1].atan2(v[0])).collect();
    let v: Vec<f64> = c
        .edges
        .iter()
        .map(|&[a, b]| {
            let mut d = th[b] - th[a];
            while d > std::f64::consts::PI {
                d -= 2.0 * std::f64::consts::PI;
            }
            while d < -std::f64::consts::PI {
                d += 2.0 * std::f64::consts::PI;
            }
            d / (2.0 * std::f64::consts::PI)
        })
        .collect();
    let p = period_vector(&h, &v);
    assert!(p[0].abs() < 1e-12);
    assert!((p[1] - 1.0).abs() < 1e-12);
}

#[test]
fn discrete_stokes_for_flux() {
    let m = generate_solid_torus(2.0, 0.5, 1).unwrap();
    let c = build_complex(&m).unwrap();
    let h = homology_basis(&c).unwrap();
    let v: Vec<f64> = (0..c.num_edges()).map(|e| ((e * 7919) % 13) as f64 - 6.0).collect();
    let flux = flux_vector(&h, &c.d1.mul_vec(&v));
    let alpha_period = period_vector(&h, &v)[0];
    assert_eq!(flux[0], alpha_period);
}

#[test]
fn dual_cocycles_have_unit_periods() {
    let c = build_complex(&generate_handlebody(2, 0).unwrap()).unwrap();
    let h = homology_basis(&c).unwrap();
    for (a, eta) in h.cohomology.dual_cocycles.iter().enumerate() {
        let p = period_vector(&h, eta);
        for (b, x) in p.iter().enumerate() {
            assert!((x - (a == b) as i32 as f64).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn jittered_meshes_keep_exact_sequence(seed in 0u64..1000, amp in 0.0f64..0.05) {
        let mut m = generate_ball(1.0, 0).unwrap();
        let mut x = seed;
        for v in m.vertices.iter_mut() {
            for c in v.iter_mut() {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                *c += amp * (((x >> 33) as f64 / (1u64 << 31) as f64) - 0.5);
            }
        }
        let c = build_complex(&m).unwrap();
        prop_assert!(zero_product(&c.d1, &c.d0));
        prop_assert!(zero_product(&c.d2, &c.d1));
        prop_assert!(Cholesky::new(&c.m1).is_ok());
    }
}
