use curlspec::mesh::{generate_ball, generate_handlebody, generate_solid_torus};
use curlspec::spectrum::*;
use curlspec::Error;
use proptest::prelude::*;

// First positive root of tan x = x (spherical Bessel j1 eigenvalue of the
// unit ball), by bisection on sin x − x cos x.
const BALL_LAMBDA1: f64 = 4.493409457909064;

#[test]
fn bessel_oracle_by_bisection() {
    let g = |x: f64| x.sin() - x * x.cos();
    let (mut a, mut b) = (4.0, 4.7);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if g(a) * g(m) <= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    assert!((0.5 * (a + b) - BALL_LAMBDA1).abs() < 1e-13);
}

#[test]
fn ball_lowest_cluster_is_a_triple_above_the_oracle() {
    let mesh = generate_ball(1.0, 2).unwrap();
    let d = Discretization::new(&mesh, &LagrangianSpec::zero_flux()).unwrap();
    let r = d.solve(6, 4.0, &SolverOptions::default()).unwrap();
    let i = r.first_positive().unwrap();
    let c = r.cluster_of(i).unwrap();
    assert_eq!(c.len, 3, "{:?}", r.eigenvalues);
    // conforming discretisation of the inverse: eigenvalues approach from above
    assert!(c.mean > BALL_LAMBDA1 && c.mean < 1.1 * BALL_LAMBDA1, "{}", c.mean);
    assert!(r.residual_norms.iter().all(|&x| x < 1e-8));
    assert!(r.orthonormality_defect < 1e-10);
    for v in &r.constraint_violations {
        assert!(v.divergence < 1e-10 && v.lagrangian < 1e-10, "{v:?}");
    }
    assert_eq!(r.harmonic_dimension, 0);
}

#[test]
fn scaling_law_is_exact() {
    let mesh = generate_ball(1.0, 1).unwrap();
    let opts = SolverOptions::default();
    let base = Discretization::new(&mesh, &LagrangianSpec::zero_flux()).unwrap().solve(4, 5.0, &opts).unwrap();
    for s in [0.5, 2.0, 3.0] {
        let d = Discretization::new(&mesh.scaled(s), &LagrangianSpec::zero_flux()).unwrap();
        let r = d.solve(4, 5.0 / s, &opts).unwrap();
        for (a, b) in base.eigenvalues.iter().zip(&r.eigenvalues) {
            assert!((a / s - b).abs() <= 1e-12 * b.abs(), "s = {s}: {a} vs {b}");
        }
    }
}

#[test]
fn harmonic_dimension_equals_boundary_genus() {
    let cases = [
        (generate_ball(1.0, 1).unwrap(), 0),
        (generate_solid_torus(2.0, 0.5, 1).unwrap(), 1),
        (generate_handlebody(2, 0).unwrap(), 2),
    ];
    for (mesh, genus) in cases {
        let d = Discretization::new(&mesh, &LagrangianSpec::zero_flux()).unwrap();
        assert_eq!(d.handle.harmonic.dimension, genus, "{}", mesh.domain_name);
        if genus > 0 {
            assert!(d.handle.harmonic.flux_condition.is_finite() && d.handle.harmonic.flux_condition < 1e6);
        }
    }
}

#[test]
fn zero_flux_is_self_adjoint_on_the_torus() {
    let mesh = generate_solid_torus(2.0, 0.5, 2).unwrap();
    let d = Discretization::new(&mesh, &LagrangianSpec::zero_flux()).unwrap();
    let opts = SolverOptions::default();
    let r = d.solve(4, 8.3, &opts).unwrap();
    assert!(check_selfadjointness(&d.handle, &r) <= 10.0 * opts.tol);
    assert!(r.constraint_violations.iter().all(|v| v.flux < 1e-8));
}

#[test]
fn non_lagrangian_condition_breaks_the_boundary_pairing() {
    let mesh = generate_solid_torus(2.0, 0.5, 2).unwrap();
    // no functionals: L is the whole boundary cohomology, not isotropic
    let lag = LagrangianSpec::custom(vec![]);
    assert!(Discretization::new(&mesh, &lag).is_err());
    let d = Discretization::unchecked(&mesh, &lag).unwrap();
    assert!(!d.handle.isotropic);
    let opts = SolverOptions::default();
    // the helical modes near 8.3 carry no boundary periods; the pairing shows
    // up between the axisymmetric modes at the ends of this window
    let r = d.solve(16, 7.0, &opts).unwrap();
    assert!(r.eigenvalues[0] < 6.0 && r.eigenvalues[15] > 9.4);
    assert!(check_selfadjointness(&d.handle, &r) >= 100.0 * 10.0 * opts.tol);
}

#[test]
fn custom_spec_equal_to_zero_flux_reproduces_it() {
    let mesh = generate_solid_torus(2.0, 0.5, 1).unwrap();
    let opts = SolverOptions::default();
    let a = Discretization::new(&mesh, &LagrangianSpec::zero_flux()).unwrap().solve(4, 24.0, &opts).unwrap();
    let b = Discretization::new(&mesh, &LagrangianSpec::custom(vec![vec![2.0, 0.0]])).unwrap().solve(4, 24.0, &opts).unwrap();
    for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
        assert!((x - y).abs() < 1e-9 * x.abs());
    }
}

#[test]
fn invalid_lagrangians_are_rejected() {
    let mesh = generate_handlebody(2, 0).unwrap();
    let c = curlspec::complex::build_complex(&mesh).unwrap();
    let basis = curlspec::complex::homology_basis(&c).unwrap();
    // wrong row count
    assert!(LagrangianSpec::custom(vec![vec![1.0, 0.0, 0.0, 0.0]]).validate(&basis).is_err());
    // rank deficient
    let f = vec![vec![1.0, 0.0, 0.0, 0.0], vec![2.0, 0.0, 0.0, 0.0]];
    assert!(LagrangianSpec::custom(f).validate(&basis).is_err());
    // complex coefficients are out of scope
    let re = vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]];
    let im = vec![vec![0.0, 0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0, 1.0]];
    assert!(matches!(LagrangianSpec::custom_complex(re, im), Err(Error::Unsupported(_))));
}

#[test]
fn amperian_condition_on_the_torus() {
    // vanishing β-periods (circulation around the hole unconstrained) is
    // another Lagrangian for ℓ = 1
    let mesh = generate_solid_torus(2.0, 0.5, 1).unwrap();
    let d = Discretization::new(&mesh, &LagrangianSpec::custom(vec![vec![0.0, 1.0]])).unwrap();
    let r = d.solve(4, 24.0, &SolverOptions::default()).unwrap();
    assert!(r.residual_norms.iter().all(|&x| x < 1e-8));
    assert!(check_selfadjointness(&d.handle, &r) < 1e-9);
}

#[test]
fn requesting_too_many_eigenvalues_fails_cleanly() {
    let mesh = generate_handlebody(2, 0).unwrap();
    let d = Discretization::new(&mesh, &LagrangianSpec::zero_flux()).unwrap();
    let n = d.handle.num_unknowns();
    assert!(matches!(d.solve(n + 1, 1.0, &SolverOptions::default()), Err(Error::InvalidParameter(_))));
}

#[test]
fn vtk_output_has_one_vector_per_vertex() {
    let mesh = generate_ball(1.0, 0).unwrap();
    let d = Discretization::new(&mesh, &LagrangianSpec::zero_flux()).unwrap();
    let r = d.solve(1, 6.0, &SolverOptions::default()).unwrap();
    let v = point_vectors(&d.complex, &r.eigenvectors[0]);
    assert_eq!(v.len(), mesh.vertices.len());
    let text = write_vtk(&mesh, &[("v".into(), v)]);
    assert!(text.contains(&format!("POINT_DATA {}", mesh.vertices.len())));
}

proptest! {
    #[test]
    fn clusters_partition_the_spectrum(mut xs in proptest::collection::vec(0.1f64..10.0, 1..20), tol in 1e-8f64..1e-2) {
        xs.sort_by(f64::total_cmp);
        let cs = cluster_multiplicity(&xs, tol);
        let mut next = 0;
        for c in &cs {
            prop_assert_eq!(c.start, next);
            prop_assert!(c.len >= 1);
            let slice = &xs[c.start..c.start + c.len];
            let mean = slice.iter().sum::<f64>() / c.len as f64;
            prop_assert!((mean - c.mean).abs() <= 1e-12 * mean.abs().max(1.0));
            next += c.len;
        }
        prop_assert_eq!(next, xs.len());
    }

    #[test]
    fn duplicated_values_share_a_cluster(x in 0.5f64..10.0, m in 1usize..5) {
        let xs = vec![x; m];
        let cs = cluster_multiplicity(&xs, 1e-6);
        prop_assert_eq!(cs.len(), 1);
        prop_assert_eq!(cs[0].len, m);
    }
}
