use curlspec::hadamard::*;
use curlspec::mesh::harmonics::spherical_harmonic_field;
use curlspec::mesh::*;
use curlspec::spectrum::{Discretization, LagrangianSpec, SolverOptions};
use curlspec::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn ball_cluster(r: u32) -> (TetMesh, Discretization, Vec<f64>, Vec<Vec<f64>>) {
    let mesh = generate_ball(1.0, r).unwrap();
    let d = Discretization::new(&mesh, &LagrangianSpec::zero_flux()).unwrap();
    let res = d.solve(4, 4.0, &SolverOptions::default()).unwrap();
    let range = nearest_cluster(&res, 4.5).unwrap();
    let vals = res.eigenvalues[range.clone()].to_vec();
    let fields = res.fields[range].to_vec();
    (mesh, d, vals, fields)
}

#[test]
fn cross_density_is_symmetric() {
    let (mesh, d, _, u) = ball_cluster(1);
    let ctx = DensityContext::new(&mesh).unwrap();
    let a = cross_density(&d.complex, &ctx, &u[0], &u[1]);
    let b = cross_density(&d.complex, &ctx, &u[1], &u[0]);
    let scale = a.nodal.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for (x, y) in a.nodal.iter().zip(&b.nodal) {
        assert!((x - y).abs() <= 1e-13 * scale);
    }
    let f = DeformationField::from_displacement(&mesh, mesh.vertices.clone(), "x").speed_per_vertex(mesh.vertices.len());
    let dij = cross_term(4.5, 1e-8, &a, &f).unwrap();
    let dji = cross_term(4.5, 1e-8, &b, &f).unwrap();
    let scale = 4.5 * boundary_density(&d.complex, &ctx, &u[0]).integrate_abs(&f);
    assert!((dij - dji).abs() <= 1e-13 * scale);
}

#[test]
fn derivative_is_odd_in_the_speed() {
    let (mesh, d, vals, u) = ball_cluster(1);
    let ctx = DensityContext::new(&mesh).unwrap();
    let rho = boundary_density(&d.complex, &ctx, &u[0]);
    let f = spherical_harmonic_field(&mesh, 2, 0, Vec3::zeros()).unwrap().speed_per_vertex(mesh.vertices.len());
    let g: Vec<f64> = f.iter().map(|x| -x).collect();
    assert_eq!(shape_derivative(vals[0], &rho, &g), -shape_derivative(vals[0], &rho, &f));
    let zero = vec![0.0; f.len()];
    assert_eq!(shape_derivative(vals[0], &rho, &zero), 0.0);
}

#[test]
fn kernel_fields_have_no_cross_term() {
    let (mesh, d, _, u) = ball_cluster(1);
    let ctx = DensityContext::new(&mesh).unwrap();
    let rho = boundary_density(&d.complex, &ctx, &u[0]);
    let f = vec![1.0; mesh.vertices.len()];
    assert!(matches!(cross_term(0.0, 1e-8, &rho, &f), Err(Error::ZeroEigenvalue(_))));
    assert!(matches!(cross_term(1e-9, 1e-8, &rho, &f), Err(Error::ZeroEigenvalue(_))));
}

#[test]
fn dilation_identity_on_the_ball() {
    // λ scales as 1/(1+t), so ∫ (x·ν)|u|² dσ = 1 for every normalised field
    let (mesh, d, _, u) = ball_cluster(2);
    let ctx = DensityContext::new(&mesh).unwrap();
    let f = DeformationField::dilation(&mesh, [0.0; 3]).speed_per_vertex(mesh.vertices.len());
    for ui in &u {
        let s = boundary_density(&d.complex, &ctx, ui).integrate(&f);
        assert!((s - 1.0).abs() <= 0.05, "{s}");
    }
}

#[test]
fn volume_form_is_exact_for_dilation() {
    let (mesh, d, _, u) = ball_cluster(1);
    let x = mesh.vertices.clone();
    for ui in &u {
        let t = tet_fields(&d.complex, ui);
        assert!((volume_form(&d.complex, &t, &t, &x) - 1.0).abs() < 1e-10);
    }
}

#[test]
fn fd_agrees_with_the_formula_at_second_order() {
    let mesh = generate_ball(1.0, 1).unwrap();
    let field = spherical_harmonic_field(&mesh, 2, 0, Vec3::zeros()).unwrap();
    let opts = FdOptions { shift: 4.5, ..FdOptions::default() };
    let rep = fd_check(&mesh, &field, &LagrangianSpec::zero_flux(), &opts).unwrap();
    assert_eq!(rep.multiplicity, 3);
    assert!(rep.rel_error <= 0.05, "{rep:?}");
    for o in &rep.orders {
        assert!((o - 2.0).abs() < 0.3, "{:?}", rep.orders);
    }
    for (a, b) in rep.formula.iter().zip(&rep.volume_formula) {
        assert!((a - b).abs() <= 1e-8 * rep.scale);
    }
    // Y20 is axisymmetric: two equal branches and one of twice the size
    assert!((rep.formula[0] - rep.formula[1]).abs() < 1e-8 * rep.scale);
    assert!((rep.formula[2] + 2.0 * rep.formula[0]).abs() < 1e-6 * rep.scale);
}

#[test]
fn tracking_a_dilation_follows_the_scaling_law() {
    let mesh = generate_ball(1.0, 1).unwrap();
    let field = DeformationField::dilation(&mesh, [0.0; 3]);
    let t = [0.0, 0.05, 0.1, 0.15];
    let fam = track_family(&mesh, &field, &LagrangianSpec::zero_flux(), 4.5, 3, &t, &TrackOptions::default()).unwrap();
    assert_eq!(fam.num_branches(), 3);
    for (k, &tk) in t.iter().enumerate() {
        for b in 0..3 {
            let want = fam.eigenvalues[0][b] / (1.0 + tk);
            assert!((fam.eigenvalues[k][b] - want).abs() <= 1e-9 * want);
        }
        assert!(fam.overlaps[k] > 0.999);
    }
    assert!(fam.crossings.is_empty());
    let csv = fam.to_csv();
    assert!(csv.starts_with("t,branch,eigenvalue,overlap\n"));
    assert_eq!(csv.lines().count(), 1 + 4 * 3);
}

#[test]
fn zero_speed_leaves_the_spectrum_unchanged() {
    let mesh = generate_ball(1.0, 1).unwrap();
    let field = DeformationField::zero(&mesh);
    let fam =
        track_family(&mesh, &field, &LagrangianSpec::zero_flux(), 4.5, 3, &[0.0, 0.5, 1.0], &TrackOptions::default())
            .unwrap();
    for row in &fam.eigenvalues {
        for (a, b) in row.iter().zip(&fam.eigenvalues[0]) {
            assert!((a - b).abs() <= 1e-10 * b);
        }
    }
}

#[test]
fn impossible_overlap_reports_branch_loss() {
    let mesh = generate_ball(1.0, 1).unwrap();
    let field = DeformationField::dilation(&mesh, [0.0; 3]);
    let opts = TrackOptions { min_overlap: 1.5, ..TrackOptions::default() };
    let r = track_family(&mesh, &field, &LagrangianSpec::zero_flux(), 4.5, 3, &[0.0, 0.01], &opts);
    assert!(matches!(r, Err(Error::BranchLoss { .. })));
}

#[test]
fn relative_error_uses_the_scale_floor() {
    assert_eq!(relative_error(1.0, 1.0, 0.0), 0.0);
    assert_eq!(relative_error(0.0, 0.0, 0.0), 0.0);
    assert!((relative_error(1e-12, 0.0, 1.0) - 1e-12).abs() < 1e-24);
    assert!((relative_error(1.1, 1.0, 0.0) - 0.1 / 1.1).abs() < 1e-15);
}

#[test]
fn whitney_trace_density_is_nonnegative() {
    let (mesh, d, _, _) = ball_cluster(1);
    let res = d.solve(4, 4.0, &SolverOptions::default()).unwrap();
    let ctx = DensityContext::new(&mesh).unwrap();
    let rho = whitney_trace_density(&d.complex, &ctx, &res.eigenvectors[0]);
    assert!(rho.nodal.iter().all(|&x| x >= 0.0));
    assert!(rho.total() > 0.0);
}

#[test]
fn split_experiment_without_perturbation_never_splits() {
    let opts = SplitOptions { refinement: 2, amplitude: 0.0, trials: 2, ..SplitOptions::default() };
    let s = split_experiment(&opts).unwrap();
    assert_eq!(s.valid, 2);
    assert_eq!(s.split, 0);
    assert_eq!(s.split_fraction, 0.0);
}

fn permutation_matrix(p: &[usize], noise: &[f64]) -> DMatrix<f64> {
    let n = p.len();
    DMatrix::from_fn(n, n, |i, j| if p[i] == j { 1.0 } else { 0.0 } + 0.2 * noise[(i * n + j) % noise.len()])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matching_recovers_dominant_permutations(p in Just((0..5).collect::<Vec<usize>>()).prop_shuffle(),
                                               noise in prop::collection::vec(-1.0f64..1.0, 25)) {
        prop_assert_eq!(best_matching(&permutation_matrix(&p, &noise)), p);
    }

    #[test]
    fn lowdin_returns_the_nearest_orthonormal_matrix(v in prop::collection::vec(-0.3f64..0.3, 16)) {
        let a = DMatrix::identity(4, 4) + DMatrix::from_row_slice(4, 4, &v);
        let q = lowdin(&a);
        prop_assert!((q.transpose() * &q - DMatrix::identity(4, 4)).norm() < 1e-10);
        // polar factor: Qᵀ A is symmetric positive definite
        let s = q.transpose() * &a;
        prop_assert!((&s - s.transpose()).norm() < 1e-10);
        prop_assert!(s.symmetric_eigen().eigenvalues.min() > 0.0);
    }
}
