use curlspec::hadamard::{BoundaryDensity, DensityMethod};
use curlspec::mesh::*;
use curlspec::shapeopt::*;
use curlspec::spectrum::{LagrangianSpec, SolverOptions};
use curlspec::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn ball_family(r: u32) -> ShapeFamily {
    ShapeFamily::spherical_harmonics(generate_ball(1.0, r).unwrap(), 2, 2, Vec3::zeros()).unwrap()
}

#[test]
fn normalized_eigenvalue_is_scale_invariant() {
    let lag = LagrangianSpec::zero_flux();
    let opts = SolverOptions::default();
    let m = generate_ball(1.0, 1).unwrap();
    let a = normalized_eigenvalue(&m, &lag, &EigenTarget::default(), &opts).unwrap();
    for s in [0.4, 2.5] {
        let t = EigenTarget { shift: 4.5 / s, ..EigenTarget::default() };
        let b = normalized_eigenvalue(&m.scaled(s), &lag, &t, &opts).unwrap();
        assert_eq!(a.normalized.len(), b.normalized.len());
        for (x, y) in a.normalized.iter().zip(&b.normalized) {
            assert!((x - y).abs() <= 1e-10 * x, "{x} {y}");
        }
    }
}

#[test]
fn dilation_gradient_vanishes() {
    let fam = ShapeFamily::dilation_only(generate_ball(1.0, 1).unwrap(), [0.0; 3]).unwrap();
    let g = gradient(&fam, &[0.0], &LagrangianSpec::zero_flux(), &EigenTarget::default(), &SolverOptions::default(), false)
        .unwrap();
    assert_eq!(g.multiplicity, 3);
    assert!(g.degenerate);
    assert!(g.norm() <= 1e-8 * g.value, "{:?}", g.components);
    for &(lo, hi) in &g.intervals {
        assert!(lo.abs() <= 1e-8 * g.value && hi.abs() <= 1e-8 * g.value);
    }
}

#[test]
fn gradient_of_a_simple_eigenvalue_matches_finite_differences() {
    // an axisymmetric Y20 bump splits the triple into a pair and a single
    let fam = ball_family(1);
    let lag = LagrangianSpec::zero_flux();
    let opts = SolverOptions::default();
    let i20 = fam.names.iter().position(|n| n.starts_with("Y(2,0)")).unwrap();
    let mut c = vec![0.0; fam.dim()];
    c[i20] = 0.05;
    let tri = normalized_eigenvalue(&fam.mesh_at(&c).unwrap(), &lag, &EigenTarget { multiplicity: 3, ..EigenTarget::default() }, &opts)
        .unwrap();
    let top = tri.eigenvalues[2];
    assert!(top - tri.eigenvalues[1] > 1e-3 * top);
    let target = EigenTarget { shift: top + 0.01, multiplicity: 1, ..EigenTarget::default() };
    let g = gradient(&fam, &c, &lag, &target, &opts, false).unwrap();
    assert_eq!(g.multiplicity, 1);
    let h = 1e-4;
    for k in 0..fam.dim() {
        let mut cp = c.clone();
        let mut cm = c.clone();
        cp[k] += h;
        cm[k] -= h;
        let vp = normalized_eigenvalue(&fam.mesh_at(&cp).unwrap(), &lag, &target, &opts).unwrap().normalized[0];
        let vm = normalized_eigenvalue(&fam.mesh_at(&cm).unwrap(), &lag, &target, &opts).unwrap().normalized[0];
        let fd = (vp - vm) / (2.0 * h);
        assert!((fd - g.components[k]).abs() <= 1e-5 * g.value, "{k}: {fd} vs {}", g.components[k]);
    }
}

#[test]
fn dilation_only_family_is_already_stationary() {
    let fam = ShapeFamily::dilation_only(generate_ball(1.0, 1).unwrap(), [0.0; 3]).unwrap();
    let opts = OptimizeOptions { parallel: false, ..OptimizeOptions::default() };
    let r = optimize(&fam, &[0.0], &LagrangianSpec::zero_flux(), &EigenTarget::default(), &opts).unwrap();
    assert_eq!(r.stop_reason, StopReason::Gradient);
    assert_eq!(r.trajectory.len(), 1);
    assert_eq!(r.truncation, "dilation only");
    assert!(r.certificate.is_some());
}

#[test]
fn descent_trajectory_is_monotone_and_resumable() {
    let fam = ball_family(1);
    let lag = LagrangianSpec::zero_flux();
    let opts = OptimizeOptions { max_iters: 3, certificate: false, parallel: false, ..OptimizeOptions::default() };
    let c0 = vec![0.0; fam.dim()];
    let r = optimize(&fam, &c0, &lag, &EigenTarget::default(), &opts).unwrap();
    assert!(r.trajectory.len() >= 2, "{:?}", r.stop_reason);
    for w in r.trajectory.windows(2) {
        assert!(w[1].value < w[0].value, "{} -> {}", w[0].value, w[1].value);
    }
    // restarting from the last point reproduces its value and gradient
    let last = r.trajectory.last().unwrap();
    let shift = 0.99 * last.eigenvalues.iter().sum::<f64>() / last.eigenvalues.len() as f64;
    let target = EigenTarget { shift, multiplicity: last.eigenvalues.len(), ..EigenTarget::default() };
    let again = optimize(&fam, &r.final_c, &lag, &target, &OptimizeOptions { max_iters: 0, ..opts }).unwrap();
    let first = &again.trajectory[0];
    assert!((first.value - last.value).abs() <= 1e-12 * last.value);
    assert!((first.gradient_norm - r.final_gradient_norm).abs() <= 1e-8 * r.final_gradient_norm.max(1e-300));
}

#[test]
fn normalized_eigenvalue_self_converges_on_the_torus() {
    let lag = LagrangianSpec::zero_flux();
    let opts = SolverOptions::default();
    let mut values = vec![];
    for r in [2, 3] {
        let m = generate_solid_torus(2.0, 0.5, r).unwrap();
        let t = EigenTarget { shift: 8.0, multiplicity: 1, ..EigenTarget::default() };
        values.push(normalized_eigenvalue(&m, &lag, &t, &opts).unwrap().normalized[0]);
    }
    let rel = (values[1] - values[0]).abs() / values[1];
    assert!(rel <= 0.02, "{values:?}: {rel}");
}

fn synthetic(nodal: Vec<f64>) -> BoundaryDensity {
    let n = nodal.len();
    BoundaryDensity {
        method: DensityMethod::Recovered,
        vertices: (0..n).collect(),
        nodal,
        areas: vec![1.0; n],
        face_midpoints: vec![],
    }
}

#[test]
fn complementary_densities_admit_a_certificate() {
    let n = 40;
    let a: Vec<f64> = (0..n).map(|i| if i < n / 2 { 2.0 } else { 0.0 }).collect();
    let b: Vec<f64> = (0..n).map(|i| if i < n / 2 { 0.0 } else { 0.5 }).collect();
    let d = vec![vec![synthetic(a), synthetic(vec![0.0; n])], vec![synthetic(vec![0.0; n]), synthetic(b)]];
    let rep = extremality_certificate(&d).unwrap();
    assert!(rep.residual < 1e-6, "{rep:?}");
    assert_eq!(rep.family_size, 2);
    // H ∝ diag(1/2, 2)
    assert!((rep.h[1][1] / rep.h[0][0] - 4.0).abs() < 1e-5);
}

#[test]
fn a_single_bump_has_no_certificate() {
    let n = 40;
    let a: Vec<f64> = (0..n).map(|i| if i < n / 4 { 1.0 } else { 0.0 }).collect();
    let rep = extremality_certificate(&[vec![synthetic(a)]]).unwrap();
    assert!(rep.residual >= 1.0, "{rep:?}");
}

#[test]
fn cone_decompose_rejects_indefinite_and_rectangular_input() {
    let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5]);
    assert!(matches!(cone_decompose(&h), Err(Error::NotPsd { .. })));
    assert!(matches!(cone_decompose(&DMatrix::zeros(2, 3)), Err(Error::DimensionMismatch { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn cone_decompose_reconstructs_psd_matrices(n in 1usize..=6, rank in 1usize..=6,
                                                 v in prop::collection::vec(-1.0f64..1.0, 36)) {
        let r = rank.min(n);
        let b = DMatrix::from_fn(n, r, |i, j| v[i * 6 + j]);
        let h = &b * b.transpose();
        let (beta, tau) = cone_decompose(&h).unwrap();
        prop_assert!(tau.iter().all(|&t| t >= 0.0));
        prop_assert!((beta.transpose() * &beta - DMatrix::identity(n, n)).norm() <= 1e-12);
        let rec = &beta * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(tau)) * beta.transpose();
        prop_assert!((rec - &h).norm() <= 1e-12 * h.norm().max(1.0));
    }
}
