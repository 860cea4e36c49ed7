//! End-to-end acceptance run: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p curlspec --test acceptance`. Takes several
//! minutes; refinement-3 balls and tori dominate.

use curlspec::hadamard::*;
use curlspec::mesh::harmonics::{harmonic_indices, real_spherical_harmonic, sample_speed, spherical_harmonic_field, torus_mode_field, TorusMode};
use curlspec::mesh::*;
use curlspec::shapeopt::*;
use curlspec::spectrum::*;
use curlspec::Result;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::time::Instant;

/// First positive root of tan x = x.
const BESSEL_ROOT: f64 = 4.493409457909064;

struct Solved {
    mesh: TetMesh,
    disc: Discretization,
    res: EigenResult,
}

impl Solved {
    fn new(mesh: TetMesh, lag: &LagrangianSpec, k: usize, shift: f64) -> Result<Self> {
        let disc = Discretization::new(&mesh, lag)?;
        let res = disc.solve(k, shift, &SolverOptions::default())?;
        Ok(Solved { mesh, disc, res })
    }

    fn lowest_cluster(&self) -> std::ops::Range<usize> {
        let i = self.res.first_positive().expect("positive eigenvalue");
        EigenResult::range(self.res.cluster_of(i).unwrap())
    }
}

struct Shared {
    /// Unit balls at refinements 1, 2, 3.
    balls: Vec<Solved>,
    /// Solid torus (R = 2, r = 0.5) at refinement 3 around its lowest pair.
    torus3: Solved,
}

type Outcome = Result<(bool, String)>;

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn c1(s: &Shared) -> Outcome {
    let lam: Vec<f64> = s.balls.iter().map(|b| b.res.eigenvalues[b.res.first_positive().unwrap()]).collect();
    let err: Vec<f64> = lam.iter().map(|l| (l - BESSEL_ROOT).abs()).collect();
    let rel3 = err[2] / BESSEL_ROOT;
    let pairwise = [(err[0] / err[1]).log2(), (err[1] / err[2]).log2()];
    let order = (err[0] / err[2]).log2() / 2.0;
    Ok((
        rel3 <= 0.02 && order >= 1.5,
        format!("λ₁ = {:.6} (r=3, rel. error {:.2e}); order {:.2} (pairwise {:.2}, {:.2})", lam[2], rel3, order, pairwise[0], pairwise[1]),
    ))
}

fn c2(s: &Shared) -> Outcome {
    let sizes: Vec<usize> = s.balls[1..].iter().map(|b| b.lowest_cluster().len()).collect();
    Ok((sizes.iter().all(|&m| m == 3), format!("lowest cluster sizes at r=2,3: {sizes:?} (gap_tol 1e-6)")))
}

fn c3(_: &Shared) -> Outcome {
    let lag = LagrangianSpec::zero_flux();
    let cases = [
        (generate_ball(1.0, 1)?, 4.0),
        (generate_solid_torus(2.0, 0.5, 1)?, 20.0),
        (generate_handlebody(2, 0)?, 4.0),
    ];
    let mut worst = 0.0f64;
    for (mesh, shift) in cases {
        let base = Solved::new(mesh.clone(), &lag, 4, shift)?;
        for sc in [0.5, 2.0, 3.0] {
            let r = Solved::new(mesh.scaled(sc), &lag, 4, shift / sc)?;
            for (a, b) in base.res.eigenvalues.iter().zip(&r.res.eigenvalues) {
                worst = worst.max((b * sc - a).abs() / a.abs());
            }
        }
    }
    Ok((worst <= 1e-12, format!("max |s·λ(sΩ) − λ(Ω)|/λ = {worst:.1e} over ball, torus, genus 2, s ∈ {{0.5, 2, 3}}")))
}

/// O(δ²) until the FD differences hit the solver noise floor.
fn sweep_ok(rep: &FdReport, tol: f64) -> (bool, String) {
    let dmin = rep.sweep.iter().map(|r| r.delta.abs()).fold(f64::INFINITY, f64::min);
    let floor = 10.0 * tol * rep.lambda.abs() / dmin;
    let diffs: Vec<f64> = rep
        .sweep
        .windows(2)
        .map(|w| max_abs(w[0].fd.iter().zip(&w[1].fd).map(|(a, b)| a - b)))
        .collect();
    let mut ok = true;
    for (i, o) in rep.orders.iter().enumerate() {
        if diffs[i + 1] > floor && *o < 1.8 {
            ok = false;
        }
    }
    let desc = if diffs.iter().all(|&d| d <= floor) {
        format!("at noise floor {floor:.0e}")
    } else {
        format!("orders {:?}", rep.orders.iter().map(|o| (o * 100.0).round() / 100.0).collect::<Vec<_>>())
    };
    (ok, desc)
}

fn c4(s: &Shared) -> Outcome {
    let lag = LagrangianSpec::zero_flux();
    let tol = SolverOptions::default().tol;
    let deltas = vec![1e-3, 5e-4, 2.5e-4];
    let ball = &s.balls[2];
    let bm = &ball.mesh;
    let cases: Vec<(&str, &TetMesh, DeformationField, f64)> = vec![
        ("translation", bm, DeformationField::translation(bm, [0.3, -0.5, 0.8]), 4.5),
        ("dilation", bm, DeformationField::dilation(bm, [0.0; 3]), 4.5),
        ("Y(2,0)", bm, spherical_harmonic_field(bm, 2, 0, Vec3::zeros())?, 4.5),
        (
            "torus (0,1) cos",
            &s.torus3.mesh,
            torus_mode_field(&s.torus3.mesh, TorusMode { p: 0, q: 1, sine: false }, 2.0)?,
            s.torus3.res.eigenvalues[s.torus3.lowest_cluster().start] - 0.05,
        ),
    ];
    let mut pass = true;
    let mut parts = vec![];
    for (name, mesh, field, shift) in cases {
        let opts = FdOptions { shift, deltas: deltas.clone(), ..FdOptions::default() };
        let rep = fd_check(mesh, &field, &lag, &opts)?;
        let (sw, desc) = sweep_ok(&rep, tol);
        pass &= rep.rel_error <= 0.05 && sw;
        parts.push(format!("{name}: err {:.1e}, {desc}", rep.rel_error));
    }
    Ok((pass, parts.join("; ")))
}

fn dilation_integrals(sv: &Solved, fields: std::ops::Range<usize>) -> Result<Vec<f64>> {
    let ctx = DensityContext::new(&sv.mesh)?;
    let f = DeformationField::dilation(&sv.mesh, [0.0; 3]).speed_per_vertex(sv.mesh.vertices.len());
    Ok(fields.map(|i| boundary_density(&sv.disc.complex, &ctx, &sv.res.fields[i]).integrate(&f)).collect())
}

fn c5(s: &Shared) -> Outcome {
    // every orthonormal basis of a cluster is Rellich-aligned for a dilation
    let ball = dilation_integrals(&s.balls[2], s.balls[2].lowest_cluster())?;
    let torus = dilation_integrals(&s.torus3, 0..s.torus3.res.eigenvalues.len())?;
    let worst = max_abs(ball.iter().chain(&torus).map(|x| x - 1.0));
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ");
    Ok((worst <= 0.05, format!("ball r=3 [{}], torus r=3 [{}]; max deviation {worst:.3}", fmt(&ball), fmt(&torus))))
}

fn c6(s: &Shared) -> Outcome {
    let ball = &s.balls[1];
    let modes = harmonic_indices(1, 4);
    let mut ratios = vec![];
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c: Vec<f64> = modes.iter().map(|_| StandardNormal.sample(&mut rng)).collect();
        let speed = sample_speed(&ball.mesh, |x| modes.iter().zip(&c).map(|(&(l, m), a)| a * real_spherical_harmonic(l, m, x)).sum());
        let field = harmonic_extension(&ball.mesh, &speed)?;
        let opts = FdOptions { shift: 4.5, deltas: vec![1e-3], ..FdOptions::default() };
        ratios.push(fd_check(&ball.mesh, &field, &LagrangianSpec::zero_flux(), &opts)?.cross_ratio);
    }
    let worst = max_abs(ratios.iter().copied());
    Ok((worst <= 0.05, format!("ball r=2, 5 random speeds: max cross ratio {worst:.2e}")))
}

fn c7(_: &Shared) -> Outcome {
    let lag = LagrangianSpec::zero_flux();
    let cases = [
        (generate_ball(1.0, 1)?, 0),
        (generate_ball(1.0, 2)?, 0),
        (generate_solid_torus(2.0, 0.5, 1)?, 1),
        (generate_solid_torus(2.0, 0.5, 2)?, 1),
        (generate_handlebody(2, 0)?, 2),
        (generate_handlebody(2, 1)?, 2),
    ];
    let mut pass = true;
    let mut parts = vec![];
    for (mesh, want) in cases {
        let d = Discretization::new(&mesh, &lag)?;
        let h = &d.handle.harmonic;
        pass &= h.dimension == want && h.flux_condition.is_finite() && h.flux_condition < 1e8;
        parts.push(format!("{} {} (cond {:.1})", mesh.domain_name, h.dimension, h.flux_condition));
    }
    Ok((pass, parts.join(", ")))
}

fn c8(s: &Shared) -> Outcome {
    let tol = SolverOptions::default().tol;
    let bound = 10.0 * tol;
    let torus2 = Solved::new(generate_solid_torus(2.0, 0.5, 2)?, &LagrangianSpec::zero_flux(), 6, 8.3)?;
    let db = check_selfadjointness(&s.balls[1].disc.handle, &s.balls[1].res);
    let dt = check_selfadjointness(&torus2.disc.handle, &torus2.res);
    // no functionals: L is all of boundary cohomology, not isotropic
    let neg = Discretization::unchecked(&torus2.mesh, &LagrangianSpec::custom(vec![]))?;
    let rn = neg.solve(16, 7.0, &SolverOptions::default())?;
    let dn = check_selfadjointness(&neg.handle, &rn);
    Ok((
        db <= bound && dt <= bound && dn >= 100.0 * bound,
        format!("defect ball {db:.1e}, torus {dt:.1e} (bound {bound:.0e}); non-isotropic control {dn:.1e}"),
    ))
}

fn c9(_: &Shared) -> Outcome {
    let st = split_experiment(&SplitOptions::default())?;
    let zero = split_experiment(&SplitOptions { amplitude: 0.0, trials: 10, ..SplitOptions::default() })?;
    Ok((
        st.split_fraction >= 0.95 && zero.split == 0 && zero.valid == 10,
        format!(
            "amplitude 2%: {}/{} valid trials split ({} inverted); amplitude 0: {}/{}",
            st.split, st.valid, st.inverted, zero.split, zero.valid
        ),
    ))
}

fn c10(s: &Shared) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(1..=6);
        let r = rng.gen_range(1..=n);
        let b = DMatrix::from_fn(n, r, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
        let h = &b * b.transpose();
        let (beta, tau) = cone_decompose(&h)?;
        let rec = &beta * DMatrix::from_diagonal(&DVector::from_vec(tau)) * beta.transpose();
        worst = worst.max((rec - &h).norm() / h.norm());
    }
    let ball = &s.balls[2];
    let ctx = DensityContext::new(&ball.mesh)?;
    let cl = ball.lowest_cluster();
    let f = &ball.res.fields;
    let dens: Vec<Vec<BoundaryDensity>> =
        cl.clone().map(|i| cl.clone().map(|j| cross_density(&ball.disc.complex, &ctx, &f[i], &f[j])).collect()).collect();
    let cert = extremality_certificate(&dens)?;
    Ok((
        worst <= 1e-12 && cert.residual <= 0.10,
        format!(
            "cone reconstruction {worst:.1e} over 100 matrices; ball r=3 certificate residual {:.3} ({} iterations, τ = {:?})",
            cert.residual,
            cert.iterations,
            cert.tau.iter().map(|t| (t * 1e4).round() / 1e4).collect::<Vec<_>>()
        ),
    ))
}

fn c11(s: &Shared) -> Outcome {
    let lag = LagrangianSpec::zero_flux();
    let base = s.balls[1].mesh.clone();
    let dil = ShapeFamily::dilation_only(base.clone(), [0.0; 3])?;
    let g = gradient(&dil, &[0.0], &lag, &EigenTarget::default(), &SolverOptions::default(), true)?;
    let grel = g.norm() / g.value;
    let fam = ShapeFamily::spherical_harmonics(base, 2, 2, Vec3::zeros())?;
    let opts = OptimizeOptions { max_iters: 4, certificate: false, ..OptimizeOptions::default() };
    let r = optimize(&fam, &vec![0.0; fam.dim()], &lag, &EigenTarget::default(), &opts)?;
    let monotone = r.trajectory.len() > 1 && r.trajectory.windows(2).all(|w| w[1].value < w[0].value);
    let last = r.trajectory.last().unwrap();
    let shift = 0.99 * last.eigenvalues.iter().sum::<f64>() / last.eigenvalues.len() as f64;
    let target = EigenTarget { shift, multiplicity: last.eigenvalues.len(), ..EigenTarget::default() };
    let again = optimize(&fam, &r.final_c, &lag, &target, &OptimizeOptions { max_iters: 0, ..opts })?;
    let resume = (again.trajectory[0].gradient_norm - r.final_gradient_norm).abs() / r.final_gradient_norm;
    let values: Vec<String> = r.trajectory.iter().map(|p| format!("{:.4}", p.value)).collect();
    Ok((
        grel <= 1e-8 && monotone && resume <= 1e-8,
        format!("dilation gradient {grel:.1e}; trajectory [{}]; resume mismatch {resume:.1e}", values.join(" → ")),
    ))
}

fn main() {
    let t0 = Instant::now();
    let lag = LagrangianSpec::zero_flux();
    let balls: Vec<Solved> = (1..=3).map(|r| Solved::new(generate_ball(1.0, r).unwrap(), &lag, 4, 4.0).unwrap()).collect();
    let torus3 = Solved::new(generate_solid_torus(2.0, 0.5, 3).unwrap(), &lag, 4, 7.5).unwrap();
    let shared = Shared { balls, torus3 };
    println!("setup: {:.0} s", t0.elapsed().as_secs_f64());

    let criteria: [(&str, fn(&Shared) -> Outcome); 11] = [
        ("ball eigenvalue", c1),
        ("ball multiplicity", c2),
        ("scaling law", c3),
        ("Hadamard vs finite differences", c4),
        ("dilation identity", c5),
        ("cross terms", c6),
        ("harmonic dimensions", c7),
        ("self-adjointness", c8),
        ("generic splitting", c9),
        ("cone decomposition and certificate", c10),
        ("optimizer sanity", c11),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (pass, detail) = match check(&shared) {
            Ok(x) => x,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += !pass as usize;
        println!(
            "criterion {:>2} {}: {name}: {detail} [{:.0} s]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!("{} of 11 criteria passed in {:.0} s", 11 - failed, t0.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
