//! Boundary speed families: real spherical harmonics on star-shaped
//! domains and double Fourier modes on tori.

use super::{harmonic_extension, vertex_normals, DeformationField, TetMesh, Vec3};
use crate::Result;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Associated Legendre function P_l^m(x), m ≥ 0, without the
/// Condon–Shortley phase.
fn legendre(l: u32, m: u32, x: f64) -> f64 {
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = 1.0;
    for k in 0..m {
        pmm *= (2 * k + 1) as f64 * s;
    }
    if l == m {
        return pmm;
    }
    let mut pm1 = x * (2 * m + 1) as f64 * pmm;
    if l == m + 1 {
        return pm1;
    }
    let mut p = 0.0;
    for ll in m + 2..=l {
        p = ((2 * ll - 1) as f64 * x * pm1 - (ll + m - 1) as f64 * pmm) / (ll - m) as f64;
        pmm = pm1;
        pm1 = p;
    }
    p
}

/// Orthonormal real spherical harmonic Y_lm (|m| ≤ l; m < 0 are the sine
/// modes) evaluated in the direction of `p`.
pub fn real_spherical_harmonic(l: u32, m: i32, p: Vec3) -> f64 {
    let r = p.norm();
    if r == 0.0 {
        return 0.0;
    }
    let ct = p.z / r;
    let phi = p.y.atan2(p.x);
    let am = m.unsigned_abs();
    let norm = ((2 * l + 1) as f64 / (4.0 * PI) * factorial(l - am) / factorial(l + am)).sqrt();
    let plm = legendre(l, am, ct);
    match m.cmp(&0) {
        std::cmp::Ordering::Equal => norm * plm,
        std::cmp::Ordering::Greater => 2f64.sqrt() * norm * plm * (am as f64 * phi).cos(),
        std::cmp::Ordering::Less => 2f64.sqrt() * norm * plm * (am as f64 * phi).sin(),
    }
}

/// All (l, m) with 1 ≤ l_min ≤ l ≤ l_max.
pub fn harmonic_indices(l_min: u32, l_max: u32) -> Vec<(u32, i32)> {
    (l_min..=l_max).flat_map(|l| (-(l as i32)..=l as i32).map(move |m| (l, m))).collect()
}

/// Double Fourier mode on a torus of major radius R about the z axis:
/// cos or sin of (p·θ + q·φ), θ the toroidal and φ the poloidal angle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusMode {
    pub p: i32,
    pub q: i32,
    pub sine: bool,
}

impl TorusMode {
    pub fn eval(&self, major: f64, x: Vec3) -> f64 {
        let th = x.y.atan2(x.x);
        let rho = x.x.hypot(x.y);
        let ph = x.z.atan2(rho - major);
        let a = self.p as f64 * th + self.q as f64 * ph;
        if self.sine {
            a.sin()
        } else {
            a.cos()
        }
    }
}

/// Boundary speed sampled at the boundary vertices (in `boundary_vertices`
/// order) from a function of position.
pub fn sample_speed(mesh: &TetMesh, f: impl Fn(Vec3) -> f64) -> Vec<f64> {
    mesh.boundary_vertices().iter().map(|&v| f(mesh.point(v))).collect()
}

/// Harmonic extension of the normal speed Y_lm(x − center).
pub fn spherical_harmonic_field(mesh: &TetMesh, l: u32, m: i32, center: Vec3) -> Result<DeformationField> {
    let s = sample_speed(mesh, |x| real_spherical_harmonic(l, m, x - center));
    let mut f = harmonic_extension(mesh, &s)?;
    f.description = format!("Y({l},{m}) normal speed");
    Ok(f)
}

pub fn torus_mode_field(mesh: &TetMesh, mode: TorusMode, major: f64) -> Result<DeformationField> {
    let s = sample_speed(mesh, |x| mode.eval(major, x));
    let mut f = harmonic_extension(mesh, &s)?;
    f.description = format!("torus mode ({},{}){}", mode.p, mode.q, if mode.sine { " sin" } else { " cos" });
    Ok(f)
}

/// Unit outward normal speed of a rigid translation along `e`.
pub fn translation_speed(mesh: &TetMesh, e: Vec3) -> Vec<f64> {
    let n = vertex_normals(mesh);
    mesh.boundary_vertices().iter().map(|&v| n[v].dot(&e)).collect()
}
