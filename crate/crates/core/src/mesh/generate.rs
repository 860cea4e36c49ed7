use super::{TetMesh, Vec3};
use crate::{Error, Result};

/// The six Kuhn tetrahedra of a unit cell, as chains of lattice points
/// starting at `base` and stepping by `s[axis]` along each axis in turn.
fn kuhn_chains(base: [i64; 3], s: [i64; 3]) -> Vec<[[i64; 3]; 4]> {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    PERMS
        .iter()
        .map(|perm| {
            let mut p = base;
            let mut chain = [p; 4];
            for (k, &ax) in perm.iter().enumerate() {
                p[ax] += s[ax];
                chain[k + 1] = p;
            }
            chain
        })
        .collect()
}

/// Cell (i,j,k) of a grid with `half` cells per half-axis, subdivided with
/// the Kuhn diagonal starting at the corner nearest the grid centre, so the
/// subdivision is mirror symmetric about every mid-plane.
fn reflected_cell(c: [i64; 3], half: [Option<i64>; 3]) -> Vec<[[i64; 3]; 4]> {
    let mut s = [1; 3];
    let mut base = c;
    for ax in 0..3 {
        if let Some(h) = half[ax] {
            if c[ax] < h {
                s[ax] = -1;
                base[ax] = c[ax] + 1;
            }
        }
    }
    kuhn_chains(base, s)
}

/// Ball of the given radius: a structured cube with `2^(refinement+1)` cells
/// per side, Kuhn-subdivided symmetrically under the octahedral group and
/// mapped radially onto the ball (p ↦ p·|p|∞/|p|₂).
pub fn generate_ball(radius: f64, refinement: u32) -> Result<TetMesh> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("ball radius must be positive, got {radius}")));
    }
    if refinement > 6 {
        return Err(Error::InvalidParameter(format!("refinement {refinement} exceeds the supported maximum 6")));
    }
    let n = 1i64 << (refinement + 1);
    let h = n / 2;
    let idx = |p: [i64; 3]| ((p[0] * (n + 1) + p[1]) * (n + 1) + p[2]) as usize;
    let mut vertices = Vec::with_capacity(((n + 1) * (n + 1) * (n + 1)) as usize);
    for i in 0..=n {
        for j in 0..=n {
            for k in 0..=n {
                let p = Vec3::new(i as f64, j as f64, k as f64) * (2.0 / n as f64) - Vec3::repeat(1.0);
                let l2 = p.norm();
                let q = if l2 > 0.0 { p * (p.amax() / l2) } else { p };
                vertices.push((q * radius).into());
            }
        }
    }
    let mut tets = Vec::with_capacity((6 * n * n * n) as usize);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for ch in reflected_cell([i, j, k], [Some(h); 3]) {
                    tets.push(ch.map(idx));
                }
            }
        }
    }
    TetMesh::new(vertices, tets, "ball")
}

/// Solid torus with major radius `major` and minor radius `minor`.
///
/// A square grid with `2^refinement` cells per side is mapped onto the disk
/// and revolved in `2^(refinement+2)` angular steps. Tags: the meridian disk
/// at angle 0 (`cut_1`, oriented along increasing angle), its boundary
/// `alpha_1`, and the outer longitude `beta_1`; α·β = +1 with respect to the
/// outward normal.
pub fn generate_solid_torus(major: f64, minor: f64, refinement: u32) -> Result<TetMesh> {
    if !(minor > 0.0 && major > minor && major.is_finite()) {
        return Err(Error::InvalidParameter(format!("solid torus needs R > r > 0, got R={major}, r={minor}")));
    }
    if refinement > 5 {
        return Err(Error::InvalidParameter(format!("refinement {refinement} exceeds the supported maximum 5")));
    }
    let n = 1i64 << refinement;
    let m = 1i64 << (refinement + 2);
    let idx = |p: [i64; 3]| ((p[2].rem_euclid(m) * (n + 1) + p[0]) * (n + 1) + p[1]) as usize;
    let mut vertices = vec![[0.0; 3]; ((n + 1) * (n + 1) * m) as usize];
    for k in 0..m {
        let th = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
        for i in 0..=n {
            for j in 0..=n {
                let x = 2.0 * i as f64 / n as f64 - 1.0;
                let y = 2.0 * j as f64 / n as f64 - 1.0;
                let l2 = x.hypot(y);
                let sc = if l2 > 0.0 { x.abs().max(y.abs()) / l2 } else { 0.0 };
                let (a, b) = (minor * x * sc, minor * y * sc);
                vertices[idx([i, j, k])] = [(major + a) * th.cos(), (major + a) * th.sin(), b];
            }
        }
    }
    let half = if n % 2 == 0 { Some(n / 2) } else { None };
    let mut tets = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..m {
                for ch in reflected_cell([i, j, k], [half, half, None]) {
                    tets.push(ch.map(idx));
                }
            }
        }
    }
    let mut mesh = TetMesh::new(vertices, tets, "solid-torus")?;

    // meridian disk: faces in the k = 0 layer, normal along +y
    let in_layer = |v: usize| v < ((n + 1) * (n + 1)) as usize;
    let disk = collect_planar_faces(&mesh, in_layer, Vec3::new(0.0, 1.0, 0.0));
    // boundary of the disk, clockwise in (radial, z) so that it runs
    // downwards on the outer equator
    let mut ring = Vec::new();
    for j in (0..=n).rev() {
        ring.push([n, j]);
    }
    for i in (0..n).rev() {
        ring.push([i, 0]);
    }
    for j in 1..=n {
        ring.push([0, j]);
    }
    for i in 1..n {
        ring.push([i, n]);
    }
    let alpha = close_path(ring.iter().map(|&[i, j]| idx([i, j, 0])).collect());
    let jm = n / 2;
    let beta = close_path((0..m).map(|k| idx([n, jm, k])).collect());
    mesh.surface_tags.insert("cut_1".into(), disk);
    mesh.curve_tags.insert("alpha_1".into(), alpha);
    mesh.curve_tags.insert("beta_1".into(), beta);
    Ok(mesh)
}

/// Handlebody of genus 0, 1 or 2 built from unit voxel blocks: a
/// `(2g+1) × 3 × 1` plate with `g` square holes (genus 0: a single cube).
/// Each block has `2^(refinement+1)` cells per side.
///
/// Tags per hole j: `cut_j` is the wall through the bar in front of the
/// hole (normal +x), `alpha_j` its boundary, and `beta_j` a loop around the
/// hole on the top face, counter-clockwise seen from above.
pub fn generate_handlebody(genus: u32, refinement: u32) -> Result<TetMesh> {
    if genus > 2 {
        return Err(Error::Unsupported(format!("handlebody genus {genus} (supported: 0, 1, 2)")));
    }
    if refinement > 4 {
        return Err(Error::InvalidParameter(format!("refinement {refinement} exceeds the supported maximum 4")));
    }
    let s = 1i64 << (refinement + 1);
    let (bx, by) = if genus == 0 { (1, 1) } else { (2 * genus as i64 + 1, 3) };
    let (nx, ny, nz) = (bx * s, by * s, s);
    let is_hole = |i: i64, j: i64| {
        if genus == 0 {
            return false;
        }
        let (bi, bj) = (i / s, j / s);
        bj == 1 && bi % 2 == 1
    };
    let mut id = vec![usize::MAX; ((nx + 1) * (ny + 1) * (nz + 1)) as usize];
    let lin = |p: [i64; 3]| ((p[0] * (ny + 1) + p[1]) * (nz + 1) + p[2]) as usize;
    let mut vertices = Vec::new();
    let mut tets = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            if is_hole(i, j) {
                continue;
            }
            for k in 0..nz {
                for ch in kuhn_chains([i, j, k], [1, 1, 1]) {
                    tets.push(ch.map(|p| {
                        let l = lin(p);
                        if id[l] == usize::MAX {
                            id[l] = vertices.len();
                            vertices.push([p[0] as f64 / s as f64, p[1] as f64 / s as f64, p[2] as f64 / s as f64]);
                        }
                        id[l]
                    }));
                }
            }
        }
    }
    let mut mesh = TetMesh::new(vertices, tets, &format!("handlebody-{genus}"))?;
    for hole in 0..genus as i64 {
        let xi = (2 * hole + 1) * s + s / 2;
        let v = |p: [i64; 3]| id[lin(p)];
        // wall x = xi through the bar 0 ≤ y ≤ 1
        let pos = mesh.vertices.clone();
        let wall = collect_planar_faces(
            &mesh,
            |w| {
                let p = pos[w];
                (p[0] * s as f64 - xi as f64).abs() < 1e-9 && p[1] <= 1.0 + 1e-9
            },
            Vec3::new(1.0, 0.0, 0.0),
        );
        // boundary of the wall, counter-clockwise in (y, z)
        let mut ring = Vec::new();
        for j in 0..s {
            ring.push(v([xi, j, 0]));
        }
        for k in 0..s {
            ring.push(v([xi, s, k]));
        }
        for j in (1..=s).rev() {
            ring.push(v([xi, j, s]));
        }
        for k in (1..=s).rev() {
            ring.push(v([xi, 0, k]));
        }
        let alpha = close_path(ring);
        // loop one cell outside the hole on the top face
        let (x0, x1) = ((2 * hole + 1) * s - 1, (2 * hole + 2) * s + 1);
        let (y0, y1) = (s - 1, 2 * s + 1);
        let mut ring = Vec::new();
        for i in x0..x1 {
            ring.push(v([i, y0, nz]));
        }
        for j in y0..y1 {
            ring.push(v([x1, j, nz]));
        }
        for i in (x0 + 1..=x1).rev() {
            ring.push(v([i, y1, nz]));
        }
        for j in (y0 + 1..=y1).rev() {
            ring.push(v([x0, j, nz]));
        }
        let beta = close_path(ring);
        let j = hole + 1;
        mesh.surface_tags.insert(format!("cut_{j}"), wall);
        mesh.curve_tags.insert(format!("alpha_{j}"), alpha);
        mesh.curve_tags.insert(format!("beta_{j}"), beta);
    }
    Ok(mesh)
}

fn close_path(vs: Vec<usize>) -> Vec<[usize; 2]> {
    (0..vs.len()).map(|i| [vs[i], vs[(i + 1) % vs.len()]]).collect()
}

/// Tet faces whose three vertices satisfy `inside`, deduplicated and
/// oriented so that their normal has positive component along `dir`.
fn collect_planar_faces(mesh: &TetMesh, inside: impl Fn(usize) -> bool, dir: Vec3) -> Vec<[usize; 3]> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for t in &mesh.tets {
        for skip in 0..4 {
            let mut f = [0; 3];
            let mut c = 0;
            for (k, &v) in t.iter().enumerate() {
                if k != skip {
                    f[c] = v;
                    c += 1;
                }
            }
            if f.iter().all(|&v| inside(v)) && seen.insert(super::sort3(f).0) {
                if mesh.face_area_vector(&f).dot(&dir) < 0.0 {
                    f.swap(1, 2);
                }
                out.push(f);
            }
        }
    }
    out
}
