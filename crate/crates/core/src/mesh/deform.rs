use super::{signed_volume, TetMesh, Vec3};
use crate::sparse::{Cholesky, Csr};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// A vertex displacement field X together with its boundary normal speed
/// f = X·ν at the boundary vertices.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeformationField {
    pub boundary_vertices: Vec<usize>,
    pub boundary_speed: Vec<f64>,
    /// One displacement per mesh vertex.
    pub displacement: Vec<[f64; 3]>,
    pub description: String,
}

impl DeformationField {
    /// Wraps an explicit volumetric displacement; the speed is X·ν at the
    /// boundary vertices.
    pub fn from_displacement(mesh: &TetMesh, displacement: Vec<[f64; 3]>, description: &str) -> DeformationField {
        assert_eq!(displacement.len(), mesh.vertices.len());
        let normals = vertex_normals(mesh);
        let boundary_vertices = mesh.boundary_vertices();
        let boundary_speed =
            boundary_vertices.iter().map(|&v| Vec3::from(displacement[v]).dot(&normals[v])).collect();
        DeformationField { boundary_vertices, boundary_speed, displacement, description: description.into() }
    }

    /// X = x − origin.
    pub fn dilation(mesh: &TetMesh, origin: [f64; 3]) -> DeformationField {
        let o = Vec3::from(origin);
        let d = mesh.vertices.iter().map(|p| (Vec3::from(*p) - o).into()).collect();
        Self::from_displacement(mesh, d, "dilation")
    }

    /// X ≡ e (rigid translation).
    pub fn translation(mesh: &TetMesh, e: [f64; 3]) -> DeformationField {
        Self::from_displacement(mesh, vec![e; mesh.vertices.len()], "translation")
    }

    pub fn zero(mesh: &TetMesh) -> DeformationField {
        Self::from_displacement(mesh, vec![[0.0; 3]; mesh.vertices.len()], "zero")
    }

    /// Linear combination of fields on the same mesh.
    pub fn combine(fields: &[(&DeformationField, f64)], description: &str) -> DeformationField {
        let first = fields[0].0;
        let mut disp = vec![[0.0; 3]; first.displacement.len()];
        let mut speed = vec![0.0; first.boundary_speed.len()];
        for (f, c) in fields {
            for (d, x) in disp.iter_mut().zip(&f.displacement) {
                for k in 0..3 {
                    d[k] += c * x[k];
                }
            }
            for (s, x) in speed.iter_mut().zip(&f.boundary_speed) {
                *s += c * x;
            }
        }
        DeformationField {
            boundary_vertices: first.boundary_vertices.clone(),
            boundary_speed: speed,
            displacement: disp,
            description: description.into(),
        }
    }

    /// Boundary speed scattered to a per-vertex array (zero inside).
    pub fn speed_per_vertex(&self, nverts: usize) -> Vec<f64> {
        let mut f = vec![0.0; nverts];
        for (&v, &s) in self.boundary_vertices.iter().zip(&self.boundary_speed) {
            f[v] = s;
        }
        f
    }
}

/// Area-weighted unit outward normals at boundary vertices (zero inside).
pub fn vertex_normals(mesh: &TetMesh) -> Vec<Vec3> {
    let mut n = vec![Vec3::zeros(); mesh.vertices.len()];
    for f in &mesh.boundary_faces {
        let a = mesh.face_area_vector(f);
        for &v in f {
            n[v] += a;
        }
    }
    for v in n.iter_mut() {
        let l = v.norm();
        if l > 0.0 {
            *v /= l;
        }
    }
    n
}

/// Lumped boundary areas: one third of each incident boundary face.
pub fn vertex_areas(mesh: &TetMesh) -> Vec<f64> {
    let mut a = vec![0.0; mesh.vertices.len()];
    for f in &mesh.boundary_faces {
        let s = mesh.face_area_vector(f).norm() / 3.0;
        for &v in f {
            a[v] += s;
        }
    }
    a
}

/// P1 stiffness matrix ∫∇φ_i·∇φ_j.
pub fn p1_laplacian(mesh: &TetMesh) -> Csr {
    let mut trip = Vec::with_capacity(16 * mesh.tets.len());
    for (t, tv) in mesh.tets.iter().enumerate() {
        let (g, vol) = crate::complex::barycentric_gradients(&mesh.tet_points(t));
        for a in 0..4 {
            for b in 0..4 {
                trip.push((tv[a], tv[b], vol * g[a].dot(&g[b])));
            }
        }
    }
    Csr::from_triplets(mesh.vertices.len(), mesh.vertices.len(), &trip)
}

/// Componentwise discrete harmonic extension of the boundary data f·ν.
pub fn harmonic_extension(mesh: &TetMesh, boundary_speed: &[f64]) -> Result<DeformationField> {
    let bverts = mesh.boundary_vertices();
    if boundary_speed.len() != bverts.len() {
        return Err(Error::InvalidParameter(format!(
            "boundary speed has {} entries, mesh has {} boundary vertices",
            boundary_speed.len(),
            bverts.len()
        )));
    }
    let normals = vertex_normals(mesh);
    let nv = mesh.vertices.len();
    let mut disp = vec![[0.0; 3]; nv];
    for (&v, &f) in bverts.iter().zip(boundary_speed) {
        disp[v] = (normals[v] * f).into();
    }
    let interior = interior_vertices(mesh);
    if !interior.is_empty() {
        let lap = p1_laplacian(mesh);
        let solver = HarmonicSolver::new(&lap, &interior, &bverts)?;
        let cols: Vec<Vec<f64>> = (0..3).map(|k| bverts.iter().map(|&v| disp[v][k]).collect()).collect();
        let sol = solver.extend(&cols)?;
        for (c, x) in sol.iter().enumerate() {
            for (i, &v) in interior.iter().enumerate() {
                disp[v][c] = x[i];
            }
        }
    }
    Ok(DeformationField {
        boundary_vertices: bverts,
        boundary_speed: boundary_speed.to_vec(),
        displacement: disp,
        description: "harmonic extension".into(),
    })
}

pub(crate) fn interior_vertices(mesh: &TetMesh) -> Vec<usize> {
    let mut on = vec![false; mesh.vertices.len()];
    for &v in &mesh.boundary_vertices() {
        on[v] = true;
    }
    (0..on.len()).filter(|&v| !on[v]).collect()
}

/// Dirichlet solver for the P1 Laplacian: interior values from boundary data,
/// and the adjoint condensation of interior loads onto the boundary.
pub(crate) struct HarmonicSolver {
    a_ib: Csr,
    a_ii: Csr,
    chol: Cholesky,
}

impl HarmonicSolver {
    pub fn new(lap: &Csr, interior: &[usize], boundary: &[usize]) -> Result<Self> {
        let a_ii = lap.submatrix(interior, interior);
        let a_ib = lap.submatrix(interior, boundary);
        let chol = Cholesky::new(&a_ii)?;
        Ok(HarmonicSolver { a_ib, a_ii, chol })
    }

    /// Interior values x solving A_II x = −A_IB g for each column g.
    pub fn extend(&self, data: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let rhs: Vec<Vec<f64>> = data.iter().map(|g| self.a_ib.mul_vec(g).iter().map(|v| -v).collect()).collect();
        let sol = self.chol.solve_block(&rhs);
        for (x, b) in sol.iter().zip(&rhs) {
            let r = self.a_ii.mul_vec(x);
            let res = r.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
            let scale = crate::sparse::norm(b).max(f64::MIN_POSITIVE);
            if res > 1e-8 * scale {
                return Err(Error::SolverFailure { residual: res / scale });
            }
        }
        Ok(sol)
    }

    /// Boundary loads equivalent to interior loads `g_i` under harmonic
    /// extension: −A_BI A_II⁻¹ g_i.
    pub fn condense(&self, interior_loads: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let sol = self.chol.solve_block(interior_loads);
        sol.iter().map(|y| self.a_ib.tmul_vec(y).iter().map(|v| -v).collect()).collect()
    }
}

/// Moves every vertex by t·X. Incidence and tags are untouched.
pub fn deform(mesh: &TetMesh, field: &DeformationField, t: f64) -> Result<TetMesh> {
    if field.displacement.len() != mesh.vertices.len() {
        return Err(Error::InvalidParameter("deformation field does not match the mesh".into()));
    }
    let mut out = mesh.clone();
    if t != 0.0 {
        for (p, d) in out.vertices.iter_mut().zip(&field.displacement) {
            for k in 0..3 {
                p[k] += t * d[k];
            }
        }
    }
    for (i, tv) in out.tets.iter().enumerate() {
        let vol = signed_volume(&tv.map(|v| Vec3::from(out.vertices[v])));
        if vol <= 0.0 {
            return Err(Error::TetInversion { tet: i, volume: vol });
        }
    }
    Ok(out)
}
