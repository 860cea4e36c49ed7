use crate::complex::{barycentric_gradients, edge_form, face_form, CochainComplex, LOCAL_FACES};
use crate::mesh::{interior_vertices, p1_laplacian, vertex_areas, vertex_normals, HarmonicSolver, TetMesh, Vec3};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMethod {
    /// Volumetric shape gradient condensed onto the boundary through the
    /// discrete harmonic extension. Exact for the discrete eigenvalue when
    /// the interior motion is the harmonic extension of the normal speed.
    #[default]
    Recovered,
    /// |v|² of the Whitney proxy on boundary faces (edge-midpoint rule).
    WhitneyTrace,
}

/// Mesh data shared by every density on one mesh.
pub struct DensityContext {
    /// Boundary vertices in mesh order.
    pub boundary_vertices: Vec<usize>,
    /// Position of each mesh vertex in `boundary_vertices` (usize::MAX inside).
    pub boundary_index: Vec<usize>,
    pub normals: Vec<Vec3>,
    /// Lumped (one third of adjacent faces) boundary areas, per mesh vertex.
    pub areas: Vec<f64>,
    interior: Vec<usize>,
    solver: Option<HarmonicSolver>,
    /// Owning tet of each mesh boundary face.
    face_tets: Vec<usize>,
}

impl DensityContext {
    pub fn new(mesh: &TetMesh) -> Result<Self> {
        let boundary_vertices = mesh.boundary_vertices();
        let mut boundary_index = vec![usize::MAX; mesh.vertices.len()];
        for (i, &v) in boundary_vertices.iter().enumerate() {
            boundary_index[v] = i;
        }
        let interior = interior_vertices(mesh);
        let solver = if interior.is_empty() {
            None
        } else {
            Some(HarmonicSolver::new(&p1_laplacian(mesh), &interior, &boundary_vertices)?)
        };
        let mut owner = std::collections::HashMap::new();
        for (t, tv) in mesh.tets.iter().enumerate() {
            for f in LOCAL_FACES.iter() {
                let mut key = f.map(|i| tv[i]);
                key.sort_unstable();
                owner.insert(key, t);
            }
        }
        let face_tets = mesh
            .boundary_faces
            .iter()
            .map(|f| {
                let mut key = *f;
                key.sort_unstable();
                owner[&key]
            })
            .collect();
        Ok(DensityContext {
            boundary_vertices,
            boundary_index,
            normals: vertex_normals(mesh),
            areas: vertex_areas(mesh),
            interior,
            solver,
            face_tets,
        })
    }

    /// Boundary loads equivalent, under harmonic extension, to the given
    /// per-vertex vector loads. Returned per boundary vertex.
    fn condense(&self, loads: &[Vec3]) -> Vec<Vec3> {
        let mut out: Vec<Vec3> = self.boundary_vertices.iter().map(|&v| loads[v]).collect();
        if let Some(s) = &self.solver {
            let gi: Vec<Vec<f64>> =
                (0..3).map(|c| self.interior.iter().map(|&v| loads[v][c]).collect()).collect();
            let gb = s.condense(&gi);
            for (c, col) in gb.iter().enumerate() {
                for (o, x) in out.iter_mut().zip(col) {
                    o[c] += x;
                }
            }
        }
        out
    }
}

/// Piecewise-constant vector field of a divergence-free face cochain,
/// one value per tet.
pub fn tet_fields(cc: &CochainComplex, u: &[f64]) -> Vec<Vec3> {
    let bary = [0.25; 4];
    (0..cc.num_tets())
        .map(|t| {
            let (g, _) = barycentric_gradients(&cc.mesh.tet_points(t));
            let tf = &cc.tet_faces[t];
            (0..4).fold(Vec3::zeros(), |acc, a| acc + tf[a].1 * u[tf[a].0] * face_form(&g, a, &bary))
        })
        .collect()
}

/// Volume form of the shape derivative for a vertex motion X:
/// ∫ (u·w) div X − u·(DX)w − w·(DX)u. For w = u this is the rate of
/// decrease of ‖u‖² under Piola transport, and λ̇ = −λ · (this).
pub fn volume_form(cc: &CochainComplex, u: &[Vec3], w: &[Vec3], x: &[[f64; 3]]) -> f64 {
    let mut total = 0.0;
    for (t, tv) in cc.mesh.tets.iter().enumerate() {
        let (g, vol) = barycentric_gradients(&cc.mesh.tet_points(t));
        let (a, b) = (u[t], w[t]);
        let ab = a.dot(&b);
        let mut s = 0.0;
        for k in 0..4 {
            let xk = Vec3::from(x[tv[k]]);
            s += ab * xk.dot(&g[k]) - xk.dot(&a) * g[k].dot(&b) - xk.dot(&b) * g[k].dot(&a);
        }
        total += vol * s;
    }
    total
}

/// Per-vertex vector loads G with volume_form(u, w, X) = Σ_k X_k·G_k.
pub fn vertex_loads(cc: &CochainComplex, u: &[Vec3], w: &[Vec3]) -> Vec<Vec3> {
    let mut out = vec![Vec3::zeros(); cc.num_vertices()];
    for (t, tv) in cc.mesh.tets.iter().enumerate() {
        let (g, vol) = barycentric_gradients(&cc.mesh.tet_points(t));
        let (a, b) = (u[t], w[t]);
        let ab = a.dot(&b);
        for k in 0..4 {
            out[tv[k]] += vol * (ab * g[k] - g[k].dot(&b) * a - g[k].dot(&a) * b);
        }
    }
    out
}

/// A boundary density ρ with ∫_∂Ω f ρ dσ approximated by `integrate`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryDensity {
    pub method: DensityMethod,
    /// Boundary vertices (mesh indices).
    pub vertices: Vec<usize>,
    /// Nodal density values at `vertices`.
    pub nodal: Vec<f64>,
    /// Lumped areas at `vertices`.
    pub areas: Vec<f64>,
    /// Whitney trace only: density at the three edge midpoints of each
    /// boundary face, with the face area.
    #[serde(skip)]
    pub face_midpoints: Vec<([usize; 3], [f64; 3], f64)>,
}

impl BoundaryDensity {
    /// ∫ f ρ dσ for a per-mesh-vertex speed f.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        match self.method {
            DensityMethod::Recovered => {
                self.vertices.iter().zip(&self.nodal).zip(&self.areas).map(|((&v, r), a)| f[v] * r * a).sum()
            }
            DensityMethod::WhitneyTrace => self
                .face_midpoints
                .iter()
                .map(|(tri, rho, area)| {
                    (0..3).map(|k| 0.5 * (f[tri[k]] + f[tri[(k + 1) % 3]]) * rho[k]).sum::<f64>() * area / 3.0
                })
                .sum(),
        }
    }

    /// ∫ |f| |ρ| dσ, the scale used for relative errors.
    pub fn integrate_abs(&self, f: &[f64]) -> f64 {
        let af: Vec<f64> = f.iter().map(|x| x.abs()).collect();
        let mut abs = self.clone();
        abs.nodal.iter_mut().for_each(|r| *r = r.abs());
        abs.face_midpoints.iter_mut().for_each(|(_, r, _)| r.iter_mut().for_each(|x| *x = x.abs()));
        abs.integrate(&af)
    }

    pub fn total(&self) -> f64 {
        match self.method {
            DensityMethod::Recovered => self.nodal.iter().zip(&self.areas).map(|(r, a)| r * a).sum(),
            DensityMethod::WhitneyTrace => {
                self.face_midpoints.iter().map(|(_, r, a)| (r[0] + r[1] + r[2]) * a / 3.0).sum()
            }
        }
    }

    /// Nodal values scattered to all mesh vertices (zero inside).
    pub fn per_vertex(&self, nverts: usize) -> Vec<f64> {
        let mut out = vec![0.0; nverts];
        for (&v, &r) in self.vertices.iter().zip(&self.nodal) {
            out[v] = r;
        }
        out
    }
}

/// Bilinear recovered density of the pair of face cochains (u, w):
/// the normal component of the condensed vertex loads per unit area.
/// For u = w it is the density of |u|² on the boundary.
pub fn cross_density(cc: &CochainComplex, ctx: &DensityContext, u: &[f64], w: &[f64]) -> BoundaryDensity {
    let tu = tet_fields(cc, u);
    let tw = if std::ptr::eq(u, w) { tu.clone() } else { tet_fields(cc, w) };
    let loads = vertex_loads(cc, &tu, &tw);
    let gb = ctx.condense(&loads);
    let vertices = ctx.boundary_vertices.clone();
    let areas: Vec<f64> = vertices.iter().map(|&v| ctx.areas[v]).collect();
    let nodal = vertices.iter().zip(&gb).zip(&areas).map(|((&v, g), a)| g.dot(&ctx.normals[v]) / a).collect();
    BoundaryDensity { method: DensityMethod::Recovered, vertices, nodal, areas, face_midpoints: vec![] }
}

/// Recovered density of |u|² for one eigenfield.
pub fn boundary_density(cc: &CochainComplex, ctx: &DensityContext, u: &[f64]) -> BoundaryDensity {
    cross_density(cc, ctx, u, u)
}

/// |v|² of an edge proxy on the boundary, sampled at edge midpoints of the
/// boundary faces inside their owning tets. Nodal values are the
/// area-weighted averages of adjacent midpoint values.
pub fn whitney_trace_density(cc: &CochainComplex, ctx: &DensityContext, v: &[f64]) -> BoundaryDensity {
    whitney_cross_density(cc, ctx, v, v)
}

/// Bilinear version: v·w on the boundary.
pub fn whitney_cross_density(cc: &CochainComplex, ctx: &DensityContext, v: &[f64], w: &[f64]) -> BoundaryDensity {
    let mesh = &cc.mesh;
    let mut face_midpoints = Vec::with_capacity(mesh.boundary_faces.len());
    let mut acc = vec![0.0; mesh.vertices.len()];
    let mut wsum = vec![0.0; mesh.vertices.len()];
    for (bf, &t) in mesh.boundary_faces.iter().zip(&ctx.face_tets) {
        let tv = mesh.tets[t];
        let (g, _) = barycentric_gradients(&mesh.tet_points(t));
        let te = &cc.tet_edges[t];
        let field = |x: &[f64], l: &[f64; 4]| {
            (0..6).fold(Vec3::zeros(), |acc, e| acc + te[e].1 * x[te[e].0] * edge_form(&g, e, l))
        };
        let local = |gv: usize| tv.iter().position(|&x| x == gv).unwrap();
        let mut rho = [0.0; 3];
        for k in 0..3 {
            let mut l = [0.0; 4];
            l[local(bf[k])] += 0.5;
            l[local(bf[(k + 1) % 3])] += 0.5;
            rho[k] = field(v, &l).dot(&field(w, &l));
        }
        let area = mesh.face_area_vector(bf).norm();
        for k in 0..3 {
            for &end in &[bf[k], bf[(k + 1) % 3]] {
                acc[end] += rho[k] * area;
                wsum[end] += area;
            }
        }
        face_midpoints.push((*bf, rho, area));
    }
    let vertices = ctx.boundary_vertices.clone();
    let nodal = vertices.iter().map(|&v| acc[v] / wsum[v]).collect();
    let areas = vertices.iter().map(|&v| ctx.areas[v]).collect();
    BoundaryDensity { method: DensityMethod::WhitneyTrace, vertices, nodal, areas, face_midpoints }
}

/// dλ/dt = −λ ∫ f ρ dσ.
pub fn shape_derivative(lambda: f64, density: &BoundaryDensity, speed: &[f64]) -> f64 {
    -lambda * density.integrate(speed)
}

/// Off-diagonal entry −λ ∫ f ρ(u, w) dσ of the derivative matrix of a
/// degenerate cluster. Kernel fields (|λ| ≤ threshold) have no cross term.
pub fn cross_term(lambda: f64, kernel_threshold: f64, density: &BoundaryDensity, speed: &[f64]) -> Result<f64> {
    if lambda.abs() <= kernel_threshold {
        return Err(Error::ZeroEigenvalue(lambda));
    }
    Ok(-lambda * density.integrate(speed))
}
