//! Tetrahedral meshes with tagged cut surfaces and boundary cycles.
//!
//! Connectivity is fixed once a mesh is built; deformations only move
//! vertices, so every mesh in a family shares the same incidence structure.

mod deform;
mod generate;
pub mod harmonics;
mod io;

pub use deform::{deform, harmonic_extension, p1_laplacian, vertex_areas, vertex_normals, DeformationField};
pub(crate) use deform::{interior_vertices, HarmonicSolver};
pub use generate::{generate_ball, generate_handlebody, generate_solid_torus};
pub use io::{read_gmsh, read_tmesh, write_tmesh};

use crate::{Error, Result};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

pub type Vec3 = Vector3<f64>;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TetMesh {
    pub vertices: Vec<[f64; 3]>,
    /// Positively oriented tetrahedra.
    pub tets: Vec<[usize; 4]>,
    /// Outward-oriented boundary triangles.
    pub boundary_faces: Vec<[usize; 3]>,
    /// Named oriented face sets (cut surfaces `cut_<j>`).
    pub surface_tags: BTreeMap<String, Vec<[usize; 3]>>,
    /// Named oriented edge paths (boundary cycles `alpha_<j>`, `beta_<j>`).
    pub curve_tags: BTreeMap<String, Vec<[usize; 2]>>,
    pub domain_name: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QualityReport {
    pub min_dihedral_deg: f64,
    /// Circumradius over three times the inradius; 1 for a regular tet.
    pub max_aspect_ratio: f64,
    pub h_max: f64,
    pub min_volume: f64,
}

/// Faces of a positively oriented tet, each oriented outward.
pub(crate) const OUTWARD_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];

pub(crate) fn signed_volume(p: &[Vec3; 4]) -> f64 {
    Matrix3::from_columns(&[p[1] - p[0], p[2] - p[0], p[3] - p[0]]).determinant() / 6.0
}

impl TetMesh {
    /// Builds a mesh from raw vertices and tets. Tets are reoriented to
    /// positive volume and the outward boundary is extracted.
    pub fn new(vertices: Vec<[f64; 3]>, mut tets: Vec<[usize; 4]>, domain_name: &str) -> Result<TetMesh> {
        for (i, t) in tets.iter_mut().enumerate() {
            if t.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidParameter(format!("tet {i} references a missing vertex")));
            }
            let p = t.map(|v| Vec3::from(vertices[v]));
            let vol = signed_volume(&p);
            if vol == 0.0 || !vol.is_finite() {
                return Err(Error::DegenerateTet { tet: i, volume: vol });
            }
            if vol < 0.0 {
                t.swap(2, 3);
            }
        }
        let boundary_faces = extract_boundary(&tets)?;
        Ok(TetMesh {
            vertices,
            tets,
            boundary_faces,
            surface_tags: BTreeMap::new(),
            curve_tags: BTreeMap::new(),
            domain_name: domain_name.to_string(),
        })
    }

    pub fn point(&self, i: usize) -> Vec3 {
        Vec3::from(self.vertices[i])
    }

    pub fn tet_points(&self, t: usize) -> [Vec3; 4] {
        self.tets[t].map(|v| self.point(v))
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        signed_volume(&self.tet_points(t))
    }

    pub fn volume(&self) -> f64 {
        (0..self.tets.len()).map(|t| self.tet_volume(t)).sum()
    }

    /// Area vector (½ cross product) of an oriented triangle.
    pub fn face_area_vector(&self, f: &[usize; 3]) -> Vec3 {
        let p = f.map(|v| self.point(v));
        0.5 * (p[1] - p[0]).cross(&(p[2] - p[0]))
    }

    pub fn boundary_area(&self) -> f64 {
        self.boundary_faces.iter().map(|f| self.face_area_vector(f).norm()).sum()
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        let mut on = vec![false; self.vertices.len()];
        for f in &self.boundary_faces {
            for &v in f {
                on[v] = true;
            }
        }
        (0..on.len()).filter(|&v| on[v]).collect()
    }

    pub fn diameter(&self) -> f64 {
        let b = self.boundary_vertices();
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for &v in &b {
            let p = self.point(v);
            lo = lo.inf(&p);
            hi = hi.sup(&p);
        }
        (hi - lo).norm()
    }

    /// Counts (V, E, F, T) of the simplicial complex.
    pub fn simplex_counts(&self) -> (usize, usize, usize, usize) {
        let mut edges = std::collections::HashSet::new();
        let mut faces = std::collections::HashSet::new();
        for t in &self.tets {
            for i in 0..4 {
                for j in i + 1..4 {
                    edges.insert(sorted2(t[i], t[j]));
                }
                let mut f = [t[(i + 1) % 4], t[(i + 2) % 4], t[(i + 3) % 4]];
                f.sort_unstable();
                faces.insert(f);
            }
        }
        (self.vertices.len(), edges.len(), faces.len(), self.tets.len())
    }

    pub fn euler_characteristic(&self) -> i64 {
        let (v, e, f, t) = self.simplex_counts();
        v as i64 - e as i64 + f as i64 - t as i64
    }

    /// Connected components of the boundary surface as lists of face indices.
    pub fn boundary_components(&self) -> Vec<Vec<usize>> {
        let mut edge_faces: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (i, f) in self.boundary_faces.iter().enumerate() {
            for k in 0..3 {
                edge_faces.entry(sorted2(f[k], f[(k + 1) % 3])).or_default().push(i);
            }
        }
        let mut comp = vec![usize::MAX; self.boundary_faces.len()];
        let mut out = Vec::new();
        for s in 0..self.boundary_faces.len() {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut stack = vec![s];
            comp[s] = id;
            let mut members = vec![];
            while let Some(f) = stack.pop() {
                members.push(f);
                let fv = self.boundary_faces[f];
                for k in 0..3 {
                    for &g in &edge_faces[&sorted2(fv[k], fv[(k + 1) % 3])] {
                        if comp[g] == usize::MAX {
                            comp[g] = id;
                            stack.push(g);
                        }
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    /// Euler characteristic of each boundary component.
    pub fn boundary_euler_characteristics(&self) -> Vec<i64> {
        self.boundary_components()
            .iter()
            .map(|faces| {
                let mut vs = std::collections::HashSet::new();
                let mut es = std::collections::HashSet::new();
                for &f in faces {
                    let fv = self.boundary_faces[f];
                    for k in 0..3 {
                        vs.insert(fv[k]);
                        es.insert(sorted2(fv[k], fv[(k + 1) % 3]));
                    }
                }
                vs.len() as i64 - es.len() as i64 + faces.len() as i64
            })
            .collect()
    }

    /// Total genus ℓ of the boundary, from Euler characteristics.
    pub fn boundary_genus(&self) -> usize {
        self.boundary_euler_characteristics().iter().map(|&c| ((2 - c) / 2).max(0) as usize).sum()
    }

    pub fn quality(&self) -> QualityReport {
        let mut min_dihedral = f64::INFINITY;
        let mut max_aspect = 0.0f64;
        let mut h_max = 0.0f64;
        let mut min_volume = f64::INFINITY;
        for t in 0..self.tets.len() {
            let p = self.tet_points(t);
            let vol = signed_volume(&p);
            min_volume = min_volume.min(vol);
            let mut area_sum = 0.0;
            let mut normals = [Vec3::zeros(); 4];
            for (k, f) in OUTWARD_FACES.iter().enumerate() {
                let n = 0.5 * (p[f[1]] - p[f[0]]).cross(&(p[f[2]] - p[f[0]]));
                area_sum += n.norm();
                normals[k] = n.normalize();
            }
            for i in 0..4 {
                for j in i + 1..4 {
                    h_max = h_max.max((p[i] - p[j]).norm());
                    // faces opposite i and j meet along the edge (k,l)
                    let c = -normals[i].dot(&normals[j]);
                    min_dihedral = min_dihedral.min(c.clamp(-1.0, 1.0).acos().to_degrees());
                }
            }
            let inradius = 3.0 * vol / area_sum;
            let circumradius = circumradius(&p);
            max_aspect = max_aspect.max(circumradius / (3.0 * inradius));
        }
        QualityReport { min_dihedral_deg: min_dihedral, max_aspect_ratio: max_aspect, h_max, min_volume }
    }

    /// Returns a copy with all coordinates multiplied by `s`.
    pub fn scaled(&self, s: f64) -> TetMesh {
        let mut m = self.clone();
        m.vertices.iter_mut().for_each(|p| p.iter_mut().for_each(|x| *x *= s));
        m
    }

    /// Checks the combinatorial invariants: face multiplicities, opposite
    /// induced orientations on interior faces, relative-cycle tags.
    pub fn validate(&self) -> Result<()> {
        let mut seen: HashMap<[usize; 3], Vec<i8>> = HashMap::new();
        for (i, t) in self.tets.iter().enumerate() {
            let vol = self.tet_volume(i);
            if vol <= 0.0 {
                return Err(Error::DegenerateTet { tet: i, volume: vol });
            }
            for f in OUTWARD_FACES {
                let face = f.map(|k| t[k]);
                let (key, s) = sort3(face);
                seen.entry(key).or_default().push(s);
            }
        }
        for (f, s) in &seen {
            match s.len() {
                1 => {}
                2 if s[0] == -s[1] => {}
                _ => return Err(Error::NonManifold(format!("face {f:?} has incident orientations {s:?}"))),
            }
        }
        let nb = seen.values().filter(|s| s.len() == 1).count();
        if nb != self.boundary_faces.len() {
            return Err(Error::NonManifold("boundary face list is stale".into()));
        }
        let bedges: std::collections::HashSet<(usize, usize)> = self
            .boundary_faces
            .iter()
            .flat_map(|f| (0..3).map(move |k| sorted2(f[k], f[(k + 1) % 3])))
            .collect();
        for (name, faces) in &self.surface_tags {
            let mut chain: HashMap<(usize, usize), i64> = HashMap::new();
            for f in faces {
                if !seen.contains_key(&sort3(*f).0) {
                    return Err(Error::NonManifold(format!("surface tag {name} uses a non-face")));
                }
                for k in 0..3 {
                    let (a, b) = (f[k], f[(k + 1) % 3]);
                    *chain.entry(sorted2(a, b)).or_default() += if a < b { 1 } else { -1 };
                }
            }
            if let Some((e, _)) = chain.iter().find(|(e, &c)| c != 0 && !bedges.contains(e)) {
                return Err(Error::NonManifold(format!("cut surface {name} has boundary edge {e:?} inside the domain")));
            }
        }
        for (name, edges) in &self.curve_tags {
            let mut deg: HashMap<usize, i64> = HashMap::new();
            for &[a, b] in edges {
                if !bedges.contains(&sorted2(a, b)) {
                    return Err(Error::NonManifold(format!("curve {name} leaves the boundary at ({a},{b})")));
                }
                *deg.entry(a).or_default() -= 1;
                *deg.entry(b).or_default() += 1;
            }
            if deg.values().any(|&d| d != 0) {
                return Err(Error::NonManifold(format!("curve {name} is not closed")));
            }
        }
        Ok(())
    }
}

fn circumradius(p: &[Vec3; 4]) -> f64 {
    let a = p[1] - p[0];
    let b = p[2] - p[0];
    let c = p[3] - p[0];
    let num = a.norm_squared() * b.cross(&c) + b.norm_squared() * c.cross(&a) + c.norm_squared() * a.cross(&b);
    num.norm() / (2.0 * a.dot(&b.cross(&c)).abs())
}

pub(crate) fn sorted2(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Sorts a triple, returning the permutation parity as ±1.
pub(crate) fn sort3(mut f: [usize; 3]) -> ([usize; 3], i8) {
    let mut s = 1;
    for i in 0..3 {
        for j in 0..2 - i {
            if f[j] > f[j + 1] {
                f.swap(j, j + 1);
                s = -s;
            }
        }
    }
    (f, s)
}

fn extract_boundary(tets: &[[usize; 4]]) -> Result<Vec<[usize; 3]>> {
    let mut count: HashMap<[usize; 3], (usize, [usize; 3])> = HashMap::new();
    let mut order = Vec::new();
    for t in tets {
        for f in OUTWARD_FACES {
            let face = f.map(|k| t[k]);
            let key = sort3(face).0;
            let e = count.entry(key).or_insert_with(|| {
                order.push(key);
                (0, face)
            });
            e.0 += 1;
            if e.0 > 2 {
                return Err(Error::NonManifold(format!("face {key:?} shared by more than two tets")));
            }
        }
    }
    Ok(order.into_iter().filter(|k| count[k].0 == 1).map(|k| count[&k].1).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_tet_is_oriented_and_closed() {
        let m = TetMesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2, 3]],
            "tet",
        )
        .unwrap();
        assert!(m.tet_volume(0) > 0.0);
        assert_eq!(m.boundary_faces.len(), 4);
        assert_eq!(m.euler_characteristic(), 1);
        assert_eq!(m.boundary_euler_characteristics(), vec![2]);
        // outward: each face normal points away from the opposite vertex
        let c = (0..4).map(|v| m.point(v)).sum::<Vec3>() / 4.0;
        for f in &m.boundary_faces {
            let centre = f.iter().map(|&v| m.point(v)).sum::<Vec3>() / 3.0;
            assert!(m.face_area_vector(f).dot(&(centre - c)) > 0.0);
        }
        m.validate().unwrap();
        let q = m.quality();
        assert!(q.max_aspect_ratio >= 1.0 - 1e-12);
    }

    #[test]
    fn regular_tet_has_unit_aspect() {
        let s = 1.0 / 2f64.sqrt();
        let m = TetMesh::new(
            vec![[1.0, 0.0, -s], [-1.0, 0.0, -s], [0.0, 1.0, s], [0.0, -1.0, s]],
            vec![[0, 1, 2, 3]],
            "regular",
        )
        .unwrap();
        let q = m.quality();
        assert!((q.max_aspect_ratio - 1.0).abs() < 1e-12);
        assert!((q.min_dihedral_deg - 70.528_779_365_509_3).abs() < 1e-9);
    }
}
