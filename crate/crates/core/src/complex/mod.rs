//! Cochain complex of a tetrahedral mesh: signed incidence matrices, Whitney
//! mass matrices, and the homology of the boundary surface.
//!
//! Edges are oriented from the lower to the higher vertex index and faces
//! carry the orientation of their sorted vertex triple, so every incidence
//! entry is ±1 and `d1·d0 = 0`, `d2·d1 = 0` hold in exact arithmetic.

pub mod homology;
pub mod snf;
mod whitney;

pub use homology::{flux_vector, homology_basis, period_vector, BoundaryCohomology, HomologyBasis};
pub use whitney::{
    barycentric_gradients, edge_curl, edge_form, face_form, local_matrices, triangle_wedge, LocalMatrices, LOCAL_EDGES,
    LOCAL_FACES,
};

use crate::mesh::{sort3, TetMesh};
use crate::sparse::Csr;
use crate::{Error, Result};
use rayon::prelude::*;
use std::collections::HashMap;
use std::path::Path;

/// How element loops are executed. Both modes scatter in tet order, so they
/// produce bit-identical matrices; `Sequential` additionally avoids threads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Assembly {
    #[default]
    Parallel,
    Sequential,
}

#[derive(Clone, Debug)]
pub struct CochainComplex {
    pub mesh: TetMesh,
    pub edges: Vec<[usize; 2]>,
    pub faces: Vec<[usize; 3]>,
    /// Global edge of each local edge, with the relative orientation.
    pub tet_edges: Vec<[(usize, f64); 6]>,
    pub tet_faces: Vec<[(usize, f64); 4]>,
    pub d0: Csr,
    pub d1: Csr,
    pub d2: Csr,
    pub m0: Csr,
    pub m1: Csr,
    pub m2: Csr,
    pub boundary_vertices: Vec<usize>,
    pub boundary_edges: Vec<usize>,
    /// Boundary faces with the sign of the outward orientation relative to
    /// the sorted one.
    pub boundary_faces: Vec<(usize, f64)>,
    pub is_boundary_vertex: Vec<bool>,
    pub is_boundary_edge: Vec<bool>,
    pub is_boundary_face: Vec<bool>,
    pub assembly: Assembly,
    edge_map: HashMap<(usize, usize), usize>,
    face_map: HashMap<[usize; 3], usize>,
}

pub fn build_complex(mesh: &TetMesh) -> Result<CochainComplex> {
    build_complex_with(mesh, Assembly::Parallel)
}

pub fn build_complex_with(mesh: &TetMesh, assembly: Assembly) -> Result<CochainComplex> {
    for t in 0..mesh.tets.len() {
        let v = mesh.tet_volume(t);
        if !(v > 0.0) {
            return Err(Error::DegenerateTet { tet: t, volume: v });
        }
    }
    let nv = mesh.vertices.len();
    let mut edges = Vec::new();
    let mut edge_map = HashMap::new();
    let mut faces = Vec::new();
    let mut face_map = HashMap::new();
    let mut tet_edges = Vec::with_capacity(mesh.tets.len());
    let mut tet_faces = Vec::with_capacity(mesh.tets.len());
    for t in &mesh.tets {
        let mut te = [(0, 0.0); 6];
        for (k, &[i, j]) in LOCAL_EDGES.iter().enumerate() {
            let (a, b) = (t[i], t[j]);
            let key = if a < b { (a, b) } else { (b, a) };
            let id = *edge_map.entry(key).or_insert_with(|| {
                edges.push([key.0, key.1]);
                edges.len() - 1
            });
            te[k] = (id, if a < b { 1.0 } else { -1.0 });
        }
        tet_edges.push(te);
        let mut tf = [(0, 0.0); 4];
        for (k, f) in LOCAL_FACES.iter().enumerate() {
            let (key, s) = sort3(f.map(|i| t[i]));
            let id = *face_map.entry(key).or_insert_with(|| {
                faces.push(key);
                faces.len() - 1
            });
            tf[k] = (id, s as f64);
        }
        tet_faces.push(tf);
    }
    let (ne, nf, nt) = (edges.len(), faces.len(), mesh.tets.len());

    let mut trip = Vec::with_capacity(2 * ne);
    for (e, &[a, b]) in edges.iter().enumerate() {
        trip.push((e, a, -1.0));
        trip.push((e, b, 1.0));
    }
    let d0 = Csr::from_triplets(ne, nv, &trip);
    let mut trip = Vec::with_capacity(3 * nf);
    for (f, &[a, b, c]) in faces.iter().enumerate() {
        trip.push((f, edge_map[&(a, b)], 1.0));
        trip.push((f, edge_map[&(b, c)], 1.0));
        trip.push((f, edge_map[&(a, c)], -1.0));
    }
    let d1 = Csr::from_triplets(nf, ne, &trip);
    // ∂[0123] = [123] − [023] + [013] − [012], in LOCAL_FACES order
    const D2_LOCAL: [f64; 4] = [-1.0, 1.0, -1.0, 1.0];
    let mut trip = Vec::with_capacity(4 * nt);
    for (t, tf) in tet_faces.iter().enumerate() {
        for k in 0..4 {
            trip.push((t, tf[k].0, D2_LOCAL[k] * tf[k].1));
        }
    }
    let d2 = Csr::from_triplets(nt, nf, &trip);

    let mut is_boundary_vertex = vec![false; nv];
    let mut is_boundary_edge = vec![false; ne];
    let mut is_boundary_face = vec![false; nf];
    let mut boundary_faces = Vec::with_capacity(mesh.boundary_faces.len());
    for f in &mesh.boundary_faces {
        let (key, s) = sort3(*f);
        let id = face_map[&key];
        is_boundary_face[id] = true;
        boundary_faces.push((id, s as f64));
        for k in 0..3 {
            is_boundary_vertex[f[k]] = true;
            let (a, b) = (f[k], f[(k + 1) % 3]);
            is_boundary_edge[edge_map[&if a < b { (a, b) } else { (b, a) }]] = true;
        }
    }
    let pick = |m: &[bool]| m.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect::<Vec<_>>();

    let mut cc = CochainComplex {
        mesh: mesh.clone(),
        boundary_vertices: pick(&is_boundary_vertex),
        boundary_edges: pick(&is_boundary_edge),
        boundary_faces,
        is_boundary_vertex,
        is_boundary_edge,
        is_boundary_face,
        edges,
        faces,
        tet_edges,
        tet_faces,
        d0,
        d1,
        d2,
        m0: Csr::zeros(0, 0),
        m1: Csr::zeros(0, 0),
        m2: Csr::zeros(0, 0),
        assembly,
        edge_map,
        face_map,
    };
    let locals = cc.local_matrices();
    let mut trip = Vec::with_capacity(16 * nt);
    for (t, l) in locals.iter().enumerate() {
        let tv = mesh.tets[t];
        for a in 0..4 {
            for b in 0..4 {
                trip.push((tv[a], tv[b], l.m0[a][b]));
            }
        }
    }
    cc.m0 = Csr::from_triplets(nv, nv, &trip);
    cc.m1 = cc.scatter_edges(&locals, |l| &l.m1);
    let mut trip = Vec::with_capacity(16 * nt);
    for (t, l) in locals.iter().enumerate() {
        let tf = cc.tet_faces[t];
        for a in 0..4 {
            for b in 0..4 {
                trip.push((tf[a].0, tf[b].0, tf[a].1 * tf[b].1 * l.m2[a][b]));
            }
        }
    }
    cc.m2 = Csr::from_triplets(nf, nf, &trip);
    Ok(cc)
}

impl CochainComplex {
    pub fn num_vertices(&self) -> usize {
        self.mesh.vertices.len()
    }
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }
    pub fn num_tets(&self) -> usize {
        self.mesh.tets.len()
    }

    /// Element matrices of every tet, in tet order.
    pub fn local_matrices(&self) -> Vec<LocalMatrices> {
        let m = &self.mesh;
        match self.assembly {
            Assembly::Parallel => (0..m.tets.len()).into_par_iter().map(|t| local_matrices(&m.tet_points(t))).collect(),
            Assembly::Sequential => (0..m.tets.len()).map(|t| local_matrices(&m.tet_points(t))).collect(),
        }
    }

    /// Scatters a 6×6 element block into a global edge×edge matrix.
    pub fn scatter_edges(&self, locals: &[LocalMatrices], block: impl Fn(&LocalMatrices) -> &[[f64; 6]; 6]) -> Csr {
        let mut trip = Vec::with_capacity(36 * locals.len());
        for (t, l) in locals.iter().enumerate() {
            let te = self.tet_edges[t];
            let b = block(l);
            for r in 0..6 {
                for s in 0..6 {
                    trip.push((te[r].0, te[s].0, te[r].1 * te[s].1 * b[r][s]));
                }
            }
        }
        let n = self.num_edges();
        Csr::from_triplets(n, n, &trip)
    }

    /// Index of the edge {a,b} and the sign of a→b relative to it.
    pub fn edge(&self, a: usize, b: usize) -> Option<(usize, f64)> {
        if a < b {
            self.edge_map.get(&(a, b)).map(|&e| (e, 1.0))
        } else {
            self.edge_map.get(&(b, a)).map(|&e| (e, -1.0))
        }
    }

    pub fn face(&self, f: [usize; 3]) -> Option<(usize, f64)> {
        let (key, s) = sort3(f);
        self.face_map.get(&key).map(|&i| (i, s as f64))
    }

    /// Dense edge cochain of an oriented vertex path.
    pub fn edge_chain(&self, path: &[[usize; 2]]) -> Result<Vec<f64>> {
        let mut c = vec![0.0; self.num_edges()];
        for &[a, b] in path {
            let (e, s) = self
                .edge(a, b)
                .ok_or_else(|| Error::InvalidParameter(format!("({a},{b}) is not a mesh edge")))?;
            c[e] += s;
        }
        Ok(c)
    }

    pub fn face_chain(&self, faces: &[[usize; 3]]) -> Result<Vec<f64>> {
        let mut c = vec![0.0; self.num_faces()];
        for f in faces {
            let (i, s) = self.face(*f).ok_or_else(|| Error::InvalidParameter(format!("{f:?} is not a mesh face")))?;
            c[i] += s;
        }
        Ok(c)
    }

    /// Edges not lying on the boundary surface.
    pub fn interior_edges(&self) -> Vec<usize> {
        (0..self.num_edges()).filter(|&e| !self.is_boundary_edge[e]).collect()
    }

    /// Interior edges outside a spanning forest of the graph in which every
    /// boundary component is collapsed to one node. Potentials on these
    /// edges, zero elsewhere, gauge the kernel of d1 on cochains vanishing
    /// on the boundary.
    pub fn interior_cotree(&self) -> Vec<usize> {
        let nv = self.num_vertices();
        let mut parent: Vec<usize> = (0..nv).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &e in &self.boundary_edges {
            let [a, b] = self.edges[e];
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
        let mut cotree = Vec::new();
        for e in self.interior_edges() {
            let [a, b] = self.edges[e];
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            } else {
                cotree.push(e);
            }
        }
        cotree
    }

    /// Writes d0, d1, d2, M0, M1, M2 as Matrix Market files into `dir`.
    pub fn export_matrix_market(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, m) in [("d0", &self.d0), ("d1", &self.d1), ("d2", &self.d2), ("M0", &self.m0), ("M1", &self.m1), ("M2", &self.m2)] {
            std::fs::write(dir.join(format!("{name}.mtx")), m.to_matrix_market())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_ball;

    #[test]
    fn sequential_and_parallel_assembly_agree_bitwise() {
        let m = generate_ball(1.0, 0).unwrap();
        let a = build_complex_with(&m, Assembly::Parallel).unwrap();
        let b = build_complex_with(&m, Assembly::Sequential).unwrap();
        assert_eq!(a.m1.data, b.m1.data);
        assert_eq!(a.m2.data, b.m2.data);
    }

    #[test]
    fn boundary_orientation_matches_d2() {
        let m = generate_ball(1.0, 0).unwrap();
        let c = build_complex(&m).unwrap();
        let ones = vec![1.0; c.num_tets()];
        let b = c.d2.tmul_vec(&ones);
        for &(f, s) in &c.boundary_faces {
            assert_eq!(b[f], s);
        }
        assert_eq!(b.iter().filter(|x| **x != 0.0).count(), c.boundary_faces.len());
    }
}
