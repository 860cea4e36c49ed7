use crate::complex::{edge_form, CochainComplex};
use crate::mesh::{TetMesh, Vec3};
use std::fmt::Write;

/// Vertex values of a Whitney 1-form: the element values at each vertex,
/// averaged over the incident tets.
pub fn point_vectors(cc: &CochainComplex, v: &[f64]) -> Vec<[f64; 3]> {
    let nv = cc.num_vertices();
    let mut acc = vec![Vec3::zeros(); nv];
    let mut count = vec![0usize; nv];
    for (t, tv) in cc.mesh.tets.iter().enumerate() {
        let (g, _) = crate::complex::barycentric_gradients(&cc.mesh.tet_points(t));
        for a in 0..4 {
            let mut l = [0.0; 4];
            l[a] = 1.0;
            let mut x = Vec3::zeros();
            for (e, &(ge, s)) in cc.tet_edges[t].iter().enumerate() {
                x += s * v[ge] * edge_form(&g, e, &l);
            }
            acc[tv[a]] += x;
            count[tv[a]] += 1;
        }
    }
    acc.iter().zip(&count).map(|(x, &c)| (x / c.max(1) as f64).into()).collect()
}

/// Legacy ASCII VTK unstructured grid with point vector fields.
pub fn write_vtk(mesh: &TetMesh, fields: &[(String, Vec<[f64; 3]>)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\n{}\nASCII\nDATASET UNSTRUCTURED_GRID", mesh.domain_name);
    let _ = writeln!(s, "POINTS {} double", mesh.vertices.len());
    for p in &mesh.vertices {
        let _ = writeln!(s, "{} {} {}", p[0], p[1], p[2]);
    }
    let nt = mesh.tets.len();
    let _ = writeln!(s, "CELLS {} {}", nt, 5 * nt);
    for t in &mesh.tets {
        let _ = writeln!(s, "4 {} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        s.push_str("10\n");
    }
    if !fields.is_empty() {
        let _ = writeln!(s, "POINT_DATA {}", mesh.vertices.len());
        for (name, vals) in fields {
            let _ = writeln!(s, "VECTORS {} double", name.replace(' ', "_"));
            for x in vals {
                let _ = writeln!(s, "{} {} {}", x[0], x[1], x[2]);
            }
        }
    }
    s
}
