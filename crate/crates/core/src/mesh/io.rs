//! TMESH ASCII format and a reader for Gmsh MSH 2.2 ASCII files.
//!
//! ```text
//! tmesh 1
//! # domain: ball
//! 27 0 0 48
//! v 0.0 0.0 0.0
//! t 0 1 2 3
//! surface cut_1 2
//! 0 1 2
//! curve alpha_1 4
//! 0 1
//! ```

use super::TetMesh;
use crate::{Error, Result};
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;

pub fn write_tmesh(mesh: &TetMesh) -> String {
    let mut s = String::new();
    writeln!(s, "tmesh 1").unwrap();
    writeln!(s, "# domain: {}", mesh.domain_name).unwrap();
    let (_, e, f, _) = mesh.simplex_counts();
    writeln!(s, "{} {} {} {}", mesh.vertices.len(), e, f, mesh.tets.len()).unwrap();
    for p in &mesh.vertices {
        writeln!(s, "v {:.17e} {:.17e} {:.17e}", p[0], p[1], p[2]).unwrap();
    }
    for t in &mesh.tets {
        writeln!(s, "t {} {} {} {}", t[0], t[1], t[2], t[3]).unwrap();
    }
    for (name, faces) in &mesh.surface_tags {
        writeln!(s, "surface {name} {}", faces.len()).unwrap();
        for f in faces {
            writeln!(s, "{} {} {}", f[0], f[1], f[2]).unwrap();
        }
    }
    for (name, edges) in &mesh.curve_tags {
        writeln!(s, "curve {name} {}", edges.len()).unwrap();
        for e in edges {
            writeln!(s, "{} {}", e[0], e[1]).unwrap();
        }
    }
    s
}

pub fn read_tmesh(text: &str) -> Result<TetMesh> {
    let mut domain = String::from("tmesh");
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let l = raw.trim();
        if let Some(rest) = l.strip_prefix("# domain:") {
            domain = rest.trim().to_string();
        }
        let l = l.split('#').next().unwrap().trim();
        if !l.is_empty() {
            lines.push((i + 1, l));
        }
    }
    let mut it = lines.into_iter();
    let (ln, head) = it.next().ok_or(Error::Parse { line: 0, msg: "empty file".into() })?;
    if head.split_whitespace().collect::<Vec<_>>() != ["tmesh", "1"] {
        return Err(Error::Parse { line: ln, msg: format!("expected header 'tmesh 1', got '{head}'") });
    }
    let (ln, counts) = it.next().ok_or(Error::Parse { line: ln, msg: "missing counts line".into() })?;
    let counts: Vec<usize> = parse_all(counts, ln)?;
    if counts.len() != 4 {
        return Err(Error::Parse { line: ln, msg: "counts line needs V E F T".into() });
    }
    let mut vertices = Vec::with_capacity(counts[0]);
    let mut tets = Vec::with_capacity(counts[3]);
    let mut surfaces = BTreeMap::new();
    let mut curves = BTreeMap::new();
    let mut it = it.peekable();
    while let Some((ln, l)) = it.next() {
        let mut w = l.split_whitespace();
        match w.next() {
            Some("v") => {
                let x: Vec<f64> = parse_all(&l[1..], ln)?;
                if x.len() != 3 {
                    return Err(Error::Parse { line: ln, msg: "vertex needs 3 coordinates".into() });
                }
                vertices.push([x[0], x[1], x[2]]);
            }
            Some("t") => {
                let x: Vec<usize> = parse_all(&l[1..], ln)?;
                if x.len() != 4 {
                    return Err(Error::Parse { line: ln, msg: "tet needs 4 indices".into() });
                }
                tets.push([x[0], x[1], x[2], x[3]]);
            }
            Some(kind @ ("surface" | "curve")) => {
                let name = w.next().ok_or(Error::Parse { line: ln, msg: "tag without name".into() })?.to_string();
                let count: usize = w
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or(Error::Parse { line: ln, msg: "tag without count".into() })?;
                let width = if kind == "surface" { 3 } else { 2 };
                let mut items = Vec::with_capacity(count);
                for _ in 0..count {
                    let (ln, l) = it.next().ok_or(Error::Parse { line: ln, msg: format!("tag {name} truncated") })?;
                    let x: Vec<usize> = parse_all(l, ln)?;
                    if x.len() != width || x.iter().any(|&v| v >= vertices.len()) {
                        return Err(Error::Parse { line: ln, msg: format!("bad entry in tag {name}") });
                    }
                    items.push(x);
                }
                if kind == "surface" {
                    surfaces.insert(name, items.iter().map(|x| [x[0], x[1], x[2]]).collect());
                } else {
                    curves.insert(name, items.iter().map(|x| [x[0], x[1]]).collect());
                }
            }
            _ => return Err(Error::Parse { line: ln, msg: format!("unrecognised line '{l}'") }),
        }
    }
    if vertices.len() != counts[0] || tets.len() != counts[3] {
        return Err(Error::Parse {
            line: 0,
            msg: format!("counts say {} vertices / {} tets, file has {} / {}", counts[0], counts[3], vertices.len(), tets.len()),
        });
    }
    let mut mesh = TetMesh::new(vertices, tets, &domain)?;
    mesh.surface_tags = surfaces;
    mesh.curve_tags = curves;
    mesh.validate()?;
    Ok(mesh)
}

fn parse_all<T: std::str::FromStr>(s: &str, ln: usize) -> Result<Vec<T>> {
    s.split_whitespace()
        .map(|w| w.parse().map_err(|_| Error::Parse { line: ln, msg: format!("cannot parse '{w}'") }))
        .collect()
}

/// Reads tetrahedra (element type 4) and tagged triangles (type 2) from a
/// Gmsh 2.2 ASCII file. Triangles become surface tags named after their
/// physical group (`$PhysicalNames` if present, else `physical_<id>`).
pub fn read_gmsh(text: &str) -> Result<TetMesh> {
    let lines: Vec<&str> = text.lines().collect();
    let mut i = 0;
    let mut node_index = HashMap::new();
    let mut vertices = Vec::new();
    let mut tets = Vec::new();
    let mut tris: Vec<(i64, [usize; 3])> = Vec::new();
    let mut names: HashMap<i64, String> = HashMap::new();
    let perr = |i: usize, m: &str| Error::Parse { line: i + 1, msg: m.to_string() };
    while i < lines.len() {
        match lines[i].trim() {
            "$MeshFormat" => {
                let v = lines.get(i + 1).ok_or(perr(i, "truncated header"))?;
                if !v.trim().starts_with("2.") {
                    return Err(perr(i + 1, "only MSH 2.x ASCII is supported"));
                }
                if v.split_whitespace().nth(1) != Some("0") {
                    return Err(perr(i + 1, "binary MSH is not supported"));
                }
                i += 2;
            }
            "$PhysicalNames" => {
                let n: usize = lines.get(i + 1).and_then(|l| l.trim().parse().ok()).ok_or(perr(i + 1, "bad count"))?;
                for k in 0..n {
                    let l = lines.get(i + 2 + k).ok_or(perr(i, "truncated names"))?;
                    let w: Vec<&str> = l.split_whitespace().collect();
                    if w.len() >= 3 {
                        let id: i64 = w[1].parse().map_err(|_| perr(i + 2 + k, "bad physical id"))?;
                        names.insert(id, w[2..].join(" ").trim_matches('"').to_string());
                    }
                }
                i += n + 2;
            }
            "$Nodes" => {
                let n: usize = lines.get(i + 1).and_then(|l| l.trim().parse().ok()).ok_or(perr(i + 1, "bad count"))?;
                for k in 0..n {
                    let ln = i + 2 + k;
                    let w: Vec<f64> = parse_all(lines.get(ln).ok_or(perr(ln, "truncated nodes"))?, ln + 1)?;
                    if w.len() < 4 {
                        return Err(perr(ln, "node line needs id x y z"));
                    }
                    node_index.insert(w[0] as i64, vertices.len());
                    vertices.push([w[1], w[2], w[3]]);
                }
                i += n + 2;
            }
            "$Elements" => {
                let n: usize = lines.get(i + 1).and_then(|l| l.trim().parse().ok()).ok_or(perr(i + 1, "bad count"))?;
                for k in 0..n {
                    let ln = i + 2 + k;
                    let w: Vec<i64> = parse_all(lines.get(ln).ok_or(perr(ln, "truncated elements"))?, ln + 1)?;
                    if w.len() < 3 {
                        return Err(perr(ln, "short element line"));
                    }
                    let (ty, ntags) = (w[1], w[2] as usize);
                    let nodes = &w[3 + ntags..];
                    let map = |id: &i64| node_index.get(id).copied().ok_or(perr(ln, "unknown node id"));
                    match ty {
                        4 if nodes.len() == 4 => {
                            tets.push([map(&nodes[0])?, map(&nodes[1])?, map(&nodes[2])?, map(&nodes[3])?])
                        }
                        2 if nodes.len() == 3 => {
                            let phys = if ntags > 0 { w[3] } else { 0 };
                            tris.push((phys, [map(&nodes[0])?, map(&nodes[1])?, map(&nodes[2])?]));
                        }
                        _ => {}
                    }
                }
                i += n + 2;
            }
            _ => i += 1,
        }
    }
    if tets.is_empty() {
        return Err(Error::Parse { line: 0, msg: "no tetrahedra found".into() });
    }
    let mut mesh = TetMesh::new(vertices, tets, "gmsh")?;
    for (phys, f) in tris {
        let name = names.get(&phys).cloned().unwrap_or_else(|| format!("physical_{phys}"));
        mesh.surface_tags.entry(name).or_default().push(f);
    }
    Ok(mesh)
}
