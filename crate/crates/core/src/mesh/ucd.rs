//! AVS-UCD (`*.inp`) reader and writer for 2D quadrilateral meshes.
//!
//! Layout: header `n_vertices n_cells ...`, then one `id x y z` line per
//! vertex, then `n_cells` element lines `id material type v1 .. vk`. Type
//! `quad` declares a cell with its material id, type `line` a boundary face
//! whose material field is the boundary id. `#` starts a comment line.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{bilinear_det, BoundaryId, FaceNeighbor, MaterialId, Mesh, MeshError};

fn parse_err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        message: message.into(),
    }
}

pub fn read_ucd_file(path: impl AsRef<Path>) -> Result<Mesh, MeshError> {
    let text = std::fs::read_to_string(path)?;
    read_ucd(&text)
}

pub fn read_ucd(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty mesh file"))?;
    let counts: Vec<usize> = header
        .split_whitespace()
        .take(2)
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| parse_err(hline, "malformed header, expected vertex and cell counts"))?;
    if counts.len() < 2 {
        return Err(parse_err(hline, "malformed header, expected vertex and cell counts"));
    }
    let (nv, nc) = (counts[0], counts[1]);

    let mut vertices = Vec::with_capacity(nv);
    let mut index: HashMap<i64, usize> = HashMap::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(hline, format!("expected {nv} vertex lines")))?;
        let tok: Vec<&str> = l.split_whitespace().collect();
        if tok.len() < 3 {
            return Err(parse_err(ln, "vertex line needs an id and coordinates"));
        }
        let id: i64 = tok[0].parse().map_err(|_| parse_err(ln, "bad vertex id"))?;
        let x: f64 = tok[1].parse().map_err(|_| parse_err(ln, "bad x coordinate"))?;
        let y: f64 = tok[2].parse().map_err(|_| parse_err(ln, "bad y coordinate"))?;
        if index.insert(id, vertices.len()).is_some() {
            return Err(parse_err(ln, format!("duplicate vertex id {id}")));
        }
        vertices.push([x, y]);
    }

    let mut cells = Vec::new();
    let mut cell_lines = Vec::new();
    let mut faces = Vec::new();
    for _ in 0..nc {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(hline, format!("expected {nc} cell lines")))?;
        let tok: Vec<&str> = l.split_whitespace().collect();
        if tok.len() < 3 {
            return Err(parse_err(ln, "cell line needs id, material and type"));
        }
        let mat: u32 = tok[1].parse().map_err(|_| parse_err(ln, "bad material/boundary id"))?;
        let resolve = |t: &str| -> Result<usize, MeshError> {
            let id: i64 = t.parse().map_err(|_| parse_err(ln, format!("bad vertex reference {t}")))?;
            index
                .get(&id)
                .copied()
                .ok_or_else(|| parse_err(ln, format!("dangling vertex reference {id}")))
        };
        match tok[2] {
            "quad" => {
                if tok.len() != 7 {
                    return Err(parse_err(ln, "quad needs exactly 4 vertices"));
                }
                let mut vs = [0usize; 4];
                for k in 0..4 {
                    vs[k] = resolve(tok[3 + k])?;
                }
                let material = u8::try_from(mat).map_err(|_| parse_err(ln, "material id out of range"))?;
                cells.push((vs, MaterialId(material)));
                cell_lines.push(ln);
            }
            "line" => {
                if tok.len() != 5 {
                    return Err(parse_err(ln, "line needs exactly 2 vertices"));
                }
                faces.push(((resolve(tok[3])?, resolve(tok[4])?), mat as BoundaryId));
            }
            other => {
                return Err(parse_err(ln, format!("unsupported cell type '{other}', only quad and line are allowed")));
            }
        }
    }

    for ((vs, _), &ln) in cells.iter().zip(&cell_lines) {
        let p = [vertices[vs[0]], vertices[vs[1]], vertices[vs[2]], vertices[vs[3]]];
        let min = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.5, 0.5)]
            .iter()
            .map(|&(x, y)| bilinear_det(&p, x, y))
            .fold(f64::INFINITY, f64::min);
        if min <= 0.0 {
            return Err(parse_err(ln, "inverted or degenerate cell (non-positive Jacobian)"));
        }
    }

    let mesh = Mesh::from_parts(vertices, cells, faces).map_err(|e| parse_err(hline, e.to_string()))?;
    mesh.validate()?;
    Ok(mesh)
}

/// Writes the active cells as a flat (level 0) UCD mesh.
pub fn write_ucd(mesh: &Mesh) -> String {
    let faces = mesh.boundary_faces();
    let mut s = String::new();
    let _ = writeln!(s, "{} {} 0 0 0", mesh.n_vertices(), mesh.n_active_cells() + faces.len());
    for (i, p) in mesh.vertices().iter().enumerate() {
        let _ = writeln!(s, "{} {:.17e} {:.17e} 0", i + 1, p[0], p[1]);
    }
    let mut k = 1;
    for &c in mesh.active_cells() {
        let cell = mesh.cell(c);
        let v = cell.vertices;
        let _ = writeln!(
            s,
            "{k} {} quad {} {} {} {}",
            cell.material.0,
            v[0] + 1,
            v[1] + 1,
            v[2] + 1,
            v[3] + 1
        );
        k += 1;
    }
    for (c, f, id) in faces {
        debug_assert!(matches!(mesh.neighbor(c, f), FaceNeighbor::Boundary(_)));
        let (a, b) = mesh.cell(c).face_vertices(f);
        let _ = writeln!(s, "{k} {id} line {} {}", a + 1, b + 1);
        k += 1;
    }
    s
}
