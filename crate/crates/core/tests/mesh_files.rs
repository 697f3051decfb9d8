//! The shipped meshes, checked against a plain line-by-line reading of the
//! files and a brute-force adjacency search.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::repo_path;
use fsidwr::{read_ucd, read_ucd_file, write_ucd, Mesh};

struct Raw {
    nodes: usize,
    quads_by_material: BTreeMap<u8, usize>,
    lines_by_id: BTreeMap<u32, usize>,
}

fn raw(path: &str) -> Raw {
    let text = std::fs::read_to_string(repo_path(path)).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<usize> = lines.next().unwrap().split_whitespace().map(|t| t.parse().unwrap()).collect();
    let mut r = Raw {
        nodes: header[0],
        quads_by_material: BTreeMap::new(),
        lines_by_id: BTreeMap::new(),
    };
    for l in lines.skip(header[0]).take(header[1]) {
        let t: Vec<&str> = l.split_whitespace().collect();
        match t[2] {
            "quad" => *r.quads_by_material.entry(t[1].parse().unwrap()).or_default() += 1,
            "line" => *r.lines_by_id.entry(t[1].parse().unwrap()).or_default() += 1,
            other => panic!("unexpected cell type {other}"),
        }
    }
    r
}

fn mesh_counts(m: &Mesh) -> (BTreeMap<u8, usize>, BTreeMap<u32, usize>) {
    let mut mats = BTreeMap::new();
    for &c in m.active_cells() {
        *mats.entry(m.cell(c).material.0).or_default() += 1;
    }
    let mut ids = BTreeMap::new();
    for (_, _, id) in m.boundary_faces() {
        *ids.entry(id).or_default() += 1;
    }
    (mats, ids)
}

#[test]
fn counts_match_the_files() {
    for path in ["meshes/fsi1.inp", "meshes/flow2d1.inp"] {
        let r = raw(path);
        let m = read_ucd_file(repo_path(path)).unwrap();
        m.validate().unwrap();
        assert_eq!(m.n_vertices(), r.nodes, "{path}");
        let (mats, ids) = mesh_counts(&m);
        assert_eq!(mats, r.quads_by_material, "{path}");
        assert_eq!(ids, r.lines_by_id, "{path}");
    }
}

#[test]
fn channel_geometry() {
    for (path, length, solid) in [("meshes/fsi1.inp", 2.5, true), ("meshes/flow2d1.inp", 2.2, false)] {
        let m = read_ucd_file(repo_path(path)).unwrap();
        let (lo, hi) = m.vertices().iter().fold(([f64::MAX; 2], [f64::MIN; 2]), |(lo, hi), p| {
            ([lo[0].min(p[0]), lo[1].min(p[1])], [hi[0].max(p[0]), hi[1].max(p[1])])
        });
        assert_eq!(lo, [0.0, 0.0]);
        assert!((hi[0] - length).abs() < 1e-12 && (hi[1] - 0.41).abs() < 1e-12, "{hi:?}");
        // polygonal hole, so the area sits slightly above the exact value
        let exact = length * 0.41 - std::f64::consts::PI * 0.05 * 0.05;
        let area = m.total_area();
        assert!(area > exact && area < exact + 2e-4, "{path}: {area}");
        assert_eq!(m.active_cells().iter().any(|&c| m.cell(c).material.is_solid()), solid);
    }
}

/// Fluid-solid faces found by comparing every pair of cells.
fn interface_oracle(m: &Mesh) -> BTreeSet<(usize, usize)> {
    let cells = m.active_cells();
    let mut out = BTreeSet::new();
    for &a in cells {
        for &b in cells {
            let (ca, cb) = (m.cell(a), m.cell(b));
            if !(ca.material.is_fluid() && cb.material.is_solid()) {
                continue;
            }
            let shared: Vec<usize> = ca.vertices.iter().copied().filter(|v| cb.vertices.contains(v)).collect();
            if shared.len() == 2 {
                out.insert((shared[0].min(shared[1]), shared[0].max(shared[1])));
            }
        }
    }
    out
}

#[test]
fn interface_faces_match_brute_force() {
    let m = read_ucd_file(repo_path("meshes/fsi1.inp")).unwrap();
    let found: BTreeSet<(usize, usize)> = m
        .interface_faces()
        .into_iter()
        .map(|(c, f)| {
            let (a, b) = m.cell(c).face_vertices(f);
            (a.min(b), a.max(b))
        })
        .collect();
    let oracle = interface_oracle(&m);
    assert!(!oracle.is_empty());
    assert_eq!(found, oracle);
    // the beam is 0.35 x 0.02 and touches the cylinder on its left end
    let len: f64 = oracle
        .iter()
        .map(|&(a, b)| {
            let (p, q) = (m.vertex(a), m.vertex(b));
            ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
        })
        .sum();
    assert!((len - (2.0 * 0.35 + 0.02)).abs() < 0.01, "{len}");
}

#[test]
fn write_then_read_is_identity() {
    let m = read_ucd_file(repo_path("meshes/fsi1.inp")).unwrap();
    let again = read_ucd(&write_ucd(&m)).unwrap();
    assert_eq!(again.vertices(), m.vertices());
    assert_eq!(mesh_counts(&again), mesh_counts(&m));
    assert_eq!(again.interface_faces(), m.interface_faces());
}
