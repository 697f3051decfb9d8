//! Small meshes for unit tests.

use crate::mesh::{MaterialId, Mesh};

/// `n x n` fluid grid on `[0, 1]^2`. Boundary ids: 0 left, 1 right, 2 bottom, 3 top.
pub(crate) fn grid(n: usize) -> Mesh {
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let h = 1.0 / n as f64;
    let vertices = (0..=n).flat_map(|j| (0..=n).map(move |i| [i as f64 * h, j as f64 * h])).collect();
    let cells = (0..n)
        .flat_map(|j| (0..n).map(move |i| ([id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)], MaterialId::FLUID)))
        .collect();
    let mut faces = Vec::new();
    for k in 0..n {
        faces.push(((id(0, k), id(0, k + 1)), 0));
        faces.push(((id(n, k), id(n, k + 1)), 1));
        faces.push(((id(k, 0), id(k + 1, 0)), 2));
        faces.push(((id(k, n), id(k + 1, n)), 3));
    }
    Mesh::from_parts(vertices, cells, faces).unwrap()
}
