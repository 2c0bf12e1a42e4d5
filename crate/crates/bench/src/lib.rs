//! Shared fixtures for the benchmark targets.

use hodgelab::geometry::{icosahedron, SurfaceMesh, UnitSphere};

/// Sphere mesh refined `level` times.
pub fn sphere_mesh(level: usize) -> SurfaceMesh {
    let s = UnitSphere;
    let mut mesh = icosahedron();
    for _ in 0..level {
        mesh = mesh.refine(Some(&s)).expect("refine");
    }
    mesh
}
