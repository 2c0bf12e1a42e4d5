//! Oriented simplicial 2-surfaces in ambient 3-space with optional
//! degree-2 Lagrange geometry nodes, refinement, surface lifting, and the
//! `SOFF` text format.

use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::{Matrix3x2, Vector3};

use super::{closest_point, ImplicitSurface};
use crate::{Error, Result};

/// A closed, consistently oriented triangle mesh. Edges are derived and
/// globally oriented from the low vertex index to the high one; for
/// geometry degree 2 each edge carries one additional geometry node.
#[derive(Clone, Debug)]
pub struct SurfaceMesh {
    pub vertices: Vec<Vector3<f64>>,
    pub triangles: Vec<[usize; 3]>,
    /// Sorted (low, high) vertex pairs, lexicographic.
    pub edges: Vec<(usize, usize)>,
    /// Per-triangle local edges: global edge index and the sign of the
    /// triangle's traversal against the global low→high orientation.
    /// Local order: (v0,v1), (v1,v2), (v2,v0).
    pub tri_edges: Vec<[(usize, i8); 3]>,
    /// Geometry degree s ∈ {1, 2}.
    pub degree: usize,
    /// Edge midpoint geometry nodes, parallel to `edges` (empty for s = 1).
    pub edge_nodes: Vec<Vector3<f64>>,
}

impl SurfaceMesh {
    /// Build the derived structure and validate closedness and orientation.
    pub fn from_cells(vertices: Vec<Vector3<f64>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        let mut edge_set: Vec<(usize, usize)> = Vec::new();
        for t in &triangles {
            for &(a, b) in &[(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                if a >= nv || b >= nv || a == b {
                    return Err(Error::Mesh(format!("bad triangle vertex pair ({a}, {b})")));
                }
                edge_set.push((a.min(b), a.max(b)));
            }
        }
        edge_set.sort();
        edge_set.dedup();
        let edge_index = |a: usize, b: usize| -> usize {
            let key = (a.min(b), a.max(b));
            edge_set.binary_search(&key).expect("edge present")
        };

        // Orientation audit: every directed edge must appear exactly once.
        let mut directed: std::collections::HashMap<(usize, usize), usize> =
            std::collections::HashMap::new();
        for t in &triangles {
            for &(a, b) in &[(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                *directed.entry((a, b)).or_insert(0) += 1;
            }
        }
        for (&(a, b), &count) in &directed {
            if count != 1 {
                return Err(Error::Mesh(format!(
                    "directed edge ({a}, {b}) appears {count} times; mesh not consistently oriented"
                )));
            }
            if directed.get(&(b, a)) != Some(&1) {
                return Err(Error::Mesh(format!(
                    "edge ({a}, {b}) lacks its reversed partner; mesh not closed"
                )));
            }
        }

        let tri_edges = triangles
            .iter()
            .map(|t| {
                let mut local = [(0usize, 0i8); 3];
                for (slot, &(a, b)) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])].iter().enumerate() {
                    let sign = if a < b { 1 } else { -1 };
                    local[slot] = (edge_index(a, b), sign);
                }
                local
            })
            .collect();

        Ok(Self {
            vertices,
            triangles,
            edges: edge_set,
            tri_edges,
            degree: 1,
            edge_nodes: Vec::new(),
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_triangles() as i64
    }

    /// Max edge length, measured between vertices.
    pub fn mesh_size(&self) -> f64 {
        self.edges
            .iter()
            .map(|&(a, b)| (self.vertices[a] - self.vertices[b]).norm())
            .fold(0.0, f64::max)
    }

    /// Split every triangle 1→4 at edge midpoints; new vertices are
    /// projected onto the surface when one is given. The result has
    /// geometry degree 1; re-lift afterwards if needed.
    pub fn refine(&self, surface: Option<&dyn ImplicitSurface>) -> Result<SurfaceMesh> {
        let mut vertices = self.vertices.clone();
        let mut midpoint_of_edge = vec![0usize; self.edges.len()];
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            let mut mid = (self.vertices[a] + self.vertices[b]) * 0.5;
            if let Some(s) = surface {
                mid = closest_point(s, &mid)?;
            }
            midpoint_of_edge[e] = vertices.len();
            vertices.push(mid);
        }
        let mut triangles = Vec::with_capacity(self.triangles.len() * 4);
        for (t, tri) in self.triangles.iter().enumerate() {
            let [v0, v1, v2] = *tri;
            let m01 = midpoint_of_edge[self.tri_edges[t][0].0];
            let m12 = midpoint_of_edge[self.tri_edges[t][1].0];
            let m20 = midpoint_of_edge[self.tri_edges[t][2].0];
            triangles.push([v0, m01, m20]);
            triangles.push([m01, v1, m12]);
            triangles.push([m20, m12, v2]);
            triangles.push([m01, m12, m20]);
        }
        SurfaceMesh::from_cells(vertices, triangles)
    }

    /// Attach degree-`s` geometry: for `s = 2` the edge midpoints are
    /// projected onto the surface; for `s = 1` the mesh is validated and
    /// returned unchanged. Vertices must already lie on the surface.
    pub fn lift(&self, surface: &dyn ImplicitSurface, s: usize) -> Result<SurfaceMesh> {
        for (i, v) in self.vertices.iter().enumerate() {
            let d = surface.distance(v);
            if d.abs() > 1e-12 {
                return Err(Error::Mesh(format!(
                    "vertex {i} lies off the surface (δ = {d:.3e}); project it first"
                )));
            }
        }
        let mut lifted = self.clone();
        match s {
            1 => {
                lifted.degree = 1;
                lifted.edge_nodes.clear();
            }
            2 => {
                lifted.degree = 2;
                lifted.edge_nodes = self
                    .edges
                    .iter()
                    .map(|&(a, b)| {
                        let mid = (self.vertices[a] + self.vertices[b]) * 0.5;
                        closest_point(surface, &mid)
                    })
                    .collect::<Result<Vec<_>>>()?;
            }
            other => return Err(Error::Mesh(format!("unsupported geometry degree {other}"))),
        }
        Ok(lifted)
    }

    /// Geometry map of one triangle.
    pub fn element(&self, t: usize) -> ElementGeometry {
        let [v0, v1, v2] = self.triangles[t];
        let corners = [self.vertices[v0], self.vertices[v1], self.vertices[v2]];
        if self.degree == 2 {
            let nodes = [
                self.edge_nodes[self.tri_edges[t][0].0],
                self.edge_nodes[self.tri_edges[t][1].0],
                self.edge_nodes[self.tri_edges[t][2].0],
            ];
            ElementGeometry { corners, edge_nodes: Some(nodes) }
        } else {
            ElementGeometry { corners, edge_nodes: None }
        }
    }

    // -- SOFF format -------------------------------------------------------

    /// Write the `SOFF` text format:
    /// header `SOFF s`, counts `V F`, vertex lines, face lines `3 i j k`,
    /// and for s = 2 one `edge-node i j x y z` line per edge.
    pub fn write_soff<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "SOFF {}", self.degree)?;
        writeln!(w, "{} {}", self.num_vertices(), self.num_triangles())?;
        for v in &self.vertices {
            writeln!(w, "{:.17e} {:.17e} {:.17e}", v.x, v.y, v.z)?;
        }
        for t in &self.triangles {
            writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
        }
        if self.degree == 2 {
            for (e, &(a, b)) in self.edges.iter().enumerate() {
                let n = self.edge_nodes[e];
                writeln!(w, "edge-node {} {} {:.17e} {:.17e} {:.17e}", a, b, n.x, n.y, n.z)?;
            }
        }
        Ok(())
    }

    pub fn write_soff_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_soff(std::io::BufWriter::new(file))
    }

    pub fn read_soff<R: BufRead>(reader: R) -> Result<SurfaceMesh> {
        let mut lines = reader.lines();
        let mut next_line = || -> Result<String> {
            loop {
                match lines.next() {
                    Some(Ok(l)) => {
                        let t = l.trim().to_string();
                        if !t.is_empty() {
                            return Ok(t);
                        }
                    }
                    Some(Err(e)) => return Err(Error::Io(e)),
                    None => return Err(Error::Parse("unexpected end of SOFF file".into())),
                }
            }
        };
        let header = next_line()?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("SOFF") {
            return Err(Error::Parse("missing SOFF header".into()));
        }
        let degree: usize = parts
            .next()
            .ok_or_else(|| Error::Parse("missing geometry degree".into()))?
            .parse()
            .map_err(|_| Error::Parse("bad geometry degree".into()))?;
        let counts = next_line()?;
        let mut parts = counts.split_whitespace();
        let nv: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse("bad vertex count".into()))?;
        let nf: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse("bad face count".into()))?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let line = next_line()?;
            let nums: Vec<f64> = line
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad vertex line: {line}"))))
                .collect::<Result<_>>()?;
            if nums.len() != 3 {
                return Err(Error::Parse(format!("bad vertex line: {line}")));
            }
            vertices.push(Vector3::new(nums[0], nums[1], nums[2]));
        }
        let mut triangles = Vec::with_capacity(nf);
        for _ in 0..nf {
            let line = next_line()?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 4 || toks[0] != "3" {
                return Err(Error::Parse(format!("bad face line: {line}")));
            }
            let idx: Vec<usize> = toks[1..]
                .iter()
                .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad face line: {line}"))))
                .collect::<Result<_>>()?;
            triangles.push([idx[0], idx[1], idx[2]]);
        }
        let mut mesh = SurfaceMesh::from_cells(vertices, triangles)?;
        if degree == 2 {
            let mut nodes = vec![Vector3::zeros(); mesh.edges.len()];
            for _ in 0..mesh.edges.len() {
                let line = next_line()?;
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() != 6 || toks[0] != "edge-node" {
                    return Err(Error::Parse(format!("bad edge-node line: {line}")));
                }
                let i: usize = toks[1].parse().map_err(|_| Error::Parse("bad edge-node".into()))?;
                let j: usize = toks[2].parse().map_err(|_| Error::Parse("bad edge-node".into()))?;
                let xyz: Vec<f64> = toks[3..]
                    .iter()
                    .map(|s| s.parse().map_err(|_| Error::Parse("bad edge-node".into())))
                    .collect::<Result<_>>()?;
                let e = mesh
                    .edges
                    .binary_search(&(i.min(j), i.max(j)))
                    .map_err(|_| Error::Parse(format!("edge-node for unknown edge ({i}, {j})")))?;
                nodes[e] = Vector3::new(xyz[0], xyz[1], xyz[2]);
            }
            mesh.degree = 2;
            mesh.edge_nodes = nodes;
        }
        Ok(mesh)
    }

    pub fn read_soff_file(path: &Path) -> Result<SurfaceMesh> {
        let file = std::fs::File::open(path)?;
        Self::read_soff(std::io::BufReader::new(file))
    }
}

/// Geometry map `F : T̂ → ℝ³` of one (possibly curved) triangle.
pub struct ElementGeometry {
    pub corners: [Vector3<f64>; 3],
    /// Midpoint nodes for local edges (v0,v1), (v1,v2), (v2,v0).
    pub edge_nodes: Option<[Vector3<f64>; 3]>,
}

impl ElementGeometry {
    pub fn map(&self, xi: f64, eta: f64) -> Vector3<f64> {
        match &self.edge_nodes {
            None => {
                self.corners[0] * (1.0 - xi - eta) + self.corners[1] * xi + self.corners[2] * eta
            }
            Some(mid) => {
                let l0 = 1.0 - xi - eta;
                let (l1, l2) = (xi, eta);
                self.corners[0] * (l0 * (2.0 * l0 - 1.0))
                    + self.corners[1] * (l1 * (2.0 * l1 - 1.0))
                    + self.corners[2] * (l2 * (2.0 * l2 - 1.0))
                    + mid[0] * (4.0 * l0 * l1)
                    + mid[1] * (4.0 * l1 * l2)
                    + mid[2] * (4.0 * l2 * l0)
            }
        }
    }

    /// Jacobian `∂F/∂(ξ, η)` as a 3×2 matrix.
    pub fn jacobian(&self, xi: f64, eta: f64) -> Matrix3x2<f64> {
        match &self.edge_nodes {
            None => {
                let d1 = self.corners[1] - self.corners[0];
                let d2 = self.corners[2] - self.corners[0];
                Matrix3x2::from_columns(&[d1, d2])
            }
            Some(mid) => {
                let l0 = 1.0 - xi - eta;
                let (l1, l2) = (xi, eta);
                // dλ = (dλ/dξ, dλ/dη): λ0 → (-1,-1), λ1 → (1,0), λ2 → (0,1)
                let dvert = |l: f64| 4.0 * l - 1.0;
                let col_xi = self.corners[0] * (-dvert(l0))
                    + self.corners[1] * dvert(l1)
                    + mid[0] * (4.0 * (l0 - l1))
                    + mid[1] * (4.0 * l2)
                    + mid[2] * (-4.0 * l2);
                let col_eta = self.corners[0] * (-dvert(l0))
                    + self.corners[2] * dvert(l2)
                    + mid[0] * (-4.0 * l1)
                    + mid[1] * (4.0 * l1)
                    + mid[2] * (4.0 * (l0 - l2));
                Matrix3x2::from_columns(&[col_xi, col_eta])
            }
        }
    }

    /// Outward normal direction of the element at a reference point
    /// (normalized cross product of the Jacobian columns).
    pub fn normal(&self, xi: f64, eta: f64) -> Vector3<f64> {
        let j = self.jacobian(xi, eta);
        let n = j.column(0).cross(&j.column(1));
        n / n.norm()
    }
}

// ---------------------------------------------------------------------------
// Base meshes
// ---------------------------------------------------------------------------

/// Regular icosahedron inscribed in the unit sphere, oriented outward:
/// 12 vertices, 30 edges, 20 faces.
pub fn icosahedron() -> SurfaceMesh {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let norm = (1.0 + phi * phi).sqrt();
    let a = 1.0 / norm;
    let b = phi / norm;
    let vertices = vec![
        Vector3::new(-a, b, 0.0),
        Vector3::new(a, b, 0.0),
        Vector3::new(-a, -b, 0.0),
        Vector3::new(a, -b, 0.0),
        Vector3::new(0.0, -a, b),
        Vector3::new(0.0, a, b),
        Vector3::new(0.0, -a, -b),
        Vector3::new(0.0, a, -b),
        Vector3::new(b, 0.0, -a),
        Vector3::new(b, 0.0, a),
        Vector3::new(-b, 0.0, -a),
        Vector3::new(-b, 0.0, a),
    ];
    let triangles = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    SurfaceMesh::from_cells(vertices, triangles).expect("icosahedron is a valid closed mesh")
}

/// Structured torus mesh: `n_major × n_minor` quads split into triangles,
/// oriented outward. Defaults in the studies: 24 × 8 on the (R=2, ρ=0.5)
/// torus.
pub fn torus_grid(n_major: usize, n_minor: usize, major: f64, minor: f64) -> SurfaceMesh {
    let mut vertices = Vec::with_capacity(n_major * n_minor);
    for i in 0..n_major {
        let u = 2.0 * std::f64::consts::PI * i as f64 / n_major as f64;
        for j in 0..n_minor {
            let v = 2.0 * std::f64::consts::PI * j as f64 / n_minor as f64;
            let r = major + minor * v.cos();
            vertices.push(Vector3::new(r * u.cos(), r * u.sin(), minor * v.sin()));
        }
    }
    let idx = |i: usize, j: usize| (i % n_major) * n_minor + (j % n_minor);
    let mut triangles = Vec::with_capacity(2 * n_major * n_minor);
    for i in 0..n_major {
        for j in 0..n_minor {
            let v00 = idx(i, j);
            let v10 = idx(i + 1, j);
            let v01 = idx(i, j + 1);
            let v11 = idx(i + 1, j + 1);
            // Outward orientation: (u, v) is the standard parametrization
            // with ∂u × ∂v pointing outward.
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    SurfaceMesh::from_cells(vertices, triangles).expect("torus grid is a valid closed mesh")
}
