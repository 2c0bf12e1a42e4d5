//! Finite element differential forms on lifted surface meshes: assembly of
//! the discrete de Rham complex, canonical interpolation, pullback loads,
//! the true-metric Gram for the Jacobian operator, and error norms taken
//! back on the surface.
//!
//! Degrees of freedom are canonical: vertex values for 0-forms, oriented
//! edge integrals for 1-forms, and triangle integrals for 2-forms, so all
//! differential matrices have integer entries. 2-forms are stored through
//! their element integrals; the corresponding basis form on a triangle is
//! the reference area form scaled to unit integral, which absorbs the
//! Hodge star bookkeeping into the Gram matrices.

pub mod exact;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2, Vector3};

use crate::geometry::{ElementGeometry, Geom, SurfaceMesh};
use crate::quad::{gauss_legendre_01, triangle_rule};
use crate::sparse::{self, SpMat, SparseComplex};
use crate::{Error, Result};

/// Element family selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementFamily {
    /// Lowest-order Whitney complex: hat functions, edge Whitney 1-forms,
    /// per-triangle 2-forms. Three levels.
    Whitney,
    /// Quadratic scalar elements paired with the full linear 1-form space
    /// their gradients land in (two moment dofs per edge). Two levels;
    /// used for the r = 2 scalar studies.
    Lagrange2,
}

impl ElementFamily {
    pub fn num_levels(&self) -> usize {
        match self {
            ElementFamily::Whitney => 3,
            ElementFamily::Lagrange2 => 2,
        }
    }

    pub fn level_dims(&self, mesh: &SurfaceMesh) -> Vec<usize> {
        let (v, e, t) = (mesh.num_vertices(), mesh.num_edges(), mesh.num_triangles());
        match self {
            ElementFamily::Whitney => vec![v, e, t],
            ElementFamily::Lagrange2 => vec![v + e, 2 * e],
        }
    }
}

/// An assembled de Rham complex plus its dof bookkeeping.
pub struct AssembledComplex {
    pub complex: SparseComplex,
    pub family: ElementFamily,
    pub dims: Vec<usize>,
    pub quad_degree: usize,
}

impl AssembledComplex {
    /// Densified copy for cross-checks against the dense solvers (only
    /// sensible for coarse meshes).
    pub fn to_rep(&self) -> Result<crate::hilbert::ComplexRep> {
        self.complex.to_dense()
    }

    /// JSON sidecar mapping mesh entities (vertices, oriented edges,
    /// triangles) to dof indices, the companion of the ComplexRep JSON.
    pub fn dof_tables_json(&self, mesh: &SurfaceMesh) -> String {
        use serde_json::json;
        let family = match self.family {
            ElementFamily::Whitney => "whitney",
            ElementFamily::Lagrange2 => "lagrange2",
        };
        let vertex_entities = |offset: usize| -> Vec<serde_json::Value> {
            (0..mesh.num_vertices())
                .map(|v| json!({"vertex": v, "dof": offset + v}))
                .collect()
        };
        let levels = match self.family {
            ElementFamily::Whitney => vec![
                json!({"k": 0, "entities": vertex_entities(0)}),
                json!({"k": 1, "entities": mesh
                    .edges
                    .iter()
                    .enumerate()
                    .map(|(e, &(a, b))| json!({"edge": [a, b], "dof": e}))
                    .collect::<Vec<_>>()}),
                json!({"k": 2, "entities": mesh
                    .triangles
                    .iter()
                    .enumerate()
                    .map(|(t, tri)| json!({"triangle": tri.to_vec(), "dof": t}))
                    .collect::<Vec<_>>()}),
            ],
            ElementFamily::Lagrange2 => {
                let nv = mesh.num_vertices();
                let mut level0 = vertex_entities(0);
                level0.extend(
                    mesh.edges
                        .iter()
                        .enumerate()
                        .map(|(e, &(a, b))| json!({"edge": [a, b], "dof": nv + e})),
                );
                let level1 = mesh
                    .edges
                    .iter()
                    .enumerate()
                    .map(|(e, &(a, b))| json!({"edge": [a, b], "dofs": [2 * e, 2 * e + 1]}))
                    .collect::<Vec<_>>();
                vec![
                    json!({"k": 0, "entities": level0}),
                    json!({"k": 1, "entities": level1}),
                ]
            }
        };
        serde_json::to_string_pretty(&json!({"family": family, "levels": levels}))
            .expect("dof table json")
    }

    /// Total surface area encoded in the top-level Gram: with unit-integral
    /// basis forms, `G_2 = diag(ĝ_T)` has `Σ 1/ĝ_T = Σ |T|` for flat
    /// elements.
    pub fn total_area(&self) -> f64 {
        let top = self.complex.num_levels() - 1;
        let g = self.complex.gram(top);
        let mut sum = 0.0;
        for (i, j, v) in sparse::to_triplets(g) {
            if i == j {
                sum += 1.0 / v;
            }
        }
        sum
    }
}

// ---------------------------------------------------------------------------
// Reference-element tables
// ---------------------------------------------------------------------------

const BARY_GRADS: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

fn bary(xi: f64, eta: f64) -> [f64; 3] {
    [1.0 - xi - eta, xi, eta]
}

/// Local traversal edges of the reference triangle: slots (v0,v1), (v1,v2),
/// (v2,v0) in local vertex indices.
const LOCAL_EDGES: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];

/// Whitney 1-form for the local edge slot, oriented by `sign` against the
/// traversal direction: `sign (λ_a dλ_b - λ_b dλ_a)`.
fn whitney_edge(slot: usize, sign: f64, xi: f64, eta: f64) -> Vector2<f64> {
    let l = bary(xi, eta);
    let (a, b) = LOCAL_EDGES[slot];
    let da = Vector2::new(BARY_GRADS[a][0], BARY_GRADS[a][1]);
    let db = Vector2::new(BARY_GRADS[b][0], BARY_GRADS[b][1]);
    (db * l[a] - da * l[b]) * sign
}

/// P2 scalar shape functions: 3 vertex functions then 3 edge-slot bubbles.
fn p2_values(xi: f64, eta: f64) -> [f64; 6] {
    let l = bary(xi, eta);
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

/// Nodal basis of the element-local linear 1-form space (6 monomials
/// `dξ, dη, ξdξ, ηdξ, ξdη, ηdη`) dual to the two edge moments per local
/// edge slot, oriented low→high by `signs`. Returns the 6×6 coefficient
/// matrix: column `i` holds the monomial coefficients of nodal basis `i`,
/// dof order `[slot0_mean, slot0_m1, slot1_mean, slot1_m1, ...]`.
fn p1form_nodal_basis(signs: [f64; 3]) -> DMatrix<f64> {
    let monomial = |m: usize, xi: f64, eta: f64| -> Vector2<f64> {
        match m {
            0 => Vector2::new(1.0, 0.0),
            1 => Vector2::new(0.0, 1.0),
            2 => Vector2::new(xi, 0.0),
            3 => Vector2::new(eta, 0.0),
            4 => Vector2::new(0.0, xi),
            _ => Vector2::new(0.0, eta),
        }
    };
    let corners = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)];
    let (nodes, weights) = gauss_legendre_01(3).expect("gauss rule");
    let mut dof_matrix = DMatrix::zeros(6, 6);
    for (slot, &(a, b)) in LOCAL_EDGES.iter().enumerate() {
        let (tail, head) = if signs[slot] > 0.0 { (a, b) } else { (b, a) };
        let t0 = Vector2::new(corners[tail].0, corners[tail].1);
        let t1 = Vector2::new(corners[head].0, corners[head].1);
        let delta = t1 - t0;
        for m in 0..6 {
            let mut mean = 0.0;
            let mut m1 = 0.0;
            for (&t, &w) in nodes.iter().zip(&weights) {
                let p = t0 + delta * t;
                let val = monomial(m, p.x, p.y).dot(&delta);
                mean += w * val;
                m1 += w * (6.0 * t - 3.0) * val;
            }
            dof_matrix[(2 * slot, m)] = mean;
            dof_matrix[(2 * slot + 1, m)] = m1;
        }
    }
    dof_matrix
        .try_inverse()
        .expect("P1 form dof matrix invertible")
}

// ---------------------------------------------------------------------------
// Per-point geometry context
// ---------------------------------------------------------------------------

/// Everything needed at one quadrature point of one element.
pub struct PointContext {
    pub weight: f64,
    /// Point on the mesh.
    pub x: Vector3<f64>,
    /// Geometry Jacobian columns.
    pub j1: Vector3<f64>,
    pub j2: Vector3<f64>,
    pub g_inv: Matrix2<f64>,
    /// √det g (area factor).
    pub sg: f64,
    /// Orthonormal tangent frame of the element.
    pub e1: Vector3<f64>,
    pub e2: Vector3<f64>,
    /// Closest point on the surface.
    pub a: Vector3<f64>,
    /// Surface tangent frame at `a`.
    pub f1: Vector3<f64>,
    pub f2: Vector3<f64>,
    /// `(I + δS)` at `x`.
    pub lift: nalgebra::Matrix3<f64>,
    /// 2×2 tangent matrix of the closest-point map between the frames.
    pub phi: Matrix2<f64>,
    pub det_phi: f64,
}

impl PointContext {
    fn build(el: &ElementGeometry, xi: f64, eta: f64, weight: f64, geom: &Geom) -> Result<Self> {
        let x = el.map(xi, eta);
        let jac = el.jacobian(xi, eta);
        let j1: Vector3<f64> = jac.column(0).into();
        let j2: Vector3<f64> = jac.column(1).into();
        let g11 = j1.dot(&j1);
        let g12 = j1.dot(&j2);
        let g22 = j2.dot(&j2);
        let det_g = g11 * g22 - g12 * g12;
        let g_inv = Matrix2::new(g22, -g12, -g12, g11) / det_g;
        let sg = det_g.sqrt();
        let e1 = j1 / j1.norm();
        let e2 = (j2 - e1 * e1.dot(&j2)).normalize();
        let nu_h = {
            let n = j1.cross(&j2);
            n / n.norm()
        };
        let data = geom.point(&x, &nu_h)?;
        let (f1, f2, phi) = match geom {
            Geom::Exact => (e1, e2, Matrix2::identity()),
            Geom::Surface(_) => {
                let (f1, f2) = crate::geometry::tangent_frame(&data.nu);
                let lf1 = data.lift * f1;
                let lf2 = data.lift * f2;
                // Φ_ij = f_i · Tφ_h(e_j) = e_j · (I + δS) f_i.
                let phi = Matrix2::new(e1.dot(&lf1), e2.dot(&lf1), e1.dot(&lf2), e2.dot(&lf2));
                (f1, f2, phi)
            }
        };
        let det_phi = phi.determinant();
        if det_phi <= 0.0 {
            return Err(Error::Mesh(
                "closest-point projection degenerate on element (non-positive Jacobian)".into(),
            ));
        }
        Ok(Self {
            weight,
            x,
            j1,
            j2,
            g_inv,
            sg,
            e1,
            e2,
            a: data.projected,
            f1,
            f2,
            lift: data.lift,
            phi,
            det_phi,
        })
    }

    /// Frame components on the element of the pullback `a* w` of a 1-form
    /// on the surface with ambient vector proxy `y` at `a(x)`.
    fn pull_one_form(&self, y: &Vector3<f64>) -> Vector2<f64> {
        let ly = self.lift * y;
        Vector2::new(ly.dot(&self.e1), ly.dot(&self.e2))
    }

    /// Frame components of a reference covector.
    fn frame_components(&self, w: &Vector2<f64>) -> Vector2<f64> {
        let v = self.j1 * (self.g_inv[(0, 0)] * w.x + self.g_inv[(0, 1)] * w.y)
            + self.j2 * (self.g_inv[(1, 0)] * w.x + self.g_inv[(1, 1)] * w.y);
        Vector2::new(v.dot(&self.e1), v.dot(&self.e2))
    }
}

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

struct ElementDofs {
    /// Global dof indices per level for this element.
    levels: Vec<Vec<usize>>,
    /// Orientation signs of the local edge slots.
    edge_signs: [f64; 3],
}

fn element_dofs(mesh: &SurfaceMesh, family: ElementFamily, t: usize) -> ElementDofs {
    let tri = mesh.triangles[t];
    let e = mesh.tri_edges[t];
    let edge_signs = [e[0].1 as f64, e[1].1 as f64, e[2].1 as f64];
    let levels = match family {
        ElementFamily::Whitney => vec![
            vec![tri[0], tri[1], tri[2]],
            vec![e[0].0, e[1].0, e[2].0],
            vec![t],
        ],
        ElementFamily::Lagrange2 => {
            let v = mesh.num_vertices();
            vec![
                vec![tri[0], tri[1], tri[2], v + e[0].0, v + e[1].0, v + e[2].0],
                vec![
                    2 * e[0].0,
                    2 * e[0].0 + 1,
                    2 * e[1].0,
                    2 * e[1].0 + 1,
                    2 * e[2].0,
                    2 * e[2].0 + 1,
                ],
            ]
        }
    };
    ElementDofs { levels, edge_signs }
}

/// Evaluate all level-`k` basis functions of the element at a point:
/// scalars, reference covectors, or densities of `dξ∧dη`.
enum BasisValues {
    Scalar(Vec<f64>),
    Covector(Vec<Vector2<f64>>),
    /// Coefficients of `dξ∧dη`.
    Area(Vec<f64>),
}

fn basis_values(
    family: ElementFamily,
    k: usize,
    signs: [f64; 3],
    nodal_1forms: Option<&DMatrix<f64>>,
    xi: f64,
    eta: f64,
) -> BasisValues {
    match (family, k) {
        (ElementFamily::Whitney, 0) => {
            let l = bary(xi, eta);
            BasisValues::Scalar(vec![l[0], l[1], l[2]])
        }
        (ElementFamily::Whitney, 1) => BasisValues::Covector(
            (0..3).map(|s| whitney_edge(s, signs[s], xi, eta)).collect(),
        ),
        (ElementFamily::Whitney, 2) => BasisValues::Area(vec![2.0]),
        (ElementFamily::Lagrange2, 0) => BasisValues::Scalar(p2_values(xi, eta).to_vec()),
        (ElementFamily::Lagrange2, 1) => {
            let c = nodal_1forms.expect("nodal basis for P1 forms");
            let vals = (0..6)
                .map(|i| {
                    Vector2::new(
                        c[(0, i)] + c[(2, i)] * xi + c[(3, i)] * eta,
                        c[(1, i)] + c[(4, i)] * xi + c[(5, i)] * eta,
                    )
                })
                .collect();
            BasisValues::Covector(vals)
        }
        _ => panic!("no such level for family"),
    }
}

/// Assemble the discrete de Rham complex over a (possibly lifted) mesh.
/// Gram matrices come from quadrature through the degree-s geometry;
/// differentials are integer incidence matrices.
pub fn assemble(
    mesh: &SurfaceMesh,
    family: ElementFamily,
    quad_degree: usize,
) -> Result<AssembledComplex> {
    if quad_degree < 2 * mesh.degree {
        return Err(Error::Quadrature(quad_degree));
    }
    let rule = triangle_rule(quad_degree)?;
    let dims = family.level_dims(mesh);
    let levels = family.num_levels();
    let mut gram_trips: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); levels];
    let geom = Geom::Exact;
    for t in 0..mesh.num_triangles() {
        let el = mesh.element(t);
        let dofs = element_dofs(mesh, family, t);
        let nodal = match family {
            ElementFamily::Lagrange2 => Some(p1form_nodal_basis(dofs.edge_signs)),
            ElementFamily::Whitney => None,
        };
        let n_per: Vec<usize> = dofs.levels.iter().map(|l| l.len()).collect();
        let mut local: Vec<DMatrix<f64>> =
            n_per.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (&(xi, eta), &w) in rule.points.iter().zip(&rule.weights) {
            let ctx = PointContext::build(&el, xi, eta, w, &geom)?;
            #[allow(clippy::needless_range_loop)]
            for k in 0..levels {
                let vals = basis_values(family, k, dofs.edge_signs, nodal.as_ref(), xi, eta);
                let m = &mut local[k];
                match vals {
                    BasisValues::Scalar(v) => {
                        for i in 0..v.len() {
                            for j in 0..v.len() {
                                m[(i, j)] += w * ctx.sg * v[i] * v[j];
                            }
                        }
                    }
                    BasisValues::Covector(v) => {
                        for i in 0..v.len() {
                            let gi = ctx.g_inv * v[i];
                            for j in 0..v.len() {
                                m[(i, j)] += w * ctx.sg * gi.dot(&v[j]);
                            }
                        }
                    }
                    BasisValues::Area(v) => {
                        let det_g = ctx.sg * ctx.sg;
                        for i in 0..v.len() {
                            for j in 0..v.len() {
                                m[(i, j)] += w * ctx.sg * v[i] * v[j] / det_g;
                            }
                        }
                    }
                }
            }
        }
        for k in 0..levels {
            let gdofs = &dofs.levels[k];
            for i in 0..gdofs.len() {
                for j in 0..gdofs.len() {
                    gram_trips[k].push((gdofs[i], gdofs[j], local[k][(i, j)]));
                }
            }
        }
    }
    let grams: Vec<SpMat> = gram_trips
        .iter()
        .zip(&dims)
        .map(|(trips, &n)| sparse::from_triplets(n, n, trips))
        .collect();
    let diffs = assemble_differentials(mesh, family)?;
    Ok(AssembledComplex {
        complex: SparseComplex::new(grams, diffs)?,
        family,
        dims,
        quad_degree,
    })
}

/// Integer incidence differentials for the family.
fn assemble_differentials(mesh: &SurfaceMesh, family: ElementFamily) -> Result<Vec<SpMat>> {
    let (v, e, t) = (mesh.num_vertices(), mesh.num_edges(), mesh.num_triangles());
    match family {
        ElementFamily::Whitney => {
            let mut d0 = Vec::with_capacity(2 * e);
            for (idx, &(a, b)) in mesh.edges.iter().enumerate() {
                d0.push((idx, a, -1.0));
                d0.push((idx, b, 1.0));
            }
            let mut d1 = Vec::with_capacity(3 * t);
            for (tri, edges) in mesh.tri_edges.iter().enumerate() {
                for &(eidx, sign) in edges {
                    d1.push((tri, eidx, sign as f64));
                }
            }
            Ok(vec![
                sparse::from_triplets(e, v, &d0),
                sparse::from_triplets(t, e, &d1),
            ])
        }
        ElementFamily::Lagrange2 => {
            let mut d0 = Vec::with_capacity(5 * e);
            for (idx, &(a, b)) in mesh.edges.iter().enumerate() {
                // Mean moment of dψ along low→high: ψ_b - ψ_a.
                d0.push((2 * idx, a, -1.0));
                d0.push((2 * idx, b, 1.0));
                // First moment ∫ (6t-3) dψ: 2ψ_a + 2ψ_b - 4ψ_mid.
                d0.push((2 * idx + 1, a, 2.0));
                d0.push((2 * idx + 1, b, 2.0));
                d0.push((2 * idx + 1, v + idx, -4.0));
            }
            Ok(vec![sparse::from_triplets(2 * e, v + e, &d0)])
        }
    }
}

// ---------------------------------------------------------------------------
// Form callbacks and canonical interpolation
// ---------------------------------------------------------------------------

/// Boxed scalar evaluator at surface points.
pub type ScalarField<'a> = Box<dyn Fn(&Vector3<f64>) -> f64 + Sync + 'a>;
/// Boxed tangent-vector evaluator at surface points.
pub type VectorField<'a> = Box<dyn Fn(&Vector3<f64>) -> Vector3<f64> + Sync + 'a>;

/// A differential form on the surface, given through evaluators at surface
/// points. 1-forms are carried by their ambient tangent-vector proxy; frame
/// components follow by dotting with a frame, which makes frame
/// equivariance automatic.
pub enum FormCallback<'a> {
    /// k = 0.
    Scalar(ScalarField<'a>),
    /// k = 1: ambient tangent vector proxy of the form.
    One(VectorField<'a>),
    /// k = 2: density with respect to the surface area form.
    Density(ScalarField<'a>),
}

impl<'a> FormCallback<'a> {
    pub fn zero(k: usize) -> Self {
        match k {
            0 => FormCallback::Scalar(Box::new(|_| 0.0)),
            1 => FormCallback::One(Box::new(|_| Vector3::zeros())),
            2 => FormCallback::Density(Box::new(|_| 0.0)),
            _ => panic!("form degree out of range"),
        }
    }

    pub fn degree(&self) -> usize {
        match self {
            FormCallback::Scalar(_) => 0,
            FormCallback::One(_) => 1,
            FormCallback::Density(_) => 2,
        }
    }

    /// Frame components at a surface point: 1 value for k = 0 and k = 2,
    /// two components for k = 1.
    pub fn frame_components(
        &self,
        p: &Vector3<f64>,
        t1: &Vector3<f64>,
        t2: &Vector3<f64>,
    ) -> Vec<f64> {
        match self {
            FormCallback::Scalar(f) => vec![f(p)],
            FormCallback::One(f) => {
                let y = f(p);
                vec![y.dot(t1), y.dot(t2)]
            }
            FormCallback::Density(f) => vec![f(p)],
        }
    }

    fn ambient(&self, p: &Vector3<f64>) -> Vector3<f64> {
        match self {
            FormCallback::One(f) => f(p),
            _ => panic!("ambient() needs a 1-form"),
        }
    }

    fn scalar(&self, p: &Vector3<f64>) -> f64 {
        match self {
            FormCallback::Scalar(f) => f(p),
            FormCallback::Density(f) => f(p),
            _ => panic!("scalar() needs a 0- or 2-form"),
        }
    }
}

/// Edge curve of the mesh: point and tangent at parameter t ∈ [0, 1] from
/// the low-index vertex to the high-index one.
fn edge_curve(mesh: &SurfaceMesh, e: usize, t: f64) -> (Vector3<f64>, Vector3<f64>) {
    let (a, b) = mesh.edges[e];
    let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
    if mesh.degree == 2 {
        let m = mesh.edge_nodes[e];
        let point = pa * ((1.0 - t) * (1.0 - 2.0 * t))
            + m * (4.0 * t * (1.0 - t))
            + pb * (t * (2.0 * t - 1.0));
        let tangent = pa * (4.0 * t - 3.0) + m * (4.0 - 8.0 * t) + pb * (4.0 * t - 1.0);
        (point, tangent)
    } else {
        (pa * (1.0 - t) + pb * t, pb - pa)
    }
}

/// Canonical interpolation onto the family dofs: vertex (and edge-node)
/// values, oriented edge moments by Gauss quadrature, triangle integrals.
/// The callback is evaluated at closest-point projections.
pub fn canonical_interpolate(
    geom: &Geom,
    f: &FormCallback,
    mesh: &SurfaceMesh,
    family: ElementFamily,
    k: usize,
) -> Result<DVector<f64>> {
    let dims = family.level_dims(mesh);
    let mut out = DVector::zeros(dims[k]);
    let project = |x: &Vector3<f64>| -> Result<Vector3<f64>> {
        match geom {
            Geom::Exact => Ok(*x),
            Geom::Surface(s) => crate::geometry::closest_point(*s, x),
        }
    };
    match (family, k) {
        (_, 0) => {
            for (i, v) in mesh.vertices.iter().enumerate() {
                out[i] = f.scalar(&project(v)?);
            }
            if family == ElementFamily::Lagrange2 {
                let nv = mesh.num_vertices();
                for e in 0..mesh.num_edges() {
                    let node = if mesh.degree == 2 {
                        mesh.edge_nodes[e]
                    } else {
                        let (a, b) = mesh.edges[e];
                        (mesh.vertices[a] + mesh.vertices[b]) * 0.5
                    };
                    out[nv + e] = f.scalar(&project(&node)?);
                }
            }
        }
        (family, 1) => {
            let (nodes, weights) = gauss_legendre_01(6)?;
            for e in 0..mesh.num_edges() {
                let mut mean = 0.0;
                let mut m1 = 0.0;
                for (&t, &w) in nodes.iter().zip(&weights) {
                    let (x, tangent) = edge_curve(mesh, e, t);
                    let val = match geom {
                        Geom::Exact => f.ambient(&x).dot(&tangent),
                        Geom::Surface(s) => {
                            let delta = s.distance(&x);
                            let y = f.ambient(&(x - s.normal(&x) * delta));
                            let lifted = y + (-s.hessian(&x)) * y * delta;
                            lifted.dot(&tangent)
                        }
                    };
                    mean += w * val;
                    m1 += w * (6.0 * t - 3.0) * val;
                }
                match family {
                    ElementFamily::Whitney => out[e] = mean,
                    ElementFamily::Lagrange2 => {
                        out[2 * e] = mean;
                        out[2 * e + 1] = m1;
                    }
                }
            }
        }
        (ElementFamily::Whitney, 2) => {
            let rule = triangle_rule(6)?;
            for t in 0..mesh.num_triangles() {
                let el = mesh.element(t);
                let mut total = 0.0;
                for (&(xi, eta), &w) in rule.points.iter().zip(&rule.weights) {
                    let ctx = PointContext::build(&el, xi, eta, w, geom)?;
                    total += w * ctx.sg * ctx.det_phi * f.scalar(&ctx.a);
                }
                out[t] = total;
            }
        }
        _ => {
            return Err(Error::LevelOutOfRange { level: k, levels: family.num_levels() });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Pullback loads, true Grams, and error norms
// ---------------------------------------------------------------------------

/// Pointwise frame components of a discrete level-`k` form at a context
/// point: `[v]` for scalars, `[v1, v2]` for 1-forms, density for 2-forms.
#[allow(clippy::too_many_arguments)]
fn discrete_components(
    family: ElementFamily,
    k: usize,
    dofs: &ElementDofs,
    nodal: Option<&DMatrix<f64>>,
    coeffs: &DVector<f64>,
    ctx: &PointContext,
    xi: f64,
    eta: f64,
) -> Vec<f64> {
    let vals = basis_values(family, k, dofs.edge_signs, nodal, xi, eta);
    let gdofs = &dofs.levels[k];
    match vals {
        BasisValues::Scalar(v) => {
            vec![v.iter().zip(gdofs).map(|(b, &d)| b * coeffs[d]).sum()]
        }
        BasisValues::Covector(v) => {
            let mut w = Vector2::zeros();
            for (b, &d) in v.iter().zip(gdofs) {
                w += b * coeffs[d];
            }
            let fc = ctx.frame_components(&w);
            vec![fc.x, fc.y]
        }
        BasisValues::Area(v) => {
            let c: f64 = v.iter().zip(gdofs).map(|(b, &d)| b * coeffs[d]).sum();
            vec![c / ctx.sg]
        }
    }
}

/// Frame components of the pullback `a* f` of the exact form at a context
/// point (density convention for k = 2: density w.r.t. the element area).
fn pulled_exact_components(f: &FormCallback, ctx: &PointContext) -> Vec<f64> {
    match f {
        FormCallback::Scalar(func) => vec![func(&ctx.a)],
        FormCallback::One(_) => {
            let y = f.ambient(&ctx.a);
            let w = ctx.pull_one_form(&y);
            vec![w.x, w.y]
        }
        FormCallback::Density(func) => vec![func(&ctx.a) * ctx.det_phi],
    }
}

/// Pointwise inner product of two component sets in the element frame,
/// optionally through the pulled-back metric (`true_metric`).
fn component_inner(k: usize, a: &[f64], b: &[f64], ctx: &PointContext, true_metric: bool) -> f64 {
    match k {
        0 => a[0] * b[0],
        1 => {
            if true_metric {
                let m = (ctx.phi.transpose() * ctx.phi)
                    .try_inverse()
                    .expect("frame metric invertible");
                let va = Vector2::new(a[0], a[1]);
                let vb = Vector2::new(b[0], b[1]);
                (m * va).dot(&vb)
            } else {
                a[0] * b[0] + a[1] * b[1]
            }
        }
        2 => {
            if true_metric {
                a[0] * b[0] / (ctx.det_phi * ctx.det_phi)
            } else {
                a[0] * b[0]
            }
        }
        _ => unreachable!(),
    }
}

pub struct PullbackLoad {
    /// G_h-projection coefficients of the pulled-back data.
    pub dofs: DVector<f64>,
    /// The right-hand-side pairings `⟨a* f, φ_a⟩_h`.
    pub rhs: DVector<f64>,
    /// Relative residual of the projection normal equations.
    pub residual: f64,
}

/// Pull the surface data back through the closest-point map and L²-project
/// it onto the finite element space.
pub fn pullback_load(
    geom: &Geom,
    f: &FormCallback,
    mesh: &SurfaceMesh,
    assembled: &AssembledComplex,
    k: usize,
    quad_degree: usize,
) -> Result<PullbackLoad> {
    let rhs = pairing_vector(geom, f, mesh, assembled.family, k, quad_degree, false)?;
    let gram = assembled.complex.gram(k);
    let dofs = sparse::spd_solve(gram, &rhs)?;
    let residual_vec = sparse::spmv(gram, &dofs) - &rhs;
    let residual = residual_vec.norm() / rhs.norm().max(1e-300);
    Ok(PullbackLoad { dofs, rhs, residual })
}

/// Pairings of the basis with the pulled-back form: in the mesh metric
/// (`true_metric = false`, giving `⟨a*f, φ_a⟩_h`) or with the
/// change-of-variables weights (`true_metric = true`, giving
/// `⟨f, i_h φ_a⟩_{L²(M)}`).
pub fn pairing_vector(
    geom: &Geom,
    f: &FormCallback,
    mesh: &SurfaceMesh,
    family: ElementFamily,
    k: usize,
    quad_degree: usize,
    true_metric: bool,
) -> Result<DVector<f64>> {
    let rule = triangle_rule(quad_degree)?;
    let dims = family.level_dims(mesh);
    let mut out = DVector::zeros(dims[k]);
    for t in 0..mesh.num_triangles() {
        let el = mesh.element(t);
        let dofs = element_dofs(mesh, family, t);
        let nodal = match family {
            ElementFamily::Lagrange2 => Some(p1form_nodal_basis(dofs.edge_signs)),
            ElementFamily::Whitney => None,
        };
        for (&(xi, eta), &w) in rule.points.iter().zip(&rule.weights) {
            let ctx = PointContext::build(&el, xi, eta, w, geom)?;
            let exact = pulled_exact_components(f, &ctx);
            let vals = basis_values(family, k, dofs.edge_signs, nodal.as_ref(), xi, eta);
            let scale = w * ctx.sg * if true_metric { ctx.det_phi } else { 1.0 };
            let gdofs = &dofs.levels[k];
            match vals {
                BasisValues::Scalar(v) => {
                    for (b, &d) in v.iter().zip(gdofs) {
                        out[d] += scale * component_inner(0, &[*b], &exact, &ctx, true_metric);
                    }
                }
                BasisValues::Covector(v) => {
                    for (b, &d) in v.iter().zip(gdofs) {
                        let fc = ctx.frame_components(b);
                        out[d] += scale
                            * component_inner(1, &[fc.x, fc.y], &exact, &ctx, true_metric);
                    }
                }
                BasisValues::Area(v) => {
                    for (b, &d) in v.iter().zip(gdofs) {
                        let dens = b / ctx.sg;
                        out[d] += scale * component_inner(2, &[dens], &exact, &ctx, true_metric);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Gram of the images `⟨i_h φ_a, i_h φ_b⟩_{L²(M)}`, assembled by change of
/// variables with the singular-value area factor.
pub fn assemble_true_gram(
    geom: &Geom,
    mesh: &SurfaceMesh,
    family: ElementFamily,
    k: usize,
    quad_degree: usize,
) -> Result<SpMat> {
    let rule = triangle_rule(quad_degree)?;
    let dims = family.level_dims(mesh);
    let mut trips: Vec<(usize, usize, f64)> = Vec::new();
    for t in 0..mesh.num_triangles() {
        let el = mesh.element(t);
        let dofs = element_dofs(mesh, family, t);
        let nodal = match family {
            ElementFamily::Lagrange2 => Some(p1form_nodal_basis(dofs.edge_signs)),
            ElementFamily::Whitney => None,
        };
        let gdofs = &dofs.levels[k];
        let n = gdofs.len();
        let mut local = DMatrix::zeros(n, n);
        for (&(xi, eta), &w) in rule.points.iter().zip(&rule.weights) {
            let ctx = PointContext::build(&el, xi, eta, w, geom)?;
            let vals = basis_values(family, k, dofs.edge_signs, nodal.as_ref(), xi, eta);
            let comps: Vec<Vec<f64>> = match vals {
                BasisValues::Scalar(v) => v.into_iter().map(|s| vec![s]).collect(),
                BasisValues::Covector(v) => v
                    .iter()
                    .map(|b| {
                        let fc = ctx.frame_components(b);
                        vec![fc.x, fc.y]
                    })
                    .collect(),
                BasisValues::Area(v) => v.into_iter().map(|b| vec![b / ctx.sg]).collect(),
            };
            let scale = w * ctx.sg * ctx.det_phi;
            for i in 0..n {
                for j in 0..n {
                    local[(i, j)] += scale * component_inner(k, &comps[i], &comps[j], &ctx, true);
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                trips.push((gdofs[i], gdofs[j], local[(i, j)]));
            }
        }
    }
    Ok(sparse::from_triplets(dims[k], dims[k], &trips))
}

/// `‖I - J_h‖` at level `k`: the deviation of the pencil `(Ĝ, G_h)` from
/// the identity.
pub fn jacobian_deviation(assembled: &AssembledComplex, true_gram: &SpMat, k: usize) -> Result<f64> {
    sparse::pencil_deviation(true_gram, assembled.complex.gram(k))
}

/// `‖ exact - u_h ‖_{L²(M)}` by change of variables through the
/// closest-point map. Pass the exterior-derivative dofs and callback at
/// level `k + 1` for the graph seminorm.
pub fn error_norm(
    geom: &Geom,
    exact: &FormCallback,
    coeffs: &DVector<f64>,
    mesh: &SurfaceMesh,
    family: ElementFamily,
    k: usize,
    quad_degree: usize,
) -> Result<f64> {
    let rule = triangle_rule(quad_degree)?;
    let mut total = 0.0;
    for t in 0..mesh.num_triangles() {
        let el = mesh.element(t);
        let dofs = element_dofs(mesh, family, t);
        let nodal = match family {
            ElementFamily::Lagrange2 => Some(p1form_nodal_basis(dofs.edge_signs)),
            ElementFamily::Whitney => None,
        };
        for (&(xi, eta), &w) in rule.points.iter().zip(&rule.weights) {
            let ctx = PointContext::build(&el, xi, eta, w, geom)?;
            let uh = discrete_components(family, k, &dofs, nodal.as_ref(), coeffs, &ctx, xi, eta);
            let ue = pulled_exact_components(exact, &ctx);
            let diff: Vec<f64> = uh.iter().zip(&ue).map(|(a, b)| a - b).collect();
            total += w * ctx.sg * ctx.det_phi * component_inner(k, &diff, &diff, &ctx, true);
        }
    }
    Ok(total.max(0.0).sqrt())
}

/// L² and exterior-derivative error norms on the surface for a discrete
/// level-`k` solution.
#[allow(clippy::too_many_arguments)]
pub fn error_norms(
    geom: &Geom,
    exact: &FormCallback,
    exact_d: Option<&FormCallback>,
    coeffs: &DVector<f64>,
    mesh: &SurfaceMesh,
    assembled: &AssembledComplex,
    k: usize,
    quad_degree: usize,
) -> Result<(f64, f64)> {
    let l2 = error_norm(geom, exact, coeffs, mesh, assembled.family, k, quad_degree)?;
    let graph = if k + 1 < assembled.family.num_levels() {
        let d_coeffs = sparse::spmv(assembled.complex.diff(k), coeffs);
        let zero = FormCallback::zero(k + 1);
        let d_exact = exact_d.unwrap_or(&zero);
        error_norm(geom, d_exact, &d_coeffs, mesh, assembled.family, k + 1, quad_degree)?
    } else {
        0.0
    };
    Ok((l2, graph))
}
