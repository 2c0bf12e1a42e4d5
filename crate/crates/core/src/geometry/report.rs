//! Per-point singular values of the closest-point diffeomorphism
//! restricted to mesh elements, and the sampled geometry report feeding
//! the `‖I - J_h‖` bound.

use nalgebra::{Matrix2, Vector3};
use serde::Serialize;

use super::{Geom, SurfaceMesh};
use crate::quad::triangle_rule;
use crate::Result;

/// Deterministic orthonormal tangent frame for a unit normal.
pub fn tangent_frame(nu: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let seed = if nu.x.abs() <= nu.y.abs() && nu.x.abs() <= nu.z.abs() {
        Vector3::new(1.0, 0.0, 0.0)
    } else if nu.y.abs() <= nu.z.abs() {
        Vector3::new(0.0, 1.0, 0.0)
    } else {
        Vector3::new(0.0, 0.0, 1.0)
    };
    let t1 = (seed - nu * nu.dot(&seed)).normalize();
    let t2 = nu.cross(&t1);
    (t1, t2)
}

/// The 2×2 matrix of the tangent map `Tφ_h` of the closest-point
/// projection restricted to the element, between orthonormal frames at
/// `x ∈ M_h` and `a(x) ∈ M`. Computed through the adjoint lift
/// `e_i · (I + δS) f_j`. For exact geometry this is the identity.
pub fn frame_matrix(
    geom: &Geom,
    x: &Vector3<f64>,
    nu_h: &Vector3<f64>,
    e1: &Vector3<f64>,
    e2: &Vector3<f64>,
) -> Result<Matrix2<f64>> {
    if matches!(geom, Geom::Exact) {
        return Ok(Matrix2::identity());
    }
    let data = geom.point(x, nu_h)?;
    let (f1, f2) = tangent_frame(&data.nu);
    let lf1 = data.lift * f1;
    let lf2 = data.lift * f2;
    // A_ij = e_i · (I + δS) f_j; Φ = Aᵀ shares its singular values.
    Ok(Matrix2::new(e1.dot(&lf1), e1.dot(&lf2), e2.dot(&lf1), e2.dot(&lf2)))
}

/// Singular values `α_1 ≥ α_2 > 0` of the closest-point tangent map at a
/// reference point of element `t`.
pub fn singular_values(
    geom: &Geom,
    mesh: &SurfaceMesh,
    t: usize,
    xi: f64,
    eta: f64,
) -> Result<(f64, f64)> {
    let el = mesh.element(t);
    let x = el.map(xi, eta);
    let j = el.jacobian(xi, eta);
    let e1: Vector3<f64> = j.column(0).normalize();
    let mut e2: Vector3<f64> = j.column(1).into();
    e2 = (e2 - e1 * e1.dot(&e2)).normalize();
    let nu_h = el.normal(xi, eta);
    let a = frame_matrix(geom, &x, &nu_h, &e1, &e2)?;
    let sv = a.svd(false, false).singular_values;
    Ok((sv[0].max(sv[1]), sv[0].min(sv[1])))
}

/// Sampled geometric-error quantities for one mesh against one surface.
#[derive(Clone, Debug, Serialize)]
pub struct GeometryReport {
    pub h: f64,
    /// `max |δ|` over the sample points.
    pub delta_inf: f64,
    /// `max |ν - ν_h|` over the sample points.
    pub normal_gap_inf: f64,
    pub sv_min: f64,
    pub sv_max: f64,
    /// Upper bound for `‖I - J_h‖` per form degree k = 0, 1, 2 from the
    /// singular-value products.
    pub jacobian_bound: [f64; 3],
}

/// The `‖I - J_h‖` bound for `k`-forms on a 2-surface from per-point
/// singular values: the worse of the two spectral enclosures
/// `|1 - ‖α₁…α_k (α_{k+1}…α_m)⁻¹‖_∞⁻¹|` and
/// `|1 - ‖α₁…α_{m-k} (α_{m-k+1}…α_m)⁻¹‖_∞|`.
fn jacobian_bound_for_k(samples: &[(f64, f64)], k: usize) -> f64 {
    let m = 2usize;
    let product = |alphas: (f64, f64), take: usize| -> f64 {
        // α₁…α_take · (α_{take+1}…α_m)⁻¹ with α sorted descending.
        let a = [alphas.0, alphas.1];
        let mut p = 1.0;
        for (i, &alpha) in a.iter().enumerate() {
            if i < take {
                p *= alpha;
            } else {
                p /= alpha;
            }
        }
        p
    };
    let sup_lower = samples
        .iter()
        .map(|&a| product(a, k))
        .fold(f64::NEG_INFINITY, f64::max);
    let sup_upper = samples
        .iter()
        .map(|&a| product(a, m - k))
        .fold(f64::NEG_INFINITY, f64::max);
    let term1 = (1.0 - 1.0 / sup_lower).abs();
    let term2 = (1.0 - sup_upper).abs();
    term1.max(term2)
}

/// Sample δ, the normal gap, and the singular values at the quadrature
/// points of the given degree plus the element corners.
pub fn geometry_report(
    geom: &Geom,
    mesh: &SurfaceMesh,
    quad_degree: usize,
) -> Result<GeometryReport> {
    let rule = triangle_rule(quad_degree)?;
    // Corners slightly inset so tangent frames stay inside the element.
    let inset = 1e-8;
    let corner_pts = [
        (inset, inset),
        (1.0 - 2.0 * inset, inset),
        (inset, 1.0 - 2.0 * inset),
    ];
    let mut delta_inf = 0.0f64;
    let mut normal_gap_inf = 0.0f64;
    let mut samples = Vec::with_capacity(mesh.num_triangles() * (rule.points.len() + 3));
    for t in 0..mesh.num_triangles() {
        let el = mesh.element(t);
        for &(xi, eta) in rule.points.iter().chain(corner_pts.iter()) {
            let x = el.map(xi, eta);
            let nu_h = el.normal(xi, eta);
            let data = geom.point(&x, &nu_h)?;
            delta_inf = delta_inf.max(data.delta.abs());
            normal_gap_inf = normal_gap_inf.max((data.nu - nu_h).norm());
            samples.push(singular_values(geom, mesh, t, xi, eta)?);
        }
    }
    let sv_min = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let sv_max = samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let jacobian_bound =
        [0, 1, 2].map(|k| jacobian_bound_for_k(&samples, k));
    Ok(GeometryReport {
        h: mesh.mesh_size(),
        delta_inf,
        normal_gap_inf,
        sv_min,
        sv_max,
        jacobian_bound,
    })
}
