//! Implicit hypersurfaces and their tubular-neighborhood calculus: signed
//! distance, closest-point projection `a(x) = x - δ(x)ν(x)`, the shape
//! operator `S = -∇²δ`, tangent lifts through `(I + δS)`, and the
//! per-point singular values of the normal projection restricted to a
//! mesh element.

mod mesh;
mod report;

pub use mesh::{icosahedron, torus_grid, ElementGeometry, SurfaceMesh};
pub use report::{geometry_report, singular_values, tangent_frame, GeometryReport};

use nalgebra::{Matrix3, Vector3};

use crate::{Error, Result};

/// A surface given by a signed-distance evaluator bundle. `distance` must
/// be the genuine signed distance on the tubular neighborhood of half-width
/// `reach`, so that `∇δ = ν` is a unit vector there.
pub trait ImplicitSurface {
    fn distance(&self, x: &Vector3<f64>) -> f64;
    /// Unit normal `ν(x) = ∇δ(x)`.
    fn normal(&self, x: &Vector3<f64>) -> Vector3<f64>;
    /// Hessian `∇²δ(x)`.
    fn hessian(&self, x: &Vector3<f64>) -> Matrix3<f64>;
    /// Guaranteed tubular-neighborhood half-width `δ_0 > 0`.
    fn reach(&self) -> f64;
}

fn check_reach(surface: &dyn ImplicitSurface, x: &Vector3<f64>) -> Result<f64> {
    let delta = surface.distance(x);
    if delta.abs() >= surface.reach() {
        return Err(Error::OutsideReach { distance: delta, reach: surface.reach() });
    }
    Ok(delta)
}

/// Closest-point projection `a(x) = x - δ(x)ν(x)`.
pub fn closest_point(surface: &dyn ImplicitSurface, x: &Vector3<f64>) -> Result<Vector3<f64>> {
    let delta = check_reach(surface, x)?;
    Ok(x - surface.normal(x) * delta)
}

/// Shape operator `S = -∇²δ(x)`; symmetric with `S ν = 0`.
pub fn shape_operator(surface: &dyn ImplicitSurface, x: &Vector3<f64>) -> Result<Matrix3<f64>> {
    check_reach(surface, x)?;
    Ok(-surface.hessian(x))
}

/// Result of [`tangent_lift`]: the lifted vector and whether the input had
/// to be projected onto the tangent plane first.
#[derive(Clone, Debug)]
pub struct LiftedVector {
    pub vector: Vector3<f64>,
    pub projected_input: bool,
}

/// Lift a tangent vector `Y ∈ T_{a(x)}M` to `T_x M_h`:
/// `Y_h = P_h (I + δS) Y` with `P_h = I - ν_h ⊗ ν_h`.
pub fn tangent_lift(
    surface: &dyn ImplicitSurface,
    x: &Vector3<f64>,
    nu_h: &Vector3<f64>,
    y: &Vector3<f64>,
) -> Result<LiftedVector> {
    let delta = check_reach(surface, x)?;
    let a = x - surface.normal(x) * delta;
    let nu = surface.normal(&a);
    let mut y_t = *y;
    let normal_part = nu.dot(y);
    let projected_input = normal_part.abs() > 1e-10 * y.norm().max(1.0);
    if projected_input {
        y_t -= nu * normal_part;
    }
    let s = -surface.hessian(x);
    let lifted = y_t + s * y_t * delta;
    let vector = lifted - nu_h * nu_h.dot(&lifted);
    Ok(LiftedVector { vector, projected_input })
}

/// The ambient map `(I + δS)` at `x`, the adjoint of the tangent map of
/// the closest-point projection on tangent vectors.
pub fn lift_operator(surface: &dyn ImplicitSurface, x: &Vector3<f64>) -> Result<Matrix3<f64>> {
    let delta = check_reach(surface, x)?;
    Ok(Matrix3::identity() - surface.hessian(x) * delta)
}

// ---------------------------------------------------------------------------
// Built-in surfaces
// ---------------------------------------------------------------------------

/// The unit sphere: `δ(x) = |x| - 1`.
#[derive(Clone, Copy, Debug, Default)]
pub struct UnitSphere;

impl ImplicitSurface for UnitSphere {
    fn distance(&self, x: &Vector3<f64>) -> f64 {
        x.norm() - 1.0
    }

    fn normal(&self, x: &Vector3<f64>) -> Vector3<f64> {
        x / x.norm()
    }

    fn hessian(&self, x: &Vector3<f64>) -> Matrix3<f64> {
        let r = x.norm();
        let n = x / r;
        (Matrix3::identity() - n * n.transpose()) / r
    }

    fn reach(&self) -> f64 {
        0.9
    }
}

/// Torus around the z-axis with centerline radius `major` and tube radius
/// `minor`: `δ(x) = |(r - R, z)| - ρ` with `r = √(x² + y²)`.
#[derive(Clone, Copy, Debug)]
pub struct Torus {
    pub major: f64,
    pub minor: f64,
}

impl Default for Torus {
    fn default() -> Self {
        Self { major: 2.0, minor: 0.5 }
    }
}

impl Torus {
    fn tube(&self, x: &Vector3<f64>) -> (f64, Vector3<f64>) {
        let r = (x.x * x.x + x.y * x.y).sqrt();
        let w = Vector3::new((1.0 - self.major / r) * x.x, (1.0 - self.major / r) * x.y, x.z);
        (w.norm(), w)
    }
}

impl ImplicitSurface for Torus {
    fn distance(&self, x: &Vector3<f64>) -> f64 {
        self.tube(x).0 - self.minor
    }

    fn normal(&self, x: &Vector3<f64>) -> Vector3<f64> {
        let (t, w) = self.tube(x);
        w / t
    }

    fn hessian(&self, x: &Vector3<f64>) -> Matrix3<f64> {
        let (t, w) = self.tube(x);
        let r = (x.x * x.x + x.y * x.y).sqrt();
        let u_hat = Vector3::new(x.x / r, x.y / r, 0.0);
        let p_z = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0);
        // ∇w = I - R (P_z - û ûᵀ) / r, ∇ν = (∇w - ν νᵀ)/t.
        let grad_w = Matrix3::identity() - (p_z - u_hat * u_hat.transpose()) * (self.major / r);
        let nu = w / t;
        (grad_w - nu * nu.transpose()) / t
    }

    fn reach(&self) -> f64 {
        0.9 * self.minor
    }
}

/// Generic level-set surface `φ(x) = 0`. Closest points come from a Newton
/// iteration on the first-order conditions; the distance Hessian is a
/// central finite difference of the computed normal.
pub struct LevelSetSurface<F, G>
where
    F: Fn(&Vector3<f64>) -> f64,
    G: Fn(&Vector3<f64>) -> Vector3<f64>,
{
    pub phi: F,
    pub grad_phi: G,
    pub reach: f64,
    /// Characteristic length used to scale finite-difference steps.
    pub diameter: f64,
}

impl<F, G> LevelSetSurface<F, G>
where
    F: Fn(&Vector3<f64>) -> f64,
    G: Fn(&Vector3<f64>) -> Vector3<f64>,
{
    /// Newton iteration for the closest point: solve
    /// `p - x + λ ∇φ(p) = 0`, `φ(p) = 0` (max 50 steps, residual 1e-13).
    fn project(&self, x: &Vector3<f64>) -> (Vector3<f64>, f64) {
        let mut p = *x;
        let mut g = (self.grad_phi)(&p);
        // First-order start: one level-set Newton step.
        let mut lambda = (self.phi)(&p) / g.norm_squared();
        p -= g * lambda;
        let fd = 1e-5 * self.diameter;
        for _ in 0..50 {
            g = (self.grad_phi)(&p);
            let r_vec = p - x + g * lambda;
            let r_phi = (self.phi)(&p);
            let residual = (r_vec.norm_squared() + r_phi * r_phi).sqrt();
            if residual < 1e-13 * self.diameter.max(1.0) {
                break;
            }
            // Hessian of φ by central differences, for the KKT Jacobian.
            let mut hess = Matrix3::zeros();
            for j in 0..3 {
                let mut dp = Vector3::zeros();
                dp[j] = fd;
                let col = ((self.grad_phi)(&(p + dp)) - (self.grad_phi)(&(p - dp))) / (2.0 * fd);
                hess.set_column(j, &col);
            }
            let mut kkt = nalgebra::Matrix4::zeros();
            kkt.view_mut((0, 0), (3, 3))
                .copy_from(&(Matrix3::identity() + hess * lambda));
            kkt.view_mut((0, 3), (3, 1)).copy_from(&g);
            kkt.view_mut((3, 0), (1, 3)).copy_from(&g.transpose());
            let rhs = nalgebra::Vector4::new(-r_vec.x, -r_vec.y, -r_vec.z, -r_phi);
            if let Some(step) = kkt.lu().solve(&rhs) {
                p += Vector3::new(step.x, step.y, step.z);
                lambda += step.w;
            } else {
                break;
            }
        }
        let signed = ((self.phi)(x)).signum() * (x - p).norm();
        (p, signed)
    }
}

impl<F, G> ImplicitSurface for LevelSetSurface<F, G>
where
    F: Fn(&Vector3<f64>) -> f64,
    G: Fn(&Vector3<f64>) -> Vector3<f64>,
{
    fn distance(&self, x: &Vector3<f64>) -> f64 {
        self.project(x).1
    }

    fn normal(&self, x: &Vector3<f64>) -> Vector3<f64> {
        let (p, delta) = self.project(x);
        if delta.abs() > 1e-8 * self.diameter {
            (x - p) / delta
        } else {
            let g = (self.grad_phi)(&p);
            g / g.norm()
        }
    }

    fn hessian(&self, x: &Vector3<f64>) -> Matrix3<f64> {
        let fd = 1e-5 * self.diameter;
        let mut hess = Matrix3::zeros();
        for j in 0..3 {
            let mut dp = Vector3::zeros();
            dp[j] = fd;
            let col = (self.normal(&(x + dp)) - self.normal(&(x - dp))) / (2.0 * fd);
            hess.set_column(j, &col);
        }
        // Symmetrize the finite-difference result.
        (hess + hess.transpose()) * 0.5
    }

    fn reach(&self) -> f64 {
        self.reach
    }
}

/// Geometry model passed to assembly and report routines: a genuine
/// implicit surface, or the mesh itself treated as exact geometry
/// (`δ ≡ 0`, identity projection).
#[derive(Clone, Copy)]
pub enum Geom<'a> {
    Surface(&'a dyn ImplicitSurface),
    Exact,
}

/// Pointwise tubular-neighborhood data at a mesh point.
pub struct PointGeometry {
    /// Closest point `a(x)` on the surface.
    pub projected: Vector3<f64>,
    pub delta: f64,
    /// Surface normal at `a(x)`.
    pub nu: Vector3<f64>,
    /// `(I + δS)` at `x`.
    pub lift: Matrix3<f64>,
}

impl<'a> Geom<'a> {
    /// Evaluate the closest point, distance, normal and lift operator at a
    /// mesh point `x` with element normal `nu_h`.
    pub fn point(&self, x: &Vector3<f64>, nu_h: &Vector3<f64>) -> Result<PointGeometry> {
        match self {
            Geom::Exact => Ok(PointGeometry {
                projected: *x,
                delta: 0.0,
                nu: *nu_h,
                lift: Matrix3::identity(),
            }),
            Geom::Surface(s) => {
                let delta = check_reach(*s, x)?;
                let nu = s.normal(x);
                Ok(PointGeometry {
                    projected: x - nu * delta,
                    delta,
                    nu,
                    lift: Matrix3::identity() - s.hessian(x) * delta,
                })
            }
        }
    }
}
