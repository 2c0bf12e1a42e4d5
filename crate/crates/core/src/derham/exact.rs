//! Closed-form fields on the unit sphere for manufactured solutions:
//! real spherical harmonics from solid harmonic polynomials, their surface
//! gradients, and the (σ, u, p, f) sets solving the mixed Hodge-Laplace
//! problem at every form degree.

use nalgebra::Vector3;

use super::FormCallback;

/// A real spherical harmonic `Y(p) = q(p)` on `|p| = 1`, where `q` is a
/// harmonic homogeneous polynomial of degree ℓ. The Laplace-Beltrami
/// eigenvalue in the positive (Hodge) convention is `ℓ(ℓ+1)`.
#[derive(Clone, Copy, Debug)]
pub struct SphericalHarmonic {
    pub ell: u32,
}

impl SphericalHarmonic {
    pub fn new(ell: u32) -> Self {
        assert!((1..=3).contains(&ell), "spherical harmonics shipped for ℓ = 1, 2, 3");
        Self { ell }
    }

    pub fn eigenvalue(&self) -> f64 {
        (self.ell * (self.ell + 1)) as f64
    }

    /// The solid harmonic polynomial `q` at an ambient point.
    fn solid(&self, p: &Vector3<f64>) -> f64 {
        match self.ell {
            1 => p.z,
            2 => p.x * p.x - p.y * p.y,
            _ => 2.0 * p.z.powi(3) - 3.0 * p.z * (p.x * p.x + p.y * p.y),
        }
    }

    fn solid_gradient(&self, p: &Vector3<f64>) -> Vector3<f64> {
        match self.ell {
            1 => Vector3::new(0.0, 0.0, 1.0),
            2 => Vector3::new(2.0 * p.x, -2.0 * p.y, 0.0),
            _ => Vector3::new(
                -6.0 * p.x * p.z,
                -6.0 * p.y * p.z,
                6.0 * p.z * p.z - 3.0 * (p.x * p.x + p.y * p.y),
            ),
        }
    }

    /// Value at a point of the unit sphere.
    pub fn value(&self, p: &Vector3<f64>) -> f64 {
        self.solid(p)
    }

    /// Surface gradient `∇_S Y = P ∇q` at a point of the unit sphere.
    pub fn surface_gradient(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let g = self.solid_gradient(p);
        g - p * p.dot(&g)
    }
}

/// Exact data for one mixed Hodge-Laplace problem on the unit sphere.
pub struct ManufacturedSolution {
    pub k: usize,
    pub u: FormCallback<'static>,
    /// Exterior derivative of `u` (`None` at the top level).
    pub du: Option<FormCallback<'static>>,
    /// `σ = d* u` (`None` for k = 0).
    pub sigma: Option<FormCallback<'static>>,
    /// `dσ` (`None` for k = 0).
    pub dsigma: Option<FormCallback<'static>>,
    pub f: FormCallback<'static>,
    /// Eigenvalue factor ℓ(ℓ+1) relating `f = ℓ(ℓ+1) u`.
    pub eigenvalue: f64,
}

/// Eigenform solutions on the unit sphere built from `Y = Y_ℓ`:
///
/// * k = 0: `u = Y`, `f = ℓ(ℓ+1)Y`, `p = 0`.
/// * k = 1: `u = dY`, `σ = ℓ(ℓ+1)Y`, `f = ℓ(ℓ+1) dY`.
/// * k = 2: `u = Y μ`, `σ = -⋆dY`, `f = ℓ(ℓ+1) Y μ`.
///
/// The harmonic component is zero in every case since spherical harmonics
/// integrate to zero and `H^1(S²) = 0`.
pub fn sphere_solution(k: usize, ell: u32) -> ManufacturedSolution {
    let y = SphericalHarmonic::new(ell);
    let lam = y.eigenvalue();
    match k {
        0 => ManufacturedSolution {
            k,
            u: FormCallback::Scalar(Box::new(move |p| y.value(p))),
            du: Some(FormCallback::One(Box::new(move |p| y.surface_gradient(p)))),
            sigma: None,
            dsigma: None,
            f: FormCallback::Scalar(Box::new(move |p| lam * y.value(p))),
            eigenvalue: lam,
        },
        1 => ManufacturedSolution {
            k,
            u: FormCallback::One(Box::new(move |p| y.surface_gradient(p))),
            du: Some(FormCallback::Density(Box::new(|_| 0.0))),
            sigma: Some(FormCallback::Scalar(Box::new(move |p| lam * y.value(p)))),
            dsigma: Some(FormCallback::One(Box::new(move |p| {
                y.surface_gradient(p) * lam
            }))),
            f: FormCallback::One(Box::new(move |p| y.surface_gradient(p) * lam)),
            eigenvalue: lam,
        },
        2 => ManufacturedSolution {
            k,
            u: FormCallback::Density(Box::new(move |p| y.value(p))),
            du: None,
            // σ = -⋆dY: with ⋆ the rotation ν × · on vector proxies.
            sigma: Some(FormCallback::One(Box::new(move |p| {
                let nu = p / p.norm();
                -nu.cross(&y.surface_gradient(p))
            }))),
            dsigma: Some(FormCallback::Density(Box::new(move |p| lam * y.value(p)))),
            f: FormCallback::Density(Box::new(move |p| lam * y.value(p))),
            eigenvalue: lam,
        },
        _ => panic!("form degree out of range for a 2-surface"),
    }
}
