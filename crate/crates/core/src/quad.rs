//! Quadrature rules: symmetric Dunavant-type rules on the reference
//! triangle `{ξ ≥ 0, η ≥ 0, ξ + η ≤ 1}` for degrees 1–7, a collapsed
//! Gauss product rule for higher degrees, and Gauss–Legendre on `[0, 1]`.
//!
//! Triangle weights sum to the reference area 1/2, so
//! `∫_T̂ f ≈ Σ_q w_q f(ξ_q, η_q)` directly.

use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub degree: usize,
    /// (ξ, η) reference coordinates.
    pub points: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
}

/// Orbits of barycentric points under the symmetric group: (a, a, a),
/// (a, b, b) in 3 permutations, (a, b, c) in 6 permutations.
fn push_orbit(points: &mut Vec<(f64, f64)>, weights: &mut Vec<f64>, bary: [f64; 3], w: f64) {
    let perms: Vec<[f64; 3]> = if bary[0] == bary[1] && bary[1] == bary[2] {
        vec![bary]
    } else if bary[1] == bary[2] {
        vec![
            [bary[0], bary[1], bary[2]],
            [bary[1], bary[0], bary[2]],
            [bary[1], bary[2], bary[0]],
        ]
    } else {
        vec![
            [bary[0], bary[1], bary[2]],
            [bary[0], bary[2], bary[1]],
            [bary[1], bary[0], bary[2]],
            [bary[1], bary[2], bary[0]],
            [bary[2], bary[0], bary[1]],
            [bary[2], bary[1], bary[0]],
        ]
    };
    for p in perms {
        // barycentric (λ0, λ1, λ2) → (ξ, η) = (λ1, λ2)
        points.push((p[1], p[2]));
        weights.push(w * 0.5);
    }
}

/// Symmetric rule exact for polynomials of the requested total degree.
pub fn triangle_rule(degree: usize) -> Result<TriangleRule> {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let third = 1.0 / 3.0;
    match degree {
        0 | 1 => {
            push_orbit(&mut points, &mut weights, [third; 3], 1.0);
        }
        2 => {
            push_orbit(&mut points, &mut weights, [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], third);
        }
        3 => {
            push_orbit(&mut points, &mut weights, [third; 3], -0.5625);
            push_orbit(&mut points, &mut weights, [0.6, 0.2, 0.2], 25.0 / 48.0);
        }
        4 => {
            push_orbit(
                &mut points,
                &mut weights,
                [0.108103018168070, 0.445948490915965, 0.445948490915965],
                0.223381589678011,
            );
            push_orbit(
                &mut points,
                &mut weights,
                [0.816847572980459, 0.091576213509771, 0.091576213509771],
                0.109951743655322,
            );
        }
        5 => {
            push_orbit(&mut points, &mut weights, [third; 3], 0.225);
            push_orbit(
                &mut points,
                &mut weights,
                [0.059715871789770, 0.470142064105115, 0.470142064105115],
                0.132394152788506,
            );
            push_orbit(
                &mut points,
                &mut weights,
                [0.797426985353087, 0.101286507323456, 0.101286507323456],
                0.125939180544827,
            );
        }
        6 => {
            push_orbit(
                &mut points,
                &mut weights,
                [0.501426509658179, 0.249286745170910, 0.249286745170910],
                0.116786275726379,
            );
            push_orbit(
                &mut points,
                &mut weights,
                [0.873821971016996, 0.063089014491502, 0.063089014491502],
                0.050844906370207,
            );
            push_orbit(
                &mut points,
                &mut weights,
                [0.053145049844817, 0.310352451033784, 0.636502499121399],
                0.082851075618374,
            );
        }
        7 => {
            push_orbit(&mut points, &mut weights, [third; 3], -0.149570044467682);
            push_orbit(
                &mut points,
                &mut weights,
                [0.479308067841920, 0.260345966079040, 0.260345966079040],
                0.175615257433208,
            );
            push_orbit(
                &mut points,
                &mut weights,
                [0.869739794195568, 0.065130102902216, 0.065130102902216],
                0.053347235608838,
            );
            push_orbit(
                &mut points,
                &mut weights,
                [0.048690315425316, 0.312865496004874, 0.638444188569810],
                0.077113760890257,
            );
        }
        d if d <= 40 => {
            // Collapsed Gauss product rule: x = u, y = v(1 - u), Jacobian 1 - u.
            let n = d + 1;
            let (nodes, wts) = gauss_legendre_01(n)?;
            for (i, &u) in nodes.iter().enumerate() {
                for (j, &v) in nodes.iter().enumerate() {
                    points.push((u, v * (1.0 - u)));
                    weights.push(wts[i] * wts[j] * (1.0 - u));
                }
            }
        }
        d => return Err(Error::Quadrature(d)),
    }
    Ok(TriangleRule { degree, points, weights })
}

/// Gauss–Legendre nodes and weights on `[0, 1]`; weights sum to 1.
/// Nodes via Newton iteration on the Legendre recurrence.
pub fn gauss_legendre_01(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 || n > 64 {
        return Err(Error::Quadrature(n));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Initial guess on [-1, 1].
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Legendre P_n(x) and derivative by recurrence.
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0, x);
        for j in 2..=n {
            let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        weights[i] = w;
        nodes[n - 1 - i] = -x;
        weights[n - 1 - i] = w;
    }
    // Map [-1, 1] → [0, 1].
    let nodes = nodes.iter().map(|x| 0.5 * (1.0 - x)).collect();
    let weights = weights.iter().map(|w| 0.5 * w).collect();
    Ok((nodes, weights))
}
