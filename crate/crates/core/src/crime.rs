//! Approximation of one Hilbert complex by another through an
//! injection/projection morphism pair, and the error machinery that goes
//! with it: the Jacobian operator `J_h = i_h* i_h`, the modified Hodge
//! decomposition, the discrete and modified mixed problems, and numerical
//! checks for the perturbation and stability bounds.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::hilbert::{
    self, harmonic_basis, solve_mixed_hodge, ComplexRep, EigenResult, MixedSolution,
};
use crate::linalg;
use crate::{Error, Result};

/// Tolerance for morphism commutation and `π∘i = id`.
pub const MORPHISM_TOL: f64 = 1e-12;

/// A morphism of Hilbert complexes: per-level maps commuting with the
/// differentials.
#[derive(Clone, Debug)]
pub struct ComplexMorphism {
    pub source: ComplexRep,
    pub target: ComplexRep,
    /// `maps[k]` has shape `target.dim(k) × source.dim(k)`.
    pub maps: Vec<DMatrix<f64>>,
}

/// Per-level morphism diagnostics from [`check_morphism`].
#[derive(Clone, Debug)]
pub struct MorphismDiagnostics {
    /// Relative commutation defects `‖D' F_k - F_{k+1} D‖`.
    pub commutation_defect: Vec<f64>,
    /// Operator norms measured in the W inner products.
    pub w_norms: Vec<f64>,
    /// Operator norms measured in the graph (V) inner products.
    pub v_norms: Vec<f64>,
}

impl MorphismDiagnostics {
    pub fn max_defect(&self) -> f64 {
        self.commutation_defect.iter().cloned().fold(0.0, f64::max)
    }
}

impl ComplexMorphism {
    pub fn new(source: ComplexRep, target: ComplexRep, maps: Vec<DMatrix<f64>>) -> Result<Self> {
        if maps.len() != source.num_levels() || source.num_levels() != target.num_levels() {
            return Err(Error::InvalidMorphism(format!(
                "level mismatch: source {}, target {}, maps {}",
                source.num_levels(),
                target.num_levels(),
                maps.len()
            )));
        }
        for (k, f) in maps.iter().enumerate() {
            if f.nrows() != target.dim(k) || f.ncols() != source.dim(k) {
                return Err(Error::InvalidMorphism(format!(
                    "map {k} has shape {}×{}, expected {}×{}",
                    f.nrows(),
                    f.ncols(),
                    target.dim(k),
                    source.dim(k)
                )));
            }
        }
        Ok(Self { source, target, maps })
    }

    pub fn identity(rep: &ComplexRep) -> Self {
        let maps = (0..rep.num_levels())
            .map(|k| DMatrix::identity(rep.dim(k), rep.dim(k)))
            .collect();
        Self { source: rep.clone(), target: rep.clone(), maps }
    }

    /// Composition `other ∘ self` (apply `self` first).
    pub fn then(&self, other: &ComplexMorphism) -> Result<ComplexMorphism> {
        if other.maps.len() != self.maps.len() {
            return Err(Error::InvalidMorphism("composition level mismatch".into()));
        }
        let maps = self
            .maps
            .iter()
            .zip(&other.maps)
            .map(|(f, g)| g * f)
            .collect();
        ComplexMorphism::new(self.source.clone(), other.target.clone(), maps)
    }
}

/// Commutation defects and W-/V-operator norms of a morphism.
pub fn check_morphism(m: &ComplexMorphism) -> Result<MorphismDiagnostics> {
    let levels = m.maps.len();
    let mut commutation_defect = Vec::with_capacity(levels);
    let mut w_norms = Vec::with_capacity(levels);
    let mut v_norms = Vec::with_capacity(levels);
    for k in 0..levels {
        let f_k = &m.maps[k];
        if k + 1 < levels {
            let lhs = m.target.diff(k) * f_k;
            let rhs = &m.maps[k + 1] * m.source.diff(k);
            let scale = linalg::spectral_norm(&lhs).max(linalg::spectral_norm(&rhs));
            let defect = linalg::spectral_norm(&(lhs - rhs));
            commutation_defect.push(if scale > 0.0 { defect / scale } else { defect });
        } else {
            commutation_defect.push(0.0);
        }
        w_norms.push(linalg::weighted_operator_norm(
            f_k,
            m.target.gram(k),
            m.source.gram(k),
        )?);
        v_norms.push(linalg::weighted_operator_norm(
            f_k,
            &m.target.graph_gram(k),
            &m.source.graph_gram(k),
        )?);
    }
    Ok(MorphismDiagnostics { commutation_defect, w_norms, v_norms })
}

/// Pull a projection back through a morphism: given `f : W → W'` and a
/// projection `π' : W' → W_h` with `π' ∘ (f ∘ i_h) = id`, the composition
/// `π_h = π' ∘ f` is a projection for `i_h`.
pub fn compose_projection(
    f: &ComplexMorphism,
    pi_prime: &ComplexMorphism,
    injection: &ComplexMorphism,
) -> Result<ComplexMorphism> {
    let through = injection.then(f)?.then(pi_prime)?;
    for (k, m) in through.maps.iter().enumerate() {
        let defect = (m - DMatrix::identity(m.nrows(), m.ncols())).amax();
        if defect > 1e-10 {
            return Err(Error::InvalidMorphism(format!(
                "π' ∘ (f ∘ i_h) differs from the identity at level {k} by {defect:.3e}"
            )));
        }
    }
    f.then(pi_prime)
}

// ---------------------------------------------------------------------------
// Crime pairs
// ---------------------------------------------------------------------------

/// A true complex, an approximating complex, and the injection/projection
/// morphisms between them with `π_h ∘ i_h = id`.
#[derive(Clone, Debug)]
pub struct CrimePair {
    pub true_complex: ComplexRep,
    pub approx_complex: ComplexRep,
    /// Injection maps `i_h^k : approx → true`, full column rank.
    pub injection: Vec<DMatrix<f64>>,
    /// Projection maps `π_h^k : true → approx`.
    pub projection: Vec<DMatrix<f64>>,
}

impl CrimePair {
    pub fn new(
        true_complex: ComplexRep,
        approx_complex: ComplexRep,
        injection: Vec<DMatrix<f64>>,
        projection: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        let pair = Self { true_complex, approx_complex, injection, projection };
        pair.check()?;
        Ok(pair)
    }

    /// The trivial pair of a complex with itself.
    pub fn crime_free(rep: &ComplexRep) -> Self {
        let ids: Vec<DMatrix<f64>> = (0..rep.num_levels())
            .map(|k| DMatrix::identity(rep.dim(k), rep.dim(k)))
            .collect();
        Self {
            true_complex: rep.clone(),
            approx_complex: rep.clone(),
            injection: ids.clone(),
            projection: ids,
        }
    }

    pub fn injection_morphism(&self) -> ComplexMorphism {
        ComplexMorphism {
            source: self.approx_complex.clone(),
            target: self.true_complex.clone(),
            maps: self.injection.clone(),
        }
    }

    pub fn projection_morphism(&self) -> ComplexMorphism {
        ComplexMorphism {
            source: self.true_complex.clone(),
            target: self.approx_complex.clone(),
            maps: self.projection.clone(),
        }
    }

    fn check(&self) -> Result<()> {
        let levels = self.true_complex.num_levels();
        if self.approx_complex.num_levels() != levels
            || self.injection.len() != levels
            || self.projection.len() != levels
        {
            return Err(Error::InvalidMorphism("crime pair level mismatch".into()));
        }
        let inj = self.injection_morphism();
        let proj = self.projection_morphism();
        for diag in [check_morphism(&inj)?, check_morphism(&proj)?] {
            if diag.max_defect() > MORPHISM_TOL {
                return Err(Error::InvalidMorphism(format!(
                    "morphism commutation defect {:.3e} exceeds {MORPHISM_TOL:.0e}",
                    diag.max_defect()
                )));
            }
        }
        for k in 0..levels {
            let n_h = self.approx_complex.dim(k);
            let comp = &self.projection[k] * &self.injection[k];
            let defect = (comp - DMatrix::identity(n_h, n_h)).amax();
            if defect > MORPHISM_TOL {
                return Err(Error::InvalidMorphism(format!(
                    "π∘i differs from identity by {defect:.3e} at level {k}"
                )));
            }
            if linalg::rank(&self.injection[k]) != n_h {
                return Err(Error::InvalidMorphism(format!(
                    "injection map at level {k} is rank deficient"
                )));
            }
        }
        Ok(())
    }

    /// Grams `Ĝ_k = I_kᵀ G_k I_k` of the image complex, i.e. the
    /// `i_h* W`-inner products expressed on the approximating space.
    pub fn modified_gram(&self, k: usize) -> DMatrix<f64> {
        let i = &self.injection[k];
        i.transpose() * self.true_complex.gram(k) * i
    }

    /// The approximating complex re-equipped with the modified inner
    /// products `⟨J_h ·, ·⟩_h`; its mixed problem is the subcomplex problem
    /// on `i_h V_h`.
    pub fn modified_complex(&self) -> Result<ComplexRep> {
        let levels = self.approx_complex.num_levels();
        let grams = (0..levels).map(|k| self.modified_gram(k)).collect();
        let diffs = (0..levels - 1)
            .map(|k| self.approx_complex.diff(k).clone())
            .collect();
        ComplexRep::new(grams, diffs)
    }
}

/// The operator `J_h^k = G_h⁻¹ I_kᵀ G I_k` together with its deviation
/// from the identity in the `⟨·,·⟩_h` operator norm.
#[derive(Clone, Debug)]
pub struct JacobianOp {
    pub matrix: DMatrix<f64>,
    /// `Ĝ_k = I_kᵀ G_k I_k`.
    pub modified_gram: DMatrix<f64>,
    /// `‖I - J_h^k‖_h = max |1 - λ|` over the pencil `(Ĝ_k, G_{h,k})`.
    pub deviation: f64,
}

/// Jacobian operator of the pair at level `k`.
pub fn jacobian(pair: &CrimePair, k: usize) -> Result<JacobianOp> {
    let g_h = pair.approx_complex.gram(k);
    let modified = pair.modified_gram(k);
    let chol = g_h
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("approx Gram not SPD".into()))?;
    let matrix = chol.solve(&modified);
    let (vals, _) = linalg::gen_sym_eig(&modified, g_h)?;
    let deviation = vals.iter().map(|l| (1.0 - l).abs()).fold(0.0, f64::max);
    Ok(JacobianOp { matrix, modified_gram: modified, deviation })
}

/// Basis of the modified harmonic space `H'_h^k`: discrete cocycles whose
/// images are orthogonal to image coboundaries in the true inner product.
/// Columns are orthonormal in the modified (`Ĝ`) inner product.
pub fn modified_harmonic_basis(pair: &CrimePair, k: usize) -> Result<DMatrix<f64>> {
    harmonic_basis(&pair.modified_complex()?, k)
}

/// Adjoint of the injection applied to true-space data:
/// `i_h* f = G_h⁻¹ I_kᵀ G f`.
pub fn adjoint_injection(pair: &CrimePair, k: usize, f: &DVector<f64>) -> Result<DVector<f64>> {
    let n = pair.true_complex.dim(k);
    if f.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.len(), context: "adjoint_injection" });
    }
    let rhs = pair.injection[k].transpose() * (pair.true_complex.gram(k) * f);
    linalg::solve(pair.approx_complex.gram(k), &rhs)
}

/// Adjoint of the injection in the modified inner product:
/// `Ĝ⁻¹ I_kᵀ G f`, the natural data for the modified problem.
fn modified_adjoint_injection(pair: &CrimePair, k: usize, f: &DVector<f64>) -> Result<DVector<f64>> {
    let rhs = pair.injection[k].transpose() * (pair.true_complex.gram(k) * f);
    linalg::solve(&pair.modified_gram(k), &rhs)
}

/// The discrete mixed problem: [`solve_mixed_hodge`] on the approximating
/// complex with data `f_h`.
pub fn solve_discrete_mixed(pair: &CrimePair, k: usize, f_h: &DVector<f64>) -> Result<MixedSolution> {
    solve_mixed_hodge(&pair.approx_complex, k, f_h)
}

/// The modified mixed problem on `i_h* V`: the `J_h`-weighted equations
/// with right-hand side `⟨i_h* f, v⟩_h`, harmonic constraint in `H'_h`.
/// Equivalent to the mixed problem on the subcomplex `i_h V_h ⊆ V`.
pub fn solve_modified_mixed(pair: &CrimePair, k: usize, f: &DVector<f64>) -> Result<MixedSolution> {
    let modified = pair.modified_complex()?;
    let data = modified_adjoint_injection(pair, k, f)?;
    solve_mixed_hodge(&modified, k, &data)
}

/// Harmonic gap `μ = sup { ‖(I - i_h π_h) r‖ : r ∈ H^k, ‖r‖ = 1 }`.
pub fn mu_gap(pair: &CrimePair, k: usize) -> Result<f64> {
    let q = harmonic_basis(&pair.true_complex, k)?;
    if q.ncols() == 0 {
        return Ok(0.0);
    }
    let ipi = &pair.injection[k] * &pair.projection[k];
    let e = &q - ipi * &q;
    // q has G-orthonormal columns, so coordinates are already Euclidean.
    let l = linalg::chol_factor(pair.true_complex.gram(k))?;
    Ok(linalg::spectral_norm(&(l.transpose() * e)))
}

/// Everything the perturbation corollary bounds, measured.
#[derive(Clone, Debug, Serialize)]
pub struct CrimeReport {
    /// `‖σ - i_hσ_h‖_V + ‖u - i_hu_h‖_V + ‖p - i_hp_h‖`.
    pub lhs: f64,
    /// Sum of the three best-approximation infima over `i_h V_h` plus the
    /// μ-weighted term.
    pub best_approx: f64,
    /// `‖f_h - i_h* f‖_h`.
    pub data_error: f64,
    /// `‖I - J_h‖ ‖f‖`.
    pub geometry_error: f64,
    /// Harmonic gap constant.
    pub mu: f64,
    /// `lhs / (best_approx + data_error + geometry_error)`.
    pub ratio: f64,
    /// `‖σ_h-σ'_h‖_{V_h} + ‖u_h-u'_h‖_{V_h} + ‖p_h-p'_h‖_h`, the quantity
    /// the perturbation bound controls directly.
    pub intermediate: f64,
}

/// Solve the true, discrete and modified problems and measure every term
/// of the error decomposition. `f_h` defaults to `i_h* f`.
pub fn crime_report(
    pair: &CrimePair,
    k: usize,
    f: &DVector<f64>,
    f_h: Option<&DVector<f64>>,
) -> Result<CrimeReport> {
    let truth = &pair.true_complex;
    let approx = &pair.approx_complex;
    let exact = solve_mixed_hodge(truth, k, f)?;
    let istar_f = adjoint_injection(pair, k, f)?;
    let f_h = match f_h {
        Some(v) => v.clone(),
        None => istar_f.clone(),
    };
    let discrete = solve_discrete_mixed(pair, k, &f_h)?;
    let modified = solve_modified_mixed(pair, k, f)?;

    let v_err = |lvl: usize, exact_vec: &DVector<f64>, approx_vec: &DVector<f64>, i: &DMatrix<f64>| {
        truth.v_norm(lvl, &(exact_vec - i * approx_vec))
    };
    let lhs_sigma = if k > 0 {
        v_err(k - 1, &exact.sigma, &discrete.sigma, &pair.injection[k - 1])
    } else {
        0.0
    };
    let lhs_u = v_err(k, &exact.u, &discrete.u, &pair.injection[k]);
    let lhs_p = truth.w_norm(k, &(exact.p_full() - &pair.injection[k] * discrete.p_full()));
    let lhs = lhs_sigma + lhs_u + lhs_p;

    // Best-approximation infima in V-norms over the image of i_h.
    let dist_v = |lvl: usize, v: &DVector<f64>| {
        linalg::distance_to_span(&pair.injection[lvl], &truth.graph_gram(lvl), v)
    };
    let inf_sigma = if k > 0 { dist_v(k - 1, &exact.sigma) } else { 0.0 };
    let inf_u = dist_v(k, &exact.u);
    let inf_p = dist_v(k, &exact.p_full());
    let mu = mu_gap(pair, k)?;
    let split = hilbert::hodge_decompose(truth, k, &exact.u)?;
    let inf_pbu = dist_v(k, &split.boundary);
    let best_approx = inf_sigma + inf_u + inf_p + mu * inf_pbu;

    let data_error = approx.w_norm(k, &(&f_h - &istar_f));
    let deviation = jacobian(pair, k)?.deviation;
    let geometry_error = deviation * truth.w_norm(k, f);

    let inter_sigma = if k > 0 {
        approx.v_norm(k - 1, &(&discrete.sigma - &modified.sigma))
    } else {
        0.0
    };
    let inter_u = approx.v_norm(k, &(&discrete.u - &modified.u));
    let inter_p = approx.w_norm(k, &(discrete.p_full() - modified.p_full()));
    let intermediate = inter_sigma + inter_u + inter_p;

    let denom = best_approx + data_error + geometry_error;
    let ratio = if denom > 0.0 { lhs / denom } else if lhs == 0.0 { 0.0 } else { f64::INFINITY };
    Ok(CrimeReport { lhs, best_approx, data_error, geometry_error, mu, ratio, intermediate })
}

/// Measured quantities for the data-projection quasi-optimality bound.
#[derive(Clone, Debug, Serialize)]
pub struct ProjectionDataCheck {
    /// `‖Π f - i_h* f‖_h`.
    pub lhs: f64,
    /// `‖I - J_h‖ ‖f‖`.
    pub geometry_term: f64,
    /// True-norm distance from `f` to the range of `i_h`.
    pub best_approx_term: f64,
    /// Audit constant `2‖Π‖ + ‖i_h*‖` in W-operator norms.
    pub audit_constant: f64,
    pub violated: bool,
}

/// Check `‖Π f - i_h* f‖_h ≤ C (‖I-J_h‖‖f‖ + inf_φ ‖f - φ‖)` for a given
/// linear projection `Π` (a `dim_h × dim` matrix with `Π i_h = id`).
pub fn projection_data(
    pair: &CrimePair,
    k: usize,
    pi: &DMatrix<f64>,
    f: &DVector<f64>,
) -> Result<ProjectionDataCheck> {
    let n_h = pair.approx_complex.dim(k);
    let comp = pi * &pair.injection[k];
    if (comp - DMatrix::identity(n_h, n_h)).amax() > 1e-10 {
        return Err(Error::InvalidMorphism("Π ∘ i_h is not the identity".into()));
    }
    let g = pair.true_complex.gram(k);
    let g_h = pair.approx_complex.gram(k);
    let istar_f = adjoint_injection(pair, k, f)?;
    let lhs = linalg::norm_in(g_h, &(pi * f - istar_f));
    let deviation = jacobian(pair, k)?.deviation;
    let geometry_term = deviation * linalg::norm_in(g, f);
    let best_approx_term = linalg::distance_to_span(&pair.injection[k], g, f);
    let pi_norm = linalg::weighted_operator_norm(pi, g_h, g)?;
    let gi = g * &pair.injection[k];
    let istar_mat = linalg::solve_matrix(g_h, &gi.transpose())?;
    let istar_norm = linalg::weighted_operator_norm(&istar_mat, g_h, g)?;
    let audit_constant = 2.0 * pi_norm + istar_norm;
    let bound = audit_constant * (geometry_term + best_approx_term);
    let violated = lhs > bound * (1.0 + 1e-9) + 1e-14;
    Ok(ProjectionDataCheck { lhs, geometry_term, best_approx_term, audit_constant, violated })
}

/// Result of [`discrete_poincare_check`].
#[derive(Clone, Debug, Serialize)]
pub struct DiscretePoincareCheck {
    pub measured: f64,
    pub bound: f64,
    /// True when `Z_h^{k⊥}` is trivial and the inequality is vacuous.
    pub trivial: bool,
    pub violated: bool,
}

/// Verify `c_{P,h} ≤ c_P ‖π_h^k‖_V ‖i_h^{k+1}‖_V`.
pub fn discrete_poincare_check(pair: &CrimePair, k: usize) -> Result<DiscretePoincareCheck> {
    let measured = hilbert::poincare_constant(&pair.approx_complex, k)?;
    if measured.trivial {
        return Ok(DiscretePoincareCheck { measured: 0.0, bound: 0.0, trivial: true, violated: false });
    }
    let c_p = hilbert::poincare_constant(&pair.true_complex, k)?.constant;
    let pi_norm = linalg::weighted_operator_norm(
        &pair.projection[k],
        &pair.approx_complex.graph_gram(k),
        &pair.true_complex.graph_gram(k),
    )?;
    let i_norm = linalg::weighted_operator_norm(
        &pair.injection[k + 1],
        &pair.true_complex.graph_gram(k + 1),
        &pair.approx_complex.graph_gram(k + 1),
    )?;
    let bound = c_p * pi_norm * i_norm;
    let violated = measured.constant > bound * (1.0 + 1e-9);
    Ok(DiscretePoincareCheck { measured: measured.constant, bound, trivial: false, violated })
}

/// Per-level verdict of [`cohomology_isomorphism_check`].
#[derive(Clone, Debug, Serialize)]
pub struct CohomologyVerdict {
    pub level: usize,
    /// Harmonic gap `sup ‖q - i_hπ_h q‖ / ‖q‖`; the theorem's hypothesis is
    /// `gap < 1`.
    pub gap: f64,
    pub hypothesis_holds: bool,
    /// Whether the induced map on harmonic representatives is bijective.
    pub bijective: bool,
    /// Set when the hypothesis holds but the induced map fails to be
    /// bijective — a genuine violation of the theorem.
    pub violated: bool,
}

/// For every level: does the gap hypothesis hold, and do the morphisms
/// induce an isomorphism on cohomology (checked through harmonic bases)?
pub fn cohomology_isomorphism_check(pair: &CrimePair) -> Result<Vec<CohomologyVerdict>> {
    let mut out = Vec::new();
    for k in 0..pair.true_complex.num_levels() {
        let q_true = harmonic_basis(&pair.true_complex, k)?;
        let q_approx = harmonic_basis(&pair.approx_complex, k)?;
        let gap = if q_true.ncols() == 0 {
            0.0
        } else {
            mu_gap(pair, k)?
        };
        let hypothesis_holds = gap < 1.0 - 1e-12;
        let bijective = if q_true.ncols() != q_approx.ncols() {
            false
        } else if q_true.ncols() == 0 {
            true
        } else {
            // Induced map on cohomology via harmonic representatives:
            // q ↦ harmonic part of π_h q in the approximating complex.
            let mapped = &pair.projection[k] * &q_true;
            let coords = q_approx.transpose() * pair.approx_complex.gram(k) * mapped;
            linalg::rank(&coords) == q_true.ncols()
        };
        out.push(CohomologyVerdict {
            level: k,
            gap,
            hypothesis_holds,
            bijective,
            violated: hypothesis_holds && !bijective,
        });
    }
    Ok(out)
}

/// Eigenvalue comparison between the true, discrete, and modified problems.
#[derive(Clone, Debug, Serialize)]
pub struct EigenComparison {
    /// `(λ_j, λ_{h,j}, λ'_{h,j})` triples, ascending.
    pub triples: Vec<(f64, f64, f64)>,
    /// Probe-measured norm of `i_h (K_h - K'_h) π_h` on the true space.
    pub solution_operator_gap: f64,
    /// `‖I - J_h‖` at level k, for scaling comparisons.
    pub jacobian_deviation: f64,
}

/// Modified eigenproblem: `J_h`-weighted left-hand side with eigenvalue
/// pairing `λ' ⟨u', v⟩_h` in the unmodified inner product.
pub fn solve_modified_eigen(pair: &CrimePair, k: usize, nev: usize) -> Result<EigenResult> {
    let modified = pair.modified_complex()?;
    hilbert_eigen_with_mass(&modified, k, nev, pair.approx_complex.gram(k))
}

/// Hodge eigenproblem of `rep` with the eigenvalue pairing taken in a
/// caller-supplied mass matrix instead of `rep`'s Gram.
fn hilbert_eigen_with_mass(
    rep: &ComplexRep,
    k: usize,
    nev: usize,
    mass: &DMatrix<f64>,
) -> Result<EigenResult> {
    let g_k = rep.gram(k);
    let stiff = rep.curl_gram(k);
    let d_in = rep.diff_into(k);
    let laplace_form = if k > 0 && rep.dim(k - 1) > 0 {
        let gd = g_k * &d_in;
        let chol = rep
            .gram(k - 1)
            .clone()
            .cholesky()
            .ok_or_else(|| Error::SingularSystem("Gram not SPD".into()))?;
        let solved = chol.solve(&gd.transpose());
        &stiff + &gd * solved
    } else {
        stiff
    };
    let (vals, vecs) = linalg::gen_sym_eig(&laplace_form, mass)?;
    let n_harmonic = harmonic_basis(rep, k)?.ncols();
    let available = rep.dim(k) - n_harmonic;
    if nev > available {
        return Err(Error::TooManyEigenpairs { requested: nev, available });
    }
    let adjoint = if k > 0 { Some(hilbert::adjoint_differential(rep, k)?) } else { None };
    let mut eigenvalues = Vec::with_capacity(nev);
    let mut eigenvectors = Vec::with_capacity(nev);
    for j in n_harmonic..n_harmonic + nev {
        let u: DVector<f64> = vecs.column(j).into();
        let sigma = match &adjoint {
            Some(a) => a * &u,
            None => DVector::zeros(0),
        };
        eigenvalues.push(vals[j]);
        eigenvectors.push((sigma, u));
    }
    let mut defect = 0.0f64;
    for (i, (_, ui)) in eigenvectors.iter().enumerate() {
        for (j, (_, uj)) in eigenvectors.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            defect = defect.max((ui.dot(&(mass * uj)) - want).abs());
        }
    }
    Ok(EigenResult { eigenvalues, eigenvectors, orthonormality_defect: defect })
}

/// Compare the spectra of the true, discrete and modified eigenproblems and
/// probe the solution-operator difference `i_h (K_h - K'_h) π_h`.
pub fn eigen_convergence_report(
    pair: &CrimePair,
    k: usize,
    nev: usize,
    probe_seed: u64,
) -> Result<EigenComparison> {
    let truth = hilbert::solve_hodge_eigen(&pair.true_complex, k, nev)?;
    let discrete = hilbert::solve_hodge_eigen(&pair.approx_complex, k, nev)?;
    let modified = solve_modified_eigen(pair, k, nev)?;
    let triples = (0..nev)
        .map(|j| (truth.eigenvalues[j], discrete.eigenvalues[j], modified.eigenvalues[j]))
        .collect();

    let modified_rep = pair.modified_complex()?;
    let mut rng = crate::crime::seeded_rng(probe_seed);
    let n = pair.true_complex.dim(k);
    let g = pair.true_complex.gram(k);
    let mut gap: f64 = 0.0;
    for _ in 0..8 {
        let x = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let x_norm = linalg::norm_in(g, &x);
        if x_norm < 1e-14 {
            continue;
        }
        let projected = &pair.projection[k] * &x;
        let u_discrete = solve_mixed_hodge(&pair.approx_complex, k, &projected)?.u;
        // Modified solution operator with data ⟨g_h, v⟩_h: convert the
        // right-hand side into modified-complex coefficients.
        let rhs = pair.approx_complex.gram(k) * &projected;
        let data = linalg::solve(&pair.modified_gram(k), &rhs)?;
        let u_modified = solve_mixed_hodge(&modified_rep, k, &data)?.u;
        let diff = &pair.injection[k] * (u_discrete - u_modified);
        gap = gap.max(linalg::norm_in(g, &diff) / x_norm);
    }
    Ok(EigenComparison {
        triples,
        solution_operator_gap: gap,
        jacobian_deviation: jacobian(pair, k)?.deviation,
    })
}

// ---------------------------------------------------------------------------
// Random complexes and pairs
// ---------------------------------------------------------------------------

pub type StudyRng = rand_chacha::ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> StudyRng {
    use rand::SeedableRng;
    StudyRng::seed_from_u64(seed)
}

/// Random SPD matrix with condition number at most 100.
pub fn random_spd(rng: &mut StudyRng, n: usize) -> DMatrix<f64> {
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let raw = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let q = raw.qr().q();
    let eigs = DVector::from_fn(n, |_, _| {
        // log-uniform in [0.1, 10]: condition ≤ 100
        10f64.powf(rng.random_range(-1.0..1.0))
    });
    &q * DMatrix::from_diagonal(&eigs) * q.transpose()
}

/// Random 3-level cochain complex with integer incidence differentials
/// (built from a random simplicial 2-complex) and random SPD Grams.
pub fn random_complex(rng: &mut StudyRng) -> ComplexRep {
    random_complex_sized(rng, 5)
}

/// As [`random_complex`] with at most `max_vertices` vertices.
pub fn random_complex_sized(rng: &mut StudyRng, max_vertices: usize) -> ComplexRep {
    let nv = rng.random_range(3..=max_vertices.max(3));
    // Random edge set over the vertices, kept connected-ish by always
    // including a path.
    let mut edges: Vec<(usize, usize)> = (0..nv - 1).map(|i| (i, i + 1)).collect();
    for i in 0..nv {
        for j in (i + 1)..nv {
            if j > i + 1 && rng.random_range(0.0..1.0) < 0.5 {
                edges.push((i, j));
            }
        }
    }
    // Guarantee one triangle so no level degenerates to dimension zero.
    edges.push((0, 1));
    edges.push((1, 2));
    edges.push((0, 2));
    edges.sort();
    edges.dedup();
    let edge_index = |a: usize, b: usize| edges.iter().position(|&e| e == (a.min(b), a.max(b)));
    // Triangles: triples whose edges are all present, kept randomly.
    let mut tris: Vec<(usize, usize, usize)> = vec![(0, 1, 2)];
    for a in 0..nv {
        for b in (a + 1)..nv {
            for c in (b + 1)..nv {
                if (a, b, c) != (0, 1, 2)
                    && edge_index(a, b).is_some()
                    && edge_index(b, c).is_some()
                    && edge_index(a, c).is_some()
                    && rng.random_range(0.0..1.0) < 0.6
                {
                    tris.push((a, b, c));
                }
            }
        }
    }
    let ne = edges.len();
    let nt = tris.len();
    let mut d0 = DMatrix::zeros(ne, nv);
    for (e, &(i, j)) in edges.iter().enumerate() {
        d0[(e, i)] = -1.0;
        d0[(e, j)] = 1.0;
    }
    let mut d1 = DMatrix::zeros(nt, ne);
    for (t, &(a, b, c)) in tris.iter().enumerate() {
        d1[(t, edge_index(a, b).unwrap())] = 1.0;
        d1[(t, edge_index(b, c).unwrap())] = 1.0;
        d1[(t, edge_index(a, c).unwrap())] = -1.0;
    }
    let grams = vec![random_spd(rng, nv), random_spd(rng, ne), random_spd(rng, nt)];
    ComplexRep::new(grams, vec![d0, d1]).expect("random complex construction")
}

/// Random crime pair. The true complex is the direct sum of the
/// approximating complex with an independent one, re-equipped with a Gram
/// whose restriction to the embedded block matches the approximating Gram
/// exactly; the injection is that isometric embedding composed with
/// `I + ε S` for a cochain endomorphism `S` of unit norm, and the
/// projection is the commuting left inverse `(I + ε S)⁻¹ ∘ selector`.
/// `eps = 0` therefore yields a bitwise crime-free pair.
pub fn random_pair(rng: &mut StudyRng, eps: f64) -> CrimePair {
    let approx = random_complex(rng);
    // A small summand keeps the total dimension of the true complex ≤ 40.
    let extra = random_complex_sized(rng, 3);
    let levels = approx.num_levels();

    let mut grams = Vec::with_capacity(levels);
    let mut diffs = Vec::with_capacity(levels - 1);
    for k in 0..levels {
        let (na, nb) = (approx.dim(k), extra.dim(k));
        let g_a = approx.gram(k);
        let coupling = DMatrix::from_fn(na, nb, |_, _| rng.random_range(-0.2..0.2));
        let r0 = random_spd(rng, nb);
        // Schur complement of the (1,1) block is r0, so the full matrix is
        // SPD while the embedded block stays exactly G_a.
        let ginv_c = linalg::pinv_solve_matrix(g_a, &coupling);
        let corner = &r0 + coupling.transpose() * ginv_c;
        let n = na + nb;
        let mut g = DMatrix::zeros(n, n);
        g.view_mut((0, 0), (na, na)).copy_from(g_a);
        g.view_mut((0, na), (na, nb)).copy_from(&coupling);
        g.view_mut((na, 0), (nb, na)).copy_from(&coupling.transpose());
        g.view_mut((na, na), (nb, nb)).copy_from(&corner);
        grams.push(g);
        if k + 1 < levels {
            let (da, db) = (approx.diff(k), extra.diff(k));
            let mut d = DMatrix::zeros(da.nrows() + db.nrows(), da.ncols() + db.ncols());
            d.view_mut((0, 0), da.shape()).copy_from(da);
            d.view_mut(da.shape(), db.shape()).copy_from(db);
            diffs.push(d);
        }
    }
    let true_complex = ComplexRep::new(grams, diffs).expect("true complex construction");

    // Cochain endomorphism S = α id + β Δ_h of the approximating complex,
    // normalized to unit W-operator norm across levels.
    let alpha: f64 = rng.random_range(-1.0..1.0);
    let beta: f64 = rng.random_range(-1.0..1.0);
    let mut s_maps: Vec<DMatrix<f64>> = (0..levels)
        .map(|k| {
            let n = approx.dim(k);
            let g = approx.gram(k);
            let chol = g.clone().cholesky().expect("approx Gram SPD");
            let stiff_part = chol.solve(&approx.curl_gram(k));
            let lower = if k > 0 {
                let d_in = approx.diff_into(k);
                let gd = g * &d_in;
                let chol_prev = approx.gram(k - 1).clone().cholesky().expect("Gram SPD");
                let inner = chol_prev.solve(&gd.transpose());
                chol.solve(&(&gd * inner))
            } else {
                DMatrix::zeros(n, n)
            };
            DMatrix::identity(n, n) * alpha + (stiff_part + lower) * beta
        })
        .collect();
    let norm = s_maps
        .iter()
        .enumerate()
        .map(|(k, s)| {
            linalg::weighted_operator_norm(s, approx.gram(k), approx.gram(k)).unwrap_or(0.0)
        })
        .fold(0.0f64, f64::max)
        .max(1e-12);
    for s in &mut s_maps {
        *s /= norm;
    }

    let mut injection = Vec::with_capacity(levels);
    let mut projection = Vec::with_capacity(levels);
    #[allow(clippy::needless_range_loop)]
    for k in 0..levels {
        let (na, n) = (approx.dim(k), true_complex.dim(k));
        let perturbed = DMatrix::identity(na, na) + &s_maps[k] * eps;
        let mut embed = DMatrix::zeros(n, na);
        embed.view_mut((0, 0), (na, na)).copy_from(&perturbed);
        injection.push(embed);
        let mut selector = DMatrix::zeros(na, n);
        selector.view_mut((0, 0), (na, na)).copy_from(&DMatrix::identity(na, na));
        let proj = perturbed
            .lu()
            .solve(&selector)
            .expect("I + εS invertible for ε < 1");
        projection.push(proj);
    }
    CrimePair::new(true_complex, approx, injection, projection).expect("random pair valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_morphism_diagnostics() {
        let rep = random_complex(&mut seeded_rng(1));
        let m = ComplexMorphism::identity(&rep);
        let diag = check_morphism(&m).unwrap();
        assert_eq!(diag.max_defect(), 0.0);
        for k in 0..rep.num_levels() {
            assert_relative_eq!(diag.w_norms[k], 1.0, epsilon = 1e-10);
            assert_relative_eq!(diag.v_norms[k], 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn scaled_morphism_norms() {
        let rep = random_complex(&mut seeded_rng(2));
        let c = -2.5;
        let maps = (0..rep.num_levels())
            .map(|k| DMatrix::identity(rep.dim(k), rep.dim(k)) * c)
            .collect();
        let m = ComplexMorphism::new(rep.clone(), rep.clone(), maps).unwrap();
        let diag = check_morphism(&m).unwrap();
        assert!(diag.max_defect() < 1e-14);
        for k in 0..rep.num_levels() {
            assert_relative_eq!(diag.w_norms[k], c.abs(), epsilon = 1e-10);
        }
    }

    #[test]
    fn rank_one_perturbation_breaks_commutation_proportionally() {
        let rep = random_complex(&mut seeded_rng(3));
        let mut defects = Vec::new();
        for &eps in &[1e-2, 1e-4] {
            let mut maps: Vec<DMatrix<f64>> = (0..rep.num_levels())
                .map(|k| DMatrix::identity(rep.dim(k), rep.dim(k)))
                .collect();
            let n = rep.dim(0);
            if n > 0 && rep.dim(1) > 0 {
                maps[0][(0, 0)] += eps;
            }
            let m = ComplexMorphism::new(rep.clone(), rep.clone(), maps).unwrap();
            defects.push(check_morphism(&m).unwrap().max_defect());
        }
        // defect scales linearly with ε
        let ratio = defects[0] / defects[1];
        assert!((ratio / 100.0 - 1.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn compose_projection_identity_passthrough() {
        let pair = random_pair(&mut seeded_rng(4), 0.1);
        let f = ComplexMorphism::identity(&pair.true_complex);
        let pi_prime = pair.projection_morphism();
        let injection = pair.injection_morphism();
        let composed = compose_projection(&f, &pi_prime, &injection).unwrap();
        for k in 0..composed.maps.len() {
            assert!((&composed.maps[k] - &pair.projection[k]).amax() < 1e-14);
        }
        let diag = check_morphism(&composed).unwrap();
        assert!(diag.max_defect() < 1e-10);
    }

    #[test]
    fn compose_projection_through_invertible_map() {
        let pair = random_pair(&mut seeded_rng(5), 0.05);
        // f: diagonal scaling of the true complex onto itself; commutes only
        // if uniform, so use a global scalar.
        let c = 3.0;
        let maps = (0..pair.true_complex.num_levels())
            .map(|k| DMatrix::identity(pair.true_complex.dim(k), pair.true_complex.dim(k)) * c)
            .collect();
        let f = ComplexMorphism::new(pair.true_complex.clone(), pair.true_complex.clone(), maps)
            .unwrap();
        // π' must invert f ∘ i_h: use π_h / c.
        let pi_prime_maps = pair.projection.iter().map(|p| p / c).collect();
        let pi_prime = ComplexMorphism::new(
            pair.true_complex.clone(),
            pair.approx_complex.clone(),
            pi_prime_maps,
        )
        .unwrap();
        let composed = compose_projection(&f, &pi_prime, &pair.injection_morphism()).unwrap();
        for k in 0..composed.maps.len() {
            let comp = &composed.maps[k] * &pair.injection[k];
            let (rows, cols) = comp.shape();
            assert!((comp - DMatrix::identity(rows, cols)).amax() < 1e-12);
        }
    }

    #[test]
    fn compose_projection_rejects_bad_precondition() {
        let pair = random_pair(&mut seeded_rng(6), 0.05);
        let f = ComplexMorphism::identity(&pair.true_complex);
        let bad_maps = pair.projection.iter().map(|p| p * 2.0).collect();
        let bad = ComplexMorphism::new(
            pair.true_complex.clone(),
            pair.approx_complex.clone(),
            bad_maps,
        )
        .unwrap();
        assert!(compose_projection(&f, &bad, &pair.injection_morphism()).is_err());
    }

    #[test]
    fn jacobian_of_crime_free_pair_is_identity() {
        let rep = random_complex(&mut seeded_rng(7));
        let pair = CrimePair::crime_free(&rep);
        for k in 0..rep.num_levels() {
            let j = jacobian(&pair, k).unwrap();
            assert!(j.deviation < 1e-12);
            let n = rep.dim(k);
            assert!((j.matrix.clone() - DMatrix::identity(n, n)).amax() < 1e-10);
        }
    }

    #[test]
    fn jacobian_of_scaled_isometry() {
        let pair = random_pair(&mut seeded_rng(8), 0.0);
        let c = 1.3;
        let scaled = CrimePair::new(
            pair.true_complex.clone(),
            pair.approx_complex.clone(),
            pair.injection.iter().map(|i| i * c).collect(),
            pair.projection.iter().map(|p| p / c).collect(),
        )
        .unwrap();
        for k in 0..scaled.true_complex.num_levels() {
            let j = jacobian(&scaled, k).unwrap();
            let n = scaled.approx_complex.dim(k);
            assert!((j.matrix.clone() - DMatrix::identity(n, n) * c * c).amax() < 1e-9);
            assert_relative_eq!(j.deviation, c * c - 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn jacobian_self_adjoint_positive() {
        let pair = random_pair(&mut seeded_rng(9), 0.2);
        let mut rng = seeded_rng(10);
        for k in 0..pair.true_complex.num_levels() {
            let j = jacobian(&pair, k).unwrap();
            let g_h = pair.approx_complex.gram(k);
            let n = pair.approx_complex.dim(k);
            for _ in 0..10 {
                let u = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
                let v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
                let lhs = (&j.matrix * &u).dot(&(g_h * &v));
                let rhs = u.dot(&(g_h * (&j.matrix * &v)));
                assert_relative_eq!(lhs, rhs, epsilon = 1e-9 * (1.0 + lhs.abs()));
                // ⟨J u, v⟩_h = ⟨i u, i v⟩
                let g = pair.true_complex.gram(k);
                let iu = &pair.injection[k] * &u;
                let iv = &pair.injection[k] * &v;
                assert_relative_eq!(lhs, iu.dot(&(g * &iv)), epsilon = 1e-9 * (1.0 + lhs.abs()));
                if u.amax() > 1e-12 {
                    assert!(u.dot(&(g_h * (&j.matrix * &u))) > 0.0);
                }
            }
        }
    }

    #[test]
    fn modified_harmonic_matches_for_unitary_injection() {
        let pair = random_pair(&mut seeded_rng(11), 0.0);
        for k in 0..pair.true_complex.num_levels() {
            let plain = harmonic_basis(&pair.approx_complex, k).unwrap();
            let modified = modified_harmonic_basis(&pair, k).unwrap();
            assert_eq!(plain.ncols(), modified.ncols());
            if plain.ncols() > 0 {
                // Same span: projection of one basis onto the other is full rank.
                let g = pair.approx_complex.gram(k);
                let overlap = plain.transpose() * g * &modified;
                assert_eq!(linalg::rank(&overlap), plain.ncols());
            }
        }
    }

    #[test]
    fn modified_harmonic_orthogonality_and_dimension() {
        let pair = random_pair(&mut seeded_rng(12), 0.3);
        for k in 0..pair.true_complex.num_levels() {
            let basis = modified_harmonic_basis(&pair, k).unwrap();
            let plain = harmonic_basis(&pair.approx_complex, k).unwrap();
            assert_eq!(basis.ncols(), plain.ncols());
            if basis.ncols() == 0 {
                continue;
            }
            // Cocycles, and images orthogonal to image coboundaries.
            assert!((pair.approx_complex.diff(k) * &basis).amax() < 1e-10);
            let d_in = pair.approx_complex.diff_into(k);
            if d_in.ncols() > 0 {
                let g = pair.true_complex.gram(k);
                let i_k = &pair.injection[k];
                let image_boundaries = i_k * &d_in;
                let ip = image_boundaries.transpose() * g * (i_k * &basis);
                assert!(ip.amax() < 1e-10);
            }
            // The projection of H_h onto H'_h is a bijection when the
            // Jacobian deviation is below one.
            if jacobian(&pair, k).unwrap().deviation < 1.0 {
                let overlap = plain.transpose() * pair.approx_complex.gram(k) * &basis;
                assert_eq!(linalg::rank(&overlap), basis.ncols());
            }
        }
    }

    #[test]
    fn modified_harmonic_hand_built_skewed_gram() {
        // Two-level approximating complex with n0 = 1, n1 = 2, D0 = (1, 0)ᵀ
        // (plain harmonic space span{(0,1)}), injected into a true complex
        // with a skewed Gram so that the modified harmonic vector tilts.
        let approx = ComplexRep::new(
            vec![DMatrix::identity(1, 1), DMatrix::identity(2, 2)],
            vec![DMatrix::from_row_slice(2, 1, &[1.0, 0.0])],
        )
        .unwrap();
        let skew = DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 2.0]);
        let truth = ComplexRep::new(
            vec![DMatrix::identity(1, 1), skew.clone()],
            vec![DMatrix::from_row_slice(2, 1, &[1.0, 0.0])],
        )
        .unwrap();
        let ids = vec![DMatrix::identity(1, 1), DMatrix::identity(2, 2)];
        let pair = CrimePair::new(truth, approx, ids.clone(), ids).unwrap();
        let basis = modified_harmonic_basis(&pair, 1).unwrap();
        assert_eq!(basis.ncols(), 1);
        // Cocycle (level 1 is the top) and i_h z ⊥ i_h B_h in the true
        // inner product: B_h = span{(1,0)}, so skew·z must kill the first
        // coordinate: z ∝ (-0.4, 1).
        let z = basis.column(0);
        let b = DVector::from_vec(vec![1.0, 0.0]);
        let ip = (skew * z).dot(&b);
        assert!(ip.abs() < 1e-10, "i_h z not orthogonal to i_h B_h: {ip}");
        assert_relative_eq!(z[0] / z[1], -0.4, epsilon = 1e-12);
        // The unmodified harmonic vector (0,1) differs from the modified one.
        let plain = harmonic_basis(&pair.approx_complex, 1).unwrap();
        assert_relative_eq!(plain[(0, 0)].abs(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn adjoint_injection_identities() {
        let pair = random_pair(&mut seeded_rng(13), 0.2);
        let mut rng = seeded_rng(14);
        for k in 0..pair.true_complex.num_levels() {
            let n = pair.true_complex.dim(k);
            let n_h = pair.approx_complex.dim(k);
            let f = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let istar = adjoint_injection(&pair, k, &f).unwrap();
            let g = pair.true_complex.gram(k);
            let g_h = pair.approx_complex.gram(k);
            for _ in 0..5 {
                let v = DVector::from_fn(n_h, |_, _| rng.random_range(-1.0..1.0));
                let lhs = istar.dot(&(g_h * &v));
                let rhs = f.dot(&(g * (&pair.injection[k] * &v)));
                assert_relative_eq!(lhs, rhs, epsilon = 1e-12 * (1.0 + lhs.abs()) * 100.0);
            }
        }
    }

    #[test]
    fn adjoint_injection_on_range_and_orthogonal_complement() {
        let pair = random_pair(&mut seeded_rng(15), 0.0);
        let k = 1;
        let n_h = pair.approx_complex.dim(k);
        let mut rng = seeded_rng(16);
        // f in the range of an isometric injection: i* recovers the preimage.
        let v = DVector::from_fn(n_h, |_, _| rng.random_range(-1.0..1.0));
        let f = &pair.injection[k] * &v;
        let istar = adjoint_injection(&pair, k, &f).unwrap();
        assert!((istar - &v).amax() < 1e-10);
        // f orthogonal to the range maps to zero.
        let g = pair.true_complex.gram(k);
        let n = pair.true_complex.dim(k);
        let f = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let perp = &f - linalg::g_project(&pair.injection[k], g, &f);
        let istar = adjoint_injection(&pair, k, &perp).unwrap();
        assert!(istar.amax() < 1e-9);
    }

    #[test]
    fn modified_solve_equals_discrete_for_crime_free_pair() {
        let pair = random_pair(&mut seeded_rng(17), 0.0);
        let k = 1;
        let mut rng = seeded_rng(18);
        let f = DVector::from_fn(pair.true_complex.dim(k), |_, _| rng.random_range(-1.0..1.0));
        let f_h = adjoint_injection(&pair, k, &f).unwrap();
        let discrete = solve_discrete_mixed(&pair, k, &f_h).unwrap();
        let modified = solve_modified_mixed(&pair, k, &f).unwrap();
        assert_eq!(discrete.u, modified.u);
        assert_eq!(discrete.sigma, modified.sigma);
        assert_eq!(discrete.p_full(), modified.p_full());
    }

    #[test]
    fn modified_solve_zero_data() {
        let pair = random_pair(&mut seeded_rng(19), 0.2);
        let k = 1;
        // f orthogonal to range(i_h) has i_h* f = 0 and a zero solution.
        let g = pair.true_complex.gram(k);
        let mut rng = seeded_rng(20);
        let f = DVector::from_fn(pair.true_complex.dim(k), |_, _| rng.random_range(-1.0..1.0));
        let perp = &f - linalg::g_project(&pair.injection[k], g, &f);
        let modified = solve_modified_mixed(&pair, k, &perp).unwrap();
        assert!(modified.u.amax() < 1e-9);
        assert!(modified.sigma.amax() < 1e-9);
        assert!(modified.p_full().amax() < 1e-9);
    }

    #[test]
    fn mu_gap_zero_for_crime_free() {
        let pair = random_pair(&mut seeded_rng(21), 0.0);
        for k in 0..pair.true_complex.num_levels() {
            // H^k ⊂ range(i_h) does not hold in general for the direct sum,
            // so only assert the bound μ ≤ ‖I - i_hπ_h‖ here; the exact-zero
            // case is covered with the identity pair below.
            let mu = mu_gap(&pair, k).unwrap();
            let ipi = &pair.injection[k] * &pair.projection[k];
            let n = pair.true_complex.dim(k);
            let op = DMatrix::identity(n, n) - ipi;
            let bound = linalg::weighted_operator_norm(
                &op,
                pair.true_complex.gram(k),
                pair.true_complex.gram(k),
            )
            .unwrap();
            assert!(mu <= bound + 1e-10);
        }
        let rep = random_complex(&mut seeded_rng(22));
        let idpair = CrimePair::crime_free(&rep);
        for k in 0..rep.num_levels() {
            assert!(mu_gap(&idpair, k).unwrap() < 1e-12);
        }
    }

    #[test]
    fn mu_gap_rotation_matches_svd_oracle() {
        // Single-level complexes: true is ℝ², approx is ℝ¹, and i_hπ_h
        // rotates/shrinks the harmonic line by a known angle.
        let theta = 0.4f64;
        let truth = ComplexRep::single_level(DMatrix::identity(2, 2));
        let approx = ComplexRep::single_level(DMatrix::identity(1, 1));
        let injection = vec![DMatrix::from_row_slice(2, 1, &[theta.cos(), theta.sin()])];
        let projection = vec![DMatrix::from_row_slice(1, 2, &[theta.cos(), theta.sin()])];
        let pair = CrimePair::new(truth, approx, injection, projection).unwrap();
        // i_hπ_h is the orthogonal projector onto the line at angle θ; on the
        // 2-dimensional harmonic space, sup ‖(I - P)q‖ over unit q is 1.
        // Dense SVD oracle:
        let ipi = &pair.injection[0] * &pair.projection[0];
        let oracle = linalg::spectral_norm(&(DMatrix::identity(2, 2) - ipi));
        let mu = mu_gap(&pair, 0).unwrap();
        assert_relative_eq!(mu, oracle, epsilon = 1e-12);
    }

    #[test]
    fn crime_report_crime_free_case() {
        let pair = random_pair(&mut seeded_rng(23), 0.0);
        let k = 1;
        let mut rng = seeded_rng(24);
        let f = DVector::from_fn(pair.true_complex.dim(k), |_, _| rng.random_range(-1.0..1.0));
        let report = crime_report(&pair, k, &f, None).unwrap();
        assert_eq!(report.data_error, 0.0);
        assert!(report.geometry_error < 1e-12 * (1.0 + f.amax()));
        assert_eq!(report.intermediate, 0.0);
    }

    #[test]
    fn crime_report_data_perturbation() {
        let pair = random_pair(&mut seeded_rng(25), 0.0);
        let k = 1;
        let mut rng = seeded_rng(26);
        let f = DVector::from_fn(pair.true_complex.dim(k), |_, _| rng.random_range(-1.0..1.0));
        let istar = adjoint_injection(&pair, k, &f).unwrap();
        let mut dir = DVector::zeros(istar.len());
        dir[0] = 1.0;
        let mut lhs = Vec::new();
        let mut eps_list = Vec::new();
        for &eps in &[1e-1, 1e-2, 1e-3, 1e-4] {
            let f_h = &istar + &dir * eps;
            let report = crime_report(&pair, k, &f, Some(&f_h)).unwrap();
            let g_h_norm = linalg::norm_in(pair.approx_complex.gram(k), &dir);
            assert_relative_eq!(report.data_error, eps * g_h_norm, epsilon = 1e-10);
            lhs.push(report.intermediate);
            eps_list.push(eps);
        }
        let slope = linalg::loglog_slope(&eps_list, &lhs).unwrap();
        assert!(slope >= 0.9, "intermediate difference slope {slope}");
    }

    #[test]
    fn crime_report_scaled_isometry_sweep() {
        // i_h scaled to (1+ε)·isometry: the geometry error term is exactly
        // |1-(1+ε)²|·‖f‖ and the intermediate difference decays linearly.
        let k = 1;
        let mut lhs = Vec::new();
        let mut eps_list = Vec::new();
        for &eps in &[1e-1, 1e-2, 1e-3] {
            let pair = random_pair(&mut seeded_rng(41), 0.0);
            let c: f64 = 1.0 + eps;
            let scaled = CrimePair::new(
                pair.true_complex.clone(),
                pair.approx_complex.clone(),
                pair.injection.iter().map(|i| i * c).collect(),
                pair.projection.iter().map(|p| p / c).collect(),
            )
            .unwrap();
            let mut rng = seeded_rng(42);
            let f = DVector::from_fn(scaled.true_complex.dim(k), |_, _| rng.random_range(-1.0..1.0));
            let report = crime_report(&scaled, k, &f, None).unwrap();
            let f_norm = linalg::norm_in(scaled.true_complex.gram(k), &f);
            assert_relative_eq!(
                report.geometry_error,
                (1.0 - c * c).abs() * f_norm,
                epsilon = 1e-8 * report.geometry_error
            );
            lhs.push(report.intermediate);
            eps_list.push(eps);
        }
        let slope = linalg::loglog_slope(&eps_list, &lhs).unwrap();
        assert!(slope >= 0.9, "intermediate slope {slope}");
    }

    #[test]
    fn subcomplex_equivalence_oracle() {
        // solve_modified_mixed must match the mixed solve on the image
        // complex assembled independently from a W-orthonormalized basis of
        // i_h V_h.
        let pair = random_pair(&mut seeded_rng(27), 0.25);
        let k = 1;
        let truth = &pair.true_complex;
        let mut rng = seeded_rng(28);
        let f = DVector::from_fn(truth.dim(k), |_, _| rng.random_range(-1.0..1.0));
        let modified = solve_modified_mixed(&pair, k, &f).unwrap();

        // Oracle: orthonormalize the image basis per level (in the true W
        // inner products), assemble the subcomplex in those coordinates and
        // solve there.
        let levels = truth.num_levels();
        let bases: Vec<DMatrix<f64>> = (0..levels)
            .map(|j| linalg::mgs_orthonormalize(&pair.injection[j], truth.gram(j)))
            .collect();
        let grams: Vec<DMatrix<f64>> = (0..levels)
            .map(|j| bases[j].transpose() * truth.gram(j) * &bases[j])
            .collect();
        let diffs: Vec<DMatrix<f64>> = (0..levels - 1)
            .map(|j| {
                // d in the orthonormal coordinates: solve B_{j+1} c = D B_j.
                let rhs = truth.diff(j) * &bases[j];
                let bt_g = bases[j + 1].transpose() * truth.gram(j + 1);
                let gram = &bt_g * &bases[j + 1];
                let mut cols = DMatrix::zeros(bases[j + 1].ncols(), bases[j].ncols());
                for c in 0..rhs.ncols() {
                    let coeff = linalg::pinv_solve(&gram, &(&bt_g * rhs.column(c)));
                    cols.set_column(c, &coeff);
                }
                cols
            })
            .collect();
        let sub = ComplexRep::new(grams, diffs).unwrap();
        // Data: W-orthogonal projection of f onto the subspace, in basis coords.
        let bt_g = bases[k].transpose() * truth.gram(k);
        let f_sub = linalg::pinv_solve(&(&bt_g * &bases[k]), &(&bt_g * &f));
        let oracle = solve_mixed_hodge(&sub, k, &f_sub).unwrap();

        // Compare in the true space.
        let u_modified = &pair.injection[k] * &modified.u;
        let u_oracle = &bases[k] * &oracle.u;
        assert!((u_modified - u_oracle).amax() < 1e-9);
        let s_modified = &pair.injection[k - 1] * &modified.sigma;
        let s_oracle = &bases[k - 1] * &oracle.sigma;
        assert!((s_modified - s_oracle).amax() < 1e-9);
        let p_modified = &pair.injection[k] * modified.p_full();
        let p_oracle = &bases[k] * oracle.p_full();
        assert!((p_modified - p_oracle).amax() < 1e-9);
    }

    #[test]
    fn projection_data_isometric_case() {
        let pair = random_pair(&mut seeded_rng(29), 0.0);
        let k = 1;
        // Π = i* for an isometric embedding: lhs must vanish.
        let g = pair.true_complex.gram(k);
        let g_h = pair.approx_complex.gram(k);
        let gi = g * &pair.injection[k];
        let istar = linalg::solve_matrix(g_h, &gi.transpose()).unwrap();
        let mut rng = seeded_rng(30);
        let f = DVector::from_fn(pair.true_complex.dim(k), |_, _| rng.random_range(-1.0..1.0));
        let check = projection_data(&pair, k, &istar, &f).unwrap();
        assert!(check.lhs < 1e-10);
        assert!(!check.violated);
        // f in the range of i_h: the infimum term vanishes.
        let v = DVector::from_fn(pair.approx_complex.dim(k), |_, _| rng.random_range(-1.0..1.0));
        let f_range = &pair.injection[k] * &v;
        let check = projection_data(&pair, k, &istar, &f_range).unwrap();
        assert!(check.best_approx_term < 1e-9);
        assert!(!check.violated);
    }

    #[test]
    fn projection_data_randomized_audit() {
        let mut rng = seeded_rng(31);
        for trial in 0..30 {
            let pair = random_pair(&mut rng, 0.2);
            let k = 1;
            let n = pair.true_complex.dim(k);
            let n_h = pair.approx_complex.dim(k);
            // Random left inverse around the modified adjoint Ĝ⁻¹IᵀG.
            let pinv = linalg::solve_matrix(
                &pair.modified_gram(k),
                &(pair.injection[k].transpose() * pair.true_complex.gram(k)),
            )
            .unwrap();
            let r = DMatrix::from_fn(n_h, n, |_, _| rng.random_range(-0.5..0.5));
            let residual_proj = DMatrix::identity(n, n) - &pair.injection[k] * &pinv;
            let pi = &pinv + r * residual_proj;
            let f = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let check = projection_data(&pair, k, &pi, &f).unwrap();
            assert!(!check.violated, "trial {trial}: projection bound violated");
        }
    }

    #[test]
    fn discrete_poincare_examples() {
        // Unitary injection: bound = c_P (morphism norms can still exceed 1
        // in the V-norm, so just check satisfaction and closeness).
        let pair = random_pair(&mut seeded_rng(32), 0.0);
        let check = discrete_poincare_check(&pair, 0).unwrap();
        if !check.trivial {
            assert!(!check.violated);
        }
        // Scaled injections inflate the bound but keep it valid.
        for &c in &[0.5, 0.9, 1.1, 2.0] {
            let scaled = CrimePair::new(
                pair.true_complex.clone(),
                pair.approx_complex.clone(),
                pair.injection.iter().map(|i| i * c).collect(),
                pair.projection.iter().map(|p| p / c).collect(),
            )
            .unwrap();
            let check = discrete_poincare_check(&scaled, 0).unwrap();
            assert!(!check.violated, "scale {c}");
        }
    }

    #[test]
    fn discrete_poincare_randomized_audit() {
        let mut rng = seeded_rng(33);
        let mut nontrivial = 0;
        for _ in 0..50 {
            let pair = random_pair(&mut rng, 0.3);
            for k in 0..pair.true_complex.num_levels() - 1 {
                let check = discrete_poincare_check(&pair, k).unwrap();
                if !check.trivial {
                    nontrivial += 1;
                    assert!(
                        !check.violated,
                        "measured {} > bound {}",
                        check.measured, check.bound
                    );
                }
            }
        }
        assert!(nontrivial > 20);
    }

    #[test]
    fn cohomology_check_crime_free() {
        let rep = random_complex(&mut seeded_rng(34));
        let pair = CrimePair::crime_free(&rep);
        for verdict in cohomology_isomorphism_check(&pair).unwrap() {
            assert!(verdict.gap < 1e-12);
            assert!(verdict.hypothesis_holds);
            assert!(verdict.bijective);
            assert!(!verdict.violated);
        }
    }

    #[test]
    fn cohomology_check_adversarial_annihilation() {
        // i_hπ_h kills the harmonic direction (0, 1)ᵀ (up to the slant c):
        // hypothesis fails, so the failed bijection is not a violation.
        let truth = ComplexRep::single_level(DMatrix::identity(2, 2));
        let approx = ComplexRep::single_level(DMatrix::identity(1, 1));
        let c = 0.8;
        let injection = vec![DMatrix::from_row_slice(2, 1, &[1.0, 0.0])];
        let projection = vec![DMatrix::from_row_slice(1, 2, &[1.0, c])];
        let pair = CrimePair::new(truth, approx, injection, projection).unwrap();
        let verdicts = cohomology_isomorphism_check(&pair).unwrap();
        assert_eq!(verdicts.len(), 1);
        assert!(!verdicts[0].hypothesis_holds);
        assert!(!verdicts[0].bijective);
        assert!(!verdicts[0].violated);
    }

    #[test]
    fn cohomology_randomized_audit() {
        let mut rng = seeded_rng(35);
        for _ in 0..30 {
            let pair = random_pair(&mut rng, 0.2);
            for verdict in cohomology_isomorphism_check(&pair).unwrap() {
                assert!(!verdict.violated, "level {}", verdict.level);
            }
        }
    }

    #[test]
    fn boundaries_pull_back_exactly() {
        // B_h^k = i_h⁻¹ B^k via rank arguments.
        let pair = random_pair(&mut seeded_rng(36), 0.3);
        let k = 1;
        let truth = &pair.true_complex;
        let b_true = linalg::range_basis(&truth.diff_into(k));
        let b_h = linalg::range_basis(&pair.approx_complex.diff_into(k));
        // i_h B_h ⊆ B.
        let image = &pair.injection[k] * &b_h;
        let mut stacked = DMatrix::zeros(truth.dim(k), b_true.ncols() + image.ncols());
        stacked.view_mut((0, 0), (truth.dim(k), b_true.ncols())).copy_from(&b_true);
        stacked
            .view_mut((0, b_true.ncols()), (truth.dim(k), image.ncols()))
            .copy_from(&image);
        assert_eq!(linalg::rank(&stacked), b_true.ncols());
        // Conversely: v_h with i_h v_h ∈ B satisfies v_h ∈ B_h. The set of
        // such v_h is the preimage; check rank of its basis against B_h.
        let perp = DMatrix::identity(truth.dim(k), truth.dim(k))
            - &b_true * b_true.transpose();
        let constraint = perp * &pair.injection[k];
        let preimage = linalg::nullspace(&constraint);
        let mut stacked = DMatrix::zeros(pair.approx_complex.dim(k), b_h.ncols() + preimage.ncols());
        stacked.view_mut((0, 0), (stacked.nrows(), b_h.ncols())).copy_from(&b_h);
        stacked
            .view_mut((0, b_h.ncols()), (stacked.nrows(), preimage.ncols()))
            .copy_from(&preimage);
        assert_eq!(linalg::rank(&stacked), b_h.ncols());
    }

    #[test]
    fn eigen_report_crime_free_exact_match() {
        let pair = random_pair(&mut seeded_rng(37), 0.0);
        let k = 1;
        let report = eigen_convergence_report(&pair, k, 3, 99).unwrap();
        for (_, lh, lm) in &report.triples {
            assert_eq!(lh, lm);
        }
        assert!(report.solution_operator_gap < 1e-12);
    }

    #[test]
    fn eigen_report_scaled_injection_linear_gap() {
        let mut devs = Vec::new();
        let mut gaps = Vec::new();
        for &eps in &[1e-1, 1e-2, 1e-3] {
            let pair = random_pair(&mut seeded_rng(38), 0.0);
            let c = 1.0 + eps;
            let scaled = CrimePair::new(
                pair.true_complex.clone(),
                pair.approx_complex.clone(),
                pair.injection.iter().map(|i| i * c).collect(),
                pair.projection.iter().map(|p| p / c).collect(),
            )
            .unwrap();
            let k = 1;
            let report = eigen_convergence_report(&scaled, k, 2, 7).unwrap();
            for (_, lh, lm) in &report.triples {
                // Global scaling: λ' = c² λ_h exactly.
                assert_relative_eq!(*lm, c * c * lh, epsilon = 1e-8 * lh);
            }
            devs.push(report.jacobian_deviation);
            gaps.push(report.solution_operator_gap);
        }
        let slope = linalg::loglog_slope(&devs, &gaps).unwrap();
        assert!(slope >= 0.9, "operator gap slope {slope}");
    }

    #[test]
    fn crime_report_serializes_with_fixed_field_names() {
        let pair = random_pair(&mut seeded_rng(39), 0.1);
        let k = 1;
        let mut rng = seeded_rng(40);
        let f = DVector::from_fn(pair.true_complex.dim(k), |_, _| rng.random_range(-1.0..1.0));
        let report = crime_report(&pair, k, &f, None).unwrap();
        let json: serde_json::Value = serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
        for field in ["lhs", "best_approx", "data_error", "geometry_error", "mu", "ratio"] {
            assert!(json.get(field).is_some(), "missing field {field}");
        }
    }
}
