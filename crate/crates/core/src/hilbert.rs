//! Finite-dimensional Hilbert cochain complexes.
//!
//! A complex is a sequence of levels `k = 0..m`, each carrying a symmetric
//! positive-definite Gram matrix `G_k` (the W-inner product) and a
//! differential matrix `D_k : level k → level k+1` with `D_{k+1} D_k = 0`.
//! The graph (V-) inner product `⟨u,v⟩ + ⟨du,dv⟩` is derived on demand.
//! Everything here is dense; the sparse mirrors for large assembled
//! complexes live in [`crate::sparse`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::{Error, Result};

/// Tolerance for Gram symmetry and the cochain identity `D∘D = 0`.
pub const COMPLEX_TOL: f64 = 1e-12;

/// One level of a complex: Gram matrix plus the differential to the next
/// level (empty `0 × n` at the top).
#[derive(Clone, Debug)]
pub struct Level {
    pub gram: DMatrix<f64>,
    pub diff: DMatrix<f64>,
}

/// A finite-dimensional Hilbert cochain complex.
#[derive(Clone, Debug)]
pub struct ComplexRep {
    levels: Vec<Level>,
}

/// Per-level diagnostics produced by [`ComplexRep::validate`].
#[derive(Clone, Debug)]
pub struct LevelDiagnostics {
    pub dim: usize,
    pub gram_asymmetry: f64,
    pub gram_min_eig: f64,
    /// Relative norm of `D_{k+1} D_k` (0 at the top level).
    pub cochain_defect: f64,
}

/// Result of [`ComplexRep::validate`].
#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub levels: Vec<LevelDiagnostics>,
    pub valid: bool,
}

impl ComplexRep {
    /// Build a complex from per-level Grams and the differentials between
    /// them (`diffs.len() == grams.len() - 1`; `diffs[k]` maps level `k` to
    /// level `k+1`). Dimensions are checked, the complex axioms are not;
    /// see [`ComplexRep::validate`].
    pub fn new(grams: Vec<DMatrix<f64>>, diffs: Vec<DMatrix<f64>>) -> Result<Self> {
        if grams.is_empty() {
            return Err(Error::InvalidComplex("complex needs at least one level".into()));
        }
        if diffs.len() + 1 != grams.len() {
            return Err(Error::InvalidComplex(format!(
                "expected {} differentials for {} levels, got {}",
                grams.len() - 1,
                grams.len(),
                diffs.len()
            )));
        }
        let mut levels = Vec::with_capacity(grams.len());
        let dims: Vec<usize> = grams.iter().map(|g| g.nrows()).collect();
        for (k, g) in grams.iter().enumerate() {
            if g.nrows() != g.ncols() {
                return Err(Error::InvalidComplex(format!("Gram at level {k} not square")));
            }
            let diff = if k + 1 < grams.len() {
                let d = &diffs[k];
                if d.ncols() != dims[k] || d.nrows() != dims[k + 1] {
                    return Err(Error::InvalidComplex(format!(
                        "differential {k} has shape {}×{}, expected {}×{}",
                        d.nrows(),
                        d.ncols(),
                        dims[k + 1],
                        dims[k]
                    )));
                }
                d.clone()
            } else {
                DMatrix::zeros(0, dims[k])
            };
            levels.push(Level { gram: g.clone(), diff });
        }
        let _ = grams;
        Ok(Self { levels })
    }

    /// Single-level complex (no differentials).
    pub fn single_level(gram: DMatrix<f64>) -> Self {
        let n = gram.nrows();
        Self {
            levels: vec![Level { gram, diff: DMatrix::zeros(0, n) }],
        }
    }

    /// Number of levels `m + 1`.
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Index of the top level `m`.
    pub fn top_level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn dim(&self, k: usize) -> usize {
        self.levels[k].gram.nrows()
    }

    pub fn total_dim(&self) -> usize {
        self.levels.iter().map(|l| l.gram.nrows()).sum()
    }

    pub fn gram(&self, k: usize) -> &DMatrix<f64> {
        &self.levels[k].gram
    }

    /// Differential `D_k : level k → level k+1` (`0 × n_m` at the top).
    pub fn diff(&self, k: usize) -> &DMatrix<f64> {
        &self.levels[k].diff
    }

    /// Differential into level `k`, i.e. `D_{k-1}` (`n_0 × 0` for `k = 0`).
    pub fn diff_into(&self, k: usize) -> DMatrix<f64> {
        if k == 0 {
            DMatrix::zeros(self.dim(0), 0)
        } else {
            self.levels[k - 1].diff.clone()
        }
    }

    fn check_level(&self, k: usize) -> Result<()> {
        if k >= self.levels.len() {
            return Err(Error::LevelOutOfRange { level: k, levels: self.levels.len() });
        }
        Ok(())
    }

    /// Graph Gram `G_k + D_kᵀ G_{k+1} D_k` housing the V-inner product.
    pub fn graph_gram(&self, k: usize) -> DMatrix<f64> {
        let g = &self.levels[k].gram;
        if k + 1 < self.levels.len() {
            let d = &self.levels[k].diff;
            g + d.transpose() * &self.levels[k + 1].gram * d
        } else {
            g.clone()
        }
    }

    /// Stiffness-like form `D_kᵀ G_{k+1} D_k` (zero at the top level).
    pub fn curl_gram(&self, k: usize) -> DMatrix<f64> {
        let n = self.dim(k);
        if k + 1 < self.levels.len() {
            let d = &self.levels[k].diff;
            d.transpose() * &self.levels[k + 1].gram * d
        } else {
            DMatrix::zeros(n, n)
        }
    }

    /// W-norm of a level-`k` vector.
    pub fn w_norm(&self, k: usize, v: &DVector<f64>) -> f64 {
        linalg::norm_in(&self.levels[k].gram, v)
    }

    /// V-norm (graph norm) of a level-`k` vector.
    pub fn v_norm(&self, k: usize, v: &DVector<f64>) -> f64 {
        let w = self.w_norm(k, v);
        if k + 1 < self.levels.len() {
            let dv = &self.levels[k].diff * v;
            (w * w + self.w_norm(k + 1, &dv).powi(2)).sqrt()
        } else {
            w
        }
    }

    /// Check both complex axioms and report per-level diagnostics.
    pub fn validate(&self) -> ValidationReport {
        let mut out = Vec::with_capacity(self.levels.len());
        let mut valid = true;
        for k in 0..self.levels.len() {
            let g = &self.levels[k].gram;
            let gram_asymmetry = linalg::asymmetry(g);
            let gram_min_eig = linalg::min_eig_sym(g);
            let cochain_defect = if k + 1 < self.levels.len() {
                let prod = &self.levels[k + 1].diff * &self.levels[k].diff;
                let scale = linalg::spectral_norm(&self.levels[k + 1].diff)
                    * linalg::spectral_norm(&self.levels[k].diff);
                if scale > 0.0 {
                    linalg::spectral_norm(&prod) / scale
                } else {
                    linalg::spectral_norm(&prod)
                }
            } else {
                0.0
            };
            if gram_asymmetry > COMPLEX_TOL
                || gram_min_eig <= 0.0
                || cochain_defect > COMPLEX_TOL
            {
                valid = false;
            }
            out.push(LevelDiagnostics {
                dim: g.nrows(),
                gram_asymmetry,
                gram_min_eig,
                cochain_defect,
            });
        }
        ValidationReport { levels: out, valid }
    }

    pub fn is_valid(&self) -> bool {
        self.validate().valid
    }

    fn require_valid(&self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidComplex(
                "complex fails validation; see ComplexRep::validate".into(),
            ))
        }
    }

    /// Direct sum of two complexes with the same number of levels.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.num_levels() != other.num_levels() {
            return Err(Error::InvalidComplex("direct sum needs equal level counts".into()));
        }
        let mut grams = Vec::new();
        let mut diffs = Vec::new();
        for k in 0..self.num_levels() {
            let (a, b) = (self.gram(k), other.gram(k));
            let mut g = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
            g.view_mut((0, 0), a.shape()).copy_from(a);
            g.view_mut(a.shape(), b.shape()).copy_from(b);
            grams.push(g);
            if k + 1 < self.num_levels() {
                let (da, db) = (self.diff(k), other.diff(k));
                let mut d = DMatrix::zeros(da.nrows() + db.nrows(), da.ncols() + db.ncols());
                d.view_mut((0, 0), da.shape()).copy_from(da);
                d.view_mut(da.shape(), db.shape()).copy_from(db);
                diffs.push(d);
            }
        }
        Self::new(grams, diffs)
    }
}

// ---------------------------------------------------------------------------
// JSON serialization: { "levels": [ { "dim", "gram", "diff"? } ] }
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct LevelJson {
    dim: usize,
    /// Row-major entries of the Gram matrix.
    gram: Vec<f64>,
    /// Row-major entries of the differential into the next level; absent at
    /// the top level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    diff: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ComplexJson {
    levels: Vec<LevelJson>,
}

impl ComplexRep {
    pub fn to_json(&self) -> String {
        let levels = (0..self.num_levels())
            .map(|k| {
                let g = self.gram(k);
                let gram: Vec<f64> = (0..g.nrows())
                    .flat_map(|i| (0..g.ncols()).map(move |j| (i, j)))
                    .map(|(i, j)| g[(i, j)])
                    .collect();
                let diff = if k + 1 < self.num_levels() {
                    let d = self.diff(k);
                    Some(
                        (0..d.nrows())
                            .flat_map(|i| (0..d.ncols()).map(move |j| (i, j)))
                            .map(|(i, j)| d[(i, j)])
                            .collect(),
                    )
                } else {
                    None
                };
                LevelJson { dim: self.dim(k), gram, diff }
            })
            .collect();
        serde_json::to_string_pretty(&ComplexJson { levels }).expect("serialize complex")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let parsed: ComplexJson =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if parsed.levels.is_empty() {
            return Err(Error::Parse("complex with no levels".into()));
        }
        let dims: Vec<usize> = parsed.levels.iter().map(|l| l.dim).collect();
        let mut grams = Vec::new();
        let mut diffs = Vec::new();
        for (k, lvl) in parsed.levels.iter().enumerate() {
            let n = lvl.dim;
            if lvl.gram.len() != n * n {
                return Err(Error::Parse(format!("level {k}: gram has {} entries, expected {}", lvl.gram.len(), n * n)));
            }
            grams.push(DMatrix::from_row_slice(n, n, &lvl.gram));
            match (&lvl.diff, k + 1 < parsed.levels.len()) {
                (Some(d), true) => {
                    let rows = dims[k + 1];
                    if d.len() != rows * n {
                        return Err(Error::Parse(format!(
                            "level {k}: diff has {} entries, expected {}",
                            d.len(),
                            rows * n
                        )));
                    }
                    diffs.push(DMatrix::from_row_slice(rows, n, d));
                }
                (None, true) => {
                    return Err(Error::Parse(format!("level {k}: missing differential")));
                }
                (Some(_), false) => {
                    return Err(Error::Parse("top level must not carry a differential".into()));
                }
                (None, false) => {}
            }
        }
        Self::new(grams, diffs)
    }
}

// ---------------------------------------------------------------------------
// Hodge theory
// ---------------------------------------------------------------------------

/// Components of the strong Hodge decomposition of a level-`k` vector.
#[derive(Clone, Debug)]
pub struct HodgeSplit {
    pub boundary: DVector<f64>,
    pub harmonic: DVector<f64>,
    pub coexact: DVector<f64>,
}

/// Adjoint differential `d*_k = G_{k-1}⁻¹ D_{k-1}ᵀ G_k` mapping level `k`
/// down to level `k-1`. Requires `1 ≤ k ≤ m`.
pub fn adjoint_differential(rep: &ComplexRep, k: usize) -> Result<DMatrix<f64>> {
    rep.check_level(k)?;
    if k == 0 {
        return Err(Error::LevelOutOfRange { level: 0, levels: rep.num_levels() });
    }
    rep.require_valid()?;
    if rep.dim(k - 1) == 0 || rep.dim(k) == 0 {
        return Ok(DMatrix::zeros(rep.dim(k - 1), rep.dim(k)));
    }
    let d = rep.diff(k - 1);
    let rhs = d.transpose() * rep.gram(k);
    let chol = rep
        .gram(k - 1)
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("Gram not SPD in adjoint_differential".into()))?;
    Ok(chol.solve(&rhs))
}

/// G-orthonormal basis of the harmonic space `H^k = Z^k ∩ B^{k⊥}`,
/// returned as matrix columns (possibly zero columns).
pub fn harmonic_basis(rep: &ComplexRep, k: usize) -> Result<DMatrix<f64>> {
    rep.check_level(k)?;
    rep.require_valid()?;
    // Cocycles first, then intersect with the orthogonal complement of the
    // coboundaries: q = Z c with D_{k-1}ᵀ G_k Z c = 0.
    let cocycles = linalg::nullspace(rep.diff(k));
    if cocycles.ncols() == 0 {
        return Ok(DMatrix::zeros(rep.dim(k), 0));
    }
    let d_in = rep.diff_into(k);
    let constraint = d_in.transpose() * rep.gram(k) * &cocycles;
    let inner = linalg::nullspace(&constraint);
    let basis = &cocycles * inner;
    Ok(linalg::mgs_orthonormalize(&basis, rep.gram(k)))
}

/// Strong Hodge decomposition of `w` at level `k`.
pub fn hodge_decompose(rep: &ComplexRep, k: usize, w: &DVector<f64>) -> Result<HodgeSplit> {
    rep.check_level(k)?;
    rep.require_valid()?;
    if w.len() != rep.dim(k) {
        return Err(Error::DimensionMismatch {
            expected: rep.dim(k),
            got: w.len(),
            context: "hodge_decompose input",
        });
    }
    let d_in = rep.diff_into(k);
    let boundary = if d_in.ncols() == 0 {
        DVector::zeros(rep.dim(k))
    } else {
        // G-orthogonal projection onto range(D_{k-1}).
        let g = rep.gram(k);
        let dtg = d_in.transpose() * g;
        let coeff = linalg::pinv_solve(&(&dtg * &d_in), &(&dtg * w));
        &d_in * coeff
    };
    let q = harmonic_basis(rep, k)?;
    let harmonic = if q.ncols() == 0 {
        DVector::zeros(rep.dim(k))
    } else {
        &q * (q.transpose() * rep.gram(k) * w)
    };
    let coexact = w - &boundary - &harmonic;
    Ok(HodgeSplit { boundary, harmonic, coexact })
}

/// Harmonic dimensions (Betti numbers) for all levels.
pub fn betti_numbers(rep: &ComplexRep) -> Result<Vec<usize>> {
    (0..rep.num_levels())
        .map(|k| harmonic_basis(rep, k).map(|b| b.ncols()))
        .collect()
}

/// Output of [`poincare_constant`].
#[derive(Clone, Debug)]
pub struct PoincareResult {
    /// Smallest `c_P` with `‖v‖_V ≤ c_P ‖D_k v‖` on `Z^{k⊥}`; 0 when the
    /// complement is trivial.
    pub constant: f64,
    /// A vector attaining the constant (`None` in the trivial case).
    pub achiever: Option<DVector<f64>>,
    /// True when `Z^{k⊥} = {0}` and the inequality is vacuous.
    pub trivial: bool,
}

/// Abstract Poincaré constant at level `k`: the largest ratio
/// `‖v‖_V / ‖D_k v‖` over the G-orthogonal complement of the cocycles.
pub fn poincare_constant(rep: &ComplexRep, k: usize) -> Result<PoincareResult> {
    rep.check_level(k)?;
    rep.require_valid()?;
    let z = linalg::nullspace(rep.diff(k));
    // Z^{k⊥} = { v : zᵀ G v = 0 for all cocycles z }.
    let complement = linalg::nullspace(&(z.transpose() * rep.gram(k)));
    if complement.ncols() == 0 {
        return Ok(PoincareResult { constant: 0.0, achiever: None, trivial: true });
    }
    let graph = rep.graph_gram(k);
    let stiff = rep.curl_gram(k);
    let a = complement.transpose() * &graph * &complement;
    let b = complement.transpose() * &stiff * &complement;
    let (vals, vecs) = linalg::gen_sym_eig(&a, &b)?;
    let idx = vals.len() - 1;
    let achiever = &complement * vecs.column(idx);
    Ok(PoincareResult {
        constant: vals[idx].max(0.0).sqrt(),
        achiever: Some(achiever),
        trivial: false,
    })
}

/// Solution of the mixed Hodge-Laplace problem at level `k`.
#[derive(Clone, Debug)]
pub struct MixedSolution {
    /// Level-(k-1) component (empty for `k = 0`).
    pub sigma: DVector<f64>,
    /// Level-k component, G-orthogonal to the harmonic space.
    pub u: DVector<f64>,
    /// Coordinates of the harmonic part in the basis `harmonic`.
    pub p_coords: DVector<f64>,
    /// The G-orthonormal harmonic basis the coordinates refer to.
    pub harmonic: DMatrix<f64>,
    /// Max relative residual of the three variational equations.
    pub residual: f64,
}

impl MixedSolution {
    /// The harmonic component as a full level-k vector.
    pub fn p_full(&self) -> DVector<f64> {
        if self.harmonic.ncols() == 0 {
            DVector::zeros(self.harmonic.nrows())
        } else {
            &self.harmonic * &self.p_coords
        }
    }
}

/// Assembled mixed system: block matrix over (σ, u, p) and right-hand side.
fn mixed_system(
    rep: &ComplexRep,
    k: usize,
    f: &DVector<f64>,
    harmonic: &DMatrix<f64>,
) -> (DMatrix<f64>, DVector<f64>) {
    let n_sigma = if k == 0 { 0 } else { rep.dim(k - 1) };
    let n_u = rep.dim(k);
    let n_p = harmonic.ncols();
    let n = n_sigma + n_u + n_p;
    let g_k = rep.gram(k);
    let d_in = rep.diff_into(k);
    let stiff = rep.curl_gram(k);

    let mut a = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    if n_sigma > 0 {
        let g_sigma = rep.gram(k - 1);
        // First equation, negated for symmetry: -G σ + Dᵀ G_k u = 0.
        a.view_mut((0, 0), (n_sigma, n_sigma)).copy_from(&(-g_sigma));
        let cross = d_in.transpose() * g_k;
        a.view_mut((0, n_sigma), (n_sigma, n_u)).copy_from(&cross);
        a.view_mut((n_sigma, 0), (n_u, n_sigma)).copy_from(&cross.transpose());
    }
    a.view_mut((n_sigma, n_sigma), (n_u, n_u)).copy_from(&stiff);
    if n_p > 0 {
        let gh = g_k * harmonic;
        a.view_mut((n_sigma, n_sigma + n_u), (n_u, n_p)).copy_from(&gh);
        a.view_mut((n_sigma + n_u, n_sigma), (n_p, n_u)).copy_from(&gh.transpose());
    }
    b.rows_mut(n_sigma, n_u).copy_from(&(g_k * f));
    (a, b)
}

fn block_residual(a: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>, blocks: &[usize]) -> f64 {
    let r = a * x - b;
    let scale = a.norm() * x.norm() + b.norm() + f64::MIN_POSITIVE;
    let mut worst = 0.0f64;
    let mut offset = 0;
    for &len in blocks {
        if len > 0 {
            worst = worst.max(r.rows(offset, len).norm() / scale);
        }
        offset += len;
    }
    worst
}

/// Solve the mixed variational problem: find (σ, u, p) with
/// `⟨σ,τ⟩ = ⟨u,dτ⟩`, `⟨dσ,v⟩ + ⟨du,dv⟩ + ⟨p,v⟩ = ⟨f,v⟩`, `u ⊥ H^k`.
pub fn solve_mixed_hodge(rep: &ComplexRep, k: usize, f: &DVector<f64>) -> Result<MixedSolution> {
    rep.check_level(k)?;
    rep.require_valid()?;
    if f.len() != rep.dim(k) {
        return Err(Error::DimensionMismatch {
            expected: rep.dim(k),
            got: f.len(),
            context: "solve_mixed_hodge data",
        });
    }
    let harmonic = harmonic_basis(rep, k)?;
    let (a, b) = mixed_system(rep, k, f, &harmonic);
    let x = linalg::solve(&a, &b)
        .map_err(|_| Error::SingularSystem("mixed Hodge system singular".into()))?;
    let n_sigma = if k == 0 { 0 } else { rep.dim(k - 1) };
    let n_u = rep.dim(k);
    let residual = block_residual(&a, &x, &b, &[n_sigma, n_u, harmonic.ncols()]);
    Ok(MixedSolution {
        sigma: x.rows(0, n_sigma).into(),
        u: x.rows(n_sigma, n_u).into(),
        p_coords: x.rows(n_sigma + n_u, harmonic.ncols()).into(),
        harmonic,
        residual,
    })
}

/// Inf-sup constant of the mixed bilinear form, i.e. the smallest singular
/// value of the form matrix weighted by the product norm `V × V × W`.
pub fn infsup_lower_bound(rep: &ComplexRep, k: usize) -> Result<f64> {
    rep.check_level(k)?;
    rep.require_valid()?;
    let harmonic = harmonic_basis(rep, k)?;
    let n_sigma = if k == 0 { 0 } else { rep.dim(k - 1) };
    let n_u = rep.dim(k);
    let n_p = harmonic.ncols();
    let n = n_sigma + n_u + n_p;
    if n == 0 {
        return Ok(0.0);
    }
    let g_k = rep.gram(k);
    let d_in = rep.diff_into(k);
    let stiff = rep.curl_gram(k);

    // Bilinear form B(σ,u,p; τ,v,q) row-tested by (τ, v, q).
    let mut form = DMatrix::zeros(n, n);
    if n_sigma > 0 {
        form.view_mut((0, 0), (n_sigma, n_sigma)).copy_from(rep.gram(k - 1));
        let cross = d_in.transpose() * g_k;
        form.view_mut((0, n_sigma), (n_sigma, n_u)).copy_from(&(-&cross));
        form.view_mut((n_sigma, 0), (n_u, n_sigma)).copy_from(&cross.transpose());
    }
    form.view_mut((n_sigma, n_sigma), (n_u, n_u)).copy_from(&stiff);
    if n_p > 0 {
        let gh = g_k * &harmonic;
        form.view_mut((n_sigma, n_sigma + n_u), (n_u, n_p)).copy_from(&gh);
        form.view_mut((n_sigma + n_u, n_sigma), (n_p, n_u)).copy_from(&(-gh.transpose()));
    }

    // Product-norm Gram: blockdiag(V-gram at k-1, V-gram at k, identity on
    // harmonic coordinates).
    let mut norm = DMatrix::zeros(n, n);
    if n_sigma > 0 {
        norm.view_mut((0, 0), (n_sigma, n_sigma)).copy_from(&rep.graph_gram(k - 1));
    }
    norm.view_mut((n_sigma, n_sigma), (n_u, n_u)).copy_from(&rep.graph_gram(k));
    for j in 0..n_p {
        norm[(n_sigma + n_u + j, n_sigma + n_u + j)] = 1.0;
    }

    let l = norm
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("product norm not SPD".into()))?;
    let mut t = form;
    l.l().solve_lower_triangular_mut(&mut t);
    let mut tt = t.transpose();
    l.l().solve_lower_triangular_mut(&mut tt);
    // Smallest singular value via the symmetric eigenproblem of the
    // normal matrix.
    let (vals, _) = linalg::sym_eig(&(tt.transpose() * &tt));
    Ok(vals[0].max(0.0).sqrt())
}

/// Eigenpairs of the mixed Hodge-Laplace eigenvalue problem.
#[derive(Clone, Debug)]
pub struct EigenResult {
    /// Ascending nonzero eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Coefficient pairs (σ_j, u_j); σ_j is empty for `k = 0`.
    pub eigenvectors: Vec<(DVector<f64>, DVector<f64>)>,
    /// Max deviation of `u_jᵀ G_k u_i` from δ_ij.
    pub orthonormality_defect: f64,
}

/// Lowest `nev` nonzero eigenvalues of `⟨dσ,v⟩ + ⟨du,dv⟩ = λ⟨u,v⟩` with
/// `σ = d*u`, together with their eigenvectors.
pub fn solve_hodge_eigen(rep: &ComplexRep, k: usize, nev: usize) -> Result<EigenResult> {
    rep.check_level(k)?;
    rep.require_valid()?;
    let g_k = rep.gram(k);
    let n_u = rep.dim(k);
    let stiff = rep.curl_gram(k);
    let d_in = rep.diff_into(k);
    // Full Hodge-Laplacian form: d*d part plus dd* part via the adjoint.
    let laplace_form = if k > 0 && rep.dim(k - 1) > 0 {
        let gd = g_k * &d_in; // n_u × n_sigma
        let chol = rep
            .gram(k - 1)
            .clone()
            .cholesky()
            .ok_or_else(|| Error::SingularSystem("Gram not SPD".into()))?;
        let solved = chol.solve(&gd.transpose()); // G⁻¹ Dᵀ G_k
        stiff + &gd * solved
    } else {
        stiff
    };
    let (vals, vecs) = linalg::gen_sym_eig(&laplace_form, g_k)?;
    let n_harmonic = harmonic_basis(rep, k)?.ncols();
    let available = n_u - n_harmonic;
    if nev > available {
        return Err(Error::TooManyEigenpairs { requested: nev, available });
    }
    let mut eigenvalues = Vec::with_capacity(nev);
    let mut eigenvectors = Vec::with_capacity(nev);
    let adjoint = if k > 0 { Some(adjoint_differential(rep, k)?) } else { None };
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
            defect = defect.max((ui.dot(&(g_k * uj)) - want).abs());
        }
    }
    Ok(EigenResult { eigenvalues, eigenvectors, orthonormality_defect: defect })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn identity_grams(dims: &[usize]) -> Vec<DMatrix<f64>> {
        dims.iter().map(|&n| DMatrix::identity(n, n)).collect()
    }

    /// Two levels n0 = 1, n1 = 2, identity Grams, D0 = (1, 0)ᵀ.
    fn small_complex() -> ComplexRep {
        ComplexRep::new(
            identity_grams(&[1, 2]),
            vec![DMatrix::from_row_slice(2, 1, &[1.0, 0.0])],
        )
        .unwrap()
    }

    #[test]
    fn validate_identity_single_level() {
        let rep = ComplexRep::single_level(DMatrix::identity(3, 3));
        let report = rep.validate();
        assert!(report.valid);
        assert_eq!(report.levels[0].dim, 3);
        assert_eq!(report.levels[0].cochain_defect, 0.0);
    }

    #[test]
    fn validate_flags_broken_cochain() {
        // D1·D0 = [[1]] ≠ 0.
        let rep = ComplexRep::new(
            identity_grams(&[1, 1, 1]),
            vec![
                DMatrix::from_element(1, 1, 1.0),
                DMatrix::from_element(1, 1, 1.0),
            ],
        )
        .unwrap();
        let report = rep.validate();
        assert!(!report.valid);
        assert_relative_eq!(report.levels[0].cochain_defect, 1.0, epsilon = 1e-14);
        assert!(solve_mixed_hodge(&rep, 0, &DVector::zeros(1)).is_err());
    }

    #[test]
    fn adjoint_is_transpose_for_identity_grams() {
        let rep = ComplexRep::new(
            identity_grams(&[1, 1]),
            vec![DMatrix::from_element(1, 1, 2.0)],
        )
        .unwrap();
        let a = adjoint_differential(&rep, 1).unwrap();
        assert_relative_eq!(a[(0, 0)], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn adjoint_with_weighted_grams() {
        // G0 = [[4]], G1 = [[1]], D0 = [[2]] → d* = G0⁻¹ D0ᵀ G1 = [[1/2]].
        let rep = ComplexRep::new(
            vec![DMatrix::from_element(1, 1, 4.0), DMatrix::identity(1, 1)],
            vec![DMatrix::from_element(1, 1, 2.0)],
        )
        .unwrap();
        let a = adjoint_differential(&rep, 1).unwrap();
        assert_relative_eq!(a[(0, 0)], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn adjoint_defines_the_dual_pairing() {
        let rep = random_complex_3l(7);
        for k in 1..rep.num_levels() {
            let a = adjoint_differential(&rep, k).unwrap();
            let d = rep.diff(k - 1);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(k as u64);
            for _ in 0..20 {
                let x = random_vec(&mut rng, rep.dim(k - 1));
                let y = random_vec(&mut rng, rep.dim(k));
                let lhs = (d * &x).dot(&(rep.gram(k) * &y));
                let rhs = x.dot(&(rep.gram(k - 1) * (&a * &y)));
                assert_relative_eq!(lhs, rhs, epsilon = 1e-10 * (1.0 + lhs.abs()));
            }
        }
    }

    #[test]
    fn adjoint_chain_property() {
        let rep = random_complex_3l(11);
        let a1 = adjoint_differential(&rep, 1).unwrap();
        let a2 = adjoint_differential(&rep, 2).unwrap();
        assert!((a1 * a2).amax() < 1e-10);
    }

    #[test]
    fn harmonic_basis_small_complex() {
        let rep = small_complex();
        let h1 = harmonic_basis(&rep, 1).unwrap();
        assert_eq!(h1.ncols(), 1);
        assert_relative_eq!(h1[(0, 0)].abs(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(h1[(1, 0)].abs(), 1.0, epsilon = 1e-12);
        // No harmonic 0-forms: D0 is injective.
        assert_eq!(harmonic_basis(&rep, 0).unwrap().ncols(), 0);
    }

    #[test]
    fn harmonic_empty_when_cocycles_trivial() {
        // D0 full column rank, level 0 has no incoming differential.
        let rep = ComplexRep::new(
            identity_grams(&[2, 3]),
            vec![DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0])],
        )
        .unwrap();
        assert_eq!(harmonic_basis(&rep, 0).unwrap().ncols(), 0);
    }

    #[test]
    fn betti_of_single_level() {
        let rep = ComplexRep::single_level(DMatrix::identity(5, 5));
        assert_eq!(betti_numbers(&rep).unwrap(), vec![5]);
    }

    #[test]
    fn hodge_decompose_hand_case() {
        let rep = small_complex();
        let w = DVector::from_vec(vec![1.0, 1.0]);
        let split = hodge_decompose(&rep, 1, &w).unwrap();
        assert_relative_eq!(split.boundary[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(split.boundary[1], 0.0, epsilon = 1e-12);
        assert_relative_eq!(split.harmonic[1], 1.0, epsilon = 1e-12);
        assert!(split.coexact.amax() < 1e-12);
    }

    #[test]
    fn hodge_decompose_fixes_harmonic_input() {
        let rep = small_complex();
        let w = DVector::from_vec(vec![0.0, 3.0]);
        let split = hodge_decompose(&rep, 1, &w).unwrap();
        assert!(split.boundary.amax() < 1e-12);
        assert!((split.harmonic.clone() - &w).amax() < 1e-12);
        assert!(split.coexact.amax() < 1e-12);
    }

    fn random_vec(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> DVector<f64> {
        use rand::Rng;
        DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
    }

    use rand::SeedableRng;

    /// Random valid 3-level complex with random SPD Grams and a genuine
    /// cochain differential structure.
    fn random_complex_3l(seed: u64) -> ComplexRep {
        crate::crime::random_complex(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn hodge_partition_on_random_complexes() {
        for seed in 0..5 {
            let rep = random_complex_3l(seed);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(100 + seed);
            for k in 0..rep.num_levels() {
                let w = random_vec(&mut rng, rep.dim(k));
                let split = hodge_decompose(&rep, k, &w).unwrap();
                let sum = &split.boundary + &split.harmonic + &split.coexact;
                assert!((sum - &w).amax() < 1e-10, "partition of identity");
                let g = rep.gram(k);
                let pairs = [
                    (&split.boundary, &split.harmonic),
                    (&split.boundary, &split.coexact),
                    (&split.harmonic, &split.coexact),
                ];
                let scale = rep.w_norm(k, &w).powi(2) + 1e-30;
                for (x, y) in pairs {
                    let ip = x.dot(&(g * y));
                    assert!(ip.abs() / scale < 1e-10, "components G-orthogonal");
                }
            }
        }
    }

    /// Four-level complex from the boundary maps of a full 3-simplex with
    /// random SPD Grams.
    fn simplex3_complex(seed: u64) -> ComplexRep {
        let d0 = DMatrix::from_row_slice(
            6,
            4,
            &[
                -1.0, 1.0, 0.0, 0.0, // (0,1)
                -1.0, 0.0, 1.0, 0.0, // (0,2)
                -1.0, 0.0, 0.0, 1.0, // (0,3)
                0.0, -1.0, 1.0, 0.0, // (1,2)
                0.0, -1.0, 0.0, 1.0, // (1,3)
                0.0, 0.0, -1.0, 1.0, // (2,3)
            ],
        );
        // Triangles (0,1,2), (0,1,3), (0,2,3), (1,2,3): boundary uses the
        // low→high edge orientation, signs (+, +, -) on ((a,b),(b,c),(a,c)).
        let d1 = DMatrix::from_row_slice(
            4,
            6,
            &[
                1.0, -1.0, 0.0, 1.0, 0.0, 0.0, // (0,1,2)
                1.0, 0.0, -1.0, 0.0, 1.0, 0.0, // (0,1,3)
                0.0, 1.0, -1.0, 0.0, 0.0, 1.0, // (0,2,3)
                0.0, 0.0, 0.0, 1.0, -1.0, 1.0, // (1,2,3)
            ],
        );
        // ∂[0,1,2,3] = [1,2,3] - [0,2,3] + [0,1,3] - [0,1,2].
        let d2 = DMatrix::from_row_slice(1, 4, &[-1.0, 1.0, -1.0, 1.0]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let grams = vec![
            crate::crime::random_spd(&mut rng, 4),
            crate::crime::random_spd(&mut rng, 6),
            crate::crime::random_spd(&mut rng, 4),
            crate::crime::random_spd(&mut rng, 1),
        ];
        ComplexRep::new(grams, vec![d0, d1, d2]).unwrap()
    }

    #[test]
    fn four_level_simplex_complex() {
        let rep = simplex3_complex(4);
        let report = rep.validate();
        assert!(report.valid);
        for lvl in &report.levels {
            assert_eq!(lvl.cochain_defect, 0.0, "integer incidence composes to zero");
        }
        // A solid simplex is contractible: Betti numbers (1, 0, 0, 0).
        assert_eq!(betti_numbers(&rep).unwrap(), vec![1, 0, 0, 0]);
        // Hodge partition on random data at every level.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for k in 0..rep.num_levels() {
            let w = random_vec(&mut rng, rep.dim(k));
            let split = hodge_decompose(&rep, k, &w).unwrap();
            let sum = &split.boundary + &split.harmonic + &split.coexact;
            assert!((sum - &w).amax() < 1e-10);
        }
        // Mixed solves and eigenproblems work away from the bottom level.
        for k in 1..=3 {
            let f = random_vec(&mut rng, rep.dim(k));
            let sol = solve_mixed_hodge(&rep, k, &f).unwrap();
            assert!(sol.residual < 1e-9);
            let adj = adjoint_differential(&rep, k).unwrap();
            assert!((adj * &sol.u - &sol.sigma).amax() < 1e-9 * (1.0 + sol.sigma.amax()));
        }
        let eig = solve_hodge_eigen(&rep, 2, 2).unwrap();
        assert!(eig.eigenvalues.iter().all(|&l| l > 0.0));
    }

    #[test]
    fn poincare_hand_values() {
        let rep = ComplexRep::new(
            identity_grams(&[1, 1]),
            vec![DMatrix::from_element(1, 1, 2.0)],
        )
        .unwrap();
        let res = poincare_constant(&rep, 0).unwrap();
        assert!(!res.trivial);
        assert_relative_eq!(res.constant, 5.0f64.sqrt() / 2.0, epsilon = 1e-12);

        let rep = ComplexRep::new(
            identity_grams(&[1, 1]),
            vec![DMatrix::from_element(1, 1, 1.0)],
        )
        .unwrap();
        let res = poincare_constant(&rep, 0).unwrap();
        assert_relative_eq!(res.constant, 2.0f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn poincare_trivial_at_top_level() {
        let rep = small_complex();
        let res = poincare_constant(&rep, 1).unwrap();
        assert!(res.trivial);
        assert_eq!(res.constant, 0.0);
    }

    #[test]
    fn poincare_bound_and_tightness_on_random_complex() {
        let rep = random_complex_3l(3);
        let k = 0;
        let res = poincare_constant(&rep, k).unwrap();
        assert!(!res.trivial);
        let achiever = res.achiever.clone().unwrap();
        let dv = rep.diff(k) * &achiever;
        let ratio = rep.v_norm(k, &achiever) / rep.w_norm(k + 1, &dv);
        assert_relative_eq!(ratio, res.constant, epsilon = 1e-8 * res.constant);

        // No random sample from Z^{k⊥} may exceed the constant.
        let z = linalg::nullspace(rep.diff(k));
        let complement = linalg::nullspace(&(z.transpose() * rep.gram(k)));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for _ in 0..100 {
            let c = random_vec(&mut rng, complement.ncols());
            let v = &complement * c;
            let dv = rep.diff(k) * &v;
            let lhs = rep.v_norm(k, &v);
            let rhs = res.constant * rep.w_norm(k + 1, &dv);
            assert!(lhs <= rhs * (1.0 + 1e-10));
        }
    }

    #[test]
    fn mixed_solve_zero_data() {
        let rep = random_complex_3l(5);
        let sol = solve_mixed_hodge(&rep, 1, &DVector::zeros(rep.dim(1))).unwrap();
        assert!(sol.sigma.amax() < 1e-12);
        assert!(sol.u.amax() < 1e-12);
        assert!(sol.p_coords.amax() < 1e-12);
    }

    #[test]
    fn mixed_solve_harmonic_data() {
        let rep = small_complex();
        let f = DVector::from_vec(vec![0.0, 2.5]); // harmonic at level 1
        let sol = solve_mixed_hodge(&rep, 1, &f).unwrap();
        assert!(sol.sigma.amax() < 1e-12);
        assert!(sol.u.amax() < 1e-12);
        assert!((sol.p_full() - &f).amax() < 1e-12);
    }

    #[test]
    fn mixed_solve_properties_on_random_complex() {
        let rep = random_complex_3l(9);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let k = 1;
        let f = random_vec(&mut rng, rep.dim(k));
        let sol = solve_mixed_hodge(&rep, k, &f).unwrap();
        assert!(sol.residual < 1e-9);
        // σ = d* u.
        let adj = adjoint_differential(&rep, k).unwrap();
        let dstar_u = &adj * &sol.u;
        assert!((dstar_u - &sol.sigma).amax() < 1e-9 * (1.0 + sol.sigma.amax()));
        // u ⊥_G harmonic space.
        let q = harmonic_basis(&rep, k).unwrap();
        if q.ncols() > 0 {
            assert!((q.transpose() * rep.gram(k) * &sol.u).amax() < 1e-9);
        }
        // p reproduces the harmonic component of f.
        let split = hodge_decompose(&rep, k, &f).unwrap();
        assert!((sol.p_full() - split.harmonic).amax() < 1e-9);
    }

    #[test]
    fn infsup_block_diagonal_case_matches_svd_oracle() {
        // Identity Grams, no differentials: at k = 0 the form couples u
        // and the (fully harmonic) p block as [[0, I], [-I, 0]], so γ = 1.
        let rep = ComplexRep::single_level(DMatrix::identity(3, 3));
        let gamma = infsup_lower_bound(&rep, 0).unwrap();
        assert_relative_eq!(gamma, 1.0, epsilon = 1e-12);

        // Dense SVD oracle on a random complex: build the weighted form
        // matrix in the test and take its smallest singular value.
        let rep = random_complex_3l(51);
        let k = 1;
        let gamma = infsup_lower_bound(&rep, k).unwrap();
        let q = harmonic_basis(&rep, k).unwrap();
        let (n_sigma, n_u, n_p) = (rep.dim(k - 1), rep.dim(k), q.ncols());
        let n = n_sigma + n_u + n_p;
        let g_k = rep.gram(k);
        let d_in = rep.diff_into(k);
        let mut form = DMatrix::zeros(n, n);
        form.view_mut((0, 0), (n_sigma, n_sigma)).copy_from(rep.gram(k - 1));
        let cross = d_in.transpose() * g_k;
        form.view_mut((0, n_sigma), (n_sigma, n_u)).copy_from(&(-&cross));
        form.view_mut((n_sigma, 0), (n_u, n_sigma)).copy_from(&cross.transpose());
        form.view_mut((n_sigma, n_sigma), (n_u, n_u)).copy_from(&rep.curl_gram(k));
        if n_p > 0 {
            let gh = g_k * &q;
            form.view_mut((n_sigma, n_sigma + n_u), (n_u, n_p)).copy_from(&gh);
            form.view_mut((n_sigma + n_u, n_sigma), (n_p, n_u)).copy_from(&(-gh.transpose()));
        }
        let mut norm = DMatrix::zeros(n, n);
        norm.view_mut((0, 0), (n_sigma, n_sigma)).copy_from(&rep.graph_gram(k - 1));
        norm.view_mut((n_sigma, n_sigma), (n_u, n_u)).copy_from(&rep.graph_gram(k));
        for j in 0..n_p {
            norm[(n_sigma + n_u + j, n_sigma + n_u + j)] = 1.0;
        }
        // N^{-1/2} via the symmetric eigendecomposition (oracle route).
        let (vals, vecs) = linalg::sym_eig(&norm);
        let inv_sqrt = &vecs
            * DMatrix::from_diagonal(&vals.map(|v| 1.0 / v.sqrt()))
            * vecs.transpose();
        let weighted = &inv_sqrt * &form * &inv_sqrt;
        let oracle = weighted.svd(false, false).singular_values.min();
        assert_relative_eq!(gamma, oracle, epsilon = 1e-9 * (1.0 + oracle));
    }

    #[test]
    fn infsup_scale_invariance_and_stability() {
        let rep = random_complex_3l(13);
        let k = 1;
        let gamma = infsup_lower_bound(&rep, k).unwrap();
        assert!(gamma > 0.0);

        // Scaling all Grams by 4 leaves γ unchanged.
        let grams: Vec<_> = (0..rep.num_levels()).map(|j| rep.gram(j) * 4.0).collect();
        let diffs: Vec<_> = (0..rep.num_levels() - 1).map(|j| rep.diff(j).clone()).collect();
        let scaled = ComplexRep::new(grams, diffs).unwrap();
        let gamma_scaled = infsup_lower_bound(&scaled, k).unwrap();
        assert_relative_eq!(gamma, gamma_scaled, epsilon = 1e-9 * gamma);

        // Stability: product norm of the solution ≤ (1/γ) dual norm of data.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let f = random_vec(&mut rng, rep.dim(k));
        let sol = solve_mixed_hodge(&rep, k, &f).unwrap();
        let vnorm_sq = |j: usize, v: &DVector<f64>| rep.v_norm(j, v).powi(2);
        let sol_norm = (vnorm_sq(k - 1, &sol.sigma)
            + vnorm_sq(k, &sol.u)
            + sol.p_coords.norm_squared())
        .sqrt();
        // Dual norm of F(τ,v,q) = ⟨f, v⟩ in the product norm: the V-dual
        // norm of G_k f at level k.
        let graph = rep.graph_gram(k);
        let gf = rep.gram(k) * &f;
        let dual = gf.dot(&linalg::solve(&graph, &gf).unwrap()).max(0.0).sqrt();
        assert!(sol_norm <= dual / gamma * (1.0 + 1e-8));
    }

    #[test]
    fn eigen_hand_value() {
        let rep = ComplexRep::new(
            identity_grams(&[1, 1]),
            vec![DMatrix::from_element(1, 1, 2.0)],
        )
        .unwrap();
        let res = solve_hodge_eigen(&rep, 0, 1).unwrap();
        assert_eq!(res.eigenvalues.len(), 1);
        assert_relative_eq!(res.eigenvalues[0], 4.0, epsilon = 1e-12);
    }

    #[test]
    fn eigen_direct_sum_is_multiset_union() {
        let rep = random_complex_3l(17);
        let doubled = rep.direct_sum(&rep).unwrap();
        let k = 1;
        let n = solve_hodge_eigen(&rep, k, 3).unwrap();
        let d = solve_hodge_eigen(&doubled, k, 6).unwrap();
        for j in 0..3 {
            assert_relative_eq!(
                n.eigenvalues[j],
                d.eigenvalues[2 * j],
                epsilon = 1e-8 * (1.0 + n.eigenvalues[j])
            );
            assert_relative_eq!(
                n.eigenvalues[j],
                d.eigenvalues[2 * j + 1],
                epsilon = 1e-8 * (1.0 + n.eigenvalues[j])
            );
        }
    }

    #[test]
    fn eigen_residuals_and_orthogonality() {
        let rep = random_complex_3l(23);
        let k = 1;
        let res = solve_hodge_eigen(&rep, k, 3).unwrap();
        assert!(res.orthonormality_defect < 1e-8);
        let g_k = rep.gram(k);
        let q = harmonic_basis(&rep, k).unwrap();
        let d_in = rep.diff_into(k);
        let stiff = rep.curl_gram(k);
        for (j, (sigma, u)) in res.eigenvectors.iter().enumerate() {
            let lambda = res.eigenvalues[j];
            assert!(lambda > 1e-10);
            // First equation: G σ = Dᵀ G_k u.
            let r1 = rep.gram(k - 1) * sigma - d_in.transpose() * g_k * u;
            assert!(r1.amax() < 1e-8);
            // Second equation: G_k D σ + stiff u = λ G_k u.
            let r2 = g_k * &d_in * sigma + &stiff * u - g_k * u * lambda;
            assert!(r2.amax() < 1e-8 * (1.0 + lambda));
            // Eigenvector orthogonal to harmonic space.
            if q.ncols() > 0 {
                assert!((q.transpose() * g_k * u).amax() < 1e-8);
            }
        }
    }

    #[test]
    fn eigen_rejects_oversized_request() {
        let rep = small_complex();
        assert!(matches!(
            solve_hodge_eigen(&rep, 1, 5),
            Err(Error::TooManyEigenpairs { .. })
        ));
    }

    #[test]
    fn eigen_reciprocal_of_solution_operator() {
        let rep = random_complex_3l(29);
        let k = 1;
        let n = rep.dim(k);
        let q = harmonic_basis(&rep, k).unwrap();
        let g = rep.gram(k);
        // Solution operator K restricted to the orthogonal complement of H.
        let mut k_op = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = DVector::zeros(n);
            e[j] = 1.0;
            let e_perp = if q.ncols() > 0 { &e - &q * (q.transpose() * g * &e) } else { e };
            let sol = solve_mixed_hodge(&rep, k, &e_perp).unwrap();
            k_op.set_column(j, &sol.u);
        }
        // K is G-self-adjoint: Lᵀ K L⁻ᵀ is symmetric for G = L Lᵀ.
        let l = linalg::chol_factor(g).unwrap();
        let t = l.transpose() * &k_op;
        let y = l.clone().lu().solve(&t.transpose()).expect("triangular solve");
        let m = y.transpose();
        let (vals, _) = linalg::sym_eig(&(0.5 * (&m + m.transpose())));
        let mut nonzero: Vec<f64> = vals.iter().cloned().filter(|v| v.abs() > 1e-8).collect();
        nonzero.sort_by(|a, b| b.total_cmp(a));
        let eig = solve_hodge_eigen(&rep, k, nonzero.len().min(3)).unwrap();
        for (j, lam) in eig.eigenvalues.iter().enumerate().take(nonzero.len()) {
            assert_relative_eq!(nonzero[j], 1.0 / lam, epsilon = 1e-7 * (1.0 / lam));
        }
    }

    #[test]
    fn json_round_trip() {
        let rep = random_complex_3l(41);
        let text = rep.to_json();
        let back = ComplexRep::from_json(&text).unwrap();
        assert_eq!(back.num_levels(), rep.num_levels());
        for k in 0..rep.num_levels() {
            assert!((back.gram(k) - rep.gram(k)).amax() < 1e-15);
            assert!((back.diff(k) - rep.diff(k)).amax() < 1e-15);
        }
        assert!(back.to_json() == text);
    }
}
