//! Dense linear-algebra helpers shared across the crate.
//!
//! Rank and null-space decisions threshold singular values at
//! [`RANK_TOL`] times the largest singular value.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Relative singular-value threshold for rank decisions.
pub const RANK_TOL: f64 = 1e-10;

/// Relative asymmetry `max |M - Mᵀ| / max |M|` (0 for empty matrices).
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax();
    if scale == 0.0 || m.is_empty() {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale
}

/// Symmetric eigendecomposition with eigenvalues sorted ascending.
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors as columns.
pub fn sym_eig(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let sym = (m + m.transpose()) * 0.5;
    let se = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let vals = DVector::from_iterator(n, order.iter().map(|&i| se.eigenvalues[i]));
    let mut vecs = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &se.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// Smallest eigenvalue of a symmetric matrix (+∞ for empty input so that
/// empty Grams count as positive definite).
pub fn min_eig_sym(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return f64::INFINITY;
    }
    let (vals, _) = sym_eig(m);
    vals[0]
}

/// Generalized symmetric eigenproblem `A v = λ B v` with `B` positive
/// definite. Eigenvalues ascending, eigenvectors B-orthonormal columns.
pub fn gen_sym_eig(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0)));
    }
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("gen_sym_eig: B not positive definite".into()))?;
    // Transform to standard form L⁻¹ A L⁻ᵀ.
    let l = chol.l();
    let mut t = a.clone();
    l.solve_lower_triangular_mut(&mut t);
    let mut tt = t.transpose();
    l.solve_lower_triangular_mut(&mut tt);
    let (vals, w) = sym_eig(&tt);
    // Back-transform eigenvectors: v = L⁻ᵀ w.
    let mut v = w;
    l.transpose().solve_upper_triangular_mut(&mut v);
    Ok((vals, v))
}

/// Rank of the triangular factor of a column-pivoted QR with the
/// [`RANK_TOL`] relative threshold on the diagonal.
fn qr_rank(r: &DMatrix<f64>) -> usize {
    let n = r.nrows().min(r.ncols());
    if n == 0 {
        return 0;
    }
    let dmax = (0..n).map(|i| r[(i, i)].abs()).fold(0.0f64, f64::max);
    if dmax == 0.0 {
        return 0;
    }
    (0..n).take_while(|&i| r[(i, i)].abs() > RANK_TOL * dmax).count()
}

/// Orthonormal (Euclidean) basis of the null space of `m`, via a
/// rank-revealing column-pivoted QR. `m` may have zero rows, in which case
/// the whole space is returned.
pub fn nullspace(m: &DMatrix<f64>) -> DMatrix<f64> {
    let ncols = m.ncols();
    if m.nrows() == 0 || ncols == 0 {
        return DMatrix::identity(ncols, ncols);
    }
    let qr = m.clone().col_piv_qr();
    let r = qr.r();
    let rank = qr_rank(&r);
    let nullity = ncols - rank;
    if nullity == 0 {
        return DMatrix::zeros(ncols, 0);
    }
    // M P = Q R. With R = [R11 R12; 0 ~0], kernel vectors of R are
    // [-R11⁻¹ R12; I]; un-permute the rows to get kernel vectors of M.
    let mut basis = DMatrix::zeros(ncols, nullity);
    if rank == 0 {
        basis.copy_from(&DMatrix::identity(ncols, nullity));
    } else {
        let r11 = r.view((0, 0), (rank, rank)).into_owned();
        let r12 = r.view((0, rank), (rank, nullity)).into_owned();
        let mut top = r12;
        let solved = r11.solve_upper_triangular_mut(&mut top);
        debug_assert!(solved, "R11 is nonsingular by the rank cut");
        basis.view_mut((0, 0), (rank, nullity)).copy_from(&(-top));
        basis
            .view_mut((rank, 0), (nullity, nullity))
            .copy_from(&DMatrix::identity(nullity, nullity));
    }
    qr.p().inv_permute_rows(&mut basis);
    // Orthonormalize (the raw kernel basis is not orthogonal).
    mgs_orthonormalize(&basis, &DMatrix::identity(ncols, ncols))
}

/// Orthonormal (Euclidean) basis for the column space of `m`.
pub fn range_basis(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let qr = m.clone().col_piv_qr();
    let rank = qr_rank(&qr.r());
    let q = qr.q();
    let mut basis = DMatrix::zeros(m.nrows(), rank);
    for j in 0..rank {
        basis.set_column(j, &q.column(j));
    }
    basis
}

/// Numerical rank with the [`RANK_TOL`] relative threshold.
pub fn rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    qr_rank(&m.clone().col_piv_qr().r())
}

/// Largest singular value (0 for empty matrices), computed through the
/// symmetric eigendecomposition of the normal matrix.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let normal = if m.nrows() >= m.ncols() {
        m.transpose() * m
    } else {
        m * m.transpose()
    };
    let (vals, _) = sym_eig(&normal);
    vals[vals.len() - 1].max(0.0).sqrt()
}

/// Solve `A x = b` by LU with partial pivoting.
pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if a.nrows() == 0 {
        return Ok(DVector::zeros(0));
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::SingularSystem("LU solve failed".into()))
}

/// Solve `A X = B` by LU with partial pivoting, matrix right-hand side.
pub fn solve_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.nrows() == 0 {
        return Ok(DMatrix::zeros(0, b.ncols()));
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::SingularSystem("LU solve failed".into()))
}

/// Minimum-norm least-squares solve of a symmetric positive semidefinite
/// system, matrix right-hand side.
pub fn pinv_solve_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DMatrix::zeros(a.ncols(), b.ncols());
    }
    debug_assert!(asymmetry(a) < 1e-8, "pinv_solve_matrix expects a symmetric matrix");
    sym_pinv_apply(a, b)
}

/// Pseudo-inverse application for a symmetric positive semidefinite
/// matrix through its eigendecomposition, dropping eigenvalues below the
/// [`RANK_TOL`] relative threshold.
fn sym_pinv_apply(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (vals, vecs) = sym_eig(a);
    let lmax = vals.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let tol = RANK_TOL * lmax.max(1e-300);
    let mut out = DMatrix::zeros(a.ncols(), b.ncols());
    for (i, &lam) in vals.iter().enumerate() {
        if lam.abs() > tol {
            let q = vecs.column(i);
            let coeffs = q.transpose() * b / lam;
            out += q * coeffs;
        }
    }
    out
}

/// Moore-Penrose pseudo-inverse through the normal matrix (the matrices
/// this crate pseudo-inverts are small and well scaled).
pub fn pinv(a: &DMatrix<f64>) -> DMatrix<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DMatrix::zeros(a.ncols(), a.nrows());
    }
    if a.nrows() >= a.ncols() {
        sym_pinv_apply(&(a.transpose() * a), &a.transpose())
    } else {
        sym_pinv_apply(&(a * a.transpose()), &a.clone()).transpose()
    }
}

/// Minimum-norm least-squares solve of a symmetric positive semidefinite
/// system (normal equations of projections).
pub fn pinv_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DVector::zeros(a.ncols());
    }
    debug_assert!(asymmetry(a) < 1e-8, "pinv_solve expects a symmetric matrix");
    let rhs = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
    DVector::from_column_slice(sym_pinv_apply(a, &rhs).as_slice())
}

/// `√(xᵀ G x)` for a symmetric positive semidefinite `G`.
pub fn norm_in(g: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.dot(&(g * x)).max(0.0).sqrt()
}

/// Cholesky factor `L` with `G = L Lᵀ`.
pub fn chol_factor(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if g.nrows() == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    g.clone()
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::SingularSystem("Gram matrix not positive definite".into()))
}

/// Operator norm of `F : (V, G_in) → (W, G_out)`, i.e. the largest singular
/// value of `L_outᵀ F L_in⁻ᵀ` where the Grams factor as `L Lᵀ`.
pub fn weighted_operator_norm(
    f: &DMatrix<f64>,
    g_out: &DMatrix<f64>,
    g_in: &DMatrix<f64>,
) -> Result<f64> {
    if f.nrows() == 0 || f.ncols() == 0 {
        return Ok(0.0);
    }
    Ok(spectral_norm(&weighted_matrix(f, g_out, g_in)?))
}

/// The matrix `L_outᵀ F L_in⁻ᵀ` whose singular values are those of `F`
/// measured between the `G_in` and `G_out` inner products.
pub fn weighted_matrix(
    f: &DMatrix<f64>,
    g_out: &DMatrix<f64>,
    g_in: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    if f.nrows() == 0 || f.ncols() == 0 {
        return Ok(f.clone());
    }
    let l_out = chol_factor(g_out)?;
    let l_in = g_in
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("weighted_matrix: input Gram not SPD".into()))?;
    let mut t = (l_out.transpose() * f).transpose();
    l_in.l().solve_lower_triangular_mut(&mut t);
    Ok(t.transpose())
}

/// G-orthonormalize the columns of `basis` by modified Gram–Schmidt with one
/// reorthogonalization pass. Columns that vanish are dropped.
pub fn mgs_orthonormalize(basis: &DMatrix<f64>, gram: &DMatrix<f64>) -> DMatrix<f64> {
    let n = basis.nrows();
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(basis.ncols());
    for j in 0..basis.ncols() {
        let mut v: DVector<f64> = basis.column(j).into();
        for _pass in 0..2 {
            for q in &cols {
                let c = q.dot(&(gram * &v));
                v -= q * c;
            }
        }
        let nrm = norm_in(gram, &v);
        if nrm > 1e-13 * basis.ncols() as f64 {
            cols.push(v / nrm);
        }
    }
    let mut out = DMatrix::zeros(n, cols.len());
    for (j, c) in cols.iter().enumerate() {
        out.set_column(j, c);
    }
    out
}

/// G-orthogonal projection of `v` onto the span of the columns of `basis`.
pub fn g_project(basis: &DMatrix<f64>, gram: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    if basis.ncols() == 0 {
        return DVector::zeros(v.len());
    }
    let bt_g = basis.transpose() * gram;
    let coeffs = pinv_solve(&(&bt_g * basis), &(bt_g * v));
    basis * coeffs
}

/// Distance from `v` to the span of the columns of `basis` in the norm
/// induced by the SPD matrix `norm_matrix`.
pub fn distance_to_span(
    basis: &DMatrix<f64>,
    norm_matrix: &DMatrix<f64>,
    v: &DVector<f64>,
) -> f64 {
    let proj = g_project(basis, norm_matrix, v);
    norm_in(norm_matrix, &(v - proj))
}

/// Ordinary least-squares slope of `log(y)` against `log(x)`.
/// Pairs with non-positive entries are skipped; `None` when fewer than two
/// usable points remain.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(&x, &y)| x > 0.0 && y > 0.0)
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}
