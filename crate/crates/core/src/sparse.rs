//! Sparse mirrors of the dense complex solvers for large assembled
//! complexes: a sparse-direct mixed Hodge-Laplace solve, shift-invert
//! block subspace iteration for harmonic spaces and low eigenvalues, and
//! extreme generalized eigenvalues of Gram pencils.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use nalgebra::{DMatrix, DVector};

use crate::hilbert::{ComplexRep, MixedSolution};
use crate::linalg;
use crate::{Error, Result};

pub type SpMat = SparseColMat<usize, f64>;

/// Force sequential kernels so factorizations and products are bitwise
/// reproducible run to run; the study outputs are specified to be
/// byte-identical for identical configs.
pub fn set_deterministic() {
    faer::set_global_parallelism(faer::Par::Seq);
}

pub fn from_triplets(nrows: usize, ncols: usize, trips: &[(usize, usize, f64)]) -> SpMat {
    let t: Vec<Triplet<usize, usize, f64>> =
        trips.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
    SpMat::try_new_from_triplets(nrows, ncols, &t).expect("valid triplets")
}

pub fn to_triplets(m: &SpMat) -> Vec<(usize, usize, f64)> {
    let col_ptr = m.col_ptr();
    let row_idx = m.row_idx();
    let val = m.val();
    let mut out = Vec::with_capacity(val.len());
    for j in 0..m.ncols() {
        for idx in col_ptr[j]..col_ptr[j + 1] {
            out.push((row_idx[idx], j, val[idx]));
        }
    }
    out
}

pub fn sp_transpose(m: &SpMat) -> SpMat {
    m.transpose().to_col_major().expect("transpose to col major")
}

pub fn sp_to_dense(m: &SpMat) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for (i, j, v) in to_triplets(m) {
        out[(i, j)] += v;
    }
    out
}

pub fn na_to_faer(v: &DVector<f64>) -> Mat<f64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

pub fn faer_col_to_na(m: &Mat<f64>, col: usize) -> DVector<f64> {
    DVector::from_fn(m.nrows(), |i, _| m[(i, col)])
}

pub fn spmv(m: &SpMat, v: &DVector<f64>) -> DVector<f64> {
    let out = m * na_to_faer(v);
    faer_col_to_na(&out, 0)
}

/// A sparse finite-dimensional Hilbert cochain complex: per-level Gram and
/// differential matrices in CSC form.
pub struct SparseComplex {
    grams: Vec<SpMat>,
    /// `diffs[k]` maps level k to level k+1; length `levels - 1`.
    diffs: Vec<SpMat>,
}

impl SparseComplex {
    pub fn new(grams: Vec<SpMat>, diffs: Vec<SpMat>) -> Result<Self> {
        if grams.is_empty() || diffs.len() + 1 != grams.len() {
            return Err(Error::InvalidComplex("sparse complex level mismatch".into()));
        }
        for (k, d) in diffs.iter().enumerate() {
            if d.ncols() != grams[k].nrows() || d.nrows() != grams[k + 1].nrows() {
                return Err(Error::InvalidComplex(format!("differential {k} shape mismatch")));
            }
        }
        Ok(Self { grams, diffs })
    }

    pub fn num_levels(&self) -> usize {
        self.grams.len()
    }

    pub fn dim(&self, k: usize) -> usize {
        self.grams[k].nrows()
    }

    pub fn gram(&self, k: usize) -> &SpMat {
        &self.grams[k]
    }

    pub fn diff(&self, k: usize) -> &SpMat {
        &self.diffs[k]
    }

    /// Densify into a [`ComplexRep`] (intended for coarse levels and
    /// cross-checks against the dense solvers).
    pub fn to_dense(&self) -> Result<ComplexRep> {
        let grams = self.grams.iter().map(sp_to_dense).collect();
        let diffs = self.diffs.iter().map(sp_to_dense).collect();
        ComplexRep::new(grams, diffs)
    }

    pub fn w_norm(&self, k: usize, v: &DVector<f64>) -> f64 {
        v.dot(&spmv(&self.grams[k], v)).max(0.0).sqrt()
    }

    pub fn v_norm(&self, k: usize, v: &DVector<f64>) -> f64 {
        let w2 = v.dot(&spmv(&self.grams[k], v)).max(0.0);
        if k + 1 < self.num_levels() {
            let dv = spmv(&self.diffs[k], v);
            (w2 + dv.dot(&spmv(&self.grams[k + 1], &dv)).max(0.0)).sqrt()
        } else {
            w2.sqrt()
        }
    }

    /// Stiffness `D_kᵀ G_{k+1} D_k` (empty product at the top level).
    fn stiffness(&self, k: usize) -> SpMat {
        if k + 1 < self.num_levels() {
            let gd = &self.grams[k + 1] * &self.diffs[k];
            &sp_transpose(&self.diffs[k]) * &gd
        } else {
            from_triplets(self.dim(k), self.dim(k), &[])
        }
    }

    /// Mixed eigen-pencil blocks over (σ, u):
    /// `A = [[-G_{k-1}, Dᵀ G_k], [G_k D, D_kᵀ G_{k+1} D_k]]`,
    /// `M = blockdiag(0, G_k)`.
    fn pencil(&self, k: usize) -> (SpMat, SpMat, usize) {
        let n_u = self.dim(k);
        let n_sigma = if k == 0 { 0 } else { self.dim(k - 1) };
        let n = n_sigma + n_u;
        let mut trips: Vec<(usize, usize, f64)> = Vec::new();
        if k > 0 {
            for (i, j, v) in to_triplets(&self.grams[k - 1]) {
                trips.push((i, j, -v));
            }
            let gd = &self.grams[k] * &self.diffs[k - 1]; // n_u × n_sigma
            for (i, j, v) in to_triplets(&gd) {
                trips.push((n_sigma + i, j, v));
                trips.push((j, n_sigma + i, v));
            }
        }
        for (i, j, v) in to_triplets(&self.stiffness(k)) {
            trips.push((n_sigma + i, n_sigma + j, v));
        }
        let a = from_triplets(n, n, &trips);
        let m_trips: Vec<(usize, usize, f64)> = to_triplets(&self.grams[k])
            .into_iter()
            .map(|(i, j, v)| (n_sigma + i, n_sigma + j, v))
            .collect();
        let m = from_triplets(n, n, &m_trips);
        (a, m, n_sigma)
    }

    /// Lowest eigenpairs of the mixed Hodge-Laplace pencil at level `k`,
    /// including the harmonic (zero) cluster, via shift-invert block
    /// subspace iteration. Returns `(eigenvalues ascending, u-vectors)`.
    fn lowest_pencil_eigs(&self, k: usize, want: usize) -> Result<(Vec<f64>, Vec<DVector<f64>>)> {
        let (a, m, n_sigma) = self.pencil(k);
        let n = a.nrows();
        let want = want.min(self.dim(k));
        let block = (want + 8).min(self.dim(k));

        // Pilot shift from the Gershgorin-ish scale of the pencil, then a
        // refinement pass with a shift tied to the smallest nonzero Ritz
        // value. Eigenvalues are ≥ 0, so any θ < 0 is safe.
        let scale = {
            let tr_a: f64 = to_triplets(&self.stiffness(k))
                .iter()
                .filter(|(i, j, _)| i == j)
                .map(|(_, _, v)| v.abs())
                .sum();
            let tr_m: f64 = to_triplets(&self.grams[k])
                .iter()
                .filter(|(i, j, _)| i == j)
                .map(|(_, _, v)| v)
                .sum();
            (tr_a / tr_m.max(1e-300)).max(1e-6)
        };
        let mut theta = -1e-3 * scale;
        let mut eigs: Vec<f64> = Vec::new();
        let mut vectors: Mat<f64> = Mat::zeros(n, block);
        for phase in 0..2 {
            let shifted = add_scaled(&a, &m, -theta);
            let lu = shifted
                .sp_lu()
                .map_err(|_| Error::SingularSystem("shift-invert factorization failed".into()))?;
            let mut x = if phase == 0 {
                let mut rng = crate::crime::seeded_rng(0x5eed);
                use rand::Rng;
                Mat::from_fn(n, block, |_, _| rng.random_range(-1.0..1.0))
            } else {
                vectors.clone()
            };
            // Start inside range((A - θM)⁻¹ M).
            x = lu.solve(&(&m * &x));
            let iters = if phase == 0 { 30 } else { 400 };
            let mut last: Vec<f64> = Vec::new();
            for it in 0..iters {
                orthonormalize_cols(&mut x);
                // Rayleigh-Ritz on the pencil.
                let ax = &a * &x;
                let mx = &m * &x;
                let am = dense_small(&x, &ax);
                let mm = dense_small(&x, &mx);
                let (vals, vecs) = linalg::gen_sym_eig(&am, &regularize(&mm))?;
                // Rotate the block to the Ritz basis.
                let rot = Mat::from_fn(block, block, |i, j| vecs[(i, j)]);
                x = &x * &rot;
                eigs = vals.iter().cloned().collect();
                if it % 4 == 3 || it == iters - 1 {
                    let converged = eigs
                        .iter()
                        .take(want)
                        .zip(&last)
                        .all(|(a, b)| (a - b).abs() <= 1e-11 * (1.0 + a.abs()));
                    if converged && !last.is_empty() {
                        break;
                    }
                    last = eigs.iter().take(want).cloned().collect();
                }
                x = lu.solve(&(&m * &x));
            }
            vectors = x;
            if phase == 0 {
                let smallest_nonzero = eigs
                    .iter()
                    .find(|&&l| l > 1e-6 * scale.max(1.0))
                    .cloned()
                    .unwrap_or(scale);
                theta = -0.5 * smallest_nonzero.max(1e-8 * scale);
            }
        }
        let u_vectors = (0..want)
            .map(|j| {
                DVector::from_fn(self.dim(k), |i, _| vectors[(n_sigma + i, j)])
            })
            .collect();
        Ok((eigs.into_iter().take(want).collect(), u_vectors))
    }

    /// G-orthonormal harmonic basis at level `k` by shift-invert iteration:
    /// the eigenvectors of the zero cluster of the mixed pencil.
    pub fn harmonic_basis(&self, k: usize) -> Result<Vec<DVector<f64>>> {
        let mut probe = 4usize;
        loop {
            let want = probe.min(self.dim(k));
            let (eigs, vecs) = self.lowest_pencil_eigs(k, want)?;
            let cutoff = zero_cutoff(&eigs);
            let n_zero = eigs.iter().filter(|&&l| l < cutoff).count();
            if n_zero < want || want == self.dim(k) {
                let basis: Vec<DVector<f64>> = vecs.into_iter().take(n_zero).collect();
                return Ok(self.orthonormalize(k, basis));
            }
            probe *= 2;
        }
    }

    fn orthonormalize(&self, k: usize, vectors: Vec<DVector<f64>>) -> Vec<DVector<f64>> {
        let mut out: Vec<DVector<f64>> = Vec::with_capacity(vectors.len());
        for mut v in vectors {
            for _pass in 0..2 {
                for q in &out {
                    let c = q.dot(&spmv(&self.grams[k], &v));
                    v -= q * c;
                }
            }
            let nrm = self.w_norm(k, &v);
            if nrm > 1e-12 {
                out.push(v / nrm);
            }
        }
        out
    }

    /// Harmonic dimensions across all levels.
    pub fn betti_numbers(&self) -> Result<Vec<usize>> {
        (0..self.num_levels())
            .map(|k| self.harmonic_basis(k).map(|b| b.len()))
            .collect()
    }

    /// Lowest `nev` nonzero eigenvalues and their (σ, u) eigenvectors.
    pub fn solve_hodge_eigen(&self, k: usize, nev: usize) -> Result<(Vec<f64>, Vec<DVector<f64>>)> {
        let harmonic = self.harmonic_basis(k)?;
        let want = nev + harmonic.len();
        if want > self.dim(k) {
            return Err(Error::TooManyEigenpairs {
                requested: nev,
                available: self.dim(k) - harmonic.len(),
            });
        }
        let (eigs, vecs) = self.lowest_pencil_eigs(k, want)?;
        let cutoff = zero_cutoff(&eigs);
        let mut values = Vec::with_capacity(nev);
        let mut vectors = Vec::with_capacity(nev);
        for (l, v) in eigs.into_iter().zip(vecs) {
            if l >= cutoff {
                values.push(l);
                vectors.push(v);
            }
        }
        values.truncate(nev);
        vectors.truncate(nev);
        Ok((values, vectors))
    }

    /// Sparse mixed Hodge-Laplace solve at level `k` with data vector `f`
    /// (coefficients at level k) and the given G-orthonormal harmonic
    /// basis.
    ///
    /// The harmonic basis vectors are globally supported, so carrying them
    /// as Lagrange-multiplier columns would put dense rows into the sparse
    /// factorization. Instead the harmonic component of the data is split
    /// off exactly (`p = P_H f`), the remaining singular saddle system is
    /// made nonsingular by sparse single-entry gauge columns pinning the
    /// kernel, and the gauge is traded for the G-orthogonality constraint
    /// afterwards by projecting the harmonic part out of `u`.
    pub fn solve_mixed(
        &self,
        k: usize,
        f: &DVector<f64>,
        harmonic: &[DVector<f64>],
    ) -> Result<MixedSolution> {
        let n_u = self.dim(k);
        if f.len() != n_u {
            return Err(Error::DimensionMismatch { expected: n_u, got: f.len(), context: "sparse solve data" });
        }
        let n_sigma = if k == 0 { 0 } else { self.dim(k - 1) };
        let n_p = harmonic.len();
        let n = n_sigma + n_u + n_p;
        let gf = spmv(&self.grams[k], f);

        // Exact harmonic coordinates of the data.
        let p_coords = DVector::from_fn(n_p, |j, _| harmonic[j].dot(&gf));
        let mut f_perp = gf.clone();
        for (j, q) in harmonic.iter().enumerate() {
            f_perp -= spmv(&self.grams[k], q) * p_coords[j];
        }

        // Gauge rows: one max-|q| entry per harmonic vector, all distinct.
        let mut gauge_rows: Vec<usize> = Vec::with_capacity(n_p);
        for q in harmonic {
            let best = (0..n_u)
                .filter(|i| !gauge_rows.contains(i))
                .max_by(|&a, &b| q[a].abs().total_cmp(&q[b].abs()))
                .expect("more dofs than harmonic vectors");
            gauge_rows.push(best);
        }

        let mut trips: Vec<(usize, usize, f64)> = Vec::new();
        if k > 0 {
            for (i, j, v) in to_triplets(&self.grams[k - 1]) {
                trips.push((i, j, -v));
            }
            let gd = &self.grams[k] * &self.diffs[k - 1];
            for (i, j, v) in to_triplets(&gd) {
                trips.push((n_sigma + i, j, v));
                trips.push((j, n_sigma + i, v));
            }
        }
        for (i, j, v) in to_triplets(&self.stiffness(k)) {
            trips.push((n_sigma + i, n_sigma + j, v));
        }
        for (p, &row) in gauge_rows.iter().enumerate() {
            trips.push((n_sigma + row, n_sigma + n_u + p, 1.0));
            trips.push((n_sigma + n_u + p, n_sigma + row, 1.0));
        }
        let a = from_triplets(n, n, &trips);
        let mut rhs = Mat::zeros(n, 1);
        for i in 0..n_u {
            rhs[(n_sigma + i, 0)] = f_perp[i];
        }
        let lu = a
            .sp_lu()
            .map_err(|_| Error::SingularSystem("sparse mixed system factorization failed".into()))?;
        let x = lu.solve(&rhs);

        let sigma = DVector::from_fn(n_sigma, |i, _| x[(i, 0)]);
        let mut u = DVector::from_fn(n_u, |i, _| x[(n_sigma + i, 0)]);
        // Trade the gauge for G-orthogonality to the harmonic space.
        for q in harmonic {
            let c = q.dot(&spmv(&self.grams[k], &u));
            u -= q * c;
        }

        // Residual of the original variational equations, blockwise
        // relative.
        let mut h_mat = DMatrix::zeros(n_u, n_p);
        for (j, q) in harmonic.iter().enumerate() {
            h_mat.set_column(j, q);
        }
        let residual = self.mixed_residual(k, f, &sigma, &u, &(&h_mat * &p_coords));
        Ok(MixedSolution { sigma, u, p_coords, harmonic: h_mat, residual })
    }

    /// Max blockwise relative residual of the three mixed variational
    /// equations for a candidate solution.
    pub fn mixed_residual(
        &self,
        k: usize,
        f: &DVector<f64>,
        sigma: &DVector<f64>,
        u: &DVector<f64>,
        p_full: &DVector<f64>,
    ) -> f64 {
        let gf = spmv(&self.grams[k], f);
        let scale = gf.norm()
            + self.w_norm(k, u)
            + if k > 0 { self.w_norm(k - 1, sigma) } else { 0.0 }
            + f64::MIN_POSITIVE;
        let mut worst: f64 = 0.0;
        if k > 0 {
            let g_sigma = spmv(&self.grams[k - 1], sigma);
            let dtgu = spmv(
                &sp_transpose(&self.diffs[k - 1]),
                &spmv(&self.grams[k], u),
            );
            worst = worst.max((g_sigma - dtgu).norm() / scale);
        }
        let mut r2 = spmv(&self.stiffness(k), u) + spmv(&self.grams[k], p_full) - &gf;
        if k > 0 {
            r2 += spmv(&self.grams[k], &spmv(&self.diffs[k - 1], sigma));
        }
        worst = worst.max(r2.norm() / scale);
        worst
    }
}

/// `A + c M` as a fresh sparse matrix.
fn add_scaled(a: &SpMat, m: &SpMat, c: f64) -> SpMat {
    let mut trips = to_triplets(a);
    for (i, j, v) in to_triplets(m) {
        trips.push((i, j, c * v));
    }
    from_triplets(a.nrows(), a.ncols(), &trips)
}

fn dense_small(x: &Mat<f64>, y: &Mat<f64>) -> DMatrix<f64> {
    let p = x.transpose() * y;
    let mut out = DMatrix::zeros(p.nrows(), p.ncols());
    for i in 0..p.nrows() {
        for j in 0..p.ncols() {
            out[(i, j)] = p[(i, j)];
        }
    }
    // Symmetrize roundoff.
    (&out + out.transpose()) * 0.5
}

fn regularize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let scale = m.diagonal().amax().max(1e-300);
    m + DMatrix::identity(m.nrows(), m.ncols()) * (1e-14 * scale)
}

fn orthonormalize_cols(x: &mut Mat<f64>) {
    let (n, b) = (x.nrows(), x.ncols());
    for j in 0..b {
        for _pass in 0..2 {
            for q in 0..j {
                let mut dot = 0.0;
                for i in 0..n {
                    dot += x[(i, q)] * x[(i, j)];
                }
                for i in 0..n {
                    let new = x[(i, j)] - dot * x[(i, q)];
                    x[(i, j)] = new;
                }
            }
        }
        let mut nrm = 0.0;
        for i in 0..n {
            nrm += x[(i, j)] * x[(i, j)];
        }
        let nrm = nrm.sqrt();
        if nrm > 1e-300 {
            for i in 0..n {
                x[(i, j)] /= nrm;
            }
        }
    }
}

/// Threshold separating the zero cluster from genuine eigenvalues.
fn zero_cutoff(eigs: &[f64]) -> f64 {
    let top = eigs.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
    1e-7 * top.max(1e-8)
}

/// Largest `|1 - λ|` over the generalized eigenvalues of `(B, G)` with `G`
/// SPD: the deviation of `G⁻¹B` from the identity in the G-norm. Subspace
/// iteration on `G⁻¹(B - G)` with Rayleigh-Ritz extraction.
pub fn pencil_deviation(b: &SpMat, g: &SpMat) -> Result<f64> {
    let n = g.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    if n <= 400 {
        let (vals, _) = linalg::gen_sym_eig(&sp_to_dense(b), &sp_to_dense(g))?;
        return Ok(vals.iter().map(|l| (1.0 - l).abs()).fold(0.0, f64::max));
    }
    let diff = add_scaled(b, g, -1.0);
    let chol = g
        .sp_cholesky(faer::Side::Lower)
        .map_err(|_| Error::SingularSystem("Gram Cholesky failed".into()))?;
    let block = 8.min(n);
    let mut rng = crate::crime::seeded_rng(0xdead);
    use rand::Rng;
    let mut x: Mat<f64> = Mat::from_fn(n, block, |_, _| rng.random_range(-1.0..1.0));
    let mut dev = 0.0f64;
    let mut last = f64::INFINITY;
    for it in 0..300 {
        orthonormalize_cols(&mut x);
        let bx = &diff * &x;
        let gx = g * &x;
        let bm = dense_small(&x, &bx);
        let gm = dense_small(&x, &gx);
        let (vals, _) = linalg::gen_sym_eig(&bm, &regularize(&gm))?;
        dev = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if it % 5 == 4 {
            if (dev - last).abs() <= 1e-10 * (1.0 + dev) {
                break;
            }
            last = dev;
        }
        x = chol.solve(&bx);
    }
    Ok(dev)
}

/// Solve `G x = b` for SPD sparse `G`.
pub fn spd_solve(g: &SpMat, b: &DVector<f64>) -> Result<DVector<f64>> {
    let chol = g
        .sp_cholesky(faer::Side::Lower)
        .map_err(|_| Error::SingularSystem("sparse Cholesky failed".into()))?;
    let x = chol.solve(&na_to_faer(b));
    Ok(faer_col_to_na(&x, 0))
}

/// A reusable SPD factorization.
pub struct SpdFactor {
    inner: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

impl SpdFactor {
    pub fn new(g: &SpMat) -> Result<Self> {
        Ok(Self {
            inner: g
                .sp_cholesky(faer::Side::Lower)
                .map_err(|_| Error::SingularSystem("sparse Cholesky failed".into()))?,
        })
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        faer_col_to_na(&self.inner.solve(&na_to_faer(b)), 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn laplacian_path(n: usize) -> (SpMat, SpMat) {
        // 1D path-graph complex: stiffness & identity mass.
        let mut trips = Vec::new();
        for i in 0..n {
            trips.push((i, i, 2.0));
            if i > 0 {
                trips.push((i, i - 1, -1.0));
                trips.push((i - 1, i, -1.0));
            }
        }
        (from_triplets(n, n, &trips), {
            let eye: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 1.0)).collect();
            from_triplets(n, n, &eye)
        })
    }

    #[test]
    fn triplet_round_trip_and_dense() {
        let m = from_triplets(2, 3, &[(0, 0, 1.0), (1, 2, -2.0), (0, 0, 1.0)]);
        let d = sp_to_dense(&m);
        assert_eq!(d[(0, 0)], 2.0);
        assert_eq!(d[(1, 2)], -2.0);
        let t = sp_transpose(&m);
        assert_eq!(sp_to_dense(&t)[(2, 1)], -2.0);
    }

    #[test]
    fn pencil_deviation_small_dense_path() {
        let (a, g) = laplacian_path(5);
        // B = G + 0.25 A: deviation = 0.25 λmax(A).
        let b = add_scaled(&g, &a, 0.25);
        let dev = pencil_deviation(&b, &g).unwrap();
        let (vals, _) =
            linalg::gen_sym_eig(&sp_to_dense(&a), &sp_to_dense(&g)).unwrap();
        assert_relative_eq!(dev, 0.25 * vals.max(), epsilon = 1e-10);
    }

    #[test]
    fn sparse_complex_matches_dense_on_random_complex() {
        // Cross-check the sparse solvers against the dense reference on a
        // small complex.
        let rep = crate::crime::random_complex(&mut crate::crime::seeded_rng(3));
        let to_sp = |m: &DMatrix<f64>| {
            let mut trips = Vec::new();
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    if m[(i, j)] != 0.0 {
                        trips.push((i, j, m[(i, j)]));
                    }
                }
            }
            from_triplets(m.nrows(), m.ncols(), &trips)
        };
        let grams = (0..rep.num_levels()).map(|k| to_sp(rep.gram(k))).collect();
        let diffs = (0..rep.num_levels() - 1).map(|k| to_sp(rep.diff(k))).collect();
        let sp = SparseComplex::new(grams, diffs).unwrap();

        // Betti numbers agree.
        let dense_betti = crate::hilbert::betti_numbers(&rep).unwrap();
        assert_eq!(sp.betti_numbers().unwrap(), dense_betti);

        // Mixed solve agrees.
        let k = 1;
        let mut rng = crate::crime::seeded_rng(4);
        use rand::Rng;
        let f = DVector::from_fn(rep.dim(k), |_, _| rng.random_range(-1.0..1.0));
        let dense_sol = crate::hilbert::solve_mixed_hodge(&rep, k, &f).unwrap();
        let harmonic = sp.harmonic_basis(k).unwrap();
        let sp_sol = sp.solve_mixed(k, &f, &harmonic).unwrap();
        assert!((dense_sol.u.clone() - &sp_sol.u).amax() < 1e-8);
        assert!((dense_sol.sigma.clone() - &sp_sol.sigma).amax() < 1e-8);
        assert!((dense_sol.p_full() - sp_sol.p_full()).amax() < 1e-8);
        assert!(sp_sol.residual < 1e-9);

        // Eigenvalues agree.
        let dense_eig = crate::hilbert::solve_hodge_eigen(&rep, k, 3).unwrap();
        let (sp_vals, _) = sp.solve_hodge_eigen(k, 3).unwrap();
        for (a, b) in dense_eig.eigenvalues.iter().zip(&sp_vals) {
            assert_relative_eq!(a, b, epsilon = 1e-7 * (1.0 + a));
        }
    }
}
