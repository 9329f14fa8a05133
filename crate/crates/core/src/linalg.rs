//! Shared numerical kernels: sparse symmetric matrices, conjugate gradients,
//! and deterministic subspace iterations.
//!
//! Everything here is seeded and single-threaded so that identical inputs
//! produce bitwise-identical outputs.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Compressed sparse row matrix, square and structurally symmetric.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Assemble from (row, col, value) triplets; duplicate entries are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut row_counts = vec![0usize; n];
        for &(r, _, _) in triplets {
            row_counts[r] += 1;
        }
        let mut row_ptr = vec![0usize; n + 1];
        for i in 0..n {
            row_ptr[i + 1] = row_ptr[i] + row_counts[i];
        }
        let mut col_idx = vec![0usize; triplets.len()];
        let mut values = vec![0f64; triplets.len()];
        let mut cursor = row_ptr.clone();
        for &(r, c, v) in triplets {
            col_idx[cursor[r]] = c;
            values[cursor[r]] = v;
            cursor[r] += 1;
        }
        // Sort each row by column and merge duplicates.
        let mut out_col = Vec::with_capacity(col_idx.len());
        let mut out_val = Vec::with_capacity(values.len());
        let mut out_ptr = vec![0usize; n + 1];
        for r in 0..n {
            let lo = row_ptr[r];
            let hi = row_ptr[r + 1];
            let mut row: Vec<(usize, f64)> =
                (lo..hi).map(|k| (col_idx[k], values[k])).collect();
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                if let Some(last) = out_col.last() {
                    if *last == c && out_col.len() > out_ptr[r] {
                        *out_val.last_mut().unwrap() += v;
                        continue;
                    }
                }
                out_col.push(c);
                out_val.push(v);
            }
            out_ptr[r + 1] = out_col.len();
        }
        CsrMatrix {
            n,
            row_ptr: out_ptr,
            col_idx: out_col,
            values: out_val,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// y = A x
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for r in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
    }

    pub fn mul_dvec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.n);
        self.mul_vec(x.as_slice(), y.as_mut_slice());
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.col_idx[k] == r {
                    d[r] = self.values[k];
                }
            }
        }
        d
    }

    /// Dense copy, for small oracles and tests.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.col_idx[k])] = self.values[k];
            }
        }
        m
    }

    /// Returns B = D_l A D_r for diagonal scalings given as vectors.
    pub fn scaled(&self, left: &[f64], right: &[f64]) -> CsrMatrix {
        let mut out = self.clone();
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out.values[k] *= left[r] * right[self.col_idx[k]];
            }
        }
        out
    }
}

/// Outcome of a conjugate-gradient solve.
#[derive(Debug, Clone, Copy)]
pub struct CgResult {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Jacobi-preconditioned conjugate gradients for SPD systems
/// `(A + shift I) x = b`. `x` carries the initial guess in and the
/// solution out.
pub fn cg_solve(
    a: &CsrMatrix,
    shift: f64,
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> CgResult {
    let n = a.n;
    let diag = a.diagonal();
    let inv_diag: Vec<f64> = diag
        .iter()
        .map(|&d| {
            let dd = d + shift;
            if dd.abs() > 1e-300 {
                1.0 / dd
            } else {
                1.0
            }
        })
        .collect();

    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if b_norm == 0.0 {
        x.fill(0.0);
        return CgResult {
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
    }

    let mut ax = vec![0.0; n];
    a.mul_vec(x, &mut ax);
    let mut r: Vec<f64> = (0..n).map(|i| b[i] - ax[i] - shift * x[i]).collect();
    let mut z: Vec<f64> = (0..n).map(|i| inv_diag[i] * r[i]).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut res_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();

    let mut it = 0;
    while res_norm > rel_tol * b_norm && it < max_iter {
        a.mul_vec(&p, &mut ax);
        for i in 0..n {
            ax[i] += shift * p[i];
        }
        let p_ap: f64 = p.iter().zip(&ax).map(|(a, b)| a * b).sum();
        if p_ap <= 0.0 {
            break; // loss of positive-definiteness in floating point
        }
        let alpha = rz / p_ap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ax[i];
        }
        for i in 0..n {
            z[i] = inv_diag[i] * r[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        it += 1;
    }
    CgResult {
        iterations: it,
        residual: res_norm / b_norm,
        converged: res_norm <= rel_tol * b_norm,
    }
}

/// Modified Gram-Schmidt of `v` against the columns in `basis`, twice, then
/// normalization. Returns None when `v` is numerically inside the span.
fn orthonormalize_against(basis: &[DVector<f64>], v: &mut DVector<f64>) -> Option<()> {
    let orig = v.norm();
    if orig == 0.0 {
        return None;
    }
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(v);
            v.axpy(-c, b, 1.0);
        }
    }
    let n = v.norm();
    if n < 1e-10 * orig.max(1.0) {
        return None;
    }
    *v /= n;
    Some(())
}

fn seeded_unit_vector(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0)
}

/// Error from the iterative eigensolver, carrying the residual norms that
/// were still above tolerance at the iteration cap.
#[derive(Debug, Clone, thiserror::Error)]
#[error("eigensolver failed to converge: {unconverged} of {requested} pairs above tolerance (worst residual {worst_residual:.3e})")]
pub struct EigenError {
    pub requested: usize,
    pub unconverged: usize,
    pub worst_residual: f64,
}

/// Smallest `k` eigenpairs of a symmetric positive semidefinite CSR matrix.
///
/// Shift-inverted iteration: a search space is grown by applying
/// `(A + shift I)^{-1}` (through conjugate gradients) to the residuals of
/// the current Ritz approximations, with a Rayleigh-Ritz projection on `A`
/// each sweep and a thick restart when the space gets large. Residuals
/// `||A v - theta v||` are checked against `tol * max(scale, theta)` where
/// `scale` is the mean diagonal of `A`. The start block is drawn from a
/// ChaCha stream seeded with `seed`, so results are reproducible.
pub fn smallest_eigenpairs_csr(
    a: &CsrMatrix,
    k: usize,
    tol: f64,
    seed: u64,
) -> Result<(Vec<f64>, Vec<DVector<f64>>), EigenError> {
    let n = a.n;
    assert!(k <= n, "requested more eigenpairs than matrix dimension");
    let mean_diag = a.diagonal().iter().sum::<f64>() / n as f64;
    let scale = mean_diag.max(1e-300);
    let shift = 1e-3 * scale;
    let cg_iters = 40 * (n as f64).sqrt() as usize + 200;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let block = 8.min(n);
    let keep = (k + (k / 4).max(8)).min(n); // Ritz vectors kept at restart
    let max_dim = (keep + 4 * block).min(n);
    let max_outer = 10 * k.max(8);

    let mut basis: Vec<DVector<f64>> = Vec::new();
    for _ in 0..(keep.min(block * 2)) {
        let mut v = seeded_unit_vector(n, &mut rng);
        if orthonormalize_against(&basis, &mut v).is_some() {
            basis.push(v);
        }
    }

    let apply_inverse = |rhs: &DVector<f64>| -> DVector<f64> {
        let mut x = vec![0.0; n];
        cg_solve(a, shift, rhs.as_slice(), &mut x, 1e-12, cg_iters);
        DVector::from_vec(x)
    };

    let mut last_state: Option<(Vec<f64>, Vec<DVector<f64>>, Vec<f64>)> = None;
    for _outer in 0..max_outer {
        // Rayleigh-Ritz on the current space.
        let dim = basis.len();
        let av: Vec<DVector<f64>> = basis.iter().map(|v| a.mul_dvec(v)).collect();
        let mut h = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in i..dim {
                let val = basis[i].dot(&av[j]);
                h[(i, j)] = val;
                h[(j, i)] = val;
            }
        }
        let eig = h.symmetric_eigen();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

        let ritz_count = keep.min(dim);
        let mut ritz_vals = Vec::with_capacity(ritz_count);
        let mut ritz_vecs = Vec::with_capacity(ritz_count);
        for &idx in order.iter().take(ritz_count) {
            let mut v = DVector::zeros(n);
            for (bi, b) in basis.iter().enumerate() {
                v.axpy(eig.eigenvectors[(bi, idx)], b, 1.0);
            }
            let norm = v.norm();
            if norm > 0.0 {
                v /= norm;
            }
            ritz_vals.push(eig.eigenvalues[idx]);
            ritz_vecs.push(v);
        }

        // Residuals of the k wanted pairs.
        let mut residuals = Vec::with_capacity(k.min(ritz_count));
        for i in 0..k.min(ritz_count) {
            let r = a.mul_dvec(&ritz_vecs[i]) - &ritz_vecs[i] * ritz_vals[i];
            residuals.push(r);
        }
        let res_norms: Vec<f64> = residuals.iter().map(|r| r.norm()).collect();
        let converged = ritz_vals.len() >= k
            && res_norms
                .iter()
                .zip(ritz_vals.iter())
                .all(|(&r, &t)| r <= tol * scale.max(t.abs()));
        if converged {
            return Ok((
                ritz_vals.into_iter().take(k).collect(),
                ritz_vecs.into_iter().take(k).collect(),
            ));
        }
        last_state = Some((ritz_vals.clone(), ritz_vecs.clone(), res_norms.clone()));

        // Thick restart: compress to the kept Ritz vectors.
        if dim + block > max_dim {
            basis = ritz_vecs.clone();
        }

        // Expand with shift-inverted corrections of the worst residuals
        // (bootstrap phase: shift-inverted Ritz vectors themselves).
        let mut worst: Vec<usize> = (0..res_norms.len()).collect();
        worst.sort_by(|&i, &j| res_norms[j].total_cmp(&res_norms[i]));
        let mut added = 0;
        for &i in &worst {
            if added >= block {
                break;
            }
            if res_norms[i] <= tol * scale.max(ritz_vals[i].abs()) {
                continue;
            }
            let mut t = apply_inverse(&residuals[i]);
            if orthonormalize_against(&basis, &mut t).is_some() {
                basis.push(t);
                added += 1;
            }
        }
        if added == 0 {
            // Residual directions exhausted numerically; add fresh
            // random material to escape stagnation.
            for _ in 0..block {
                let mut v = apply_inverse(&seeded_unit_vector(n, &mut rng));
                if orthonormalize_against(&basis, &mut v).is_some() {
                    basis.push(v);
                    added += 1;
                    break;
                }
            }
            if added == 0 {
                break;
            }
        }
    }

    let (_vals, _vecs, res_norms) = last_state.expect("at least one sweep runs");
    let unconverged = res_norms
        .iter()
        .filter(|&&r| r > tol * scale)
        .count();
    Err(EigenError {
        requested: k,
        unconverged: unconverged.max(1),
        worst_residual: res_norms.iter().copied().fold(0.0, f64::max),
    })
}

/// Dominant eigenpairs (largest magnitude) of a dense symmetric matrix by
/// orthogonal subspace iteration with Rayleigh-Ritz extraction.
///
/// Returns `k` Ritz values ordered by descending |value| together with the
/// Ritz vectors. Deterministic through the seeded start block.
pub fn dominant_eigenpairs_dense(
    a: &DMatrix<f64>,
    k: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> (Vec<f64>, Vec<DVector<f64>>) {
    let n = a.nrows();
    assert_eq!(a.nrows(), a.ncols());
    let k = k.min(n);
    let guard = (k / 2).max(4).min(n - k);
    let dim = k + guard;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<DVector<f64>> = Vec::new();
    while basis.len() < dim {
        let mut v = seeded_unit_vector(n, &mut rng);
        if orthonormalize_against(&basis, &mut v).is_some() {
            basis.push(v);
        }
    }

    let scale = a.norm() / (n as f64).sqrt();
    let mut prev: Vec<f64> = vec![f64::INFINITY; k];
    for _ in 0..max_iter {
        // Multiply and re-orthonormalize.
        let mut next: Vec<DVector<f64>> = Vec::new();
        for v in &basis {
            let mut w = a * v;
            if orthonormalize_against(&next, &mut w).is_none() {
                w = seeded_unit_vector(n, &mut rng);
                orthonormalize_against(&next, &mut w);
                let nn = w.norm();
                if nn > 0.0 {
                    w /= nn;
                }
            }
            next.push(w);
        }
        basis = next;

        // Rayleigh-Ritz.
        let mut h = DMatrix::zeros(dim, dim);
        let av: Vec<DVector<f64>> = basis.iter().map(|v| a * v).collect();
        for i in 0..dim {
            for j in i..dim {
                let val = basis[i].dot(&av[j]);
                h[(i, j)] = val;
                h[(j, i)] = val;
            }
        }
        let eig = h.symmetric_eigen();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&i, &j| {
            eig.eigenvalues[j]
                .abs()
                .total_cmp(&eig.eigenvalues[i].abs())
        });
        let rotated: Vec<DVector<f64>> = order
            .iter()
            .map(|&idx| {
                let mut v = DVector::zeros(n);
                for (bi, b) in basis.iter().enumerate() {
                    v.axpy(eig.eigenvectors[(bi, idx)], b, 1.0);
                }
                v
            })
            .collect();
        basis = rotated;
        let vals: Vec<f64> = order.iter().map(|&idx| eig.eigenvalues[idx]).collect();

        let delta = vals
            .iter()
            .take(k)
            .zip(prev.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        prev = vals.iter().take(k).copied().collect();
        if delta <= tol * scale.max(1e-300) {
            break;
        }
    }

    let vals = prev;
    let vecs = basis.into_iter().take(k).collect();
    (vals, vecs)
}

/// Top-`k` singular values of a dense symmetric matrix, descending.
///
/// For symmetric input the singular values are the absolute eigenvalues, so
/// this reuses the dominant-eigenpair iteration.
pub fn top_singular_values_symmetric(a: &DMatrix<f64>, k: usize, seed: u64) -> Vec<f64> {
    let (vals, _) = dominant_eigenpairs_dense(a, k, 1e-12, 400, seed);
    let mut s: Vec<f64> = vals.iter().map(|v| v.abs()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Solve the dense symmetric positive definite system `A x = b` by Cholesky.
pub fn solve_spd_dense(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    a.clone().cholesky().map(|ch| ch.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_path(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            let mut deg = 0.0;
            if i > 0 {
                t.push((i, i - 1, -1.0));
                deg += 1.0;
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                deg += 1.0;
            }
            t.push((i, i, deg));
        }
        CsrMatrix::from_triplets(n, &t)
    }

    #[test]
    fn csr_assembly_merges_duplicates() {
        let m = CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 0, 5.0)]);
        assert_eq!(m.nnz(), 2);
        let d = m.to_dense();
        assert_eq!(d[(0, 0)], 3.0);
        assert_eq!(d[(1, 0)], 5.0);
    }

    #[test]
    fn cg_matches_dense_solve() {
        let a = laplacian_path(20);
        let b: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let mut x = vec![0.0; 20];
        let res = cg_solve(&a, 0.5, &b, &mut x, 1e-12, 1000);
        assert!(res.converged);
        let dense = a.to_dense() + DMatrix::identity(20, 20) * 0.5;
        let xd = dense
            .lu()
            .solve(&DVector::from_vec(b.clone()))
            .unwrap();
        for i in 0..20 {
            assert!((x[i] - xd[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn smallest_eigenpairs_match_dense() {
        let a = laplacian_path(40);
        let (vals, vecs) = smallest_eigenpairs_csr(&a, 6, 1e-8, 7).unwrap();
        let eig = a.to_dense().symmetric_eigen();
        let mut dense_vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        dense_vals.sort_by(|a, b| a.total_cmp(b));
        for i in 0..6 {
            assert!(
                (vals[i] - dense_vals[i]).abs() < 1e-8,
                "eigenvalue {i}: {} vs {}",
                vals[i],
                dense_vals[i]
            );
        }
        // Residual check.
        for (v, &lam) in vecs.iter().zip(vals.iter()) {
            let r = (a.mul_dvec(v) - v * lam).norm();
            assert!(r < 1e-7);
        }
    }

    #[test]
    fn eigensolver_is_deterministic() {
        let a = laplacian_path(25);
        let (v1, e1) = smallest_eigenpairs_csr(&a, 4, 1e-8, 3).unwrap();
        let (v2, e2) = smallest_eigenpairs_csr(&a, 4, 1e-8, 3).unwrap();
        assert_eq!(v1, v2);
        for (a_, b_) in e1.iter().zip(e2.iter()) {
            assert_eq!(a_.as_slice(), b_.as_slice());
        }
    }

    #[test]
    fn dominant_pairs_match_dense_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut m = DMatrix::from_fn(15, 15, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        m = (&m + m.transpose()) * 0.5;
        let top = top_singular_values_symmetric(&m, 5, 1);
        let svd = m.clone().svd(false, false);
        let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        for i in 0..5 {
            assert!(
                (top[i] - sv[i]).abs() <= 1e-8 * sv[0].max(1.0),
                "singular value {i}: {} vs {}",
                top[i],
                sv[i]
            );
        }
    }
}
