//! Cotangent Laplace-Beltrami operator, partial eigendecomposition, and the
//! spectral descriptor family built on top of it.

mod ispm;
mod rbihdm;
mod signatures;

pub use ispm::{ispm_distance, ispm_histogram};
pub use rbihdm::{
    rbihdm, rbihdm_distance, standardization_stats, RBiHdmDescriptor, RBiHdmMode,
    StandardizationStats,
};
pub use signatures::{
    default_hks_times, default_sihks_tau_grid, default_wks_sigma, hks, sgws, sihks, wks,
    PointSignature, SignatureMethod,
};

use crate::linalg::{smallest_eigenpairs_csr, CsrMatrix, EigenError};
use crate::mesh::{MassWeights, TriangleMesh};
use nalgebra::DVector;
use std::io::{BufRead, Write};
use std::path::Path;
use thiserror::Error;

/// Cotangent values are clamped to this range; degenerate triangles with
/// larger cotangents contribute a capped weight instead of poisoning the
/// operator.
const COT_CLAMP: f64 = 1e4;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("vertex {0} has zero mass weight; the generalized eigenproblem is singular")]
    ZeroMass(usize),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error("basis has {have} eigenpairs but {needed} are required")]
    BasisTooSmall { needed: usize, have: usize },
    #[error("mesh needs at least 4 vertices, has {0}")]
    TooFewVertices(usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("descriptor modes differ")]
    ModeMismatch,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("cache io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("cache parse error: {0}")]
    CacheFormat(String),
}

/// Eigenpairs of the Laplace-Beltrami operator: ascending eigenvalues
/// `lambda_0..lambda_m` (units 1/length^2) and mass-orthonormal per-vertex
/// eigenfunctions.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    pub eigenvalues: Vec<f64>,
    pub eigenfunctions: Vec<DVector<f64>>,
    pub mass: MassWeights,
}

impl SpectralBasis {
    /// Number of eigenpairs beyond the constant one (the `m` of
    /// `lambda_0..lambda_m`).
    pub fn order(&self) -> usize {
        self.eigenvalues.len() - 1
    }

    pub fn vertex_count(&self) -> usize {
        self.eigenfunctions[0].len()
    }

    /// Nonzero eigenvalues (index 1 onward).
    pub fn nonzero_eigenvalues(&self) -> &[f64] {
        &self.eigenvalues[1..]
    }

    /// Truncate to a smaller order, reusing the computed pairs.
    pub fn truncated(&self, m: usize) -> Result<SpectralBasis, SpectralError> {
        if m + 1 > self.eigenvalues.len() {
            return Err(SpectralError::BasisTooSmall {
                needed: m + 1,
                have: self.eigenvalues.len(),
            });
        }
        Ok(SpectralBasis {
            eigenvalues: self.eigenvalues[..=m].to_vec(),
            eigenfunctions: self.eigenfunctions[..=m].to_vec(),
            mass: self.mass.clone(),
        })
    }
}

/// Assemble the cotangent stiffness matrix and the lumped vertex mass.
///
/// Off-diagonal entries are `-w_uv` with `w_uv = (cot alpha + cot beta)/2`
/// over the one or two triangles sharing edge `uv`; diagonals make each row
/// sum to zero. The matrix is positive semidefinite with the constant
/// vector in its null space.
pub fn cotangent_laplacian(
    mesh: &TriangleMesh,
) -> Result<(CsrMatrix, MassWeights), SpectralError> {
    let n = mesh.vertex_count();
    if n < 4 {
        return Err(SpectralError::TooFewVertices(n));
    }
    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(mesh.face_count() * 12);
    for f in mesh.faces() {
        let p = [
            mesh.vertices()[f[0]],
            mesh.vertices()[f[1]],
            mesh.vertices()[f[2]],
        ];
        if mesh_face_area(&p) == 0.0 {
            continue;
        }
        for corner in 0..3 {
            let (i, j, k) = (f[corner], f[(corner + 1) % 3], f[(corner + 2) % 3]);
            let u = p[(corner + 1) % 3] - p[corner];
            let v = p[(corner + 2) % 3] - p[corner];
            let cross = u.cross(&v).norm();
            let cot = if cross > 0.0 {
                (u.dot(&v) / cross).clamp(-COT_CLAMP, COT_CLAMP)
            } else {
                0.0
            };
            let _ = i;
            let w = 0.5 * cot;
            // opposite edge (j, k)
            triplets.push((j, k, -w));
            triplets.push((k, j, -w));
            triplets.push((j, j, w));
            triplets.push((k, k, w));
        }
    }
    let stiffness = CsrMatrix::from_triplets(n, &triplets);
    Ok((stiffness, mesh.vertex_mass_weights()))
}

fn mesh_face_area(p: &[nalgebra::Point3<f64>; 3]) -> f64 {
    0.5 * (p[1] - p[0]).cross(&(p[2] - p[0])).norm()
}

/// Solve for the smallest `m + 1` generalized eigenpairs of
/// `(stiffness, mass)`.
///
/// The lumped mass turns the generalized problem into a similarity-scaled
/// standard one; the scaled problem is handed to the deterministic
/// shift-inverted solver, and eigenfunctions are scaled back so they are
/// mass-orthonormal. A fixed sign convention (the lowest-index vertex among
/// the top-decile magnitudes is positive) keeps runs reproducible.
pub fn eigendecompose(
    stiffness: &CsrMatrix,
    mass: &MassWeights,
    m: usize,
) -> Result<SpectralBasis, SpectralError> {
    let n = stiffness.n;
    if m + 1 > n {
        return Err(SpectralError::BasisTooSmall {
            needed: m + 1,
            have: n,
        });
    }
    let mut inv_sqrt = vec![0.0; n];
    for (i, &w) in mass.weights.iter().enumerate() {
        if w <= 0.0 {
            return Err(SpectralError::ZeroMass(i));
        }
        inv_sqrt[i] = 1.0 / w.sqrt();
    }
    let scaled = stiffness.scaled(&inv_sqrt, &inv_sqrt);
    let (values, vectors) = smallest_eigenpairs_csr(&scaled, m + 1, 1e-8, 0x5eed)?;

    let mut eigenfunctions = Vec::with_capacity(m + 1);
    for v in vectors {
        let mut phi = DVector::from_fn(n, |i, _| v[i] * inv_sqrt[i]);
        fix_sign(&mut phi);
        eigenfunctions.push(phi);
    }
    // Clamp the tiny negative rounding of the null eigenvalue.
    let mut eigenvalues = values;
    if eigenvalues[0].abs() < 1e-6 * eigenvalues.last().copied().unwrap_or(1.0).abs() {
        eigenvalues[0] = eigenvalues[0].max(0.0);
    }
    Ok(SpectralBasis {
        eigenvalues,
        eigenfunctions,
        mass: mass.clone(),
    })
}

/// Convenience: operator assembly plus eigendecomposition.
pub fn spectral_basis(mesh: &TriangleMesh, m: usize) -> Result<SpectralBasis, SpectralError> {
    let (stiffness, mass) = cotangent_laplacian(mesh)?;
    eigendecompose(&stiffness, &mass, m)
}

/// Deterministic sign: among the vertices whose |value| reaches the top
/// decile, the one with the lowest index must be positive.
fn fix_sign(phi: &mut DVector<f64>) {
    let mut magnitudes: Vec<f64> = phi.iter().map(|x| x.abs()).collect();
    magnitudes.sort_by(|a, b| a.total_cmp(b));
    let idx = ((magnitudes.len() as f64) * 0.9) as usize;
    let threshold = magnitudes[idx.min(magnitudes.len() - 1)];
    if let Some(first) = phi.iter().position(|x| x.abs() >= threshold) {
        if phi[first] < 0.0 {
            *phi *= -1.0;
        }
    }
}

/// Truncated biharmonic distance between two vertices:
/// `d(x, y)^2 = sum_i (psi_i(x) - psi_i(y))^2 / lambda_i^2` over the
/// nonzero eigenvalues of the basis.
pub fn biharmonic_distance(basis: &SpectralBasis, x: usize, y: usize) -> f64 {
    let mut acc = 0.0;
    for i in 1..basis.eigenvalues.len() {
        let lam = basis.eigenvalues[i];
        let d = basis.eigenfunctions[i][x] - basis.eigenfunctions[i][y];
        acc += d * d / (lam * lam);
    }
    acc.sqrt()
}

/// Write a basis to a small CSV cache: one header line, one eigenvalue
/// line, one mass line, then per-eigenfunction rows.
pub fn save_basis_csv(basis: &SpectralBasis, path: &Path) -> Result<(), SpectralError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        out,
        "spectral_basis,{},{}",
        basis.vertex_count(),
        basis.order()
    )?;
    writeln!(out, "{}", join_floats(&basis.eigenvalues))?;
    writeln!(out, "{}", join_floats(&basis.mass.weights))?;
    for phi in &basis.eigenfunctions {
        writeln!(out, "{}", join_floats(phi.as_slice()))?;
    }
    Ok(())
}

pub fn load_basis_csv(path: &Path) -> Result<SpectralBasis, SpectralError> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut lines = file.lines();
    let header = lines
        .next()
        .ok_or_else(|| SpectralError::CacheFormat("empty cache file".into()))??;
    let parts: Vec<&str> = header.split(',').collect();
    if parts.len() != 3 || parts[0] != "spectral_basis" {
        return Err(SpectralError::CacheFormat("bad header".into()));
    }
    let n: usize = parts[1]
        .parse()
        .map_err(|_| SpectralError::CacheFormat("bad vertex count".into()))?;
    let m: usize = parts[2]
        .parse()
        .map_err(|_| SpectralError::CacheFormat("bad order".into()))?;
    let mut read_row = |expected: usize| -> Result<Vec<f64>, SpectralError> {
        let line = lines
            .next()
            .ok_or_else(|| SpectralError::CacheFormat("truncated cache".into()))??;
        let row: Vec<f64> = line
            .split(',')
            .map(|t| {
                t.parse()
                    .map_err(|_| SpectralError::CacheFormat(format!("bad float {t:?}")))
            })
            .collect::<Result<_, _>>()?;
        if row.len() != expected {
            return Err(SpectralError::CacheFormat(format!(
                "row of {} values, expected {expected}",
                row.len()
            )));
        }
        Ok(row)
    };
    let eigenvalues = read_row(m + 1)?;
    let weights = read_row(n)?;
    let total = weights.iter().sum();
    let mut eigenfunctions = Vec::with_capacity(m + 1);
    for _ in 0..=m {
        eigenfunctions.push(DVector::from_vec(read_row(n)?));
    }
    Ok(SpectralBasis {
        eigenvalues,
        eigenfunctions,
        mass: MassWeights { weights, total },
    })
}

/// Binary cache of a basis (little-endian f64 payload behind a short
/// header); selected over CSV by a pipeline flag.
pub fn save_basis_bin(basis: &SpectralBasis, path: &Path) -> Result<(), SpectralError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    out.write_all(b"NRSB")?;
    out.write_all(&(basis.vertex_count() as u64).to_le_bytes())?;
    out.write_all(&(basis.order() as u64).to_le_bytes())?;
    for &v in &basis.eigenvalues {
        out.write_all(&v.to_le_bytes())?;
    }
    for &w in &basis.mass.weights {
        out.write_all(&w.to_le_bytes())?;
    }
    for phi in &basis.eigenfunctions {
        for &x in phi.as_slice() {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn load_basis_bin(path: &Path) -> Result<SpectralBasis, SpectralError> {
    let data = std::fs::read(path)?;
    if data.len() < 20 || &data[0..4] != b"NRSB" {
        return Err(SpectralError::CacheFormat("bad magic".into()));
    }
    let n = u64::from_le_bytes(data[4..12].try_into().unwrap()) as usize;
    let m = u64::from_le_bytes(data[12..20].try_into().unwrap()) as usize;
    let needed = 20 + 8 * ((m + 1) + n + (m + 1) * n);
    if data.len() != needed {
        return Err(SpectralError::CacheFormat(format!(
            "expected {needed} bytes, found {}",
            data.len()
        )));
    }
    let mut offset = 20;
    let mut next = || {
        let v = f64::from_le_bytes(data[offset..offset + 8].try_into().unwrap());
        offset += 8;
        v
    };
    let eigenvalues: Vec<f64> = (0..=m).map(|_| next()).collect();
    let weights: Vec<f64> = (0..n).map(|_| next()).collect();
    let total = weights.iter().sum();
    let eigenfunctions: Vec<DVector<f64>> = (0..=m)
        .map(|_| DVector::from_fn(n, |_, _| next()))
        .collect();
    Ok(SpectralBasis {
        eigenvalues,
        eigenfunctions,
        mass: MassWeights { weights, total },
    })
}

fn join_floats(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:.17e}"))
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{icosphere, unit_cube};
    use nalgebra::{DMatrix, Point3};

    fn sphere_basis(m: usize) -> SpectralBasis {
        spectral_basis(&icosphere(3), m).unwrap()
    }

    #[test]
    fn equilateral_triangle_weights_are_equal() {
        let tri = TriangleMesh::new(
            "tri",
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.5, 3f64.sqrt() / 2.0, 0.0),
                Point3::new(0.5, 3f64.sqrt() / 6.0, 1.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let (l, _) = cotangent_laplacian(&tri).unwrap();
        let d = l.to_dense();
        let w01 = -d[(0, 1)];
        let w12 = -d[(1, 2)];
        let w02 = -d[(0, 2)];
        assert!((w01 - w12).abs() < 1e-12);
        assert!((w01 - w02).abs() < 1e-12);
        assert!(w01 > 0.0);
    }

    #[test]
    fn constant_vector_is_in_null_space() {
        let mesh = icosphere(2);
        let (l, _) = cotangent_laplacian(&mesh).unwrap();
        let ones = vec![1.0; mesh.vertex_count()];
        let mut out = vec![0.0; mesh.vertex_count()];
        l.mul_vec(&ones, &mut out);
        let scale: f64 = l.diagonal().iter().map(|d| d.abs()).fold(0.0, f64::max);
        for &v in &out {
            assert!(v.abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn stiffness_matches_dense_brute_force() {
        // Independent dense assembly: loop over vertex pairs, find shared
        // triangles, sum cotangents of opposite angles.
        let mesh = icosphere(1); // 42 vertices
        let n = mesh.vertex_count();
        let (l, _) = cotangent_laplacian(&mesh).unwrap();
        let mut dense = DMatrix::<f64>::zeros(n, n);
        for u in 0..n {
            for v in 0..n {
                if u == v {
                    continue;
                }
                let mut w = 0.0;
                for f in mesh.faces() {
                    if f.contains(&u) && f.contains(&v) {
                        let other = *f.iter().find(|&&x| x != u && x != v).unwrap();
                        let a = mesh.vertices()[u] - mesh.vertices()[other];
                        let b = mesh.vertices()[v] - mesh.vertices()[other];
                        let cross = a.cross(&b).norm();
                        if cross > 0.0 {
                            w += 0.5 * (a.dot(&b) / cross);
                        }
                    }
                }
                dense[(u, v)] = -w;
                dense[(u, u)] += w;
            }
        }
        let ours = l.to_dense();
        let err = (&ours - &dense).norm();
        assert!(err < 1e-10 * dense.norm().max(1.0), "err {err}");
    }

    #[test]
    fn basis_invariants_hold() {
        let basis = sphere_basis(10);
        let lam = &basis.eigenvalues;
        assert!(lam[0].abs() <= 1e-6 * lam[1]);
        for i in 1..lam.len() {
            assert!(lam[i] >= lam[i - 1] - 1e-12);
        }
        // mass-orthonormality
        for i in 0..lam.len() {
            for j in i..lam.len() {
                let mut acc = 0.0;
                for v in 0..basis.vertex_count() {
                    acc += basis.mass.weights[v]
                        * basis.eigenfunctions[i][v]
                        * basis.eigenfunctions[j][v];
                }
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((acc - expected).abs() < 1e-6, "G[{i},{j}] = {acc}");
            }
        }
        // constant first eigenfunction
        let phi0 = &basis.eigenfunctions[0];
        let mean = phi0.iter().sum::<f64>() / phi0.len() as f64;
        for &x in phi0.iter() {
            assert!((x - mean).abs() < 1e-6 * mean.abs());
        }
    }

    #[test]
    fn sphere_spectrum_is_k_k_plus_one() {
        // Unit sphere Laplacian eigenvalues are k(k+1) with multiplicity
        // 2k+1: 0, then 2,2,2, then 6,6,6,6,6, ...
        let basis = sphere_basis(15);
        let lam = &basis.eigenvalues;
        let expected = [
            0.0, 2.0, 2.0, 2.0, 6.0, 6.0, 6.0, 6.0, 6.0, 12.0, 12.0, 12.0, 12.0, 12.0, 12.0, 12.0,
        ];
        for (i, &e) in expected.iter().enumerate() {
            if e == 0.0 {
                assert!(lam[i].abs() < 1e-6 * lam[1]);
            } else {
                assert!(
                    (lam[i] - e).abs() < 0.05 * e,
                    "lambda_{i} = {} expected {e}",
                    lam[i]
                );
            }
        }
    }

    #[test]
    fn eigendecompose_matches_dense_oracle() {
        let mesh = icosphere(2); // 162 vertices
        let (l, mass) = cotangent_laplacian(&mesh).unwrap();
        let m = 12;
        let basis = eigendecompose(&l, &mass, m).unwrap();

        // dense generalized oracle through the same similarity transform
        let n = mesh.vertex_count();
        let inv_sqrt: Vec<f64> = mass.weights.iter().map(|w| 1.0 / w.sqrt()).collect();
        let dense = l.scaled(&inv_sqrt, &inv_sqrt).to_dense();
        let eig = dense.symmetric_eigen();
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| a.total_cmp(b));

        let scale = basis.eigenvalues[m];
        for i in 0..=m {
            assert!(
                (basis.eigenvalues[i] - vals[i]).abs() <= 1e-6 * scale,
                "eigenvalue {i}: {} vs {}",
                basis.eigenvalues[i],
                vals[i]
            );
        }

        // subspace agreement for simple (non-degenerate) eigenvalues:
        // |cos angle| between our phi and the dense one in the mass metric
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        for i in 0..=m {
            let simple = (i == 0 || (vals[i] - vals[i - 1]).abs() > 0.05 * scale)
                && (i == m || (vals[i + 1] - vals[i]).abs() > 0.05 * scale);
            if !simple {
                continue;
            }
            let col = eig.eigenvectors.column(order[i]);
            let mut dot = 0.0;
            let mut norm_dense = 0.0;
            for v in 0..n {
                let phi_dense = col[v] * inv_sqrt[v];
                dot += mass.weights[v] * phi_dense * basis.eigenfunctions[i][v];
                norm_dense += mass.weights[v] * phi_dense * phi_dense;
            }
            let cosang = (dot / norm_dense.sqrt()).abs();
            assert!(
                (1.0 - cosang) < 1e-8,
                "subspace angle too large at {i}: cos = {cosang}"
            );
        }
    }

    #[test]
    fn biharmonic_is_a_metric_on_samples() {
        let basis = spectral_basis(&icosphere(2), 20).unwrap();
        let n = basis.vertex_count();
        assert_eq!(biharmonic_distance(&basis, 5, 5), 0.0);
        let mut seed = 12345u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 33) as usize % n
        };
        for _ in 0..1000 {
            let (x, y, z) = (next(), next(), next());
            let dxy = biharmonic_distance(&basis, x, y);
            let dyx = biharmonic_distance(&basis, y, x);
            assert!((dxy - dyx).abs() < 1e-12);
            let dxz = biharmonic_distance(&basis, x, z);
            let dzy = biharmonic_distance(&basis, z, y);
            assert!(dxy <= dxz + dzy + 1e-12);
        }
    }

    #[test]
    fn basis_cache_roundtrip() {
        let basis = spectral_basis(&unit_cube(), 4).unwrap();
        let dir = tempfile::tempdir().unwrap();

        let csv = dir.path().join("b.csv");
        save_basis_csv(&basis, &csv).unwrap();
        let back = load_basis_csv(&csv).unwrap();
        assert_eq!(back.eigenvalues, basis.eigenvalues);
        assert_eq!(back.mass.weights, basis.mass.weights);
        for (a, b) in back.eigenfunctions.iter().zip(&basis.eigenfunctions) {
            assert_eq!(a.as_slice(), b.as_slice());
        }

        let bin = dir.path().join("b.bin");
        save_basis_bin(&basis, &bin).unwrap();
        let back = load_basis_bin(&bin).unwrap();
        assert_eq!(back.eigenvalues, basis.eigenvalues);
        for (a, b) in back.eigenfunctions.iter().zip(&basis.eigenfunctions) {
            assert_eq!(a.as_slice(), b.as_slice());
        }
    }
}
