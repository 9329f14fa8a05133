//! Intrinsic spatial pyramid matching.
//!
//! The second Laplacian eigenfunction is the smoothest scalar field on the
//! surface, so its level sets give a stable intrinsic partition. Vertices
//! are split into `R` equal-mass bins along that eigenfunction, per-bin
//! soft-assignment histograms are mean-pooled, and the concatenation is
//! compared under an order-inversion-tolerant L1 distance (the
//! eigenfunction sign is arbitrary).

use super::{SpectralBasis, SpectralError};
use nalgebra::DMatrix;

/// Bin index per vertex: vertices sorted by the second eigenfunction, cut
/// into `R` equal-mass spans using the midpoint of each vertex's own mass.
fn partition(basis: &SpectralBasis, r: usize) -> Vec<usize> {
    let phi1 = &basis.eigenfunctions[1];
    let n = basis.vertex_count();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| phi1[a].total_cmp(&phi1[b]).then(a.cmp(&b)));
    let total: f64 = basis.mass.total;
    let mut bins = vec![0usize; n];
    let mut cum = 0.0;
    for &v in &order {
        let mid = cum + basis.mass.weights[v] / 2.0;
        let b = ((r as f64) * mid / total).floor() as usize;
        bins[v] = b.min(r - 1);
        cum += basis.mass.weights[v];
    }
    bins
}

/// Concatenated per-bin mass-weighted mean of the code rows, bins ordered
/// along the second eigenfunction.
pub fn ispm_histogram(
    basis: &SpectralBasis,
    codes: &DMatrix<f64>,
    r: usize,
) -> Result<Vec<f64>, SpectralError> {
    if codes.nrows() != basis.vertex_count() {
        return Err(SpectralError::DimensionMismatch(
            codes.nrows(),
            basis.vertex_count(),
        ));
    }
    assert!(r >= 1);
    let k = codes.ncols();
    let bins = partition(basis, r);
    let mut hist = vec![0.0; r * k];
    let mut bin_mass = vec![0.0; r];
    for v in 0..codes.nrows() {
        let w = basis.mass.weights[v];
        bin_mass[bins[v]] += w;
        for c in 0..k {
            hist[bins[v] * k + c] += w * codes[(v, c)];
        }
    }
    for b in 0..r {
        if bin_mass[b] > 0.0 {
            for c in 0..k {
                hist[b * k + c] /= bin_mass[b];
            }
        }
    }
    Ok(hist)
}

/// Minimum L1 distance over the two sign hypotheses: identity and bin-order
/// reversal of the second histogram.
pub fn ispm_distance(h1: &[f64], h2: &[f64], r: usize) -> Result<f64, SpectralError> {
    if h1.len() != h2.len() {
        return Err(SpectralError::DimensionMismatch(h1.len(), h2.len()));
    }
    assert!(r >= 1 && h1.len() % r == 0);
    let k = h1.len() / r;
    let direct: f64 = h1.iter().zip(h2).map(|(a, b)| (a - b).abs()).sum();
    let mut reversed = 0.0;
    for b in 0..r {
        let rb = r - 1 - b;
        for c in 0..k {
            reversed += (h1[b * k + c] - h2[rb * k + c]).abs();
        }
    }
    Ok(direct.min(reversed))
}

/// Reverse the bin blocks of a histogram (sign-flip image).
pub fn reverse_bins(h: &[f64], r: usize) -> Vec<f64> {
    let k = h.len() / r;
    let mut out = vec![0.0; h.len()];
    for b in 0..r {
        out[(r - 1 - b) * k..(r - b) * k].copy_from_slice(&h[b * k..(b + 1) * k]);
    }
    out
}
