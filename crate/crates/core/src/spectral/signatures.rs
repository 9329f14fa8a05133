//! Per-vertex spectral signatures: HKS, WKS, SI-HKS, and SGWS.

use super::{SpectralBasis, SpectralError};
use nalgebra::DMatrix;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignatureMethod {
    Hks,
    Wks,
    SiHks,
    Sgws,
}

impl SignatureMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            SignatureMethod::Hks => "hks",
            SignatureMethod::Wks => "wks",
            SignatureMethod::SiHks => "sihks",
            SignatureMethod::Sgws => "sgws",
        }
    }
}

/// A per-vertex descriptor field: one row per vertex, one column per sample
/// of the method's grid (times, energies, or scales).
#[derive(Debug, Clone)]
pub struct PointSignature {
    pub method: SignatureMethod,
    /// vertex_count x sample_count
    pub rows: DMatrix<f64>,
    pub grid: Vec<f64>,
}

impl PointSignature {
    pub fn vertex_count(&self) -> usize {
        self.rows.nrows()
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn row(&self, v: usize) -> Vec<f64> {
        self.rows.row(v).iter().copied().collect()
    }

    /// CSV export, one row per vertex.
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(
            out,
            "# {} signature, {} vertices, {} samples",
            self.method.tag(),
            self.vertex_count(),
            self.dim()
        )?;
        for v in 0..self.vertex_count() {
            let row: Vec<String> = self
                .rows
                .row(v)
                .iter()
                .map(|x| format!("{x:.9e}"))
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// The conventional HKS time grid: 64 logarithmic samples over
/// `[4 ln 10 / lambda_m, 4 ln 10 / lambda_1]`.
pub fn default_hks_times(basis: &SpectralBasis) -> Vec<f64> {
    let lam = basis.nonzero_eigenvalues();
    let lam_min = lam[0];
    let lam_max = *lam.last().unwrap();
    let t_min = 4.0 * 10f64.ln() / lam_max;
    let t_max = 4.0 * 10f64.ln() / lam_min;
    log_space(t_min, t_max, 64)
}

fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| {
            let f = i as f64 / (count - 1) as f64;
            (llo + f * (lhi - llo)).exp()
        })
        .collect()
}

/// Heat kernel signature: `hks(v, t) = sum_i exp(-lambda_i t) phi_i(v)^2`.
pub fn hks(basis: &SpectralBasis, times: &[f64]) -> PointSignature {
    assert!(!times.is_empty(), "hks needs at least one time sample");
    let n = basis.vertex_count();
    let mut rows = DMatrix::zeros(n, times.len());
    for (ti, &t) in times.iter().enumerate() {
        for (lam, phi) in basis.eigenvalues.iter().zip(&basis.eigenfunctions) {
            let decay = (-lam * t).exp();
            if decay == 0.0 {
                continue;
            }
            for v in 0..n {
                rows[(v, ti)] += decay * phi[v] * phi[v];
            }
        }
    }
    PointSignature {
        method: SignatureMethod::Hks,
        rows,
        grid: times.to_vec(),
    }
}

/// The conventional WKS bandwidth: seven energy-grid steps.
pub fn default_wks_sigma(basis: &SpectralBasis, energy_count: usize) -> f64 {
    let lam = basis.nonzero_eigenvalues();
    let e_min = lam[0].ln();
    let e_max = lam[lam.len() - 1].ln();
    7.0 * (e_max - e_min) / (energy_count - 1) as f64
}

/// Wave kernel signature over a log-eigenvalue energy grid spanning
/// `[ln lambda_1, ln lambda_m]`:
/// `wks(v, e) = C_e sum_i phi_i(v)^2 exp(-(e - ln lambda_i)^2 / 2 sigma^2)`
/// with `C_e` normalizing the Gaussian weights to one.
pub fn wks(basis: &SpectralBasis, energy_count: usize, sigma: f64) -> PointSignature {
    let lam = basis.nonzero_eigenvalues();
    assert!(
        lam.len() >= 2,
        "wks needs at least two nonzero eigenvalues"
    );
    let n = basis.vertex_count();
    let e_min = lam[0].ln();
    let e_max = lam[lam.len() - 1].ln();
    let energies: Vec<f64> = (0..energy_count)
        .map(|i| e_min + (e_max - e_min) * i as f64 / (energy_count - 1) as f64)
        .collect();

    let mut rows = DMatrix::zeros(n, energy_count);
    for (ei, &e) in energies.iter().enumerate() {
        let weights: Vec<f64> = lam
            .iter()
            .map(|&l| {
                let d = e - l.ln();
                (-d * d / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        let norm: f64 = weights.iter().sum();
        if norm == 0.0 {
            continue;
        }
        for (i, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let phi = &basis.eigenfunctions[i + 1];
            let scaled = w / norm;
            for v in 0..n {
                rows[(v, ei)] += scaled * phi[v] * phi[v];
            }
        }
    }
    PointSignature {
        method: SignatureMethod::Wks,
        rows,
        grid: energies,
    }
}

/// Desk-scale SI-HKS grid: base-2 log-times from 1 to 20 in steps of 1/8.
pub fn default_sihks_tau_grid() -> Vec<f64> {
    let mut taus = Vec::new();
    let mut tau = 1.0;
    while tau <= 20.0 + 1e-9 {
        taus.push(tau);
        tau += 0.125;
    }
    taus
}

/// Scale-invariant HKS: log of the HKS sampled at `t = 2^tau`, discrete
/// derivative in `tau`, then the first `num_frequencies` magnitudes of its
/// discrete Fourier transform. Uniform scaling of the mesh shifts the
/// log-HKS sequence along `tau`, which the magnitude spectrum discards.
pub fn sihks(
    basis: &SpectralBasis,
    tau_grid: &[f64],
    num_frequencies: usize,
) -> Result<PointSignature, SpectralError> {
    if tau_grid.len() < 2 {
        return Err(SpectralError::Numerical(
            "sihks needs at least two tau samples".into(),
        ));
    }
    let step = tau_grid[1] - tau_grid[0];
    for w in tau_grid.windows(2) {
        if ((w[1] - w[0]) - step).abs() > 1e-9 * step.abs() {
            return Err(SpectralError::Numerical(
                "sihks tau grid must be uniform in log-time".into(),
            ));
        }
    }
    let times: Vec<f64> = tau_grid.iter().map(|&tau| 2f64.powf(tau)).collect();
    let heat = hks(basis, &times);
    let n = basis.vertex_count();
    let t = times.len();
    let deriv_len = t - 1;
    let mut rows = DMatrix::zeros(n, num_frequencies);
    let mut deriv = vec![0.0; deriv_len];
    for v in 0..n {
        for i in 0..deriv_len {
            let a = heat.rows[(v, i)].max(f64::MIN_POSITIVE);
            let b = heat.rows[(v, i + 1)].max(f64::MIN_POSITIVE);
            deriv[i] = b.ln() - a.ln();
        }
        for k in 0..num_frequencies {
            let mut re = 0.0;
            let mut im = 0.0;
            for (i, &d) in deriv.iter().enumerate() {
                let angle = -2.0 * std::f64::consts::PI * k as f64 * i as f64 / deriv_len as f64;
                re += d * angle.cos();
                im += d * angle.sin();
            }
            rows[(v, k)] = (re * re + im * im).sqrt();
        }
    }
    Ok(PointSignature {
        method: SignatureMethod::SiHks,
        rows,
        grid: (0..num_frequencies).map(|k| k as f64).collect(),
    })
}

/// Cubic-spline band-pass kernel: monomial rise below the band, the cubic
/// `x^3 - 6x^2 + 11x - 5` on `[1, 2]`, quadratic decay above. Continuous
/// with value 1 at both knots.
fn spline_kernel(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < 1.0 {
        x * x
    } else if x <= 2.0 {
        -5.0 + 11.0 * x - 6.0 * x * x + x * x * x
    } else {
        4.0 / (x * x)
    }
}

/// Spectral graph wavelet signature.
///
/// Channel 0 is a low-pass scaling function
/// `h(lambda) = exp(-(lambda / (0.6 g))^4)` with `g = sqrt(lambda_1
/// lambda_m)`; channels `1..=level` are band-passes `g(t_j lambda)` with the
/// spline kernel above and scales `t_j` geometric between `2 / lambda_m`
/// and `2 / lambda_1`, so the bands sweep the spectrum from fine to coarse.
/// Every channel has the squared-eigenfunction form
/// `sum_i k(lambda_i) phi_i(v)^2`.
pub fn sgws(basis: &SpectralBasis, resolution_level: usize) -> PointSignature {
    assert!(resolution_level >= 1);
    let lam = basis.nonzero_eigenvalues();
    assert!(lam.len() >= 2, "sgws needs at least two nonzero eigenvalues");
    let lam_min = lam[0];
    let lam_max = lam[lam.len() - 1];
    let geo_mid = (lam_min * lam_max).sqrt();

    let mut kernels: Vec<Box<dyn Fn(f64) -> f64>> = Vec::new();
    let cutoff = 0.6 * geo_mid;
    kernels.push(Box::new(move |l: f64| (-((l / cutoff).powi(4))).exp()));
    for j in 0..resolution_level {
        let f = if resolution_level == 1 {
            0.0
        } else {
            j as f64 / (resolution_level - 1) as f64
        };
        // geometric sweep of the band scale
        let t = 2.0 / (lam_max.powf(1.0 - f) * lam_min.powf(f));
        kernels.push(Box::new(move |l: f64| spline_kernel(t * l)));
    }

    let n = basis.vertex_count();
    let mut rows = DMatrix::zeros(n, kernels.len());
    for (ci, kernel) in kernels.iter().enumerate() {
        for (i, &l) in basis.eigenvalues.iter().enumerate() {
            let w = kernel(l);
            if w == 0.0 {
                continue;
            }
            let phi = &basis.eigenfunctions[i];
            for v in 0..n {
                rows[(v, ci)] += w * phi[v] * phi[v];
            }
        }
    }
    PointSignature {
        method: SignatureMethod::Sgws,
        rows,
        grid: (0..kernels.len()).map(|c| c as f64).collect(),
    }
}
