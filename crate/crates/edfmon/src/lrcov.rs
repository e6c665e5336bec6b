//! Kernel-based (HAC) estimation of the long-run covariance matrix of the
//! indicator series,
//!
//! ```text
//! Σ̂ = Γ̂₀ + Σ_{r≥1} k(r/S)·(Γ̂_r + Γ̂_rᵀ),
//! Γ̂_r = (1/m) Σ_{i=1}^{m−r} (Y_i − Ȳ)(Y_{i+r} − Ȳ)ᵀ,
//! ```
//!
//! with the quadratic spectral kernel and the AR(1)-based automatic bandwidth
//! as the default, and the Bartlett kernel as an alternative. No prewhitening.

use crate::error::{Error, Result};
use crate::matrix::{cholesky, SpdMatrix};
use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// AR(1) coefficients are clamped to this magnitude so the plug-in bandwidth
/// stays finite on near-unit-root indicator series.
const RHO_CLAMP: f64 = 0.97;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    QuadraticSpectral,
    Bartlett,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    /// Andrews-style plug-in from per-coordinate AR(1) fits with equal weights.
    AndrewsAr1Plugin,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrcovSpec {
    pub kernel: KernelKind,
    pub bandwidth: Bandwidth,
    /// Added once to the diagonal if the estimate fails to factorize.
    pub ridge: f64,
}

impl Default for LrcovSpec {
    fn default() -> Self {
        Self {
            kernel: KernelKind::QuadraticSpectral,
            bandwidth: Bandwidth::AndrewsAr1Plugin,
            ridge: 1e-10,
        }
    }
}

impl LrcovSpec {
    pub fn validate(&self) -> Result<()> {
        if let Bandwidth::Fixed(s) = self.bandwidth {
            if !(s > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "fixed bandwidth must be positive, got {s}"
                )));
            }
        }
        if self.ridge < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "ridge must be nonnegative, got {}",
                self.ridge
            )));
        }
        Ok(())
    }
}

/// Quadratic spectral kernel: k(0) = 1 and
/// k(x) = 25/(12π²x²)·[sin(6πx/5)/(6πx/5) − cos(6πx/5)] for x ≠ 0.
pub fn qs_kernel(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    let z = 6.0 * PI * x / 5.0;
    25.0 / (12.0 * PI * PI * x * x) * (z.sin() / z - z.cos())
}

/// Bartlett kernel: k(x) = max(0, 1 − |x|).
pub fn bartlett_kernel(x: f64) -> f64 {
    (1.0 - x.abs()).max(0.0)
}

/// True long-run covariance of i.i.d. indicators at uniform grid
/// probabilities i/(p+1): entries min(i,j)/(p+1) − ij/(p+1)².
pub fn iid_grid_covariance(p: usize) -> SpdMatrix {
    let q = (p + 1) as f64;
    let mut entries = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..p {
            let (fi, fj) = ((i + 1) as f64 / q, (j + 1) as f64 / q);
            entries[i * p + j] = fi.min(fj) - fi * fj;
        }
    }
    SpdMatrix::new(p, entries).expect("symmetric by construction")
}

/// Per-coordinate AR(1) least-squares fits (ρ̂ clamped, innovation variance)
/// on already-centered columns. Errors on constant coordinates.
fn ar1_fits(centered: &[Vec<f64>]) -> Result<Vec<(f64, f64)>> {
    let mut fits = Vec::with_capacity(centered.len());
    for (coord, col) in centered.iter().enumerate() {
        let m = col.len();
        let mut sxy = 0.0;
        let mut sxx = 0.0;
        for t in 1..m {
            sxy += col[t] * col[t - 1];
            sxx += col[t - 1] * col[t - 1];
        }
        if sxx == 0.0 || col.iter().all(|&v| v == col[0]) {
            return Err(Error::DegenerateSeries { coord });
        }
        let rho = (sxy / sxx).clamp(-RHO_CLAMP, RHO_CLAMP);
        let mut ssr = 0.0;
        for t in 1..m {
            let e = col[t] - rho * col[t - 1];
            ssr += e * e;
        }
        let sigma2 = ssr / (m - 1) as f64;
        fits.push((rho, sigma2));
    }
    Ok(fits)
}

fn andrews_bandwidth(fits: &[(f64, f64)], m: usize, kernel: KernelKind) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for &(rho, sigma2) in fits {
        let s4 = sigma2 * sigma2;
        let omr = 1.0 - rho;
        den += s4 / omr.powi(4);
        num += match kernel {
            KernelKind::QuadraticSpectral => 4.0 * rho * rho * s4 / omr.powi(8),
            KernelKind::Bartlett => {
                4.0 * rho * rho * s4 / (omr.powi(6) * (1.0 + rho) * (1.0 + rho))
            }
        };
    }
    let alpha = num / den;
    match kernel {
        KernelKind::QuadraticSpectral => 1.3221 * (alpha * m as f64).powf(0.2),
        KernelKind::Bartlett => 1.1447 * (alpha * m as f64).powf(1.0 / 3.0),
    }
}

/// HAC estimate of the long-run covariance matrix from m rows of indicator
/// vectors (raw 0/1 rows accepted; columns are centered internally).
///
/// If the estimate fails to factorize, `ridge·I` is added once and the result
/// re-validated.
pub fn estimate_lrcov(rows: ArrayView2<f64>, spec: &LrcovSpec) -> Result<SpdMatrix> {
    spec.validate()?;
    let (m, p) = rows.dim();
    if m < 2 {
        return Err(Error::TooFewObservations { needed: 2, got: m });
    }
    if p == 0 {
        return Err(Error::EmptySample);
    }

    let mut centered: Vec<Vec<f64>> = Vec::with_capacity(p);
    for a in 0..p {
        let col = rows.column(a);
        let mean = col.sum() / m as f64;
        centered.push(col.iter().map(|v| v - mean).collect());
    }
    let fits = ar1_fits(&centered)?;

    let bandwidth = match spec.bandwidth {
        Bandwidth::Fixed(s) => s,
        Bandwidth::AndrewsAr1Plugin => andrews_bandwidth(&fits, m, spec.kernel),
    };

    // Lag truncation: the QS kernel decays fast enough that lags beyond 10·S
    // contribute less than 1e-6; the Bartlett kernel vanishes at lag ≥ S.
    let max_lag = if bandwidth.is_finite() && bandwidth > 0.0 {
        let cap = match spec.kernel {
            KernelKind::QuadraticSpectral => (10.0 * bandwidth).ceil() as usize,
            KernelKind::Bartlett => bandwidth.ceil() as usize,
        };
        cap.min(m - 1)
    } else {
        0
    };

    let mut sigma = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            let mut acc = 0.0;
            for t in 0..m {
                acc += centered[i][t] * centered[j][t];
            }
            let g0 = acc / m as f64;
            sigma[i * p + j] = g0;
            sigma[j * p + i] = g0;
        }
    }
    for r in 1..=max_lag {
        let w = match spec.kernel {
            KernelKind::QuadraticSpectral => qs_kernel(r as f64 / bandwidth),
            KernelKind::Bartlett => bartlett_kernel(r as f64 / bandwidth),
        };
        if w == 0.0 {
            continue;
        }
        for i in 0..p {
            for j in 0..p {
                let mut acc = 0.0;
                for t in 0..m - r {
                    acc += centered[i][t] * centered[j][t + r];
                }
                let g = w * acc / m as f64;
                // k(r/S)·(Γ̂_r + Γ̂_rᵀ)
                sigma[i * p + j] += g;
                sigma[j * p + i] += g;
            }
        }
    }

    let mut out = SpdMatrix::new(p, sigma)?;
    if cholesky(&out).is_err() {
        out.add_ridge(spec.ridge);
        cholesky(&out)?;
    }
    Ok(out)
}
