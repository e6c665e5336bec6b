//! Copula samplers parameterized by Kendall's tau: Marshall–Olkin frailty
//! constructions for the Archimedean families (Gumbel–Hougaard via a
//! positive-stable frailty, Clayton via a gamma frailty, Frank via a
//! logarithmic-series frailty) and an equicorrelated Gaussian copula.

use crate::error::{Error, Result};
use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CopulaFamily {
    Independence,
    GumbelHougaard,
    Clayton,
    Frank,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopulaSpec {
    pub family: CopulaFamily,
    /// Kendall's tau; ignored for the independence family.
    #[serde(default)]
    pub tau: f64,
    pub d: usize,
}

impl CopulaSpec {
    pub fn independence(d: usize) -> Self {
        Self {
            family: CopulaFamily::Independence,
            tau: 0.0,
            d,
        }
    }

    pub fn new(family: CopulaFamily, tau: f64, d: usize) -> Result<Self> {
        let spec = Self { family, tau, d };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 && self.family != CopulaFamily::Independence {
            return Err(Error::InvalidParameter(format!(
                "copula dimension must be at least 2, got {}",
                self.d
            )));
        }
        match self.family {
            CopulaFamily::Independence => Ok(()),
            // The frailty constructions require theta > 0, hence positive
            // dependence, in every dimension.
            CopulaFamily::GumbelHougaard | CopulaFamily::Clayton => {
                if self.tau > 0.0 && self.tau < 1.0 {
                    Ok(())
                } else {
                    Err(Error::TauOutOfRange {
                        tau: self.tau,
                        family: family_name(self.family),
                    })
                }
            }
            // The theta inversion is bisected on [1e-6, 50].
            CopulaFamily::Frank => frank_theta_from_tau(self.tau).map(|_| ()),
            CopulaFamily::Gaussian => {
                if self.tau > -1.0 && self.tau < 1.0 {
                    Ok(())
                } else {
                    Err(Error::TauOutOfRange {
                        tau: self.tau,
                        family: "gaussian",
                    })
                }
            }
        }
    }
}

fn family_name(f: CopulaFamily) -> &'static str {
    match f {
        CopulaFamily::Independence => "independence",
        CopulaFamily::GumbelHougaard => "gumbel-hougaard",
        CopulaFamily::Clayton => "clayton",
        CopulaFamily::Frank => "frank",
        CopulaFamily::Gaussian => "gaussian",
    }
}

/// First Debye function D₁(x) = (1/x)∫₀ˣ t/(eᵗ−1) dt.
pub fn debye1(x: f64) -> f64 {
    assert!(x > 0.0);
    // Adaptive Simpson on t/(e^t - 1), with the series form near 0 where the
    // ratio is numerically delicate.
    fn integrand(t: f64) -> f64 {
        if t < 1e-8 {
            1.0 - t / 2.0 + t * t / 12.0
        } else {
            t / t.exp_m1()
        }
    }
    fn simpson(f: fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        (b - a) / 6.0 * (f(a) + 4.0 * f(c) + f(b))
    }
    fn adaptive(f: fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let c = 0.5 * (a + b);
        let left = simpson(f, a, c);
        let right = simpson(f, c, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            adaptive(f, a, c, left, tol / 2.0, depth - 1)
                + adaptive(f, c, b, right, tol / 2.0, depth - 1)
        }
    }
    adaptive(integrand, 0.0, x, simpson(integrand, 0.0, x), 1e-12, 40) / x
}

/// Kendall's tau of the Frank copula with parameter theta > 0.
pub fn frank_tau(theta: f64) -> f64 {
    1.0 - 4.0 / theta * (1.0 - debye1(theta))
}

/// Inverts tau = 1 − (4/θ)(1 − D₁(θ)) by bisection on θ ∈ [1e-6, 50].
pub fn frank_theta_from_tau(tau: f64) -> Result<f64> {
    if !(tau > 0.0) || tau >= frank_tau(50.0) {
        return Err(Error::TauOutOfRange { tau, family: "frank" });
    }
    let (mut lo, mut hi) = (1e-6, 50.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if frank_tau(mid) < tau {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-10 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Positive-stable random variable with Laplace transform exp(−t^alpha),
/// alpha in (0,1), by the Chambers–Mallows–Stuck/Kanter representation.
fn sample_positive_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let theta: f64 = rng.gen_range(0.0..PI);
    let w: f64 = Exp1.sample(rng);
    let a = ((1.0 - alpha) * theta).sin()
        * (alpha * theta).sin().powf(alpha / (1.0 - alpha))
        / theta.sin().powf(1.0 / (1.0 - alpha));
    (a / w).powf((1.0 - alpha) / alpha)
}

/// Logarithmic-series variable with pmf p^k/(−k·log(1−p)), Kemp's algorithm.
fn sample_log_series<R: Rng + ?Sized>(p: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.gen();
    if u > p {
        return 1.0;
    }
    let lq = (-p).ln_1p();
    let q = -(rng.gen::<f64>() * lq).exp_m1(); // 1 − (1−p)^U
    if u < q * q {
        (1.0 + u.ln() / q.ln()).floor()
    } else if u > q {
        1.0
    } else {
        2.0
    }
}

/// Draws n rows from the copula; every entry lies strictly inside (0,1).
pub fn sample_copula<R: Rng + ?Sized>(
    spec: &CopulaSpec,
    n: usize,
    rng: &mut R,
) -> Result<Array2<f64>> {
    spec.validate()?;
    let d = spec.d;
    let mut out = Array2::zeros((n, d));
    match spec.family {
        CopulaFamily::Independence => {
            for v in out.iter_mut() {
                *v = rng.gen::<f64>();
            }
        }
        CopulaFamily::GumbelHougaard => {
            let theta = 1.0 / (1.0 - spec.tau);
            let alpha = 1.0 / theta;
            for i in 0..n {
                let v = sample_positive_stable(alpha, rng);
                for j in 0..d {
                    let e: f64 = Exp1.sample(rng);
                    out[[i, j]] = (-(e / v).powf(alpha)).exp();
                }
            }
        }
        CopulaFamily::Clayton => {
            let theta = 2.0 * spec.tau / (1.0 - spec.tau);
            let gamma = Gamma::new(1.0 / theta, 1.0)
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            for i in 0..n {
                let v = gamma.sample(rng);
                for j in 0..d {
                    let e: f64 = Exp1.sample(rng);
                    out[[i, j]] = (1.0 + e / v).powf(-1.0 / theta);
                }
            }
        }
        CopulaFamily::Frank => {
            let theta = frank_theta_from_tau(spec.tau)?;
            let p = -(-theta).exp_m1(); // 1 − e^{−θ}
            let em1 = (-theta).exp_m1(); // e^{−θ} − 1
            for i in 0..n {
                let v = sample_log_series(p, rng);
                for j in 0..d {
                    let e: f64 = Exp1.sample(rng);
                    // psi(s) = −(1/θ)·log(1 + e^{−s}(e^{−θ} − 1))
                    out[[i, j]] = -((-e / v).exp() * em1).ln_1p() / theta;
                }
            }
        }
        CopulaFamily::Gaussian => {
            let rho = (PI * spec.tau / 2.0).sin();
            // Cholesky factor of the equicorrelation matrix.
            let sigma = equicorrelation(d, rho)?;
            let l = crate::matrix::cholesky(&sigma)?;
            let phi = Normal::new(0.0, 1.0).expect("standard normal");
            let mut z = vec![0.0; d];
            for i in 0..n {
                for v in z.iter_mut() {
                    *v = StandardNormal.sample(rng);
                }
                for j in 0..d {
                    let mut acc = 0.0;
                    for t in 0..=j {
                        acc += l.get(j, t) * z[t];
                    }
                    out[[i, j]] = phi.cdf(acc);
                }
            }
        }
    }
    // Rank transforms downstream assume open-interval values.
    for v in out.iter_mut() {
        *v = v.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
    }
    Ok(out)
}

fn equicorrelation(d: usize, rho: f64) -> Result<crate::matrix::SpdMatrix> {
    let mut entries = vec![rho; d * d];
    for i in 0..d {
        entries[i * d + i] = 1.0;
    }
    crate::matrix::SpdMatrix::new(d, entries)
}

/// Empirical Kendall's tau via merge-sort inversion counting, O(n log n).
/// Assumes tie-free samples.
pub fn empirical_kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::TooFewObservations { needed: 2, got: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap());
    let mut ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();

    fn count_inversions(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
        let n = v.len();
        if n < 2 {
            return 0;
        }
        let mid = n / 2;
        let (left, right) = v.split_at_mut(mid);
        let mut inv = count_inversions(left, buf) + count_inversions(right, buf);
        buf.clear();
        let (mut i, mut j) = (0, 0);
        while i < left.len() && j < right.len() {
            if left[i] <= right[j] {
                buf.push(left[i]);
                i += 1;
            } else {
                inv += (left.len() - i) as u64;
                buf.push(right[j]);
                j += 1;
            }
        }
        buf.extend_from_slice(&left[i..]);
        buf.extend_from_slice(&right[j..]);
        v.copy_from_slice(buf);
        inv
    }

    let mut buf = Vec::with_capacity(n);
    let discordant = count_inversions(&mut ys, &mut buf);
    let pairs = (n as u64 * (n as u64 - 1) / 2) as f64;
    Ok(1.0 - 2.0 * discordant as f64 / pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn debye_and_frank_theta() {
        // Known value: theta for tau = 0.5 is about 5.7363.
        let theta = frank_theta_from_tau(0.5).unwrap();
        assert!((theta - 5.7363).abs() < 1e-3, "theta = {theta}");
        assert!((frank_tau(theta) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn kendall_tau_exact_cases() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(empirical_kendall_tau(&x, &y).unwrap(), 1.0);
        let rev = [0.4, 0.3, 0.2, 0.1];
        assert_eq!(empirical_kendall_tau(&x, &rev).unwrap(), -1.0);
    }

    #[test]
    fn kendall_tau_matches_naive_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 300;
        let x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| v + 0.5 * rng.gen::<f64>())
            .collect();
        let fast = empirical_kendall_tau(&x, &y).unwrap();
        let mut conc = 0i64;
        let mut disc = 0i64;
        for i in 0..n {
            for j in i + 1..n {
                let s = (x[i] - x[j]) * (y[i] - y[j]);
                if s > 0.0 {
                    conc += 1;
                } else {
                    disc += 1;
                }
            }
        }
        let naive = (conc - disc) as f64 / (conc + disc) as f64;
        assert!((fast - naive).abs() < 1e-12);
    }

    #[test]
    fn independence_margins_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let spec = CopulaSpec::independence(3);
        let u = sample_copula(&spec, 100_000, &mut rng).unwrap();
        for j in 0..3 {
            let mean = u.column(j).sum() / 100_000.0;
            assert!((mean - 0.5).abs() < 0.01, "column {j} mean {mean}");
        }
    }

    #[test]
    fn samples_inside_open_unit_cube() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for family in [
            CopulaFamily::GumbelHougaard,
            CopulaFamily::Clayton,
            CopulaFamily::Frank,
            CopulaFamily::Gaussian,
        ] {
            let spec = CopulaSpec::new(family, 0.5, 2).unwrap();
            let u = sample_copula(&spec, 20_000, &mut rng).unwrap();
            for v in u.iter() {
                assert!(*v > 0.0 && *v < 1.0);
            }
        }
    }

    #[test]
    fn samplers_reproduce_requested_tau() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 10_000;
        for (family, tol) in [
            (CopulaFamily::GumbelHougaard, 0.02),
            (CopulaFamily::Clayton, 0.02),
            (CopulaFamily::Frank, 0.03),
            (CopulaFamily::Gaussian, 0.02),
        ] {
            for tau in [0.3, 0.5, 0.6] {
                let spec = CopulaSpec::new(family, tau, 2).unwrap();
                let u = sample_copula(&spec, n, &mut rng).unwrap();
                let x: Vec<f64> = u.column(0).to_vec();
                let y: Vec<f64> = u.column(1).to_vec();
                let hat = empirical_kendall_tau(&x, &y).unwrap();
                assert!(
                    (hat - tau).abs() < tol,
                    "{family:?} tau {tau}: estimated {hat}"
                );
            }
        }
    }

    #[test]
    fn gaussian_correlation_matches_sine_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = CopulaSpec::new(CopulaFamily::Gaussian, 0.5, 2).unwrap();
        let u = sample_copula(&spec, 10_000, &mut rng).unwrap();
        let phi = Normal::new(0.0, 1.0).unwrap();
        let z0: Vec<f64> = u.column(0).iter().map(|&v| phi.inverse_cdf(v)).collect();
        let z1: Vec<f64> = u.column(1).iter().map(|&v| phi.inverse_cdf(v)).collect();
        let n = z0.len() as f64;
        let m0 = z0.iter().sum::<f64>() / n;
        let m1 = z1.iter().sum::<f64>() / n;
        let mut c = 0.0;
        let mut v0 = 0.0;
        let mut v1 = 0.0;
        for (a, b) in z0.iter().zip(z1.iter()) {
            c += (a - m0) * (b - m1);
            v0 += (a - m0) * (a - m0);
            v1 += (b - m1) * (b - m1);
        }
        let corr = c / (v0 * v1).sqrt();
        let rho = (PI * 0.5 / 2.0).sin();
        assert!((corr - rho).abs() < 0.02, "corr {corr} vs rho {rho}");
    }

    #[test]
    fn invalid_tau_rejected() {
        assert!(matches!(
            CopulaSpec::new(CopulaFamily::Clayton, -0.2, 2),
            Err(Error::TauOutOfRange { .. })
        ));
        assert!(matches!(
            CopulaSpec::new(CopulaFamily::Gaussian, 1.0, 2),
            Err(Error::TauOutOfRange { .. })
        ));
        assert!(matches!(
            CopulaSpec::new(CopulaFamily::Frank, 0.99, 2),
            Err(Error::TauOutOfRange { .. })
        ));
    }
}
