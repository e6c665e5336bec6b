//! Streaming evaluation of the retrospective-CUSUM detector on indicator
//! vectors, the threshold function and the alarm decision.
//!
//! At time k > m the detector is
//!
//! ```text
//! D(k) = max_{j ∈ [m, k−1]} (j(k−j)/m^{3/2}) ‖Ȳ_{1:j} − Ȳ_{j+1:k}‖_{Σ̂⁻¹},
//! ```
//!
//! which, writing S_j for the prefix sums of the indicator vectors and
//! Z_j = L⁻¹S_j for the Cholesky factor L of Σ̂, reduces to
//!
//! ```text
//! D(k) = max_j ‖k·Z_j − j·Z_k‖₂ / (√p · m^{3/2}),
//! ```
//!
//! so one O(p²) triangular solve per step plus O(p) per candidate split j.
//! The prefix state grows by one vector per step; streaming cost at time k is
//! O((k−m)·p) after the solve, O((k−m)·p) memory.

use crate::error::{Error, Result};
use crate::lrcov::{estimate_lrcov, LrcovSpec};
use crate::matrix::{cholesky, mahalanobis_norm, LowerTriangular, SpdMatrix};
use crate::points::{indicator_rows, EvalPoints};
use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

/// Threshold-function and alarm parameters. `q` is the (1−α)-quantile of the
/// limiting distribution for the chosen number of points and `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorConfig {
    pub alpha: f64,
    pub eta: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub q: f64,
}

impl MonitorConfig {
    pub fn new(alpha: f64, q: f64) -> Self {
        Self {
            alpha,
            eta: 0.001,
            gamma: 0.0,
            epsilon: 1e-10,
            q,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 0.5), got {}",
                self.alpha
            )));
        }
        // With eta = 0 the limiting variable is almost surely infinite.
        if !(self.eta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        if self.gamma < 0.0 || !(self.epsilon > 0.0) || !(self.q > 0.0) {
            return Err(Error::InvalidParameter(
                "gamma must be nonnegative, epsilon and q positive".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of one monitoring step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub k: usize,
    pub detector: f64,
    /// (m/k)^{3/2+η} · detector, the scaled detector compared against q.
    pub scaled: f64,
    pub threshold: f64,
    pub alarm: bool,
}

/// Threshold function w̃(t) = max{((t−1)/t)^γ, ε} · q · t^{3/2+η}; with
/// γ = 0 this is q·t^{3/2+η} exactly.
pub fn threshold(t: f64, cfg: &MonitorConfig) -> f64 {
    let modifier = ((t - 1.0) / t).powf(cfg.gamma).max(cfg.epsilon);
    modifier * cfg.q * t.powf(1.5 + cfg.eta)
}

/// Monitoring state: learning summary plus the growing prefix-sum state.
///
/// Single-writer: [`MonitorState::step`] mutates the state and must be
/// externally serialized; distinct states may run on distinct threads.
#[derive(Debug, Clone)]
pub struct MonitorState {
    m: usize,
    k: usize,
    pts: EvalPoints,
    chol: LowerTriangular,
    cfg: MonitorConfig,
    /// Prefix sums S_j, flattened row-major for j = m..=k (exact integers).
    prefix_s: Vec<f64>,
    /// Z_j = L⁻¹ S_j, flattened row-major for j = m..=k.
    prefix_z: Vec<f64>,
    /// ‖Z_j‖² cache.
    znorm2: Vec<f64>,
    alarm_at: Option<usize>,
    scratch: Vec<f64>,
}

impl MonitorState {
    /// Initializes monitoring from the learning sample: indicator rows,
    /// long-run covariance estimate, its Cholesky factor and the first
    /// prefix sum S_m.
    pub fn init(
        learning: ArrayView2<f64>,
        pts: EvalPoints,
        spec: &LrcovSpec,
        cfg: MonitorConfig,
    ) -> Result<Self> {
        let rows = indicator_rows(learning, &pts)?;
        let sigma = estimate_lrcov(rows.view(), spec)?;
        Self::from_indicator_sums(rows.view(), pts, &sigma, cfg)
    }

    /// Initializes with an externally supplied covariance matrix instead of
    /// estimating it (used with the known i.i.d. covariance in calibration
    /// and in tests).
    pub fn init_with_sigma(
        learning: ArrayView2<f64>,
        pts: EvalPoints,
        sigma: &SpdMatrix,
        cfg: MonitorConfig,
    ) -> Result<Self> {
        let rows = indicator_rows(learning, &pts)?;
        Self::from_indicator_sums(rows.view(), pts, sigma, cfg)
    }

    fn from_indicator_sums(
        rows: ArrayView2<f64>,
        pts: EvalPoints,
        sigma: &SpdMatrix,
        cfg: MonitorConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let (m, p) = rows.dim();
        if m < 2 {
            return Err(Error::TooFewObservations { needed: 2, got: m });
        }
        if sigma.dim() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: sigma.dim(),
            });
        }
        let chol = cholesky(sigma)?;
        let mut s_m = vec![0.0; p];
        for row in rows.rows() {
            for (acc, v) in s_m.iter_mut().zip(row.iter()) {
                *acc += v;
            }
        }
        let mut z_m = s_m.clone();
        chol.forward_solve_in_place(&mut z_m);
        let znorm = z_m.iter().map(|v| v * v).sum();
        Ok(Self {
            m,
            k: m,
            pts,
            chol,
            cfg,
            prefix_s: s_m,
            prefix_z: z_m,
            znorm2: vec![znorm],
            alarm_at: None,
            scratch: vec![0.0; p],
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> usize {
        self.pts.p()
    }

    pub fn points(&self) -> &EvalPoints {
        &self.pts
    }

    pub fn config(&self) -> &MonitorConfig {
        &self.cfg
    }

    /// First time index whose detector exceeded the threshold, if any.
    pub fn alarm_at(&self) -> Option<usize> {
        self.alarm_at
    }

    /// Prefix sum S_j for j in m..=k.
    pub fn prefix_sum(&self, j: usize) -> &[f64] {
        let p = self.pts.p();
        let idx = j - self.m;
        &self.prefix_s[idx * p..(idx + 1) * p]
    }

    /// Processes the next observation and returns the detector value, its
    /// scaled version, the threshold and the alarm decision at time k+1.
    pub fn step(&mut self, x: &[f64]) -> Result<StepResult> {
        let p = self.pts.p();
        if x.len() != self.pts.d() {
            return Err(Error::DimensionMismatch {
                expected: self.pts.d(),
                got: x.len(),
            });
        }
        self.k += 1;
        let k = self.k;

        let last = self.prefix_s.len() - p;
        for (l, pt) in self.pts.points().iter().enumerate() {
            let inside = x.iter().zip(pt.iter()).all(|(v, b)| v <= b);
            self.scratch[l] = self.prefix_s[last + l] + f64::from(inside);
        }
        self.prefix_s.extend_from_slice(&self.scratch);
        self.chol.forward_solve_in_place(&mut self.scratch);
        let zk = &self.scratch;
        let ak: f64 = zk.iter().map(|v| v * v).sum();

        // max_j ‖k·Z_j − j·Z_k‖² = max_j k²‖Z_j‖² − 2kj⟨Z_j, Z_k⟩ + j²‖Z_j‖²
        let kf = k as f64;
        let kf2 = kf * kf;
        let mut best = 0.0f64;
        let mut jf = self.m as f64;
        for (zj, &aj) in self.prefix_z.chunks_exact(p).zip(self.znorm2.iter()) {
            let mut c = 0.0;
            for (a, b) in zj.iter().zip(zk.iter()) {
                c += a * b;
            }
            let v = kf2 * aj - 2.0 * kf * jf * c + jf * jf * ak;
            if v > best {
                best = v;
            }
            jf += 1.0;
        }
        self.prefix_z.extend_from_slice(zk);
        self.znorm2.push(ak);

        let m = self.m as f64;
        let detector = best.max(0.0).sqrt() / ((p as f64).sqrt() * m.powf(1.5));
        let t = kf / m;
        let scaled = (m / kf).powf(1.5 + self.cfg.eta) * detector;
        let thr = threshold(t, &self.cfg);
        let alarm = detector > thr;
        if alarm && self.alarm_at.is_none() {
            self.alarm_at = Some(k);
        }
        Ok(StepResult {
            k,
            detector,
            scaled,
            threshold: thr,
            alarm,
        })
    }
}

/// Recomputes the detector at the final time k = data rows from scratch via
/// empirical d.f. differences at each point, with no prefix sums. Testing
/// oracle for the streaming path.
pub fn detector_bruteforce(
    data: ArrayView2<f64>,
    pts: &EvalPoints,
    sigma: &SpdMatrix,
    m: usize,
) -> Result<f64> {
    let k = data.nrows();
    if k <= m {
        return Err(Error::TooFewObservations { needed: m + 1, got: k });
    }
    let chol = cholesky(sigma)?;
    let p = pts.p();
    let mut best = 0.0f64;
    for j in m..k {
        let mut delta = vec![0.0; p];
        for (l, pt) in pts.points().iter().enumerate() {
            let count_le = |rows: std::ops::Range<usize>| -> f64 {
                rows.filter(|&i| {
                    data.row(i)
                        .iter()
                        .zip(pt.iter())
                        .all(|(x, b)| x <= b)
                })
                .count() as f64
            };
            let f_head = count_le(0..j) / j as f64;
            let f_tail = count_le(j..k) / (k - j) as f64;
            delta[l] = f_head - f_tail;
        }
        let norm = mahalanobis_norm(&delta, &chol)?;
        let term = (j * (k - j)) as f64 / (m as f64).powf(1.5) * norm;
        if term > best {
            best = term;
        }
    }
    Ok(best)
}
