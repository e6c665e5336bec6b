//! Selection of the evaluation points from the learning sample: empirical
//! quantile grids in the univariate case, a copula-filtered uniform grid in
//! the multivariate case, plus the empirical d.f./rank machinery and
//! indicator-vector construction.
//!
//! Ranks are max-ranks (count of sample values ≤ x), matching the empirical
//! d.f. convention, so every function here is invariant under strictly
//! increasing componentwise transforms of tie-free data.

use crate::error::{Error, Result};
use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointsMode {
    User,
    UnivariateQuantile,
    MultivariateGrid,
}

/// The p evaluation points in R^d, with their generating grid probabilities
/// when selected automatically.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPoints {
    d: usize,
    points: Vec<Vec<f64>>,
    probs: Option<Vec<Vec<f64>>>,
    mode: PointsMode,
}

impl EvalPoints {
    /// User-supplied points (no generating probabilities).
    pub fn user(d: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySample);
        }
        for pt in &points {
            if pt.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: pt.len(),
                });
            }
        }
        let mut sorted = points.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted.dedup();
        if sorted.len() != points.len() {
            return Err(Error::DuplicatePoints);
        }
        Ok(Self {
            d,
            points,
            probs: None,
            mode: PointsMode::User,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of evaluation points p.
    pub fn p(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn probs(&self) -> Option<&[Vec<f64>]> {
        self.probs.as_deref()
    }

    pub fn mode(&self) -> PointsMode {
        self.mode
    }
}

/// Rank-based proxies Û_i = rank_i/(m+1) for the probability integral
/// transforms of the learning sample.
#[derive(Debug, Clone)]
pub struct PseudoObservations {
    m: usize,
    values: Array2<f64>,
}

impl PseudoObservations {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }
}

/// The ⌈m·y⌉-th order statistic, inf{x : F_{1:m}(x) ≥ y}.
pub fn empirical_quantile(sample: &[f64], y: f64) -> Result<f64> {
    let m = sample.len();
    if m == 0 {
        return Err(Error::EmptySample);
    }
    if !(y > 0.0 && y <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "quantile level must lie in (0, 1], got {y}"
        )));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = ((m as f64 * y).ceil() as usize).clamp(1, m);
    Ok(sorted[idx - 1])
}

/// ⌈m·num/den⌉ in exact integer arithmetic, so grid probabilities never
/// suffer an off-by-one from floating-point rounding.
fn order_stat_index(m: usize, num: usize, den: usize) -> usize {
    ((m * num + den - 1) / den).clamp(1, m)
}

fn sorted_column(data: ArrayView2<f64>, j: usize) -> Vec<f64> {
    let mut col: Vec<f64> = data.column(j).iter().copied().collect();
    col.sort_by(|a, b| a.partial_cmp(b).unwrap());
    col
}

/// Univariate automatic choice: the i/(p+1)-empirical quantiles of the
/// learning sample, i = 1..p.
pub fn select_univariate(learning: ArrayView2<f64>, p: usize) -> Result<EvalPoints> {
    let (m, d) = learning.dim();
    if d != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: d });
    }
    if p == 0 {
        return Err(Error::InvalidParameter("p must be positive".into()));
    }
    if m < p {
        return Err(Error::TooFewObservations { needed: p, got: m });
    }
    let sorted = sorted_column(learning, 0);
    let mut points = Vec::with_capacity(p);
    let mut probs = Vec::with_capacity(p);
    for i in 1..=p {
        let x = sorted[order_stat_index(m, i, p + 1) - 1];
        if points.last().is_some_and(|prev: &Vec<f64>| prev[0] == x) {
            return Err(Error::DuplicatePoints);
        }
        points.push(vec![x]);
        probs.push(vec![i as f64 / (p + 1) as f64]);
    }
    Ok(EvalPoints {
        d: 1,
        points,
        probs: Some(probs),
        mode: PointsMode::UnivariateQuantile,
    })
}

/// Max-ranks (count of values ≤ x) per column.
fn max_ranks(col: &[f64]) -> Vec<usize> {
    let m = col.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| col[a].partial_cmp(&col[b]).unwrap());
    let mut ranks = vec![0usize; m];
    let mut start = 0;
    while start < m {
        let mut end = start;
        while end + 1 < m && col[order[end + 1]] == col[order[start]] {
            end += 1;
        }
        for &idx in &order[start..=end] {
            ranks[idx] = end + 1;
        }
        start = end + 1;
    }
    ranks
}

/// Û_i^{[j]} = (m/(m+1))·F_{1:m}^{[j]}(X_i^{[j]}) = rank/(m+1).
pub fn pseudo_observations(learning: ArrayView2<f64>) -> Result<PseudoObservations> {
    let (m, d) = learning.dim();
    if m == 0 {
        return Err(Error::EmptySample);
    }
    let mut values = Array2::zeros((m, d));
    let denom = (m + 1) as f64;
    for j in 0..d {
        let col: Vec<f64> = learning.column(j).iter().copied().collect();
        for (i, r) in max_ranks(&col).into_iter().enumerate() {
            values[[i, j]] = r as f64 / denom;
        }
    }
    Ok(PseudoObservations { m, values })
}

/// The uniformly-spaced grid of r^d probability vectors
/// (j₁/(r+1), …, j_d/(r+1)), j's in 1..r, in lexicographic order.
pub fn grid(r: usize, d: usize) -> Vec<Vec<f64>> {
    assert!(r >= 1 && d >= 1);
    let mut out = Vec::with_capacity(r.pow(d as u32));
    let mut idx = vec![1usize; d];
    loop {
        out.push(idx.iter().map(|&j| j as f64 / (r + 1) as f64).collect());
        let mut pos = d;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            if idx[pos] < r {
                idx[pos] += 1;
                for v in &mut idx[pos + 1..] {
                    *v = 1;
                }
                break;
            }
        }
    }
}

/// Multivariate automatic choice: keep the grid points whose box
/// (π − s, π] carries empirical copula mass above 1/(κ(r+1)^d), and map the
/// retained grid probabilities through the marginal empirical quantiles.
pub fn select_multivariate(learning: ArrayView2<f64>, r: usize, kappa: f64) -> Result<EvalPoints> {
    let (m, d) = learning.dim();
    if d < 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: d });
    }
    if r == 0 {
        return Err(Error::InvalidParameter("r must be positive".into()));
    }
    if !(kappa > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "kappa must exceed 1, got {kappa}"
        )));
    }
    if m <= r {
        return Err(Error::TooFewObservations { needed: r + 1, got: m });
    }

    // Cell index per coordinate from the integer rank: the box
    // ((c−1)/(r+1), c/(r+1)] contains Û = rank/(m+1) iff
    // (c−1)(m+1) < rank(r+1) ≤ c(m+1); c = ⌈rank(r+1)/(m+1)⌉, exact.
    let mut counts = vec![0usize; r.pow(d as u32)];
    let mut cell = vec![0usize; d];
    let ranks: Vec<Vec<usize>> = (0..d)
        .map(|j| {
            let col: Vec<f64> = learning.column(j).iter().copied().collect();
            max_ranks(&col)
        })
        .collect();
    'obs: for i in 0..m {
        for j in 0..d {
            let c = (ranks[j][i] * (r + 1) + m) / (m + 1); // ⌈rank(r+1)/(m+1)⌉
            if c == 0 || c > r {
                continue 'obs;
            }
            cell[j] = c - 1;
        }
        let mut flat = 0usize;
        for &c in &cell {
            flat = flat * r + c;
        }
        counts[flat] += 1;
    }

    let threshold = 1.0 / (kappa * ((r + 1) as f64).powi(d as i32));
    let sorted_cols: Vec<Vec<f64>> = (0..d).map(|j| sorted_column(learning, j)).collect();

    let mut points = Vec::new();
    let mut probs = Vec::new();
    for (flat, pi) in grid(r, d).into_iter().enumerate() {
        let mass = counts[flat] as f64 / m as f64;
        if mass > threshold {
            let mut pt = Vec::with_capacity(d);
            for (j, &prob) in pi.iter().enumerate() {
                let g = (prob * (r + 1) as f64).round() as usize;
                pt.push(sorted_cols[j][order_stat_index(m, g, r + 1) - 1]);
            }
            points.push(pt);
            probs.push(pi);
        }
    }
    if points.is_empty() {
        return Err(Error::NoPointsRetained);
    }
    let mut dedup = points.clone();
    dedup.sort_by(|a, b| a.partial_cmp(b).unwrap());
    dedup.dedup();
    if dedup.len() != points.len() {
        return Err(Error::DuplicatePoints);
    }
    Ok(EvalPoints {
        d,
        points,
        probs: Some(probs),
        mode: PointsMode::MultivariateGrid,
    })
}

/// Indicator matrix: row i, column ℓ is 1 iff data_i ≤ points[ℓ]
/// componentwise (non-strict).
pub fn indicator_rows(data: ArrayView2<f64>, pts: &EvalPoints) -> Result<Array2<f64>> {
    let (n, d) = data.dim();
    if d != pts.d() {
        return Err(Error::DimensionMismatch {
            expected: pts.d(),
            got: d,
        });
    }
    let p = pts.p();
    let mut out = Array2::zeros((n, p));
    for i in 0..n {
        let row = data.row(i);
        for (l, pt) in pts.points().iter().enumerate() {
            let inside = row.iter().zip(pt.iter()).all(|(x, b)| x <= b);
            out[[i, l]] = f64::from(inside);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn column(values: &[f64]) -> Array2<f64> {
        Array2::from_shape_vec((values.len(), 1), values.to_vec()).unwrap()
    }

    #[test]
    fn quantile_basic_order_statistics() {
        assert_eq!(empirical_quantile(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap(), 2.0);
        assert_eq!(empirical_quantile(&[7.0], 0.3).unwrap(), 7.0);
        assert_eq!(empirical_quantile(&[7.0], 1.0).unwrap(), 7.0);
        assert!(matches!(
            empirical_quantile(&[], 0.5),
            Err(Error::EmptySample)
        ));
    }

    #[test]
    fn quantile_monte_carlo_median() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sample: Vec<f64> = (0..1000)
            .map(|_| rng.sample(rand_distr::StandardNormal))
            .collect();
        let med = empirical_quantile(&sample, 0.5).unwrap();
        assert!(med.abs() < 0.15, "median {med}");
    }

    #[test]
    fn univariate_selection_on_1_to_9() {
        let learning = column(&[9.0, 3.0, 1.0, 7.0, 5.0, 2.0, 8.0, 6.0, 4.0]);
        let pts = select_univariate(learning.view(), 2).unwrap();
        assert_eq!(pts.points(), &[vec![3.0], vec![6.0]]);
        assert_eq!(
            pts.probs().unwrap(),
            &[vec![1.0 / 3.0], vec![2.0 / 3.0]]
        );

        // p = 9 on 9 distinct values: order statistics ⌈9i/10⌉ are 1..9,
        // all distinct, so no DuplicatePoints.
        let pts = select_univariate(learning.view(), 9).unwrap();
        let got: Vec<f64> = pts.points().iter().map(|v| v[0]).collect();
        assert_eq!(got, (1..=9).map(f64::from).collect::<Vec<_>>());
    }

    #[test]
    fn univariate_selection_constant_sample() {
        let learning = column(&[5.0; 10]);
        assert!(matches!(
            select_univariate(learning.view(), 2),
            Err(Error::DuplicatePoints)
        ));
    }

    #[test]
    fn pseudo_observations_distinct_and_ties() {
        let data = column(&[10.0, 20.0, 30.0, 40.0]);
        let po = pseudo_observations(data.view()).unwrap();
        for (i, want) in [0.2, 0.4, 0.6, 0.8].iter().enumerate() {
            assert!((po.values()[[i, 0]] - want).abs() < 1e-15);
        }

        let data = column(&[5.0, 5.0, 9.0]);
        let po = pseudo_observations(data.view()).unwrap();
        let got: Vec<f64> = po.values().column(0).iter().copied().collect();
        assert_eq!(got, vec![0.5, 0.5, 0.75]);
    }

    #[test]
    fn pseudo_observations_rank_invariance() {
        let data = column(&[0.3, -1.2, 2.5, 0.9, -0.4]);
        let transformed = data.mapv(|x: f64| x.exp());
        let a = pseudo_observations(data.view()).unwrap();
        let b = pseudo_observations(transformed.view()).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn grid_shapes() {
        let g = grid(4, 2);
        assert_eq!(g.len(), 16);
        for pt in &g {
            for c in pt {
                assert!([0.2, 0.4, 0.6, 0.8].iter().any(|v| (v - c).abs() < 1e-15));
            }
        }
        assert_eq!(g[0], vec![0.2, 0.2]);
        assert_eq!(g[1], vec![0.2, 0.4]);

        assert_eq!(grid(1, 3), vec![vec![0.5, 0.5, 0.5]]);
        assert_eq!(grid(3, 3).len(), 27);
    }

    #[test]
    fn multivariate_selection_independence_keeps_all() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = 10_000;
        let data = Array2::from_shape_fn((m, 2), |_| rng.gen::<f64>());
        let pts = select_multivariate(data.view(), 4, 1.5).unwrap();
        assert_eq!(pts.p(), 16);
        for pr in pts.probs().unwrap() {
            for c in pr {
                assert!((c * 5.0).round() / 5.0 == *c || (c * 5.0 - (c * 5.0).round()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn multivariate_selection_comonotone_keeps_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = 5000;
        let x: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
        let data = Array2::from_shape_fn((m, 2), |(i, _)| x[i]);
        let pts = select_multivariate(data.view(), 4, 1.5).unwrap();
        assert_eq!(pts.p(), 4);
        for pr in pts.probs().unwrap() {
            assert_eq!(pr[0], pr[1]);
        }
    }

    #[test]
    fn indicator_rows_basics() {
        let pts = EvalPoints::user(1, vec![vec![0.0]]).unwrap();
        let data = column(&[-1.0, 0.0, 1.0]);
        let rows = indicator_rows(data.view(), &pts).unwrap();
        assert_eq!(rows.column(0).to_vec(), vec![1.0, 1.0, 0.0]);

        let pts = EvalPoints::user(2, vec![vec![0.0, 0.0]]).unwrap();
        let data = arr2(&[[0.0, 1.0]]);
        let rows = indicator_rows(data.view(), &pts).unwrap();
        assert_eq!(rows[[0, 0]], 0.0);
    }

    #[test]
    fn indicator_rows_match_bruteforce() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let data = Array2::from_shape_fn((60, 3), |_| rng.gen::<f64>() * 4.0 - 2.0);
        let pt_rows = Array2::from_shape_fn((5, 3), |_| rng.gen::<f64>() * 2.0 - 1.0);
        let pts = EvalPoints::user(
            3,
            pt_rows.rows().into_iter().map(|r| r.to_vec()).collect(),
        )
        .unwrap();
        let fast = indicator_rows(data.view(), &pts).unwrap();
        for i in 0..60 {
            for l in 0..5 {
                let mut inside = true;
                for j in 0..3 {
                    if data[[i, j]] > pts.points()[l][j] {
                        inside = false;
                    }
                }
                assert_eq!(fast[[i, l]], f64::from(inside));
            }
        }
    }

    #[test]
    fn selection_rank_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data = Array2::from_shape_fn((400, 2), |_| {
            rng.sample::<f64, _>(rand_distr::StandardNormal)
        });
        let transformed = data.mapv(|x| x.powi(3) + x);
        let a = select_multivariate(data.view(), 3, 1.5).unwrap();
        let b = select_multivariate(transformed.view(), 3, 1.5).unwrap();
        assert_eq!(a.probs(), b.probs());
        // Indicator rows of the stream against selected points are identical.
        let stream = Array2::from_shape_fn((200, 2), |_| {
            rng.sample::<f64, _>(rand_distr::StandardNormal)
        });
        let ta = indicator_rows(stream.view(), &a).unwrap();
        let tb = indicator_rows(stream.mapv(|x| x.powi(3) + x).view(), &b).unwrap();
        assert_eq!(ta, tb);
    }

    #[test]
    fn pseudo_observation_range_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let data = Array2::from_shape_fn((37, 2), |_| rng.gen::<f64>());
        let po = pseudo_observations(data.view()).unwrap();
        let lo = 1.0 / 38.0;
        let hi = 37.0 / 38.0;
        for v in po.values().iter() {
            assert!(*v >= lo && *v <= hi);
        }
    }
}
