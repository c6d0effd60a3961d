//! Gaussian-copula scenarios of PV power around a point forecast.
//!
//! Forecast errors are modelled per lead time by their empirical
//! distribution and coupled across lead times through the correlation of
//! their normal scores.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::{Error, Result};

/// Standard normal distribution function.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Inverse of [`std_normal_cdf`] on the open unit interval.
pub fn std_normal_quantile(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!("normal quantile needs 0 < u < 1, got {u}")));
    }
    // rational approximation, then two Halley refinements
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383577518672690e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] =
        [7.784695709041462e-3, 3.224671290700398e-1, 2.445134137142996, 3.754408661907416];
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let p_low = 0.02425;
    let mut x = if u < p_low {
        tail((-2.0 * u.ln()).sqrt())
    } else if u > 1.0 - p_low {
        -tail((-2.0 * (1.0 - u).ln()).sqrt())
    } else {
        let q = u - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    for _ in 0..2 {
        let e = if u < 0.5 { std_normal_cdf(x) - u } else { (1.0 - u) - std_normal_cdf(-x) };
        let step = e / std_normal_pdf(x);
        x -= step / (1.0 + 0.5 * x * step);
    }
    Ok(x)
}

/// Empirical distribution of the forecast error at one lead time.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMarginal {
    pub lead_time: usize,
    /// Historical errors in ascending order (kW).
    pub sorted: Vec<f64>,
    pub degenerate: bool,
}

impl ErrorMarginal {
    /// Linear interpolation between order statistics placed at
    /// `(i - 0.5)/n`, flat beyond the extreme ones.
    pub fn quantile(&self, u: f64) -> f64 {
        let n = self.sorted.len();
        if self.degenerate || n == 0 {
            return 0.0;
        }
        let pos = u * n as f64 - 0.5;
        if pos <= 0.0 {
            return self.sorted[0];
        }
        if pos >= (n - 1) as f64 {
            return self.sorted[n - 1];
        }
        let i = pos.floor() as usize;
        let w = pos - i as f64;
        self.sorted[i] + w * (self.sorted[i + 1] - self.sorted[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CopulaModel {
    pub marginals: Vec<ErrorMarginal>,
    /// Positive-definite correlation of the normal scores.
    pub correlation: DMatrix<f64>,
    /// Lower-triangular factor of `correlation`.
    pub cholesky: DMatrix<f64>,
}

/// Fewest history days accepted by [`fit_copula`].
pub const MIN_HISTORY_DAYS: usize = 30;
const EIGEN_FLOOR: f64 = 1e-8;

/// `(rank - 0.5)/n` with tied values sharing their average rank.
fn plotting_positions(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 averaged
        let rank = 0.5 * ((i + 1) + (j + 1)) as f64;
        for &k in &idx[i..=j] {
            out[k] = (rank - 0.5) / n as f64;
        }
        i = j + 1;
    }
    out
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return 0.0;
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

/// Nearest positive-definite correlation: eigenvalues floored, diagonal
/// brought back to one.
pub fn repair_correlation(r: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(r.clone());
    let floored = eig.eigenvalues.map(|l| l.max(EIGEN_FLOOR));
    let v = &eig.eigenvectors;
    let mut m = v * DMatrix::from_diagonal(&floored) * v.transpose();
    let d: DVector<f64> = m.diagonal().map(|x| 1.0 / x.sqrt());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            m[(i, j)] *= d[i] * d[j];
        }
    }
    for i in 0..m.nrows() {
        m[(i, i)] = 1.0;
        for j in 0..i {
            let s = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
    m
}

fn cholesky_lower(r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut m = r.clone();
    for attempt in 0..6 {
        if let Some(c) = nalgebra::Cholesky::new(m.clone()) {
            return Ok(c.l());
        }
        let jitter = EIGEN_FLOOR * 10f64.powi(attempt);
        for i in 0..m.nrows() {
            m[(i, i)] += jitter;
        }
    }
    Err(Error::Estimation("correlation matrix is not positive definite".into()))
}

/// Fits marginals and the normal-score correlation from a history of
/// forecast errors, one row per day and one column per lead time.
pub fn fit_copula(errors: &[Vec<f64>], pv_capacity: f64) -> Result<CopulaModel> {
    let days = errors.len();
    if days < MIN_HISTORY_DAYS {
        return Err(Error::Estimation(format!(
            "copula fit needs at least {MIN_HISTORY_DAYS} days of history, got {days}"
        )));
    }
    let t = errors[0].len();
    if t == 0 {
        return Err(Error::Estimation("error history has no lead times".into()));
    }
    for (d, row) in errors.iter().enumerate() {
        if row.len() != t {
            return Err(Error::Shape { what: "error history row", expected: t, got: row.len() });
        }
        if let Some(k) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite error at day {d}, lead time {k}")));
        }
    }

    let mut marginals = Vec::with_capacity(t);
    let mut scores = Vec::with_capacity(t);
    for k in 0..t {
        let col: Vec<f64> = errors.iter().map(|r| r[k]).collect();
        let mean = col.iter().sum::<f64>() / days as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (days - 1) as f64;
        let degenerate = var.sqrt() < 1e-9 * pv_capacity;
        let mut sorted = col.clone();
        sorted.sort_by(f64::total_cmp);
        marginals.push(ErrorMarginal { lead_time: k, sorted, degenerate });
        let g: Vec<f64> = if degenerate {
            Vec::new()
        } else {
            plotting_positions(&col)
                .into_iter()
                .map(std_normal_quantile)
                .collect::<Result<_>>()?
        };
        scores.push(g);
    }

    let mut r = DMatrix::<f64>::identity(t, t);
    for i in 0..t {
        if marginals[i].degenerate {
            continue;
        }
        for j in 0..i {
            if marginals[j].degenerate {
                continue;
            }
            let c = pearson(&scores[i], &scores[j]);
            r[(i, j)] = c;
            r[(j, i)] = c;
        }
    }
    let correlation = repair_correlation(&r);
    let cholesky = cholesky_lower(&correlation)?;
    Ok(CopulaModel { marginals, correlation, cholesky })
}

/// PV scenarios with their probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    /// One row of per-period PV power (kW) per scenario.
    pub values: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl ScenarioSet {
    /// Single scenario with probability one.
    pub fn single(profile: Vec<f64>) -> Self {
        Self { values: vec![profile], weights: vec![1.0] }
    }

    /// Equiprobable scenarios.
    pub fn uniform(values: Vec<Vec<f64>>) -> Self {
        let n = values.len();
        Self { values, weights: vec![1.0 / n as f64; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn periods(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn validate(&self, periods: usize, pv_capacity: f64) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Input("scenario set is empty".into()));
        }
        if self.weights.len() != self.values.len() {
            return Err(Error::Shape {
                what: "scenario weights",
                expected: self.values.len(),
                got: self.weights.len(),
            });
        }
        for row in &self.values {
            if row.len() != periods {
                return Err(Error::Shape { what: "scenario", expected: periods, got: row.len() });
            }
            if row.iter().any(|v| !(*v >= 0.0 && *v <= pv_capacity * (1.0 + 1e-12))) {
                return Err(Error::Input(format!("scenario values must lie in [0, {pv_capacity}]")));
            }
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Input("scenario weights must be non-negative".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Input(format!("scenario weights sum to {total}, expected 1")));
        }
        Ok(())
    }
}

/// Correlated standard normal vectors `L·ε`, one per scenario. Scenario
/// `ω` draws from a ChaCha8 generator seeded with `seed` on stream `ω`,
/// so every scenario is reproducible on its own.
pub fn sample_normal_scores(model: &CopulaModel, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let t = model.marginals.len();
    (0..n)
        .into_par_iter()
        .map(|omega| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(omega as u64);
            let eps = DVector::from_iterator(t, (0..t).map(|_| StandardNormal.sample(&mut rng)));
            (&model.cholesky * eps).iter().copied().collect()
        })
        .collect()
}

pub fn sample_scenarios(
    model: &CopulaModel,
    forecast: &[f64],
    n: usize,
    seed: u64,
    pv_capacity: f64,
) -> Result<ScenarioSet> {
    if n == 0 {
        return Err(Error::Domain("scenario count must be at least 1".into()));
    }
    let t = model.marginals.len();
    if forecast.len() != t {
        return Err(Error::Shape { what: "point forecast", expected: t, got: forecast.len() });
    }
    let values = sample_normal_scores(model, n, seed)
        .into_iter()
        .map(|g| {
            (0..t)
                .map(|k| {
                    let m = &model.marginals[k];
                    let z = if m.degenerate { 0.0 } else { m.quantile(std_normal_cdf(g[k])) };
                    (forecast[k] + z).clamp(0.0, pv_capacity)
                })
                .collect()
        })
        .collect();
    Ok(ScenarioSet::uniform(values))
}
