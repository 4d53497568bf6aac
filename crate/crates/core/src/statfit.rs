//! Distribution utilities: empirical CDFs, summary statistics, rank-frequency
//! tables and the log-log least-squares Zipf fit.
//!
//! Everything here is generic over [`Scalar`] (`f32` or `f64`).

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Right-continuous empirical distribution function over the distinct
/// sample values.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CdfSeries<T> {
    /// `(value, P(X <= value))`, values strictly increasing, last
    /// probability exactly one.
    pub points: Vec<(T, T)>,
}

impl<T: Scalar> CdfSeries<T> {
    /// `F(x) = P(X <= x)`.
    pub fn eval(&self, x: T) -> T {
        let idx = self.points.partition_point(|(v, _)| *v <= x);
        if idx == 0 {
            T::zero()
        } else {
            self.points[idx - 1].1
        }
    }
}

fn check_finite<T: Scalar>(samples: &[T], what: &'static str) -> Result<()> {
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(what));
    }
    Ok(())
}

pub fn ecdf<T: Scalar>(samples: &[T]) -> Result<CdfSeries<T>> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("ecdf"));
    }
    check_finite(samples, "ecdf")?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = T::of(sorted.len());
    let mut points: Vec<(T, T)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let p = T::of(i + 1) / n;
        match points.last_mut() {
            Some(last) if last.0 == *v => last.1 = p,
            _ => points.push((*v, p)),
        }
    }
    if let Some(last) = points.last_mut() {
        last.1 = T::one();
    }
    Ok(CdfSeries { points })
}

/// One row of a rank-frequency table. Rank 1 is the most frequent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RankedCount<K> {
    pub rank: usize,
    pub key: K,
    pub frequency: u64,
}

/// Ranks keys by descending count. Ties keep key order, so ranks are
/// deterministic.
pub fn rank_frequency<K: Ord + Clone>(counts: &BTreeMap<K, u64>) -> Vec<RankedCount<K>> {
    let mut rows: Vec<(&K, u64)> = counts.iter().map(|(k, c)| (k, *c)).collect();
    rows.sort_by_key(|r| std::cmp::Reverse(r.1));
    rows.into_iter()
        .enumerate()
        .map(|(i, (k, c))| RankedCount {
            rank: i + 1,
            key: k.clone(),
            frequency: c,
        })
        .collect()
}

/// Least-squares line through `(log10 rank, log10 frequency)`.
///
/// `log10 f = intercept + slope * log10 r`. Slope and r2 do not depend on
/// the log base; the intercept does (an intercept of 3 means 1000 at rank 1).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZipfFit<T> {
    pub slope: T,
    pub intercept: T,
    pub r2: T,
    pub n_points: usize,
}

impl<T: Scalar> ZipfFit<T> {
    /// Fitted frequency at `rank`.
    pub fn predict(&self, rank: T) -> T {
        T::of(10).powf(self.intercept + self.slope * rank.log10())
    }
}

pub fn zipf_fit<T: Scalar>(pairs: &[(T, T)]) -> Result<ZipfFit<T>> {
    if pairs.len() < 2 {
        return Err(Error::InsufficientData("a Zipf fit needs at least two points"));
    }
    let mut xs = Vec::with_capacity(pairs.len());
    let mut ys = Vec::with_capacity(pairs.len());
    for &(rank, freq) in pairs {
        if !(rank.is_finite() && freq.is_finite()) {
            return Err(Error::NonFinite("zipf_fit"));
        }
        if freq <= T::zero() || rank <= T::zero() {
            return Err(Error::ZeroFrequency(rank.to_f64().unwrap_or(f64::NAN)));
        }
        xs.push(rank.log10());
        ys.push(freq.log10());
    }
    let n = T::of(pairs.len());
    let x_mean = xs.iter().copied().sum::<T>() / n;
    let y_mean = ys.iter().copied().sum::<T>() / n;
    let (mut sxx, mut sxy, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(&ys) {
        let (dx, dy) = (x - x_mean, y - y_mean);
        sxx = sxx + dx * dx;
        sxy = sxy + dx * dy;
        syy = syy + dy * dy;
    }
    if sxx == T::zero() {
        return Err(Error::InsufficientData("all ranks are equal"));
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let ss_res: T = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let r2 = if syy == T::zero() {
        T::one()
    } else {
        (T::one() - ss_res / syy).max(T::zero()).min(T::one())
    };
    Ok(ZipfFit {
        slope,
        intercept,
        r2,
        n_points: pairs.len(),
    })
}

/// Fits a rank-frequency table. Zero counts are rejected.
pub fn zipf_fit_ranked<T: Scalar, K>(rows: &[RankedCount<K>]) -> Result<ZipfFit<T>> {
    let pairs: Vec<(T, T)> = rows.iter().map(|r| (T::of(r.rank), T::of(r.frequency))).collect();
    zipf_fit(&pairs)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Quantiles<T> {
    pub p5: T,
    pub p25: T,
    pub p50: T,
    pub p75: T,
    pub p95: T,
}

/// Descriptive statistics. `std` is the population standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Summary<T> {
    pub count: usize,
    pub mean: T,
    pub std: T,
    pub min: T,
    pub max: T,
    pub quantiles: Quantiles<T>,
}

/// Percentile of sorted data by linear interpolation between closest ranks.
pub fn percentile_of_sorted<T: Scalar>(sorted: &[T], pct: T) -> T {
    assert!(!sorted.is_empty(), "percentile of empty data");
    if sorted.len() == 1 {
        return sorted[0];
    }
    let rank = pct / T::hundred() * T::of(sorted.len() - 1);
    let lo = rank.floor();
    let i = lo.to_usize().unwrap_or(0).min(sorted.len() - 1);
    if i + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    let frac = rank - lo;
    sorted[i] + (sorted[i + 1] - sorted[i]) * frac
}

pub fn summary_stats<T: Scalar>(samples: &[T]) -> Result<Summary<T>> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("summary_stats"));
    }
    check_finite(samples, "summary_stats")?;
    // Welford's running mean and sum of squared deviations.
    let (mut mean, mut m2) = (T::zero(), T::zero());
    for (i, &x) in samples.iter().enumerate() {
        let d = x - mean;
        mean = mean + d / T::of(i + 1);
        m2 = m2 + d * (x - mean);
    }
    let std = (m2 / T::of(samples.len())).max(T::zero()).sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let q = |p: u8| percentile_of_sorted(&sorted, T::of(p));
    Ok(Summary {
        count: samples.len(),
        mean,
        std,
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        quantiles: Quantiles {
            p5: q(5),
            p25: q(25),
            p50: q(50),
            p75: q(75),
            p95: q(95),
        },
    })
}
