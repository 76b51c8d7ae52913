//! Confidence intervals for the difference in mean scores of two systems.
//!
//! Scores are first averaged per period (day) so that spatial dependence is
//! removed; the resulting series of differences is then treated as a
//! possibly autocorrelated time series.

use std::fmt;

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{FirmError, Result};
use crate::special::student_t_ppf;

/// Replicate count used when none is given.
pub const DEFAULT_REPLICATES: usize = 27_000;
/// Smallest replicate count accepted by the bootstrap.
pub const MIN_REPLICATES: usize = 100;
/// Share of exactly-zero differences above which results carry a warning.
const ZERO_INFLATION_WARNING: f64 = 0.9;

/// Per-period mean scores keyed by strictly increasing dates.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSeries {
    periods: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl ScoreSeries {
    pub fn new(periods: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if periods.len() != values.len() {
            return Err(FirmError::SeriesMismatch(format!(
                "{} periods but {} values",
                periods.len(),
                values.len()
            )));
        }
        if let Some(w) = periods.windows(2).find(|w| w[1] <= w[0]) {
            return Err(FirmError::SeriesMismatch(format!(
                "periods must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FirmError::invalid("series values must be finite"));
        }
        Ok(Self { periods, values })
    }

    /// Series on consecutive days starting 2000-01-01.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let start = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
        let periods = (0..values.len())
            .map(|i| start + Days::new(i as u64))
            .collect();
        Self::new(periods, values)
    }

    pub fn periods(&self) -> &[NaiveDate] {
        &self.periods
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Mean, accumulated as offsets from the first value so a constant series returns that constant.
    pub fn mean(&self) -> f64 {
        let first = self.values[0];
        first + self.values.iter().map(|v| v - first).sum::<f64>() / self.values.len() as f64
    }
}

/// `a - b`, period by period.
pub fn difference_series(a: &ScoreSeries, b: &ScoreSeries) -> Result<ScoreSeries> {
    if let Some(i) = (0..a.len().min(b.len())).find(|&i| a.periods[i] != b.periods[i]) {
        return Err(FirmError::SeriesMismatch(format!(
            "period {} differs: {} vs {}",
            i, a.periods[i], b.periods[i]
        )));
    }
    if a.len() != b.len() {
        return Err(FirmError::SeriesMismatch(format!(
            "series lengths differ ({} vs {}); first unmatched period {}",
            a.len(),
            b.len(),
            if a.len() > b.len() { a.periods[b.len()] } else { b.periods[a.len()] }
        )));
    }
    Ok(ScoreSeries {
        periods: a.periods.clone(),
        values: a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect(),
    })
}

/// Pearson correlation of the pairs `(x_t, x_{t+1})`.
pub fn lag1_correlation(s: &ScoreSeries) -> Result<f64> {
    let n = s.len();
    if n < 3 {
        return Err(FirmError::InsufficientData(format!(
            "lag-1 correlation needs at least 3 values, got {n}"
        )));
    }
    let x = &s.values[..n - 1];
    let y = &s.values[1..];
    let m = (n - 1) as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(FirmError::undefined("lag-1 correlation", "the series has zero variance"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiMethod {
    StudentT,
    /// Diebold-Mariano with the Harvey-Leybourne-Newbold small-sample correction.
    DieboldMariano { horizon: usize },
    /// Circular block bootstrap, percentile interval.
    Bootstrap { block_length: usize, replicates: usize },
}

impl fmt::Display for CiMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CiMethod::StudentT => write!(f, "student-t"),
            CiMethod::DieboldMariano { horizon } => write!(f, "dm-hln(h={horizon})"),
            CiMethod::Bootstrap { block_length, replicates } => {
                write!(f, "bootstrap(block={block_length},replicates={replicates})")
            }
        }
    }
}

impl Serialize for CiMethod {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CiResult {
    pub method: CiMethod,
    pub level: f64,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    /// Test statistic for a zero mean, where the method has one.
    pub statistic: Option<f64>,
    pub warnings: Vec<String>,
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(FirmError::invalid(format!("confidence level must be in (0, 1), got {level}")))
    }
}

fn warnings_for(s: &ScoreSeries) -> Vec<String> {
    let zeros = s.values.iter().filter(|v| **v == 0.0).count();
    if zeros as f64 > ZERO_INFLATION_WARNING * s.len() as f64 {
        vec![format!(
            "{zeros} of {} differences are exactly zero; intervals rest on few informative periods",
            s.len()
        )]
    } else {
        Vec::new()
    }
}

/// `mean +/- t_{n-1,(1+level)/2} sd / sqrt(n)`.
pub fn student_t_ci(s: &ScoreSeries, level: f64) -> Result<CiResult> {
    check_level(level)?;
    let n = s.len();
    if n < 2 {
        return Err(FirmError::InsufficientData(format!(
            "a t interval needs at least 2 values, got {n}"
        )));
    }
    let mean = s.mean();
    let var = s.values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    let half = student_t_ppf(0.5 * (1.0 + level), (n - 1) as f64) * se;
    Ok(CiResult {
        method: CiMethod::StudentT,
        level,
        estimate: mean,
        lower: mean - half,
        upper: mean + half,
        statistic: (se > 0.0).then(|| mean / se),
        warnings: warnings_for(s),
    })
}

/// Sample autocovariance at `lag` with `1/n` normalisation.
fn autocovariance(values: &[f64], mean: f64, lag: usize) -> f64 {
    let n = values.len();
    values[lag..]
        .iter()
        .zip(&values[..n - lag])
        .map(|(a, b)| (a - mean) * (b - mean))
        .sum::<f64>()
        / n as f64
}

/// Modified Diebold-Mariano interval for `horizon`-step forecasts.
///
/// Long-run variance of the mean `(g_0 + 2 sum_{k<h} g_k) / n`, statistic
/// multiplied by `sqrt((n + 1 - 2h + h(h-1)/n) / n)` and referred to Student's
/// t with `n - 1` degrees of freedom. With `h = 1` this is the t interval.
pub fn diebold_mariano_ci(s: &ScoreSeries, horizon: usize, level: f64) -> Result<CiResult> {
    check_level(level)?;
    let n = s.len();
    if horizon == 0 {
        return Err(FirmError::invalid("forecast horizon must be at least 1"));
    }
    if n <= horizon || n < 2 {
        return Err(FirmError::InsufficientData(format!(
            "need more than {horizon} values for horizon {horizon}, got {n}"
        )));
    }
    let mean = s.mean();
    let long_run = autocovariance(&s.values, mean, 0)
        + 2.0 * (1..horizon).map(|k| autocovariance(&s.values, mean, k)).sum::<f64>();
    let v = long_run / n as f64;
    if !(v > 0.0) {
        return Err(FirmError::NonPositiveVariance(v));
    }
    let (nf, h) = (n as f64, horizon as f64);
    let correction = ((nf + 1.0 - 2.0 * h + h * (h - 1.0) / nf) / nf).sqrt();
    let half = student_t_ppf(0.5 * (1.0 + level), nf - 1.0) * v.sqrt() / correction;
    Ok(CiResult {
        method: CiMethod::DieboldMariano { horizon },
        level,
        estimate: mean,
        lower: mean - half,
        upper: mean + half,
        statistic: Some(mean * correction / v.sqrt()),
        warnings: warnings_for(s),
    })
}

/// `round(sqrt(n))`, at least 1.
pub fn default_block_length(n: usize) -> usize {
    ((n as f64).sqrt().round() as usize).max(1)
}

/// Means of `replicates` circular block resamples.
///
/// Each replicate concatenates `ceil(n / block_length)` blocks with uniform
/// random starts, wrapping past the end of the series, truncated to `n`
/// values. Replicate `r` draws from ChaCha8 stream `r` of `seed`, so the
/// output does not depend on thread scheduling.
pub fn bootstrap_replicate_means(
    s: &ScoreSeries,
    block_length: usize,
    replicates: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let n = s.len();
    if n < 2 {
        return Err(FirmError::InsufficientData(format!(
            "the bootstrap needs at least 2 values, got {n}"
        )));
    }
    if block_length == 0 || block_length > n {
        return Err(FirmError::invalid(format!(
            "block length must be in 1..={n}, got {block_length}"
        )));
    }
    if replicates < MIN_REPLICATES {
        return Err(FirmError::invalid(format!(
            "at least {MIN_REPLICATES} replicates are required, got {replicates}"
        )));
    }
    let blocks = n.div_ceil(block_length);
    let tail = n - (blocks - 1) * block_length;
    let circular_sum = |start: usize, len: usize| -> f64 {
        (0..len).map(|k| s.values[(start + k) % n]).sum()
    };
    let full: Vec<f64> = (0..n).map(|i| circular_sum(i, block_length)).collect();
    let last: Vec<f64> = if tail == block_length {
        full.clone()
    } else {
        (0..n).map(|i| circular_sum(i, tail)).collect()
    };

    Ok((0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r);
            let mut total = 0.0;
            for _ in 1..blocks {
                total += full[rng.random_range(0..n)];
            }
            total += last[rng.random_range(0..n)];
            total / n as f64
        })
        .collect())
}

/// Type-7 (linear interpolation) sample quantile of sorted data.
fn sorted_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Percentile interval from circular block bootstrap replicate means.
pub fn circular_block_bootstrap_ci(
    s: &ScoreSeries,
    block_length: usize,
    replicates: usize,
    level: f64,
    seed: u64,
) -> Result<CiResult> {
    check_level(level)?;
    let mut means = bootstrap_replicate_means(s, block_length, replicates, seed)?;
    means.sort_by(f64::total_cmp);
    Ok(CiResult {
        method: CiMethod::Bootstrap { block_length, replicates },
        level,
        estimate: s.mean(),
        lower: sorted_quantile(&means, 0.5 * (1.0 - level)),
        upper: sorted_quantile(&means, 0.5 * (1.0 + level)),
        statistic: None,
        warnings: warnings_for(s),
    })
}

/// Two-sided interval by the chosen method.
pub fn confidence_interval(s: &ScoreSeries, method: CiMethod, level: f64, seed: u64) -> Result<CiResult> {
    match method {
        CiMethod::StudentT => student_t_ci(s, level),
        CiMethod::DieboldMariano { horizon } => diebold_mariano_ci(s, horizon, level),
        CiMethod::Bootstrap { block_length, replicates } => {
            circular_block_bootstrap_ci(s, block_length, replicates, level, seed)
        }
    }
}

/// Direction of the alternative hypothesis about the mean difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Alternative {
    /// Mean difference above zero.
    Greater,
    /// Mean difference below zero.
    Less,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OneSidedResult {
    pub method: CiMethod,
    pub level: f64,
    pub alternative: Alternative,
    pub estimate: f64,
    /// Lower confidence bound for `Greater`, upper bound for `Less`.
    pub bound: f64,
    pub reject: bool,
    pub warnings: Vec<String>,
}

/// One-sided test that the mean difference is zero or in the opposite
/// direction. The bound at `level` is the matching end of the two-sided
/// interval at `2 level - 1`; the null is rejected when zero lies outside it.
pub fn one_sided_test(
    s: &ScoreSeries,
    method: CiMethod,
    level: f64,
    alternative: Alternative,
    seed: u64,
) -> Result<OneSidedResult> {
    if !(level > 0.5 && level < 1.0) {
        return Err(FirmError::invalid(format!(
            "one-sided level must be in (0.5, 1), got {level}"
        )));
    }
    let ci = confidence_interval(s, method, 2.0 * level - 1.0, seed)?;
    let (bound, reject) = match alternative {
        Alternative::Greater => (ci.lower, ci.lower > 0.0),
        Alternative::Less => (ci.upper, ci.upper < 0.0),
    };
    Ok(OneSidedResult {
        method,
        level,
        alternative,
        estimate: ci.estimate,
        bound,
        reject,
        warnings: ci.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn series(v: &[f64]) -> ScoreSeries {
        ScoreSeries::from_values(v.to_vec()).unwrap()
    }

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn ar1(n: usize, rho: f64, seed: u64) -> Vec<f64> {
        let e = noise(n, seed);
        let mut out = Vec::with_capacity(n);
        let mut prev = e[0] / (1.0 - rho * rho).sqrt();
        out.push(prev);
        for x in &e[1..] {
            prev = rho * prev + x;
            out.push(prev);
        }
        out
    }

    #[test]
    fn differences() {
        let a = series(&[3.0, 5.0]);
        let b = series(&[1.0, 2.0]);
        assert_eq!(difference_series(&a, &b).unwrap().values(), &[2.0, 3.0]);
        assert!(difference_series(&a, &a).unwrap().values().iter().all(|v| *v == 0.0));

        let shifted = ScoreSeries::new(
            vec![
                NaiveDate::from_ymd_opt(2000, 1, 1).unwrap(),
                NaiveDate::from_ymd_opt(2000, 1, 3).unwrap(),
            ],
            vec![1.0, 2.0],
        )
        .unwrap();
        let err = difference_series(&a, &shifted).unwrap_err().to_string();
        assert!(err.contains("period 1"), "{err}");
        assert!(difference_series(&a, &series(&[1.0])).is_err());
        assert!(ScoreSeries::new(vec![shifted.periods[1], shifted.periods[0]], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn lag1_examples() {
        let alt: Vec<f64> = (0..50).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!((lag1_correlation(&series(&alt)).unwrap() + 1.0).abs() < 1e-12);
        assert!(lag1_correlation(&series(&noise(10_000, 1))).unwrap().abs() < 0.05);
        assert!((lag1_correlation(&series(&ar1(100_000, 0.34, 2))).unwrap() - 0.34).abs() < 0.02);
        assert!(lag1_correlation(&series(&[1.0, 1.0, 1.0, 1.0])).is_err());
        assert!(lag1_correlation(&series(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn student_t_examples() {
        let ci = student_t_ci(&series(&[0.0, 2.0]), 0.95).unwrap();
        assert_eq!(ci.estimate, 1.0);
        let half = ci.upper - 1.0;
        // sample sd sqrt(2), standard error 1
        assert!((half - 12.706_204_736_432_1).abs() < 1e-7, "{half}");

        let c = student_t_ci(&series(&[0.4; 10]), 0.9).unwrap();
        assert_eq!((c.lower, c.upper), (0.4, 0.4));
        assert!(c.statistic.is_none());
        assert!(student_t_ci(&series(&[1.0]), 0.95).is_err());
    }

    #[test]
    fn student_t_coverage() {
        let covered = (0..1000)
            .filter(|r| {
                let ci = student_t_ci(&series(&noise(731, 1000 + r)), 0.95).unwrap();
                ci.lower <= 0.0 && 0.0 <= ci.upper
            })
            .count();
        assert!((925..=975).contains(&covered), "{covered}");
    }

    #[test]
    fn dm_horizon_one_is_student_t() {
        let s = series(&noise(731, 7));
        let t = student_t_ci(&s, 0.95).unwrap();
        let dm = diebold_mariano_ci(&s, 1, 0.95).unwrap();
        assert!((t.lower - dm.lower).abs() < 1e-14 && (t.upper - dm.upper).abs() < 1e-14);

        // without the correction the statistic is the t statistic over sqrt((n-1)/n)
        let n = 731.0f64;
        let mean = s.mean();
        let raw = mean / (autocovariance(s.values(), mean, 0) / n).sqrt();
        assert!((raw * ((n - 1.0) / n).sqrt() - t.statistic.unwrap()).abs() < 1e-12);
        assert!((dm.statistic.unwrap() - t.statistic.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn dm_white_noise_coverage() {
        let covered = (0..1000)
            .filter(|r| {
                let ci = diebold_mariano_ci(&series(&noise(731, 5000 + r)), 2, 0.95).unwrap();
                ci.lower <= 0.0 && 0.0 <= ci.upper
            })
            .count();
        assert!((920..=975).contains(&covered), "{covered}");
    }

    #[test]
    fn dm_errors() {
        assert!(matches!(
            diebold_mariano_ci(&series(&[0.0; 20]), 2, 0.95),
            Err(FirmError::NonPositiveVariance(_))
        ));
        assert!(diebold_mariano_ci(&series(&[1.0, 2.0]), 2, 0.95).is_err());
        assert!(diebold_mariano_ci(&series(&[1.0, 2.0, 3.0]), 0, 0.95).is_err());
        // strong negative lag-1 covariance drives the truncated estimate below zero
        let alt: Vec<f64> = (0..40).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!(matches!(
            diebold_mariano_ci(&series(&alt), 2, 0.95),
            Err(FirmError::NonPositiveVariance(_))
        ));
    }

    #[test]
    fn bootstrap_full_block_has_zero_width() {
        let s = series(&noise(50, 3));
        let ci = circular_block_bootstrap_ci(&s, 50, 500, 0.95, 1).unwrap();
        assert!(ci.upper - ci.lower < 1e-14, "{ci:?}");
        assert!((ci.lower - s.mean()).abs() < 1e-14);
    }

    #[test]
    fn bootstrap_block_one_matches_iid_percentile_bootstrap() {
        let s = series(&noise(400, 4));
        let ci = circular_block_bootstrap_ci(&s, 1, 20_000, 0.9, 9).unwrap();
        // independent iid percentile bootstrap
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut means: Vec<f64> = (0..20_000)
            .map(|_| (0..400).map(|_| s.values()[rand::Rng::random_range(&mut rng, 0..400)]).sum::<f64>() / 400.0)
            .collect();
        means.sort_by(f64::total_cmp);
        let lo = sorted_quantile(&means, 0.05);
        let hi = sorted_quantile(&means, 0.95);
        let se = 1.0 / 20.0; // sd / sqrt(n)
        assert!((ci.lower - lo).abs() < 0.05 * se * 4.0, "{} vs {lo}", ci.lower);
        assert!((ci.upper - hi).abs() < 0.05 * se * 4.0, "{} vs {hi}", ci.upper);
    }

    #[test]
    fn bootstrap_is_deterministic_and_ordered() {
        let s = series(&ar1(200, 0.3, 5));
        let a = circular_block_bootstrap_ci(&s, 14, 2000, 0.95, 42).unwrap();
        let b = circular_block_bootstrap_ci(&s, 14, 2000, 0.95, 42).unwrap();
        assert_eq!(a.lower.to_bits(), b.lower.to_bits());
        assert_eq!(a.upper.to_bits(), b.upper.to_bits());
        let c = circular_block_bootstrap_ci(&s, 14, 2000, 0.95, 43).unwrap();
        assert_ne!(a.lower.to_bits(), c.lower.to_bits());

        let means = bootstrap_replicate_means(&s, 14, 2000, 42).unwrap();
        let centre = means.iter().sum::<f64>() / means.len() as f64;
        assert!(a.lower <= centre && centre <= a.upper);
    }

    #[test]
    fn bootstrap_argument_errors() {
        let s = series(&[1.0, 2.0, 3.0]);
        assert!(circular_block_bootstrap_ci(&s, 0, 1000, 0.95, 1).is_err());
        assert!(circular_block_bootstrap_ci(&s, 4, 1000, 0.95, 1).is_err());
        assert!(circular_block_bootstrap_ci(&s, 1, 99, 0.95, 1).is_err());
        assert!(circular_block_bootstrap_ci(&s, 1, 1000, 1.0, 1).is_err());
    }

    #[test]
    fn zero_inflation_warning() {
        let mut v = vec![0.0; 100];
        v[3] = 1.0;
        assert_eq!(student_t_ci(&series(&v), 0.95).unwrap().warnings.len(), 1);
        assert!(student_t_ci(&series(&noise(100, 1)), 0.95).unwrap().warnings.is_empty());
    }

    #[test]
    fn one_sided_examples() {
        let shifted: Vec<f64> = noise(300, 11).iter().map(|x| x + 1.0).collect();
        for method in [
            CiMethod::StudentT,
            CiMethod::DieboldMariano { horizon: 2 },
            CiMethod::Bootstrap { block_length: 17, replicates: 2000 },
        ] {
            let r = one_sided_test(&series(&shifted), method, 0.95, Alternative::Greater, 1).unwrap();
            assert!(r.reject, "{method}");
            let r = one_sided_test(&series(&shifted), method, 0.95, Alternative::Less, 1).unwrap();
            assert!(!r.reject);
        }

        let rejected = (0..400)
            .filter(|r| {
                one_sided_test(&series(&noise(200, 300 + r)), CiMethod::StudentT, 0.95, Alternative::Greater, 0)
                    .unwrap()
                    .reject
            })
            .count();
        assert!((5..=35).contains(&rejected), "{rejected}");

        // the bootstrap bound is the matching percentile of the two-sided interval
        let s = series(&noise(100, 12));
        let two = circular_block_bootstrap_ci(&s, 10, 1000, 0.9, 3).unwrap();
        let one = one_sided_test(&s, CiMethod::Bootstrap { block_length: 10, replicates: 1000 }, 0.95, Alternative::Greater, 3)
            .unwrap();
        assert!((one.bound - two.lower).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn intervals_are_equivariant(
            seed in 0u64..1000,
            c in -5.0f64..5.0,
            k in 0.1f64..10.0,
        ) {
            let base = ar1(120, 0.3, seed);
            let s = series(&base);
            let moved = series(&base.iter().map(|x| k * x + c).collect::<Vec<_>>());
            for method in [
                CiMethod::StudentT,
                CiMethod::DieboldMariano { horizon: 2 },
                CiMethod::Bootstrap { block_length: 11, replicates: 500 },
            ] {
                let a = confidence_interval(&s, method, 0.95, seed).unwrap();
                let b = confidence_interval(&moved, method, 0.95, seed).unwrap();
                let tol = 1e-9 * (1.0 + c.abs() + k);
                prop_assert!((b.lower - (k * a.lower + c)).abs() < tol, "{}", method);
                prop_assert!((b.upper - (k * a.upper + c)).abs() < tol, "{}", method);
                prop_assert!(a.lower <= a.upper);
            }
        }
    }
}
