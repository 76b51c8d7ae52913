//! Service specifications and their consistent scores.
//!
//! Categories are right-closed: with thresholds `theta_1 < ... < theta_N`,
//! category `C_0` is `(-inf, theta_1]`, `C_i` is `(theta_i, theta_{i+1}]` and
//! `C_N` is `(theta_N, inf)`. A value exactly equal to a threshold therefore
//! belongs to the lower category, and so does a quantile that lands exactly on
//! a threshold. Hazards where lower values are worse are handled by negating
//! values (and thresholds) before scoring.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::distributions::{check_alpha, HuberParams, PredictiveDistribution};
use crate::error::{FirmError, Result};

/// `FIRM(thresholds, weights, alpha, a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FirmSpecDoc", into = "FirmSpecDoc")]
pub struct FirmSpec {
    thresholds: Vec<f64>,
    weights: Vec<f64>,
    alpha: f64,
    a: f64,
}

impl FirmSpec {
    pub fn new(thresholds: Vec<f64>, weights: Vec<f64>, alpha: f64, a: f64) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(FirmError::invalid("at least one category threshold is required"));
        }
        if thresholds.len() != weights.len() {
            return Err(FirmError::invalid(format!(
                "{} thresholds but {} weights",
                thresholds.len(),
                weights.len()
            )));
        }
        if thresholds.iter().any(|t| !t.is_finite()) {
            return Err(FirmError::invalid("thresholds must be finite"));
        }
        if thresholds.windows(2).any(|w| w[1] <= w[0]) {
            return Err(FirmError::invalid("thresholds must be strictly increasing"));
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(FirmError::invalid("weights must be positive and finite"));
        }
        check_alpha(alpha)?;
        if a.is_nan() || a < 0.0 {
            return Err(FirmError::invalid(format!(
                "discounting distance must be in [0, inf], got {a}"
            )));
        }
        Ok(Self {
            thresholds,
            weights,
            alpha,
            a,
        })
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// `N + 1`.
    pub fn categories(&self) -> usize {
        self.thresholds.len() + 1
    }

    pub fn huber_params(&self) -> HuberParams {
        HuberParams::new(self.alpha, self.a).expect("validated at construction")
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.thresholds.clone(), self.weights.clone(), alpha, self.a)
    }

    pub fn with_thresholds(&self, thresholds: Vec<f64>) -> Result<Self> {
        Self::new(thresholds, self.weights.clone(), self.alpha, self.a)
    }

    pub fn with_scaled_weights(&self, factor: f64) -> Result<Self> {
        let weights = self.weights.iter().map(|w| w * factor).collect();
        Self::new(self.thresholds.clone(), weights, self.alpha, self.a)
    }

    /// Index of the category containing `value`.
    pub fn category_of(&self, value: f64) -> usize {
        category_of(&self.thresholds, value)
    }
}

/// Index of the right-closed category containing `value`.
pub fn category_of(thresholds: &[f64], value: f64) -> usize {
    thresholds.partition_point(|&t| t < value)
}

/// Document form of a [`FirmSpec`]; `a` may be a number or `"inf"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FirmSpecDoc {
    thresholds: Vec<f64>,
    weights: Vec<f64>,
    alpha: f64,
    #[serde(default)]
    a: DiscountingDistance,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum DiscountingDistance {
    Finite(f64),
    Named(String),
}

impl Default for DiscountingDistance {
    fn default() -> Self {
        DiscountingDistance::Finite(0.0)
    }
}

impl TryFrom<FirmSpecDoc> for FirmSpec {
    type Error = FirmError;

    fn try_from(doc: FirmSpecDoc) -> Result<Self> {
        let a = match doc.a {
            DiscountingDistance::Finite(a) => a,
            DiscountingDistance::Named(s) if matches!(s.as_str(), "inf" | "infinity" | "Infinity") => {
                f64::INFINITY
            }
            DiscountingDistance::Named(s) => {
                return Err(FirmError::invalid(format!(
                    "discounting distance must be a number or \"inf\", got {s:?}"
                )))
            }
        };
        FirmSpec::new(doc.thresholds, doc.weights, doc.alpha, a)
    }
}

impl From<FirmSpec> for FirmSpecDoc {
    fn from(spec: FirmSpec) -> Self {
        let a = if spec.a.is_infinite() {
            DiscountingDistance::Named("inf".into())
        } else {
            DiscountingDistance::Finite(spec.a)
        };
        FirmSpecDoc {
            thresholds: spec.thresholds,
            weights: spec.weights,
            alpha: spec.alpha,
            a,
        }
    }
}

/// A categorical forecast, or a point forecast that is mapped to its category.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Forecast {
    Category(usize),
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation {
    Category(usize),
    Value(f64),
}

impl Forecast {
    fn above(&self, k: usize, theta: f64) -> bool {
        match *self {
            Forecast::Category(i) => i >= k,
            Forecast::Value(x) => x > theta,
        }
    }

    pub fn category(&self, thresholds: &[f64]) -> usize {
        match *self {
            Forecast::Category(i) => i,
            Forecast::Value(x) => category_of(thresholds, x),
        }
    }
}

impl Observation {
    fn above(&self, k: usize, theta: f64) -> bool {
        match *self {
            Observation::Category(j) => j >= k,
            Observation::Value(y) => y > theta,
        }
    }

    pub fn category(&self, thresholds: &[f64]) -> usize {
        match *self {
            Observation::Category(j) => j,
            Observation::Value(y) => category_of(thresholds, y),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CaseMetadata {
    pub location_id: String,
    pub date: Option<NaiveDate>,
    pub lead_days: Option<i64>,
}

/// One categorical forecast together with what was observed.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalForecastCase {
    pub forecast_category: usize,
    pub observation: Observation,
    pub metadata: Option<CaseMetadata>,
}

impl CategoricalForecastCase {
    pub fn new(forecast_category: usize, observation: Observation) -> Self {
        Self {
            forecast_category,
            observation,
            metadata: None,
        }
    }
}

/// A score split into the penalties from misses and from false alarms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub total: f64,
    pub miss: f64,
    pub false_alarm: f64,
}

impl ScoreBreakdown {
    pub fn scaled(self, factor: f64) -> Self {
        Self {
            total: self.total * factor,
            miss: self.miss * factor,
            false_alarm: self.false_alarm * factor,
        }
    }

    /// Share of the total coming from misses; NaN when the total is zero.
    pub fn miss_share(&self) -> f64 {
        self.miss / self.total
    }
}

impl std::ops::AddAssign for ScoreBreakdown {
    fn add_assign(&mut self, rhs: Self) {
        self.total += rhs.total;
        self.miss += rhs.miss;
        self.false_alarm += rhs.false_alarm;
    }
}

impl std::ops::Add for ScoreBreakdown {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl std::iter::Sum for ScoreBreakdown {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |acc, s| acc + s)
    }
}

/// Elementary quantile score: `1 - alpha` for a false alarm at `theta`, `alpha` for a miss.
pub fn elementary_quantile_score(theta: f64, alpha: f64, x: f64, y: f64) -> f64 {
    if y <= theta && theta < x {
        1.0 - alpha
    } else if x <= theta && theta < y {
        alpha
    } else {
        0.0
    }
}

/// Elementary Huber score: penalties grow linearly with the distance of `y`
/// from `theta`, capped at `a`. Identically zero when `a = 0`; the quantile
/// score is the limit of this score divided by `a`.
pub fn elementary_huber_score(theta: f64, params: HuberParams, x: f64, y: f64) -> f64 {
    let (alpha, a) = (params.alpha(), params.a());
    if y <= theta && theta < x {
        (1.0 - alpha) * (theta - y).min(a)
    } else if x <= theta && theta < y {
        alpha * (y - theta).min(a)
    } else {
        0.0
    }
}

/// Score of one forecast case, summed over thresholds and split by branch.
///
/// With `a = 0` a categorical observation is enough; with `a > 0` the
/// observation must be real-valued.
pub fn firm_score(spec: &FirmSpec, forecast: Forecast, observation: Observation) -> Result<ScoreBreakdown> {
    let n = spec.categories();
    if let Forecast::Category(i) = forecast {
        if i >= n {
            return Err(FirmError::invalid(format!("forecast category {i} out of range 0..{n}")));
        }
    }
    let y = match observation {
        Observation::Category(j) if j >= n => {
            return Err(FirmError::invalid(format!(
                "observed category {j} out of range 0..{n}"
            )))
        }
        Observation::Category(_) if spec.a > 0.0 => return Err(FirmError::RealObservationRequired),
        Observation::Category(_) => f64::NAN,
        Observation::Value(y) => y,
    };

    let alpha = spec.alpha;
    let mut out = ScoreBreakdown::default();
    for (idx, (&theta, &w)) in spec.thresholds.iter().zip(&spec.weights).enumerate() {
        let k = idx + 1;
        let x_above = forecast.above(k, theta);
        let y_above = observation.above(k, theta);
        if x_above == y_above {
            continue;
        }
        if y_above {
            let penalty = if spec.a == 0.0 {
                alpha * w
            } else {
                alpha * (y - theta).min(spec.a) * w
            };
            out.miss += penalty;
            out.total += penalty;
        } else {
            let penalty = if spec.a == 0.0 {
                (1.0 - alpha) * w
            } else {
                (1.0 - alpha) * (theta - y).min(spec.a) * w
            };
            out.false_alarm += penalty;
            out.total += penalty;
        }
    }
    Ok(out)
}

/// `(N+1) x (N+1)` penalties: row = forecast category, column = observed category.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoringMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl ScoringMatrix {
    /// Scoring matrix of a spec with `a = 0`.
    ///
    /// Entries are the per-threshold penalties summed in increasing threshold
    /// order, which makes them bitwise identical to [`firm_score`].
    pub fn new(spec: &FirmSpec) -> Result<Self> {
        if spec.a != 0.0 {
            return Err(FirmError::invalid(
                "a scoring matrix exists only for a = 0 (pure categorical scoring)",
            ));
        }
        let size = spec.categories();
        let alpha = spec.alpha;
        let mut entries = vec![0.0; size * size];
        for i in 0..size {
            for j in 0..size {
                let mut s = 0.0;
                if i < j {
                    for w in &spec.weights[i..j] {
                        s += alpha * w;
                    }
                } else if i > j {
                    for w in &spec.weights[j..i] {
                        s += (1.0 - alpha) * w;
                    }
                }
                entries[i * size + j] = s;
            }
        }
        Ok(Self { size, entries })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, forecast: usize, observed: usize) -> f64 {
        self.entries[forecast * self.size + observed]
    }

    pub fn row(&self, forecast: usize) -> &[f64] {
        &self.entries[forecast * self.size..(forecast + 1) * self.size]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.size).map(|i| self.row(i).to_vec()).collect()
    }

    /// Score of one case, split into miss (above the diagonal) and false alarm (below).
    pub fn score(&self, forecast: usize, observed: usize) -> ScoreBreakdown {
        let s = self.get(forecast, observed);
        match forecast.cmp(&observed) {
            std::cmp::Ordering::Less => ScoreBreakdown { total: s, miss: s, false_alarm: 0.0 },
            std::cmp::Ordering::Greater => ScoreBreakdown { total: s, miss: 0.0, false_alarm: s },
            std::cmp::Ordering::Equal => ScoreBreakdown::default(),
        }
    }

    /// Zero diagonal, entries strictly increasing away from it along rows and columns.
    pub fn satisfies_invariants(&self) -> bool {
        let n = self.size;
        (0..n).all(|i| self.get(i, i) == 0.0)
            && (0..n).all(|i| {
                (0..n - 1).all(|j| {
                    if j >= i {
                        self.get(i, j + 1) > self.get(i, j)
                    } else {
                        self.get(i, j) > self.get(i, j + 1)
                    }
                })
            })
            && (0..n).all(|j| {
                (0..n - 1).all(|i| {
                    if i >= j {
                        self.get(i + 1, j) > self.get(i, j)
                    } else {
                        self.get(i, j) > self.get(i + 1, j)
                    }
                })
            })
    }
}

/// Category containing the functional the spec's directive calls for: the
/// `alpha`-quantile when `a = 0`, otherwise the Huber quantile (expectile at `a = inf`).
pub fn directive_category(dist: &PredictiveDistribution, spec: &FirmSpec) -> Result<usize> {
    directive_category_at(dist, spec, spec.alpha)
}

/// As [`directive_category`] but deciding with `decision_alpha` instead of the spec's `alpha`.
pub fn directive_category_at(
    dist: &PredictiveDistribution,
    spec: &FirmSpec,
    decision_alpha: f64,
) -> Result<usize> {
    let x = dist.huber_quantile(HuberParams::new(decision_alpha, spec.a)?)?;
    Ok(spec.category_of(x))
}

/// `E[S^Q_{theta, alpha}(x, Y)]` for `Y ~ F`.
pub fn expected_elementary_quantile_score(
    dist: &PredictiveDistribution,
    theta: f64,
    alpha: f64,
    x: f64,
) -> f64 {
    if x > theta {
        (1.0 - alpha) * dist.cdf(theta)
    } else {
        alpha * (1.0 - dist.cdf(theta))
    }
}

/// Expected score of forecasting `category` when `Y ~ F`, for any `a`.
///
/// For `a > 0` the per-threshold expectations are `(1 - alpha) int_[theta-a, theta] F`
/// (false alarm side) and `alpha int_[theta, theta+a] (1 - F)` (miss side).
pub fn expected_firm_score(dist: &PredictiveDistribution, spec: &FirmSpec, category: usize) -> f64 {
    let alpha = spec.alpha;
    let a = spec.a;
    spec.thresholds
        .iter()
        .zip(&spec.weights)
        .enumerate()
        .map(|(idx, (&theta, &w))| {
            let forecast_above = category > idx;
            let e = if a == 0.0 {
                let x = if forecast_above { f64::INFINITY } else { f64::NEG_INFINITY };
                expected_elementary_quantile_score(dist, theta, alpha, x)
            } else if forecast_above {
                (1.0 - alpha) * dist.integral_cdf(theta - a, theta)
            } else {
                alpha * dist.integral_survival(theta, theta + a)
            };
            w * e
        })
        .sum()
}

/// Scoring with a different risk parameter at each threshold.
///
/// Public services should keep a single `alpha`; this exists to show that a
/// per-threshold `alpha` can make a middle category strictly suboptimal.
#[doc(hidden)]
pub mod varying_alpha {
    use super::*;

    pub fn expected_score(
        dist: &PredictiveDistribution,
        thresholds: &[f64],
        weights: &[f64],
        alphas: &[f64],
        category: usize,
    ) -> Result<f64> {
        if thresholds.len() != weights.len() || thresholds.len() != alphas.len() {
            return Err(FirmError::invalid("thresholds, weights and alphas differ in length"));
        }
        for &a in alphas {
            check_alpha(a)?;
        }
        Ok(thresholds
            .iter()
            .zip(weights)
            .zip(alphas)
            .enumerate()
            .map(|(idx, ((&theta, &w), &alpha))| {
                let x = if category > idx { f64::INFINITY } else { f64::NEG_INFINITY };
                w * expected_elementary_quantile_score(dist, theta, alpha, x)
            })
            .sum())
    }
}

/// Scoring matrix for categories of an event's likelihood.
///
/// Row `i` is the forecast category `C_i` of the event probability; column 0
/// is an observed nonevent, column 1 an observed event.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryLikelihoodMatrix {
    thresholds: Vec<f64>,
    rows: Vec<[f64; 2]>,
}

impl BinaryLikelihoodMatrix {
    pub fn new(thresholds: &[f64], weights: &[f64]) -> Result<Self> {
        if thresholds.is_empty() || thresholds.len() != weights.len() {
            return Err(FirmError::invalid("need matching nonempty thresholds and weights"));
        }
        if thresholds.iter().any(|t| !(*t > 0.0 && *t < 1.0))
            || thresholds.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(FirmError::invalid(
                "likelihood thresholds must be strictly increasing inside (0, 1)",
            ));
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(FirmError::invalid("weights must be positive"));
        }
        let rows = (0..=thresholds.len())
            .map(|i| {
                let nonevent: f64 = (0..i).map(|k| weights[k] * thresholds[k]).sum();
                let event: f64 = (i..thresholds.len())
                    .map(|k| weights[k] * (1.0 - thresholds[k]))
                    .sum();
                [nonevent, event]
            })
            .collect();
        Ok(Self {
            thresholds: thresholds.to_vec(),
            rows,
        })
    }

    pub fn get(&self, forecast: usize, event: bool) -> f64 {
        self.rows[forecast][usize::from(event)]
    }

    pub fn rows(&self) -> &[[f64; 2]] {
        &self.rows
    }

    /// Category containing the forecast probability `p`.
    pub fn category_of(&self, p: f64) -> usize {
        category_of(&self.thresholds, p)
    }
}
