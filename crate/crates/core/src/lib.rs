//! Consistent scoring of ordered categorical forecasts.
//!
//! A service is described by a [`FirmSpec`]: increasing category thresholds,
//! a positive weight per threshold, a risk parameter `alpha` and a
//! discounting distance `a`. The cost of a miss relative to a false alarm is
//! `alpha : 1 - alpha` at every threshold, and the forecast that minimises the
//! expected score is the category containing the `alpha`-quantile
//! (`a = 0`), a Huber quantile (`0 < a < inf`) or the `alpha`-expectile
//! (`a = inf`) of the forecaster's predictive distribution.
//!
//! Modules:
//!
//! - [`distributions`]: predictive distributions and the three risk functionals.
//! - [`firm`]: scoring matrices, elementary scores, directives.
//! - [`verification`]: contingency tables, classical measures, estimators of an implicit `alpha`.
//! - [`inference`]: confidence intervals for differences in mean scores.
//! - [`synthetic`]: perfectly calibrated Gaussian forecast systems and the experiments built on them.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distributions;
pub mod error;
pub mod firm;
pub mod inference;
pub mod special;
pub mod synthetic;
pub mod verification;

pub use distributions::{HuberParams, PredictiveDistribution};
pub use error::{FirmError, Result};
pub use firm::{FirmSpec, Forecast, Observation, ScoreBreakdown, ScoringMatrix};
pub use verification::{BinaryCounts, ContingencyTable};
