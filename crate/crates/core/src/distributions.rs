//! Predictive distributions and the risk functionals that drive directives.
//!
//! A [`PredictiveDistribution`] is identified with its CDF `F`. Three
//! functionals are provided:
//!
//! - [`quantile`](PredictiveDistribution::quantile): the lower generalized
//!   inverse `inf { t : F(t) >= alpha }`;
//! - [`huber_quantile`](PredictiveDistribution::huber_quantile): a root `x` of
//!   `alpha * int_[x, x+a] (1 - F) = (1 - alpha) * int_[x-a, x] F`;
//! - [`expectile`](PredictiveDistribution::expectile): the `a = inf` case.
//!
//! Interval integrals of `F` and `1 - F` are evaluated in closed form for
//! every representation, so the Huber residual is exact up to rounding and
//! bisection on it is robust.

use crate::error::{FirmError, Result};
use crate::special::{norm_cdf, norm_pdf, norm_ppf};

const SOLVER_MAX_ITER: usize = 200;
const SOLVER_X_TOL: f64 = 1e-10;
const SOLVER_RESIDUAL_TOL: f64 = 1e-12;
const BRACKET_TAIL: f64 = 1e-3;

/// Risk parameter and discounting distance of a Huber quantile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HuberParams {
    alpha: f64,
    a: f64,
}

impl HuberParams {
    /// `alpha` must lie in `(0, 1)`; `a` in `[0, inf]`.
    pub fn new(alpha: f64, a: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if a.is_nan() || a < 0.0 {
            return Err(FirmError::invalid(format!(
                "discounting distance must be in [0, inf], got {a}"
            )));
        }
        Ok(Self { alpha, a })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn a(&self) -> f64 {
        self.a
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(FirmError::invalid(format!(
            "risk parameter must lie strictly inside (0, 1), got {alpha}"
        )))
    }
}

/// CDF given by linear interpolation between knots.
///
/// `F` is 0 below the first knot and 1 from the last knot on. A first knot
/// with positive cumulative probability is an atom at that value.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearCdf {
    knots: Vec<(f64, f64)>,
}

impl PiecewiseLinearCdf {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        let Some(&(_, last)) = knots.last() else {
            return Err(FirmError::invalid("piecewise CDF needs at least one knot"));
        };
        if knots.iter().any(|(v, p)| !v.is_finite() || !p.is_finite()) {
            return Err(FirmError::invalid("piecewise CDF knots must be finite"));
        }
        if knots[0].1 < 0.0 || last != 1.0 {
            return Err(FirmError::invalid(
                "piecewise CDF must start at probability >= 0 and end at exactly 1",
            ));
        }
        for w in knots.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(FirmError::invalid(
                    "piecewise CDF knot values must be strictly increasing",
                ));
            }
            if w[1].1 < w[0].1 {
                return Err(FirmError::invalid(
                    "piecewise CDF probabilities must be nondecreasing",
                ));
            }
        }
        Ok(Self { knots })
    }

    /// Builds a CDF from `(probability, value)` quantile pairs.
    ///
    /// Between quoted quantiles the CDF is linear. Outside the quoted range
    /// the density of the adjacent segment is continued until the CDF reaches
    /// 0 or 1. If `lower_bound` is given, any mass the lower extension would
    /// put below it becomes an atom at the bound. Repeated values keep the
    /// largest probability; a repeated lowest value is treated as an atom.
    pub fn from_quantiles(pairs: &[(f64, f64)], lower_bound: Option<f64>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(FirmError::invalid("at least one quantile pair is required"));
        }
        let mut pairs = pairs.to_vec();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for &(p, v) in &pairs {
            if !(p > 0.0 && p < 1.0) || !v.is_finite() {
                return Err(FirmError::invalid(format!(
                    "quantile pair ({p}, {v}) needs a level in (0, 1) and a finite value"
                )));
            }
        }
        for w in pairs.windows(2) {
            if w[1].0 == w[0].0 {
                return Err(FirmError::invalid(format!("duplicate quantile level {}", w[0].0)));
            }
            if w[1].1 < w[0].1 {
                return Err(FirmError::invalid("quantile values must be nondecreasing in level"));
            }
        }
        if let Some(lb) = lower_bound {
            if pairs[0].1 < lb {
                return Err(FirmError::invalid("quantile value below the declared lower bound"));
            }
        }

        // Collapse ties, keeping the highest level at each value.
        let mut groups: Vec<(f64, f64, usize)> = Vec::new();
        for (p, v) in pairs {
            match groups.last_mut() {
                Some(g) if g.0 == v => {
                    g.1 = p;
                    g.2 += 1;
                }
                _ => groups.push((v, p, 1)),
            }
        }
        if groups.len() == 1 {
            return Self::new(vec![(groups[0].0, 1.0)]);
        }

        let mut knots: Vec<(f64, f64)> = groups.iter().map(|g| (g.0, g.1)).collect();
        let lowest_is_atom =
            groups[0].2 > 1 || lower_bound.is_some_and(|lb| lb == groups[0].0);

        let last = knots.len() - 1;
        let (v_hi, p_hi) = knots[last];
        let (v_prev, p_prev) = knots[last - 1];
        let upper_density = (p_hi - p_prev) / (v_hi - v_prev);
        knots.push((v_hi + (1.0 - p_hi) / upper_density, 1.0));

        let (v0, p0) = knots[0];
        if !lowest_is_atom && p0 > 0.0 {
            let (v1, p1) = knots[1];
            let lower_density = (p1 - p0) / (v1 - v0);
            let start = v0 - p0 / lower_density;
            match lower_bound {
                Some(lb) if start < lb => {
                    knots.insert(0, (lb, p0 - (v0 - lb) * lower_density));
                }
                _ => knots.insert(0, (start, 0.0)),
            }
        }
        Self::new(knots)
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    fn cdf(&self, t: f64) -> f64 {
        let k = &self.knots;
        if t < k[0].0 {
            return 0.0;
        }
        if t >= k[k.len() - 1].0 {
            return 1.0;
        }
        // index of the last knot with value <= t
        let i = k.partition_point(|&(v, _)| v <= t) - 1;
        interpolate(k[i], k[i + 1], t)
    }

    fn quantile(&self, alpha: f64) -> f64 {
        let k = &self.knots;
        if alpha <= k[0].1 {
            return k[0].0;
        }
        let j = k.partition_point(|&(_, p)| p < alpha);
        let (v0, p0) = k[j - 1];
        let (v1, p1) = k[j];
        v0 + (alpha - p0) / (p1 - p0) * (v1 - v0)
    }

    /// Integral of `F` over `[lo, hi]`; `lo` may be `-inf`.
    fn integral_cdf(&self, lo: f64, hi: f64) -> f64 {
        let k = &self.knots;
        let mut total = 0.0;
        for w in k.windows(2) {
            let a = lo.max(w[0].0);
            let b = hi.min(w[1].0);
            if a < b {
                total += (b - a) * 0.5 * (interpolate(w[0], w[1], a) + interpolate(w[0], w[1], b));
            }
        }
        let top = k[k.len() - 1].0;
        total + (hi - lo.max(top)).max(0.0)
    }

    /// Integral of `1 - F` over `[lo, hi]`; `hi` may be `+inf`.
    fn integral_survival(&self, lo: f64, hi: f64) -> f64 {
        let k = &self.knots;
        let mut total = (hi.min(k[0].0) - lo).max(0.0);
        for w in k.windows(2) {
            let a = lo.max(w[0].0);
            let b = hi.min(w[1].0);
            if a < b {
                total += (b - a)
                    * (1.0 - 0.5 * (interpolate(w[0], w[1], a) + interpolate(w[0], w[1], b)));
            }
        }
        total
    }
}

fn interpolate((v0, p0): (f64, f64), (v1, p1): (f64, f64), t: f64) -> f64 {
    p0 + (p1 - p0) * (t - v0) / (v1 - v0)
}

/// Equally weighted sample; its CDF is the right-continuous empirical step function.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSample {
    sorted: Vec<f64>,
}

impl EmpiricalSample {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(FirmError::invalid("empirical sample must be nonempty"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FirmError::invalid("empirical sample values must be finite"));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { sorted: values })
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    fn n(&self) -> f64 {
        self.sorted.len() as f64
    }
}

/// Concrete form of a predictive distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    Gaussian { mean: f64, sd: f64 },
    /// Atom `p0` at `lower`, exponential tail `1 - (1 - p0) exp(-(t - lower) / scale)` above it.
    PointMassExpTail { p0: f64, scale: f64, lower: f64 },
    PiecewiseLinear(PiecewiseLinearCdf),
    Empirical(EmpiricalSample),
}

/// A forecaster's predictive distribution for a real-valued quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveDistribution {
    repr: Representation,
}

impl PredictiveDistribution {
    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        if !mean.is_finite() || !(sd > 0.0 && sd.is_finite()) {
            return Err(FirmError::invalid(format!(
                "Gaussian needs a finite mean and positive sd, got ({mean}, {sd})"
            )));
        }
        Ok(Self {
            repr: Representation::Gaussian { mean, sd },
        })
    }

    pub fn point_mass_exp_tail(p0: f64, scale: f64, lower: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p0) || !(scale > 0.0 && scale.is_finite()) || !lower.is_finite()
        {
            return Err(FirmError::invalid(format!(
                "exponential tail needs p0 in [0, 1), positive scale, finite lower bound; got ({p0}, {scale}, {lower})"
            )));
        }
        Ok(Self {
            repr: Representation::PointMassExpTail { p0, scale, lower },
        })
    }

    pub fn piecewise_linear(knots: Vec<(f64, f64)>) -> Result<Self> {
        Ok(PiecewiseLinearCdf::new(knots)?.into())
    }

    pub fn empirical(values: Vec<f64>) -> Result<Self> {
        Ok(EmpiricalSample::new(values)?.into())
    }

    /// Degenerate distribution at `value`.
    pub fn point_mass(value: f64) -> Result<Self> {
        Self::empirical(vec![value])
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    /// `F(t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        match &self.repr {
            Representation::Gaussian { mean, sd } => norm_cdf((t - mean) / sd),
            Representation::PointMassExpTail { p0, scale, lower } => {
                if t < *lower {
                    0.0
                } else {
                    1.0 - (1.0 - p0) * (-(t - lower) / scale).exp()
                }
            }
            Representation::PiecewiseLinear(p) => p.cdf(t),
            Representation::Empirical(s) => {
                s.sorted.partition_point(|&v| v <= t) as f64 / s.n()
            }
        }
    }

    /// Left limit `F(t-)`.
    pub fn cdf_left(&self, t: f64) -> f64 {
        match &self.repr {
            Representation::Gaussian { .. } => self.cdf(t),
            Representation::PointMassExpTail { lower, .. } => {
                if t <= *lower {
                    0.0
                } else {
                    self.cdf(t)
                }
            }
            Representation::PiecewiseLinear(p) => {
                if t <= p.knots[0].0 {
                    0.0
                } else {
                    p.cdf(t)
                }
            }
            Representation::Empirical(s) => s.sorted.partition_point(|&v| v < t) as f64 / s.n(),
        }
    }

    pub fn mean(&self) -> f64 {
        match &self.repr {
            Representation::Gaussian { mean, .. } => *mean,
            Representation::PointMassExpTail { p0, scale, lower } => lower + (1.0 - p0) * scale,
            Representation::PiecewiseLinear(p) => {
                let start = p.knots[0].0;
                start + p.integral_survival(start, f64::INFINITY)
            }
            Representation::Empirical(s) => s.sorted.iter().sum::<f64>() / s.n(),
        }
    }

    /// Lower `alpha`-quantile `inf { t : F(t) >= alpha }`.
    pub fn quantile(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        Ok(match &self.repr {
            Representation::Gaussian { mean, sd } => mean + sd * norm_ppf(alpha),
            Representation::PointMassExpTail { p0, scale, lower } => {
                if alpha <= *p0 {
                    *lower
                } else {
                    lower - scale * ((1.0 - alpha) / (1.0 - p0)).ln()
                }
            }
            Representation::PiecewiseLinear(p) => p.quantile(alpha),
            Representation::Empirical(s) => {
                let n = s.sorted.len();
                let k = ((alpha * n as f64).ceil() as usize).clamp(1, n);
                // guard against alpha * n rounding up past an exact integer
                let k = if k > 1 && (k - 1) as f64 / n as f64 >= alpha {
                    k - 1
                } else {
                    k
                };
                s.sorted[k - 1]
            }
        })
    }

    /// Whether `x` belongs to the set of `alpha`-quantiles, i.e. `F(x-) <= alpha <= F(x)`.
    pub fn is_quantile(&self, alpha: f64, x: f64) -> bool {
        self.cdf_left(x) <= alpha && alpha <= self.cdf(x)
    }

    /// `int_[lo, hi] F(t) dt`; `lo` may be `-inf`.
    pub fn integral_cdf(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        match &self.repr {
            Representation::Gaussian { mean, sd } => {
                let upper = gauss_cdf_antiderivative((hi - mean) / sd);
                let lower = if lo == f64::NEG_INFINITY {
                    0.0
                } else {
                    gauss_cdf_antiderivative((lo - mean) / sd)
                };
                sd * (upper - lower)
            }
            Representation::PointMassExpTail { p0, scale, lower } => {
                if hi <= *lower {
                    return 0.0;
                }
                let start = lo.max(*lower);
                let len = hi - start;
                len - exp_tail_mass(1.0 - p0, *scale, start - lower, len)
            }
            Representation::PiecewiseLinear(p) => p.integral_cdf(lo, hi),
            Representation::Empirical(s) => {
                s.sorted
                    .iter()
                    .map(|&y| (hi - lo.max(y)).max(0.0))
                    .sum::<f64>()
                    / s.n()
            }
        }
    }

    /// `int_[lo, hi] (1 - F(t)) dt`; `hi` may be `+inf`.
    pub fn integral_survival(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        match &self.repr {
            Representation::Gaussian { mean, sd } => {
                let lower = gauss_survival_tail((lo - mean) / sd);
                let upper = if hi == f64::INFINITY {
                    0.0
                } else {
                    gauss_survival_tail((hi - mean) / sd)
                };
                sd * (lower - upper)
            }
            Representation::PointMassExpTail { p0, scale, lower } => {
                let below = (hi.min(*lower) - lo).max(0.0);
                let start = lo.max(*lower);
                if hi <= start {
                    return below;
                }
                below + exp_tail_mass(1.0 - p0, *scale, start - lower, hi - start)
            }
            Representation::PiecewiseLinear(p) => p.integral_survival(lo, hi),
            Representation::Empirical(s) => {
                s.sorted
                    .iter()
                    .map(|&y| (hi.min(y) - lo).max(0.0))
                    .sum::<f64>()
                    / s.n()
            }
        }
    }

    /// Huber-quantile residual `(1 - alpha) int_[x-a, x] F - alpha int_[x, x+a] (1 - F)`.
    ///
    /// Nondecreasing in `x`; its roots are the Huber quantiles. With `a = inf`
    /// the integrals run over half-lines and the roots are the expectile.
    pub fn huber_residual(&self, params: HuberParams, x: f64) -> f64 {
        let (below, above) = self.huber_sides(params, x);
        (1.0 - params.alpha) * below - params.alpha * above
    }

    /// Residual divided by the sum of both weighted sides (or by 1 if that sum vanishes).
    pub fn huber_relative_residual(&self, params: HuberParams, x: f64) -> f64 {
        let (below, above) = self.huber_sides(params, x);
        let l = (1.0 - params.alpha) * below;
        let r = params.alpha * above;
        let scale = l + r;
        if scale > 0.0 {
            (l - r) / scale
        } else {
            l - r
        }
    }

    fn huber_sides(&self, params: HuberParams, x: f64) -> (f64, f64) {
        let a = params.a;
        if a == f64::INFINITY {
            (
                self.integral_cdf(f64::NEG_INFINITY, x),
                self.integral_survival(x, f64::INFINITY),
            )
        } else {
            (self.integral_cdf(x - a, x), self.integral_survival(x, x + a))
        }
    }

    /// Huber quantile `H^alpha_a(F)`.
    ///
    /// `a = 0` returns [`quantile`](Self::quantile). Otherwise bisection on the
    /// monotone residual; when the root set is an interval the left end is
    /// approached.
    pub fn huber_quantile(&self, params: HuberParams) -> Result<f64> {
        if params.a == 0.0 {
            return self.quantile(params.alpha);
        }
        let width_pad = if params.a.is_finite() { params.a } else { 0.0 };
        let mut lo = self.quantile(params.alpha.min(BRACKET_TAIL))? - width_pad;
        let mut hi = self.quantile(params.alpha.max(1.0 - BRACKET_TAIL))? + width_pad;
        let mut step = (hi - lo).max(1.0);

        let residual = |x: f64| self.huber_residual(params, x);
        let mut expansions = 0;
        while residual(lo) >= 0.0 {
            lo -= step;
            step *= 2.0;
            expansions += 1;
            if expansions > SOLVER_MAX_ITER {
                return Err(FirmError::SolverFailure { iterations: expansions, lo, hi });
            }
        }
        while residual(hi) < 0.0 {
            hi += step;
            step *= 2.0;
            expansions += 1;
            if expansions > SOLVER_MAX_ITER {
                return Err(FirmError::SolverFailure { iterations: expansions, lo, hi });
            }
        }

        let (below, above) = self.huber_sides(params, hi);
        let scale = ((1.0 - params.alpha) * below + params.alpha * above).max(f64::MIN_POSITIVE);
        for _ in 0..SOLVER_MAX_ITER {
            let mid = lo + 0.5 * (hi - lo);
            if mid <= lo || mid >= hi {
                return Ok(hi);
            }
            let r = residual(mid);
            if r.is_nan() {
                return Err(FirmError::SolverFailure { iterations: SOLVER_MAX_ITER, lo, hi });
            }
            if r >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if r.abs() <= SOLVER_RESIDUAL_TOL * scale
                || hi - lo <= SOLVER_X_TOL * hi.abs().max(1.0)
            {
                return Ok(if r.abs() <= SOLVER_RESIDUAL_TOL * scale { mid } else { hi });
            }
        }
        Err(FirmError::SolverFailure { iterations: SOLVER_MAX_ITER, lo, hi })
    }

    /// `alpha`-expectile: the unique `x` with `alpha E[(Y-x)+] = (1-alpha) E[(x-Y)+]`.
    pub fn expectile(&self, alpha: f64) -> Result<f64> {
        self.huber_quantile(HuberParams::new(alpha, f64::INFINITY)?)
    }

    /// Copy shifted by `c` (the distribution of `Y + c`).
    pub fn shifted(&self, c: f64) -> Self {
        let repr = match &self.repr {
            Representation::Gaussian { mean, sd } => Representation::Gaussian {
                mean: mean + c,
                sd: *sd,
            },
            Representation::PointMassExpTail { p0, scale, lower } => {
                Representation::PointMassExpTail {
                    p0: *p0,
                    scale: *scale,
                    lower: lower + c,
                }
            }
            Representation::PiecewiseLinear(p) => Representation::PiecewiseLinear(PiecewiseLinearCdf {
                knots: p.knots.iter().map(|&(v, q)| (v + c, q)).collect(),
            }),
            Representation::Empirical(s) => Representation::Empirical(EmpiricalSample {
                sorted: s.sorted.iter().map(|v| v + c).collect(),
            }),
        };
        Self { repr }
    }
}

impl From<PiecewiseLinearCdf> for PredictiveDistribution {
    fn from(p: PiecewiseLinearCdf) -> Self {
        Self {
            repr: Representation::PiecewiseLinear(p),
        }
    }
}

impl From<EmpiricalSample> for PredictiveDistribution {
    fn from(s: EmpiricalSample) -> Self {
        Self {
            repr: Representation::Empirical(s),
        }
    }
}

/// `int_{-inf}^{z} Phi = z Phi(z) + phi(z)`, written to avoid cancellation for large `z`.
fn gauss_cdf_antiderivative(z: f64) -> f64 {
    if z < 0.0 {
        z * norm_cdf(z) + norm_pdf(z)
    } else {
        z + gauss_survival_tail(z)
    }
}

/// `int_{z}^{inf} (1 - Phi) = phi(z) - z (1 - Phi(z))`.
fn gauss_survival_tail(z: f64) -> f64 {
    if z >= 0.0 {
        norm_pdf(z) - z * norm_cdf(-z)
    } else {
        -z + gauss_cdf_antiderivative(z)
    }
}

/// `int_{offset}^{offset+len} q exp(-u / scale) du`.
fn exp_tail_mass(q: f64, scale: f64, offset: f64, len: f64) -> f64 {
    -q * scale * (-offset / scale).exp() * (-len / scale).exp_m1()
}
