//! Perfectly calibrated Gaussian forecast systems and the experiments run on them.
//!
//! The observation is `Y = Y_1 + Y_2` with independent `Y_1 ~ N(mu, sigma_1^2)`
//! and `Y_2 ~ N(0, sigma_2^2)`. The forecaster knows `Y_1` and issues
//! `N(Y_1, sigma_2^2)`, which is calibrated by construction. `sigma_2 / sigma`
//! is the relative predictive uncertainty; the event threshold is placed so that
//! `P(Y > theta_1)` equals the base rate.
//!
//! Every experiment is a pure function of its seed. Work is split into units
//! (trials, chunks of cases) and unit `k` draws from ChaCha8 stream `k`, so
//! results do not depend on how rayon schedules the units.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::PredictiveDistribution;
use crate::error::{FirmError, Result};
use crate::special::{norm_cdf, norm_ppf};
use crate::verification::{estimate_alpha_naive, estimate_alpha_signal_detection, pod, far, BinaryCounts};

/// Cases per RNG stream in the case-level experiments.
const CHUNK: usize = 1 << 16;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(FirmError::invalid(format!("{name} must be in (0, 1), got {p}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SyntheticSystem {
    mu: f64,
    sigma: f64,
    rel_uncertainty: f64,
    base_rate: f64,
}

impl SyntheticSystem {
    pub fn new(mu: f64, sigma: f64, rel_uncertainty: f64, base_rate: f64) -> Result<Self> {
        if !mu.is_finite() || !(sigma > 0.0 && sigma.is_finite()) {
            return Err(FirmError::invalid("need a finite mean and a positive standard deviation"));
        }
        if !(0.0..=1.0).contains(&rel_uncertainty) {
            return Err(FirmError::invalid(format!(
                "relative uncertainty must be in [0, 1], got {rel_uncertainty}"
            )));
        }
        check_probability("base rate", base_rate)?;
        Ok(Self {
            mu,
            sigma,
            rel_uncertainty,
            base_rate,
        })
    }

    /// Standard climate `N(0, 1)`.
    pub fn standard(rel_uncertainty: f64, base_rate: f64) -> Result<Self> {
        Self::new(0.0, 1.0, rel_uncertainty, base_rate)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn rel_uncertainty(&self) -> f64 {
        self.rel_uncertainty
    }

    pub fn base_rate(&self) -> f64 {
        self.base_rate
    }

    pub fn sigma2(&self) -> f64 {
        self.rel_uncertainty * self.sigma
    }

    pub fn sigma1(&self) -> f64 {
        (self.sigma * self.sigma - self.sigma2() * self.sigma2()).max(0.0).sqrt()
    }

    /// `mu + sigma Phi^-1(1 - r_1)`.
    pub fn theta1(&self) -> f64 {
        self.mu + self.sigma * norm_ppf(1.0 - self.base_rate)
    }

    /// Draw `(y_1, y)`: the forecaster's information and the observation.
    pub fn draw_pair(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        let y1 = self.mu + self.sigma1() * normal(rng);
        let y2 = self.sigma2() * normal(rng);
        (y1, y1 + y2)
    }

    /// Draw the issued predictive distribution and the observation. With zero
    /// relative uncertainty the predictive is a point mass at the observation.
    pub fn draw_case(&self, rng: &mut ChaCha8Rng) -> (PredictiveDistribution, f64) {
        let (y1, y) = self.draw_pair(rng);
        let f = if self.sigma2() > 0.0 {
            PredictiveDistribution::gaussian(y1, self.sigma2()).expect("positive sd")
        } else {
            PredictiveDistribution::point_mass(y).expect("finite value")
        };
        (f, y)
    }

    /// Whether the `alpha`-quantile of the predictive for `y_1` exceeds `theta`,
    /// i.e. whether the event probability exceeds `1 - alpha`.
    pub fn warns(&self, y1: f64, alpha: f64, theta: f64) -> bool {
        y1 + self.sigma2() * norm_ppf(alpha) > theta
    }

    /// `(P(Y > theta), P(Y_1 > theta))`.
    pub fn miss_vs_warn_probability(&self, theta: f64) -> Result<(f64, f64)> {
        let s1 = self.sigma1();
        if s1 == 0.0 {
            return Err(FirmError::invalid(
                "the warning probability is degenerate when the forecaster has no information",
            ));
        }
        let total = (s1 * s1 + self.sigma2() * self.sigma2()).sqrt();
        Ok((
            norm_cdf(-(theta - self.mu) / total),
            norm_cdf(-(theta - self.mu) / s1),
        ))
    }
}

/// Kolmogorov-Smirnov distance between the sample and the uniform distribution.
pub fn ks_uniform_statistic(mut u: Vec<f64>) -> f64 {
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    u.iter()
        .enumerate()
        .map(|(i, &v)| ((i + 1) as f64 / n - v).max(v - i as f64 / n))
        .fold(0.0, f64::max)
}

/// PIT values `F(y)` of `n` draws.
pub fn pit_values(system: &SyntheticSystem, n: usize, seed: u64) -> Result<Vec<f64>> {
    if system.sigma2() == 0.0 {
        return Err(FirmError::invalid("PIT values need a positive predictive spread"));
    }
    let chunks = n.div_ceil(CHUNK);
    Ok((0..chunks)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut rng = stream_rng(seed, k as u64);
            let len = CHUNK.min(n - k * CHUNK);
            (0..len)
                .map(|_| {
                    let (y1, y) = system.draw_pair(&mut rng);
                    norm_cdf((y - y1) / system.sigma2())
                })
                .collect::<Vec<_>>()
        })
        .collect())
}

/// Settings for the POD/FAR target experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PodFarConfig {
    pub alpha: f64,
    pub base_rate: f64,
    pub rel_uncertainty: f64,
    pub cases_per_trial: usize,
    /// Trials are added in batches of this size.
    pub batch: usize,
    /// Stop once the binomial standard error is below this.
    pub target_se: f64,
    pub max_trials: usize,
    pub pod_min: f64,
    pub far_max: f64,
    pub seed: u64,
}

impl PodFarConfig {
    pub fn new(alpha: f64, base_rate: f64, rel_uncertainty: f64, seed: u64) -> Self {
        Self {
            alpha,
            base_rate,
            rel_uncertainty,
            cases_per_trial: 1000,
            batch: 500,
            target_se: 0.008,
            max_trials: 200_000,
            pod_min: 0.7,
            far_max: 0.4,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PodFarResult {
    pub alpha: f64,
    pub base_rate: f64,
    pub rel_uncertainty: f64,
    pub probability: f64,
    pub standard_error: f64,
    pub trials: usize,
}

/// Binary counts of one trial of `cases` warn-iff-`P(event) > 1 - alpha` decisions.
fn trial_counts(system: &SyntheticSystem, alpha: f64, cases: usize, rng: &mut ChaCha8Rng) -> BinaryCounts {
    let theta = system.theta1();
    let mut c = BinaryCounts::default();
    for _ in 0..cases {
        let (y1, y) = system.draw_pair(rng);
        match (system.warns(y1, alpha, theta), y > theta) {
            (true, true) => c.hits += 1,
            (false, true) => c.misses += 1,
            (true, false) => c.false_alarms += 1,
            (false, false) => c.correct_negatives += 1,
        }
    }
    c
}

/// Probability that a trial meets `POD >= pod_min` and `FAR <= far_max`.
/// A trial whose POD or FAR is undefined does not meet the target.
pub fn pod_far_target_experiment(cfg: &PodFarConfig) -> Result<PodFarResult> {
    check_probability("alpha", cfg.alpha)?;
    let system = SyntheticSystem::standard(cfg.rel_uncertainty, cfg.base_rate)?;
    if cfg.cases_per_trial == 0 || cfg.batch == 0 || cfg.max_trials < cfg.batch {
        return Err(FirmError::invalid("trial sizes must be positive"));
    }
    if !(cfg.target_se > 0.0) {
        return Err(FirmError::invalid("target standard error must be positive"));
    }
    let meets = |c: &BinaryCounts| match (pod(c), far(c)) {
        (Ok(p), Ok(f)) => p >= cfg.pod_min && f <= cfg.far_max,
        _ => false,
    };
    let mut successes = 0usize;
    let mut trials = 0usize;
    loop {
        let start = trials;
        successes += (start..start + cfg.batch)
            .into_par_iter()
            .filter(|&t| {
                let mut rng = stream_rng(cfg.seed, t as u64);
                meets(&trial_counts(&system, cfg.alpha, cfg.cases_per_trial, &mut rng))
            })
            .count();
        trials += cfg.batch;
        let p = successes as f64 / trials as f64;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        if se < cfg.target_se || trials + cfg.batch > cfg.max_trials {
            return Ok(PodFarResult {
                alpha: cfg.alpha,
                base_rate: cfg.base_rate,
                rel_uncertainty: cfg.rel_uncertainty,
                probability: p,
                standard_error: se,
                trials,
            });
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaBiasPoint {
    pub alpha: f64,
    /// `f / (f + m)`; `None` when undefined.
    pub alpha_hat: Option<f64>,
    /// Signal-detection estimate; `None` when undefined.
    pub alpha_tilde: Option<f64>,
    pub counts: BinaryCounts,
}

/// For each `alpha`, warn iff the event probability exceeds `1 - alpha` and
/// estimate `alpha` back from the resulting table. All grid points share the
/// same simulated cases.
pub fn alpha_bias_experiment(
    alpha_grid: &[f64],
    base_rate: f64,
    rel_uncertainty: f64,
    n_cases: usize,
    seed: u64,
) -> Result<Vec<AlphaBiasPoint>> {
    for &a in alpha_grid {
        check_probability("alpha", a)?;
    }
    if n_cases == 0 {
        return Err(FirmError::invalid("at least one case is required"));
    }
    let system = SyntheticSystem::standard(rel_uncertainty, base_rate)?;
    let theta = system.theta1();
    // warn iff y_1 exceeds theta - sigma_2 Phi^-1(alpha)
    let cutoffs: Vec<f64> = alpha_grid
        .iter()
        .map(|&a| theta - system.sigma2() * norm_ppf(a))
        .collect();
    let chunks = n_cases.div_ceil(CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            let mut counts = vec![BinaryCounts::default(); cutoffs.len()];
            for _ in 0..CHUNK.min(n_cases - k * CHUNK) {
                let (y1, y) = system.draw_pair(&mut rng);
                let event = y > theta;
                for (c, &cut) in counts.iter_mut().zip(&cutoffs) {
                    match (y1 > cut, event) {
                        (true, true) => c.hits += 1,
                        (false, true) => c.misses += 1,
                        (true, false) => c.false_alarms += 1,
                        (false, false) => c.correct_negatives += 1,
                    }
                }
            }
            counts
        })
        .reduce(
            || vec![BinaryCounts::default(); cutoffs.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    x.hits += y.hits;
                    x.misses += y.misses;
                    x.false_alarms += y.false_alarms;
                    x.correct_negatives += y.correct_negatives;
                }
                a
            },
        );
    Ok(alpha_grid
        .iter()
        .zip(counts)
        .map(|(&alpha, c)| AlphaBiasPoint {
            alpha,
            alpha_hat: estimate_alpha_naive(&c).ok(),
            alpha_tilde: estimate_alpha_signal_detection(&c).ok(),
            counts: c,
        })
        .collect())
}

/// Costs `t_ij` of forecasting `C_i` early and `C_j` at the standard lead time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeadTimePenalty {
    entries: [[f64; 2]; 2],
}

impl LeadTimePenalty {
    pub fn new(entries: [[f64; 2]; 2]) -> Result<Self> {
        if entries[0][0] != 0.0 || entries[1][1] != 0.0 {
            return Err(FirmError::invalid("the penalty matrix must have a zero diagonal"));
        }
        if entries.iter().flatten().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(FirmError::invalid("penalties must be nonnegative and finite"));
        }
        Ok(Self { entries })
    }

    /// `[[0, 1], [retraction, 0]]`: warning late costs 1, retracting an early warning `retraction`.
    pub fn retraction(retraction: f64) -> Result<Self> {
        Self::new([[0.0, 1.0], [retraction, 0.0]])
    }

    pub fn get(&self, early: usize, standard: usize) -> f64 {
        self.entries[early][standard]
    }
}

/// `0.05, 0.10, ..., 0.95`.
pub fn default_beta_grid() -> Vec<f64> {
    (1..20).map(|k| k as f64 / 20.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaSweep {
    pub best_beta: f64,
    /// `(beta, S(beta, alpha))` in grid order.
    pub scores: Vec<(f64, f64)>,
}

/// Score every early-warning level `beta` against the standard-lead decisions
/// made at `alpha`, `S(beta, alpha) = sum t_ij n_ij`, and return the minimiser
/// (the smaller `beta` on ties).
pub fn optimize_early_beta(
    pairs: &[(PredictiveDistribution, PredictiveDistribution)],
    alpha: f64,
    theta: f64,
    penalty: &LeadTimePenalty,
    beta_grid: &[f64],
) -> Result<BetaSweep> {
    if pairs.is_empty() {
        return Err(FirmError::InsufficientData("no paired forecasts".into()));
    }
    if beta_grid.is_empty() {
        return Err(FirmError::invalid("the beta grid is empty"));
    }
    check_probability("alpha", alpha)?;
    let standard: Vec<usize> = pairs
        .iter()
        .map(|(_, s)| Ok(usize::from(s.quantile(alpha)? > theta)))
        .collect::<Result<_>>()?;
    let scores = beta_grid
        .iter()
        .map(|&beta| {
            check_probability("beta", beta)?;
            let mut total = 0.0;
            for ((early, _), &j) in pairs.iter().zip(&standard) {
                let i = usize::from(early.quantile(beta)? > theta);
                total += penalty.get(i, j);
            }
            Ok((beta, total))
        })
        .collect::<Result<Vec<_>>>()?;
    let best_beta = scores
        .iter()
        .copied()
        .reduce(|best, cur| {
            if cur.1 < best.1 || (cur.1 == best.1 && cur.0 < best.0) {
                cur
            } else {
                best
            }
        })
        .expect("nonempty grid")
        .0;
    Ok(BetaSweep { best_beta, scores })
}

/// Paired early and standard lead-time forecasts of one calibrated system.
///
/// `Y = A + B + C` with independent Gaussian parts. The standard forecast knows
/// `A + B` and has spread `rel_standard * sigma` (the sd of `C`); the early
/// forecast knows only `A` and has spread `rel_early * sigma` (the sd of `B + C`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeadTimeSystem {
    pub mu: f64,
    pub sigma: f64,
    pub base_rate: f64,
    pub rel_standard: f64,
    pub rel_early: f64,
}

impl LeadTimeSystem {
    pub fn new(mu: f64, sigma: f64, base_rate: f64, rel_standard: f64, rel_early: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(FirmError::invalid("sigma must be positive"));
        }
        check_probability("base rate", base_rate)?;
        if !(0.0 < rel_standard && rel_standard <= rel_early && rel_early < 1.0) {
            return Err(FirmError::invalid(
                "need 0 < relative standard spread <= relative early spread < 1",
            ));
        }
        Ok(Self {
            mu,
            sigma,
            base_rate,
            rel_standard,
            rel_early,
        })
    }

    pub fn theta(&self) -> f64 {
        self.mu + self.sigma * norm_ppf(1.0 - self.base_rate)
    }

    /// `(early, standard, observation)`.
    pub fn draw(&self, rng: &mut ChaCha8Rng) -> (PredictiveDistribution, PredictiveDistribution, f64) {
        let (e, s) = (self.rel_early, self.rel_standard);
        let a = self.mu + self.sigma * (1.0 - e * e).sqrt() * normal(rng);
        let b = self.sigma * (e * e - s * s).sqrt() * normal(rng);
        let c = self.sigma * s * normal(rng);
        let early = PredictiveDistribution::gaussian(a, e * self.sigma).expect("positive sd");
        let standard = PredictiveDistribution::gaussian(a + b, s * self.sigma).expect("positive sd");
        (early, standard, a + b + c)
    }

    pub fn draw_pairs(&self, n: usize, seed: u64) -> Vec<(PredictiveDistribution, PredictiveDistribution)> {
        let chunks = n.div_ceil(CHUNK);
        (0..chunks)
            .into_par_iter()
            .flat_map_iter(|k| {
                let mut rng = stream_rng(seed, k as u64);
                (0..CHUNK.min(n - k * CHUNK))
                    .map(|_| {
                        let (e, s, _) = self.draw(&mut rng);
                        (e, s)
                    })
                    .collect::<Vec<_>>()
            })
            .collect()
    }
}

/// Simulate `n_cases` paired forecasts and sweep `beta`.
pub fn lead_time_experiment(
    system: &LeadTimeSystem,
    alpha: f64,
    penalty: &LeadTimePenalty,
    beta_grid: &[f64],
    n_cases: usize,
    seed: u64,
) -> Result<BetaSweep> {
    let pairs = system.draw_pairs(n_cases, seed);
    optimize_early_beta(&pairs, alpha, system.theta(), penalty, beta_grid)
}
