//! Command implementations. Each returns a [`Report`]; printing is left to the caller.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use firm_core::inference::{
    confidence_interval, default_block_length, difference_series, one_sided_test, Alternative, CiMethod,
    ScoreSeries,
};
use firm_core::synthetic::{
    alpha_bias_experiment, lead_time_experiment, pod_far_target_experiment, LeadTimePenalty, LeadTimeSystem,
    PodFarConfig,
};
use firm_core::verification::{estimate_alpha_naive, estimate_alpha_signal_detection};
use firm_core::{firm::firm_score, ContingencyTable, FirmSpec, ScoreBreakdown};
use serde_json::{json, Value};

use crate::config::ServiceConfig;
use crate::dataset::{self, Prepared, PreparedForecast};
use crate::error::{CliError, Result};
use crate::output::{Cell, Report, Table};
use crate::{Inputs, MethodChoice, Side, Synthetic};

/// Cases ready to score, each with the location that picks its spec.
struct Cases {
    items: Vec<(String, Prepared)>,
}

impl Cases {
    fn load(path: &Path) -> Result<Self> {
        let records = dataset::load(path)?;
        let items = records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.prepare()
                    .map(|p| (r.location_id.clone(), p))
                    .map_err(|e| CliError::from(e).context(format!("{}: record {}", path.display(), i + 1)))
            })
            .collect::<Result<_>>()?;
        Ok(Self { items })
    }

    fn all_distributions(&self, path: &Path) -> Result<()> {
        match self
            .items
            .iter()
            .position(|(_, p)| !matches!(p.forecast, PreparedForecast::Distribution(_)))
        {
            Some(i) => Err(CliError::Input(format!(
                "{}: record {}: this command needs distribution forecasts (dist=...)",
                path.display(),
                i + 1
            ))),
            None => Ok(()),
        }
    }
}

struct Evaluation {
    n: usize,
    sum: ScoreBreakdown,
    table: Option<ContingencyTable>,
    /// Per-date `(sum of totals, count)`.
    daily: BTreeMap<NaiveDate, (f64, usize)>,
}

impl Evaluation {
    fn mean(&self) -> ScoreBreakdown {
        self.sum.scaled(1.0 / self.n as f64)
    }
}

/// Score every case. Distribution forecasts are turned into categories at
/// `decision_alpha`, or at each spec's own alpha when `None`.
fn evaluate(cfg: &ServiceConfig, cases: &Cases, decision_alpha: Option<f64>) -> Result<Evaluation> {
    let k = cfg.categories();
    let mut table = if cfg.spec().a() == 0.0 {
        Some(ContingencyTable::zeros(k)?)
    } else {
        None
    };
    let mut sum = ScoreBreakdown::default();
    let mut daily: BTreeMap<NaiveDate, (f64, usize)> = BTreeMap::new();
    for (i, (loc, case)) in cases.items.iter().enumerate() {
        let at = |e: firm_core::FirmError| CliError::from(e).context(format!("record {}", i + 1));
        let spec = cfg.spec_for(loc);
        let forecast = case
            .forecast
            .issue(spec, decision_alpha.unwrap_or(spec.alpha()))
            .map_err(at)?;
        let s = firm_score(spec, forecast, case.observation).map_err(at)?;
        if let Some(t) = table.as_mut() {
            let (f, o) = (forecast.category(spec.thresholds()), case.observation.category(spec.thresholds()));
            t.set(f, o, t.get(f, o) + 1);
        }
        sum += s;
        let d = daily.entry(case.date).or_insert((0.0, 0));
        d.0 += s.total;
        d.1 += 1;
    }
    Ok(Evaluation {
        n: cases.items.len(),
        sum,
        table,
        daily,
    })
}

fn breakdown_json(b: &ScoreBreakdown) -> Value {
    json!({"total": b.total, "miss": b.miss, "false_alarm": b.false_alarm})
}

fn spec_json(spec: &FirmSpec) -> Value {
    serde_json::to_value(spec).expect("spec serialises")
}

pub fn score(inputs: &Inputs, table_out: Option<&Path>) -> Result<Report> {
    let cfg = ServiceConfig::load(&inputs.config)?;
    let cases = Cases::load(&inputs.data)?;
    let ev = evaluate(&cfg, &cases, None)?;
    let mean = ev.mean();
    let share = if mean.total > 0.0 { Some(mean.miss_share()) } else { None };

    let labels = cfg.labels();
    let mut cols = vec!["forecast\\observed"];
    cols.extend(labels.iter().map(String::as_str));
    let mut table = Table::new(&cols);
    if let Some(t) = &ev.table {
        for (i, row) in t.rows().iter().enumerate() {
            let mut cells: Vec<Cell> = vec![labels[i].as_str().into()];
            cells.extend(row.iter().map(|&c| Cell::from(c)));
            table.push(cells);
        }
        if let Some(path) = table_out {
            let file = std::fs::File::create(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
            t.write_csv(file, Some(labels))?;
        }
    } else if table_out.is_some() {
        return Err(CliError::Usage("--table-out needs a = 0".into()));
    }

    Ok(Report {
        summary: vec![
            ("records".into(), ev.n.into()),
            ("mean_score".into(), mean.total.into()),
            ("miss".into(), mean.miss.into()),
            ("false_alarm".into(), mean.false_alarm.into()),
            ("miss_share".into(), share.into()),
        ],
        json: json!({
            "command": "score",
            "spec": spec_json(cfg.spec()),
            "records": ev.n,
            "mean": breakdown_json(&mean),
            "miss_share": share,
            "labels": labels,
            "contingency_table": ev.table.as_ref().map(ContingencyTable::rows),
        }),
        table,
        warnings: Vec::new(),
    })
}

fn sweep_report(command: &str, param: &str, points: &[(f64, ScoreBreakdown)], n: usize) -> Report {
    let best = points
        .iter()
        .copied()
        .reduce(|b, c| if c.1.total < b.1.total { c } else { b })
        .expect("nonempty grid");
    let mut table = Table::new(&[param, "mean_score", "miss", "false_alarm"]);
    for (x, m) in points {
        table.push(vec![(*x).into(), m.total.into(), m.miss.into(), m.false_alarm.into()]);
    }
    let rows: Vec<Value> = points
        .iter()
        .map(|(x, m)| {
            let mut v = breakdown_json(m);
            v[param] = json!(x);
            v
        })
        .collect();
    let best_key = format!("best_{param}");
    Report {
        summary: vec![
            ("records".into(), n.into()),
            (best_key.clone(), best.0.into()),
            ("best_mean_score".into(), best.1.total.into()),
        ],
        table,
        json: json!({
            "command": command,
            "records": n,
            best_key: best.0,
            "best_mean_score": best.1.total,
            "points": rows,
        }),
        warnings: Vec::new(),
    }
}

pub fn sweep_beta(inputs: &Inputs, betas: &[f64]) -> Result<Report> {
    let cfg = ServiceConfig::load(&inputs.config)?;
    let cases = Cases::load(&inputs.data)?;
    cases.all_distributions(&inputs.data)?;
    let points = betas
        .iter()
        .map(|&b| {
            let ev = evaluate(&cfg, &cases, Some(b)).map_err(|e| e.context(format!("beta {b}")))?;
            Ok((b, ev.mean()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(sweep_report("sweep-beta", "beta", &points, cases.items.len()))
}

pub fn sweep_alpha(inputs: &Inputs, alphas: &[f64]) -> Result<Report> {
    let cfg = ServiceConfig::load(&inputs.config)?;
    let cases = Cases::load(&inputs.data)?;
    let points = alphas
        .iter()
        .map(|&a| {
            let at = |e: CliError| e.context(format!("alpha {a}"));
            let c = cfg.map_specs(|s| s.with_alpha(a)).map_err(at)?;
            let ev = evaluate(&c, &cases, None).map_err(at)?;
            Ok((a, ev.mean()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(sweep_report("sweep-alpha", "alpha", &points, cases.items.len()))
}

pub struct CompareOptions {
    pub method: MethodChoice,
    pub horizon: usize,
    pub block_length: Option<usize>,
    pub replicates: usize,
    pub one_sided: Option<Side>,
    pub level: f64,
    pub seed: u64,
}

fn daily_series(ev: &Evaluation) -> Result<ScoreSeries> {
    let (dates, means) = ev.daily.iter().map(|(d, (s, n))| (*d, s / *n as f64)).unzip();
    Ok(ScoreSeries::new(dates, means)?)
}

pub fn compare(inputs: &Inputs, data_b: &Path, opts: &CompareOptions) -> Result<Report> {
    let cfg = ServiceConfig::load(&inputs.config)?;
    let a = evaluate(&cfg, &Cases::load(&inputs.data)?, None)?;
    let b = evaluate(&cfg, &Cases::load(data_b)?, None)?;
    let diff = difference_series(&daily_series(&a)?, &daily_series(&b)?)?;
    let block = opts.block_length.unwrap_or_else(|| default_block_length(diff.len()));
    let methods = match opts.method {
        MethodChoice::T => vec![CiMethod::StudentT],
        MethodChoice::Dm => vec![CiMethod::DieboldMariano { horizon: opts.horizon }],
        MethodChoice::Bootstrap => vec![CiMethod::Bootstrap {
            block_length: block,
            replicates: opts.replicates,
        }],
        MethodChoice::All => vec![
            CiMethod::StudentT,
            CiMethod::DieboldMariano { horizon: opts.horizon },
            CiMethod::Bootstrap {
                block_length: block,
                replicates: opts.replicates,
            },
        ],
    };

    let mut table = Table::new(&["method", "level", "kind", "estimate", "lower", "upper", "statistic", "reject"]);
    let mut two_sided = Vec::new();
    let mut one_sided = Vec::new();
    let mut warnings = Vec::new();
    let several = methods.len() > 1;
    for m in methods {
        let ci = match confidence_interval(&diff, m, opts.level, opts.seed) {
            Ok(ci) => ci,
            // with several methods one failure should not hide the others
            Err(e) if several => {
                warnings.push(format!("{m}: {e}"));
                let mut row: Vec<Cell> = vec![m.to_string().into(), opts.level.into(), "two-sided".into()];
                row.extend([diff.mean().into(), Cell::Missing, Cell::Missing, Cell::Missing, Cell::Missing]);
                table.push(row);
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let reject = ci.lower > 0.0 || ci.upper < 0.0;
        table.push(vec![
            m.to_string().into(),
            ci.level.into(),
            "two-sided".into(),
            ci.estimate.into(),
            ci.lower.into(),
            ci.upper.into(),
            ci.statistic.into(),
            reject.into(),
        ]);
        for w in &ci.warnings {
            if !warnings.contains(w) {
                warnings.push(w.clone());
            }
        }
        two_sided.push(ci);
        if let Some(side) = opts.one_sided {
            let alt = match side {
                Side::Greater => Alternative::Greater,
                Side::Less => Alternative::Less,
            };
            let r = one_sided_test(&diff, m, opts.level, alt, opts.seed)?;
            let (lower, upper) = match alt {
                Alternative::Greater => (Cell::Num(r.bound), Cell::Missing),
                Alternative::Less => (Cell::Missing, Cell::Num(r.bound)),
            };
            let kind = match alt {
                Alternative::Greater => "greater",
                Alternative::Less => "less",
            };
            table.push(vec![
                m.to_string().into(),
                r.level.into(),
                kind.into(),
                r.estimate.into(),
                lower,
                upper,
                Cell::Missing,
                r.reject.into(),
            ]);
            one_sided.push(r);
        }
    }

    Ok(Report {
        summary: vec![
            ("days".into(), diff.len().into()),
            ("mean_a".into(), a.mean().total.into()),
            ("mean_b".into(), b.mean().total.into()),
            ("mean_daily_difference".into(), diff.mean().into()),
        ],
        table,
        json: json!({
            "command": "compare",
            "days": diff.len(),
            "mean_a": a.mean().total,
            "mean_b": b.mean().total,
            "mean_daily_difference": diff.mean(),
            "seed": opts.seed,
            "intervals": two_sided,
            "one_sided": one_sided,
            "warnings": &warnings,
        }),
        warnings,
    })
}

fn load_table(path: &Path) -> Result<ContingencyTable> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    let t = ContingencyTable::read_csv(std::io::BufReader::new(file))
        .map_err(|e| CliError::from(e).context(path.display()))?;
    if t.total() == 0 {
        return Err(CliError::Input(format!("{}: table is empty", path.display())));
    }
    Ok(t)
}

pub fn estimate_alpha(
    table: Option<&Path>,
    config: Option<&Path>,
    data: Option<&Path>,
    split_after: usize,
) -> Result<Report> {
    let t = match (table, config, data) {
        (Some(p), None, None) => load_table(p)?,
        (None, Some(c), Some(d)) => {
            let cfg = ServiceConfig::load(c)?;
            if cfg.spec().a() != 0.0 {
                return Err(CliError::Usage("tabulating a dataset needs a = 0; pass --table instead".into()));
            }
            evaluate(&cfg, &Cases::load(d)?, None)?.table.expect("a = 0 gives a table")
        }
        _ => return Err(CliError::Usage("give either --table or both --config and --data".into())),
    };
    let c = t.collapse_to_binary(split_after)?;
    let mut warnings = Vec::new();
    let mut keep = |r: firm_core::Result<f64>| match r {
        Ok(v) => Some(v),
        Err(e) => {
            warnings.push(e.to_string());
            None
        }
    };
    let alpha_hat = keep(estimate_alpha_naive(&c));
    let alpha_tilde = keep(estimate_alpha_signal_detection(&c));
    if alpha_hat.is_none() && alpha_tilde.is_none() {
        return Err(CliError::Numerical(format!(
            "neither estimator is defined for this table: {}",
            warnings.join("; ")
        )));
    }
    let mut out = Table::new(&[
        "split_after",
        "hits",
        "misses",
        "false_alarms",
        "correct_negatives",
        "alpha_hat",
        "alpha_tilde",
    ]);
    out.push(vec![
        split_after.into(),
        c.hits.into(),
        c.misses.into(),
        c.false_alarms.into(),
        c.correct_negatives.into(),
        alpha_hat.into(),
        alpha_tilde.into(),
    ]);
    Ok(Report {
        summary: vec![
            ("alpha_hat".into(), alpha_hat.into()),
            ("alpha_tilde".into(), alpha_tilde.into()),
        ],
        table: out,
        json: json!({
            "command": "estimate-alpha",
            "split_after": split_after,
            "counts": c,
            "alpha_hat": alpha_hat,
            "alpha_tilde": alpha_tilde,
        }),
        warnings,
    })
}

pub fn synthetic(cmd: Synthetic, seed: u64) -> Result<Report> {
    match cmd {
        Synthetic::PodFar {
            alphas,
            base_rates,
            rel_uncertainties,
            cases_per_trial,
            target_se,
            max_trials,
        } => {
            let mut table = Table::new(&[
                "base_rate",
                "rel_uncertainty",
                "alpha",
                "probability",
                "standard_error",
                "trials",
            ]);
            let mut rows = Vec::new();
            for &r in &base_rates.0 {
                for &u in &rel_uncertainties.0 {
                    for &a in &alphas.0 {
                        let cfg = PodFarConfig {
                            cases_per_trial,
                            target_se,
                            max_trials,
                            ..PodFarConfig::new(a, r, u, seed)
                        };
                        let res = pod_far_target_experiment(&cfg)?;
                        table.push(vec![
                            r.into(),
                            u.into(),
                            a.into(),
                            res.probability.into(),
                            res.standard_error.into(),
                            res.trials.into(),
                        ]);
                        rows.push(res);
                    }
                }
            }
            Ok(Report {
                summary: vec![("grid_points".into(), rows.len().into())],
                table,
                json: json!({"command": "synthetic pod-far", "seed": seed, "points": rows}),
                warnings: Vec::new(),
            })
        }
        Synthetic::AlphaBias {
            alphas,
            base_rates,
            rel_uncertainties,
            cases,
            full,
        } => {
            let cases = if full { 20_000_000 } else { cases };
            let mut table = Table::new(&[
                "base_rate",
                "rel_uncertainty",
                "alpha",
                "alpha_hat",
                "alpha_tilde",
                "hits",
                "misses",
                "false_alarms",
                "correct_negatives",
            ]);
            let mut rows = Vec::new();
            for &r in &base_rates.0 {
                for &u in &rel_uncertainties.0 {
                    for p in alpha_bias_experiment(&alphas.0, r, u, cases, seed)? {
                        table.push(vec![
                            r.into(),
                            u.into(),
                            p.alpha.into(),
                            p.alpha_hat.into(),
                            p.alpha_tilde.into(),
                            p.counts.hits.into(),
                            p.counts.misses.into(),
                            p.counts.false_alarms.into(),
                            p.counts.correct_negatives.into(),
                        ]);
                        rows.push(json!({
                            "base_rate": r,
                            "rel_uncertainty": u,
                            "alpha": p.alpha,
                            "alpha_hat": p.alpha_hat,
                            "alpha_tilde": p.alpha_tilde,
                            "counts": p.counts,
                        }));
                    }
                }
            }
            Ok(Report {
                summary: vec![
                    ("cases_per_point".into(), cases.into()),
                    ("grid_points".into(), rows.len().into()),
                ],
                table,
                json: json!({"command": "synthetic alpha-bias", "seed": seed, "cases": cases, "points": rows}),
                warnings: Vec::new(),
            })
        }
        Synthetic::Leadtime {
            alpha,
            base_rate,
            rel_standard,
            rel_early,
            retraction,
            cases,
            betas,
        } => {
            let system = LeadTimeSystem::new(0.0, 1.0, base_rate, rel_standard, rel_early)?;
            let penalty = LeadTimePenalty::retraction(retraction)?;
            let sweep = lead_time_experiment(&system, alpha, &penalty, &betas.0, cases, seed)?;
            let mut table = Table::new(&["beta", "score"]);
            for (b, s) in &sweep.scores {
                table.push(vec![(*b).into(), (*s).into()]);
            }
            Ok(Report {
                summary: vec![
                    ("alpha".into(), alpha.into()),
                    ("theta".into(), system.theta().into()),
                    ("cases".into(), cases.into()),
                    ("best_beta".into(), sweep.best_beta.into()),
                ],
                table,
                json: json!({
                    "command": "synthetic leadtime",
                    "seed": seed,
                    "system": system,
                    "alpha": alpha,
                    "retraction": retraction,
                    "cases": cases,
                    "best_beta": sweep.best_beta,
                    "points": sweep.scores.iter().map(|(b, s)| json!({"beta": b, "score": s})).collect::<Vec<_>>(),
                }),
                warnings: Vec::new(),
            })
        }
    }
}
