//! Forecast/observation datasets.
//!
//! One CSV row per case:
//!
//! ```text
//! location_id,date,lead_days,forecast,observation
//! sydney,2023-01-05,1,cat=2,41.2
//! sydney,2023-01-06,1,dist=normal;mean=12;sd=4,9.5
//! ```
//!
//! See FORMATS.md for the cell grammar.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use firm_core::firm::directive_category_at;
use firm_core::{FirmSpec, Forecast, Observation, PredictiveDistribution};

use crate::error::{CliError, Result};

pub const HEADER: [&str; 5] = ["location_id", "date", "lead_days", "forecast", "observation"];

/// Predictive distribution as written in a dataset cell.
#[derive(Debug, Clone, PartialEq)]
pub enum DistSpec {
    Normal { mean: f64, sd: f64 },
    /// `(level, value)` pairs sorted by level, optional lower bound of the support.
    Quantiles { pairs: Vec<(f64, f64)>, min: Option<f64> },
    ExpTail { p0: f64, scale: f64, lower: f64 },
    Empirical { values: Vec<f64> },
}

impl DistSpec {
    pub fn to_distribution(&self) -> firm_core::Result<PredictiveDistribution> {
        match self {
            DistSpec::Normal { mean, sd } => PredictiveDistribution::gaussian(*mean, *sd),
            DistSpec::Quantiles { pairs, min } => Ok(
                firm_core::distributions::PiecewiseLinearCdf::from_quantiles(pairs, *min)?.into(),
            ),
            DistSpec::ExpTail { p0, scale, lower } => {
                PredictiveDistribution::point_mass_exp_tail(*p0, *scale, *lower)
            }
            DistSpec::Empirical { values } => PredictiveDistribution::empirical(values.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForecastCell {
    Category(usize),
    Value(f64),
    Distribution(DistSpec),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObservationCell {
    Category(usize),
    Value(f64),
}

impl From<ObservationCell> for Observation {
    fn from(o: ObservationCell) -> Self {
        match o {
            ObservationCell::Category(k) => Observation::Category(k),
            ObservationCell::Value(v) => Observation::Value(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub location_id: String,
    pub date: NaiveDate,
    pub lead_days: i64,
    pub forecast: ForecastCell,
    pub observation: ObservationCell,
}

/// A record made ready for scoring under one spec.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub date: NaiveDate,
    pub forecast: PreparedForecast,
    pub observation: Observation,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PreparedForecast {
    Category(usize),
    Value(f64),
    Distribution(PredictiveDistribution),
}

impl PreparedForecast {
    /// Forecast to score, deciding from a distribution at `decision_alpha`.
    pub fn issue(&self, spec: &FirmSpec, decision_alpha: f64) -> firm_core::Result<Forecast> {
        Ok(match self {
            PreparedForecast::Category(k) => Forecast::Category(*k),
            PreparedForecast::Value(x) => Forecast::Value(*x),
            PreparedForecast::Distribution(d) => {
                Forecast::Category(directive_category_at(d, spec, decision_alpha)?)
            }
        })
    }
}

impl Record {
    pub fn prepare(&self) -> firm_core::Result<Prepared> {
        Ok(Prepared {
            date: self.date,
            forecast: match &self.forecast {
                ForecastCell::Category(k) => PreparedForecast::Category(*k),
                ForecastCell::Value(x) => PreparedForecast::Value(*x),
                ForecastCell::Distribution(d) => PreparedForecast::Distribution(d.to_distribution()?),
            },
            observation: self.observation.into(),
        })
    }
}

/// Shortest text that parses back to the same `f64`.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn parse_num(s: &str, what: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("{what}: not a number: {s:?}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{what}: value must be finite, got {s:?}"))
    }
}

fn parse_category(s: &str) -> Result<usize, String> {
    s.trim()
        .parse()
        .map_err(|_| format!("category must be a nonnegative integer, got {s:?}"))
}

impl FromStr for DistSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut parts = s.split(';');
        let kind = parts
            .next()
            .and_then(|p| p.strip_prefix("dist="))
            .ok_or_else(|| format!("distribution cell must start with dist=: {s:?}"))?;
        let mut fields: Vec<(&str, &str)> = Vec::new();
        for p in parts {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got {p:?}"))?;
            if fields.iter().any(|(seen, _)| *seen == k) {
                return Err(format!("duplicate key {k:?}"));
            }
            fields.push((k, v));
        }
        let take = |name: &str| -> Result<f64, String> {
            let (_, v) = fields
                .iter()
                .find(|(k, _)| *k == name)
                .ok_or_else(|| format!("dist={kind} needs {name}="))?;
            parse_num(v, name)
        };
        let only = |allowed: &[&str]| -> Result<(), String> {
            match fields.iter().find(|(k, _)| !allowed.contains(k)) {
                Some((k, _)) => Err(format!("unexpected key {k:?} for dist={kind}")),
                None => Ok(()),
            }
        };
        match kind {
            "normal" => {
                only(&["mean", "sd"])?;
                Ok(DistSpec::Normal {
                    mean: take("mean")?,
                    sd: take("sd")?,
                })
            }
            "exptail" => {
                only(&["p0", "scale", "lower"])?;
                Ok(DistSpec::ExpTail {
                    p0: take("p0")?,
                    scale: take("scale")?,
                    lower: take("lower")?,
                })
            }
            "empirical" => {
                only(&["values"])?;
                let (_, v) = fields
                    .iter()
                    .find(|(k, _)| *k == "values")
                    .ok_or("dist=empirical needs values=")?;
                let values = v
                    .split('|')
                    .map(|x| parse_num(x, "values"))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(DistSpec::Empirical { values })
            }
            "quantiles" => {
                let mut min = None;
                let mut pairs = Vec::new();
                for (k, v) in &fields {
                    if *k == "min" {
                        min = Some(parse_num(v, "min")?);
                    } else {
                        pairs.push((parse_num(k, "quantile level")?, parse_num(v, k)?));
                    }
                }
                if pairs.is_empty() {
                    return Err("dist=quantiles needs at least one level=value pair".into());
                }
                pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
                Ok(DistSpec::Quantiles { pairs, min })
            }
            other => Err(format!(
                "unknown distribution {other:?} (expected normal, quantiles, exptail or empirical)"
            )),
        }
    }
}

impl fmt::Display for DistSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistSpec::Normal { mean, sd } => {
                write!(f, "dist=normal;mean={};sd={}", fmt_num(*mean), fmt_num(*sd))
            }
            DistSpec::Quantiles { pairs, min } => {
                write!(f, "dist=quantiles")?;
                for (p, v) in pairs {
                    write!(f, ";{}={}", fmt_num(*p), fmt_num(*v))?;
                }
                if let Some(m) = min {
                    write!(f, ";min={}", fmt_num(*m))?;
                }
                Ok(())
            }
            DistSpec::ExpTail { p0, scale, lower } => write!(
                f,
                "dist=exptail;p0={};scale={};lower={}",
                fmt_num(*p0),
                fmt_num(*scale),
                fmt_num(*lower)
            ),
            DistSpec::Empirical { values } => {
                let v: Vec<String> = values.iter().map(|x| fmt_num(*x)).collect();
                write!(f, "dist=empirical;values={}", v.join("|"))
            }
        }
    }
}

impl FromStr for ForecastCell {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Some(k) = s.strip_prefix("cat=") {
            Ok(ForecastCell::Category(parse_category(k)?))
        } else if s.starts_with("dist=") {
            Ok(ForecastCell::Distribution(s.parse()?))
        } else {
            Ok(ForecastCell::Value(parse_num(s, "forecast")?))
        }
    }
}

impl fmt::Display for ForecastCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForecastCell::Category(k) => write!(f, "cat={k}"),
            ForecastCell::Value(x) => f.write_str(&fmt_num(*x)),
            ForecastCell::Distribution(d) => d.fmt(f),
        }
    }
}

impl FromStr for ObservationCell {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        match s.strip_prefix("cat=") {
            Some(k) => Ok(ObservationCell::Category(parse_category(k)?)),
            None => Ok(ObservationCell::Value(parse_num(s, "observation")?)),
        }
    }
}

impl fmt::Display for ObservationCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObservationCell::Category(k) => write!(f, "cat={k}"),
            ObservationCell::Value(x) => f.write_str(&fmt_num(*x)),
        }
    }
}

/// Parse a dataset. Errors carry the 1-based line number of the offending row.
pub fn read<R: Read>(reader: R) -> Result<Vec<Record>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| CliError::Input(format!("line 1: {e}")))?
        .clone();
    if header.iter().map(str::trim).ne(HEADER) {
        return Err(CliError::Input(format!(
            "line 1: header must be {:?}, got {:?}",
            HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::Input(format!("line {line}: {e}"))
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let fail = |m: String| CliError::Input(format!("line {line}: {m}"));
        let location_id = row[0].trim().to_string();
        if location_id.is_empty() {
            return Err(fail("empty location_id".into()));
        }
        let date = NaiveDate::parse_from_str(row[1].trim(), "%Y-%m-%d")
            .map_err(|_| fail(format!("date must be YYYY-MM-DD, got {:?}", &row[1])))?;
        let lead_days = row[2]
            .trim()
            .parse()
            .map_err(|_| fail(format!("lead_days must be an integer, got {:?}", &row[2])))?;
        let forecast = row[3].parse().map_err(fail)?;
        let observation = row[4].parse().map_err(fail)?;
        out.push(Record {
            location_id,
            date,
            lead_days,
            forecast,
            observation,
        });
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<Vec<Record>> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    let records = read(std::io::BufReader::new(file)).map_err(|e| e.context(path.display()))?;
    if records.is_empty() {
        return Err(CliError::Input(format!("{}: dataset has no records", path.display())));
    }
    Ok(records)
}

/// Write records in canonical form; `read` of the output gives back the same records.
pub fn write<W: Write>(writer: W, records: &[Record]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let wrap = |e: csv::Error| CliError::Input(format!("writing dataset: {e}"));
    w.write_record(HEADER).map_err(wrap)?;
    for r in records {
        w.write_record([
            r.location_id.clone(),
            r.date.format("%Y-%m-%d").to_string(),
            r.lead_days.to_string(),
            r.forecast.to_string(),
            r.observation.to_string(),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| CliError::io("dataset", e))
}
