//! Contingency tables, the classical dichotomous measures and estimators of
//! the risk parameter a forecaster has implicitly been using.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FirmError, Result};
use crate::firm::{CategoricalForecastCase, ScoreBreakdown, ScoringMatrix};
use crate::special::{norm_pdf, norm_ppf};

/// Counts `c_ij` of cases forecast in category `i` and observed in category `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    size: usize,
    counts: Vec<u64>,
}

impl ContingencyTable {
    pub fn zeros(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(FirmError::invalid("a contingency table needs at least two categories"));
        }
        Ok(Self {
            size,
            counts: vec![0; size * size],
        })
    }

    /// From rows of counts; `rows[i][j]` is forecast `i`, observed `j`.
    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let size = rows.len();
        if rows.iter().any(|r| r.len() != size) {
            return Err(FirmError::MalformedTable(format!(
                "expected a square table with {size} columns per row"
            )));
        }
        let mut t = Self::zeros(size)?;
        t.counts = rows.concat();
        Ok(t)
    }

    /// Tabulate cases over `categories` categories. Observations given as
    /// real values are placed with `thresholds`.
    pub fn tabulate(
        cases: &[CategoricalForecastCase],
        categories: usize,
        thresholds: &[f64],
    ) -> Result<Self> {
        if thresholds.len() + 1 != categories {
            return Err(FirmError::invalid(format!(
                "{} thresholds do not define {categories} categories",
                thresholds.len()
            )));
        }
        let mut t = Self::zeros(categories)?;
        for (record, case) in cases.iter().enumerate() {
            t.add_case(record, case, thresholds)?;
        }
        Ok(t)
    }

    /// As [`tabulate`](Self::tabulate), with per-thread partial tables merged at the end.
    pub fn tabulate_parallel(
        cases: &[CategoricalForecastCase],
        categories: usize,
        thresholds: &[f64],
    ) -> Result<Self> {
        const CHUNK: usize = 16_384;
        if thresholds.len() + 1 != categories {
            return Err(FirmError::invalid("thresholds do not match the category count"));
        }
        Self::zeros(categories)?;
        cases
            .par_chunks(CHUNK)
            .enumerate()
            .map(|(chunk, part)| {
                let mut t = Self::zeros(categories)?;
                for (offset, case) in part.iter().enumerate() {
                    t.add_case(chunk * CHUNK + offset, case, thresholds)?;
                }
                Ok(t)
            })
            .try_reduce(
                || Self::zeros(categories).expect("size checked by caller"),
                |a, b| a.merge(&b),
            )
    }

    fn add_case(&mut self, record: usize, case: &CategoricalForecastCase, thresholds: &[f64]) -> Result<()> {
        let i = case.forecast_category;
        let j = case.observation.category(thresholds);
        for category in [i, j] {
            if category >= self.size {
                return Err(FirmError::CategoryOutOfRange {
                    record,
                    category,
                    categories: self.size,
                });
            }
        }
        self.counts[i * self.size + j] += 1;
        Ok(())
    }

    /// Cellwise sum of two tables of the same size.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.size != other.size {
            return Err(FirmError::MalformedTable(format!(
                "cannot merge {0}x{0} and {1}x{1} tables",
                self.size, other.size
            )));
        }
        Ok(Self {
            size: self.size,
            counts: self.counts.iter().zip(&other.counts).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, forecast: usize, observed: usize) -> u64 {
        self.counts[forecast * self.size + observed]
    }

    pub fn set(&mut self, forecast: usize, observed: usize, count: u64) {
        self.counts[forecast * self.size + observed] = count;
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts.chunks(self.size).map(<[u64]>::to_vec).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Sample frequency of each observed category.
    pub fn observed_base_rates(&self) -> Result<Vec<f64>> {
        let total = self.total();
        if total == 0 {
            return Err(FirmError::undefined("base rates", "the table is empty"));
        }
        Ok((0..self.size)
            .map(|j| (0..self.size).map(|i| self.get(i, j)).sum::<u64>() as f64 / total as f64)
            .collect())
    }

    /// Mean score `sum c_ij s_ij / sum c_ij`, split into miss and false-alarm parts.
    pub fn mean_score(&self, matrix: &ScoringMatrix) -> Result<ScoreBreakdown> {
        if matrix.size() != self.size {
            return Err(FirmError::invalid(format!(
                "scoring matrix is {0}x{0} but the table is {1}x{1}",
                matrix.size(),
                self.size
            )));
        }
        let total = self.total();
        if total == 0 {
            return Err(FirmError::undefined("mean score", "the table is empty"));
        }
        let mut sum = ScoreBreakdown::default();
        for i in 0..self.size {
            for j in 0..self.size {
                sum += matrix.score(i, j).scaled(self.get(i, j) as f64);
            }
        }
        Ok(sum.scaled(1.0 / total as f64))
    }

    /// Dichotomous counts: the event is an observation above category `split_after`,
    /// a warning a forecast above it.
    pub fn collapse_to_binary(&self, split_after: usize) -> Result<BinaryCounts> {
        if split_after + 1 >= self.size {
            return Err(FirmError::invalid(format!(
                "split point {split_after} must be below {}",
                self.size - 1
            )));
        }
        let mut b = BinaryCounts::default();
        for i in 0..self.size {
            for j in 0..self.size {
                let n = self.get(i, j);
                match (i > split_after, j > split_after) {
                    (true, true) => b.hits += n,
                    (false, true) => b.misses += n,
                    (true, false) => b.false_alarms += n,
                    (false, false) => b.correct_negatives += n,
                }
            }
        }
        Ok(b)
    }

    /// Read a CSV grid: a header row of observed-category labels after one
    /// corner cell, then one row per forecast category starting with its label.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|e| FirmError::MalformedTable(e.to_string()))?
            .clone();
        let size = header.len().saturating_sub(1);
        let mut rows = Vec::with_capacity(size);
        for (line, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| FirmError::MalformedTable(e.to_string()))?;
            if record.len() != size + 1 {
                return Err(FirmError::MalformedTable(format!(
                    "row {}: expected {} cells, found {}",
                    line + 1,
                    size + 1,
                    record.len()
                )));
            }
            let row = record
                .iter()
                .skip(1)
                .map(|cell| {
                    cell.parse::<u64>().map_err(|_| {
                        FirmError::MalformedTable(format!(
                            "row {}: {cell:?} is not a nonnegative integer count",
                            line + 1
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        if rows.len() != size {
            return Err(FirmError::MalformedTable(format!(
                "{size} observed categories but {} forecast rows",
                rows.len()
            )));
        }
        Self::from_rows(&rows)
    }

    /// Write the grid read by [`read_csv`](Self::read_csv), labelling categories `C0, C1, ...`
    /// unless `labels` are given.
    pub fn write_csv<W: Write>(&self, writer: W, labels: Option<&[String]>) -> Result<()> {
        let labels: Vec<String> = match labels {
            Some(l) if l.len() == self.size => l.to_vec(),
            Some(l) => {
                return Err(FirmError::invalid(format!(
                    "{} labels for {} categories",
                    l.len(),
                    self.size
                )))
            }
            None => (0..self.size).map(|i| format!("C{i}")).collect(),
        };
        let io = |e: csv::Error| FirmError::MalformedTable(e.to_string());
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["forecast\\observed".to_string()];
        header.extend(labels.iter().cloned());
        w.write_record(&header).map_err(io)?;
        for (i, label) in labels.iter().enumerate() {
            let mut row = vec![label.clone()];
            row.extend((0..self.size).map(|j| self.get(i, j).to_string()));
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| FirmError::MalformedTable(e.to_string()))?;
        Ok(())
    }
}

/// Dichotomous contingency counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BinaryCounts {
    pub hits: u64,
    pub misses: u64,
    pub false_alarms: u64,
    pub correct_negatives: u64,
}

impl BinaryCounts {
    pub fn new(hits: u64, misses: u64, false_alarms: u64, correct_negatives: u64) -> Self {
        Self {
            hits,
            misses,
            false_alarms,
            correct_negatives,
        }
    }

    pub fn total(&self) -> u64 {
        self.hits + self.misses + self.false_alarms + self.correct_negatives
    }

    pub fn scaled(&self, k: u64) -> Self {
        Self::new(
            self.hits * k,
            self.misses * k,
            self.false_alarms * k,
            self.correct_negatives * k,
        )
    }
}

fn ratio(measure: &'static str, num: u64, den: u64, what: &str) -> Result<f64> {
    if den == 0 {
        Err(FirmError::undefined(measure, format!("{what} is zero")))
    } else {
        Ok(num as f64 / den as f64)
    }
}

/// Probability of detection `h / (h + m)`.
pub fn pod(c: &BinaryCounts) -> Result<f64> {
    ratio("POD", c.hits, c.hits + c.misses, "h + m")
}

/// False alarm ratio `f / (h + f)`.
pub fn far(c: &BinaryCounts) -> Result<f64> {
    ratio("FAR", c.false_alarms, c.hits + c.false_alarms, "h + f")
}

/// Critical success index `h / (h + m + f)`.
pub fn csi(c: &BinaryCounts) -> Result<f64> {
    ratio("CSI", c.hits, c.hits + c.misses + c.false_alarms, "h + m + f")
}

/// Probability of false detection `f / (f + c)`.
pub fn pofd(c: &BinaryCounts) -> Result<f64> {
    ratio("POFD", c.false_alarms, c.false_alarms + c.correct_negatives, "f + c")
}

/// Event probability above which a warning improves the expected CSI: `h / (2h + m + f)`.
pub fn csi_optimal_threshold(c: &BinaryCounts) -> Result<f64> {
    ratio(
        "CSI-optimal threshold",
        c.hits,
        2 * c.hits + c.misses + c.false_alarms,
        "2h + m + f",
    )
}

/// Peirce skill score `POD - POFD`.
pub fn peirce_skill_score(c: &BinaryCounts) -> Result<f64> {
    Ok(pod(c)? - pofd(c)?)
}

/// Gerrity reward matrix for observed base rates `r_0..r_N`.
pub fn gerrity_matrix(base_rates: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = base_rates.len();
    if n < 2 {
        return Err(FirmError::invalid("Gerrity scoring needs at least two categories"));
    }
    if base_rates.iter().any(|r| !(*r > 0.0)) {
        return Err(FirmError::undefined(
            "Gerrity score",
            "every observed category needs a positive base rate",
        ));
    }
    let total: f64 = base_rates.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(FirmError::invalid(format!("base rates sum to {total}, not 1")));
    }
    // odds a_r = (1 - P(Y <= r)) / P(Y <= r) for r = 0..N-1
    let mut cumulative = 0.0;
    let odds: Vec<f64> = base_rates[..n - 1]
        .iter()
        .map(|r| {
            cumulative += r;
            (1.0 - cumulative) / cumulative
        })
        .collect();
    let k = (n - 1) as f64;
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let recip: f64 = odds[..i].iter().map(|a| 1.0 / a).sum();
            let direct: f64 = odds[j.min(n - 1)..].iter().sum();
            let v = (recip - (j - i) as f64 + direct) / k;
            g[i][j] = v;
            g[j][i] = v;
        }
    }
    Ok(g)
}

/// Gerrity score of a table, with the table's own observed base rates.
pub fn gerrity_score(table: &ContingencyTable) -> Result<f64> {
    gerrity_score_with_rates(table, &table.observed_base_rates()?)
}

/// Gerrity score of a table using the supplied base rates.
pub fn gerrity_score_with_rates(table: &ContingencyTable, base_rates: &[f64]) -> Result<f64> {
    if base_rates.len() != table.size() {
        return Err(FirmError::invalid("one base rate per category is required"));
    }
    let g = gerrity_matrix(base_rates)?;
    let total = table.total();
    if total == 0 {
        return Err(FirmError::undefined("Gerrity score", "the table is empty"));
    }
    let mut sum = 0.0;
    for (i, row) in g.iter().enumerate() {
        for (j, gij) in row.iter().enumerate() {
            sum += table.get(i, j) as f64 * gij;
        }
    }
    Ok(sum / total as f64)
}

/// Whether forecasting the top of three categories maximises the expected
/// Gerrity score, given forecast probabilities `p` and base rates `r`.
pub fn gerrity_optimal_top_category(p: [f64; 3], r: [f64; 3]) -> Result<bool> {
    if p.iter().any(|x| !(0.0..=1.0).contains(x)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(FirmError::invalid("forecast probabilities must form a distribution"));
    }
    if r.iter().any(|x| !(*x > 0.0 && *x < 1.0)) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(FirmError::undefined(
            "Gerrity decision rule",
            "base rates must lie strictly between 0 and 1 and sum to 1",
        ));
    }
    let v: Vec<f64> = r.iter().map(|ri| ri / (1.0 - ri)).collect();
    let (v0, v2) = (v[0], v[2]);
    let first = ((1.0 / v0 + v2 + 2.0) * p[0] + (v2 - v0) * p[1]) / (v0 + 1.0 / v2 + 2.0);
    let second = v2 * (p[0] + p[1]);
    Ok(p[2] > first.max(second))
}

/// Naive estimate `f / (f + m)` of the risk parameter behind a warning record.
pub fn estimate_alpha_naive(c: &BinaryCounts) -> Result<f64> {
    ratio(
        "naive alpha estimate",
        c.false_alarms,
        c.false_alarms + c.misses,
        "f + m",
    )
}

/// Signal-detection estimate `1 / (tau + 1)` with
/// `tau = phi(Phi^-1(1 - POD)) / phi(Phi^-1(1 - POFD)) * (h + m) / (f + c)`.
pub fn estimate_alpha_signal_detection(c: &BinaryCounts) -> Result<f64> {
    const NAME: &str = "signal-detection alpha estimate";
    let pod = pod(c).map_err(|_| FirmError::undefined(NAME, "no observed events"))?;
    let pofd = pofd(c).map_err(|_| FirmError::undefined(NAME, "no observed nonevents"))?;
    if !(pod > 0.0 && pod < 1.0) {
        return Err(FirmError::undefined(NAME, format!("POD = {pod} is not inside (0, 1)")));
    }
    if !(pofd > 0.0 && pofd < 1.0) {
        return Err(FirmError::undefined(NAME, format!("POFD = {pofd} is not inside (0, 1)")));
    }
    let density_ratio = norm_pdf(norm_ppf(1.0 - pod)) / norm_pdf(norm_ppf(1.0 - pofd));
    let base_ratio =
        (c.hits + c.misses) as f64 / (c.false_alarms + c.correct_negatives) as f64;
    let tau = density_ratio * base_ratio;
    Ok(1.0 / (tau + 1.0))
}
