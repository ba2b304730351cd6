//! Year-to-year stability of fitted parameters across subjects.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ranks starting at 1, with tied values sharing their mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Alignment { a: x.len(), b: y.len() });
    }
    if x.len() < 3 {
        return Err(Error::InsufficientData {
            required: 3,
            available: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Domain("spearman needs finite values".into()));
    }
    pearson(&average_ranks(x), &average_ranks(y))
        .ok_or_else(|| Error::DegenerateData("a ranked vector is constant".into()))
}

/// Spearman on paired optional values, dropping pairs with a missing side.
pub fn spearman_pairwise(x: &[Option<f64>], y: &[Option<f64>]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Alignment { a: x.len(), b: y.len() });
    }
    let (a, b): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
        .unzip();
    spearman(&a, &b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelCell {
    pub value: f64,
    pub converged: bool,
}

/// One fitted parameter for every subject and year; `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterPanel {
    pub parameter: String,
    pub subjects: Vec<String>,
    pub years: Vec<i32>,
    /// `values[subject][year]`
    pub values: Vec<Vec<Option<PanelCell>>>,
}

impl ParameterPanel {
    pub fn new(
        parameter: impl Into<String>,
        subjects: Vec<String>,
        years: Vec<i32>,
        values: Vec<Vec<Option<PanelCell>>>,
    ) -> Result<Self> {
        if values.len() != subjects.len() || values.iter().any(|row| row.len() != years.len()) {
            return Err(Error::Config(format!(
                "panel values must be {} x {}",
                subjects.len(),
                years.len()
            )));
        }
        if years.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("panel years must be strictly increasing".into()));
        }
        Ok(Self {
            parameter: parameter.into(),
            subjects,
            years,
            values,
        })
    }

    /// Builds a panel from `(subject, year, cell)` entries; subjects and years are sorted.
    pub fn from_cells(parameter: impl Into<String>, cells: impl IntoIterator<Item = (String, i32, PanelCell)>) -> Self {
        let mut map: BTreeMap<(String, i32), PanelCell> = BTreeMap::new();
        let mut years = Vec::new();
        let mut subjects = Vec::new();
        for (s, y, c) in cells {
            years.push(y);
            subjects.push(s.clone());
            map.insert((s, y), c);
        }
        years.sort_unstable();
        years.dedup();
        subjects.sort();
        subjects.dedup();
        let values = subjects
            .iter()
            .map(|s| years.iter().map(|&y| map.get(&(s.clone(), y)).copied()).collect())
            .collect();
        Self {
            parameter: parameter.into(),
            subjects,
            years,
            values,
        }
    }

    fn column(&self, year_index: usize, include_unconverged: bool) -> Vec<Option<f64>> {
        self.values
            .iter()
            .map(|row| {
                row[year_index]
                    .filter(|c| include_unconverged || c.converged)
                    .map(|c| c.value)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub parameter_name: String,
    pub year_pairs: Vec<(i32, i32)>,
    /// `None` where too few subjects were shared or a ranked vector was constant.
    pub correlations: Vec<Option<f64>>,
}

/// Spearman correlation across subjects for each pair of adjacent years.
pub fn consecutive_year_stability(panel: &ParameterPanel) -> StabilityReport {
    consecutive_year_stability_with(panel, true)
}

pub fn consecutive_year_stability_with(panel: &ParameterPanel, include_unconverged: bool) -> StabilityReport {
    let mut year_pairs = Vec::new();
    let mut correlations = Vec::new();
    for i in 1..panel.years.len() {
        year_pairs.push((panel.years[i - 1], panel.years[i]));
        let a = panel.column(i - 1, include_unconverged);
        let b = panel.column(i, include_unconverged);
        correlations.push(spearman_pairwise(&a, &b).ok());
    }
    StabilityReport {
        parameter_name: panel.parameter.clone(),
        year_pairs,
        correlations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub year: i32,
    /// `None` is a gap.
    pub value: Option<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectSeries {
    pub subject: String,
    pub points: Vec<TrajectoryPoint>,
}

/// One year-ordered series per subject, with no filtering of extreme values.
pub fn trajectory_series(panel: &ParameterPanel) -> Vec<SubjectSeries> {
    panel
        .subjects
        .iter()
        .zip(&panel.values)
        .map(|(s, row)| SubjectSeries {
            subject: s.clone(),
            points: panel
                .years
                .iter()
                .zip(row)
                .map(|(&year, cell)| TrajectoryPoint {
                    year,
                    value: cell.map(|c| c.value),
                    converged: cell.is_some_and(|c| c.converged),
                })
                .collect(),
        })
        .collect()
}

const GAP: &str = "NA";

/// Writes `subject,year,value,converged` rows; gaps are written as `NA`.
pub fn write_series_csv<W: Write>(panel: &ParameterPanel, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["subject", "year", "value", "converged"]).map_err(io)?;
    for series in trajectory_series(panel) {
        for p in &series.points {
            let value = p.value.map_or_else(|| GAP.to_string(), |v| v.to_string());
            w.write_record([
                series.subject.as_str(),
                &p.year.to_string(),
                &value,
                if p.converged { "true" } else { "false" },
            ])
            .map_err(io)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads the output of [`write_series_csv`] back into a panel.
pub fn read_series_csv<R: Read>(parameter: &str, input: R) -> Result<ParameterPanel> {
    let mut r = csv::Reader::from_reader(input);
    let mut subjects: Vec<String> = Vec::new();
    let mut years: Vec<i32> = Vec::new();
    let mut cells: BTreeMap<(String, i32), Option<PanelCell>> = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| Error::Parse { line, message: e.to_string() })?;
        let field = |j: usize| {
            rec.get(j).ok_or_else(|| Error::Parse {
                line,
                message: format!("missing column {j}"),
            })
        };
        let subject = field(0)?.to_string();
        let year: i32 = field(1)?.trim().parse().map_err(|e| Error::Parse {
            line,
            message: format!("bad year: {e}"),
        })?;
        let raw = field(2)?.trim();
        let converged = field(3)?.trim() == "true";
        let cell = if raw == GAP {
            None
        } else {
            let value: f64 = raw.parse().map_err(|e| Error::Parse {
                line,
                message: format!("bad value: {e}"),
            })?;
            Some(PanelCell { value, converged })
        };
        if !subjects.contains(&subject) {
            subjects.push(subject.clone());
        }
        if !years.contains(&year) {
            years.push(year);
        }
        cells.insert((subject, year), cell);
    }
    years.sort_unstable();
    let values = subjects
        .iter()
        .map(|s| {
            years
                .iter()
                .map(|&y| cells.get(&(s.clone(), y)).copied().flatten())
                .collect()
        })
        .collect();
    ParameterPanel::new(parameter, subjects, years, values)
}
