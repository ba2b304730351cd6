//! Ingestion, batch orchestration over subject/year cells, and report output.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{summarize, CountDataset, SummaryStats};
use crate::distributions::{ModelId, ModelParams};
use crate::error::{Error, Result};
use crate::fitting::{fit, FitOptions, FitResult};
use crate::model_selection::{label_cell, CellLabel, DEFAULT_LEVEL};
use crate::stability::{
    consecutive_year_stability_with, write_series_csv, PanelCell, ParameterPanel, StabilityReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InputFormat {
    /// `subject,year,citations`, one article per row.
    Long,
    /// `subject,year,count,freq`, one row per distinct count.
    Histogram,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub format: InputFormat,
    /// Sorted by subject, then year.
    pub datasets: Vec<CountDataset>,
    pub warnings: Vec<String>,
}

pub fn ingest(path: &Path, include_uncited: bool) -> Result<Ingested> {
    let file = fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    ingest_reader(file, include_uncited)
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, name: &str, line: u64) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = rec.get(idx).ok_or_else(|| Error::Parse {
        line,
        message: format!("missing '{name}' field"),
    })?;
    raw.trim().parse().map_err(|e| Error::Parse {
        line,
        message: format!("bad {name} '{raw}': {e}"),
    })
}

fn parse_count(rec: &csv::StringRecord, idx: usize, name: &str, line: u64) -> Result<u64> {
    let v: i64 = parse_field(rec, idx, name, line)?;
    if v < 0 {
        return Err(Error::NegativeCount { line, value: v });
    }
    Ok(v as u64)
}

/// Groups rows into one dataset per (subject, year). With `include_uncited`
/// false, zero counts are dropped.
pub fn ingest_reader<R: Read>(input: R, include_uncited: bool) -> Result<Ingested> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse { line: 1, message: e.to_string() })?
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (subject_col, year_col) = match (col("subject"), col("year")) {
        (Some(s), Some(y)) => (s, y),
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: "header must contain 'subject' and 'year'".into(),
            })
        }
    };
    let format = match (col("citations"), col("count"), col("freq")) {
        (Some(_), _, _) => InputFormat::Long,
        (None, Some(_), Some(_)) => InputFormat::Histogram,
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: "header must be subject,year,citations or subject,year,count,freq".into(),
            })
        }
    };

    let mut groups: BTreeMap<(String, i32), Vec<u64>> = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let subject = rec.get(subject_col).unwrap_or("").to_string();
        if subject.is_empty() {
            return Err(Error::Parse { line, message: "empty subject".into() });
        }
        let year: i32 = parse_field(&rec, year_col, "year", line)?;
        let entry = groups.entry((subject, year)).or_default();
        match format {
            InputFormat::Long => {
                let c = parse_count(&rec, col("citations").unwrap(), "citations", line)?;
                if include_uncited || c > 0 {
                    entry.push(c);
                }
            }
            InputFormat::Histogram => {
                let c = parse_count(&rec, col("count").unwrap(), "count", line)?;
                let freq = parse_count(&rec, col("freq").unwrap(), "freq", line)?;
                if include_uncited || c > 0 {
                    entry.extend(std::iter::repeat_n(c, freq as usize));
                }
            }
        }
    }

    let mut warnings = Vec::new();
    let datasets = groups
        .into_iter()
        .map(|((subject, year), counts)| {
            if counts.is_empty() {
                warnings.push(format!("{subject}/{year}: no articles to fit"));
            }
            CountDataset::new(subject, year, counts)
        })
        .collect();
    Ok(Ingested {
        format,
        datasets,
        warnings,
    })
}

/// Writes datasets in long format (`subject,year,citations`).
pub fn write_long_csv<W: Write>(datasets: &[CountDataset], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["subject", "year", "citations"]).map_err(io)?;
    for d in datasets {
        let year = d.year.to_string();
        for c in &d.counts {
            w.write_record([d.subject.as_str(), year.as_str(), &c.to_string()])
                .map_err(io)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Parses `name=value` pairs such as `mu=1.2,sigma=1.1` or `alpha=3,b=5`.
pub fn parse_params(model: ModelId, text: &str) -> Result<ModelParams> {
    let names = model.parameter_names();
    let mut values = [None; 2];
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (name, raw) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected name=value, got '{part}'")))?;
        let idx = names
            .iter()
            .position(|n| n.eq_ignore_ascii_case(name.trim()))
            .ok_or_else(|| Error::Config(format!("{model} has no parameter '{}'", name.trim())))?;
        let v: f64 = raw
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad value for {}: '{}'", names[idx], raw.trim())))?;
        values[idx] = Some(v);
    }
    match values {
        [Some(a), Some(b)] => ModelParams::from_values(model, [a, b]),
        _ => Err(Error::Config(format!("{model} needs {} and {}", names[0], names[1]))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub input: PathBuf,
    pub include_uncited: bool,
    pub offset: u32,
    pub models: Vec<ModelId>,
    pub level: f64,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Restrict panels and stability to these `<model>_<parameter>` names.
    pub parameters: Option<Vec<String>>,
    /// Keep fits that hit the iteration cap in panels and stability.
    pub include_unconverged: bool,
    pub fit: FitOptions,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            include_uncited: true,
            offset: 1,
            models: ModelId::ALL.to_vec(),
            level: DEFAULT_LEVEL,
            out_dir: out_dir.into(),
            seed: 0,
            parameters: None,
            include_unconverged: true,
            fit: FitOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config(format!("significance level {} outside (0, 1)", self.level)));
        }
        if self.models.is_empty() {
            return Err(Error::Config("no models requested".into()));
        }
        self.fit_options().validate()
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            offset: self.offset,
            exclude_uncited: !self.include_uncited,
            ..self.fit
        }
    }

    fn compares(&self) -> bool {
        self.models.contains(&ModelId::Dlnorm) && self.models.contains(&ModelId::Hooked)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSummary {
    pub model: ModelId,
    /// `pmf` for the discrete models, `density` for normal-on-log.
    pub measure: &'static str,
    pub params: Vec<NamedValue>,
    /// Divide-by-(n-1) standard deviation of `ln k`, reported next to the MLE one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sd_log_sample: Option<f64>,
    pub log_lik: f64,
    pub n: usize,
    pub iterations: usize,
    pub converged: bool,
    pub at_boundary: bool,
    pub warnings: Vec<String>,
}

impl FitSummary {
    fn from_fit(fit: &FitResult) -> Self {
        let names = fit.model_id.parameter_names();
        let values = fit.params.values();
        let sd_log_sample = match fit.params {
            ModelParams::NormalLog(p) if fit.n > 1 => {
                Some(p.sd_log * (fit.n as f64 / (fit.n as f64 - 1.0)).sqrt())
            }
            _ => None,
        };
        Self {
            model: fit.model_id,
            measure: if fit.model_id.is_discrete() { "pmf" } else { "density" },
            params: names
                .iter()
                .zip(values)
                .map(|(n, v)| NamedValue {
                    name: n.to_string(),
                    value: v,
                })
                .collect(),
            sd_log_sample,
            log_lik: fit.log_lik,
            n: fit.n,
            iterations: fit.iterations,
            converged: fit.converged,
            at_boundary: fit.at_boundary,
            warnings: fit.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellFailure {
    pub subject: String,
    pub year: i32,
    pub stage: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    pub subject: String,
    pub year: i32,
    pub summary: Option<SummaryStats>,
    pub uncited: usize,
    pub fits: Vec<FitSummary>,
    pub comparison: Option<CellLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WinnerRow {
    pub subject: String,
    pub year: i32,
    pub label: String,
    pub significant: bool,
    pub vuong_stat: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BundleSettings {
    pub include_uncited: bool,
    pub offset: u32,
    pub models: Vec<ModelId>,
    pub level: f64,
    pub seed: u64,
    pub include_unconverged: bool,
    pub fit: FitOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportBundle {
    pub tool: &'static str,
    pub version: &'static str,
    pub settings: BundleSettings,
    pub notes: Vec<&'static str>,
    pub ingest_warnings: Vec<String>,
    pub cells: Vec<CellReport>,
    pub winners: Vec<WinnerRow>,
    pub panels: Vec<ParameterPanel>,
    pub stability: Vec<StabilityReport>,
    pub failures: Vec<CellFailure>,
}

impl ReportBundle {
    pub fn has_failures(&self) -> bool {
        !self.failures.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn winner(&self, subject: &str, year: i32) -> Option<&WinnerRow> {
        self.winners.iter().find(|w| w.subject == subject && w.year == year)
    }
}

const NOTES: [&str; 3] = [
    "Vuong statistics are uncorrected for parameter counts and p-values are two-sided.",
    "normal_log log-likelihoods are densities of ln k, not probabilities, and are not comparable with the discrete models.",
    "Winner labels: Hook = hooked power law fits better, L = discretised lognormal fits better; significant marks p < level.",
];

struct CellWork {
    report: CellReport,
    fits: Vec<FitResult>,
    failures: Vec<CellFailure>,
}

fn process_cell(dataset: &CountDataset, config: &RunConfig) -> CellWork {
    let opts = config.fit_options();
    let mut failures = Vec::new();
    let fail = |stage: &str, err: &Error| CellFailure {
        subject: dataset.subject.clone(),
        year: dataset.year,
        stage: stage.to_string(),
        reason: err.to_string(),
    };
    let summary = match summarize(dataset) {
        Ok(s) => Some(s),
        Err(e) => {
            failures.push(fail("summary", &e));
            None
        }
    };
    let mut fits = Vec::new();
    for &model in &config.models {
        match fit(model, dataset, &opts) {
            Ok(f) => fits.push(f),
            Err(e) => failures.push(fail(model.as_str(), &e)),
        }
    }
    let comparison = if config.compares() {
        match label_cell(&fits, config.level) {
            Ok(l) => Some(l),
            Err(e) => {
                if !failures.iter().any(|f| f.stage == "dlnorm" || f.stage == "hooked") {
                    failures.push(fail("vuong", &e));
                }
                None
            }
        }
    } else {
        None
    };
    CellWork {
        report: CellReport {
            subject: dataset.subject.clone(),
            year: dataset.year,
            summary,
            uncited: dataset.uncited(),
            fits: fits.iter().map(FitSummary::from_fit).collect(),
            comparison,
        },
        fits,
        failures,
    }
}

/// Fits every cell, compares the discrete models and assembles panels and
/// stability reports. Cell failures are recorded, never fatal.
pub fn build_report(datasets: &[CountDataset], ingest_warnings: Vec<String>, config: &RunConfig) -> Result<ReportBundle> {
    config.validate()?;
    let mut sorted: Vec<&CountDataset> = datasets.iter().collect();
    sorted.sort_by(|a, b| (&a.subject, a.year).cmp(&(&b.subject, b.year)));
    let work: Vec<CellWork> = sorted.par_iter().map(|d| process_cell(d, config)).collect();

    let mut cells = Vec::with_capacity(work.len());
    let mut failures = Vec::new();
    let mut winners = Vec::new();
    let mut entries: BTreeMap<String, Vec<(String, i32, PanelCell)>> = BTreeMap::new();
    for w in work {
        for f in &w.fits {
            for (name, value) in f.model_id.parameter_names().iter().zip(f.params.values()) {
                let key = format!("{}_{}", f.model_id, name);
                entries.entry(key).or_default().push((
                    w.report.subject.clone(),
                    w.report.year,
                    PanelCell {
                        value,
                        converged: f.converged,
                    },
                ));
            }
        }
        if let Some(c) = &w.report.comparison {
            winners.push(WinnerRow {
                subject: w.report.subject.clone(),
                year: w.report.year,
                label: c.label.to_string(),
                significant: c.significant,
                vuong_stat: c.comparison.vuong_stat,
                p_value: c.comparison.p_value,
            });
        }
        failures.extend(w.failures);
        cells.push(w.report);
    }

    // panels share the full subject and year axes so that gaps stay explicit
    let mut subjects: Vec<String> = cells.iter().map(|c| c.subject.clone()).collect();
    subjects.dedup();
    let mut years: Vec<i32> = cells.iter().map(|c| c.year).collect();
    years.sort_unstable();
    years.dedup();
    let mut panels = Vec::new();
    for model in &config.models {
        for name in model.parameter_names() {
            let key = format!("{model}_{name}");
            if let Some(wanted) = &config.parameters {
                if !wanted.contains(&key) {
                    continue;
                }
            }
            let lookup: BTreeMap<(String, i32), PanelCell> = entries
                .get(&key)
                .map(|v| v.iter().map(|(s, y, c)| ((s.clone(), *y), *c)).collect())
                .unwrap_or_default();
            let values = subjects
                .iter()
                .map(|s| years.iter().map(|&y| lookup.get(&(s.clone(), y)).copied()).collect())
                .collect();
            panels.push(ParameterPanel::new(key, subjects.clone(), years.clone(), values)?);
        }
    }
    let stability = panels
        .iter()
        .map(|p| consecutive_year_stability_with(p, config.include_unconverged))
        .collect();

    Ok(ReportBundle {
        tool: "citefit",
        version: env!("CARGO_PKG_VERSION"),
        settings: BundleSettings {
            include_uncited: config.include_uncited,
            offset: config.offset,
            models: config.models.clone(),
            level: config.level,
            seed: config.seed,
            include_unconverged: config.include_unconverged,
            fit: config.fit_options(),
        },
        notes: NOTES.to_vec(),
        ingest_warnings,
        cells,
        winners,
        panels,
        stability,
        failures,
    })
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Writes `bundle.json`, `summary.csv`, `winners.csv` (when comparisons were
/// run), one `params_<name>.csv` per panel, and `stability.csv`.
pub fn write_bundle(bundle: &ReportBundle, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    let mut emit = |name: String, bytes: Vec<u8>| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        written.push(path);
        Ok(())
    };

    let mut json = bundle.to_json()?;
    json.push('\n');
    emit("bundle.json".into(), json.into_bytes())?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["subject", "year", "mean", "max", "n", "uncited"]).map_err(csv_io)?;
    for c in &bundle.cells {
        let (mean, max, n) = c.summary.map_or((String::new(), String::new(), "0".to_string()), |s| {
            (format!("{:.2}", s.mean), s.max.to_string(), s.n.to_string())
        });
        w.write_record([c.subject.clone(), c.year.to_string(), mean, max, n, c.uncited.to_string()])
            .map_err(csv_io)?;
    }
    emit("summary.csv".into(), w.into_inner().map_err(|e| Error::Io(e.to_string()))?)?;

    if bundle.settings.models.contains(&ModelId::Dlnorm) && bundle.settings.models.contains(&ModelId::Hooked) {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["subject", "year", "label", "significant", "vuong_stat", "p_value"])
            .map_err(csv_io)?;
        for r in &bundle.winners {
            w.write_record([
                r.subject.clone(),
                r.year.to_string(),
                r.label.clone(),
                r.significant.to_string(),
                r.vuong_stat.to_string(),
                r.p_value.to_string(),
            ])
            .map_err(csv_io)?;
        }
        emit("winners.csv".into(), w.into_inner().map_err(|e| Error::Io(e.to_string()))?)?;
    }

    for p in &bundle.panels {
        let mut buf = Vec::new();
        write_series_csv(p, &mut buf)?;
        emit(format!("params_{}.csv", p.parameter), buf)?;
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["parameter", "year", "next_year", "spearman"]).map_err(csv_io)?;
    for s in &bundle.stability {
        for ((a, b), r) in s.year_pairs.iter().zip(&s.correlations) {
            let r = r.map_or_else(|| "NA".to_string(), |v| v.to_string());
            w.write_record([s.parameter_name.clone(), a.to_string(), b.to_string(), r])
                .map_err(csv_io)?;
        }
    }
    emit("stability.csv".into(), w.into_inner().map_err(|e| Error::Io(e.to_string()))?)?;
    Ok(written)
}

/// Ingests the configured input, builds the report and writes it out.
pub fn run_batch(config: &RunConfig) -> Result<ReportBundle> {
    config.validate()?;
    let ingested = ingest(&config.input, config.include_uncited)?;
    if ingested.datasets.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "input contains no subject/year cells".into(),
        });
    }
    let bundle = build_report(&ingested.datasets, ingested.warnings, config)?;
    write_bundle(&bundle, &config.out_dir)?;
    Ok(bundle)
}
