//! Simulation-study and forecast-evaluation harness.
//!
//! Every run is driven by an [`ExperimentConfig`]. All randomness is derived
//! from its master seed through the fixed stream numbering in
//! [`crate::rng::streams`], so one configuration reproduces its output files
//! byte for byte at any thread count.

mod check;
mod config;
mod evaluate;
mod study;

use std::fs;
use std::path::{Path, PathBuf};

pub use check::{check_disintegration, CheckLine, DisintegrationReport, DISINTEGRATION_TOLERANCE};
pub use config::{
    CandidateSection, EvaluationSection, ExperimentConfig, Family, ScoreKind, TruthSection,
    WeightSection,
};
pub use evaluate::{read_forecast, run_evaluation, ForecastFile};
pub use study::run_simulation_study;

use crate::csv;
use crate::dist::{GaussianSpec, SamplePool};
use crate::error::{Error, Result};
use crate::levelsets::{alphas_csv, AlphaSelection};
use crate::scores::ObservationScores;

/// Mean scores over observations: one row per candidate, one column per α
/// followed by the L² score column when requested.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTable {
    pub family: Family,
    pub alphas: Vec<f64>,
    pub rows: Vec<TableRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub label: String,
    pub means: Vec<f64>,
    /// Standard error of each mean across observations.
    pub sems: Vec<f64>,
}

impl ScoreTable {
    pub fn n_columns(&self) -> usize {
        self.alphas.len() + usize::from(self.family.l2)
    }

    pub fn l2_column(&self) -> Option<usize> {
        self.family.l2.then_some(self.alphas.len())
    }

    /// Column headers: the α values, then the score name.
    pub fn headers(&self) -> Vec<String> {
        let mut h: Vec<String> = self.alphas.iter().map(|&a| csv::float(a)).collect();
        if self.family.l2 {
            h.push(self.family.score.name().to_string());
        }
        h
    }

    /// Row index of the smallest mean in `column` (first one on ties).
    pub fn argmin(&self, column: usize) -> usize {
        let mut best = 0;
        for (i, r) in self.rows.iter().enumerate() {
            if r.means[column] < self.rows[best].means[column] {
                best = i;
            }
        }
        best
    }

    pub fn row(&self, label: &str) -> Option<&TableRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    fn wide_csv(&self, pick: impl Fn(&TableRow) -> &[f64]) -> String {
        let mut out = csv::row(std::iter::once("candidate".to_string()).chain(self.headers()));
        for r in &self.rows {
            out.push_str(&csv::row(
                std::iter::once(r.label.clone()).chain(pick(r).iter().map(|&v| csv::float(v))),
            ));
        }
        out
    }

    pub fn means_csv(&self) -> String {
        self.wide_csv(|r| &r.means)
    }

    pub fn sems_csv(&self) -> String {
        self.wide_csv(|r| &r.sems)
    }
}

/// Each table column's mean and standard error over the observations.
fn summarize(scored: &[ObservationScores], family: &Family) -> (Vec<f64>, Vec<f64>) {
    let n_levels = if family.levels {
        scored.first().map_or(0, |s| s.levels.len())
    } else {
        0
    };
    let mut columns: Vec<Vec<f64>> = (0..n_levels)
        .map(|j| scored.iter().map(|s| s.levels[j].value).collect())
        .collect();
    if family.l2 {
        columns.push(scored.iter().map(|s| s.l2.value).collect());
    }
    columns.iter().map(|c| mean_and_sem(c)).unzip()
}

fn mean_and_sem(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0) / n).sqrt())
}

/// Per-observation long-form rows:
/// `observation_index,candidate_label,score_name,k,value,std_error`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ObservationLog {
    text: String,
}

impl ObservationLog {
    fn new() -> Self {
        ObservationLog {
            text: csv::row([
                "observation_index",
                "candidate_label",
                "score_name",
                "k",
                "value",
                "std_error",
            ]),
        }
    }

    fn push(&mut self, family: &Family, alphas: &[f64], label: &str, index: usize, s: &ObservationScores) {
        let f = family.functional();
        let k = f.order().to_string();
        if family.levels {
            for (&a, v) in alphas.iter().zip(&s.levels) {
                self.text.push_str(&csv::row([
                    index.to_string(),
                    label.to_string(),
                    format!("{}_level@{}", f.name(), csv::float(a)),
                    k.clone(),
                    csv::float(v.value),
                    csv::float(v.std_error),
                ]));
            }
        }
        if family.l2 {
            self.text.push_str(&csv::row([
                index.to_string(),
                label.to_string(),
                family.score.name().to_string(),
                k,
                csv::float(s.l2.value),
                csv::float(s.l2.std_error),
            ]));
        }
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// Everything a study or evaluation run produces.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub alphas: Vec<AlphaSelection>,
    pub tables: Vec<ScoreTable>,
    pub observations: Option<ObservationLog>,
}

impl RunOutput {
    pub fn table(&self, score: ScoreKind) -> Option<&ScoreTable> {
        self.tables.iter().find(|t| t.family.score == score)
    }

    /// Writes `{stem}.csv`, `{stem}_se.csv`, `alphas.csv` and, when present,
    /// `scores.csv`; returns each path with a one-line summary.
    pub fn write(&self, out_dir: &Path) -> Result<Vec<(PathBuf, String)>> {
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        let mut written = Vec::new();
        for t in &self.tables {
            let stem = t.family.score.file_stem();
            let shape = format!("{} rows x {} columns", t.rows.len(), t.n_columns());
            written.push(write_file(out_dir, &format!("{stem}.csv"), &t.means_csv(), format!("mean scores, {shape}"))?);
            written.push(write_file(out_dir, &format!("{stem}_se.csv"), &t.sems_csv(), format!("standard errors, {shape}"))?);
        }
        let n_alpha: usize = self.alphas.iter().map(|a| a.alphas.len()).sum();
        written.push(write_file(
            out_dir,
            "alphas.csv",
            &alphas_csv(&self.alphas),
            format!("{n_alpha} levels"),
        )?);
        if let Some(log) = &self.observations {
            let rows = log.as_str().lines().count().saturating_sub(1);
            written.push(write_file(out_dir, "scores.csv", log.as_str(), format!("{rows} score rows"))?);
        }
        Ok(written)
    }
}

pub(crate) fn write_file(dir: &Path, name: &str, text: &str, summary: String) -> Result<(PathBuf, String)> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok((path, summary))
}

/// Gaussian with the sample mean and (n − 1)-normalized covariance of `pool`.
pub fn fit_gaussian(pool: &SamplePool) -> Result<GaussianSpec> {
    let d = pool.dim();
    let n = pool.len() as f64;
    if pool.len() < 2 {
        return Err(Error::Domain("fitting a Gaussian needs at least two draws".into()));
    }
    let mut mean = vec![0.0; d];
    for x in pool.iter() {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut cov = vec![0.0; d * d];
    for x in pool.iter() {
        for i in 0..d {
            for j in 0..d {
                cov[i * d + j] += (x[i] - mean[i]) * (x[j] - mean[j]);
            }
        }
    }
    cov.iter_mut().for_each(|c| *c /= n - 1.0);
    GaussianSpec::new(mean, cov)
}
