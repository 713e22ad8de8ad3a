use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::dist::{FunctionalKind, GaussianSpec, PoolSeed, SamplePool};
use crate::error::{Error, Result};
use crate::rng::streams;
use crate::scores::{Candidate, ObservationScores, Profile};

use super::study::{alphas_for, select_alphas};
use super::{fit_gaussian, summarize, ExperimentConfig, ObservationLog, RunOutput, ScoreTable, TableRow};

/// A forecast file: either a sample pool, or a Gaussian given as
///
/// ```text
/// gaussian
/// mean 0.0 0.0
/// covariance 1.0 0.2 0.2 1.0
/// ```
pub enum ForecastFile {
    Pool(SamplePool),
    Gaussian(GaussianSpec),
}

pub fn read_forecast(path: &Path) -> Result<ForecastFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if first.trim() != "gaussian" {
        return SamplePool::parse_text(&text, path).map(ForecastFile::Pool);
    }
    let mut mean = None;
    let mut cov = None;
    for (n, line) in text.lines().enumerate().skip_while(|(_, l)| l.trim() != "gaussian").skip(1) {
        let mut parts = line.split_whitespace();
        let Some(key) = parts.next() else { continue };
        let values: Vec<f64> = parts
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::ingest(path, format!("line {}: bad number `{v}`", n + 1)))
            })
            .collect::<Result<_>>()?;
        match key {
            "mean" => mean = Some(values),
            "covariance" => cov = Some(values),
            other => return Err(Error::ingest(path, format!("line {}: unknown key `{other}`", n + 1))),
        }
    }
    match (mean, cov) {
        (Some(m), Some(c)) => GaussianSpec::new(m, c)
            .map(ForecastFile::Gaussian)
            .map_err(|e| Error::ingest(path, e.to_string())),
        _ => Err(Error::ingest(path, "gaussian forecast needs `mean` and `covariance` lines")),
    }
}

/// Forecast files of every method: one subdirectory per method, one file per
/// period, both in lexicographic order.
fn list_methods(dir: &Path, periods: usize) -> Result<Vec<(String, Vec<PathBuf>)>> {
    let read = |d: &Path| -> Result<Vec<PathBuf>> {
        let mut v: Vec<PathBuf> = fs::read_dir(d)
            .map_err(|e| Error::io(d, e))?
            .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(d, err)))
            .collect::<Result<_>>()?;
        v.sort();
        Ok(v)
    };
    let methods: Vec<PathBuf> = read(dir)?.into_iter().filter(|p| p.is_dir()).collect();
    if methods.is_empty() {
        return Err(Error::ingest(dir, "no method subdirectories"));
    }
    methods
        .into_iter()
        .map(|m| {
            let files: Vec<PathBuf> = read(&m)?.into_iter().filter(|p| p.is_file()).collect();
            if files.len() != periods {
                return Err(Error::ingest(
                    &m,
                    format!("{} forecast files for {periods} realizations", files.len()),
                ));
            }
            let name = m
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok((name, files))
        })
        .collect()
}

/// Scores per-period forecasts of each method against the realizations.
///
/// Gaussian forecast files are sampled with `evaluation.forecast_pool_size`
/// draws (falling back to `candidate_pool_size`) from the stream of their
/// method and period. Without a `[weight]` mean and covariance the weight is
/// the Gaussian fitted to the realizations.
pub fn run_evaluation(cfg: &ExperimentConfig, forecasts: &Path, realizations: &Path) -> Result<RunOutput> {
    let observations = SamplePool::read_file(realizations)?;
    if observations.dim() != cfg.dimension {
        return Err(Error::ingest(
            realizations,
            format!("d={} but config dimension is {}", observations.dim(), cfg.dimension),
        ));
    }
    let periods = observations.len();
    let methods = list_methods(forecasts, periods)?;
    let weight = cfg.weight_measure(Some(fit_gaussian(&observations)?))?;
    let families = cfg.families()?;

    let reference = || {
        let path = cfg
            .evaluation
            .reference_pool
            .as_ref()
            .ok_or_else(|| Error::config("evaluation.reference_pool", "needed to select alpha values"))?;
        let pool = cfg.read_pool(path)?;
        Candidate::from_density("reference", fit_gaussian(&pool)?).with_pool(pool)
    };
    let selections = select_alphas(cfg, &families, reference, &observations)?;
    let alphas: Vec<Vec<f64>> = families
        .iter()
        .map(|f| alphas_for(&selections, f.functional()))
        .collect();

    let needs_pool = families.iter().any(|f| f.functional() != FunctionalKind::Density);
    let pool_size = cfg.evaluation.forecast_pool_size.unwrap_or(cfg.candidate_pool_size);

    // scored[method][period][family]
    let mut scored: Vec<Vec<Vec<ObservationScores>>> = Vec::with_capacity(methods.len());
    for (m, (name, files)) in methods.iter().enumerate() {
        let per_period = files
            .par_iter()
            .enumerate()
            .map(|(t, path)| {
                let candidate = match read_forecast(path)? {
                    ForecastFile::Pool(p) => {
                        if p.dim() != cfg.dimension {
                            return Err(Error::ingest(path, format!("pool has d={}", p.dim())));
                        }
                        Candidate::from_pool(name.clone(), p)
                    }
                    ForecastFile::Gaussian(g) if needs_pool => {
                        if pool_size == 0 {
                            return Err(Error::config(
                                "evaluation.forecast_pool_size",
                                "required to sample Gaussian forecasts",
                            ));
                        }
                        let seed = cfg.seed(streams::forecast(m, t, periods));
                        Candidate::gaussian(name.clone(), g, pool_size, seed)?
                    }
                    ForecastFile::Gaussian(g) => Candidate::from_density(name.clone(), g),
                };
                if candidate.dim() != cfg.dimension {
                    return Err(Error::ingest(path, format!("forecast has d={}", candidate.dim())));
                }
                let y = SamplePool::new(cfg.dimension, observations.draw(t).to_vec(), PoolSeed::External)?;
                families
                    .iter()
                    .zip(&alphas)
                    .map(|(f, a)| {
                        let profile = Profile::new(f.functional(), &candidate, &weight)?;
                        Ok(profile.score_observations(&y, a)?.remove(0))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        scored.push(per_period);
    }

    let mut log = ObservationLog::new();
    let mut tables = Vec::new();
    for (fi, fam) in families.iter().enumerate() {
        let mut rows = Vec::new();
        for (m, (name, _)) in methods.iter().enumerate() {
            let column: Vec<ObservationScores> = scored[m].iter().map(|p| p[fi].clone()).collect();
            for (t, s) in column.iter().enumerate() {
                log.push(fam, &alphas[fi], name, t, s);
            }
            let (means, sems) = summarize(&column, fam);
            rows.push(TableRow {
                label: name.clone(),
                means,
                sems,
            });
        }
        tables.push(ScoreTable {
            family: *fam,
            alphas: alphas[fi].clone(),
            rows,
        });
    }
    Ok(RunOutput {
        alphas: selections,
        tables,
        observations: Some(log),
    })
}
