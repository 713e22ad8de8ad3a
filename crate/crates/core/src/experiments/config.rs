use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::dist::{FunctionalKind, GaussianSpec, SamplePool};
use crate::error::{Error, Result};
use crate::rng::{stream_seed, streams};
use crate::scores::Candidate;
use crate::weight::WeightMeasure;

/// An L² score family together with its level-set functional.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ScoreKind {
    Dqs,
    Mcrps,
    Lpms(u32),
}

impl ScoreKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScoreKind::Dqs => "dqs",
            ScoreKind::Mcrps => "mcrps",
            ScoreKind::Lpms(_) => "lpms",
        }
    }

    pub fn functional(&self) -> FunctionalKind {
        match *self {
            ScoreKind::Dqs => FunctionalKind::Density,
            ScoreKind::Mcrps => FunctionalKind::Cdf,
            ScoreKind::Lpms(k) => FunctionalKind::Lpm(k),
        }
    }

    pub fn for_functional(f: FunctionalKind) -> Self {
        match f {
            FunctionalKind::Density => ScoreKind::Dqs,
            FunctionalKind::Cdf => ScoreKind::Mcrps,
            FunctionalKind::Lpm(k) => ScoreKind::Lpms(k),
        }
    }

    /// `dqs_density`, `mcrps_cdf`, `lpms_lpm` (k = 1) or `lpms_lpm_k{k}`.
    pub fn file_stem(&self) -> String {
        match *self {
            ScoreKind::Dqs => "dqs_density".into(),
            ScoreKind::Mcrps => "mcrps_cdf".into(),
            ScoreKind::Lpms(1) => "lpms_lpm".into(),
            ScoreKind::Lpms(k) => format!("lpms_lpm_k{k}"),
        }
    }
}

/// One output table: which L² score and whether level-set columns are wanted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Family {
    pub score: ScoreKind,
    pub l2: bool,
    pub levels: bool,
}

impl Family {
    pub fn functional(&self) -> FunctionalKind {
        self.score.functional()
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TruthSection {
    pub mean: Option<Vec<f64>>,
    pub covariance: Option<Vec<f64>>,
    #[serde(default)]
    pub external: bool,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WeightSection {
    /// Absent mean and covariance in evaluation mode: fitted to the realizations.
    pub mean: Option<Vec<f64>>,
    pub covariance: Option<Vec<f64>>,
    pub pool_size: usize,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CandidateSection {
    pub label: String,
    pub mean: Option<Vec<f64>>,
    pub covariance: Option<Vec<f64>>,
    pub pool: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSection {
    pub reference_pool: Option<PathBuf>,
    pub forecast_pool_size: Option<usize>,
}

/// The experiment configuration file (TOML).
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dimension: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub n_observations: usize,
    #[serde(default)]
    pub candidate_pool_size: usize,
    pub reference_pool_size: Option<usize>,
    #[serde(default = "default_levels")]
    pub alpha_levels: Vec<f64>,
    #[serde(default)]
    pub functionals: Vec<String>,
    #[serde(default)]
    pub scores: Vec<String>,
    #[serde(default = "default_k")]
    pub k_values: Vec<u32>,
    /// Explicit α values keyed by functional name; bypasses selection.
    #[serde(default)]
    pub alphas: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub write_observations: bool,
    pub truth: TruthSection,
    pub weight: WeightSection,
    #[serde(default)]
    pub candidates: Vec<CandidateSection>,
    #[serde(default)]
    pub evaluation: EvaluationSection,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_levels() -> Vec<f64> {
    (1..=9).map(|i| f64::from(i) / 10.0).collect()
}

fn default_k() -> Vec<u32> {
    vec![1]
}

fn gaussian(field: &str, mean: &[f64], cov: &[f64], d: usize) -> Result<GaussianSpec> {
    if mean.len() != d {
        return Err(Error::config(
            format!("{field}.mean"),
            format!("expected {d} entries, got {}", mean.len()),
        ));
    }
    if cov.len() != d * d {
        return Err(Error::config(
            format!("{field}.covariance"),
            format!("expected {} entries, got {}", d * d, cov.len()),
        ));
    }
    GaussianSpec::new(mean.to_vec(), cov.to_vec())
        .map_err(|e| Error::config(format!("{field}.covariance"), e.to_string()))
}

impl ExperimentConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .and_then(|s| text.get(..s.start))
                .and_then(|head| head.lines().last())
                .and_then(|line| line.split('=').next())
                .map(|s| s.trim().trim_matches(['[', ']']).to_string())
                .filter(|s| !s.is_empty())
                .unwrap_or_else(|| path.display().to_string());
            Error::config(field, e.message().to_string())
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ExperimentConfig::parse(&text, path)
    }

    pub fn is_simulation(&self) -> bool {
        !self.truth.external
    }

    pub(crate) fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dimension;
        if d == 0 {
            return Err(Error::config("dimension", "must be positive"));
        }
        if self.is_simulation() {
            self.truth_spec()?;
            if self.n_observations == 0 {
                return Err(Error::config("n_observations", "must be positive"));
            }
            if self.candidates.is_empty() {
                return Err(Error::config("candidates", "at least one candidate is required"));
            }
        } else if self.truth.mean.is_some() || self.truth.covariance.is_some() {
            return Err(Error::config("truth", "external truth takes no mean or covariance"));
        }
        if self.weight.pool_size == 0 {
            return Err(Error::config("weight.pool_size", "must be positive"));
        }
        match (&self.weight.mean, &self.weight.covariance) {
            (Some(m), Some(c)) => {
                gaussian("weight", m, c, d)?;
            }
            (None, None) if !self.is_simulation() => {}
            _ => {
                return Err(Error::config(
                    "weight",
                    "mean and covariance are required (both or, in evaluation mode, neither)",
                ))
            }
        }
        for (i, c) in self.candidates.iter().enumerate() {
            let field = format!("candidates[{i}]");
            if c.label.is_empty() || c.label.contains([',', '\n']) {
                return Err(Error::config(format!("{field}.label"), "must be non-empty without commas"));
            }
            match (&c.mean, &c.covariance, &c.pool) {
                (Some(m), Some(cov), _) => {
                    gaussian(&field, m, cov, d)?;
                    if c.pool.is_none() && self.candidate_pool_size == 0 && self.needs_pools() {
                        return Err(Error::config("candidate_pool_size", "must be positive"));
                    }
                }
                (None, None, Some(_)) => {}
                _ => {
                    return Err(Error::config(
                        field,
                        "needs mean and covariance, or a pool file",
                    ))
                }
            }
            if self.candidates[..i].iter().any(|o| o.label == c.label) {
                return Err(Error::config(format!("{field}.label"), format!("duplicate label `{}`", c.label)));
            }
        }
        for (i, &p) in self.alpha_levels.iter().enumerate() {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::config(format!("alpha_levels[{i}]"), format!("{p} is outside (0,1)")));
            }
        }
        for (name, values) in &self.alphas {
            let f: FunctionalKind = name
                .parse()
                .map_err(|e: Error| Error::config(format!("alphas.{name}"), e.to_string()))?;
            for (i, &a) in values.iter().enumerate() {
                crate::scores::check_alpha(f, a)
                    .map_err(|e| Error::config(format!("alphas.{name}[{i}]"), e.to_string()))?;
            }
        }
        if self.families()?.is_empty() {
            return Err(Error::config("scores", "no scores or functionals requested"));
        }
        if self.reference_pool_size == Some(0) {
            return Err(Error::config("reference_pool_size", "must be positive"));
        }
        if self.evaluation.forecast_pool_size == Some(0) {
            return Err(Error::config("evaluation.forecast_pool_size", "must be positive"));
        }
        Ok(())
    }

    fn needs_pools(&self) -> bool {
        self.families()
            .map(|fs| fs.iter().any(|f| f.score != ScoreKind::Dqs))
            .unwrap_or(true)
    }

    /// Output tables, sorted by score kind.
    pub fn families(&self) -> Result<Vec<Family>> {
        let mut out: BTreeMap<ScoreKind, Family> = BTreeMap::new();
        for (i, s) in self.scores.iter().enumerate() {
            let kinds: Vec<ScoreKind> = match s.as_str() {
                "dqs" => vec![ScoreKind::Dqs],
                "mcrps" => vec![ScoreKind::Mcrps],
                "lpms" => self.k_values.iter().map(|&k| ScoreKind::Lpms(k)).collect(),
                other => {
                    return Err(Error::config(
                        format!("scores[{i}]"),
                        format!("unknown score `{other}` (expected dqs, mcrps or lpms)"),
                    ))
                }
            };
            for kind in kinds {
                out.entry(kind)
                    .or_insert(Family { score: kind, l2: false, levels: false })
                    .l2 = true;
            }
        }
        for (i, f) in self.functionals.iter().enumerate() {
            let kinds: Vec<FunctionalKind> = if f == "lpm" {
                self.k_values.iter().map(|&k| FunctionalKind::Lpm(k)).collect()
            } else {
                vec![f
                    .parse()
                    .map_err(|e: Error| Error::config(format!("functionals[{i}]"), e.to_string()))?]
            };
            for fk in kinds {
                let kind = ScoreKind::for_functional(fk);
                out.entry(kind)
                    .or_insert(Family { score: kind, l2: false, levels: false })
                    .levels = true;
            }
        }
        Ok(out.into_values().collect())
    }

    pub fn seed(&self, stream: u64) -> u64 {
        stream_seed(self.master_seed, stream)
    }

    pub fn truth_spec(&self) -> Result<GaussianSpec> {
        match (&self.truth.mean, &self.truth.covariance) {
            (Some(m), Some(c)) if !self.truth.external => gaussian("truth", m, c, self.dimension),
            _ => Err(Error::config("truth", "simulation mode needs truth.mean and truth.covariance")),
        }
    }

    /// Weight measure from the `[weight]` section; `fallback` supplies the
    /// spec when mean and covariance are omitted.
    pub fn weight_measure(&self, fallback: Option<GaussianSpec>) -> Result<WeightMeasure> {
        let spec = match (&self.weight.mean, &self.weight.covariance, fallback) {
            (Some(m), Some(c), _) => gaussian("weight", m, c, self.dimension)?,
            (None, None, Some(s)) => s,
            _ => return Err(Error::config("weight", "mean and covariance are required")),
        };
        let seed = self
            .weight
            .seed
            .unwrap_or_else(|| self.seed(streams::WEIGHT));
        WeightMeasure::sample(spec, self.weight.pool_size, seed)
    }

    /// Candidates in configuration order, with pools from their own streams.
    pub fn build_candidates(&self, need_pools: bool) -> Result<Vec<Candidate>> {
        self.candidates
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let field = format!("candidates[{i}]");
                match (&c.mean, &c.covariance, &c.pool) {
                    (Some(m), Some(cov), pool) => {
                        let spec = gaussian(&field, m, cov, self.dimension)?;
                        match pool {
                            Some(p) => {
                                let pool = self.read_pool(p)?;
                                Ok(Candidate::from_density(c.label.clone(), spec).with_pool(pool)?)
                            }
                            None if need_pools => Candidate::gaussian(
                                c.label.clone(),
                                spec,
                                self.candidate_pool_size,
                                self.seed(streams::candidate(i)),
                            ),
                            None => Ok(Candidate::from_density(c.label.clone(), spec)),
                        }
                    }
                    (_, _, Some(p)) => Ok(Candidate::from_pool(c.label.clone(), self.read_pool(p)?)),
                    _ => Err(Error::config(field, "needs mean and covariance, or a pool file")),
                }
            })
            .collect()
    }

    pub(crate) fn read_pool(&self, p: &Path) -> Result<SamplePool> {
        let path = self.resolve(p);
        let pool = SamplePool::read_file(&path)?;
        if pool.dim() != self.dimension {
            return Err(Error::ingest(
                &path,
                format!("pool has d={}, config dimension is {}", pool.dim(), self.dimension),
            ));
        }
        Ok(pool)
    }

    /// Explicit α values for `f`, if configured.
    pub fn explicit_alphas(&self, f: FunctionalKind) -> Option<&[f64]> {
        let keys = match f {
            FunctionalKind::Lpm(1) => vec!["lpm1".to_string(), "lpm".to_string()],
            other => vec![other.to_string()],
        };
        keys.iter()
            .find_map(|k| self.alphas.get(k))
            .map(Vec::as_slice)
    }
}
