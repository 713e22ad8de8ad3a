use crate::dist::{FunctionalKind, SamplePool};
use crate::error::Result;
use crate::levelsets::{alpha_select, AlphaSelection};
use crate::rng::streams;
use crate::scores::{Candidate, Profile};

use super::{summarize, ExperimentConfig, Family, ObservationLog, RunOutput, ScoreTable, TableRow};

/// α values for every level-set family: configured explicitly, or the
/// `alpha_levels` quantiles of Ψ_reference over `observations`.
pub(super) fn select_alphas(
    cfg: &ExperimentConfig,
    families: &[Family],
    reference: impl Fn() -> Result<Candidate>,
    observations: &SamplePool,
) -> Result<Vec<AlphaSelection>> {
    let mut reference_cache: Option<Candidate> = None;
    let mut out = Vec::new();
    for fam in families.iter().filter(|f| f.levels) {
        let functional = fam.functional();
        let selection = match cfg.explicit_alphas(functional) {
            Some(a) => AlphaSelection {
                functional,
                levels: vec![f64::NAN; a.len()],
                alphas: a.to_vec(),
            },
            None => {
                if reference_cache.is_none() {
                    reference_cache = Some(reference()?);
                }
                let r = reference_cache.as_ref().expect("reference built above");
                AlphaSelection {
                    functional,
                    levels: cfg.alpha_levels.clone(),
                    alphas: alpha_select(functional, r, observations, &cfg.alpha_levels)?,
                }
            }
        };
        out.push(selection);
    }
    Ok(out)
}

pub(super) fn alphas_for(selections: &[AlphaSelection], f: FunctionalKind) -> Vec<f64> {
    selections
        .iter()
        .find(|s| s.functional == f)
        .map(|s| s.alphas.clone())
        .unwrap_or_default()
}

/// Generates observations from the truth, scores every candidate at the
/// selected α values and returns the mean tables.
pub fn run_simulation_study(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let truth = cfg.truth_spec()?;
    let observations = truth.sample(cfg.n_observations, cfg.seed(streams::OBSERVATIONS))?;
    let weight = cfg.weight_measure(None)?;
    let families = cfg.families()?;
    let need_pools = families.iter().any(|f| f.functional() != FunctionalKind::Density);
    let candidates = cfg.build_candidates(need_pools)?;

    let reference_size = cfg.reference_pool_size.unwrap_or(cfg.candidate_pool_size);
    let reference = || {
        let seed = cfg.seed(streams::reference(cfg.candidates.len()));
        Candidate::gaussian("truth", truth.clone(), reference_size, seed)
    };
    let selections = select_alphas(cfg, &families, reference, &observations)?;

    let mut log = cfg.write_observations.then(ObservationLog::new);
    let mut tables = Vec::new();
    for fam in &families {
        let alphas = alphas_for(&selections, fam.functional());
        let mut rows = Vec::new();
        for c in &candidates {
            let profile = Profile::new(fam.functional(), c, &weight)?;
            let scored = profile.score_observations(&observations, &alphas)?;
            if let Some(log) = log.as_mut() {
                for (i, s) in scored.iter().enumerate() {
                    log.push(fam, &alphas, c.label(), i, s);
                }
            }
            let (means, sems) = summarize(&scored, fam);
            rows.push(TableRow {
                label: c.label().to_string(),
                means,
                sems,
            });
        }
        tables.push(ScoreTable {
            family: *fam,
            alphas,
            rows,
        });
    }
    Ok(RunOutput {
        alphas: selections,
        tables,
        observations: log,
    })
}
