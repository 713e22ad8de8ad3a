//! L² scores for distributions in their renormalized form: the quadratic
//! score DQS′, MCRPS′ and LPMS′, plus the univariate CRPS and the
//! generalized quantile score used to cross-check the disintegration.
//!
//! Each score has the shape E_λ[Ψ(Z)²] − 2·(proxy term), where Ψ is the
//! candidate's density, CDF or LPM and the proxy term is the realization's
//! counterpart. The MC-estimated functionals are tabulated once on the weight
//! pool as a [`Profile`] and reused across observations and levels.

use std::sync::Arc;

use rayon::prelude::*;

use crate::dist::{dirac_transform, FunctionalKind, GaussianSpec, SamplePool};
use crate::error::{check_dim, Error, Result};
use crate::weight::{Estimate, WeightMeasure};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreValue {
    pub value: f64,
    /// MC standard error of the weight-expectation terms only.
    pub std_error: f64,
    pub n_weight_draws: usize,
}

impl ScoreValue {
    fn from_estimate(e: Estimate, offset: f64, n: usize) -> Self {
        ScoreValue {
            value: e.estimate + offset,
            std_error: e.std_error,
            n_weight_draws: n,
        }
    }
}

/// A forecast distribution P_X: an analytic density, a sample pool, or both.
#[derive(Clone, Debug)]
pub struct Candidate {
    label: String,
    density: Option<GaussianSpec>,
    pool: Option<Arc<SamplePool>>,
}

impl Candidate {
    pub fn from_density(label: impl Into<String>, spec: GaussianSpec) -> Self {
        Candidate {
            label: label.into(),
            density: Some(spec),
            pool: None,
        }
    }

    pub fn from_pool(label: impl Into<String>, pool: SamplePool) -> Self {
        Candidate {
            label: label.into(),
            density: None,
            pool: Some(Arc::new(pool)),
        }
    }

    /// Density plus a pool of `pool_size` draws generated from `seed`.
    pub fn gaussian(
        label: impl Into<String>,
        spec: GaussianSpec,
        pool_size: usize,
        seed: u64,
    ) -> Result<Self> {
        let pool = spec.sample(pool_size, seed)?;
        Ok(Candidate {
            label: label.into(),
            density: Some(spec),
            pool: Some(Arc::new(pool)),
        })
    }

    /// Attaches a sample pool to a density-only candidate.
    pub fn with_pool(mut self, pool: SamplePool) -> Result<Self> {
        check_dim(self.dim(), pool.dim())?;
        self.pool = Some(Arc::new(pool));
        Ok(self)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn density(&self) -> Option<&GaussianSpec> {
        self.density.as_ref()
    }

    pub fn pool(&self) -> Option<&SamplePool> {
        self.pool.as_deref()
    }

    pub fn dim(&self) -> usize {
        match (&self.density, &self.pool) {
            (Some(d), _) => d.dim(),
            (None, Some(p)) => p.dim(),
            (None, None) => unreachable!("candidate without density or pool"),
        }
    }

    pub(crate) fn require_density(&self) -> Result<&GaussianSpec> {
        self.density.as_ref().ok_or_else(|| {
            Error::Capability(format!("candidate `{}` has no density", self.label))
        })
    }

    pub(crate) fn require_pool(&self) -> Result<&SamplePool> {
        self.pool.as_deref().ok_or_else(|| {
            Error::Capability(format!("candidate `{}` has no sample pool", self.label))
        })
    }

    /// Ψ(z): density, empirical CDF or empirical LPM.
    pub fn psi(&self, functional: FunctionalKind, z: &[f64]) -> Result<f64> {
        match functional.heaviside_order() {
            None => self.require_density()?.pdf(z),
            Some(k) => self.require_pool()?.lpm(z, k),
        }
    }

    /// Ψ at every row of `queries`.
    pub fn psi_many(&self, functional: FunctionalKind, queries: &[f64]) -> Result<Vec<f64>> {
        match functional.heaviside_order() {
            None => {
                let spec = self.require_density()?;
                if queries.len() % spec.dim() != 0 {
                    return Err(Error::Dimension {
                        expected: spec.dim(),
                        got: queries.len() % spec.dim(),
                    });
                }
                queries.par_chunks(spec.dim()).map(|z| spec.pdf(z)).collect()
            }
            Some(k) => self.require_pool()?.lpm_many(queries, k),
        }
    }
}

#[inline]
fn l2_integrand(psi: f64, proxy: f64) -> f64 {
    psi * psi - 2.0 * psi * proxy
}

#[inline]
fn level_integrand(psi: f64, alpha: f64, proxy: f64) -> f64 {
    if psi >= alpha {
        alpha - proxy
    } else {
        0.0
    }
}

#[inline]
fn density_level_integrand(psi: f64, alpha: f64) -> f64 {
    if psi >= alpha {
        alpha
    } else {
        0.0
    }
}

/// Per-observation result of [`Profile::score_observations`].
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationScores {
    pub l2: ScoreValue,
    pub levels: Vec<ScoreValue>,
}

/// A candidate's functional Ψ tabulated on the weight pool.
#[derive(Clone, Debug)]
pub struct Profile<'a> {
    candidate: &'a Candidate,
    weight: &'a WeightMeasure,
    functional: FunctionalKind,
    values: Vec<f64>,
}

impl<'a> Profile<'a> {
    pub fn new(
        functional: FunctionalKind,
        candidate: &'a Candidate,
        weight: &'a WeightMeasure,
    ) -> Result<Self> {
        check_dim(weight.dim(), candidate.dim())?;
        let values = candidate.psi_many(functional, weight.pool().data())?;
        Ok(Profile {
            candidate,
            weight,
            functional,
            values,
        })
    }

    pub fn functional(&self) -> FunctionalKind {
        self.functional
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weight(&self) -> &WeightMeasure {
        self.weight
    }

    pub fn candidate(&self) -> &Candidate {
        self.candidate
    }

    fn n(&self) -> usize {
        self.weight.len()
    }

    /// S′(P_X, y).
    pub fn l2(&self, y: &[f64]) -> Result<ScoreValue> {
        check_dim(self.weight.dim(), y.len())?;
        let v = &self.values;
        match self.functional.heaviside_order() {
            None => {
                let e = self.weight.expectation_indexed(|m, _| v[m] * v[m])?;
                let point = self.candidate.psi(self.functional, y)? * self.weight.density(y)?;
                Ok(ScoreValue::from_estimate(e, -2.0 * point, self.n()))
            }
            Some(k) => {
                let e = self
                    .weight
                    .expectation_indexed(|m, z| l2_integrand(v[m], proxy(y, z, k)))?;
                Ok(ScoreValue::from_estimate(e, 0.0, self.n()))
            }
        }
    }

    /// (S′)^Γ for the level set {Ψ ≥ alpha}.
    pub fn level(&self, alpha: f64, y: &[f64]) -> Result<ScoreValue> {
        check_dim(self.weight.dim(), y.len())?;
        check_alpha(self.functional, alpha)?;
        let v = &self.values;
        match self.functional.heaviside_order() {
            None => {
                let e = self
                    .weight
                    .expectation_indexed(|m, _| density_level_integrand(v[m], alpha))?;
                let point = self.density_point_term(alpha, y)?;
                Ok(ScoreValue::from_estimate(e, -point, self.n()))
            }
            Some(k) => {
                let e = self
                    .weight
                    .expectation_indexed(|m, z| level_integrand(v[m], alpha, proxy(y, z, k)))?;
                Ok(ScoreValue::from_estimate(e, 0.0, self.n()))
            }
        }
    }

    /// 1{f_X(y) ≥ α}·h²(y): the point-mass second term of the density level score.
    fn density_point_term(&self, alpha: f64, y: &[f64]) -> Result<f64> {
        let f = self.candidate.psi(self.functional, y)?;
        Ok(if f >= alpha {
            self.weight.density(y)?
        } else {
            0.0
        })
    }

    /// L² score and level-set scores at every `alpha` for each observation.
    ///
    /// Values are bit-identical to calling [`Profile::l2`] and
    /// [`Profile::level`] one at a time. Observations are processed in
    /// parallel; the output order follows `observations`.
    pub fn score_observations(
        &self,
        observations: &SamplePool,
        alphas: &[f64],
    ) -> Result<Vec<ObservationScores>> {
        check_dim(self.weight.dim(), observations.dim())?;
        for &a in alphas {
            check_alpha(self.functional, a)?;
        }
        let v = &self.values;
        let n = self.n();
        let outputs = alphas.len() + 1;
        match self.functional.heaviside_order() {
            None => {
                // every weight expectation is independent of y
                let terms = self.weight.expectations(outputs, |m, _, out| {
                    out[0] = v[m] * v[m];
                    for (o, &a) in out[1..].iter_mut().zip(alphas) {
                        *o = density_level_integrand(v[m], a);
                    }
                })?;
                observations
                    .iter()
                    .collect::<Vec<_>>()
                    .par_iter()
                    .map(|y| {
                        let h2 = self.weight.density(y)?;
                        let f = self.candidate.psi(self.functional, y)?;
                        let l2 = ScoreValue::from_estimate(terms[0], -2.0 * (f * h2), n);
                        let levels = alphas
                            .iter()
                            .zip(&terms[1..])
                            .map(|(&a, &e)| {
                                let point = if f >= a { h2 } else { 0.0 };
                                ScoreValue::from_estimate(e, -point, n)
                            })
                            .collect();
                        Ok(ObservationScores { l2, levels })
                    })
                    .collect()
            }
            Some(k) => observations
                .iter()
                .collect::<Vec<_>>()
                .par_iter()
                .map(|y| {
                    let est = self.weight.expectations(outputs, |m, z, out| {
                        let p = proxy(y, z, k);
                        out[0] = l2_integrand(v[m], p);
                        for (o, &a) in out[1..].iter_mut().zip(alphas) {
                            *o = level_integrand(v[m], a, p);
                        }
                    })?;
                    Ok(ObservationScores {
                        l2: ScoreValue::from_estimate(est[0], 0.0, n),
                        levels: est[1..]
                            .iter()
                            .map(|&e| ScoreValue::from_estimate(e, 0.0, n))
                            .collect(),
                    })
                })
                .collect(),
        }
    }
}

#[inline]
fn proxy(y: &[f64], z: &[f64], k: u32) -> f64 {
    // dimensions are checked by the callers
    dirac_transform(y, z, k).unwrap_or(f64::NAN)
}

pub(crate) fn check_alpha(functional: FunctionalKind, alpha: f64) -> Result<()> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("level {alpha} must be finite and ≥ 0")));
    }
    if functional == FunctionalKind::Cdf && alpha > 1.0 {
        return Err(Error::Domain(format!("CDF level {alpha} exceeds 1")));
    }
    Ok(())
}

/// Quadratic score DQS′ = E_λ[f_X²] − 2 f_X(y) h²(y).
pub fn dqs(candidate: &Candidate, y: &[f64], w: &WeightMeasure) -> Result<ScoreValue> {
    candidate.require_density()?;
    Profile::new(FunctionalKind::Density, candidate, w)?.l2(y)
}

/// MCRPS′ = E_λ[F̂_X²] − 2 E_λ[F̂_X 1{Z ≥ y}].
pub fn mcrps(candidate: &Candidate, y: &[f64], w: &WeightMeasure) -> Result<ScoreValue> {
    candidate.require_pool()?;
    Profile::new(FunctionalKind::Cdf, candidate, w)?.l2(y)
}

/// LPMS′ of order `k`; `k = 0` coincides with [`mcrps`].
pub fn lpms(candidate: &Candidate, y: &[f64], k: u32, w: &WeightMeasure) -> Result<ScoreValue> {
    candidate.require_pool()?;
    Profile::new(FunctionalKind::Lpm(k), candidate, w)?.l2(y)
}

/// Threshold-weighted CRPS E_λ[(F̂_X(Z) − 1{Z ≥ y})²] for d = 1, in its
/// non-renormalized squared form.
pub fn crps_univariate(candidate: &Candidate, y: f64, w: &WeightMeasure) -> Result<ScoreValue> {
    check_dim(1, candidate.dim())?;
    check_dim(1, w.dim())?;
    candidate.require_pool()?;
    let profile = Profile::new(FunctionalKind::Cdf, candidate, w)?;
    let v = profile.values();
    let e = w.expectation_indexed(|m, z| {
        let ind = if z[0] >= y { 1.0 } else { 0.0 };
        let r = v[m] - ind;
        r * r
    })?;
    Ok(ScoreValue::from_estimate(e, 0.0, w.len()))
}

/// Generalized quantile score (α − 1{y < q})(H(y) − H(q)) for nondecreasing `h`.
pub fn quantile_score<H>(alpha: f64, q: f64, y: f64, h: H) -> Result<f64>
where
    H: Fn(f64) -> f64,
{
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha {alpha} is outside (0,1)")));
    }
    if !q.is_finite() || !y.is_finite() {
        return Err(Error::Domain("quantile and realization must be finite".into()));
    }
    let ind = if y < q { 1.0 } else { 0.0 };
    Ok((alpha - ind) * (h(y) - h(q)))
}
