//! Level sets {Ψ ≥ α} of a candidate functional and their scores.
//!
//! The density, CDF and LPM level-set scores share the form
//! α·λ(L) − (realization term), where L is the closed level set of the
//! candidate. Integrating a level-set score over α recovers twice the
//! matching L² score; [`disintegrate`] evaluates that integral numerically.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::csv;
use crate::dist::{FunctionalKind, PoolSeed, SamplePool};
use crate::error::{check_dim, Error, Result};
use crate::scores::{check_alpha, Candidate, Profile, ScoreValue};
use crate::weight::WeightMeasure;

/// Log-spaced nodes in the α grid used by [`disintegrate`].
pub const ALPHA_GRID_NODES: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelSpec {
    functional: FunctionalKind,
    alpha: f64,
}

impl LevelSpec {
    pub fn new(functional: FunctionalKind, alpha: f64) -> Result<Self> {
        check_alpha(functional, alpha)?;
        Ok(LevelSpec { functional, alpha })
    }

    pub fn functional(&self) -> FunctionalKind {
        self.functional
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

pub fn psi_eval(functional: FunctionalKind, candidate: &Candidate, z: &[f64]) -> Result<f64> {
    candidate.psi(functional, z)
}

/// Whether `z` lies in the closed level set {Ψ ≥ α}.
pub fn level_membership(spec: LevelSpec, candidate: &Candidate, z: &[f64]) -> Result<bool> {
    Ok(candidate.psi(spec.functional, z)? >= spec.alpha)
}

/// α·E_λ[1{f_X ≥ α}] − 1{f_X(y) ≥ α}·h²(y).
pub fn density_level_score(
    candidate: &Candidate,
    alpha: f64,
    y: &[f64],
    w: &WeightMeasure,
) -> Result<ScoreValue> {
    candidate.require_density()?;
    Profile::new(FunctionalKind::Density, candidate, w)?.level(alpha, y)
}

/// α·E_λ[1{F̂_X ≥ α}] − E_λ[1{F̂_X ≥ α}·1{Z ≥ y}].
pub fn cdf_level_score(
    candidate: &Candidate,
    alpha: f64,
    y: &[f64],
    w: &WeightMeasure,
) -> Result<ScoreValue> {
    candidate.require_pool()?;
    Profile::new(FunctionalKind::Cdf, candidate, w)?.level(alpha, y)
}

/// α·E_λ[1{L̂PM ≥ α}] − E_λ[1{L̂PM ≥ α}·ϑ(y, Z, k)]; `k = 0` is [`cdf_level_score`].
pub fn lpm_level_score(
    candidate: &Candidate,
    alpha: f64,
    y: &[f64],
    k: u32,
    w: &WeightMeasure,
) -> Result<ScoreValue> {
    candidate.require_pool()?;
    Profile::new(FunctionalKind::Lpm(k), candidate, w)?.level(alpha, y)
}

/// Type-7 empirical quantile of already sorted values at `p ∈ [0, 1]`.
pub fn sorted_quantile(sorted: &[f64], p: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::Domain("quantile of an empty sample".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("quantile level {p} is outside [0,1]")));
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// Levels α at the requested quantiles of Ψ_reference over the observations.
pub fn alpha_select(
    functional: FunctionalKind,
    reference: &Candidate,
    observations: &SamplePool,
    levels: &[f64],
) -> Result<Vec<f64>> {
    check_dim(reference.dim(), observations.dim())?;
    let mut values = reference.psi_many(functional, observations.data())?;
    values.sort_by(f64::total_cmp);
    levels.iter().map(|&p| sorted_quantile(&values, p)).collect()
}

/// Selected α values for one functional.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaSelection {
    pub functional: FunctionalKind,
    pub levels: Vec<f64>,
    pub alphas: Vec<f64>,
}

/// `functional,k,level,alpha` rows for every selection; configured α values
/// carry the level `explicit`.
pub fn alphas_csv(selections: &[AlphaSelection]) -> String {
    let mut out = csv::row(["functional", "k", "level", "alpha"]);
    for s in selections {
        for (&p, &a) in s.levels.iter().zip(&s.alphas) {
            out.push_str(&csv::row([
                s.functional.name().to_string(),
                s.functional.order().to_string(),
                if p.is_nan() { "explicit".to_string() } else { csv::float(p) },
                csv::float(a),
            ]));
        }
    }
    out
}

/// One grid axis: `nodes` equally spaced points from `min` to `max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub nodes: usize,
}

impl GridAxis {
    pub fn new(min: f64, max: f64, nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::Domain(format!("grid axis needs ≥ 2 nodes, got {nodes}")));
        }
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::Domain(format!("grid axis range {min}:{max} is invalid")));
        }
        Ok(GridAxis { min, max, nodes })
    }

    pub fn coordinates(&self) -> Vec<f64> {
        let step = (self.max - self.min) / (self.nodes - 1) as f64;
        (0..self.nodes)
            .map(|i| {
                if i + 1 == self.nodes {
                    self.max
                } else {
                    self.min + i as f64 * step
                }
            })
            .collect()
    }

    /// Parses `"xmin:xmax:nx,ymin:ymax:ny"`.
    pub fn parse_grid(text: &str) -> Result<Vec<GridAxis>> {
        text.split(',').map(str::parse).collect()
    }
}

impl FromStr for GridAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("grid axis `{s}` is not min:max:nodes"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let min = parts[0].trim().parse().map_err(|_| bad())?;
        let max = parts[1].trim().parse().map_err(|_| bad())?;
        let nodes = parts[2].trim().parse().map_err(|_| bad())?;
        GridAxis::new(min, max, nodes)
    }
}

/// Ψ on a bivariate Cartesian grid, row-major with the first axis outermost.
#[derive(Clone, Debug, PartialEq)]
pub struct ContourGrid {
    pub functional: FunctionalKind,
    pub axes: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl ContourGrid {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.axes[1].len() + j]
    }

    /// Grid indices of the largest value (first one on ties).
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        let ny = self.axes[1].len();
        (best / ny, best % ny)
    }

    pub fn to_csv(&self) -> String {
        let (xs, ys) = (&self.axes[0], &self.axes[1]);
        let mut out = csv::row(["functional", "k", "d", "nx", "ny"]);
        out.push_str(&csv::row([
            self.functional.name().to_string(),
            self.functional.order().to_string(),
            "2".to_string(),
            xs.len().to_string(),
            ys.len().to_string(),
        ]));
        out.push_str(&csv::row(["x", "y", "psi"]));
        for (i, &x) in xs.iter().enumerate() {
            for (j, &y) in ys.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{}",
                    csv::float(x),
                    csv::float(y),
                    csv::float(self.value(i, j))
                );
            }
        }
        out
    }
}

pub fn contour_grid(
    functional: FunctionalKind,
    candidate: &Candidate,
    axes: &[GridAxis],
) -> Result<ContourGrid> {
    check_dim(2, candidate.dim())?;
    check_dim(2, axes.len())?;
    let xs = axes[0].coordinates();
    let ys = axes[1].coordinates();
    let mut nodes = Vec::with_capacity(2 * xs.len() * ys.len());
    for &x in &xs {
        for &y in &ys {
            nodes.push(x);
            nodes.push(y);
        }
    }
    let values = candidate.psi_many(functional, &nodes)?;
    Ok(ContourGrid {
        functional,
        axes: vec![xs, ys],
        values,
    })
}

/// The α grid for integrating level-set scores: 0, then
/// [`ALPHA_GRID_NODES`] log-spaced nodes from half the smallest positive
/// value to 1.05 times the largest, plus each `breakpoint` and the float just
/// above it so a jump there is resolved exactly.
pub fn alpha_grid(values: &[f64], breakpoints: &[f64]) -> Vec<f64> {
    let positive = values
        .iter()
        .chain(breakpoints)
        .copied()
        .filter(|&v| v > 0.0 && v.is_finite());
    let (lo, hi) = positive.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let mut grid = vec![0.0];
    if hi > 0.0 {
        let (a, b) = ((0.5 * lo).ln(), (1.05 * hi).ln());
        let n = ALPHA_GRID_NODES;
        grid.extend((0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()));
        for &p in breakpoints.iter().filter(|&&p| p > 0.0 && p.is_finite()) {
            grid.push(p);
            grid.push(p.next_up());
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Trapezoid rule for samples `values` at increasing `nodes`.
pub fn trapezoid(nodes: &[f64], values: &[f64]) -> f64 {
    nodes
        .windows(2)
        .zip(values.windows(2))
        .map(|(x, v)| 0.5 * (x[1] - x[0]) * (v[0] + v[1]))
        .sum()
}

/// The L² score computed directly and through its level-set disintegration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Disintegration {
    pub direct: f64,
    pub integrated: f64,
    pub nodes: usize,
}

impl Disintegration {
    pub fn relative_error(&self) -> f64 {
        (self.integrated - self.direct).abs() / self.direct.abs()
    }
}

/// S′(P_X, y) versus 2∫ (S′)^Γ(α) dα over [`alpha_grid`].
pub fn disintegrate(profile: &Profile<'_>, y: &[f64]) -> Result<Disintegration> {
    let breakpoints = match profile.functional() {
        FunctionalKind::Density => vec![profile.candidate().psi(profile.functional(), y)?],
        _ => Vec::new(),
    };
    let mut grid = alpha_grid(profile.values(), &breakpoints);
    if profile.functional() == FunctionalKind::Cdf {
        // CDF levels above 1 are empty
        grid.retain(|&a| a < 1.0);
        grid.push(1.0);
    }
    let obs = SamplePool::new(y.len(), y.to_vec(), PoolSeed::External)?;
    let scored = profile.score_observations(&obs, &grid)?;
    let levels: Vec<f64> = scored[0].levels.iter().map(|s| s.value).collect();
    Ok(Disintegration {
        direct: scored[0].l2.value,
        integrated: 2.0 * trapezoid(&grid, &levels),
        nodes: grid.len(),
    })
}
