//! Level-set and L² scoring of multivariate forecast distributions.
//!
//! Forecasts are represented by a Gaussian density, a sample pool, or both.
//! Scores integrate a candidate functional (density, CDF or lower partial
//! moment) against a finite weight measure approximated by Monte Carlo.

pub mod cli;
pub mod csv;
pub mod dist;
pub mod error;
pub mod experiments;
pub mod levelsets;
pub mod rng;
pub mod scores;
pub mod weight;

pub use dist::{FunctionalKind, GaussianSpec, Point, SamplePool};
pub use error::{Error, Result};
pub use scores::{Candidate, Profile, ScoreValue};
pub use weight::{Estimate, WeightMeasure};
