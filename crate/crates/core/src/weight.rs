//! The weight measure λ with density h², represented by a fixed pool of draws.
//!
//! Every score integral ∫ g |h|² dz becomes E_λ[g(Z)], estimated as the mean
//! of g over the pool. Reductions run over fixed chunks of [`CHUNK_SIZE`]
//! draws; partial sums are combined in chunk order, so estimates do not depend
//! on how many worker threads evaluated the chunks.

use rayon::prelude::*;

use crate::dist::{GaussianSpec, PoolSeed, SamplePool};
use crate::error::{check_dim, Error, Result};

pub const CHUNK_SIZE: usize = 4096;

/// Monte Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub estimate: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug)]
pub struct WeightMeasure {
    spec: GaussianSpec,
    pool: SamplePool,
    mass: f64,
}

impl WeightMeasure {
    /// λ = N(spec), represented by `pool_size` draws from `seed`.
    pub fn sample(spec: GaussianSpec, pool_size: usize, seed: u64) -> Result<Self> {
        let pool = spec.sample(pool_size, seed)?;
        Ok(WeightMeasure {
            spec,
            pool,
            mass: 1.0,
        })
    }

    /// λ = N(spec) represented by caller-supplied nodes (e.g. a quadrature grid).
    pub fn from_pool(spec: GaussianSpec, pool: SamplePool) -> Result<Self> {
        check_dim(spec.dim(), pool.dim())?;
        Ok(WeightMeasure {
            spec,
            pool,
            mass: 1.0,
        })
    }

    /// One-dimensional equal-mass nodes μ + σΦ⁻¹((m + ½)/M), m = 0..M.
    ///
    /// The node set's empirical CDF is within 1/(2M) of the Gaussian CDF
    /// everywhere, which makes it a deterministic stand-in for a random pool.
    pub fn quantile_grid(spec: GaussianSpec, nodes: usize) -> Result<Self> {
        check_dim(1, spec.dim())?;
        if nodes == 0 {
            return Err(Error::Domain("quantile grid needs at least one node".into()));
        }
        let m = nodes as f64;
        let data = (0..nodes)
            .map(|i| spec.quantile((i as f64 + 0.5) / m))
            .collect::<Result<Vec<_>>>()?;
        let pool = SamplePool::new(1, data, PoolSeed::External)?;
        WeightMeasure::from_pool(spec, pool)
    }

    /// The same measure multiplied by a positive constant `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Domain(format!("weight scale {c} must be positive")));
        }
        Ok(WeightMeasure {
            mass: self.mass * c,
            ..self.clone()
        })
    }

    pub fn spec(&self) -> &GaussianSpec {
        &self.spec
    }

    pub fn pool(&self) -> &SamplePool {
        &self.pool
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn len(&self) -> usize {
        self.pool.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pool.is_empty()
    }

    /// Total mass λ(R^d); 1 unless [`WeightMeasure::scaled`] was used.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// h²(z).
    pub fn density(&self, z: &[f64]) -> Result<f64> {
        Ok(self.mass * self.spec.pdf(z)?)
    }

    /// E_λ[g(Z)] over the pool.
    pub fn expectation<G>(&self, g: G) -> Result<Estimate>
    where
        G: Fn(&[f64]) -> f64 + Sync,
    {
        self.expectation_indexed(|_, z| g(z))
    }

    /// Like [`WeightMeasure::expectation`] but `g` also receives the draw index,
    /// so callers can look up precomputed per-draw values.
    pub fn expectation_indexed<G>(&self, g: G) -> Result<Estimate>
    where
        G: Fn(usize, &[f64]) -> f64 + Sync,
    {
        let out = self.expectations(1, |m, z, buf| buf[0] = g(m, z))?;
        Ok(out[0])
    }

    /// Several expectations in one pass: `g(m, z, out)` writes `outputs`
    /// integrand values for draw `m`. Component `j` of the result is
    /// bit-identical to a scalar expectation of the `j`-th integrand.
    pub fn expectations<G>(&self, outputs: usize, g: G) -> Result<Vec<Estimate>>
    where
        G: Fn(usize, &[f64], &mut [f64]) + Sync,
    {
        let d = self.pool.dim();
        let draws = self.pool.data();
        let chunk_len = CHUNK_SIZE * d;
        let partials: Vec<Vec<(f64, f64)>> = draws
            .par_chunks(chunk_len)
            .enumerate()
            .map(|(c, chunk)| {
                let mut acc = vec![(0.0f64, 0.0f64); outputs];
                let mut buf = vec![0.0f64; outputs];
                for (i, z) in chunk.chunks_exact(d).enumerate() {
                    g(c * CHUNK_SIZE + i, z, &mut buf);
                    for (a, &v) in acc.iter_mut().zip(&buf) {
                        a.0 += v;
                        a.1 += v * v;
                    }
                }
                acc
            })
            .collect();

        let mut sum = vec![0.0f64; outputs];
        let mut sumsq = vec![0.0f64; outputs];
        for (c, part) in partials.iter().enumerate() {
            if part.iter().any(|(s, _)| s.is_nan()) {
                return Err(Error::Evaluation {
                    index: self.first_nan(c, outputs, &g),
                });
            }
            for j in 0..outputs {
                sum[j] += part[j].0;
                sumsq[j] += part[j].1;
            }
        }

        let m = self.pool.len() as f64;
        Ok(sum
            .iter()
            .zip(&sumsq)
            .map(|(&s, &sq)| {
                let mean = s / m;
                let var = if m > 1.0 {
                    ((sq - s * mean) / (m - 1.0)).max(0.0)
                } else {
                    0.0
                };
                Estimate {
                    estimate: self.mass * mean,
                    std_error: self.mass * (var / m).sqrt(),
                }
            })
            .collect())
    }

    fn first_nan<G>(&self, chunk: usize, outputs: usize, g: &G) -> usize
    where
        G: Fn(usize, &[f64], &mut [f64]),
    {
        let start = chunk * CHUNK_SIZE;
        let end = (start + CHUNK_SIZE).min(self.pool.len());
        let mut buf = vec![0.0; outputs];
        for m in start..end {
            g(m, self.pool.draw(m), &mut buf);
            if buf.iter().any(|v| v.is_nan()) {
                return m;
            }
        }
        // an infinite integrand can also poison the sum (inf - inf)
        start
    }
}
