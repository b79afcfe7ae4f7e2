//! Sampling from densities `∝ exp(⟨g, a⟩)` on `conv(𝒜)`.
//!
//! Exact on points and segments, bounding-box rejection on polygons, and
//! hit-and-run (`100·k` steps from the centroid) in higher dimension.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::hull::Polytope;
use crate::error::{Error, Result};

pub const MAX_REJECTIONS: usize = 10_000_000;
pub const MIXING_STEPS_PER_DIM: usize = 100;

#[derive(Debug, Clone)]
pub struct LogLinearSampler {
    polytope: Polytope,
    mixing_steps_per_dim: usize,
}

impl LogLinearSampler {
    pub fn new(polytope: Polytope) -> Self {
        Self {
            polytope,
            mixing_steps_per_dim: MIXING_STEPS_PER_DIM,
        }
    }

    pub fn with_mixing_steps(mut self, per_dim: usize) -> Self {
        self.mixing_steps_per_dim = per_dim.max(1);
        self
    }

    pub fn polytope(&self) -> &Polytope {
        &self.polytope
    }

    /// One draw with ambient log-density gradient `g`.
    pub fn sample<R: Rng + ?Sized>(&self, g: &DVector<f64>, rng: &mut R) -> Result<DVector<f64>> {
        let p = &self.polytope;
        let gz = p.project_direction(g);
        let z = match p.dim() {
            0 => DVector::zeros(0),
            1 => {
                let (lo, hi) = p.bounding_box();
                DVector::from_element(1, truncated_exponential(gz[0], lo[0], hi[0], rng.gen()))
            }
            2 => self.rejection(&gz, rng)?,
            k => self.hit_and_run(&gz, k, rng),
        };
        Ok(p.to_ambient(&z))
    }

    /// `count` draws, draw `i` using stream `i` of a ChaCha8 generator
    /// seeded with `seed`; evaluated in parallel, deterministic in output.
    pub fn sample_many(&self, g: &DVector<f64>, seed: u64, first_stream: u64, count: usize) -> Result<Vec<DVector<f64>>> {
        (0..count)
            .into_par_iter()
            .map(|i| {
                let mut rng = substream(seed, first_stream + i as u64);
                self.sample(g, &mut rng)
            })
            .collect()
    }

    fn rejection<R: Rng + ?Sized>(&self, gz: &DVector<f64>, rng: &mut R) -> Result<DVector<f64>> {
        let p = &self.polytope;
        let (lo, hi) = p.bounding_box();
        let top = p.vertices().iter().map(|v| gz.dot(v)).fold(f64::NEG_INFINITY, f64::max);
        for _ in 0..MAX_REJECTIONS {
            let z = DVector::from_fn(lo.len(), |j, _| lo[j] + (hi[j] - lo[j]) * rng.gen::<f64>());
            let u: f64 = rng.gen();
            if p.contains_local(&z) && u.ln() <= gz.dot(&z) - top {
                return Ok(z);
            }
        }
        Err(Error::Capacity {
            message: "rejection sampler exhausted its proposal budget".into(),
            achieved: 0,
        })
    }

    fn hit_and_run<R: Rng + ?Sized>(&self, gz: &DVector<f64>, k: usize, rng: &mut R) -> DVector<f64> {
        let p = &self.polytope;
        let mut z = p.vertices().iter().fold(DVector::zeros(k), |acc, v| acc + v) / p.vertices().len() as f64;
        for _ in 0..self.mixing_steps_per_dim * k {
            let mut u = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
            let norm = u.norm();
            if norm == 0.0 {
                continue;
            }
            u /= norm;
            let (lo, hi) = p.chord(&z, &u);
            let t = truncated_exponential(gz.dot(&u), lo, hi, rng.gen());
            z += u * t;
        }
        z
    }
}

pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Inverse-CDF draw from density `∝ exp(rate·t)` on `[lo, hi]`.
pub fn truncated_exponential(rate: f64, lo: f64, hi: f64, u: f64) -> f64 {
    let len = hi - lo;
    if len <= 0.0 {
        return lo;
    }
    let x = rate * len;
    if x.abs() < 1e-12 {
        return lo + u * len;
    }
    let t = if x > 0.0 {
        hi + (u + (1.0 - u) * (-x).exp()).ln() / rate
    } else {
        lo + (u * x.exp_m1()).ln_1p() / rate
    };
    t.clamp(lo, hi)
}
