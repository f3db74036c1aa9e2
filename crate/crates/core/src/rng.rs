//! Seeded, splittable randomness and the handful of distributions the
//! samplers draw from.
//!
//! Every random quantity in the crate is drawn from a [`SimRng`] obtained
//! through a [`SeedSpec`]. A run starts from one root seed; each task (a
//! proposal, a pool member, a test set) derives its own stream with
//! [`SeedSpec::derive`], so results do not depend on how tasks are scheduled
//! across worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The generator behind every stream.
pub type SimRng = ChaCha8Rng;

/// Task kinds mixed into derived stream ids. The discriminants are part of the
/// reproducibility contract; append new kinds, never renumber.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamKind {
    Realization = 1,
    Proposal = 2,
    Observed = 3,
    Pool = 4,
    TestSelection = 5,
    TestSet = 6,
    PoolSubsample = 7,
    Method = 8,
    Replicate = 9,
    Locus = 10,
    Custom = 11,
}

/// A root seed plus the id of one stream derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub root_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub fn new(root_seed: u64) -> Self {
        Self {
            root_seed,
            stream_id: 0,
        }
    }

    /// Child stream for task `index` of the given kind.
    pub fn derive(&self, kind: StreamKind, index: u64) -> Self {
        let tagged = mix(self.stream_id, kind as u64);
        Self {
            root_seed: self.root_seed,
            stream_id: mix(tagged, index),
        }
    }

    pub fn rng(&self) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.root_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn mix(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b).rotate_left(17))
}

/// Uniform draw on `[lo, hi)`.
pub fn draw_uniform<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> Result<f64> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidBounds { lo, hi });
    }
    Ok(rng.random_range(lo..hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletParams {
    alphas: Vec<f64>,
}

impl DirichletParams {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.len() < 2 {
            return Err(Error::InvalidDirichlet(format!(
                "need at least 2 components, got {}",
                alphas.len()
            )));
        }
        if let Some(bad) = alphas.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::InvalidDirichlet(format!(
                "concentration {bad} is not positive"
            )));
        }
        Ok(Self { alphas })
    }

    pub fn symmetric(alpha: f64, len: usize) -> Result<Self> {
        Self::new(vec![alpha; len])
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }
}

/// Draws `ln G` for `G ~ Gamma(shape, 1)` without underflow for small shapes.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogGamma {
    gamma: Gamma<f64>,
    // Some(1/shape) when shape < 1: G = G' * U^(1/shape) with G' ~ Gamma(shape + 1).
    boost: Option<f64>,
}

impl LogGamma {
    pub(crate) fn new(shape: f64) -> Result<Self> {
        let (gamma_shape, boost) = if shape < 1.0 {
            (shape + 1.0, Some(1.0 / shape))
        } else {
            (shape, None)
        };
        let gamma = Gamma::new(gamma_shape, 1.0)
            .map_err(|e| Error::InvalidDirichlet(format!("shape {shape}: {e}")))?;
        Ok(Self { gamma, boost })
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let base = self.gamma.sample(rng).ln();
        match self.boost {
            Some(inv_shape) => {
                // 1 - U lies in (0, 1], so the log is finite.
                let u: f64 = 1.0 - rng.random::<f64>();
                base + u.ln() * inv_shape
            }
            None => base,
        }
    }
}

/// Fills `out` with a Dirichlet draw, given per-component log-gamma samplers.
pub(crate) fn fill_dirichlet_log<R: Rng + ?Sized>(
    samplers: &[LogGamma],
    out: &mut [f64],
    rng: &mut R,
) {
    debug_assert_eq!(samplers.len(), out.len());
    let mut max = f64::NEG_INFINITY;
    for (slot, sampler) in out.iter_mut().zip(samplers) {
        *slot = sampler.sample(rng);
        max = max.max(*slot);
    }
    let mut sum = 0.0;
    for slot in out.iter_mut() {
        *slot = (*slot - max).exp();
        sum += *slot;
    }
    for slot in out.iter_mut() {
        *slot /= sum;
    }
}

/// Fills `out` with a draw from the flat Dirichlet(1, ..., 1).
pub(crate) fn fill_flat_dirichlet<R: Rng + ?Sized>(out: &mut [f64], rng: &mut R) {
    let mut sum = 0.0;
    for slot in out.iter_mut() {
        let e: f64 = Exp1.sample(rng);
        *slot = e;
        sum += e;
    }
    for slot in out.iter_mut() {
        *slot /= sum;
    }
}

/// A point on the simplex drawn from `Dirichlet(params)`.
pub fn draw_dirichlet<R: Rng + ?Sized>(params: &DirichletParams, rng: &mut R) -> Vec<f64> {
    let mut out = vec![0.0; params.len()];
    if params.alphas.iter().all(|&a| a == 1.0) {
        fill_flat_dirichlet(&mut out, rng);
        return out;
    }
    let samplers: Vec<LogGamma> = params
        .alphas
        .iter()
        .map(|&a| LogGamma::new(a).expect("alphas validated at construction"))
        .collect();
    fill_dirichlet_log(&samplers, &mut out, rng);
    out
}

/// Inverse-CDF sampler over a fixed weight vector.
#[derive(Debug, Clone)]
pub struct Categorical {
    cumulative: Vec<f64>,
    last_positive: usize,
}

impl Categorical {
    pub fn new(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyWeights);
        }
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut total = 0.0;
        let mut last_positive = None;
        for (i, &w) in weights.iter().enumerate() {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidWeights(format!("weight {i} is {w}")));
            }
            if w > 0.0 {
                last_positive = Some(i);
            }
            total += w;
            cumulative.push(total);
        }
        let last_positive = last_positive
            .ok_or_else(|| Error::InvalidWeights("all weights are zero".to_string()))?;
        Ok(Self {
            cumulative,
            last_positive,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = self.cumulative[self.cumulative.len() - 1];
        let u = rng.random::<f64>() * total;
        let idx = self.cumulative.partition_point(|&c| c <= u);
        idx.min(self.last_positive)
    }
}

/// `count` i.i.d. indices drawn with probabilities proportional to `weights`.
pub fn draw_categorical<R: Rng + ?Sized>(
    weights: &[f64],
    count: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if count == 0 {
        return Err(Error::InvalidInput("categorical draw count must be positive".into()));
    }
    let sampler = Categorical::new(weights)?;
    Ok((0..count).map(|_| sampler.sample(rng)).collect())
}
