//! Finite-population propagation of individual admixture fractions.
//!
//! A hybrid population of constant size `N` is founded from sources A
//! (fraction 1) and B (fraction 0) with equal probability per parent. Every
//! later generation draws each parent independently from A, B or the previous
//! hybrid generation with probabilities `(p_A, p_B, p_H)`; a child's fraction
//! is the mean of its parents'. After `t` generations, `n` individuals are
//! sampled without replacement.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DataSet, Model, ModelSpec, ParameterVector, SummaryVector};
use crate::rng::{fill_flat_dirichlet, SimRng};

const SIMPLEX_TOL: f64 = 1e-12;
const DEGENERATE_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmixConfig {
    #[serde(rename = "N")]
    pub population_size: usize,
    #[serde(rename = "t")]
    pub generations: usize,
    #[serde(rename = "n")]
    pub sample_size: usize,
}

impl AdmixConfig {
    /// Full-scale configuration: N = 10^4, t = 771, n = 604.
    pub fn pygmy_shape() -> Self {
        Self {
            population_size: 10_000,
            generations: 771,
            sample_size: 604,
        }
    }

    /// The short-history configuration used to split the error sources (t = 30).
    pub fn decomposition_t30() -> Self {
        Self {
            generations: 30,
            ..Self::pygmy_shape()
        }
    }

    /// Small configuration for desk-scale studies: N = 500, t = 10, n = 200.
    pub fn toy() -> Self {
        Self {
            population_size: 500,
            generations: 10,
            sample_size: 200,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::Config(format!(
                "population size N must be at least 2, got {}",
                self.population_size
            )));
        }
        if self.generations < 1 {
            return Err(Error::Config("t must be at least 1 generation".into()));
        }
        if self.sample_size < 1 || self.sample_size > self.population_size {
            return Err(Error::Config(format!(
                "sample size n = {} must lie in 1..={}",
                self.sample_size, self.population_size
            )));
        }
        Ok(())
    }
}

/// Per-generation parent-source probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmixParams {
    pub p_a: f64,
    pub p_b: f64,
    pub p_h: f64,
}

impl AdmixParams {
    pub fn new(p_a: f64, p_b: f64, p_h: f64) -> Result<Self> {
        let all = [p_a, p_b, p_h];
        if all.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::OutOfSupport(format!(
                "(p_A, p_B, p_H) = ({p_a}, {p_b}, {p_h}) has a negative or non-finite entry"
            )));
        }
        if (all.iter().sum::<f64>() - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::OutOfSupport(format!(
                "(p_A, p_B, p_H) = ({p_a}, {p_b}, {p_h}) does not sum to 1"
            )));
        }
        Ok(Self { p_a, p_b, p_h })
    }

    pub fn from_vector(params: &ParameterVector) -> Result<Self> {
        match params.values() {
            &[a, b, h] => Self::new(a, b, h),
            other => Err(Error::DimensionMismatch {
                expected: 3,
                found: other.len(),
            }),
        }
    }

    #[inline]
    fn parent<R: Rng + ?Sized>(&self, previous: &[f64], rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        if u < self.p_a {
            1.0
        } else if u < self.p_a + self.p_b {
            0.0
        } else {
            previous[rng.random_range(0..previous.len())]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmixturePopulation {
    pub fractions: Vec<f64>,
    /// The founding generation is generation 1.
    pub generation: usize,
}

impl AdmixturePopulation {
    pub fn mean(&self) -> f64 {
        self.fractions.iter().sum::<f64>() / self.fractions.len() as f64
    }
}

pub fn found_population<R: Rng + ?Sized>(config: &AdmixConfig, rng: &mut R) -> AdmixturePopulation {
    let fractions = (0..config.population_size)
        .map(|_| {
            let a = if rng.random::<bool>() { 1.0 } else { 0.0 };
            let b = if rng.random::<bool>() { 1.0 } else { 0.0 };
            (a + b) / 2.0
        })
        .collect();
    AdmixturePopulation {
        fractions,
        generation: 1,
    }
}

fn step_into<R: Rng + ?Sized>(previous: &[f64], next: &mut [f64], params: &AdmixParams, rng: &mut R) {
    for child in next.iter_mut() {
        let a = params.parent(previous, rng);
        let b = params.parent(previous, rng);
        *child = (a + b) / 2.0;
    }
}

pub fn step_generation<R: Rng + ?Sized>(
    pop: &AdmixturePopulation,
    params: &AdmixParams,
    rng: &mut R,
) -> AdmixturePopulation {
    let mut fractions = vec![0.0; pop.fractions.len()];
    step_into(&pop.fractions, &mut fractions, params, rng);
    AdmixturePopulation {
        fractions,
        generation: pop.generation + 1,
    }
}

/// The whole population at generation `t`.
pub fn simulate_population<R: Rng + ?Sized>(
    params: &AdmixParams,
    config: &AdmixConfig,
    rng: &mut R,
) -> AdmixturePopulation {
    let mut current = found_population(config, rng);
    let mut scratch = vec![0.0; config.population_size];
    for _ in 1..config.generations {
        step_into(&current.fractions, &mut scratch, params, rng);
        std::mem::swap(&mut current.fractions, &mut scratch);
        current.generation += 1;
    }
    current
}

/// `n` fractions sampled without replacement from generation `t`.
pub fn simulate_admix<R: Rng + ?Sized>(
    params: &AdmixParams,
    config: &AdmixConfig,
    n: usize,
    rng: &mut R,
) -> Result<DataSet> {
    if n == 0 || n > config.population_size {
        return Err(Error::InvalidInput(format!(
            "cannot sample n = {n} individuals from a population of {}",
            config.population_size
        )));
    }
    let pop = simulate_population(params, config, rng);
    let sample = index::sample(rng, config.population_size, n)
        .into_iter()
        .map(|i| pop.fractions[i])
        .collect();
    DataSet::from_flat(1, sample)
}

/// Sample mean, unbiased variance, skewness and excess kurtosis of the
/// fractions. Skewness and kurtosis use central moments with an `n`
/// denominator and are reported as 0 for (numerically) constant samples.
pub fn summarize_admix(data: &DataSet) -> Result<SummaryVector> {
    if data.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: data.dim(),
        });
    }
    data.ensure_finite()?;
    let x = data.as_flat();
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 fractions for moment summaries, got {n}"
        )));
    }
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let variance = m2 / (nf - 1.0);
    let (skewness, kurtosis) = if variance < DEGENERATE_VARIANCE {
        (0.0, 0.0)
    } else {
        let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    };
    Ok(SummaryVector(vec![mean, variance, skewness, kurtosis]))
}

impl Model for AdmixConfig {
    fn spec(&self) -> ModelSpec {
        ModelSpec::Admix(self.clone())
    }

    fn param_dim(&self) -> usize {
        3
    }

    fn obs_dim(&self) -> usize {
        1
    }

    fn summary_dim(&self) -> usize {
        4
    }

    fn sample_size(&self) -> usize {
        self.sample_size
    }

    fn prior_box(&self) -> Vec<(f64, f64)> {
        vec![(0.0, 1.0); 3]
    }

    /// `(p_A, p_B, p_H) ~ Dirichlet(1, 1, 1)`.
    fn sample_prior(&self, rng: &mut SimRng) -> ParameterVector {
        let mut p = vec![0.0; 3];
        fill_flat_dirichlet(&mut p, rng);
        ParameterVector(p)
    }

    fn check_params(&self, params: &ParameterVector) -> Result<()> {
        AdmixParams::from_vector(params).map(|_| ())
    }

    fn simulate(&self, params: &ParameterVector, n: usize, rng: &mut SimRng) -> Result<DataSet> {
        let params = AdmixParams::from_vector(params)?;
        simulate_admix(&params, self, n, rng)
    }

    fn summarize(&self, data: &DataSet) -> Result<SummaryVector> {
        summarize_admix(data)
    }
}
