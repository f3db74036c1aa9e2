//! Multi-locus K-allele model with symmetric balancing selection and mutation.
//!
//! Per-locus allele frequencies `a` on the open simplex follow the stationary
//! density
//!
//! ```text
//! f(a | sigma, mu) ∝ exp(-sigma * Σ a_i²) * Π a_i^(mu/K - 1)
//! ```
//!
//! Draws are exact: a `Dirichlet(mu/K, ..., mu/K)` proposal is accepted with
//! probability `exp(-sigma * (Σ a_i² - 1/K))`, which never exceeds one because
//! `Σ a_i² >= 1/K` on the simplex. The normalizing constant is never needed.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DataSet, Model, ModelSpec, ParameterVector, SummaryVector};
use crate::rng::{draw_uniform, fill_dirichlet_log, LogGamma, SimRng};

/// Missing keys take the values of [`BalSelConfig::default`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BalSelConfig {
    /// Alleles per locus (K).
    #[serde(rename = "K")]
    pub alleles: usize,
    /// Independent loci concatenated into one observation.
    pub loci: usize,
    /// Default number of observations per data set.
    #[serde(rename = "n")]
    pub sample_size: usize,
    pub prior_sigma: (f64, f64),
    pub prior_mu: (f64, f64),
}

impl Default for BalSelConfig {
    fn default() -> Self {
        Self {
            alleles: 4,
            loci: 100,
            sample_size: 10,
            prior_sigma: (0.0, 50.0),
            prior_mu: (0.1, 10.0),
        }
    }
}

impl BalSelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alleles < 2 {
            return Err(Error::Config(format!("K must be at least 2, got {}", self.alleles)));
        }
        if self.loci < 1 {
            return Err(Error::Config("at least one locus is required".into()));
        }
        if self.sample_size < 1 {
            return Err(Error::Config("sample size n must be at least 1".into()));
        }
        let (slo, shi) = self.prior_sigma;
        if !(slo.is_finite() && shi.is_finite() && 0.0 <= slo && slo <= shi) {
            return Err(Error::Config(format!("bad sigma prior bounds ({slo}, {shi})")));
        }
        let (mlo, mhi) = self.prior_mu;
        if !(mlo.is_finite() && mhi.is_finite() && 0.0 < mlo && mlo <= mhi) {
            return Err(Error::Config(format!("bad mu prior bounds ({mlo}, {mhi})")));
        }
        Ok(())
    }
}

/// Allele frequencies at one locus: strictly positive, summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct LocusFrequencies(pub Vec<f64>);

/// Exact sampler for the stationary density at fixed `(sigma, mu, K)`.
#[derive(Debug, Clone)]
pub struct StationarySampler {
    sigma: f64,
    floor: f64,
    proposal: Vec<LogGamma>,
}

impl StationarySampler {
    pub fn new(sigma: f64, mu: f64, alleles: usize) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::OutOfSupport(format!("sigma = {sigma} must be >= 0")));
        }
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::OutOfSupport(format!("mu = {mu} must be > 0")));
        }
        if alleles < 2 {
            return Err(Error::InvalidInput(format!("K = {alleles} must be >= 2")));
        }
        let shape = mu / alleles as f64;
        let proposal = vec![LogGamma::new(shape)?; alleles];
        Ok(Self {
            sigma,
            floor: 1.0 / alleles as f64,
            proposal,
        })
    }

    /// Writes one draw into `out` and returns the number of proposals used.
    pub fn sample_into<R: Rng + ?Sized>(&self, out: &mut [f64], rng: &mut R) -> u64 {
        let mut proposals = 0;
        loop {
            proposals += 1;
            fill_dirichlet_log(&self.proposal, out, rng);
            // Components below the smallest normal f64 cannot be logged
            // reliably; drop the proposal (probability ~1e-8 per component at
            // the smallest mu/K in the default prior).
            if out.iter().any(|&a| a < f64::MIN_POSITIVE) {
                continue;
            }
            if self.sigma == 0.0 {
                return proposals;
            }
            let excess = (out.iter().map(|a| a * a).sum::<f64>() - self.floor).max(0.0);
            let u: f64 = 1.0 - rng.random::<f64>();
            if u.ln() <= -self.sigma * excess {
                return proposals;
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> LocusFrequencies {
        let mut out = vec![0.0; self.proposal.len()];
        self.sample_into(&mut out, rng);
        LocusFrequencies(out)
    }
}

/// One exact draw of per-locus frequencies.
pub fn sample_stationary<R: Rng + ?Sized>(
    sigma: f64,
    mu: f64,
    alleles: usize,
    rng: &mut R,
) -> Result<LocusFrequencies> {
    Ok(StationarySampler::new(sigma, mu, alleles)?.sample(rng))
}

/// `n` observations, each the concatenation of `loci` independent locus draws.
pub fn simulate_balsel<R: Rng + ?Sized>(
    sigma: f64,
    mu: f64,
    n: usize,
    config: &BalSelConfig,
    rng: &mut R,
) -> Result<DataSet> {
    if n == 0 {
        return Err(Error::InvalidInput("sample size n must be at least 1".into()));
    }
    let sampler = StationarySampler::new(sigma, mu, config.alleles)?;
    let dim = config.alleles * config.loci;
    let mut values = vec![0.0; n * dim];
    for locus in values.chunks_exact_mut(config.alleles) {
        sampler.sample_into(locus, rng);
    }
    DataSet::from_flat(dim, values)
}

/// `(mean Σ a_j², mean -Σ log a_j)` over every locus of every observation.
pub fn summarize_balsel(data: &DataSet, alleles: usize) -> Result<SummaryVector> {
    if data.is_empty() {
        return Err(Error::EmptyInput("data set"));
    }
    if alleles < 2 || !data.dim().is_multiple_of(alleles) {
        return Err(Error::DimensionMismatch {
            expected: alleles,
            found: data.dim(),
        });
    }
    let mut homozygosity = 0.0;
    let mut neg_log = 0.0;
    let mut count = 0usize;
    for locus in data.as_flat().chunks_exact(alleles) {
        for &a in locus {
            if !a.is_finite() {
                return Err(Error::NonFinite("allele frequency"));
            }
            if a <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "allele frequency {a} is not strictly positive"
                )));
            }
            homozygosity += a * a;
            neg_log -= a.ln();
        }
        count += 1;
    }
    let count = count as f64;
    Ok(SummaryVector(vec![homozygosity / count, neg_log / count]))
}

fn draw_from_box(lo: f64, hi: f64, rng: &mut SimRng) -> f64 {
    if lo == hi {
        lo
    } else {
        draw_uniform(lo, hi, rng).expect("prior bounds validated")
    }
}

impl Model for BalSelConfig {
    fn spec(&self) -> ModelSpec {
        ModelSpec::BalSel(self.clone())
    }

    fn param_dim(&self) -> usize {
        2
    }

    fn obs_dim(&self) -> usize {
        self.alleles * self.loci
    }

    fn summary_dim(&self) -> usize {
        2
    }

    fn sample_size(&self) -> usize {
        self.sample_size
    }

    fn prior_box(&self) -> Vec<(f64, f64)> {
        vec![self.prior_sigma, self.prior_mu]
    }

    /// `(sigma, mu)` uniform on the configured boxes.
    fn sample_prior(&self, rng: &mut SimRng) -> ParameterVector {
        let sigma = draw_from_box(self.prior_sigma.0, self.prior_sigma.1, rng);
        let mu = draw_from_box(self.prior_mu.0, self.prior_mu.1, rng);
        ParameterVector(vec![sigma, mu])
    }

    fn check_params(&self, params: &ParameterVector) -> Result<()> {
        if params.len() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: params.len(),
            });
        }
        let (sigma, mu) = (params.0[0], params.0[1]);
        let inside = |v: f64, (lo, hi): (f64, f64)| v.is_finite() && lo <= v && v <= hi;
        if !inside(sigma, self.prior_sigma) || !inside(mu, self.prior_mu) {
            return Err(Error::OutOfSupport(format!("(sigma, mu) = ({sigma}, {mu})")));
        }
        Ok(())
    }

    fn simulate(&self, params: &ParameterVector, n: usize, rng: &mut SimRng) -> Result<DataSet> {
        self.check_params(params)?;
        simulate_balsel(params.0[0], params.0[1], n, self, rng)
    }

    fn summarize(&self, data: &DataSet) -> Result<SummaryVector> {
        if data.dim() != self.obs_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.obs_dim(),
                found: data.dim(),
            });
        }
        summarize_balsel(data, self.alleles)
    }
}
