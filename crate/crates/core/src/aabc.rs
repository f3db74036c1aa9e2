//! AABC by rejection.
//!
//! Each proposal `theta*` from the prior is matched to the pooled parameter
//! `theta~` nearest to it in Euclidean distance. Its stored data set `x~` then
//! stands in for the mechanistic model: one weight vector
//! `phi ~ Dirichlet(1, ..., 1)` is drawn over the `n` slots of `x~` and `n`
//! observations are drawn i.i.d. from `x~` with probabilities `phi`. Only
//! values present in `x~` can ever appear in a resampled data set.
//!
//! [`run_aabc_param_only`] keeps the nearest-parameter substitution but
//! simulates from the mechanistic model at `theta~`, isolating the error of the
//! parameter-space approximation.

use rand::Rng;
use rayon::prelude::*;

use crate::abc::{accept_proposals, check_observed, AcceptanceRule, Method, PosteriorSample};
use crate::error::{Error, Result};
use crate::model::{DataSet, Model, ParameterVector, Realization, ReferenceSet};
use crate::rng::{fill_flat_dirichlet, Categorical, SeedSpec, StreamKind};

#[derive(Debug, Clone, PartialEq)]
pub struct NearestMatch {
    /// Position of the match in the pool.
    pub index: usize,
    pub theta_tilde: ParameterVector,
    pub distance: f64,
}

/// Flat Dirichlet weights over the slots of a matched data set.
#[derive(Debug, Clone, PartialEq)]
pub struct ResampleWeights {
    pub phi: Vec<f64>,
}

impl ResampleWeights {
    pub fn draw<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut phi = vec![0.0; n];
        if n == 1 {
            phi[0] = 1.0;
        } else {
            fill_flat_dirichlet(&mut phi, rng);
        }
        Self { phi }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AabcOptions {
    /// Per-dimension divisors applied to parameter differences before the
    /// nearest-neighbour search. `None` is the plain Euclidean metric.
    pub param_scales: Option<Vec<f64>>,
}

impl AabcOptions {
    /// Scales every parameter by the width of its prior box.
    pub fn scaled_by_prior<M: Model + ?Sized>(model: &M) -> Self {
        let scales = model
            .prior_box()
            .into_iter()
            .map(|(lo, hi)| if hi > lo { hi - lo } else { 1.0 })
            .collect();
        Self {
            param_scales: Some(scales),
        }
    }
}

/// Exact nearest-neighbour lookup by linear scan over a set of realizations.
#[derive(Debug, Clone)]
pub struct MatchIndex<'a> {
    dim: usize,
    coords: Vec<f64>,
    members: Vec<&'a Realization>,
    inv_scales: Option<Vec<f64>>,
}

impl<'a> MatchIndex<'a> {
    pub fn new<I>(members: I, param_scales: Option<&[f64]>) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Realization>,
    {
        let members: Vec<&Realization> = members.into_iter().collect();
        let first = members.first().ok_or(Error::EmptyInput("pool"))?;
        let dim = first.params.len();
        let mut coords = Vec::with_capacity(members.len() * dim);
        for r in &members {
            if r.params.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.params.len(),
                });
            }
            coords.extend_from_slice(r.params.values());
        }
        let inv_scales = match param_scales {
            None => None,
            Some(s) => {
                if s.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: s.len(),
                    });
                }
                if let Some(&bad) = s.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                    return Err(Error::NonPositiveScale(bad));
                }
                Some(s.iter().map(|v| 1.0 / v).collect())
            }
        };
        Ok(Self {
            dim,
            coords,
            members,
            inv_scales,
        })
    }

    pub fn from_pool(pool: &'a ReferenceSet, param_scales: Option<&[f64]>) -> Result<Self> {
        Self::new(&pool.realizations, param_scales)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn member(&self, index: usize) -> &'a Realization {
        self.members[index]
    }

    /// Minimizer of the (scaled) Euclidean distance; the first index wins ties.
    pub fn nearest(&self, query: &ParameterVector) -> Result<NearestMatch> {
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: query.len(),
            });
        }
        let q = query.values();
        let mut best = (0usize, f64::INFINITY);
        for (i, row) in self.coords.chunks_exact(self.dim).enumerate() {
            let d2: f64 = match &self.inv_scales {
                None => row.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum(),
                Some(w) => row
                    .iter()
                    .zip(q)
                    .zip(w)
                    .map(|((a, b), w)| ((a - b) * w).powi(2))
                    .sum(),
            };
            if d2 < best.1 {
                best = (i, d2);
            }
        }
        if !best.1.is_finite() {
            return Err(Error::NonFinite("parameter distance"));
        }
        Ok(NearestMatch {
            index: best.0,
            theta_tilde: self.members[best.0].params.clone(),
            distance: best.1.sqrt(),
        })
    }
}

/// Nearest pooled parameter to `query` under the plain Euclidean metric.
pub fn nearest_parameter(query: &ParameterVector, pool: &ReferenceSet) -> Result<NearestMatch> {
    MatchIndex::from_pool(pool, None)?.nearest(query)
}

/// One surrogate data set: `phi ~ Dirichlet(1, ..., 1)` then `n` i.i.d. draws
/// from the rows of `source` with probabilities `phi`.
pub fn resample<R: Rng + ?Sized>(source: &DataSet, rng: &mut R) -> DataSet {
    let n = source.len();
    let dim = source.dim();
    let weights = ResampleWeights::draw(n, rng);
    let picker = Categorical::new(&weights.phi).expect("Dirichlet weights are a valid simplex point");
    let mut values = Vec::with_capacity(n * dim);
    for _ in 0..n {
        values.extend_from_slice(source.observation(picker.sample(rng)));
    }
    DataSet::from_flat(dim, values).expect("shape copied from a valid data set")
}

pub fn resample_dataset<R: Rng + ?Sized>(
    matched: &NearestMatch,
    pool: &ReferenceSet,
    rng: &mut R,
) -> Result<DataSet> {
    let member = pool.realizations.get(matched.index).ok_or_else(|| {
        Error::InvalidInput(format!(
            "match index {} outside a pool of {}",
            matched.index,
            pool.len()
        ))
    })?;
    if member.params != matched.theta_tilde {
        return Err(Error::InvalidInput("match does not belong to this pool".into()));
    }
    Ok(resample(&member.data, rng))
}

fn check_pool<M: Model + ?Sized>(model: &M, index: &MatchIndex<'_>) -> Result<()> {
    if index.dim != model.param_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.param_dim(),
            found: index.dim,
        });
    }
    let obs = index.member(0).data.dim();
    if obs != model.obs_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.obs_dim(),
            found: obs,
        });
    }
    Ok(())
}

fn check_model_matches<M: Model + ?Sized>(model: &M, pool: &ReferenceSet) -> Result<()> {
    if pool.model != model.spec() {
        return Err(Error::ModelMismatch(format!(
            "pool built for {:?}, running {:?}",
            pool.model,
            model.spec()
        )));
    }
    Ok(())
}

/// AABC over an already built match index. Proposal `i` uses the stream
/// `seed.derive(Proposal, i)`.
pub fn run_aabc_indexed<M: Model + ?Sized>(
    model: &M,
    s_obs: &crate::model::SummaryVector,
    index: &MatchIndex<'_>,
    proposals: usize,
    rule: &AcceptanceRule,
    seed: SeedSpec,
) -> Result<PosteriorSample> {
    check_observed(model, s_obs)?;
    check_pool(model, index)?;
    rule.validate()?;
    if proposals == 0 {
        return Err(Error::InvalidInput("number of proposals M must be at least 1".into()));
    }
    let scored = (0..proposals)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.derive(StreamKind::Proposal, i as u64).rng();
            let theta = model.sample_prior(&mut rng);
            let matched = index.nearest(&theta)?;
            let data = resample(&index.member(matched.index).data, &mut rng);
            let summary = model.summarize(&data)?;
            Ok((theta, summary))
        })
        .collect::<Result<Vec<_>>>()?;
    accept_proposals(scored, s_obs, rule, Method::Aabc, seed, model.param_dim())
}

/// Parameter-space-only variant over an already built match index: data are
/// simulated from the mechanistic model at the matched `theta~`.
pub fn run_aabc_param_only_indexed<M: Model + ?Sized>(
    model: &M,
    s_obs: &crate::model::SummaryVector,
    index: &MatchIndex<'_>,
    proposals: usize,
    rule: &AcceptanceRule,
    n: usize,
    seed: SeedSpec,
) -> Result<PosteriorSample> {
    check_observed(model, s_obs)?;
    check_pool(model, index)?;
    rule.validate()?;
    if proposals == 0 {
        return Err(Error::InvalidInput("number of proposals M must be at least 1".into()));
    }
    let scored = (0..proposals)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.derive(StreamKind::Proposal, i as u64).rng();
            let theta = model.sample_prior(&mut rng);
            let matched = index.nearest(&theta)?;
            let data = model.simulate(&matched.theta_tilde, n, &mut rng)?;
            let summary = model.summarize(&data)?;
            Ok((theta, summary))
        })
        .collect::<Result<Vec<_>>>()?;
    accept_proposals(scored, s_obs, rule, Method::AabcParamOnly, seed, model.param_dim())
}

pub fn run_aabc<M: Model + ?Sized>(
    model: &M,
    s_obs: &crate::model::SummaryVector,
    pool: &ReferenceSet,
    proposals: usize,
    rule: &AcceptanceRule,
    seed: SeedSpec,
) -> Result<PosteriorSample> {
    run_aabc_with(model, s_obs, pool, proposals, rule, seed, &AabcOptions::default())
}

pub fn run_aabc_with<M: Model + ?Sized>(
    model: &M,
    s_obs: &crate::model::SummaryVector,
    pool: &ReferenceSet,
    proposals: usize,
    rule: &AcceptanceRule,
    seed: SeedSpec,
    options: &AabcOptions,
) -> Result<PosteriorSample> {
    check_model_matches(model, pool)?;
    let index = MatchIndex::from_pool(pool, options.param_scales.as_deref())?;
    run_aabc_indexed(model, s_obs, &index, proposals, rule, seed)
}

pub fn run_aabc_param_only<M: Model + ?Sized>(
    model: &M,
    s_obs: &crate::model::SummaryVector,
    pool: &ReferenceSet,
    proposals: usize,
    rule: &AcceptanceRule,
    n: usize,
    seed: SeedSpec,
) -> Result<PosteriorSample> {
    run_aabc_param_only_with(model, s_obs, pool, proposals, rule, n, seed, &AabcOptions::default())
}

#[allow(clippy::too_many_arguments)]
pub fn run_aabc_param_only_with<M: Model + ?Sized>(
    model: &M,
    s_obs: &crate::model::SummaryVector,
    pool: &ReferenceSet,
    proposals: usize,
    rule: &AcceptanceRule,
    n: usize,
    seed: SeedSpec,
    options: &AabcOptions,
) -> Result<PosteriorSample> {
    check_model_matches(model, pool)?;
    let index = MatchIndex::from_pool(pool, options.param_scales.as_deref())?;
    run_aabc_param_only_indexed(model, s_obs, &index, proposals, rule, n, seed)
}
