//! The generative-model abstraction shared by both samplers, and the pool of
//! stored mechanistic realizations.

mod store;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admix::AdmixConfig;
use crate::balsel::BalSelConfig;
use crate::error::{Error, Result};
use crate::rng::{SeedSpec, SimRng, StreamKind};

pub use store::{
    export_csv, load_reference_set, load_reference_set_for, read_observed_csv, save_reference_set,
    write_observed_csv,
};

/// A point in the parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterVector(pub Vec<f64>);

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Low-dimensional statistic of a data set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SummaryVector(pub Vec<f64>);

impl SummaryVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `n` i.i.d. observations of a fixed dimension, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    dim: usize,
    values: Vec<f64>,
}

impl DataSet {
    pub fn from_flat(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("observation dimension must be positive".into()));
        }
        if values.is_empty() {
            return Err(Error::EmptyInput("data set"));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::InvalidInput(format!(
                "{} values do not split into observations of dimension {dim}",
                values.len()
            )));
        }
        Ok(Self { dim, values })
    }

    pub fn from_observations<I, O>(observations: I) -> Result<Self>
    where
        I: IntoIterator<Item = O>,
        O: AsRef<[f64]>,
    {
        let mut dim = None;
        let mut values = Vec::new();
        for obs in observations {
            let obs = obs.as_ref();
            match dim {
                None => dim = Some(obs.len()),
                Some(d) if d != obs.len() => {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: obs.len(),
                    })
                }
                Some(_) => {}
            }
            values.extend_from_slice(obs);
        }
        Self::from_flat(dim.ok_or(Error::EmptyInput("data set"))?, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of observations.
    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn observation(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn observations(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn ensure_finite(&self) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("observation"))
        }
    }
}

/// One stored `(data set, parameter)` pair simulated from the mechanistic model.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub params: ParameterVector,
    pub data: DataSet,
}

/// A prior, a mechanistic simulator and the summary statistics used to compare
/// data sets.
pub trait Model: Send + Sync {
    fn spec(&self) -> ModelSpec;

    fn param_dim(&self) -> usize;

    fn obs_dim(&self) -> usize;

    fn summary_dim(&self) -> usize;

    /// Sample size used when the caller does not override it.
    fn sample_size(&self) -> usize;

    /// Bounding box of the prior support, one `(lo, hi)` per parameter.
    fn prior_box(&self) -> Vec<(f64, f64)>;

    fn sample_prior(&self, rng: &mut SimRng) -> ParameterVector;

    fn check_params(&self, params: &ParameterVector) -> Result<()>;

    fn simulate(&self, params: &ParameterVector, n: usize, rng: &mut SimRng) -> Result<DataSet>;

    fn summarize(&self, data: &DataSet) -> Result<SummaryVector>;
}

/// Registered models and their fixed hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id")]
pub enum ModelSpec {
    #[serde(rename = "balsel")]
    BalSel(BalSelConfig),
    #[serde(rename = "admix")]
    Admix(AdmixConfig),
}

impl ModelSpec {
    pub const KNOWN_IDS: [&'static str; 2] = ["balsel", "admix"];

    pub fn id(&self) -> &'static str {
        match self {
            ModelSpec::BalSel(_) => "balsel",
            ModelSpec::Admix(_) => "admix",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::BalSel(c) => c.validate(),
            ModelSpec::Admix(c) => c.validate(),
        }
    }

    fn inner(&self) -> &dyn Model {
        match self {
            ModelSpec::BalSel(c) => c,
            ModelSpec::Admix(c) => c,
        }
    }
}

impl Model for ModelSpec {
    fn spec(&self) -> ModelSpec {
        self.clone()
    }

    fn param_dim(&self) -> usize {
        self.inner().param_dim()
    }

    fn obs_dim(&self) -> usize {
        self.inner().obs_dim()
    }

    fn summary_dim(&self) -> usize {
        self.inner().summary_dim()
    }

    fn sample_size(&self) -> usize {
        self.inner().sample_size()
    }

    fn prior_box(&self) -> Vec<(f64, f64)> {
        self.inner().prior_box()
    }

    fn sample_prior(&self, rng: &mut SimRng) -> ParameterVector {
        self.inner().sample_prior(rng)
    }

    fn check_params(&self, params: &ParameterVector) -> Result<()> {
        self.inner().check_params(params)
    }

    fn simulate(&self, params: &ParameterVector, n: usize, rng: &mut SimRng) -> Result<DataSet> {
        self.inner().simulate(params, n, rng)
    }

    fn summarize(&self, data: &DataSet) -> Result<SummaryVector> {
        self.inner().summarize(data)
    }
}

/// The pool `Z_{n,m}` of stored realizations, with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSet {
    pub model: ModelSpec,
    pub n: usize,
    pub seed: SeedSpec,
    pub realizations: Vec<Realization>,
}

impl ReferenceSet {
    pub fn len(&self) -> usize {
        self.realizations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.realizations.is_empty()
    }

    /// The sub-pool made of the given members, in the given order.
    pub fn subset(&self, indices: &[usize]) -> ReferenceSet {
        ReferenceSet {
            model: self.model.clone(),
            n: self.n,
            seed: self.seed,
            realizations: indices.iter().map(|&i| self.realizations[i].clone()).collect(),
        }
    }
}

/// Simulates `m` realizations, each from a fresh prior draw. Realization `i`
/// uses its own derived stream, so the pool does not depend on thread count.
pub fn build_reference_set<M: Model + ?Sized>(
    model: &M,
    m: usize,
    n: usize,
    seed: SeedSpec,
) -> Result<ReferenceSet> {
    if m == 0 {
        return Err(Error::InvalidInput("pool size m must be at least 1".into()));
    }
    if n == 0 {
        return Err(Error::InvalidInput("sample size n must be at least 1".into()));
    }
    let realizations = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.derive(StreamKind::Realization, i as u64).rng();
            let params = model.sample_prior(&mut rng);
            let data = model.simulate(&params, n, &mut rng)?;
            Ok(Realization { params, data })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReferenceSet {
        model: model.spec(),
        n,
        seed,
        realizations,
    })
}
