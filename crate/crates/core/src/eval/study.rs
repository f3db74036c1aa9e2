//! Replicate test-set accuracy study.
//!
//! A reference set of `M` realizations is built once. Test pairs are drawn from
//! it without replacement; for every test pair and every pool size `m` a fresh
//! pool of `m` distinct reference indices is drawn (all of them when `m == M`)
//! and each requested method is run against the test summaries.
//!
//! - `abc` treats the pool realizations as its proposals, leaving out the test
//!   pair itself.
//! - `aabc` and `aabc_param_only` draw `proposals` prior values and match them
//!   against the pool.
//!
//! The ABC baseline for the percent excess is ABC over the whole reference set.

use std::io::Write;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{percent_excess, rmse, rsse, sample_variance};
use crate::aabc::{run_aabc_indexed, run_aabc_param_only_indexed, AabcOptions, MatchIndex};
use crate::abc::{accept_proposals, distance, summary_scales, top_count, AcceptanceRule, Method, PosteriorSample};
use crate::error::{Error, Result};
use crate::model::{build_reference_set, Model, ModelSpec, ReferenceSet, SummaryVector};
use crate::rng::{SeedSpec, StreamKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(rename = "M_reference", alias = "reference_size")]
    pub reference_size: usize,
    pub n_test_sets: usize,
    pub m_grid: Vec<usize>,
    pub acceptance: AcceptanceRule,
    pub methods: Vec<Method>,
    /// Prior draws per AABC run; defaults to `M_reference`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proposals: Option<usize>,
    /// When set, every test set gets a fixed `epsilon` equal to the distance
    /// that accepts this fraction of the reference set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_calibration: Option<f64>,
    /// Divide parameter differences by the prior widths when matching.
    #[serde(default)]
    pub scale_params: bool,
}

impl StudyConfig {
    pub fn proposals(&self) -> usize {
        self.proposals.unwrap_or(self.reference_size)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.reference_size == 0 {
            return bad("M_reference must be at least 1".into());
        }
        if self.n_test_sets == 0 || self.n_test_sets > self.reference_size {
            return bad(format!(
                "n_test_sets must be in 1..={} (got {})",
                self.reference_size, self.n_test_sets
            ));
        }
        if self.m_grid.is_empty() {
            return bad("m_grid is empty".into());
        }
        if let Some(&m) = self.m_grid.iter().find(|&&m| m == 0 || m > self.reference_size) {
            return bad(format!("pool size {m} outside 1..={}", self.reference_size));
        }
        if self.methods.is_empty() {
            return bad("no methods requested".into());
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return bad(format!("method `{m}` listed twice"));
            }
        }
        if self.proposals() == 0 {
            return bad("proposals must be at least 1".into());
        }
        if let Some(q) = self.epsilon_calibration {
            if !(q > 0.0 && q <= 1.0) {
                return bad(format!("epsilon_calibration {q} outside (0, 1]"));
            }
        }
        self.acceptance.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyCell {
    pub method: Method,
    pub m: usize,
    /// Zero-based parameter index.
    pub component: usize,
    pub rmse: Option<f64>,
    /// Test sets with a defined RSSE.
    pub n_contributing: usize,
    /// Non-empty posteriors whose RSSE is undefined (fewer than two values or
    /// zero variance).
    pub n_excluded: usize,
    /// Test sets with an empty posterior.
    pub n_inadequate: usize,
    pub percent_excess: Option<f64>,
    pub mean_accepted: f64,
    pub median_accepted: f64,
    /// Mean over test sets of the accepted-value sample variance.
    pub mean_posterior_variance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub model: ModelSpec,
    pub config: StudyConfig,
    pub seed: SeedSpec,
    pub test_indices: Vec<usize>,
    /// ABC RMSE over the whole reference set, per component.
    pub abc_baseline: Option<Vec<Option<f64>>>,
    pub cells: Vec<AccuracyCell>,
}

const CSV_COLUMNS: [&str; 11] = [
    "method",
    "m",
    "component",
    "rmse",
    "n_contributing",
    "percent_excess",
    "n_excluded",
    "n_inadequate",
    "mean_accepted",
    "median_accepted",
    "mean_posterior_variance",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl AccuracyReport {
    pub fn cell(&self, method: Method, m: usize, component: usize) -> Option<&AccuracyCell> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.m == m && c.component == component)
    }

    /// Components are written one-based.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_COLUMNS)?;
        for c in &self.cells {
            w.write_record([
                c.method.to_string(),
                c.m.to_string(),
                (c.component + 1).to_string(),
                opt(c.rmse),
                c.n_contributing.to_string(),
                opt(c.percent_excess),
                c.n_excluded.to_string(),
                c.n_inadequate.to_string(),
                c.mean_accepted.to_string(),
                c.median_accepted.to_string(),
                opt(c.mean_posterior_variance),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the rows written by [`AccuracyReport::write_csv`].
    pub fn read_cells_csv<R: std::io::Read>(input: R) -> Result<Vec<AccuracyCell>> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        if headers.iter().ne(CSV_COLUMNS) {
            return Err(Error::Format("not an accuracy report".into()));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::Format(format!("number `{s}`: {e}")))
        };
        let int = |s: &str| -> Result<usize> {
            s.parse::<usize>()
                .map_err(|e| Error::Format(format!("count `{s}`: {e}")))
        };
        let maybe = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                num(s).map(Some)
            }
        };
        let mut cells = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let component = int(&rec[2])?;
            if component == 0 {
                return Err(Error::Format("components are one-based".into()));
            }
            cells.push(AccuracyCell {
                method: rec[0].parse()?,
                m: int(&rec[1])?,
                component: component - 1,
                rmse: maybe(&rec[3])?,
                n_contributing: int(&rec[4])?,
                percent_excess: maybe(&rec[5])?,
                n_excluded: int(&rec[6])?,
                n_inadequate: int(&rec[7])?,
                mean_accepted: num(&rec[8])?,
                median_accepted: num(&rec[9])?,
                mean_posterior_variance: maybe(&rec[10])?,
            });
        }
        Ok(cells)
    }
}

/// `m` distinct reference indices in ascending order; all of them when `m == total`.
pub fn pool_indices(total: usize, m: usize, seed: SeedSpec) -> Result<Vec<usize>> {
    if m == 0 || m > total {
        return Err(Error::InvalidInput(format!("pool size {m} outside 1..={total}")));
    }
    if m == total {
        return Ok((0..total).collect());
    }
    let mut idx = sample(&mut seed.rng(), total, m).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// Per-test outcome of one method at one pool size.
#[derive(Debug, Clone)]
struct Outcome {
    accepted: usize,
    rsse: Vec<Option<f64>>,
    variance: Vec<Option<f64>>,
}

impl Outcome {
    fn from_posterior(post: &PosteriorSample, truth: &[f64]) -> Self {
        let (rsse, variance) = (0..truth.len())
            .map(|j| {
                let values = post.component(j);
                (rsse(&values, truth[j]).ok(), sample_variance(&values).ok())
            })
            .unzip();
        Self {
            accepted: post.len(),
            rsse,
            variance,
        }
    }
}

struct TestOutcome {
    /// Indexed `[method][m]`.
    cells: Vec<Vec<Outcome>>,
    baseline: Option<Outcome>,
}

struct StudyContext<'a, M: Model + ?Sized> {
    model: &'a M,
    config: &'a StudyConfig,
    reference: &'a ReferenceSet,
    summaries: &'a [SummaryVector],
    param_scales: Option<Vec<f64>>,
}

impl<M: Model + ?Sized> StudyContext<'_, M> {
    fn rule_for(&self, s_obs: &SummaryVector, skip: usize) -> Result<AcceptanceRule> {
        let Some(q) = self.config.epsilon_calibration else {
            return Ok(self.config.acceptance);
        };
        let scales = self
            .config
            .acceptance
            .standardize
            .then(|| summary_scales(self.summaries));
        let mut d = self
            .summaries
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != skip)
            .map(|(_, s)| distance(s, s_obs, scales.as_deref()))
            .collect::<Result<Vec<f64>>>()?;
        if d.is_empty() {
            return Err(Error::InvalidInput(
                "epsilon calibration needs at least two reference realizations".into(),
            ));
        }
        d.sort_by(f64::total_cmp);
        let k = top_count(q, d.len());
        // Halfway to the next distance, so that exactly `k` reference
        // realizations fall strictly inside.
        let eps = match d.get(k) {
            Some(&next) if next > d[k - 1] => 0.5 * (d[k - 1] + next),
            _ => d[k - 1] + f64::EPSILON * d[k - 1].abs().max(1.0),
        };
        Ok(AcceptanceRule {
            threshold: crate::abc::Threshold::Epsilon { epsilon: eps },
            standardize: self.config.acceptance.standardize,
        })
    }

    fn abc_on(&self, pool: &[usize], test: usize, s_obs: &SummaryVector, rule: &AcceptanceRule, seed: SeedSpec) -> Result<Option<PosteriorSample>> {
        let proposals: Vec<_> = pool
            .iter()
            .filter(|&&j| j != test)
            .map(|&j| (self.reference.realizations[j].params.clone(), self.summaries[j].clone()))
            .collect();
        if proposals.is_empty() {
            return Ok(None);
        }
        accept_proposals(proposals, s_obs, rule, Method::Abc, seed, self.model.param_dim()).map(Some)
    }

    fn run_test(&self, t: usize, test: usize, seed: SeedSpec) -> Result<TestOutcome> {
        let test_seed = seed.derive(StreamKind::TestSet, t as u64);
        // Shared by every method and pool size of this test set.
        let proposal_seed = test_seed.derive(StreamKind::Proposal, 0);
        let s_obs = &self.summaries[test];
        let truth = self.reference.realizations[test].params.values();
        let rule = self.rule_for(s_obs, test)?;
        let big_m = self.reference.len();
        let empty = || Outcome {
            accepted: 0,
            rsse: vec![None; truth.len()],
            variance: vec![None; truth.len()],
        };

        let mut cells: Vec<Vec<Outcome>> = vec![Vec::new(); self.config.methods.len()];
        for (k, &m) in self.config.m_grid.iter().enumerate() {
            let pool = pool_indices(big_m, m, test_seed.derive(StreamKind::PoolSubsample, k as u64))?;
            let needs_index = self.config.methods.iter().any(|&me| me != Method::Abc);
            let index = if needs_index {
                Some(MatchIndex::new(
                    pool.iter().map(|&j| &self.reference.realizations[j]),
                    self.param_scales.as_deref(),
                )?)
            } else {
                None
            };
            for (mi, &method) in self.config.methods.iter().enumerate() {
                let post = match method {
                    Method::Abc => self.abc_on(&pool, test, s_obs, &rule, proposal_seed)?,
                    Method::Aabc => Some(run_aabc_indexed(
                        self.model,
                        s_obs,
                        index.as_ref().expect("built for AABC"),
                        self.config.proposals(),
                        &rule,
                        proposal_seed,
                    )?),
                    Method::AabcParamOnly => Some(run_aabc_param_only_indexed(
                        self.model,
                        s_obs,
                        index.as_ref().expect("built for AABC"),
                        self.config.proposals(),
                        &rule,
                        self.reference.n,
                        proposal_seed,
                    )?),
                };
                cells[mi].push(match post {
                    Some(p) => Outcome::from_posterior(&p, truth),
                    None => empty(),
                });
            }
        }

        let baseline = if let Some(mi) = self.config.methods.iter().position(|&m| m == Method::Abc) {
            match self.config.m_grid.iter().position(|&m| m == big_m) {
                Some(k) => Some(cells[mi][k].clone()),
                None => {
                    let all: Vec<usize> = (0..big_m).collect();
                    Some(
                        self.abc_on(&all, test, s_obs, &rule, proposal_seed)?
                            .map(|p| Outcome::from_posterior(&p, truth))
                            .unwrap_or_else(empty),
                    )
                }
            }
        } else {
            None
        };
        Ok(TestOutcome { cells, baseline })
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Runs the study; `seed` fixes the reference set, the test selection, every
/// pool and every proposal stream.
pub fn run_study<M: Model + ?Sized>(model: &M, config: &StudyConfig, seed: SeedSpec) -> Result<AccuracyReport> {
    config.validate()?;
    let big_m = config.reference_size;
    let n = model.sample_size();
    let reference = build_reference_set(model, big_m, n, seed.derive(StreamKind::Pool, 0))?;
    let summaries = reference
        .realizations
        .par_iter()
        .map(|r| model.summarize(&r.data))
        .collect::<Result<Vec<_>>>()?;
    let test_indices = sample(
        &mut seed.derive(StreamKind::TestSelection, 0).rng(),
        big_m,
        config.n_test_sets,
    )
    .into_vec();

    let ctx = StudyContext {
        model,
        config,
        reference: &reference,
        summaries: &summaries,
        param_scales: config
            .scale_params
            .then(|| AabcOptions::scaled_by_prior(model).param_scales)
            .flatten(),
    };
    let outcomes = test_indices
        .par_iter()
        .enumerate()
        .map(|(t, &test)| ctx.run_test(t, test, seed))
        .collect::<Result<Vec<_>>>()?;

    let p = model.param_dim();
    let baseline: Option<Vec<Option<f64>>> = config.methods.contains(&Method::Abc).then(|| {
        (0..p)
            .map(|j| {
                let values: Vec<Option<f64>> = outcomes
                    .iter()
                    .map(|o| o.baseline.as_ref().expect("ABC requested").rsse[j])
                    .collect();
                rmse(&values).ok().map(|s| s.rmse)
            })
            .collect()
    });

    let mut cells = Vec::new();
    for (mi, &method) in config.methods.iter().enumerate() {
        for (k, &m) in config.m_grid.iter().enumerate() {
            let per_test: Vec<&Outcome> = outcomes.iter().map(|o| &o.cells[mi][k]).collect();
            let mut counts: Vec<f64> = per_test.iter().map(|o| o.accepted as f64).collect();
            let mean_accepted = counts.iter().sum::<f64>() / counts.len() as f64;
            let median_accepted = median(&mut counts);
            let n_inadequate = per_test.iter().filter(|o| o.accepted == 0).count();
            for j in 0..p {
                let values: Vec<Option<f64>> = per_test.iter().map(|o| o.rsse[j]).collect();
                let summary = rmse(&values).ok();
                let rmse_value = summary.map(|s| s.rmse);
                let n_contributing = summary.map_or(0, |s| s.n_contributing);
                let variances: Vec<f64> = per_test.iter().filter_map(|o| o.variance[j]).collect();
                let percent = match (&baseline, rmse_value) {
                    (Some(b), Some(r)) => b[j].and_then(|b| percent_excess(r, b).ok()),
                    _ => None,
                };
                cells.push(AccuracyCell {
                    method,
                    m,
                    component: j,
                    rmse: rmse_value,
                    n_contributing,
                    n_excluded: per_test.len() - n_contributing - n_inadequate,
                    n_inadequate,
                    percent_excess: percent,
                    mean_accepted,
                    median_accepted,
                    mean_posterior_variance: (!variances.is_empty())
                        .then(|| variances.iter().sum::<f64>() / variances.len() as f64),
                });
            }
        }
    }

    Ok(AccuracyReport {
        model: model.spec(),
        config: config.clone(),
        seed,
        test_indices,
        abc_baseline: baseline,
        cells,
    })
}
