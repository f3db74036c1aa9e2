//! Rejection ABC and the acceptance machinery shared with [`crate::aabc`].

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Model, ParameterVector, SummaryVector};
use crate::rng::{SeedSpec, StreamKind};

/// Which sampler produced a posterior sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Abc,
    Aabc,
    AabcParamOnly,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Abc, Method::Aabc, Method::AabcParamOnly];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Abc => "abc",
            Method::Aabc => "aabc",
            Method::AabcParamOnly => "aabc_param_only",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Threshold {
    /// Keep proposals with distance strictly below `epsilon`.
    Epsilon { epsilon: f64 },
    /// Keep the `ceil(fraction * proposals)` closest proposals.
    TopPercentile { fraction: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRule {
    #[serde(flatten)]
    pub threshold: Threshold,
    /// Divide each summary component by its standard deviation across the
    /// proposal pool before taking the Euclidean distance.
    #[serde(default)]
    pub standardize: bool,
}

impl AcceptanceRule {
    pub fn epsilon(epsilon: f64) -> Self {
        Self {
            threshold: Threshold::Epsilon { epsilon },
            standardize: false,
        }
    }

    pub fn top_percentile(fraction: f64) -> Self {
        Self {
            threshold: Threshold::TopPercentile { fraction },
            standardize: false,
        }
    }

    pub fn standardized(mut self) -> Self {
        self.standardize = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.threshold {
            Threshold::Epsilon { epsilon } if epsilon.is_nan() || epsilon < 0.0 => Err(
                Error::Config(format!("epsilon must be non-negative, got {epsilon}")),
            ),
            Threshold::TopPercentile { fraction } if !(fraction > 0.0 && fraction <= 1.0) => Err(
                Error::Config(format!("fraction must lie in (0, 1], got {fraction}")),
            ),
            _ => Ok(()),
        }
    }
}

/// `ceil(fraction * total)`, immune to representation error in `fraction`
/// (0.01 * 10^5 must give exactly 10^3).
pub fn top_count(fraction: f64, total: usize) -> usize {
    let exact = fraction * total as f64;
    let rounded = exact.round();
    let count = if (exact - rounded).abs() <= 1e-9 * exact.max(1.0) {
        rounded
    } else {
        exact.ceil()
    };
    (count as usize).clamp(1.min(total), total)
}

/// Euclidean distance, with components optionally divided by `scales`.
pub fn distance(a: &SummaryVector, b: &SummaryVector, scales: Option<&[f64]>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    match scales {
        None => Ok(a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()),
        Some(s) => {
            if s.len() != a.len() {
                return Err(Error::DimensionMismatch {
                    expected: a.len(),
                    found: s.len(),
                });
            }
            if let Some(&bad) = s.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                return Err(Error::NonPositiveScale(bad));
            }
            Ok(a.values()
                .iter()
                .zip(b.values())
                .zip(s)
                .map(|((x, y), w)| ((x - y) / w).powi(2))
                .sum::<f64>()
                .sqrt())
        }
    }
}

/// Indices kept by `rule`, ordered by ascending distance with ties broken by
/// the lower index.
pub fn select_accepted(distances: &[f64], rule: &AcceptanceRule) -> Result<Vec<usize>> {
    if distances.is_empty() {
        return Err(Error::EmptyInput("distances"));
    }
    if distances.iter().any(|d| !d.is_finite()) {
        return Err(Error::NonFinite("distance"));
    }
    rule.validate()?;
    let by_distance = |a: &usize, b: &usize| distances[*a].total_cmp(&distances[*b]).then(a.cmp(b));
    let mut kept: Vec<usize> = match rule.threshold {
        Threshold::Epsilon { epsilon } => (0..distances.len())
            .filter(|&i| distances[i] < epsilon)
            .collect(),
        Threshold::TopPercentile { fraction } => {
            let k = top_count(fraction, distances.len());
            let mut order: Vec<usize> = (0..distances.len()).collect();
            if k < order.len() {
                order.select_nth_unstable_by(k, by_distance);
                order.truncate(k);
            }
            order
        }
    };
    kept.sort_unstable_by(by_distance);
    Ok(kept)
}

/// Per-component sample standard deviation; zero or undefined spreads map to 1.
pub fn summary_scales(summaries: &[SummaryVector]) -> Vec<f64> {
    let Some(first) = summaries.first() else {
        return Vec::new();
    };
    let k = first.len();
    let n = summaries.len() as f64;
    (0..k)
        .map(|j| {
            let mean = summaries.iter().map(|s| s.0[j]).sum::<f64>() / n;
            let var = summaries.iter().map(|s| (s.0[j] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let sd = var.sqrt();
            if sd.is_finite() && sd > 0.0 {
                sd
            } else {
                1.0
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcceptedDraw {
    pub params: ParameterVector,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSample {
    /// Sorted by ascending distance.
    pub accepted: Vec<AcceptedDraw>,
    pub rule: AcceptanceRule,
    pub proposals_total: usize,
    pub method: Method,
    pub seed: SeedSpec,
    /// Number of parameter components (kept for empty samples).
    pub param_dim: usize,
}

impl PosteriorSample {
    pub fn len(&self) -> usize {
        self.accepted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accepted.is_empty()
    }

    /// Accepted values of one parameter component.
    pub fn component(&self, j: usize) -> Vec<f64> {
        self.accepted.iter().map(|d| d.params.0[j]).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# method={}", self.method)?;
        writeln!(out, "# rule={}", serde_json::to_string(&self.rule)?)?;
        writeln!(out, "# proposals_total={}", self.proposals_total)?;
        writeln!(out, "# seed={}", serde_json::to_string(&self.seed)?)?;
        let mut writer = csv::Writer::from_writer(out);
        let header: Vec<String> = (1..=self.param_dim)
            .map(|j| format!("theta_{j}"))
            .chain(std::iter::once("distance".to_string()))
            .collect();
        writer.write_record(&header)?;
        for draw in &self.accepted {
            writer.write_record(
                draw.params
                    .values()
                    .iter()
                    .chain(std::iter::once(&draw.distance))
                    .map(|v| v.to_string()),
            )?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(mut input: R) -> Result<Self> {
        let mut method = None;
        let mut rule = None;
        let mut proposals_total = None;
        let mut seed = None;
        let mut line = String::new();
        let header_line = loop {
            line.clear();
            if input.read_line(&mut line)? == 0 {
                return Err(Error::Format("posterior file has no column header".into()));
            }
            let Some(meta) = line.trim_end().strip_prefix("# ") else {
                break line.clone();
            };
            let (key, value) = meta
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("bad metadata line `{meta}`")))?;
            match key {
                "method" => method = Some(value.parse::<Method>()?),
                "rule" => rule = Some(serde_json::from_str(value)?),
                "proposals_total" => {
                    proposals_total = Some(value.parse::<usize>().map_err(|e| {
                        Error::Format(format!("proposals_total `{value}`: {e}"))
                    })?)
                }
                "seed" => seed = Some(serde_json::from_str(value)?),
                _ => {}
            }
        };
        let missing = |what: &str| Error::Format(format!("posterior file lacks `{what}`"));
        let columns: Vec<&str> = header_line.trim_end().split(',').collect();
        if columns.last() != Some(&"distance") {
            return Err(Error::Format("last column must be `distance`".into()));
        }
        let param_dim = columns.len() - 1;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(input);
        let mut accepted = Vec::new();
        for record in reader.records() {
            let record = record?;
            let values = record
                .iter()
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|e| Error::Format(format!("value `{v}`: {e}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if values.len() != param_dim + 1 {
                return Err(Error::DimensionMismatch {
                    expected: param_dim + 1,
                    found: values.len(),
                });
            }
            accepted.push(AcceptedDraw {
                distance: values[param_dim],
                params: ParameterVector(values[..param_dim].to_vec()),
            });
        }
        Ok(Self {
            accepted,
            rule: rule.ok_or_else(|| missing("rule"))?,
            proposals_total: proposals_total.ok_or_else(|| missing("proposals_total"))?,
            method: method.ok_or_else(|| missing("method"))?,
            seed: seed.ok_or_else(|| missing("seed"))?,
            param_dim,
        })
    }
}

/// Scores proposals against `s_obs` and keeps those the rule accepts.
pub fn accept_proposals(
    proposals: Vec<(ParameterVector, SummaryVector)>,
    s_obs: &SummaryVector,
    rule: &AcceptanceRule,
    method: Method,
    seed: SeedSpec,
    param_dim: usize,
) -> Result<PosteriorSample> {
    rule.validate()?;
    if proposals.is_empty() {
        return Err(Error::EmptyInput("proposals"));
    }
    let scales = rule.standardize.then(|| {
        let summaries: Vec<SummaryVector> = proposals.iter().map(|(_, s)| s.clone()).collect();
        summary_scales(&summaries)
    });
    let distances = proposals
        .iter()
        .map(|(_, s)| distance(s, s_obs, scales.as_deref()))
        .collect::<Result<Vec<f64>>>()?;
    let kept = select_accepted(&distances, rule)?;
    let total = proposals.len();
    let mut slots: Vec<Option<ParameterVector>> = proposals.into_iter().map(|(p, _)| Some(p)).collect();
    let accepted = kept
        .into_iter()
        .map(|i| AcceptedDraw {
            params: slots[i].take().expect("indices are unique"),
            distance: distances[i],
        })
        .collect();
    Ok(PosteriorSample {
        accepted,
        rule: *rule,
        proposals_total: total,
        method,
        seed,
        param_dim,
    })
}

pub(crate) fn check_observed<M: Model + ?Sized>(model: &M, s_obs: &SummaryVector) -> Result<()> {
    if s_obs.len() != model.summary_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.summary_dim(),
            found: s_obs.len(),
        });
    }
    if s_obs.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("observed summary"));
    }
    Ok(())
}

/// Rejection ABC with `proposals` prior draws, each simulated at sample size `n`.
pub fn run_abc<M: Model + ?Sized>(
    model: &M,
    s_obs: &SummaryVector,
    proposals: usize,
    rule: &AcceptanceRule,
    n: usize,
    seed: SeedSpec,
) -> Result<PosteriorSample> {
    check_observed(model, s_obs)?;
    rule.validate()?;
    if proposals == 0 {
        return Err(Error::InvalidInput("number of proposals M must be at least 1".into()));
    }
    let scored = (0..proposals)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.derive(StreamKind::Proposal, i as u64).rng();
            let theta = model.sample_prior(&mut rng);
            let data = model.simulate(&theta, n, &mut rng)?;
            let summary = model.summarize(&data)?;
            Ok((theta, summary))
        })
        .collect::<Result<Vec<_>>>()?;
    accept_proposals(scored, s_obs, rule, Method::Abc, seed, model.param_dim())
}
