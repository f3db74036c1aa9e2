//! On-disk pool format.
//!
//! ```text
//! AABC-POOL <json header>\n
//! <m records, each p + n*d_obs little-endian f64>
//! ```
//!
//! The header carries the format version, the full model specification, the
//! shape `(p, d_obs, n, m)` and the seed the pool was built from.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DataSet, Model, ModelSpec, ParameterVector, Realization, ReferenceSet};
use crate::error::{Error, Result};
use crate::rng::SeedSpec;

const MAGIC: &str = "AABC-POOL";
const FORMAT_VERSION: u32 = 1;
const MAX_HEADER_BYTES: u64 = 64 * 1024;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    model: ModelSpec,
    p: usize,
    d_obs: usize,
    n: usize,
    m: usize,
    seed: SeedSpec,
}

pub fn save_reference_set(set: &ReferenceSet, path: impl AsRef<Path>) -> Result<()> {
    let header = Header {
        format_version: FORMAT_VERSION,
        model: set.model.clone(),
        p: set.model.param_dim(),
        d_obs: set.model.obs_dim(),
        n: set.n,
        m: set.len(),
        seed: set.seed,
    };
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{MAGIC} {}", serde_json::to_string(&header)?)?;
    for r in &set.realizations {
        if r.params.len() != header.p || r.data.len() != header.n || r.data.dim() != header.d_obs {
            return Err(Error::Format(
                "realization shape disagrees with the pool header".into(),
            ));
        }
        for v in r.params.values().iter().chain(r.data.as_flat()) {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn load_reference_set(path: impl AsRef<Path>) -> Result<ReferenceSet> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut line = Vec::new();
    (&mut reader)
        .take(MAX_HEADER_BYTES)
        .read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return Err(Error::Format("missing or oversized header line".into()));
    }
    let line = std::str::from_utf8(&line[..line.len() - 1])
        .map_err(|_| Error::Format("header is not UTF-8".into()))?;
    let json = line
        .strip_prefix(MAGIC)
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| Error::Format(format!("expected `{MAGIC}` magic")))?;

    let raw: serde_json::Value = serde_json::from_str(json)?;
    let id = raw
        .get("model")
        .and_then(|m| m.get("id"))
        .and_then(|id| id.as_str())
        .ok_or_else(|| Error::Format("header has no model id".into()))?;
    if !ModelSpec::KNOWN_IDS.contains(&id) {
        return Err(Error::UnknownModel(id.to_string()));
    }
    let header: Header = serde_json::from_value(raw)?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format version {}",
            header.format_version
        )));
    }
    header.model.validate()?;
    let (p, d) = (header.model.param_dim(), header.model.obs_dim());
    if header.p != p || header.d_obs != d {
        return Err(Error::ModelMismatch(format!(
            "header shape (p={}, d_obs={}) but model `{}` has (p={p}, d_obs={d})",
            header.p,
            header.d_obs,
            header.model.id()
        )));
    }

    let mut payload = Vec::new();
    reader.read_to_end(&mut payload)?;
    let record_len = (p + header.n * d) * 8;
    if payload.len() % record_len != 0 {
        return Err(Error::Format(format!(
            "payload of {} bytes is not a whole number of {record_len}-byte records",
            payload.len()
        )));
    }
    let rows = payload.len() / record_len;
    if rows != header.m {
        return Err(Error::RowCount {
            expected: header.m,
            found: rows,
        });
    }

    let realizations = payload
        .chunks_exact(record_len)
        .map(|rec| {
            let mut values = rec
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")));
            let params: Vec<f64> = values.by_ref().take(p).collect();
            let data = DataSet::from_flat(d, values.collect())?;
            Ok(Realization {
                params: ParameterVector(params),
                data,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ReferenceSet {
        model: header.model,
        n: header.n,
        seed: header.seed,
        realizations,
    })
}

/// Loads a pool and rejects it unless it was built for exactly `expected`.
pub fn load_reference_set_for(path: impl AsRef<Path>, expected: &ModelSpec) -> Result<ReferenceSet> {
    let set = load_reference_set(path)?;
    if &set.model != expected {
        return Err(Error::ModelMismatch(format!(
            "pool built for {:?}, requested {:?}",
            set.model, expected
        )));
    }
    Ok(set)
}

/// Text export: `theta_1..theta_p` followed by the flattened observations.
pub fn export_csv<W: Write>(set: &ReferenceSet, out: W) -> Result<()> {
    let p = set.model.param_dim();
    let width = set.n * set.model.obs_dim();
    let mut writer = csv::Writer::from_writer(out);
    let header: Vec<String> = (1..=p)
        .map(|j| format!("theta_{j}"))
        .chain((1..=width).map(|j| format!("x_{j}")))
        .collect();
    writer.write_record(&header)?;
    for r in &set.realizations {
        writer.write_record(
            r.params
                .values()
                .iter()
                .chain(r.data.as_flat())
                .map(|v| v.to_string()),
        )?;
    }
    writer.flush()?;
    Ok(())
}

/// Observed data: one observation per row, `dim` columns. A first row that
/// does not parse as numbers is taken as a header.
pub fn read_observed_csv<R: Read>(input: R, dim: usize) -> Result<DataSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if i == 0 => continue,
            Err(e) => {
                return Err(Error::Format(format!("observed row {}: {e}", i + 1)));
            }
        };
        if row.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: row.len(),
            });
        }
        values.extend(row);
    }
    if values.is_empty() {
        return Err(Error::EmptyInput("observed data"));
    }
    let data = DataSet::from_flat(dim, values)?;
    data.ensure_finite()?;
    Ok(data)
}

/// Writes `x_1..x_dim` then one row per observation.
pub fn write_observed_csv<W: Write>(data: &DataSet, out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record((1..=data.dim()).map(|j| format!("x_{j}")))?;
    for row in data.observations() {
        writer.write_record(row.iter().map(|v| v.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}
