use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use aabc::aabc::{run_aabc_with, run_aabc_param_only_with, AabcOptions};
use aabc::abc::{run_abc, Method, PosteriorSample, Threshold};
use aabc::eval::{run_study, AccuracyReport};
use aabc::model::{
    build_reference_set, export_csv, load_reference_set_for, read_observed_csv, save_reference_set,
    write_observed_csv, DataSet, Model, ParameterVector, ReferenceSet,
};
use aabc::rng::{SeedSpec, StreamKind};
use serde::Serialize;

use crate::config::{require, RunConfig};
use crate::failure::{CliResult, Context, Failure};

pub(crate) fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .io_ctx(format!("creating {}", path.display()))
}

pub(crate) fn finish(mut w: BufWriter<File>, path: &Path) -> CliResult<()> {
    w.flush().io_ctx(format!("writing {}", path.display()))
}

#[derive(Serialize)]
struct Manifest<'a, R: Serialize> {
    command: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    outputs: Vec<&'static str>,
    #[serde(flatten)]
    result: R,
}

fn write_manifest<R: Serialize>(
    out: &Path,
    command: &'static str,
    config: &RunConfig,
    outputs: Vec<&'static str>,
    result: R,
) -> CliResult<()> {
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config,
        outputs,
        result,
    };
    let path = out.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Other(e.to_string()))?;
    text.push('\n');
    std::fs::write(&path, text).io_ctx(format!("writing {}", path.display()))
}

/// Pool of size `m` at sample size `n`, from the run's pool stream.
fn build_pool_for(config: &RunConfig, m: usize, n: usize, root: SeedSpec) -> CliResult<ReferenceSet> {
    build_reference_set(&config.model, m, n, root.derive(StreamKind::Pool, 0))
        .map_err(|e| Failure::from(e).within("building pool"))
}

pub fn build_pool(config: &RunConfig, out: &Path) -> CliResult<()> {
    let seed = config.seed()?;
    let m = require(&config.m, "m", "build-pool")?;
    let n = config.sample_size();
    let started = Instant::now();
    let pool = build_pool_for(config, m, n, SeedSpec::new(seed))?;
    let bin = out.join("pool.bin");
    save_reference_set(&pool, &bin).map_err(|e| Failure::from(e).within(bin.display()))?;
    let mut outputs = vec!["pool.bin"];
    if config.export_csv {
        let path = out.join("pool.csv");
        let mut w = create(&path)?;
        export_csv(&pool, &mut w).map_err(|e| Failure::from(e).within(path.display()))?;
        finish(w, &path)?;
        outputs.push("pool.csv");
    }
    #[derive(Serialize)]
    struct Built {
        m: usize,
        n: usize,
        pool_seed: SeedSpec,
    }
    write_manifest(out, "build-pool", config, outputs, Built { m, n, pool_seed: pool.seed })?;
    println!(
        "built pool of m={m} realizations at n={n} ({}) in {:.2}s",
        config.model.id(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

fn observed_data(config: &RunConfig, root: SeedSpec) -> CliResult<(DataSet, Option<ParameterVector>)> {
    match (&config.observed, &config.truth) {
        (Some(path), None) => {
            let f = File::open(path).io_ctx(format!("opening {}", path.display()))?;
            let data = read_observed_csv(f, config.model.obs_dim())
                .map_err(|e| Failure::from(e).within(path.display()))?;
            Ok((data, None))
        }
        (None, Some(truth)) => {
            let theta = ParameterVector(truth.params.clone());
            config
                .model
                .check_params(&theta)
                .map_err(|e| Failure::from(e).within("truth"))?;
            let mut rng = root.derive(StreamKind::Observed, 0).rng();
            let data = config
                .model
                .simulate(&theta, config.sample_size(), &mut rng)
                .map_err(|e| Failure::from(e).within("simulating observed data"))?;
            Ok((data, Some(theta)))
        }
        _ => Err(Failure::Config(
            "exactly one of `observed` and `truth` must be given".into(),
        )),
    }
}

pub fn infer(config: &RunConfig, out: &Path) -> CliResult<()> {
    let seed = config.seed()?;
    let method = require(&config.method, "method", "infer")?;
    let proposals = require(&config.proposals, "M", "infer")?;
    let rule = require(&config.acceptance, "acceptance", "infer")?;
    let root = SeedSpec::new(seed);
    let model = &config.model;
    let (data, truth) = observed_data(config, root)?;
    let n = data.len();
    let s_obs = model.summarize(&data).map_err(|e| Failure::from(e).within("observed summary"))?;
    let method_seed = root.derive(StreamKind::Method, 0);
    let started = Instant::now();
    let posterior: PosteriorSample = if method == Method::Abc {
        if config.pool.is_some() || config.m.is_some() {
            return Err(Failure::Config("`pool` and `m` apply only to the AABC methods".into()));
        }
        run_abc(model, &s_obs, proposals, &rule, n, method_seed)?
    } else {
        let pool = match (&config.pool, config.m) {
            (Some(path), None) => load_reference_set_for(path, model)
                .map_err(|e| Failure::from(e).within(path.display()))?,
            (None, Some(m)) => build_pool_for(config, m, n, root)?,
            _ => {
                return Err(Failure::Config(format!(
                    "{method} needs exactly one of `pool` and `m`"
                )))
            }
        };
        if pool.n != n {
            return Err(Failure::Config(format!(
                "pool data sets have n={} but the observed data set has n={n}",
                pool.n
            )));
        }
        let options = if config.scale_params {
            AabcOptions::scaled_by_prior(model)
        } else {
            AabcOptions::default()
        };
        if method == Method::Aabc {
            run_aabc_with(model, &s_obs, &pool, proposals, &rule, method_seed, &options)?
        } else {
            run_aabc_param_only_with(model, &s_obs, &pool, proposals, &rule, n, method_seed, &options)?
        }
    };

    let path = out.join("posterior.csv");
    let mut w = create(&path)?;
    posterior.write_csv(&mut w).map_err(|e| Failure::from(e).within(path.display()))?;
    finish(w, &path)?;
    let mut outputs = vec!["posterior.csv"];
    if truth.is_some() {
        let path = out.join("observed.csv");
        let mut w = create(&path)?;
        write_observed_csv(&data, &mut w).map_err(|e| Failure::from(e).within(path.display()))?;
        finish(w, &path)?;
        outputs.push("observed.csv");
    }
    #[derive(Serialize)]
    struct Inferred {
        n: usize,
        accepted: usize,
        proposals_total: usize,
        observed_summary: Vec<f64>,
        posterior_mean: Vec<Option<f64>>,
    }
    let posterior_mean = (0..posterior.param_dim)
        .map(|j| {
            let v = posterior.component(j);
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        })
        .collect();
    write_manifest(
        out,
        "infer",
        config,
        outputs,
        Inferred {
            n,
            accepted: posterior.len(),
            proposals_total: posterior.proposals_total,
            observed_summary: s_obs.0.clone(),
            posterior_mean,
        },
    )?;
    println!(
        "{method}: accepted {} of {proposals} proposals in {:.2}s",
        posterior.len(),
        started.elapsed().as_secs_f64()
    );
    if posterior.is_empty() && matches!(rule.threshold, Threshold::Epsilon { .. }) {
        return Err(Failure::EmptyPosterior(
            "no proposal fell within epsilon; outputs were written".into(),
        ));
    }
    Ok(())
}

pub fn study(config: &RunConfig, out: &Path) -> CliResult<()> {
    let seed = config.seed()?;
    let study = require(&config.study, "study", "study")?;
    let started = Instant::now();
    let report: AccuracyReport = run_study(&config.model, &study, SeedSpec::new(seed))?;
    let path = out.join("report.csv");
    let mut w = create(&path)?;
    report.write_csv(&mut w).map_err(|e| Failure::from(e).within(path.display()))?;
    finish(w, &path)?;
    #[derive(Serialize)]
    struct Studied<'a> {
        report: &'a AccuracyReport,
    }
    write_manifest(out, "study", config, vec!["report.csv"], Studied { report: &report })?;
    println!(
        "study: {} cells over {} test sets in {:.2}s",
        report.cells.len(),
        report.test_indices.len(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}
