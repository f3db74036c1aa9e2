//! Flat CSV tables for plotting: posterior histograms and accuracy series.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use aabc::abc::{Method, PosteriorSample};
use aabc::eval::{AccuracyCell, AccuracyReport};

use crate::commands::{create, finish};
use crate::failure::{CliResult, Context, Failure};

enum Input {
    Posterior(PosteriorSample),
    Report(Vec<AccuracyCell>),
}

fn read_input(path: &Path) -> CliResult<Input> {
    let open = || File::open(path).io_ctx(format!("opening {}", path.display()));
    let mut first = String::new();
    BufReader::new(open()?)
        .read_line(&mut first)
        .io_ctx(format!("reading {}", path.display()))?;
    let ctx = |e: aabc::Error| Failure::from(e).within(path.display());
    if first.starts_with("# ") || first.trim_end().ends_with(",distance") {
        PosteriorSample::read_csv(BufReader::new(open()?)).map(Input::Posterior).map_err(ctx)
    } else if first.starts_with("method,") {
        AccuracyReport::read_cells_csv(open()?).map(Input::Report).map_err(ctx)
    } else {
        Err(Failure::Io(format!(
            "{}: neither a posterior sample nor an accuracy report",
            path.display()
        )))
    }
}

/// Equal-width bin counts over `[min, max]`; a degenerate range is widened by
/// 0.5 on each side.
pub fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    let mut lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = hi - lo;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = (((v - lo) / width) * bins as f64).floor() as usize;
        counts[b.min(bins - 1)] += 1;
    }
    let edge = |b: usize| lo + width * b as f64 / bins as f64;
    counts
        .into_iter()
        .enumerate()
        .map(|(b, c)| (edge(b), if b + 1 == bins { hi } else { edge(b + 1) }, c))
        .collect()
}

fn write_histograms(post: &PosteriorSample, bins: usize, out: impl Write) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Failure::Io(e.to_string());
    w.write_record(["component", "bin", "lower", "upper", "count"]).map_err(err)?;
    for j in 0..post.param_dim {
        for (b, (lower, upper, count)) in histogram(&post.component(j), bins).into_iter().enumerate() {
            w.write_record([
                (j + 1).to_string(),
                (b + 1).to_string(),
                lower.to_string(),
                upper.to_string(),
                count.to_string(),
            ])
            .map_err(err)?;
        }
    }
    w.flush().io_ctx("writing histogram")
}

fn write_series(mut cells: Vec<AccuracyCell>, out: impl Write) -> CliResult<()> {
    let rank = |m: Method| Method::ALL.iter().position(|&x| x == m).unwrap_or(usize::MAX);
    cells.sort_by_key(|c| (rank(c.method), c.component, c.m));
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Failure::Io(e.to_string());
    w.write_record(["method", "component", "m", "rmse", "percent_excess", "n_contributing"])
        .map_err(err)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for c in &cells {
        w.write_record([
            c.method.to_string(),
            (c.component + 1).to_string(),
            c.m.to_string(),
            opt(c.rmse),
            opt(c.percent_excess),
            c.n_contributing.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().io_ctx("writing series")
}

pub fn export(input: &Path, bins: usize, out: &Path) -> CliResult<()> {
    if bins == 0 {
        return Err(Failure::Config("--bins must be at least 1".into()));
    }
    match read_input(input)? {
        Input::Posterior(post) => {
            let path = out.join("histogram.csv");
            let mut w = create(&path)?;
            write_histograms(&post, bins, &mut w)?;
            finish(w, &path)?;
            println!("wrote {} ({} accepted draws, {bins} bins)", path.display(), post.len());
        }
        Input::Report(cells) => {
            let path = out.join("series.csv");
            let mut w = create(&path)?;
            let rows = cells.len();
            write_series(cells, &mut w)?;
            finish(w, &path)?;
            println!("wrote {} ({rows} rows)", path.display());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_counts_everything() {
        let v: Vec<f64> = (0..100).map(|i| i as f64 / 99.0).collect();
        let h = histogram(&v, 10);
        assert_eq!(h.len(), 10);
        assert_eq!(h.iter().map(|b| b.2).sum::<usize>(), 100);
        assert_eq!(h[0].0, 0.0);
        assert_eq!(h[9].1, 1.0);
        assert!(h.iter().all(|b| b.2 == 10));
    }

    #[test]
    fn degenerate_and_empty() {
        let h = histogram(&[2.0, 2.0, 2.0], 4);
        assert_eq!((h[0].0, h[3].1), (1.5, 2.5));
        assert_eq!(h.iter().map(|b| b.2).sum::<usize>(), 3);
        assert!(histogram(&[], 4).is_empty());
    }
}
