//! Dataset loaders and bit-stable CSV output.
//!
//! All CSV files use a header row, '.' decimals, '\n' line endings, and
//! shortest-round-trip float formatting, so identical runs produce
//! byte-identical files on every platform. Data files are plain text; blank
//! lines and `#` comments are skipped.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::bdm::ClusterData;
use crate::diagnostics::{EssReport, Trace, TuningRow, TuningTable};
use crate::sir::EpidemicData;
use crate::{Error, Result};

fn data_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim().to_string()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect())
}

/// Load removal times (one nonnegative real per line) and validate them
/// against the population size given on the command line.
pub fn load_removal_times(path: impl AsRef<Path>, population_size: usize) -> Result<EpidemicData> {
    let path = path.as_ref();
    let mut times = Vec::new();
    for (line, text) in data_lines(path)? {
        let t: f64 = text.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("expected a removal time, got '{text}'"),
        })?;
        if !t.is_finite() || t < 0.0 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("removal time must be nonnegative and finite, got {t}"),
            });
        }
        times.push(t);
    }
    EpidemicData::new(times, population_size)
}

/// Load genotype cluster data from `size,count` lines.
pub fn load_clusters(path: impl AsRef<Path>) -> Result<ClusterData> {
    let path = path.as_ref();
    let mut clusters = Vec::new();
    for (line, text) in data_lines(path)? {
        let err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let (size, count) = text
            .split_once(',')
            .ok_or_else(|| err(format!("expected 'size,count', got '{text}'")))?;
        let size: u32 = size
            .trim()
            .parse()
            .map_err(|_| err(format!("bad cluster size '{size}'")))?;
        let count: u32 = count
            .trim()
            .parse()
            .map_err(|_| err(format!("bad cluster count '{count}'")))?;
        clusters.push((size, count));
    }
    ClusterData::new(clusters)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const TUNING_HEADER: &str =
    "k,acceptance,acceptance_se,mean_moved,normalized_efficiency,theoretical_efficiency";

/// Write a tuning table; columns as in [`TUNING_HEADER`].
pub fn write_tuning_csv(table: &TuningTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str(TUNING_HEADER);
    out.push('\n');
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.k,
            r.acceptance,
            r.acceptance_se,
            r.mean_moved,
            fmt_opt(r.normalized_efficiency),
            fmt_opt(r.theoretical_efficiency),
        );
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Read a tuning table written by [`write_tuning_csv`].
pub fn read_tuning_csv(path: impl AsRef<Path>) -> Result<TuningTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != TUNING_HEADER {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: 1,
                    msg: format!("unexpected header '{line}'"),
                });
            }
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(err(format!("expected 6 fields, got {}", fields.len())));
        }
        let parse =
            |s: &str| -> Result<f64> { s.parse().map_err(|_| err(format!("bad number '{s}'"))) };
        let parse_opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                parse(s).map(Some)
            }
        };
        rows.push(TuningRow {
            k: fields[0]
                .parse()
                .map_err(|_| err(format!("bad k '{}'", fields[0])))?,
            acceptance: parse(fields[1])?,
            acceptance_se: parse(fields[2])?,
            mean_moved: parse(fields[3])?,
            normalized_efficiency: parse_opt(fields[4])?,
            theoretical_efficiency: parse_opt(fields[5])?,
        });
    }
    Ok(TuningTable { rows })
}

/// Write traces side by side: `iteration,<label>,...`; traces must have equal length.
pub fn write_trace_csv(traces: &[&Trace], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if traces.is_empty() {
        return Err(Error::invalid("write_trace_csv needs at least one trace"));
    }
    let n = traces[0].len();
    if traces.iter().any(|t| t.len() != n) {
        return Err(Error::invalid("write_trace_csv needs equal-length traces"));
    }
    let mut out = String::from("iteration");
    for t in traces {
        out.push(',');
        out.push_str(&t.label);
    }
    out.push('\n');
    for i in 0..n {
        let _ = write!(out, "{i}");
        for t in traces {
            let _ = write!(out, ",{}", t.values[i]);
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Write ESS reports: `label,n,iact,ess`.
pub fn write_ess_csv(reports: &[(String, EssReport)], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("label,n,iact,ess\n");
    for (label, r) in reports {
        let _ = writeln!(out, "{label},{},{},{}", r.n, r.iact, r.ess);
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Write the theoretical efficiency curve: `acceptance,normalized_efficiency`.
pub fn write_theory_curve_csv(points: &[(f64, f64)], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("acceptance,normalized_efficiency\n");
    for (a, e) in points {
        let _ = writeln!(out, "{a},{e}");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
