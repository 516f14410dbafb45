//! Chain diagnostics: acceptance/efficiency tuning tables and effective
//! sample size via Geyer's initial positive sequence.

use crate::{Error, Result};

/// A scalar chain trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub values: Vec<f64>,
    pub label: String,
}

impl Trace {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Self {
        Trace {
            values,
            label: label.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Effective sample size report: `ess = n / iact`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EssReport {
    pub ess: f64,
    /// Integrated autocorrelation time, clipped below at 1.
    pub iact: f64,
    pub n: usize,
}

/// Effective sample size by Geyer's initial-positive-sequence truncation:
/// `iact = 1 + 2 sum rho_t`, the sum stopped at the first non-positive
/// even-lag pair `rho_{2m} + rho_{2m+1}`, and clipped below at 1.
pub fn effective_sample_size(trace: &Trace) -> Result<EssReport> {
    let n = trace.len();
    if n < 100 {
        return Err(Error::invalid(format!(
            "effective_sample_size needs at least 100 points, got {n}"
        )));
    }
    if trace.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "trace '{}' contains non-finite values",
            trace.label
        )));
    }
    let xs = &trace.values;
    let m = xs.iter().sum::<f64>() / n as f64;
    let c0 = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
    if c0 == 0.0 {
        return Err(Error::ZeroVariance(trace.label.clone()));
    }

    let acov = |lag: usize| -> f64 {
        let mut s = 0.0;
        for i in 0..n - lag {
            s += (xs[i] - m) * (xs[i + lag] - m);
        }
        s / n as f64
    };

    // Geyer pairs Gamma_m = rho_{2m} + rho_{2m+1}, starting at Gamma_0 = 1 + rho_1.
    let mut sum_pairs = 0.0;
    let mut lag = 0usize;
    while lag + 1 < n {
        let pair = (acov(lag) + acov(lag + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        sum_pairs += pair;
        lag += 2;
    }
    let iact = (2.0 * sum_pairs - 1.0).max(1.0);
    Ok(EssReport {
        ess: n as f64 / iact,
        iact,
        n,
    })
}

/// One row of a block-size tuning table.
///
/// `normalized_efficiency` (mean components moved divided by the grid
/// maximum) is filled by [`tuning_summary`]; `theoretical_efficiency` by
/// the product-experiment comparison. Both stay `None` until then.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningRow {
    pub k: usize,
    pub acceptance: f64,
    pub acceptance_se: f64,
    pub mean_moved: f64,
    pub normalized_efficiency: Option<f64>,
    pub theoretical_efficiency: Option<f64>,
}

impl TuningRow {
    pub fn new(k: usize, acceptance: f64, acceptance_se: f64) -> Self {
        TuningRow {
            k,
            acceptance,
            acceptance_se,
            mean_moved: k as f64 * acceptance,
            normalized_efficiency: None,
            theoretical_efficiency: None,
        }
    }
}

/// A tuning table sorted by k, normalized by its best row.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningTable {
    pub rows: Vec<TuningRow>,
}

impl TuningTable {
    /// The k with maximal mean components moved.
    pub fn argmax_k(&self) -> usize {
        self.rows
            .iter()
            .max_by(|a, b| a.mean_moved.total_cmp(&b.mean_moved))
            .expect("non-empty table")
            .k
    }

    pub fn max_mean_moved(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.mean_moved)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Row whose acceptance is closest to `target`.
    pub fn row_nearest_acceptance(&self, target: f64) -> &TuningRow {
        self.rows
            .iter()
            .min_by(|a, b| {
                (a.acceptance - target)
                    .abs()
                    .total_cmp(&(b.acceptance - target).abs())
            })
            .expect("non-empty table")
    }
}

/// Sort rows by k and fill `normalized_efficiency = mean_moved / max`.
pub fn tuning_summary(mut rows: Vec<TuningRow>) -> Result<TuningTable> {
    if rows.is_empty() {
        return Err(Error::invalid("tuning_summary needs at least one row"));
    }
    rows.sort_by_key(|r| r.k);
    let max = rows
        .iter()
        .map(|r| r.mean_moved)
        .fold(f64::NEG_INFINITY, f64::max);
    if max <= 0.0 {
        return Err(Error::invalid(
            "tuning_summary: all rows have zero mean components moved",
        ));
    }
    for r in &mut rows {
        r.normalized_efficiency = Some(r.mean_moved / max);
    }
    Ok(TuningTable { rows })
}
