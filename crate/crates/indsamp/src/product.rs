//! Block-size sweeps for i.i.d. product targets: tuning tables over a k-grid
//! and the comparison of observed against theoretical normalized efficiency.

use rayon::prelude::*;

use crate::densities::DensityPair;
use crate::diagnostics::{tuning_summary, TuningRow, TuningTable};
use crate::math::{mean_and_se, normal_quantile};
use crate::sampler::{run_chain, ChainConfig, StartMode};
use crate::scaling::{optimal_k, theoretical_efficiency};
use crate::{Error, Result};

/// Configuration of one k-grid sweep.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub pair: DensityPair,
    pub n: usize,
    /// Distinct block sizes, each in `1..=n`; sorted on validation.
    pub k_grid: Vec<usize>,
    pub iterations: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub replicates: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_grid.is_empty() {
            return Err(Error::invalid("k_grid must be non-empty"));
        }
        let mut sorted = self.k_grid.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.k_grid.len() {
            return Err(Error::invalid("k_grid values must be distinct"));
        }
        if sorted[0] == 0 || *sorted.last().unwrap() > self.n {
            return Err(Error::invalid(format!(
                "k_grid values must lie in 1..={}",
                self.n
            )));
        }
        if self.iterations <= self.burn_in {
            return Err(Error::invalid("iterations must exceed burn_in"));
        }
        if self.replicates == 0 {
            return Err(Error::invalid("replicates must be at least 1"));
        }
        Ok(())
    }
}

/// Run one chain per `(k, replicate)` in parallel, aggregate acceptance over
/// replicates, and return the normalized tuning table with the theoretical
/// efficiency column filled where defined.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<TuningTable> {
    cfg.validate()?;
    let mut grid = cfg.k_grid.clone();
    grid.sort_unstable();

    let reps = cfg.replicates;
    let runs: Vec<(usize, usize)> = grid
        .iter()
        .enumerate()
        .flat_map(|(ki, _)| (0..reps).map(move |r| (ki, r)))
        .collect();

    let results: Vec<(usize, f64, f64)> = runs
        .par_iter()
        .map(|&(ki, rep)| {
            let chain_cfg = ChainConfig {
                n: cfg.n,
                k: grid[ki],
                iterations: cfg.iterations,
                burn_in: cfg.burn_in,
                seed: cfg.seed,
                stream: (ki * reps + rep) as u64,
                start: StartMode::Stationary,
                trace_thin: None,
            };
            let run = run_chain(&cfg.pair, &chain_cfg)?;
            Ok((ki, run.row.acceptance, run.row.acceptance_se))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(grid.len());
    for (ki, &k) in grid.iter().enumerate() {
        let accs: Vec<f64> = results
            .iter()
            .filter(|(i, _, _)| *i == ki)
            .map(|&(_, a, _)| a)
            .collect();
        let (acc, se) = if accs.len() >= 2 {
            mean_and_se(&accs)
        } else {
            let within = results.iter().find(|(i, _, _)| *i == ki).unwrap().2;
            (accs[0], within)
        };
        rows.push(TuningRow::new(k, acc, se));
    }

    let mut table = tuning_summary(rows)?;
    for row in &mut table.rows {
        if row.acceptance > 0.0 && row.acceptance < 1.0 {
            row.theoretical_efficiency = Some(theoretical_efficiency(row.acceptance)?);
        }
    }
    Ok(table)
}

/// Invert the Gaussian acceptance approximation: the real block size at which
/// the predicted acceptance equals `a`.
fn k_at_acceptance(a: f64, i: f64) -> f64 {
    // a = 2 Phi(-sqrt(kI/2))  =>  k = 2 (Phi^{-1}(a/2))^2 / I
    let z = normal_quantile(a / 2.0);
    2.0 * z * z / i
}

/// A geometric k-grid of about `points` values covering predicted acceptance
/// rates from roughly 0.95 down to 0.02, centered on the optimal k and
/// clipped to `[1, n]`; for a divergent discrepancy, `{1..min(20,n)}` plus a
/// geometric tail.
pub fn default_k_grid(pair: &DensityPair, n: usize, points: usize) -> Result<Vec<usize>> {
    let disc = pair.discrepancy(200_000, 0x6b67)?;
    let mut grid: Vec<usize>;
    if disc.is_divergent() {
        grid = (1..=n.min(20)).collect();
        let mut k = 20.0 * 1.8;
        while (k as usize) < n {
            grid.push(k as usize);
            k *= 1.8;
        }
        if n > 20 {
            grid.push(n);
        }
    } else if disc.value == 0.0 {
        // identical densities: every block size accepts; spread evenly
        grid = (1..=points.max(2))
            .map(|i| (i * n) / points.max(2))
            .map(|k| k.max(1))
            .collect();
    } else {
        let i = disc.value;
        let k_opt = optimal_k(i, n)?;
        let lo = k_at_acceptance(0.95, i).max(1.0).min(n as f64);
        let hi = k_at_acceptance(0.02, i).max(1.0).min(n as f64);
        let m = points.max(2);
        grid = (0..m)
            .map(|j| {
                let t = j as f64 / (m - 1) as f64;
                (lo * (hi / lo).powf(t)).round() as usize
            })
            .collect();
        grid.push(k_opt);
    }
    grid.sort_unstable();
    grid.dedup();
    Ok(grid)
}

/// Per-row `(k, observed, theoretical)` normalized efficiencies and their
/// largest absolute gap. Rows with acceptance 0 or 1 are skipped and counted.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryGap {
    pub pairs: Vec<(usize, f64, f64)>,
    pub sup_gap: f64,
    pub skipped: usize,
}

pub fn efficiency_vs_theory(table: &TuningTable) -> Result<TheoryGap> {
    if table.rows.is_empty() {
        return Err(Error::invalid(
            "efficiency_vs_theory needs a non-empty table",
        ));
    }
    let max = table.max_mean_moved();
    let mut pairs = Vec::new();
    let mut skipped = 0;
    let mut sup_gap: f64 = 0.0;
    for row in &table.rows {
        if !(row.acceptance > 0.0 && row.acceptance < 1.0) {
            skipped += 1;
            continue;
        }
        let observed = row.normalized_efficiency.unwrap_or(row.mean_moved / max);
        let theoretical = theoretical_efficiency(row.acceptance)?;
        sup_gap = sup_gap.max((observed - theoretical).abs());
        pairs.push((row.k, observed, theoretical));
    }
    Ok(TheoryGap {
        pairs,
        sup_gap,
        skipped,
    })
}
