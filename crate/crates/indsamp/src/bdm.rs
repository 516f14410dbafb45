//! Pseudo-marginal MCMC for the birth-death-mutation branching process.
//!
//! Individuals carry a genotype; while alive each experiences events at unit
//! rate, an event being a birth with probability `a`, a death with
//! probability `d`, and otherwise a mutation to a brand-new genotype
//! (infinite alleles). The population is observed once it first reaches
//! `N_T` individuals, as the cluster-size partition of a uniform
//! without-replacement sample.
//!
//! The latent randomness is non-centered: fixed-length U(0,1) vectors `u`
//! (event types) and `w` (which individual) drive a deterministic embedded
//! jump-chain simulation, and a third vector `v` drives the estimate of the
//! observation probability, so the likelihood estimate is a deterministic
//! function of `(a, d, u, w, v)`. Blocks of `u`/`w` and of `v` are refreshed
//! with independence samplers (the uniform prior and proposal cancel), and
//! `(a, d)` moves by random walk Metropolis with the latents held fixed.
//!
//! Individuals are ordered canonically (type creation order, then insertion
//! order within a type) so that `w`-selection is well defined: index
//! `ceil(w * total)` into that ordering. Selection is O(log types) through a
//! version-stamped Fenwick tree that resets in O(1) between simulations.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::diagnostics::{
    effective_sample_size, tuning_summary, EssReport, Trace, TuningRow, TuningTable,
};
use crate::math::{ln_choose, ln_gamma, log_mean_exp};
use crate::rng::{stream_rng, StreamRng};
use crate::sampler::{IndexPool, StepRecord};
use crate::{Error, Result};

/// Observed genotype cluster-size distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterData {
    clusters: Vec<(u32, u32)>,
    sample_size: usize,
    /// Every demanded cluster size, expanded and sorted descending.
    demanded_desc: Vec<u32>,
    /// `sum_sizes ln(count!)`, the multiplicity correction of the match count.
    ln_dup_factor: f64,
}

impl ClusterData {
    pub fn new(mut clusters: Vec<(u32, u32)>) -> Result<Self> {
        if clusters.is_empty() {
            return Err(Error::invalid("cluster data must be non-empty"));
        }
        if clusters.iter().any(|&(s, c)| s == 0 || c == 0) {
            return Err(Error::invalid("cluster sizes and counts must be positive"));
        }
        clusters.sort_by_key(|&(s, _)| s);
        if clusters.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::invalid("cluster sizes must be distinct"));
        }
        let sample_size = clusters.iter().map(|&(s, c)| s as usize * c as usize).sum();
        let mut demanded_desc = Vec::new();
        for &(s, c) in clusters.iter().rev() {
            demanded_desc.extend(std::iter::repeat_n(s, c as usize));
        }
        let ln_dup_factor = clusters
            .iter()
            .map(|&(_, c)| ln_gamma(c as f64 + 1.0))
            .sum();
        Ok(ClusterData {
            clusters,
            sample_size,
            demanded_desc,
            ln_dup_factor,
        })
    }

    pub fn clusters(&self) -> &[(u32, u32)] {
        &self.clusters
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    /// Number of demanded clusters (distinct sampled genotypes).
    pub fn n_clusters(&self) -> usize {
        self.demanded_desc.len()
    }

    pub fn singleton_count(&self) -> u32 {
        self.clusters
            .iter()
            .find(|&&(s, _)| s == 1)
            .map(|&(_, c)| c)
            .unwrap_or(0)
    }
}

/// Birth and death probabilities per event; mutation takes the rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BdmParams {
    pub a: f64,
    pub d: f64,
}

impl BdmParams {
    pub fn new(a: f64, d: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0 && d > 0.0 && d < 1.0 && a + d < 1.0) {
            return Err(Error::invalid(format!(
                "need a, d in (0,1) with a + d < 1, got a={a}, d={d}"
            )));
        }
        Ok(BdmParams { a, d })
    }

    pub fn mutation_prob(&self) -> f64 {
        1.0 - self.a - self.d
    }

    fn is_valid(a: f64, d: f64) -> bool {
        a > 0.0 && a < 1.0 && d > 0.0 && d < 1.0 && a + d < 1.0
    }
}

/// Population at the stopping time: counts of the surviving genotypes in
/// creation order, plus bookkeeping counters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BdmPopulation {
    /// Counts of types that still have living members, in creation order.
    pub type_counts: Vec<u32>,
    pub total: u32,
    pub events_used: usize,
    pub born: u64,
    pub died: u64,
}

impl BdmPopulation {
    pub fn n_types(&self) -> usize {
        self.type_counts.len()
    }
}

/// Outcome of one deterministic simulation pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimOutcome {
    Population(BdmPopulation),
    Extinct { events_used: usize },
    LatentExhausted,
}

impl SimOutcome {
    pub fn population(&self) -> Option<&BdmPopulation> {
        match self {
            SimOutcome::Population(p) => Some(p),
            _ => None,
        }
    }
}

// Fenwick tree over per-type counts with version-stamped entries, so a new
// simulation starts without clearing the whole array.
struct VersionedFenwick {
    value: Vec<i64>,
    version: Vec<u32>,
    current: u32,
    len: usize,
}

impl VersionedFenwick {
    fn new(len: usize) -> Self {
        VersionedFenwick {
            value: vec![0; len + 1],
            version: vec![0; len + 1],
            current: 0,
            len,
        }
    }

    fn start_run(&mut self) {
        self.current = self.current.wrapping_add(1);
        if self.current == 0 {
            self.value.fill(0);
            self.version.fill(0);
            self.current = 1;
        }
    }

    #[inline]
    fn get(&self, i: usize) -> i64 {
        if self.version[i] == self.current {
            self.value[i]
        } else {
            0
        }
    }

    #[inline]
    fn add(&mut self, type_idx: usize, delta: i64) {
        let mut i = type_idx + 1;
        while i <= self.len {
            let v = self.get(i) + delta;
            self.value[i] = v;
            self.version[i] = self.current;
            i += i & i.wrapping_neg();
        }
    }

    /// Smallest 0-based type index whose prefix sum reaches `target` (1-based rank).
    #[inline]
    fn select(&self, mut target: i64) -> usize {
        let mut pos = 0usize;
        let mut bit = self.len.next_power_of_two();
        while bit > 0 {
            let next = pos + bit;
            if next <= self.len {
                let v = self.get(next);
                if v < target {
                    target -= v;
                    pos = next;
                }
            }
            bit >>= 1;
        }
        pos
    }
}

/// Reusable simulation workspace; see [`simulate_bdm`] for the one-shot form.
pub struct BdmSimulator {
    fenwick: VersionedFenwick,
    counts: Vec<u32>,
    counts_version: Vec<u32>,
    run: u32,
}

impl BdmSimulator {
    /// `capacity` bounds the number of types a run can create
    /// (1 + number of events, i.e. `u.len() + 1`, is always enough).
    pub fn new(capacity: usize) -> Self {
        BdmSimulator {
            fenwick: VersionedFenwick::new(capacity),
            counts: vec![0; capacity],
            counts_version: vec![0; capacity],
            run: 0,
        }
    }

    #[inline]
    fn count(&self, t: usize) -> u32 {
        if self.counts_version[t] == self.run {
            self.counts[t]
        } else {
            0
        }
    }

    #[inline]
    fn set_count(&mut self, t: usize, v: u32) {
        self.counts[t] = v;
        self.counts_version[t] = self.run;
    }

    /// Deterministic embedded-jump-chain simulation from a single founder:
    /// event i reads `u[i]` for its type (birth below `a`, death below
    /// `a + d`, else mutation) and `w[i]` to pick the individual, and the run
    /// stops at `n_target` living individuals, at extinction, or when the
    /// latent vectors are exhausted.
    pub fn run(&mut self, params: &BdmParams, u: &[f64], w: &[f64], n_target: u32) -> SimOutcome {
        debug_assert_eq!(u.len(), w.len());
        debug_assert!(n_target >= 1);
        debug_assert!(u.len() < self.counts.len());

        self.run = self.run.wrapping_add(1);
        if self.run == 0 {
            self.counts_version.fill(0);
            self.run = 1;
        }
        self.fenwick.start_run();

        let mut total: u32 = 1;
        let mut types: usize = 1;
        let mut born: u64 = 1;
        let mut died: u64 = 0;
        self.set_count(0, 1);
        self.fenwick.add(0, 1);

        let mut i = 0usize;
        loop {
            if total == n_target {
                let type_counts = (0..types)
                    .map(|t| self.count(t))
                    .filter(|&c| c > 0)
                    .collect();
                return SimOutcome::Population(BdmPopulation {
                    type_counts,
                    total,
                    events_used: i,
                    born,
                    died,
                });
            }
            if i == u.len() {
                return SimOutcome::LatentExhausted;
            }
            let rank = ((w[i] * total as f64).ceil() as i64).clamp(1, total as i64);
            let t = self.fenwick.select(rank);
            debug_assert!(self.count(t) > 0);
            if u[i] < params.a {
                self.set_count(t, self.count(t) + 1);
                self.fenwick.add(t, 1);
                total += 1;
                born += 1;
            } else if u[i] < params.a + params.d {
                self.set_count(t, self.count(t) - 1);
                self.fenwick.add(t, -1);
                total -= 1;
                died += 1;
                if total == 0 {
                    return SimOutcome::Extinct { events_used: i + 1 };
                }
            } else {
                self.set_count(t, self.count(t) - 1);
                self.fenwick.add(t, -1);
                self.set_count(types, 1);
                self.fenwick.add(types, 1);
                types += 1;
            }
            debug_assert_eq!(born - died, total as u64);
            i += 1;
        }
    }
}

/// One-shot simulation; a pure function of `(params, u, w, n_target)`.
pub fn simulate_bdm(params: &BdmParams, u: &[f64], w: &[f64], n_target: u32) -> SimOutcome {
    BdmSimulator::new(u.len() + 1).run(params, u, w, n_target)
}

/// Why an observation estimate is exactly zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObsInfeasibility {
    NotAPopulation,
    PopulationTooSmall,
    TooFewTypes,
    NoFeasibleAssignment,
}

/// Log estimate of the observation probability; `log_prob = -inf` iff
/// `infeasibility` is set or every importance replicate dead-ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObsEstimate {
    pub log_prob: f64,
    pub infeasibility: Option<ObsInfeasibility>,
}

impl ObsEstimate {
    fn infeasible(reason: ObsInfeasibility) -> Self {
        ObsEstimate {
            log_prob: f64::NEG_INFINITY,
            infeasibility: Some(reason),
        }
    }
}

/// Unbiased estimate of the probability that a uniform without-replacement
/// sample of `sample_size` individuals reproduces the observed cluster-size
/// partition, driven entirely by `v` (common random numbers).
///
/// Sequential importance sampling over demanded clusters in descending size
/// order: each demanded cluster of size s is assigned a distinct population
/// type with probability proportional to `C(n_type, s)`, contributing the
/// step's total feasible weight to the replicate's product. Averaging the
/// `v.len() / n_clusters` replicate estimates in log space gives the
/// pseudo-marginal likelihood estimate.
pub fn estimate_obs_loglik(outcome: &SimOutcome, data: &ClusterData, v: &[f64]) -> ObsEstimate {
    let pop = match outcome.population() {
        Some(p) => p,
        None => return ObsEstimate::infeasible(ObsInfeasibility::NotAPopulation),
    };
    if (pop.total as usize) < data.sample_size() {
        return ObsEstimate::infeasible(ObsInfeasibility::PopulationTooSmall);
    }
    if pop.n_types() < data.n_clusters() {
        return ObsEstimate::infeasible(ObsInfeasibility::TooFewTypes);
    }
    let n_clusters = data.n_clusters();
    assert!(
        v.len() >= n_clusters,
        "v must hold at least one replicate of {n_clusters} entries"
    );
    let n_rep = v.len() / n_clusters;

    // group types by population count, descending
    let mut sorted_counts: Vec<u32> = pop.type_counts.clone();
    sorted_counts.sort_unstable_by(|a, b| b.cmp(a));
    let mut groups: Vec<(u32, u32)> = Vec::new();
    for c in sorted_counts {
        match groups.last_mut() {
            Some(g) if g.0 == c => g.1 += 1,
            _ => groups.push((c, 1)),
        }
    }

    // C(count, size) per (group, demanded size class), rescaled per class by
    // the largest log weight so the step masses accumulate in linear space
    // (one log per step instead of a log-sum-exp over groups)
    let sizes: Vec<u32> = data.clusters().iter().map(|&(s, _)| s).collect();
    let ln_binom: Vec<Vec<f64>> = groups
        .iter()
        .map(|&(c, _)| {
            sizes
                .iter()
                .map(|&s| {
                    if s <= c {
                        ln_choose(c as u64, s as u64)
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .collect()
        })
        .collect();
    let class_scale: Vec<f64> = (0..sizes.len())
        .map(|class| {
            let m = ln_binom
                .iter()
                .map(|row| row[class])
                .fold(f64::NEG_INFINITY, f64::max);
            if m.is_finite() {
                m
            } else {
                0.0
            }
        })
        .collect();
    let binom: Vec<Vec<f64>> = ln_binom
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(class, &ln)| {
                    if ln == f64::NEG_INFINITY {
                        0.0
                    } else {
                        (ln - class_scale[class]).exp()
                    }
                })
                .collect()
        })
        .collect();
    let size_class: std::collections::HashMap<u32, usize> =
        sizes.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let class_desc: Vec<usize> = data.demanded_desc.iter().map(|s| size_class[s]).collect();

    let ln_norm = data.ln_dup_factor + ln_choose(pop.total as u64, data.sample_size() as u64);

    let mut avail: Vec<f64> = Vec::with_capacity(groups.len());
    let mut replicate_logs = Vec::with_capacity(n_rep);
    for rep in 0..n_rep {
        let chunk = &v[rep * n_clusters..(rep + 1) * n_clusters];
        avail.clear();
        avail.extend(groups.iter().map(|&(_, m)| m as f64));
        let mut log_w = 0.0;
        let mut dead = false;
        for (step, &class) in class_desc.iter().enumerate() {
            let mut total_mass = 0.0;
            for (g, a) in avail.iter().enumerate() {
                total_mass += a * binom[g][class];
            }
            if total_mass <= 0.0 {
                dead = true;
                break;
            }
            // pick a group by inverting the cumulative mass at chunk[step]
            let target = chunk[step] * total_mass;
            let mut cum = 0.0;
            let mut chosen = avail.len() - 1;
            for (g, a) in avail.iter().enumerate() {
                cum += a * binom[g][class];
                if target < cum {
                    chosen = g;
                    break;
                }
            }
            // a rounding landing on an empty group walks back to mass
            while avail[chosen] * binom[chosen][class] == 0.0 {
                chosen = chosen.checked_sub(1).expect("positive total mass");
            }
            avail[chosen] -= 1.0;
            log_w += total_mass.ln() + class_scale[class];
        }
        replicate_logs.push(if dead {
            f64::NEG_INFINITY
        } else {
            log_w - ln_norm
        });
    }
    let log_prob = log_mean_exp(&replicate_logs);
    ObsEstimate {
        log_prob,
        infeasibility: (log_prob == f64::NEG_INFINITY)
            .then_some(ObsInfeasibility::NoFeasibleAssignment),
    }
}

/// The non-centered latent state: uniform vectors and the cached
/// log-likelihood estimate they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct BdmLatentState {
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub v: Vec<f64>,
    pub loglik_estimate: f64,
}

/// Accept/reject on a log ratio with -inf handling for pseudo-marginal moves.
fn accept_log_ratio(current: f64, proposed: f64, rng: &mut StreamRng) -> (bool, f64) {
    if proposed == f64::NEG_INFINITY {
        return (false, f64::NEG_INFINITY);
    }
    if current == f64::NEG_INFINITY {
        return (true, f64::INFINITY);
    }
    let log_ratio = proposed - current;
    let u: f64 = rng.random();
    (u.ln() < log_ratio, log_ratio)
}

/// Configuration for [`run_bdm_mcmc`].
#[derive(Debug, Clone, PartialEq)]
pub struct BdmRunConfig {
    pub n_latent: usize,
    /// Replicates of the observation estimator (sizes `v`).
    pub n_rep: usize,
    pub n_target: u32,
    /// Block size for the `u`/`w` independence update.
    pub k: usize,
    /// Block size for the `v` independence update.
    pub k_v: usize,
    pub iterations: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub stream: u64,
    pub init_params: BdmParams,
    /// Random walk scales for (a, d).
    pub scales: (f64, f64),
    pub trace_thin: u64,
}

impl BdmRunConfig {
    pub fn new(n_latent: usize, n_target: u32, k: usize, iterations: u64, seed: u64) -> Self {
        BdmRunConfig {
            n_latent,
            n_rep: 25,
            n_target,
            k,
            k_v: 0,
            iterations,
            burn_in: iterations / 10,
            seed,
            stream: 0,
            init_params: BdmParams { a: 0.6, d: 0.2 },
            scales: (0.05, 0.05),
            trace_thin: 10,
        }
    }
}

/// A pseudo-marginal chain over `(a, d, u, w, v)`.
pub struct BdmChain<'a> {
    data: &'a ClusterData,
    n_target: u32,
    pub params: BdmParams,
    pub latent: BdmLatentState,
    pub outcome: SimOutcome,
    sim: BdmSimulator,
    pool_latent: IndexPool,
    pool_v: IndexPool,
    idx_u: Vec<usize>,
    idx_w: Vec<usize>,
    saved: Vec<f64>,
    rng: StreamRng,
}

impl<'a> BdmChain<'a> {
    /// Draw latents from their U(0,1) prior until the induced likelihood
    /// estimate is finite (bounded attempts), then stand the chain up.
    pub fn init(data: &'a ClusterData, cfg: &BdmRunConfig) -> Result<Self> {
        if cfg.k == 0 || cfg.k > cfg.n_latent {
            return Err(Error::invalid(format!(
                "block size k = {} out of range 1..={}",
                cfg.k, cfg.n_latent
            )));
        }
        if cfg.k_v > cfg.n_rep * data.n_clusters() {
            return Err(Error::invalid("k_v exceeds the length of v"));
        }
        if (cfg.n_target as usize) < data.sample_size() {
            return Err(Error::invalid(format!(
                "n_target = {} cannot host a sample of {}",
                cfg.n_target,
                data.sample_size()
            )));
        }
        let mut rng = stream_rng(cfg.seed, cfg.stream);
        let mut sim = BdmSimulator::new(cfg.n_latent + 1);
        let n_v = cfg.n_rep * data.n_clusters();
        let params = cfg.init_params;
        BdmParams::new(params.a, params.d)?;

        let mut attempt = 0;
        let (latent, outcome) = loop {
            let u: Vec<f64> = (0..cfg.n_latent).map(|_| rng.random()).collect();
            let w: Vec<f64> = (0..cfg.n_latent).map(|_| rng.random()).collect();
            let v: Vec<f64> = (0..n_v).map(|_| rng.random()).collect();
            let outcome = sim.run(&params, &u, &w, cfg.n_target);
            let est = estimate_obs_loglik(&outcome, data, &v);
            if est.log_prob > f64::NEG_INFINITY {
                break (
                    BdmLatentState {
                        u,
                        w,
                        v,
                        loglik_estimate: est.log_prob,
                    },
                    outcome,
                );
            }
            attempt += 1;
            if attempt >= 1000 {
                return Err(Error::invalid(
                    "could not initialize a feasible latent configuration in 1000 draws",
                ));
            }
        };
        Ok(BdmChain {
            data,
            n_target: cfg.n_target,
            params,
            latent,
            outcome,
            sim,
            pool_latent: IndexPool::new(cfg.n_latent),
            pool_v: IndexPool::new(n_v),
            idx_u: Vec::new(),
            idx_w: Vec::new(),
            saved: Vec::new(),
            rng,
        })
    }

    /// Refresh k components each of `u` and `w` (independently chosen index
    /// sets), re-simulate, and accept or reject the whole block.
    pub fn update_latents(&mut self, k: usize) -> StepRecord {
        debug_assert!(k >= 1 && k <= self.latent.u.len());
        self.pool_latent
            .sample_into(k, &mut self.rng, &mut self.idx_u);
        self.saved.clear();
        for &i in &self.idx_u {
            self.saved.push(self.latent.u[i]);
            self.latent.u[i] = self.rng.random();
        }
        self.pool_latent
            .sample_into(k, &mut self.rng, &mut self.idx_w);
        for &i in &self.idx_w {
            self.saved.push(self.latent.w[i]);
            self.latent.w[i] = self.rng.random();
        }
        let outcome = self
            .sim
            .run(&self.params, &self.latent.u, &self.latent.w, self.n_target);
        let est = estimate_obs_loglik(&outcome, self.data, &self.latent.v);
        let (accepted, log_ratio) =
            accept_log_ratio(self.latent.loglik_estimate, est.log_prob, &mut self.rng);
        if accepted {
            self.latent.loglik_estimate = est.log_prob;
            self.outcome = outcome;
        } else {
            let (u_part, w_part) = self.saved.split_at(self.idx_u.len());
            for (&i, &old) in self.idx_u.iter().zip(u_part) {
                self.latent.u[i] = old;
            }
            for (&i, &old) in self.idx_w.iter().zip(w_part) {
                self.latent.w[i] = old;
            }
        }
        StepRecord {
            accepted,
            k,
            log_ratio,
        }
    }

    /// Refresh `k_v` components of `v`, re-evaluating only the observation
    /// estimator (no process re-simulation).
    pub fn update_v(&mut self, k_v: usize) -> StepRecord {
        if k_v == 0 {
            return StepRecord {
                accepted: true,
                k: 0,
                log_ratio: 0.0,
            };
        }
        debug_assert!(k_v <= self.latent.v.len());
        self.pool_v.sample_into(k_v, &mut self.rng, &mut self.idx_u);
        self.saved.clear();
        for &i in &self.idx_u {
            self.saved.push(self.latent.v[i]);
            self.latent.v[i] = self.rng.random();
        }
        let est = estimate_obs_loglik(&self.outcome, self.data, &self.latent.v);
        let (accepted, log_ratio) =
            accept_log_ratio(self.latent.loglik_estimate, est.log_prob, &mut self.rng);
        if accepted {
            self.latent.loglik_estimate = est.log_prob;
        } else {
            for (&i, &old) in self.idx_u.iter().zip(&self.saved) {
                self.latent.v[i] = old;
            }
        }
        StepRecord {
            accepted,
            k: k_v,
            log_ratio,
        }
    }

    /// Random walk Metropolis on `(a, d)` with the latents held fixed; a flat
    /// prior on the valid triangle, so invalid proposals are rejected outright.
    pub fn update_params(&mut self, scales: (f64, f64)) -> StepRecord {
        let z1: f64 = StandardNormal.sample(&mut self.rng);
        let z2: f64 = StandardNormal.sample(&mut self.rng);
        let a = self.params.a + scales.0 * z1;
        let d = self.params.d + scales.1 * z2;
        if !BdmParams::is_valid(a, d) {
            return StepRecord {
                accepted: false,
                k: 2,
                log_ratio: f64::NEG_INFINITY,
            };
        }
        let proposed = BdmParams { a, d };
        let outcome = self
            .sim
            .run(&proposed, &self.latent.u, &self.latent.w, self.n_target);
        let est = estimate_obs_loglik(&outcome, self.data, &self.latent.v);
        let (accepted, log_ratio) =
            accept_log_ratio(self.latent.loglik_estimate, est.log_prob, &mut self.rng);
        if accepted {
            self.params = proposed;
            self.latent.loglik_estimate = est.log_prob;
            self.outcome = outcome;
        }
        StepRecord {
            accepted,
            k: 2,
            log_ratio,
        }
    }

    /// Scratch recomputation of the cached log-likelihood estimate.
    pub fn recompute_loglik(&mut self) -> f64 {
        let outcome = self
            .sim
            .run(&self.params, &self.latent.u, &self.latent.w, self.n_target);
        estimate_obs_loglik(&outcome, self.data, &self.latent.v).log_prob
    }
}

/// Output of one BDM chain.
#[derive(Debug, Clone, PartialEq)]
pub struct BdmRun {
    /// Tuning row of the latent `u`/`w` block update.
    pub row: TuningRow,
    pub a_trace: Trace,
    pub d_trace: Trace,
    pub ess_a: EssReport,
    pub ess_d: EssReport,
    pub param_acceptance: f64,
    pub v_acceptance: f64,
    pub final_params: BdmParams,
}

/// Cycle `update_params`, `update_latents(k)`, `update_v(k_v)` and report
/// the latent-update tuning row, parameter traces and their ESS.
pub fn run_bdm_mcmc(data: &ClusterData, cfg: &BdmRunConfig) -> Result<BdmRun> {
    if cfg.iterations <= cfg.burn_in {
        return Err(Error::invalid("iterations must exceed burn_in"));
    }
    let mut chain = BdmChain::init(data, cfg)?;
    let mut latent_accepted = 0u64;
    let mut param_accepted = 0u64;
    let mut v_accepted = 0u64;
    let mut a_trace = Vec::new();
    let mut d_trace = Vec::new();
    for it in 0..cfg.iterations {
        let p = chain.update_params(cfg.scales);
        let l = chain.update_latents(cfg.k);
        let v = chain.update_v(cfg.k_v);
        if it >= cfg.burn_in {
            param_accepted += p.accepted as u64;
            latent_accepted += l.accepted as u64;
            v_accepted += v.accepted as u64;
            if (it - cfg.burn_in).is_multiple_of(cfg.trace_thin) {
                a_trace.push(chain.params.a);
                d_trace.push(chain.params.d);
            }
        }
    }
    let kept = (cfg.iterations - cfg.burn_in) as f64;
    let acceptance = latent_accepted as f64 / kept;
    let se = (acceptance * (1.0 - acceptance) / kept).sqrt();
    let a_trace = Trace::new("a", a_trace);
    let d_trace = Trace::new("d", d_trace);
    let ess_a = effective_sample_size(&a_trace)?;
    let ess_d = effective_sample_size(&d_trace)?;
    Ok(BdmRun {
        row: TuningRow::new(cfg.k, acceptance, se),
        a_trace,
        d_trace,
        ess_a,
        ess_d,
        param_acceptance: param_accepted as f64 / kept,
        v_acceptance: v_accepted as f64 / kept,
        final_params: chain.params,
    })
}

/// Per-k effective sample sizes of the a and d traces.
pub type SweepEss = Vec<(usize, EssReport, EssReport)>;

/// One chain per k in parallel; returns the tuning table and per-k ESS.
pub fn sweep_k(
    data: &ClusterData,
    base: &BdmRunConfig,
    k_grid: &[usize],
) -> Result<(TuningTable, SweepEss)> {
    let runs: Vec<(usize, BdmRun)> = k_grid
        .par_iter()
        .enumerate()
        .map(|(i, &k)| {
            let cfg = BdmRunConfig {
                k,
                stream: base.stream + i as u64,
                ..base.clone()
            };
            run_bdm_mcmc(data, &cfg).map(|run| (k, run))
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = runs.iter().map(|(_, r)| r.row.clone()).collect();
    let ess = runs
        .iter()
        .map(|&(k, ref r)| (k, r.ess_a, r.ess_d))
        .collect();
    Ok((tuning_summary(rows)?, ess))
}

/// Cluster-size partition of a uniform without-replacement sample from a
/// population, for generating synthetic datasets.
pub fn sample_clusters_from_population(
    pop: &BdmPopulation,
    sample_size: usize,
    rng: &mut StreamRng,
) -> Result<ClusterData> {
    if sample_size == 0 || sample_size > pop.total as usize {
        return Err(Error::invalid("sample size out of range"));
    }
    let mut individuals: Vec<u32> = Vec::with_capacity(pop.total as usize);
    for (t, &c) in pop.type_counts.iter().enumerate() {
        individuals.extend(std::iter::repeat_n(t as u32, c as usize));
    }
    // partial Fisher-Yates for the sample prefix
    for i in 0..sample_size {
        let j = rng.random_range(i..individuals.len());
        individuals.swap(i, j);
    }
    let mut by_type = std::collections::HashMap::new();
    for &t in &individuals[..sample_size] {
        *by_type.entry(t).or_insert(0u32) += 1;
    }
    let mut by_size = std::collections::HashMap::new();
    for (_, c) in by_type {
        *by_size.entry(c).or_insert(0u32) += 1;
    }
    let clusters: Vec<(u32, u32)> = by_size.into_iter().collect();
    ClusterData::new(clusters)
}
