//! The k-component block independence-sampler kernel, a random walk
//! Metropolis kernel, and a reproducible chain runner.
//!
//! One step of the block kernel selects k of the n components uniformly
//! without replacement, proposes fresh draws from `q` for each, and accepts
//! all of them or none with probability `min{1, prod_j w(y_j)/w(x_j)}`.
//! The ratio is assembled in log space from per-component cached log-weights,
//! so a step costs O(k) regardless of n.

use rand::Rng;

use crate::densities::DensityPair;
use crate::diagnostics::{Trace, TuningRow};
use crate::rng::{stream_rng, StreamRng};
use crate::{Error, Result};

/// Position of the chain plus per-component cached log-weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub x: Vec<f64>,
    /// `cached_log_weight[i] = g(x[i])`, kept in sync by the kernels.
    pub cached_log_weight: Vec<f64>,
    pub iteration: u64,
}

impl ChainState {
    /// Stationary start: every component drawn from the target.
    pub fn stationary(pair: &DensityPair, n: usize, rng: &mut StreamRng) -> Self {
        let x: Vec<f64> = (0..n).map(|_| pair.sample_target(rng)).collect();
        let cached_log_weight = x.iter().map(|&v| pair.log_weight_unchecked(v)).collect();
        ChainState {
            x,
            cached_log_weight,
            iteration: 0,
        }
    }

    /// Custom start; errors if any component is outside the proposal support.
    pub fn custom(pair: &DensityPair, x: Vec<f64>) -> Result<Self> {
        let cached_log_weight = x
            .iter()
            .map(|&v| pair.log_weight(v))
            .collect::<Result<Vec<f64>>>()?;
        Ok(ChainState {
            x,
            cached_log_weight,
            iteration: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Largest absolute mismatch between the cache and freshly computed
    /// log-weights; a consistency check for tests.
    pub fn cache_error(&self, pair: &DensityPair) -> f64 {
        self.x
            .iter()
            .zip(&self.cached_log_weight)
            .map(|(&v, &c)| {
                let fresh = pair.log_weight_unchecked(v);
                if fresh == c {
                    0.0
                } else {
                    (fresh - c).abs()
                }
            })
            .fold(0.0, f64::max)
    }
}

/// A set of k distinct component indices to update.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPlan {
    pub k: usize,
    pub indices: Vec<usize>,
}

impl BlockPlan {
    /// Sample k of n indices uniformly without replacement.
    pub fn sample(n: usize, k: usize, rng: &mut StreamRng) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::invalid(format!(
                "block size k = {k} out of range 1..={n}"
            )));
        }
        let mut pool = IndexPool::new(n);
        let mut indices = Vec::with_capacity(k);
        pool.sample_into(k, rng, &mut indices);
        Ok(BlockPlan { k, indices })
    }
}

/// Reusable pool for O(k) uniform index sampling without replacement.
///
/// Performs k partial Fisher-Yates swaps, reads off the prefix, then undoes
/// the swaps, so the pool never needs an O(n) reset.
#[derive(Debug, Clone)]
pub struct IndexPool {
    pool: Vec<usize>,
    swaps: Vec<(usize, usize)>,
}

impl IndexPool {
    pub fn new(n: usize) -> Self {
        IndexPool {
            pool: (0..n).collect(),
            swaps: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.pool.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pool.is_empty()
    }

    pub fn sample_into(&mut self, k: usize, rng: &mut StreamRng, out: &mut Vec<usize>) {
        let n = self.pool.len();
        debug_assert!(k >= 1 && k <= n);
        out.clear();
        self.swaps.clear();
        for i in 0..k {
            let j = rng.random_range(i..n);
            self.pool.swap(i, j);
            self.swaps.push((i, j));
            out.push(self.pool[i]);
        }
        for &(i, j) in self.swaps.iter().rev() {
            self.pool.swap(i, j);
        }
    }
}

/// Outcome of one Metropolis-Hastings step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub accepted: bool,
    pub k: usize,
    pub log_ratio: f64,
}

/// Log acceptance ratio for a forced block proposal: `sum_j g(y_j) - g(x_j)`
/// over the selected indices only.
pub fn block_log_ratio(
    state: &ChainState,
    pair: &DensityPair,
    indices: &[usize],
    proposed: &[f64],
) -> f64 {
    debug_assert_eq!(indices.len(), proposed.len());
    indices
        .iter()
        .zip(proposed)
        .map(|(&i, &y)| pair.log_weight_unchecked(y) - state.cached_log_weight[i])
        .sum()
}

/// A block independence-sampler with reusable scratch buffers.
pub struct BlockSampler<'a> {
    pair: &'a DensityPair,
    pool: IndexPool,
    indices: Vec<usize>,
    proposed: Vec<f64>,
}

impl<'a> BlockSampler<'a> {
    pub fn new(pair: &'a DensityPair, n: usize) -> Self {
        BlockSampler {
            pair,
            pool: IndexPool::new(n),
            indices: Vec::new(),
            proposed: Vec::new(),
        }
    }

    /// One all-or-nothing block update of `state`.
    pub fn step(&mut self, state: &mut ChainState, k: usize, rng: &mut StreamRng) -> StepRecord {
        debug_assert!(k >= 1 && k <= state.len());
        self.pool.sample_into(k, rng, &mut self.indices);

        self.proposed.clear();
        let mut log_ratio = 0.0;
        for &i in &self.indices {
            let y = self.pair.sample_proposal(rng);
            let g = self.pair.log_weight_unchecked(y);
            debug_assert!(
                !state.cached_log_weight[i].is_infinite(),
                "zero-weight component in the current state"
            );
            log_ratio += g - state.cached_log_weight[i];
            self.proposed.push(y);
        }
        debug_assert!(!log_ratio.is_nan());

        let u: f64 = rng.random();
        let accepted = u.ln() < log_ratio;
        if accepted {
            for (&i, &y) in self.indices.iter().zip(&self.proposed) {
                state.x[i] = y;
                state.cached_log_weight[i] = self.pair.log_weight_unchecked(y);
            }
        }
        state.iteration += 1;
        StepRecord {
            accepted,
            k,
            log_ratio,
        }
    }

    /// Whether the last step's block contained `component`.
    pub fn last_block_contains(&self, component: usize) -> bool {
        self.indices.contains(&component)
    }
}

/// One-shot block step; validates k and allocates its own scratch space.
pub fn block_independence_step(
    state: &mut ChainState,
    pair: &DensityPair,
    k: usize,
    rng: &mut StreamRng,
) -> Result<StepRecord> {
    if k == 0 || k > state.len() {
        return Err(Error::invalid(format!(
            "block size k = {k} out of range 1..={}",
            state.len()
        )));
    }
    let mut sampler = BlockSampler::new(pair, state.len());
    Ok(sampler.step(state, k, rng))
}

/// Random walk Metropolis step with a spherical Gaussian increment
/// (componentwise `scale`). Proposals with `logpost = -inf` are rejected.
///
/// `current_logpost` must hold the finite log-posterior of `x` on entry and
/// is kept in sync.
pub fn rwm_step(
    x: &mut [f64],
    logpost: impl Fn(&[f64]) -> f64,
    current_logpost: &mut f64,
    scales: &[f64],
    rng: &mut StreamRng,
) -> StepRecord {
    use rand_distr::{Distribution, StandardNormal};
    debug_assert!(current_logpost.is_finite());
    debug_assert_eq!(x.len(), scales.len());

    let proposal: Vec<f64> = x
        .iter()
        .zip(scales)
        .map(|(&v, &s)| {
            let z: f64 = StandardNormal.sample(rng);
            v + s * z
        })
        .collect();
    let lp = logpost(&proposal);
    let log_ratio = lp - *current_logpost;
    let u: f64 = rng.random();
    let accepted = lp > f64::NEG_INFINITY && u.ln() < log_ratio;
    if accepted {
        x.copy_from_slice(&proposal);
        *current_logpost = lp;
    }
    StepRecord {
        accepted,
        k: x.len(),
        log_ratio,
    }
}

/// How to initialize [`run_chain`].
#[derive(Debug, Clone, PartialEq)]
pub enum StartMode {
    /// Draw every component from the target (available for product targets).
    Stationary,
    Custom(Vec<f64>),
}

/// Configuration for a single block independence-sampler chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub n: usize,
    pub k: usize,
    pub iterations: u64,
    pub burn_in: u64,
    pub seed: u64,
    /// RNG stream index, so sweeps can derive one stream per run.
    pub stream: u64,
    pub start: StartMode,
    /// Record every `thin`-th post-burn-in value of component 1.
    pub trace_thin: Option<u64>,
}

impl ChainConfig {
    pub fn new(n: usize, k: usize, iterations: u64, burn_in: u64, seed: u64) -> Self {
        ChainConfig {
            n,
            k,
            iterations,
            burn_in,
            seed,
            stream: 0,
            start: StartMode::Stationary,
            trace_thin: None,
        }
    }
}

/// Result of one chain run.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainRun {
    pub row: TuningRow,
    /// Thinned first-component trace, when requested.
    pub trace: Option<Trace>,
    pub accepted: u64,
    pub kept: u64,
}

/// Run a seeded chain and report its acceptance rate and mean components
/// moved; fully reproducible from `(seed, stream)`.
pub fn run_chain(pair: &DensityPair, cfg: &ChainConfig) -> Result<ChainRun> {
    if cfg.k == 0 || cfg.k > cfg.n {
        return Err(Error::invalid(format!(
            "block size k = {} out of range 1..={}",
            cfg.k, cfg.n
        )));
    }
    if cfg.iterations <= cfg.burn_in {
        return Err(Error::invalid(format!(
            "iterations ({}) must exceed burn_in ({})",
            cfg.iterations, cfg.burn_in
        )));
    }
    let mut rng = stream_rng(cfg.seed, cfg.stream);
    let mut state = match &cfg.start {
        StartMode::Stationary => ChainState::stationary(pair, cfg.n, &mut rng),
        StartMode::Custom(x) => {
            if x.len() != cfg.n {
                return Err(Error::invalid(format!(
                    "custom start has {} components, expected {}",
                    x.len(),
                    cfg.n
                )));
            }
            ChainState::custom(pair, x.clone())?
        }
    };

    let mut sampler = BlockSampler::new(pair, cfg.n);
    let mut accepted = 0u64;
    let mut trace = cfg.trace_thin.map(|_| Vec::new());
    for it in 0..cfg.iterations {
        let rec = sampler.step(&mut state, cfg.k, &mut rng);
        if it >= cfg.burn_in {
            if rec.accepted {
                accepted += 1;
            }
            if let (Some(values), Some(thin)) = (trace.as_mut(), cfg.trace_thin) {
                if (it - cfg.burn_in).is_multiple_of(thin) {
                    values.push(state.x[0]);
                }
            }
        }
    }

    let kept = cfg.iterations - cfg.burn_in;
    let acceptance = accepted as f64 / kept as f64;
    // binomial within-chain error; sweeps with replicates override it
    let se = (acceptance * (1.0 - acceptance) / kept as f64).sqrt();
    Ok(ChainRun {
        row: TuningRow::new(cfg.k, acceptance, se),
        trace: trace.map(|values| Trace::new("component_1", values)),
        accepted,
        kept,
    })
}
