//! Acceptance-rate theory for the block independence sampler.
//!
//! In stationarity the acceptance ratio of a k-block move is distributed as
//! `W*_k = prod_{i=1..k} w(Y_i)/w(X_i)` with `Y_i ~ q`, `X_i ~ f`, so the mean
//! acceptance rate is `E[1 ^ W*_k]` and the mean number of components moved
//! is `k E[1 ^ W*_k]`. For small discrepancy `I` a central limit argument
//! gives `log W*_k ~ N(-kI, kJ)` with `J ~ 2I`, leading to the Gaussian
//! acceptance approximation, the `k ~ 2.835/I` tuning rule and its 23.4%
//! acceptance optimum, and the normalized efficiency curve. The module also
//! provides the stationary acceptance kernel `H*(y, x)` and a thinning
//! simulator for the limiting jump process of the first coordinate of the
//! time-rescaled chain.

use rand::Rng;

use crate::densities::DensityPair;
use crate::math::{mean_and_se, normal_cdf, normal_log_cdf, normal_quantile};
use crate::rng::{stream_rng, StreamRng};
use crate::sampler::{BlockSampler, ChainState};
use crate::{Error, Result};

/// `k I` at the maximizer of the mean number of components moved.
pub const OPTIMAL_KI: f64 = 2.835;

/// Mean acceptance rate at the optimal block size.
pub const OPTIMAL_ACCEPTANCE: f64 = 0.234;

/// `sup_z 2 z^2 Phi(-z/2)`, the efficiency normalizer.
pub const EFFICIENCY_NORMALIZER: f64 = 1.3257;

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn new(value: f64, std_error: f64) -> Self {
        Estimate { value, std_error }
    }

    /// |self - other| in units of the combined standard error.
    pub fn z_against(&self, other: &Estimate) -> f64 {
        let se = (self.std_error * self.std_error + other.std_error * other.std_error).sqrt();
        (self.value - other.value).abs() / se
    }

    pub fn scaled(&self, c: f64) -> Estimate {
        Estimate::new(c * self.value, c.abs() * self.std_error)
    }
}

/// Monte Carlo estimate of the stationary mean acceptance rate
/// `E[1 ^ W*_k] = E[1 ^ exp(sum_{i=1..k} g(Y_i) - g(X_i))]`.
pub fn estimate_mean_acceptance(
    pair: &DensityPair,
    k: usize,
    mc_samples: usize,
    seed: u64,
) -> Estimate {
    assert!(k >= 1, "k must be at least 1");
    assert!(
        mc_samples >= 10_000,
        "need at least 10^4 Monte Carlo samples"
    );
    let mut rng = stream_rng(seed, 0);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..mc_samples {
        let mut log_w = 0.0;
        for _ in 0..k {
            let y = pair.sample_proposal(&mut rng);
            let x = pair.sample_target(&mut rng);
            log_w += pair.log_weight_unchecked(y) - pair.log_weight_unchecked(x);
        }
        let a = if log_w >= 0.0 { 1.0 } else { log_w.exp() };
        sum += a;
        sum_sq += a * a;
    }
    let n = mc_samples as f64;
    let m = sum / n;
    let var = ((sum_sq - n * m * m) / (n - 1.0)).max(0.0);
    Estimate::new(m, (var / n).sqrt())
}

/// The Gaussian approximation to the mean acceptance rate:
/// `Phi(-kI/sqrt(kJ)) + exp(-kI + kJ/2) Phi(-sqrt(kJ) + kI/sqrt(kJ))`.
///
/// With `J = 2I` this reduces algebraically to `2 Phi(-sqrt(kI/2))`.
/// The second term is assembled as `exp(a + log Phi(b))` so large exponents
/// cannot overflow. `k` is real-valued: the optimum is found over real k.
pub fn gaussian_acceptance_approx(k: f64, i: f64, j: f64) -> f64 {
    assert!(k >= 1.0 && i > 0.0 && j > 0.0, "need k >= 1, I > 0, J > 0");
    let ki = k * i;
    let s = (k * j).sqrt();
    let term1 = normal_cdf(-ki / s);
    let term2 = (-ki + 0.5 * k * j + normal_log_cdf(-s + ki / s)).exp();
    (term1 + term2).clamp(0.0, 1.0)
}

/// The acceptance approximation bundled with its inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptanceApprox {
    pub k: f64,
    pub i: f64,
    pub j: f64,
    pub value: f64,
}

impl AcceptanceApprox {
    pub fn new(k: f64, i: f64, j: f64) -> Result<Self> {
        if !(k >= 1.0) || !(i > 0.0) || !(j > 0.0) {
            return Err(Error::invalid(format!(
                "acceptance approximation needs k >= 1, I > 0, J > 0, got k={k}, I={i}, J={j}"
            )));
        }
        Ok(AcceptanceApprox {
            k,
            i,
            j,
            value: gaussian_acceptance_approx(k, i, j),
        })
    }

    /// The same approximation under the near-identity assumption `J = 2I`.
    pub fn with_default_j(k: f64, i: f64) -> Result<Self> {
        Self::new(k, i, 2.0 * i)
    }
}

/// The tuning rule: `k = round(2.835 / I)`, clamped to `[1, n]`, with ties
/// rounded down. `I = 0` means a perfect proposal (update everything);
/// `I = +inf` means update one component at a time.
pub fn optimal_k(i: f64, n: usize) -> Result<usize> {
    assert!(n >= 1);
    if i.is_nan() || i < 0.0 {
        return Err(Error::invalid(format!("optimal_k needs I >= 0, got {i}")));
    }
    if i == 0.0 {
        return Ok(n);
    }
    if i.is_infinite() {
        return Ok(1);
    }
    let k = (OPTIMAL_KI / i - 0.5).ceil();
    Ok((k as usize).clamp(1, n))
}

/// Normalized theoretical efficiency at a given acceptance rate:
/// `z = -2 Phi^{-1}(a/2)` and `j = z^2 a / 1.3257`, so the curve peaks at 1
/// when the acceptance rate is about 23.4%.
pub fn theoretical_efficiency(acceptance: f64) -> Result<f64> {
    if !(acceptance > 0.0 && acceptance < 1.0) {
        return Err(Error::invalid(format!(
            "theoretical efficiency needs acceptance strictly inside (0,1), got {acceptance}"
        )));
    }
    let z = -2.0 * normal_quantile(acceptance / 2.0);
    Ok(z * z * acceptance / EFFICIENCY_NORMALIZER)
}

/// The exactly solvable U(0,1) target / U(0, 1+eps) proposal case:
/// acceptance is `(1+eps)^{-k}`, maximizing `k (1+eps)^{-k}` gives
/// `k = 1/log(1+eps)`, and the acceptance there is `exp(-1)`.
pub fn uniform_case(eps: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0) {
        return Err(Error::invalid(format!(
            "uniform_case needs eps > 0, got {eps}"
        )));
    }
    let k_opt = 1.0 / eps.ln_1p();
    let acceptance = (1.0 + eps).powf(-k_opt);
    Ok((k_opt, acceptance))
}

/// Monte Carlo estimate of the stationary acceptance kernel
/// `H*(y, x1) = E[1 ^ (w(y)/w(x1)) prod_{i=1..k-1} w(Y_i)/w(X_i)]`.
///
/// For `k = 1` the product is empty and the value `1 ^ w(y)/w(x1)` is exact.
pub fn estimate_h_star(
    pair: &DensityPair,
    y: f64,
    x1: f64,
    k: usize,
    mc_samples: usize,
    seed: u64,
) -> Result<Estimate> {
    let mut rng = stream_rng(seed, 0);
    estimate_h_star_with(pair, y, x1, k, mc_samples, &mut rng)
}

fn estimate_h_star_with(
    pair: &DensityPair,
    y: f64,
    x1: f64,
    k: usize,
    mc_samples: usize,
    rng: &mut StreamRng,
) -> Result<Estimate> {
    if k == 0 {
        return Err(Error::invalid("estimate_h_star needs k >= 1"));
    }
    let g_x1 = pair.log_weight(x1)?;
    if g_x1 == f64::NEG_INFINITY {
        return Err(Error::invalid(
            "estimate_h_star needs w(x1) > 0 at the conditioning point",
        ));
    }
    let base = pair.log_weight_unchecked(y) - g_x1;
    if k == 1 {
        let v = if base >= 0.0 { 1.0 } else { base.exp() };
        return Ok(Estimate::new(v, 0.0));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..mc_samples {
        let mut log_w = base;
        for _ in 0..k - 1 {
            let yi = pair.sample_proposal(rng);
            let xi = pair.sample_target(rng);
            log_w += pair.log_weight_unchecked(yi) - pair.log_weight_unchecked(xi);
        }
        let a = if log_w >= 0.0 { 1.0 } else { log_w.exp() };
        sum += a;
        sum_sq += a * a;
    }
    let n = mc_samples as f64;
    let m = sum / n;
    let var = ((sum_sq - n * m * m) / (n - 1.0)).max(0.0);
    Ok(Estimate::new(m, (var / n).sqrt()))
}

/// A path of the limiting jump process of the first coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpProcessPath {
    pub initial: f64,
    /// Strictly increasing jump times in `(0, horizon]`.
    pub jump_times: Vec<f64>,
    /// State after each jump.
    pub states: Vec<f64>,
    pub horizon: f64,
}

impl JumpProcessPath {
    pub fn jump_count(&self) -> usize {
        self.jump_times.len()
    }

    /// Jumps per unit time with a Poisson-count standard error.
    pub fn jump_rate(&self) -> Estimate {
        let n = self.jump_count() as f64;
        Estimate::new(n / self.horizon, n.sqrt() / self.horizon)
    }

    /// Path value at time t (right-continuous).
    pub fn value_at(&self, t: f64) -> f64 {
        match self.jump_times.partition_point(|&s| s <= t) {
            0 => self.initial,
            i => self.states[i - 1],
        }
    }

    /// Comb samples of the occupation measure at spacing `dt`.
    pub fn occupation_samples(&self, dt: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut t = dt;
        while t <= self.horizon {
            out.push(self.value_at(t));
            t += dt;
        }
        out
    }
}

/// Simulate the limiting jump process by thinning.
///
/// Candidate events arrive at rate k; a candidate at state x draws `y ~ q`
/// and jumps there with probability `H*(y, x)`, estimated afresh with
/// `hstar_samples` Monte Carlo draws. Because the estimate is unbiased and
/// lies in [0,1], comparing it against an independent uniform accepts with
/// probability exactly `H*`; the sample budget only affects higher-order
/// path statistics, and a budget-doubling check lives in the tests.
pub fn simulate_limit_process(
    pair: &DensityPair,
    k: usize,
    x0: f64,
    horizon: f64,
    hstar_samples: usize,
    rng: &mut StreamRng,
) -> Result<JumpProcessPath> {
    if !(horizon > 0.0) {
        return Err(Error::invalid("simulate_limit_process needs horizon > 0"));
    }
    if k == 0 {
        return Err(Error::invalid("simulate_limit_process needs k >= 1"));
    }
    pair.log_weight(x0)?;

    let rate = k as f64;
    let mut t = 0.0;
    let mut x = x0;
    let mut jump_times = Vec::new();
    let mut states = Vec::new();
    loop {
        let gap: f64 = -rng.random::<f64>().ln() / rate;
        t += gap;
        if t > horizon {
            break;
        }
        let y = pair.sample_proposal(rng);
        let h = estimate_h_star_with(pair, y, x, k, hstar_samples, rng)?.value;
        if rng.random::<f64>() < h {
            x = y;
            jump_times.push(t);
            states.push(x);
        }
    }
    Ok(JumpProcessPath {
        initial: x0,
        jump_times,
        states,
        horizon,
    })
}

/// Side-by-side rates for the scaled chain, the limit-process simulator and
/// the stationary theory, plus a KS check of the chain's occupation marginal.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub n: usize,
    pub k: usize,
    pub horizon: f64,
    /// Component-1 jump rate of the chain in rescaled time t = iteration/n.
    pub chain_rate: Estimate,
    /// Jump rate of the thinning simulator over the same horizon.
    pub limit_rate: Estimate,
    /// `k E[1 ^ W*_k]`.
    pub theory_rate: Estimate,
    /// KS p-value of the chain's component-1 occupation samples against the target CDF.
    pub marginal_ks_p: f64,
    pub chain_vs_limit_z: f64,
    pub chain_vs_theory_z: f64,
}

/// Run the full n-component chain for `horizon * n` iterations, record the
/// first component on the rescaled clock, and compare its jump rate and
/// marginal against the limiting jump process.
pub fn scaled_chain_vs_limit(
    pair: &DensityPair,
    n: usize,
    k: usize,
    horizon: f64,
    seed: u64,
) -> Result<ComparisonReport> {
    let report = chain_side(pair, n, k, horizon, seed)?;
    let mut rng = stream_rng(seed, 101);
    let x0 = pair.sample_target(&mut rng);
    let limit = simulate_limit_process(pair, k, x0, horizon, 1000, &mut rng)?;
    let theory = estimate_mean_acceptance(pair, k, 200_000, seed ^ 0x9e37).scaled(k as f64);

    let limit_rate = limit.jump_rate();
    Ok(ComparisonReport {
        n,
        k,
        horizon,
        chain_vs_limit_z: report.0.z_against(&limit_rate),
        chain_vs_theory_z: report.0.z_against(&theory),
        chain_rate: report.0,
        limit_rate,
        theory_rate: theory,
        marginal_ks_p: report.1,
    })
}

/// The chain half of [`scaled_chain_vs_limit`]: `(rate, marginal KS p)`.
pub fn chain_side(
    pair: &DensityPair,
    n: usize,
    k: usize,
    horizon: f64,
    seed: u64,
) -> Result<(Estimate, f64)> {
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k = {k} out of range 1..={n}")));
    }
    if !(horizon > 0.0) {
        return Err(Error::invalid("chain_side needs horizon > 0"));
    }
    let iterations = (horizon * n as f64).round() as u64;
    let mut rng = stream_rng(seed, 100);
    let mut state = ChainState::stationary(pair, n, &mut rng);
    let mut sampler = BlockSampler::new(pair, n);
    let mut jumps = 0u64;
    let mut occupation = Vec::with_capacity(horizon as usize + 1);
    let mut prev = state.x[0];
    for it in 0..iterations {
        sampler.step(&mut state, k, &mut rng);
        if state.x[0] != prev {
            jumps += 1;
            prev = state.x[0];
        }
        if (it + 1) % n as u64 == 0 {
            occupation.push(state.x[0]);
        }
    }
    let scaled_horizon = iterations as f64 / n as f64;
    let rate = Estimate::new(
        jumps as f64 / scaled_horizon,
        (jumps as f64).sqrt() / scaled_horizon,
    );
    let n_occ = occupation.len();
    let d = crate::math::ks_statistic(&mut occupation, |v| match pair.kind() {
        crate::densities::PairKind::UniformEps { .. } => v.clamp(0.0, 1.0),
        _ => normal_cdf(v),
    });
    Ok((rate, crate::math::ks_pvalue(d, n_occ)))
}

/// Sanity diagnostic for the concentration of the acceptance kernel:
/// the spread of `H(y, x1, X^{n-})` over resampled configurations around its
/// average `H*(y, x1)` shrinks as n grows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HFluctuation {
    pub h_star: f64,
    /// Variance of the per-configuration estimates of H.
    pub between_variance: f64,
    /// Average squared inner standard error (Monte Carlo noise floor).
    pub mean_inner_variance: f64,
    pub resamples: usize,
}

#[allow(clippy::too_many_arguments)]
pub fn h_fluctuation(
    pair: &DensityPair,
    y: f64,
    x1: f64,
    n: usize,
    k: usize,
    resamples: usize,
    inner_samples: usize,
    seed: u64,
) -> Result<HFluctuation> {
    if k < 2 || k > n {
        return Err(Error::invalid("h_fluctuation needs 2 <= k <= n"));
    }
    let g_x1 = pair.log_weight(x1)?;
    let base = pair.log_weight_unchecked(y) - g_x1;
    let mut rng = stream_rng(seed, 0);
    let mut estimates = Vec::with_capacity(resamples);
    let mut inner_vars = Vec::with_capacity(resamples);
    let mut pool = crate::sampler::IndexPool::new(n - 1);
    let mut chosen = Vec::new();
    for _ in 0..resamples {
        // a fresh configuration of the other n-1 components
        let g_others: Vec<f64> = (0..n - 1)
            .map(|_| pair.log_weight_unchecked(pair.sample_target(&mut rng)))
            .collect();
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..inner_samples {
            pool.sample_into(k - 1, &mut rng, &mut chosen);
            let mut log_w = base;
            for &j in &chosen {
                let yi = pair.sample_proposal(&mut rng);
                log_w += pair.log_weight_unchecked(yi) - g_others[j];
            }
            let a = if log_w >= 0.0 { 1.0 } else { log_w.exp() };
            sum += a;
            sum_sq += a * a;
        }
        let m = sum / inner_samples as f64;
        let var = ((sum_sq - inner_samples as f64 * m * m) / (inner_samples as f64 - 1.0)).max(0.0);
        estimates.push(m);
        inner_vars.push(var / inner_samples as f64);
    }
    let (h_star, _) = mean_and_se(&estimates);
    Ok(HFluctuation {
        h_star,
        between_variance: crate::math::sample_variance(&estimates),
        mean_inner_variance: crate::math::mean(&inner_vars),
        resamples,
    })
}
