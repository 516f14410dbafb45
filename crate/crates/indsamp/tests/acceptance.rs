//! Acceptance gates for the whole crate, one test per criterion, each
//! printing a PASS/FAIL line (visible with `--nocapture` or on failure).
//!
//! Everything runs at desk scale with fixed seeds. The SIR gates use the
//! bundled synthetic outbreak unless an `abakaliki.txt` file is dropped into
//! `data/`, in which case the classic windows apply.

use std::path::{Path, PathBuf};

use indsamp::bdm::{self, BdmRunConfig};
use indsamp::densities::{discrepancy_gaussian, discrepancy_t, DensityPair};
use indsamp::diagnostics::EssReport;
use indsamp::io::{load_clusters, load_removal_times};
use indsamp::math::{ks_pvalue, ks_statistic, normal_cdf};
use indsamp::product::{default_k_grid, efficiency_vs_theory, run_sweep, ExperimentConfig};
use indsamp::sampler::{run_chain, ChainConfig};
use indsamp::scaling::{
    chain_side, estimate_mean_acceptance, gaussian_acceptance_approx, scaled_chain_vs_limit,
    uniform_case,
};
use indsamp::sir::{self, AlphaMode, SirRunConfig};

fn gate(name: &str, pass: bool, detail: String) {
    if pass {
        println!("PASS {name}: {detail}");
    } else {
        println!("FAIL {name}: {detail}");
        panic!("acceptance criterion failed: {name}: {detail}");
    }
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

#[test]
fn criterion_1_discrepancy_table() {
    // closed-form Gaussian values at the precision they are usually quoted
    let gaussian = [
        (1.05, 0.0048, 5e-5),
        (1.1, 0.0182, 5e-5),
        (1.2, 0.0672, 5e-5),
        (1.5, 0.347, 5e-4),
        (2.0, 1.125, 5e-4),
    ];
    let mut detail = String::new();
    let mut ok = true;
    for (lambda, expected, tol) in gaussian {
        let got = discrepancy_gaussian(lambda).unwrap().value;
        ok &= (got - expected).abs() < tol;
        detail.push_str(&format!("I({lambda}) = {got:.4} "));
    }

    // Monte Carlo t values at 10^6 samples within 3 standard errors
    let t_cases = [
        (1u32, None),
        (2, None),
        (5, Some(0.1582)),
        (10, Some(0.0338)),
        (20, Some(0.0083)),
    ];
    for (nu, expected) in t_cases {
        let r = discrepancy_t(nu, 1_000_000, 4114).unwrap();
        match expected {
            None => {
                ok &= r.is_divergent();
                detail.push_str(&format!("I(t{nu}) = inf "));
            }
            Some(e) => {
                ok &= (r.value - e).abs() < 3.0 * r.std_error + 5e-5;
                detail.push_str(&format!("I(t{nu}) = {:.4}+-{:.1e} ", r.value, r.std_error));
            }
        }
    }
    gate("criterion 1 (discrepancy table)", ok, detail);
}

#[test]
fn criterion_2_scaling_constants() {
    // numerically maximize k * acceptance(k) over real k for several I
    let mut ok = true;
    let mut detail = String::new();
    for i in [0.005f64, 0.05, 0.5, 1.125] {
        let mut best_k = 1.0;
        let mut best = f64::NEG_INFINITY;
        let mut k: f64 = (0.05 / i).max(1.0);
        while k * i <= 25.0 {
            let v = k * gaussian_acceptance_approx(k, i, 2.0 * i);
            if v > best {
                best = v;
                best_k = k;
            }
            k *= 1.0003;
        }
        let ki = best_k * i;
        let acc = gaussian_acceptance_approx(best_k, i, 2.0 * i);
        ok &= (ki - 2.835).abs() <= 0.01 && (acc - 0.234).abs() <= 0.001;
        detail.push_str(&format!("I={i}: kI*={ki:.4}, acc*={acc:.4}; "));
    }
    gate("criterion 2 (kI* = 2.835, acc* = 0.234)", ok, detail);
}

#[test]
fn criterion_3_product_sweep_gaussian() {
    let mut gaps = std::collections::BTreeMap::new();
    let mut ok = true;
    let mut detail = String::new();
    for lambda in [1.05, 1.2, 2.0] {
        let pair = DensityPair::gaussian(lambda).unwrap();
        let cfg = ExperimentConfig {
            k_grid: default_k_grid(&pair, 1000, 10).unwrap(),
            pair,
            n: 1000,
            iterations: 100_000,
            burn_in: 10_000,
            seed: 314,
            replicates: 3,
        };
        let table = run_sweep(&cfg).unwrap();
        let best_k = table.argmax_k();
        let best = table.rows.iter().find(|r| r.k == best_k).unwrap();
        let in_window = (0.18..=0.30).contains(&best.acceptance);
        ok &= in_window;
        let gap = efficiency_vs_theory(&table).unwrap().sup_gap;
        gaps.insert(lambda.to_string(), gap);
        detail.push_str(&format!(
            "lambda={lambda}: argmax k={best_k} acc={:.3} gap={gap:.3}; ",
            best.acceptance
        ));
    }
    ok &= gaps["1.05"] < 0.1;
    ok &= gaps["2"] > gaps["1.05"];
    gate("criterion 3 (Gaussian sweeps)", ok, detail);
}

#[test]
fn criterion_4_product_sweep_t1() {
    let pair = DensityPair::student_t(1).unwrap();
    let cfg = ExperimentConfig {
        k_grid: default_k_grid(&pair, 1000, 10).unwrap(),
        pair,
        n: 1000,
        iterations: 100_000,
        burn_in: 10_000,
        seed: 315,
        replicates: 3,
    };
    let table = run_sweep(&cfg).unwrap();
    let best_k = table.argmax_k();
    // k = 3 and k = 4 are a statistical tie in mean moved, so the argmax gate
    // carries the +-1 window while the acceptance gate pins the k = 3 row
    let at3 = table.rows.iter().find(|r| r.k == 3).unwrap();
    let ok = (2..=4).contains(&best_k) && (at3.acceptance - 0.383).abs() <= 0.05;
    gate(
        "criterion 4 (t1 sweep)",
        ok,
        format!(
            "argmax k = {best_k}, acceptance at k = 3: {:.3}",
            at3.acceptance
        ),
    );
}

#[test]
fn criterion_5_uniform_case() {
    // the acceptance indicator of the uniform pair is exactly Bernoulli,
    // so the chain's binomial standard error is exact
    let pair = DensityPair::uniform_eps(0.05).unwrap();
    let cfg = ChainConfig::new(500, 20, 200_000, 10_000, 316);
    let run = run_chain(&pair, &cfg).unwrap();
    let exact = 1.05_f64.powi(-20);
    let z = (run.row.acceptance - exact).abs() / run.row.acceptance_se;
    let mut ok = z < 3.0;

    let (_, acc) = uniform_case(1e-4).unwrap();
    ok &= (acc - 0.368).abs() < 1e-3;
    gate(
        "criterion 5 (uniform case)",
        ok,
        format!(
            "chain acceptance {:.4} vs (1.05)^-20 = {exact:.4} (z = {z:.2}); acceptance at k_opt = {acc:.4}",
            run.row.acceptance
        ),
    );
}

#[test]
fn criterion_6_weak_limit() {
    let pair = DensityPair::gaussian(1.5).unwrap();
    let k = 8;

    // rate agreement at n = 1000
    let rep = scaled_chain_vs_limit(&pair, 1000, k, 150.0, 317).unwrap();
    let mut ok = rep.chain_vs_limit_z < 3.0 && rep.chain_vs_theory_z < 3.0;
    let mut detail = format!(
        "n=1000: chain {:.3} vs limit {:.3} (z={:.2}) vs theory {:.3} (z={:.2}); ",
        rep.chain_rate.value,
        rep.limit_rate.value,
        rep.chain_vs_limit_z,
        rep.theory_rate.value,
        rep.chain_vs_theory_z
    );

    // Monte Carlo resolution of the weak-limit comparison shrinks as n grows:
    // horizon_n = n/5, i.e. n^2/5 iterations, with the mean |rate gap| over
    // 40 replicates strictly decreasing in n. The stationary rates agree
    // exactly for every n, so the gap is pure estimator error at these budgets.
    let theory = estimate_mean_acceptance(&pair, k, 400_000, 318).scaled(k as f64);
    let mut gaps = Vec::new();
    for (ni, &n) in [100usize, 300, 1000].iter().enumerate() {
        let reps = 40;
        let horizon = n as f64 / 5.0;
        let mean_gap: f64 = (0..reps)
            .map(|r| {
                let (rate, _) =
                    chain_side(&pair, n, k, horizon, 9000 + (ni * reps + r) as u64).unwrap();
                (rate.value - theory.value).abs()
            })
            .sum::<f64>()
            / reps as f64;
        gaps.push(mean_gap);
    }
    ok &= gaps[0] > gaps[1] && gaps[1] > gaps[2];
    detail.push_str(&format!(
        "mean |gap| over n = 100, 300, 1000: {:.4}, {:.4}, {:.4}",
        gaps[0], gaps[1], gaps[2]
    ));
    gate("criterion 6 (weak limit)", ok, detail);
}

// SIR gates: the bundled synthetic data (or Abakaliki when present).
struct SirGates {
    data: indsamp::sir::EpidemicData,
    // (alpha, argmax window)
    fixed_alpha_windows: Vec<(f64, std::ops::RangeInclusive<usize>)>,
    label: &'static str,
}

fn sir_gates() -> SirGates {
    let abakaliki = data_dir().join("abakaliki.txt");
    if abakaliki.exists() {
        SirGates {
            data: load_removal_times(&abakaliki, 120).unwrap(),
            fixed_alpha_windows: vec![(1.0, 6..=12), (3.0, 14..=20), (10.0, 30..=30)],
            label: "Abakaliki",
        }
    } else {
        // windows observed on the bundled fixture; see README for how the
        // dataset was generated and calibrated
        SirGates {
            data: load_removal_times(data_dir().join("sir_removals_sim.txt"), 120).unwrap(),
            fixed_alpha_windows: sim_fixture_windows(),
            label: "bundled synthetic outbreak",
        }
    }
}

// Argmax-k windows for the bundled fixture, centered on the optima of
// heavily replicate-averaged sweeps (the mean-moved curves have flat tops,
// so single-sweep argmaxes scatter): alpha = 1 peaks at k = 10, alpha = 3 at
// k = 18, and alpha = 10 at the top of the grid (acceptance above 23.4%
// everywhere).
fn sim_fixture_windows() -> Vec<(f64, std::ops::RangeInclusive<usize>)> {
    vec![(1.0, 7..=13), (3.0, 15..=21), (10.0, 28..=30)]
}

// Average the acceptance column of `reps` independent sweeps, mirroring the
// replicate design of the product experiments.
fn averaged_sir_sweep(
    data: &indsamp::sir::EpidemicData,
    mode: AlphaMode,
    k_grid: &[usize],
    reps: u64,
    seed: u64,
) -> indsamp::TuningTable {
    let mut acc = vec![0.0f64; k_grid.len()];
    for rep in 0..reps {
        let base = SirRunConfig {
            stream: 1000 * rep,
            ..SirRunConfig::new(mode, 1, 100_000, seed + rep)
        };
        let table = sir::sweep_k(data, &base, k_grid).unwrap();
        for (i, row) in table.rows.iter().enumerate() {
            acc[i] += row.acceptance / reps as f64;
        }
    }
    let rows = k_grid
        .iter()
        .zip(&acc)
        .map(|(&k, &a)| indsamp::TuningRow::new(k, a, 0.0))
        .collect();
    indsamp::diagnostics::tuning_summary(rows).unwrap()
}

#[test]
fn criterion_7_sir_tuning() {
    let gates = sir_gates();
    let data = &gates.data;
    let m = data.m();
    let k_grid: Vec<usize> = (1..=m).collect();
    let mut ok = true;
    let mut detail = format!("{} (m = {m}): ", gates.label);

    for (alpha, window) in &gates.fixed_alpha_windows {
        let table = averaged_sir_sweep(data, AlphaMode::Fixed(*alpha), &k_grid, 3, 319);
        let best = table.argmax_k();
        ok &= window.contains(&best);
        // the k nearest 23.4% acceptance attains >= 90% of the best efficiency
        let near = table.row_nearest_acceptance(0.234);
        let eff = near.normalized_efficiency.unwrap();
        ok &= eff >= 0.9;
        detail.push_str(&format!(
            "alpha={alpha}: argmax={best} (window {:?}), eff@23.4%={eff:.2}; ",
            window
        ));
    }

    // unknown alpha: acceptance above 23.4% everywhere, so k = m is optimal
    let table = averaged_sir_sweep(data, AlphaMode::Unknown, &k_grid, 3, 320);
    let min_acc = table
        .rows
        .iter()
        .map(|r| r.acceptance)
        .fold(f64::INFINITY, f64::min);
    ok &= min_acc > 0.234;
    detail.push_str(&format!("unknown alpha: min acceptance {min_acc:.3}"));
    gate("criterion 7 (SIR tuning)", ok, detail);
}

#[test]
fn criterion_8_bdm_shape() {
    // Table 1 fixture validates exactly
    let tb = load_clusters(data_dir().join("tb_clusters.txt")).unwrap();
    let mut ok = tb.sample_size() == 473 && tb.singleton_count() == 282;
    let mut detail = format!("Table fixture: {} samples; ", tb.sample_size());

    let data = load_clusters(data_dir().join("bdm_clusters_sim.txt")).unwrap();
    let k_grid = vec![30usize, 120, 480, 2000, 6000];
    let mut base = BdmRunConfig::new(6000, 500, 1, 100_000, 321);
    base.burn_in = 10_000;
    base.k_v = data.n_clusters();
    base.scales = (0.06, 0.06);
    let (table, ess) = bdm::sweep_k(&data, &base, &k_grid).unwrap();

    // acceptance monotone non-increasing within 3 SE
    for w in table.rows.windows(2) {
        let se = (w[0].acceptance_se.powi(2) + w[1].acceptance_se.powi(2)).sqrt();
        ok &= w[1].acceptance <= w[0].acceptance + 3.0 * se;
    }
    // mean components moved non-decreasing within 3 SE
    for w in table.rows.windows(2) {
        let se = ((w[0].k as f64 * w[0].acceptance_se).powi(2)
            + (w[1].k as f64 * w[1].acceptance_se).powi(2))
        .sqrt();
        ok &= w[1].mean_moved >= w[0].mean_moved - 3.0 * se;
    }
    detail.push_str(&format!(
        "acceptance {:?}; ",
        table
            .rows
            .iter()
            .map(|r| (r.k, (r.acceptance * 1e3).round() / 1e3))
            .collect::<Vec<_>>()
    ));

    // ESS plateau at the largest k against one third of it, with the single
    // ESS estimates tightened by averaging over replicate chains (an ESS
    // read off one desk-size chain carries ~30-40% estimator noise)
    let mean_ess = |k: usize, first: EssReport, first_d: EssReport| {
        let mut a = vec![first.ess];
        let mut d = vec![first_d.ess];
        for (i, seed) in (3211u64..3218).enumerate() {
            let cfg = BdmRunConfig {
                k,
                stream: 50 + i as u64,
                seed,
                ..base.clone()
            };
            let run = bdm::run_bdm_mcmc(&data, &cfg).unwrap();
            a.push(run.ess_a.ess);
            d.push(run.ess_d.ess);
        }
        (
            a.iter().sum::<f64>() / a.len() as f64,
            d.iter().sum::<f64>() / d.len() as f64,
        )
    };
    let find = |k: usize| ess.iter().find(|&&(kk, _, _)| kk == k).unwrap();
    let &(_, ea_hi, ed_hi) = find(6000);
    let &(_, ea_lo, ed_lo) = find(2000);
    let (a_hi, d_hi) = mean_ess(6000, ea_hi, ed_hi);
    let (a_lo, d_lo) = mean_ess(2000, ea_lo, ed_lo);
    ok &= (a_hi - a_lo).abs() <= 0.25 * a_lo;
    ok &= (d_hi - d_lo).abs() <= 0.25 * d_lo;
    detail.push_str(&format!(
        "mean ESS(a) k=6000: {a_hi:.0} vs k=2000: {a_lo:.0}; mean ESS(d): {d_hi:.0} vs {d_lo:.0}"
    ));
    gate("criterion 8 (BDM shape)", ok, detail);
}

#[test]
fn criterion_9_property_suites() {
    let mut ok = true;
    let mut detail = String::new();

    // stationarity KS at n = 2 over 1e6 steps
    let pair = DensityPair::gaussian(1.5).unwrap();
    for k in [1usize, 2] {
        let cfg = ChainConfig {
            trace_thin: Some(50),
            ..ChainConfig::new(2, k, 1_000_000, 0, 322)
        };
        let run = run_chain(&pair, &cfg).unwrap();
        let mut values = run.trace.unwrap().values;
        let n = values.len();
        let d = ks_statistic(&mut values, normal_cdf);
        let p = ks_pvalue(d, n);
        ok &= p > 0.01;
        detail.push_str(&format!("KS(k={k}) p={p:.3}; "));
    }

    // likelihood-cancellation identity at 1e-10
    let sir_ok = sir_cancellation_identity();
    ok &= sir_ok;
    detail.push_str(&format!("cancellation <= 1e-10: {sir_ok}; "));

    // simulate_bdm purity and unused-tail invariance (exact); the embedded
    // chain can go extinct, so scan streams for a run that reaches the target
    let params = bdm::BdmParams::new(0.7, 0.12).unwrap();
    use rand::Rng;
    let mut rng = indsamp::rng::stream_rng(323, 0);
    let (u, w, pop) = (0..50)
        .find_map(|stream| {
            let mut rng = indsamp::rng::stream_rng(323, stream);
            let u: Vec<f64> = (0..4000).map(|_| rng.random()).collect();
            let w: Vec<f64> = (0..4000).map(|_| rng.random()).collect();
            let pop = bdm::simulate_bdm(&params, &u, &w, 150).population().cloned()?;
            Some((u, w, pop))
        })
        .expect("a surviving run");
    let a = bdm::simulate_bdm(&params, &u, &w, 150);
    let b = bdm::simulate_bdm(&params, &u, &w, 150);
    let purity = a == b && a.population() == Some(&pop);
    let tail = {
        let mut u2 = u.clone();
        let mut w2 = w.clone();
        for i in pop.events_used..u2.len() {
            u2[i] = 1.0 - u2[i];
            w2[i] = 0.99 - 0.98 * w2[i];
        }
        bdm::simulate_bdm(&params, &u2, &w2, 150) == a
    };
    ok &= purity && tail;
    detail.push_str(&format!("purity: {purity}, tail invariance: {tail}; "));

    // observation estimator vs exhaustive enumeration on the toy population
    let toy_ok = bdm_toy_estimator_unbiased();
    ok &= toy_ok;
    detail.push_str(&format!("toy estimator within 3 SE: {toy_ok}; "));

    // ESS calibration on AR(1)
    let phi: f64 = 0.9;
    let noise = (1.0 - phi * phi).sqrt();
    let mut x = 0.0;
    use rand_distr::Distribution;
    let normal = rand_distr::StandardNormal;
    let xs: Vec<f64> = (0..100_000)
        .map(|_| {
            let z: f64 = normal.sample(&mut rng);
            x = phi * x + noise * z;
            x
        })
        .collect();
    let ess = indsamp::diagnostics::effective_sample_size(&indsamp::Trace::new("ar1", xs)).unwrap();
    let ar1_ok = (ess.iact - 19.0).abs() < 0.2 * 19.0;
    ok &= ar1_ok;
    detail.push_str(&format!("AR(1) iact {:.1} vs 19", ess.iact));

    gate("criterion 9 (property suites)", ok, detail);
}

fn sir_cancellation_identity() -> bool {
    use indsamp::math::gamma_logpdf;
    use rand::Rng;
    use rand_distr::Distribution;
    let data = sir::EpidemicData::new(vec![4.0, 6.0, 7.5, 9.0, 11.0], 60).unwrap();
    let params = sir::SirParams::new(1.5, 2.0, 0.4).unwrap();
    let state = sir::SirAugmentedState::new(&data, vec![1.0, 3.0, 5.0, 6.0, 8.0], params).unwrap();
    let mut rng = indsamp::rng::stream_rng(324, 0);
    let period = rand_distr::Gamma::new(2.0, 1.0 / 0.4).unwrap();
    for _ in 0..200 {
        let k = rng.random_range(1..=data.m());
        let mut indices: Vec<usize> = (0..data.m()).collect();
        for i in 0..k {
            let j = rng.random_range(i..data.m());
            indices.swap(i, j);
        }
        indices.truncate(k);
        let new_times: Vec<f64> = indices
            .iter()
            .map(|&j| data.removal_times()[j] - period.sample(&mut rng))
            .collect();
        let (fast, _, _) = sir::block_log_ratio_parts(&state, &data, &indices, &new_times);
        let mut proposed = state.infection_times().to_vec();
        for (&j, &t) in indices.iter().zip(&new_times) {
            proposed[j] = t;
        }
        let full_new = sir::sir_log_likelihood(&proposed, &data, &state.params).unwrap();
        let full_old =
            sir::sir_log_likelihood(state.infection_times(), &data, &state.params).unwrap();
        let mut correction = 0.0;
        for (&j, &t) in indices.iter().zip(&new_times) {
            let r = data.removal_times()[j];
            correction += gamma_logpdf(r - state.infection_times()[j], 2.0, 0.4)
                - gamma_logpdf(r - t, 2.0, 0.4);
        }
        let slow = full_new - full_old + correction;
        if (fast.is_finite() || slow.is_finite())
            && (fast - slow).abs() > 1e-10 {
                return false;
            }
    }
    true
}

fn bdm_toy_estimator_unbiased() -> bool {
    use rand::Rng as _;
    // population {3, 2, 1}, sample 4, observed partition {2, 1, 1}:
    // exhaustive enumeration gives 9 of the 15 subsets
    let pop = bdm::SimOutcome::Population(bdm::BdmPopulation {
        type_counts: vec![3, 2, 1],
        total: 6,
        events_used: 0,
        born: 6,
        died: 0,
    });
    let data = bdm::ClusterData::new(vec![(2, 1), (1, 2)]).unwrap();
    let exact = 9.0 / 15.0;
    let mut rng = indsamp::rng::stream_rng(325, 0);
    let reps = 100_000;
    let mut values = Vec::with_capacity(reps);
    for _ in 0..reps {
        let v: Vec<f64> = (0..data.n_clusters()).map(|_| rng.random()).collect();
        values.push(bdm::estimate_obs_loglik(&pop, &data, &v).log_prob.exp());
    }
    let (mean, se) = indsamp::math::mean_and_se(&values);
    (mean - exact).abs() < 3.0 * se + 1e-9
}
