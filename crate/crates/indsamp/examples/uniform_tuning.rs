//! The exactly solvable uniform case: U(0,1) target, U(0, 1+eps) proposal.
//!
//! The acceptance rate of a k-block move is (1+eps)^{-k} exactly, the
//! continuous-k optimum is k = 1/log(1+eps), and the acceptance there is
//! e^{-1} = 0.368 -- a bounded-weight pair with infinite discrepancy where
//! tuning still works, just not at 23.4%.
//!
//! ```bash
//! cargo run --release --example uniform_tuning
//! ```

use indsamp::densities::DensityPair;
use indsamp::sampler::{run_chain, ChainConfig};
use indsamp::scaling::{estimate_mean_acceptance, uniform_case};

fn main() {
    let eps = 0.05;
    let pair = DensityPair::uniform_eps(eps).unwrap();
    let (k_opt, acc_opt) = uniform_case(eps).unwrap();
    println!("eps = {eps}: continuous optimum k = {k_opt:.2}, acceptance there = {acc_opt:.4}");

    println!("\nstationary estimator vs the closed form (1+eps)^-k:");
    println!("{:>4} {:>12} {:>12} {:>10}", "k", "estimate", "exact", "z");
    for k in [1usize, 5, 10, 20, 40] {
        let est = estimate_mean_acceptance(&pair, k, 400_000, 7);
        let exact = (1.0 + eps).powi(-(k as i32));
        let z = (est.value - exact) / est.std_error;
        println!("{k:>4} {:>12.4} {exact:>12.4} {z:>10.2}", est.value);
    }

    println!("\nfull chain at n = 500 (every proposed component must land in [0,1]):");
    for k in [10usize, 20usize] {
        let cfg = ChainConfig::new(500, k, 200_000, 10_000, 1);
        let run = run_chain(&pair, &cfg).unwrap();
        let exact = (1.0 + eps).powi(-(k as i32));
        println!(
            "k = {k}: chain acceptance {:.4} (exact {:.4}, se {:.4})",
            run.row.acceptance, exact, run.row.acceptance_se
        );
    }

    println!("\nas eps -> 0 the optimal acceptance converges to exp(-1):");
    for eps in [0.5, 0.1, 0.01, 1e-4] {
        let (k, a) = uniform_case(eps).unwrap();
        println!("eps = {eps:>7}: k_opt = {k:>10.2}, acceptance = {a:.6}");
    }
}
