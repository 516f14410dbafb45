//! Desk-scale tuning sweep for a Gaussian proposal on the product target.
//!
//! Runs the k-grid sweep at n = 1000, prints the tuning table, and shows the
//! observed normalized efficiency against the theoretical curve. The best
//! row should sit near the 23.4% acceptance optimum.
//!
//! ```bash
//! cargo run --release --example product_sweep [lambda]
//! ```

use indsamp::densities::DensityPair;
use indsamp::product::{default_k_grid, efficiency_vs_theory, run_sweep, ExperimentConfig};

fn main() {
    let lambda: f64 = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("lambda must be a number"))
        .unwrap_or(1.2);
    let pair = DensityPair::gaussian(lambda).expect("lambda >= 1");
    let n = 1000;
    let cfg = ExperimentConfig {
        k_grid: default_k_grid(&pair, n, 10).unwrap(),
        pair,
        n,
        iterations: 100_000,
        burn_in: 10_000,
        seed: 20_26,
        replicates: 3,
    };
    println!("pair {}, n = {n}, grid {:?}", cfg.pair.label(), cfg.k_grid);

    let table = run_sweep(&cfg).unwrap();
    println!(
        "{:>6} {:>10} {:>10} {:>12} {:>10} {:>10}",
        "k", "accept", "se", "mean moved", "norm eff", "theory"
    );
    for r in &table.rows {
        println!(
            "{:>6} {:>10.4} {:>10.4} {:>12.2} {:>10.3} {:>10}",
            r.k,
            r.acceptance,
            r.acceptance_se,
            r.mean_moved,
            r.normalized_efficiency.unwrap(),
            r.theoretical_efficiency
                .map(|t| format!("{t:.3}"))
                .unwrap_or_else(|| "-".into()),
        );
    }
    let best_k = table.argmax_k();
    let best = table.rows.iter().find(|r| r.k == best_k).unwrap();
    println!(
        "\nbest k = {best_k} with acceptance {:.3} (the theory predicts about 0.234)",
        best.acceptance
    );
    let gap = efficiency_vs_theory(&table).unwrap();
    println!(
        "largest |observed - theoretical| normalized efficiency: {:.3}",
        gap.sup_gap
    );
}
