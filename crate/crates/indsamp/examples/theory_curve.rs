//! Discrepancy table and tuning predictions for the standard proposals.
//!
//! Computes the discrepancy `I` for a range of Gaussian and Student-t
//! proposals against the standard Gaussian target, the predicted optimal
//! block size `k = 2.835/I`, and the predicted acceptance rate there; then
//! writes the normalized theoretical efficiency curve to CSV.
//!
//! ```bash
//! cargo run --release --example theory_curve
//! ```

use indsamp::densities::{discrepancy_gaussian, discrepancy_t, DensityPair};
use indsamp::io::write_theory_curve_csv;
use indsamp::scaling::{
    gaussian_acceptance_approx, optimal_k, theoretical_efficiency, uniform_case,
};

fn main() {
    println!("Gaussian proposals N(0, lambda^2), target N(0,1)");
    println!(
        "{:>8} {:>10} {:>10} {:>12}",
        "lambda", "I", "k_opt", "acc(k_opt)"
    );
    for lambda in [1.05, 1.1, 1.2, 1.5, 2.0] {
        let i = discrepancy_gaussian(lambda).unwrap().value;
        let k = optimal_k(i, 100_000).unwrap();
        let acc = gaussian_acceptance_approx(k as f64, i, 2.0 * i);
        println!("{lambda:>8} {i:>10.4} {k:>10} {acc:>12.3}");
    }

    println!("\nStudent-t proposals, target N(0,1)  (10^6 Monte Carlo samples)");
    println!(
        "{:>8} {:>10} {:>10} {:>12}",
        "nu", "I", "k_opt", "acc(k_opt)"
    );
    for nu in [1u32, 2, 5, 10, 20] {
        let r = discrepancy_t(nu, 1_000_000, 7).unwrap();
        if r.is_divergent() {
            println!("{nu:>8} {:>10} {:>10} {:>12}", "inf", "-", "-");
        } else {
            let k = optimal_k(r.value, 100_000).unwrap();
            let acc = gaussian_acceptance_approx(k as f64, r.value, 2.0 * r.value);
            println!("{nu:>8} {:>10.4} {k:>10} {acc:>12.3}", r.value);
        }
    }

    println!("\nUniform pair U(0,1) target, U(0,1+eps) proposal (I = inf, exact theory)");
    println!("{:>8} {:>10} {:>14}", "eps", "k_opt", "acc(k_opt)");
    for eps in [0.5, 0.1, 0.01, 0.001] {
        let (k, acc) = uniform_case(eps).unwrap();
        println!("{eps:>8} {k:>10.2} {acc:>14.4}");
    }

    // the pair abstraction exposes everything the samplers need
    let pair = DensityPair::parse("gaussian:1.2").unwrap();
    println!(
        "\nlog weight of {} at x = 0: {:.4}",
        pair.label(),
        pair.log_weight(0.0).unwrap()
    );

    let points: Vec<(f64, f64)> = (1..1000)
        .map(|i| {
            let a = i as f64 / 1000.0;
            (a, theoretical_efficiency(a).unwrap())
        })
        .collect();
    let path = std::env::temp_dir().join("indsamp_theory_curve.csv");
    write_theory_curve_csv(&points, &path).unwrap();
    println!("wrote the efficiency curve to {}", path.display());
}
