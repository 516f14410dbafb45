//! Pseudo-marginal tuning for the birth-death-mutation model.
//!
//! Validates the bundled tuberculosis cluster table (473 samples), then runs
//! a desk-scale block-size sweep on the synthetic cluster fixture: the
//! acceptance rate falls with k while the mean number of components moved
//! keeps growing, and the effective sample sizes of a and d level off -- the
//! regime where the 23.4% rule stops telling the whole story.
//!
//! ```bash
//! cargo run --release --example bdm_clusters
//! ```

use indsamp::bdm::{run_bdm_mcmc, sweep_k, BdmRunConfig};
use indsamp::cli::bdm_sweep_grid;
use indsamp::io::load_clusters;
use std::path::Path;

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let tb = load_clusters(dir.join("tb_clusters.txt")).unwrap();
    println!(
        "tuberculosis table: {} samples in {} clusters ({} singletons)",
        tb.sample_size(),
        tb.n_clusters(),
        tb.singleton_count()
    );

    let data = load_clusters(dir.join("bdm_clusters_sim.txt")).unwrap();
    println!(
        "\ndesk fixture: {} samples in {} clusters",
        data.sample_size(),
        data.n_clusters()
    );

    // one short run first: parameters and likelihood behave
    let mut cfg = BdmRunConfig::new(6000, 500, 600, 20_000, 3);
    cfg.burn_in = 2_000;
    cfg.k_v = data.n_clusters();
    let run = run_bdm_mcmc(&data, &cfg).unwrap();
    println!(
        "single run at k = 600: acceptance {:.3}, final (a, d) = ({:.3}, {:.3})",
        run.row.acceptance, run.final_params.a, run.final_params.d
    );

    // the sweep
    let grid = bdm_sweep_grid(6000);
    let mut base = BdmRunConfig::new(6000, 500, 1, 50_000, 7);
    base.burn_in = 5_000;
    base.k_v = data.n_clusters();
    println!("\nsweeping k over {grid:?} (50k iterations each)...");
    let (table, ess) = sweep_k(&data, &base, &grid).unwrap();
    println!(
        "{:>6} {:>10} {:>12} {:>10} {:>10}",
        "k", "accept", "mean moved", "ESS(a)", "ESS(d)"
    );
    for (row, &(_, ea, ed)) in table.rows.iter().zip(&ess) {
        println!(
            "{:>6} {:>10.4} {:>12.1} {:>10.1} {:>10.1}",
            row.k, row.acceptance, row.mean_moved, ea.ess, ed.ess
        );
    }
    println!(
        "\nmean moved keeps rising with k while acceptance drops; ESS flattens well before that"
    );
}
