//! Regenerates the bundled synthetic datasets under `data/`.
//!
//! The SIR removal times come from the crate's own epidemic simulator and
//! the BDM cluster sample from the crate's own branching-process simulator,
//! both with the seeds printed below, so the fixtures can be reproduced
//! exactly. Run with:
//!
//! ```bash
//! cargo run --release --example generate_fixtures
//! ```

use std::fmt::Write as _;
use std::path::Path;

use indsamp::bdm::{sample_clusters_from_population, simulate_bdm, BdmParams};
use indsamp::rng::stream_rng;
use indsamp::sir::simulate_epidemic;
use rand::Rng;

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    std::fs::create_dir_all(&dir).unwrap();

    // --- SIR removal times -------------------------------------------------
    // Population 120 with a single introductory case, infection rate 0.14,
    // Gamma(30, 3) infectious periods (mean 10, low variance). Seeds are
    // scanned for a completed outbreak with exactly 30 removals so the file
    // mirrors the size of the classic smallpox data set.
    let (population, beta, alpha, delta) = (120usize, 0.14, 30.0, 3.0);
    let mut chosen = None;
    for seed in 0..20_000u64 {
        let data = simulate_epidemic(population, beta, alpha, delta, seed).unwrap();
        if data.m() == 30 {
            chosen = Some((seed, data));
            break;
        }
    }
    let (seed, data) = chosen.expect("a seed with exactly 30 removals");
    let mut text = String::new();
    let _ = writeln!(text, "# synthetic SIR removal times (one per line, days)");
    let _ = writeln!(
        text,
        "# generated by examples/generate_fixtures.rs: N = {population}, beta = {beta}, \
         infectious period ~ Gamma({alpha}, {delta}), seed = {seed}"
    );
    let _ = writeln!(
        text,
        "# m = {} removals; use with --population {population}",
        data.m()
    );
    // shift so the first removal is at time 0, matching the usual convention
    let t0 = data.removal_times()[0];
    for &r in data.removal_times() {
        let _ = writeln!(text, "{}", r - t0);
    }
    let path = dir.join("sir_removals_sim.txt");
    std::fs::write(&path, &text).unwrap();
    println!("wrote {} (seed {seed}, m = {})", path.display(), data.m());

    // --- BDM cluster sample ------------------------------------------------
    // One population simulated to 500 individuals at (a, d) = (0.75, 0.1),
    // then a uniform without-replacement sample of 120 individuals clustered
    // by genotype.
    let truth = BdmParams::new(0.75, 0.1).unwrap();
    let (sim_seed, sample_seed, n_target, sample_size) = (11u64, 12u64, 500u32, 120usize);
    let mut latent_rng = stream_rng(sim_seed, 0);
    let pop = loop {
        let u: Vec<f64> = (0..8000).map(|_| latent_rng.random()).collect();
        let w: Vec<f64> = (0..8000).map(|_| latent_rng.random()).collect();
        if let Some(p) = simulate_bdm(&truth, &u, &w, n_target).population().cloned() {
            break p;
        }
    };
    let mut sample_rng = stream_rng(sample_seed, 0);
    let clusters = sample_clusters_from_population(&pop, sample_size, &mut sample_rng).unwrap();
    let mut text = String::new();
    let _ = writeln!(
        text,
        "# synthetic genotype cluster sample: size,count per line"
    );
    let _ = writeln!(
        text,
        "# generated by examples/generate_fixtures.rs: BDM a = {}, d = {}, N_T = {n_target}, \
         sample = {sample_size}, seeds = ({sim_seed}, {sample_seed})",
        truth.a, truth.d
    );
    let _ = writeln!(
        text,
        "# population had {} types over {} events",
        pop.n_types(),
        pop.events_used
    );
    for &(size, count) in clusters.clusters() {
        let _ = writeln!(text, "{size},{count}");
    }
    let path = dir.join("bdm_clusters_sim.txt");
    std::fs::write(&path, &text).unwrap();
    println!(
        "wrote {} ({} clusters over {} samples)",
        path.display(),
        clusters.n_clusters(),
        clusters.sample_size()
    );
}
