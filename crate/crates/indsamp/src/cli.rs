//! The `indsamp` command line: subcommands `theory`, `product`, `jumplim`,
//! `sir` and `bdm`, each reading an optional flat `key = value` config file
//! that individual flags override, and writing CSVs plus a `manifest` that
//! echoes the fully resolved configuration.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or config error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::densities::{DensityPair, PairKind};
use crate::diagnostics::tuning_summary;
use crate::sir::AlphaMode;
use crate::{bdm, io, product, scaling, sir, Error, Result};

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "INDSAMP_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scale {
    /// Desk-size runs that finish in minutes.
    Desk,
    /// Full-size runs matching the published experiment sizes.
    Paper,
}

#[derive(Debug, Parser)]
#[command(
    name = "indsamp",
    version,
    about = "Block independence-sampler MCMC tuning experiments"
)]
struct Cli {
    /// Flat `key = value` config file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (default: $INDSAMP_OUT_DIR or ./out).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Master seed for all RNG streams.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Experiment scale.
    #[arg(long, global = true, value_enum)]
    scale: Option<Scale>,

    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the discrepancy I, the optimal block size and the predicted
    /// acceptance rate for a density pair, and emit the efficiency curve.
    Theory(TheoryArgs),
    /// k-grid tuning sweep on an i.i.d. product target.
    Product(ProductArgs),
    /// Compare the scaled chain against the limiting jump process.
    Jumplim(JumplimArgs),
    /// SIR epidemic inference with block-updated infection times.
    Sir(SirArgs),
    /// Birth-death-mutation pseudo-marginal inference.
    Bdm(BdmArgs),
}

#[derive(Debug, Args)]
struct TheoryArgs {
    /// Density pair, e.g. gaussian:1.2, t:5, uniform_eps:0.05.
    #[arg(long)]
    pair: Option<String>,
    /// Points on the efficiency curve CSV.
    #[arg(long)]
    curve_points: Option<usize>,
}

#[derive(Debug, Args)]
struct ProductArgs {
    #[arg(long)]
    pair: Option<String>,
    /// Number of components of the product target.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    iters: Option<u64>,
    #[arg(long)]
    burnin: Option<u64>,
    /// Replicate chains per grid point.
    #[arg(long)]
    reps: Option<usize>,
    /// Number of k-grid points (ignored when --k is given).
    #[arg(long)]
    grid_points: Option<usize>,
    /// Explicit comma-separated k grid.
    #[arg(long)]
    k: Option<String>,
}

#[derive(Debug, Args)]
struct JumplimArgs {
    #[arg(long)]
    pair: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Block size (default: the optimal k for the pair).
    #[arg(long)]
    k: Option<usize>,
    /// Time horizon of the comparison (rescaled clock).
    #[arg(long)]
    horizon: Option<f64>,
    /// Monte Carlo budget per thinning acceptance.
    #[arg(long)]
    hstar_samples: Option<usize>,
}

#[derive(Debug, Args)]
struct SirArgs {
    /// Removal-times file: one nonnegative real per line.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Population size N.
    #[arg(long)]
    population: Option<usize>,
    /// Gamma shape of the infectious period: a number, or `unknown`.
    #[arg(long)]
    alpha: Option<String>,
    /// Block size: an integer, or `sweep` for the full 1..=m grid.
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    iters: Option<u64>,
    #[arg(long)]
    burnin: Option<u64>,
    #[arg(long)]
    trace_thin: Option<u64>,
}

#[derive(Debug, Args)]
struct BdmArgs {
    /// Cluster file: `size,count` per line.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Population size at which the process is observed.
    #[arg(long)]
    ntarget: Option<u32>,
    /// Fixed length of the latent uniform vectors.
    #[arg(long)]
    nlatent: Option<usize>,
    /// Replicates inside the observation estimator.
    #[arg(long)]
    nrep: Option<usize>,
    /// Block size for u/w: an integer, or `sweep`.
    #[arg(long)]
    k: Option<String>,
    /// Block size for v (default: one replicate's worth).
    #[arg(long)]
    kv: Option<usize>,
    #[arg(long)]
    iters: Option<u64>,
    #[arg(long)]
    burnin: Option<u64>,
    #[arg(long)]
    trace_thin: Option<u64>,
}

/// Resolved key -> value settings, flag > config file > scale default.
#[derive(Debug)]
struct Settings {
    values: BTreeMap<String, String>,
    subcommand: &'static str,
}

impl Settings {
    fn resolve(
        subcommand: &'static str,
        allowed: &[&str],
        config: Option<&Path>,
        flags: Vec<(&str, Option<String>)>,
        defaults: Vec<(&str, String)>,
    ) -> Result<Self> {
        let mut values: BTreeMap<String, String> = defaults
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        if let Some(path) = config {
            for (key, value) in parse_config_file(path)? {
                if !allowed.contains(&key.as_str()) {
                    return Err(Error::config(format!(
                        "unknown key '{key}' in {} (allowed: {})",
                        path.display(),
                        allowed.join(", ")
                    )));
                }
                values.insert(key, value);
            }
        }
        for (key, flag) in flags {
            if let Some(v) = flag {
                values.insert(key.to_string(), v);
            }
        }
        Ok(Settings { values, subcommand })
    }

    fn get(&self, key: &str) -> Result<&str> {
        self.values
            .get(key)
            .map(|s| s.as_str())
            .ok_or_else(|| Error::config(format!("missing required key '{key}'")))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.get(key)?;
        raw.parse()
            .map_err(|_| Error::config(format!("bad value '{raw}' for key '{key}'")))
    }

    /// Echo the resolved configuration next to the outputs.
    fn write_manifest(&self, out_dir: &Path) -> Result<()> {
        let mut text = format!(
            "command = {}\nversion = {} {}\n",
            self.subcommand,
            env!("CARGO_PKG_NAME"),
            env!("CARGO_PKG_VERSION")
        );
        for (k, v) in &self.values {
            let _ = writeln!(text, "{k} = {v}");
        }
        let path = out_dir.join("manifest");
        fs::write(&path, text).map_err(|e| Error::io(path, e))
    }
}

/// Parse a flat `key = value` config file with `#` comments.
pub fn parse_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: format!("expected 'key = value', got '{line}'"),
        })?;
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

/// Run the CLI on the given arguments and return the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version through this path too
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_)
                | Error::Parse { .. }
                | Error::Io { .. }
                | Error::InvalidArgument(_)
                | Error::UnboundedWeight(_) => 2,
                _ => 1,
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        if t > 0 {
            // ignore failure: the global pool can only be installed once
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global();
        }
    }
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    let scale = cli.scale.unwrap_or(Scale::Desk);
    let seed = cli.seed;
    let config = cli.config.as_deref();

    match cli.command {
        Command::Theory(args) => theory(args, config, seed, &out_dir),
        Command::Product(args) => product_cmd(args, config, seed, scale, &out_dir),
        Command::Jumplim(args) => jumplim(args, config, seed, scale, &out_dir),
        Command::Sir(args) => sir_cmd(args, config, seed, scale, &out_dir),
        Command::Bdm(args) => bdm_cmd(args, config, seed, scale, &out_dir),
    }
}

fn global_defaults(seed: Option<u64>, scale: Scale) -> Vec<(&'static str, String)> {
    vec![
        ("seed", seed.unwrap_or(20_26).to_string()),
        (
            "scale",
            match scale {
                Scale::Desk => "desk".into(),
                Scale::Paper => "paper".into(),
            },
        ),
    ]
}

fn sanitize(label: &str) -> String {
    label.replace(':', "_").replace('.', "p")
}

fn theory(
    args: TheoryArgs,
    config: Option<&Path>,
    seed: Option<u64>,
    out_dir: &Path,
) -> Result<()> {
    let mut defaults = global_defaults(seed, Scale::Desk);
    defaults.push(("curve_points", "101".into()));
    let settings = Settings::resolve(
        "theory",
        &["pair", "curve_points", "seed", "scale"],
        config,
        vec![
            ("pair", args.pair),
            ("curve_points", args.curve_points.map(|v| v.to_string())),
        ],
        defaults,
    )?;
    settings.write_manifest(out_dir)?;

    let pair = DensityPair::parse(settings.get("pair")?)?;
    let seed: u64 = settings.parse("seed")?;
    let disc = pair.discrepancy(1_000_000, seed)?;
    println!("pair = {}", pair.label());
    match disc.method {
        crate::densities::DiscrepancyMethod::Divergent => println!("I = inf (divergent)"),
        crate::densities::DiscrepancyMethod::ClosedForm => println!("I = {:.4}", disc.value),
        crate::densities::DiscrepancyMethod::MonteCarlo => {
            println!("I = {:.4} (se {:.1e})", disc.value, disc.std_error)
        }
    }
    if disc.value == 0.0 {
        println!("optimal k = n (identical target and proposal accept everything)");
    } else if disc.is_divergent() {
        println!("optimal k = 1 by the 2.835/I rule (I = inf)");
        if let PairKind::UniformEps { eps } = pair.kind() {
            let (k_opt, acc) = scaling::uniform_case(eps)?;
            println!("uniform special case: k_opt = {k_opt:.2}, acceptance at k_opt = {acc:.4}");
        }
    } else {
        let k = scaling::optimal_k(disc.value, usize::MAX)?;
        let acc = scaling::gaussian_acceptance_approx(k as f64, disc.value, 2.0 * disc.value);
        println!("optimal k = {k}");
        println!("predicted acceptance at optimal k = {acc:.3}");
    }

    let points: usize = settings.parse("curve_points")?;
    let curve: Vec<(f64, f64)> = (1..points)
        .map(|i| {
            let a = i as f64 / points as f64;
            Ok((a, scaling::theoretical_efficiency(a)?))
        })
        .collect::<Result<_>>()?;
    let path = out_dir.join("theory_curve.csv");
    io::write_theory_curve_csv(&curve, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn product_cmd(
    args: ProductArgs,
    config: Option<&Path>,
    seed: Option<u64>,
    scale: Scale,
    out_dir: &Path,
) -> Result<()> {
    let mut defaults = global_defaults(seed, scale);
    match scale {
        Scale::Desk => {
            defaults.push(("n", "1000".into()));
            defaults.push(("iters", "100000".into()));
            defaults.push(("burnin", "10000".into()));
            defaults.push(("reps", "3".into()));
            defaults.push(("grid_points", "10".into()));
        }
        Scale::Paper => {
            defaults.push(("n", "1000".into()));
            defaults.push(("iters", "1000000".into()));
            defaults.push(("burnin", "0".into()));
            defaults.push(("reps", "1".into()));
            defaults.push(("grid_points", "50".into()));
        }
    }
    let settings = Settings::resolve(
        "product",
        &[
            "pair",
            "n",
            "iters",
            "burnin",
            "reps",
            "grid_points",
            "k",
            "seed",
            "scale",
        ],
        config,
        vec![
            ("pair", args.pair),
            ("n", args.n.map(|v| v.to_string())),
            ("iters", args.iters.map(|v| v.to_string())),
            ("burnin", args.burnin.map(|v| v.to_string())),
            ("reps", args.reps.map(|v| v.to_string())),
            ("grid_points", args.grid_points.map(|v| v.to_string())),
            ("k", args.k),
        ],
        defaults,
    )?;
    settings.write_manifest(out_dir)?;

    let pair = DensityPair::parse(settings.get("pair")?)?;
    let n: usize = settings.parse("n")?;
    let k_grid = match settings.values.get("k") {
        Some(spec) => spec
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::config(format!("bad k value '{s}'")))
            })
            .collect::<Result<Vec<usize>>>()?,
        None => product::default_k_grid(&pair, n, settings.parse("grid_points")?)?,
    };
    let cfg = product::ExperimentConfig {
        pair,
        n,
        k_grid,
        iterations: settings.parse("iters")?,
        burn_in: settings.parse("burnin")?,
        seed: settings.parse("seed")?,
        replicates: settings.parse("reps")?,
    };
    let table = product::run_sweep(&cfg)?;
    let gap = product::efficiency_vs_theory(&table)?;
    let path = out_dir.join(format!("product_{}.csv", sanitize(&pair.label())));
    io::write_tuning_csv(&table, &path)?;

    let best_k = table.argmax_k();
    let best = table.rows.iter().find(|r| r.k == best_k).unwrap();
    println!("pair = {}", pair.label());
    println!(
        "argmax k = {best_k} with acceptance {:.3} (se {:.1e})",
        best.acceptance, best.acceptance_se
    );
    println!(
        "sup |observed - theoretical| efficiency = {:.3} over {} rows ({} skipped)",
        gap.sup_gap,
        gap.pairs.len(),
        gap.skipped
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn jumplim(
    args: JumplimArgs,
    config: Option<&Path>,
    seed: Option<u64>,
    scale: Scale,
    out_dir: &Path,
) -> Result<()> {
    let mut defaults = global_defaults(seed, scale);
    defaults.push(("n", "1000".into()));
    defaults.push((
        "horizon",
        match scale {
            Scale::Desk => "150",
            Scale::Paper => "600",
        }
        .into(),
    ));
    defaults.push(("hstar_samples", "1000".into()));
    let settings = Settings::resolve(
        "jumplim",
        &[
            "pair",
            "n",
            "k",
            "horizon",
            "hstar_samples",
            "seed",
            "scale",
        ],
        config,
        vec![
            ("pair", args.pair),
            ("n", args.n.map(|v| v.to_string())),
            ("k", args.k.map(|v| v.to_string())),
            ("horizon", args.horizon.map(|v| v.to_string())),
            ("hstar_samples", args.hstar_samples.map(|v| v.to_string())),
        ],
        defaults,
    )?;
    settings.write_manifest(out_dir)?;

    let pair = DensityPair::parse(settings.get("pair")?)?;
    let n: usize = settings.parse("n")?;
    let k = match settings.values.get("k") {
        Some(_) => settings.parse("k")?,
        None => {
            let disc = pair.discrepancy(200_000, settings.parse("seed")?)?;
            scaling::optimal_k(disc.value, n)?
        }
    };
    let report = scaling::scaled_chain_vs_limit(
        &pair,
        n,
        k,
        settings.parse("horizon")?,
        settings.parse("seed")?,
    )?;
    println!(
        "pair = {}, n = {n}, k = {k}, horizon = {}",
        pair.label(),
        report.horizon
    );
    println!(
        "chain rate  = {:.4} (se {:.4})",
        report.chain_rate.value, report.chain_rate.std_error
    );
    println!(
        "limit rate  = {:.4} (se {:.4})",
        report.limit_rate.value, report.limit_rate.std_error
    );
    println!(
        "theory rate = {:.4} (se {:.4})",
        report.theory_rate.value, report.theory_rate.std_error
    );
    println!(
        "z(chain vs limit) = {:.2}, z(chain vs theory) = {:.2}, marginal KS p = {:.3}",
        report.chain_vs_limit_z, report.chain_vs_theory_z, report.marginal_ks_p
    );
    let path = out_dir.join(format!("jumplim_{}.csv", sanitize(&pair.label())));
    let mut text = String::from("source,rate,se\n");
    let _ = writeln!(
        text,
        "chain,{},{}",
        report.chain_rate.value, report.chain_rate.std_error
    );
    let _ = writeln!(
        text,
        "limit,{},{}",
        report.limit_rate.value, report.limit_rate.std_error
    );
    let _ = writeln!(
        text,
        "theory,{},{}",
        report.theory_rate.value, report.theory_rate.std_error
    );
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn sir_cmd(
    args: SirArgs,
    config: Option<&Path>,
    seed: Option<u64>,
    scale: Scale,
    out_dir: &Path,
) -> Result<()> {
    let mut defaults = global_defaults(seed, scale);
    defaults.push(("iters", "100000".into()));
    defaults.push(("burnin", "10000".into()));
    defaults.push(("trace_thin", "10".into()));
    defaults.push(("alpha", "1".into()));
    defaults.push(("k", "sweep".into()));
    let settings = Settings::resolve(
        "sir",
        &[
            "data",
            "population",
            "alpha",
            "k",
            "iters",
            "burnin",
            "trace_thin",
            "seed",
            "scale",
        ],
        config,
        vec![
            ("data", args.data.map(|p| p.display().to_string())),
            ("population", args.population.map(|v| v.to_string())),
            ("alpha", args.alpha),
            ("k", args.k),
            ("iters", args.iters.map(|v| v.to_string())),
            ("burnin", args.burnin.map(|v| v.to_string())),
            ("trace_thin", args.trace_thin.map(|v| v.to_string())),
        ],
        defaults,
    )?;
    settings.write_manifest(out_dir)?;

    let data_path = PathBuf::from(settings.get("data")?);
    let population: usize = settings.parse("population")?;
    let data = io::load_removal_times(&data_path, population)?;
    let mode = match settings.get("alpha")? {
        "unknown" => AlphaMode::Unknown,
        raw => AlphaMode::Fixed(
            raw.parse()
                .map_err(|_| Error::config(format!("bad alpha '{raw}'")))?,
        ),
    };
    let mut base =
        sir::SirRunConfig::new(mode, 1, settings.parse("iters")?, settings.parse("seed")?);
    base.burn_in = settings.parse("burnin")?;
    base.trace_thin = settings.parse("trace_thin")?;

    let alpha_tag = match mode {
        AlphaMode::Unknown => "unknown".to_string(),
        AlphaMode::Fixed(a) => sanitize(&a.to_string()),
    };
    match settings.get("k")? {
        "sweep" => {
            let k_grid: Vec<usize> = (1..=data.m()).collect();
            let table = sir::sweep_k(&data, &base, &k_grid)?;
            let path = out_dir.join(format!("sir_tuning_alpha_{alpha_tag}.csv"));
            io::write_tuning_csv(&table, &path)?;
            let best = table.argmax_k();
            let near = table.row_nearest_acceptance(scaling::OPTIMAL_ACCEPTANCE);
            println!("m = {}, N = {population}", data.m());
            println!("argmax k = {best}");
            println!(
                "k nearest 23.4% acceptance = {} (acceptance {:.3}, efficiency {:.3})",
                near.k,
                near.acceptance,
                near.normalized_efficiency.unwrap_or(f64::NAN)
            );
            println!("wrote {}", path.display());
        }
        raw => {
            base.k = raw
                .parse()
                .map_err(|_| Error::config(format!("bad k '{raw}'")))?;
            let run = sir::run_sir_mcmc(&data, &base)?;
            println!(
                "k = {}: acceptance {:.3}, mean moved {:.2}",
                base.k, run.row.acceptance, run.row.mean_moved
            );
            let trace_path = out_dir.join(format!("sir_trace_alpha_{alpha_tag}_k{}.csv", base.k));
            let mut traces = vec![&run.beta_trace, &run.delta_trace];
            if let Some(a) = &run.alpha_trace {
                traces.push(a);
            }
            io::write_trace_csv(&traces, &trace_path)?;
            let table = tuning_summary(vec![run.row.clone()])?;
            let tuning_path = out_dir.join(format!("sir_tuning_alpha_{alpha_tag}_k{}.csv", base.k));
            io::write_tuning_csv(&table, &tuning_path)?;
            println!("wrote {}", trace_path.display());
            println!("wrote {}", tuning_path.display());
        }
    }
    Ok(())
}

fn bdm_cmd(
    args: BdmArgs,
    config: Option<&Path>,
    seed: Option<u64>,
    scale: Scale,
    out_dir: &Path,
) -> Result<()> {
    let mut defaults = global_defaults(seed, scale);
    match scale {
        Scale::Desk => {
            defaults.push(("ntarget", "500".into()));
            defaults.push(("nlatent", "6000".into()));
            defaults.push(("iters", "100000".into()));
            defaults.push(("burnin", "10000".into()));
        }
        Scale::Paper => {
            defaults.push(("ntarget", "10000".into()));
            defaults.push(("nlatent", "100000".into()));
            defaults.push(("iters", "1100000".into()));
            defaults.push(("burnin", "100000".into()));
        }
    }
    defaults.push(("nrep", "25".into()));
    defaults.push(("trace_thin", "10".into()));
    defaults.push(("k", "sweep".into()));
    let settings = Settings::resolve(
        "bdm",
        &[
            "data",
            "ntarget",
            "nlatent",
            "nrep",
            "k",
            "kv",
            "iters",
            "burnin",
            "trace_thin",
            "seed",
            "scale",
        ],
        config,
        vec![
            ("data", args.data.map(|p| p.display().to_string())),
            ("ntarget", args.ntarget.map(|v| v.to_string())),
            ("nlatent", args.nlatent.map(|v| v.to_string())),
            ("nrep", args.nrep.map(|v| v.to_string())),
            ("k", args.k),
            ("kv", args.kv.map(|v| v.to_string())),
            ("iters", args.iters.map(|v| v.to_string())),
            ("burnin", args.burnin.map(|v| v.to_string())),
            ("trace_thin", args.trace_thin.map(|v| v.to_string())),
        ],
        defaults,
    )?;
    settings.write_manifest(out_dir)?;

    let data_path = PathBuf::from(settings.get("data")?);
    let data = io::load_clusters(&data_path)?;
    let n_latent: usize = settings.parse("nlatent")?;
    let mut base = bdm::BdmRunConfig::new(
        n_latent,
        settings.parse("ntarget")?,
        1,
        settings.parse("iters")?,
        settings.parse("seed")?,
    );
    base.burn_in = settings.parse("burnin")?;
    base.n_rep = settings.parse("nrep")?;
    base.trace_thin = settings.parse("trace_thin")?;
    base.k_v = match settings.values.get("kv") {
        Some(_) => settings.parse("kv")?,
        None => data.n_clusters(),
    };

    println!(
        "clusters = {}, sample size = {}, n_latent = {n_latent}",
        data.n_clusters(),
        data.sample_size()
    );
    match settings.get("k")? {
        "sweep" => {
            let k_grid = bdm_sweep_grid(n_latent);
            let (table, ess) = bdm::sweep_k(&data, &base, &k_grid)?;
            let path = out_dir.join("bdm_tuning.csv");
            io::write_tuning_csv(&table, &path)?;
            let ess_rows: Vec<(String, crate::diagnostics::EssReport)> = ess
                .iter()
                .flat_map(|&(k, a, d)| [(format!("a_k{k}"), a), (format!("d_k{k}"), d)])
                .collect();
            let ess_path = out_dir.join("bdm_ess.csv");
            io::write_ess_csv(&ess_rows, &ess_path)?;
            println!("argmax k = {}", table.argmax_k());
            println!("wrote {}", path.display());
            println!("wrote {}", ess_path.display());
        }
        raw => {
            base.k = raw
                .parse()
                .map_err(|_| Error::config(format!("bad k '{raw}'")))?;
            let run = bdm::run_bdm_mcmc(&data, &base)?;
            println!(
                "k = {}: latent acceptance {:.3}, mean moved {:.2}, ESS(a) = {:.0}, ESS(d) = {:.0}",
                base.k, run.row.acceptance, run.row.mean_moved, run.ess_a.ess, run.ess_d.ess
            );
            let trace_path = out_dir.join(format!("bdm_trace_k{}.csv", base.k));
            io::write_trace_csv(&[&run.a_trace, &run.d_trace], &trace_path)?;
            let ess_path = out_dir.join(format!("bdm_ess_k{}.csv", base.k));
            io::write_ess_csv(
                &[("a".into(), run.ess_a), ("d".into(), run.ess_d)],
                &ess_path,
            )?;
            let tuning_path = out_dir.join(format!("bdm_tuning_k{}.csv", base.k));
            io::write_tuning_csv(&tuning_summary(vec![run.row.clone()])?, &tuning_path)?;
            println!("wrote {}", trace_path.display());
            println!("wrote {}", ess_path.display());
            println!("wrote {}", tuning_path.display());
        }
    }
    Ok(())
}

/// Geometric k grid for BDM sweeps, from about n/200 up to n/2.
pub fn bdm_sweep_grid(n_latent: usize) -> Vec<usize> {
    let lo = (n_latent / 200).max(1);
    let hi = (n_latent / 2).max(lo + 1);
    let points = 6;
    let mut grid: Vec<usize> = (0..points)
        .map(|i| {
            let t = i as f64 / (points - 1) as f64;
            ((lo as f64) * ((hi as f64) / (lo as f64)).powf(t)).round() as usize
        })
        .collect();
    grid.dedup();
    grid
}
