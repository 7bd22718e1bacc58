use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use spikebench::data::{load_digits, resolve_data_dir, DIGITS_FILE};
use spikebench::detrng::SeedPath;
use spikebench::plasticity::{PlasticityParams, RewardedLifLayer};
use spikebench::protocol::{accuracies, Engine, RunRecord, SuiteConfig};
use spikebench::report::{self, config::parse_seed_list, FAMILIES, MANIFEST_FILE};
use spikebench::stats::summarize;
use spikebench::{Error, LifConfig, Matrix, Real, Result};

#[derive(Parser, Debug)]
#[command(name = "spikebench", version, about = "Deterministic spiking-encoder benchmark suite")]
struct Cli {
    /// Directory holding digits.csv
    #[arg(long, global = true, env = "SPIKEBENCH_DATA_DIR")]
    data_dir: Option<PathBuf>,

    /// Output directory for CSVs, tables, figures and the manifest
    #[arg(long, global = true, default_value = "results")]
    out_dir: PathBuf,

    /// Model seeds, comma-separated (replaces both the 5- and 9-seed sets)
    #[arg(long, global = true)]
    seeds: Option<String>,

    /// Split seeds, comma-separated (replaces the primary and robustness splits)
    #[arg(long, global = true)]
    split_seeds: Option<String>,

    /// `key = value` config file applied over the defaults
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for independent runs
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Softmax controls, hybrid readout and proxy on the default configuration
    Baselines,
    /// Single-factor encoder, normalization and reward ablations
    Ablations,
    /// Normalization × reward-shaping 2×2 grid
    Interaction,
    /// Default versus norm-off across split seeds
    Splits,
    /// Count versus time-bin readout on the synthetic temporal task
    Temporal,
    /// Confusion, per-class F1, spike counts, saturation, margins, parameter counts
    Diagnostics,
    /// Amortized forward-only and end-to-end latency
    Timing,
    /// Render tables and figures from existing CSVs
    Report,
    /// Every experiment family plus diagnostics, tables, figures and manifest
    All,
    /// Recompute manifest digests
    Verify {
        /// Manifest path (defaults to <out-dir>/manifest.txt)
        manifest: Option<PathBuf>,
    },
    /// Run the LIF and three-factor plasticity kernels on random input
    DemoKernels {
        #[arg(long, default_value_t = 500)]
        steps: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn suite_config(cli: &Cli) -> Result<SuiteConfig> {
    let mut cfg = match &cli.config {
        Some(p) => report::load_config(p).map_err(|e| match e {
            Error::InvalidConfig(_) => e,
            other => Error::InvalidConfig(other.to_string()),
        })?,
        None => SuiteConfig::default(),
    };
    if let Some(s) = &cli.seeds {
        let seeds = parse_seed_list(s).map_err(Error::InvalidArgument)?;
        cfg.seeds = seeds.clone();
        cfg.dominant_seeds = seeds;
    }
    if let Some(s) = &cli.split_seeds {
        let splits = parse_seed_list(s).map_err(Error::InvalidArgument)?;
        cfg.split_seeds = splits.clone();
        cfg.robustness_splits = splits;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn engine(cli: &Cli, cfg: SuiteConfig, needs_digits: bool) -> Result<Engine> {
    let digits = if needs_digits {
        let dir = resolve_data_dir(cli.data_dir.as_deref());
        Some(load_digits(&dir.join(DIGITS_FILE))?)
    } else {
        None
    };
    Engine::new(cfg, digits)
}

fn print_summary(records: &[RunRecord]) {
    let mut seen: Vec<&str> = Vec::new();
    for r in records {
        if !seen.contains(&r.experiment.as_str()) {
            seen.push(&r.experiment);
        }
    }
    for exp in seen {
        if let Ok(s) = summarize(&accuracies(records, exp)) {
            println!("  {exp:<22} {:6.2} ± {:5.2}  (n={})", s.mean, s.std, s.n);
        }
    }
}

fn run_family(cli: &Cli, family: &str) -> Result<()> {
    let cfg = suite_config(cli)?;
    let e = engine(cli, cfg, family != "temporal")?;
    let records = e.run_family(family)?;
    report::write_config(&cli.out_dir, e.config())?;
    report::write_family(&cli.out_dir, family, &records)?;
    println!("{family}:");
    print_summary(&records);
    report::finish(&cli.out_dir, e.config())?;
    println!("wrote {}", cli.out_dir.join(format!("{family}.csv")).display());
    Ok(())
}

fn demo_kernels(steps: usize, seed: u64) -> Result<()> {
    let (pre, post) = (32usize, 4usize);
    let mut s = SeedPath::root("demo-kernels", seed).resolve();
    let w: Vec<Real> = (0..pre * post).map(|_| 0.3 + 0.4 * s.next_uniform()).collect();
    let mut layer = RewardedLifLayer::new(Matrix::from_vec(pre, post, w)?, LifConfig::default(), &PlasticityParams::default())?;
    let mut post_counts = vec![0usize; post];
    let mut pre_count = 0usize;
    let window = 100;
    for t in 0..steps {
        let spikes: Vec<bool> = (0..pre).map(|_| s.next_uniform() < 0.15).collect();
        pre_count += spikes.iter().filter(|&&b| b).count();
        for (c, fired) in post_counts.iter_mut().zip(layer.step(&spikes)?) {
            *c += usize::from(fired);
        }
        if (t + 1) % window == 0 {
            let r = if post_counts[0] >= post_counts[1] { 1.0 } else { -1.0 };
            layer.reward(r)?;
        }
    }
    let ws = layer.weights.as_slice();
    let (lo, hi) = ws.iter().fold((Real::INFINITY, Real::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    println!("steps {steps}, input spikes {pre_count}");
    println!("output spikes per neuron {post_counts:?}");
    println!("weights in [{lo:.4}, {hi:.4}], mean {:.4}", ws.iter().sum::<Real>() / ws.len() as Real);
    let bounded = lo >= layer.plasticity.w_min && hi <= layer.plasticity.w_max;
    println!("weights within bounds: {bounded}");
    if bounded {
        Ok(())
    } else {
        Err(Error::Verification(vec!["weight bounds".into()]))
    }
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(Error::InvalidArgument("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    match &cli.command {
        Command::Baselines => run_family(cli, "baselines"),
        Command::Ablations => run_family(cli, "ablations"),
        Command::Interaction => run_family(cli, "interaction"),
        Command::Splits => run_family(cli, "splits"),
        Command::Temporal => run_family(cli, "temporal"),
        Command::Diagnostics => {
            let e = engine(cli, suite_config(cli)?, true)?;
            let bundle = e.run_diagnostics()?;
            report::write_config(&cli.out_dir, e.config())?;
            report::write_diagnostics(&cli.out_dir, &bundle)?;
            for m in &bundle.metrics {
                println!("  {:<34} {:10.4} ± {:.4}  (n={})", m.name, m.mean, m.std, m.n);
            }
            report::finish(&cli.out_dir, e.config())?;
            Ok(())
        }
        Command::Timing => {
            let e = engine(cli, suite_config(cli)?, true)?;
            let t = e.run_timing()?;
            report::write_timing(&cli.out_dir, &t)?;
            println!("hardware: {} (median of {} repeats, batch {})", t.hardware, t.repeats, t.batch);
            for x in &t.entries {
                println!("  {:<7} {:<11} {:10.4} µs/sample", x.model, x.stage, x.median_us_per_sample);
            }
            Ok(())
        }
        Command::Report => {
            let cfg = suite_config(cli)?;
            for p in report::render_all(&cli.out_dir)? {
                println!("wrote {}", p.display());
            }
            report::finish(&cli.out_dir, &cfg)?;
            Ok(())
        }
        Command::All => {
            let e = engine(cli, suite_config(cli)?, true)?;
            let m = report::run_suite(&e, &cli.out_dir, &FAMILIES, true)?;
            println!("{} files listed in {}", m.entries.len(), cli.out_dir.join(MANIFEST_FILE).display());
            Ok(())
        }
        Command::Verify { manifest } => {
            let path = manifest.clone().unwrap_or_else(|| cli.out_dir.join(MANIFEST_FILE));
            let n = report::verify_manifest(&path)?;
            println!("verified {n} files against {}", display(&path));
            Ok(())
        }
        Command::DemoKernels { steps, seed } => demo_kernels(*steps, *seed),
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
