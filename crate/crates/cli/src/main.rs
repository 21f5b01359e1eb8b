use std::path::PathBuf;

use anc_chain::experiment::{self, ExperimentConfig, GainDistribution};
use anc_chain::topology::{self, EdgeGain};
use anc_chain::{rate, ChainNetwork, NormalizedPoint, ScalingVector, SpectralRatio};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "anc-chain", version, about = "Analog network coding rates on nonlinear relay chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a source-power sweep described by a JSON config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the CSV path in the config.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Overrides the SVG path in the config.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Exact rate, chord approximation and tangent bounds for one scaling vector.
    Rate(RateArgs),
    /// Path counts by delay: closed form next to explicit enumeration.
    Paths {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Relay whose noise paths are counted; the source is used when omitted.
        #[arg(long)]
        m: Option<usize>,
    },
}

#[derive(Args)]
struct RateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// JSON edge list (`[{"from":0,"to":1,"gain":0.7}, ...]`) or an integer seed
    /// for i.i.d. standard normal gains.
    #[arg(long)]
    gains: String,
    /// Comma-separated scaling factors, or `max` for full power at every relay.
    #[arg(long, default_value = "max")]
    beta: String,
    /// Source power in watts.
    #[arg(long, default_value_t = 10.0)]
    ps: f64,
    /// Relay power budget, shared by all relays; defaults to the source power.
    #[arg(long)]
    relay_power: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    noise_var: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Sweep { config, csv, svg } => sweep(config, csv, svg),
        Command::Rate(args) => rate_cmd(args),
        Command::Paths { n, k, m } => paths(n, k, m),
    }
}

fn sweep(path: PathBuf, csv: Option<PathBuf>, svg: Option<PathBuf>) -> Result<()> {
    let mut config = ExperimentConfig::from_path(&path)?;
    if csv.is_some() {
        config.output.csv = csv;
    }
    if svg.is_some() {
        config.output.svg = svg;
    }
    let table = experiment::run_sweep(&config)?;
    let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
    println!("ps_db   exact   zeroth  upper   lower   ub-lb   |z-e|");
    for r in &table.rows {
        println!(
            "{:<7} {:<7} {:<7} {:<7} {:<7} {:<7} {}",
            r.ps_db,
            fmt(r.exact_mean),
            fmt(r.zeroth_mean),
            fmt(r.ub_mean),
            fmt(r.lb_mean),
            fmt(r.gap_ub_lb),
            fmt(r.gap_zeroth_exact)
        );
    }
    for p in experiment::emit_outputs(&table, &config)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn build_network(args: &RateArgs) -> Result<ChainNetwork> {
    let relay = vec![args.relay_power.unwrap_or(args.ps); args.n];
    if let Ok(seed) = args.gains.parse::<u64>() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = GainDistribution::StandardNormal;
        return Ok(ChainNetwork::from_gain_fn(args.n, args.k, args.noise_var, args.ps, relay, |_, _| {
            dist.sample(&mut rng)
        })?);
    }
    let text = std::fs::read_to_string(&args.gains).with_context(|| format!("reading gains from {}", args.gains))?;
    let edges: Vec<EdgeGain> =
        serde_json::from_str(&text).with_context(|| format!("parsing edge list in {}", args.gains))?;
    Ok(ChainNetwork::from_edges(args.n, args.k, args.noise_var, args.ps, relay, &edges)?)
}

fn rate_cmd(args: RateArgs) -> Result<()> {
    let net = build_network(&args)?;
    let beta = if args.beta.trim() == "max" {
        NormalizedPoint::new(vec![1.0; net.n_relays()])?.to_scaling(&net)?
    } else {
        let values = args
            .beta
            .split(',')
            .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad scaling factor `{s}`")))
            .collect::<Result<Vec<_>>>()?;
        let beta = ScalingVector::new(values)?;
        beta.check_feasible(&net, 1e-9)?;
        beta
    };
    let sr = SpectralRatio::build(&net, &beta)?;
    let report = rate::evaluate(&sr, args.tol)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(());
    }
    println!("beta    {:?}", beta.as_slice());
    println!("exact   {:.10}", report.exact);
    println!("zeroth  {:.10}  (slope {:.6})", report.zeroth, report.slope);
    println!("upper   {:.10}  (u_max {:.6})", report.upper, report.u_max);
    println!("lower   {:.10}  (u_min {:.6})", report.lower, report.u_min);
    Ok(())
}

fn paths(n: usize, k: usize, m: Option<usize>) -> Result<()> {
    let net = ChainNetwork::new(n, k, 1.0, 1.0, vec![1.0; n.max(1)])?;
    let origin = match m {
        Some(m) if m == 0 || m > n => bail!("relay index {m} is outside 1..={n}"),
        Some(m) => m,
        None => topology::SOURCE,
    };
    let enumerated = topology::enumerate_paths(&net, origin, net.destination())?;
    let delays = match m {
        Some(m) => topology::relay_delay_range(n, k, m),
        None => topology::source_delay_range(n, k),
    };
    let label = m.map_or_else(|| "source".to_string(), |m| format!("relay {m}"));
    println!("({n},{k}) chain, paths from {label} to destination");
    println!("delay  formula  enumerated");
    let mut mismatches = 0;
    for d in delays {
        let formula = match m {
            Some(m) => topology::count_relay_paths(n, k, m, d),
            None => topology::count_source_paths(n, k, d),
        };
        let counted = enumerated.get(&d).map_or(0, |v| v.len() as u64);
        let flag = if formula == counted { "" } else { "  MISMATCH" };
        mismatches += usize::from(formula != counted);
        println!("{d:<6} {formula:<8} {counted}{flag}");
    }
    if mismatches > 0 {
        bail!("{mismatches} delay classes disagree");
    }
    Ok(())
}
