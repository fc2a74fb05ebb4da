use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use netlasso::bench::{preset, run_experiment, ExperimentSpec, Method, Sampler, PRESETS};
use netlasso::certify::{min_feasible_k, resolves};
use netlasso::io;
use netlasso::solve::{lp_oracle, nlasso_admm, SolverConfig};
use netlasso::spectral::{gft, GftBasis};
use serde_json::json;

#[derive(Parser)]
#[command(name = "netlasso", version, about = "Clustered graph signal recovery with the network Lasso")]
struct Cli {
    /// Raise log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Laplacian spectrum and GFT coefficients of a signal as CSV.
    Spectral(SpectralArgs),
    /// Check whether a sampling set resolves a partition.
    Certify(CertifyArgs),
    /// Solve the network Lasso for an observation.
    Solve(SolveArgs),
    /// Run a synthetic experiment and write its result files.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct SpectralArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    signal: PathBuf,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    partition: PathBuf,
    /// Sampling set JSON, `{"nodes": [...]}` with 1-based ids.
    #[arg(long)]
    samples: PathBuf,
    #[arg(long = "k", visible_alias = "K", required_unless_present = "find_k")]
    k: Option<f64>,
    #[arg(long = "l", visible_alias = "L")]
    l: f64,
    /// Search the smallest K that resolves at the given L.
    #[arg(long, conflicts_with = "k")]
    find_k: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    observation: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0.01)]
    rho: f64,
    #[arg(long, default_value_t = 300)]
    iters: usize,
    /// Stop once both residuals fall below this value.
    #[arg(long)]
    tol: Option<f64>,
    /// Solve the exact LP instead of running ADMM.
    #[arg(long)]
    oracle: bool,
    /// Estimate JSON; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `iteration,objective` CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    spec: Option<PathBuf>,
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
    preset: Option<String>,
    #[arg(long)]
    out: PathBuf,
    /// Scale the instance to 10^5 nodes.
    #[arg(long)]
    full_scale: bool,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => io::write_atomic(path, text.as_bytes()).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String> {
    Ok(io::read_to_string(path)?)
}

fn spectral(args: SpectralArgs) -> Result<()> {
    let g = io::parse_graph(&read(&args.graph)?).context("graph")?;
    let x = io::parse_signal(&read(&args.signal)?).context("signal")?;
    let basis = GftBasis::of_graph(&g)?;
    let coeffs = gft(&basis, &x)?;
    emit(args.out.as_deref(), &io::spectrum_csv(basis.eigenvalues(), &coeffs))
}

fn certify(args: CertifyArgs) -> Result<()> {
    let g = io::parse_graph(&read(&args.graph)?).context("graph")?;
    let p = io::parse_partition(&read(&args.partition)?).context("partition")?;
    let sampled = io::parse_sampling_set(&read(&args.samples)?).context("sampling set")?;
    let value = match (args.find_k, args.k) {
        (true, _) => {
            let k = min_feasible_k(&g, &p, &sampled, args.l)?;
            if k.is_infinite() {
                json!({ "verdict": "not_resolved", "K": null, "L": args.l, "boundary_size": netlasso::graph::boundary_edges(&g, &p)?.len() })
            } else {
                let cert = resolves(&g, &p, &sampled, k.max(f64::MIN_POSITIVE), args.l)?;
                let mut v = io::certificate_json(&g, &cert);
                v["K"] = json!(k);
                v
            }
        }
        (false, Some(k)) => io::certificate_json(&g, &resolves(&g, &p, &sampled, k, args.l)?),
        (false, None) => bail!("either --k or --find-k is required"),
    };
    emit(args.out.as_deref(), &format!("{}\n", serde_json::to_string_pretty(&value)?))
}

fn solve(args: SolveArgs) -> Result<()> {
    let g = io::parse_graph(&read(&args.graph)?).context("graph")?;
    let obs = io::parse_observation(&read(&args.observation)?, g.node_count()).context("observation")?;
    let (estimate, trace) = if args.oracle {
        let sol = lp_oracle(&g, &obs, args.lambda)?;
        (sol.estimate, vec![sol.value])
    } else {
        let mut cfg = SolverConfig { lambda: args.lambda, rho: args.rho, max_iterations: args.iters, ..Default::default() };
        if let Some(tol) = args.tol {
            cfg.primal_tol = tol;
            cfg.dual_tol = tol;
            cfg.early_stop = true;
        }
        let report = nlasso_admm(&g, &obs, &cfg)?;
        log::info!(
            "{} iterations, converged: {}, residuals {:.3e} / {:.3e}",
            report.iterations_run,
            report.converged,
            report.primal_residual,
            report.dual_residual
        );
        (report.estimate, report.objective_trace)
    };
    if let Some(path) = &args.trace {
        io::write_atomic(path, io::trace_csv(&trace).as_bytes()).with_context(|| format!("writing {}", path.display()))?;
    }
    emit(args.out.as_deref(), &format!("{}\n", io::signal_to_json(&estimate)))
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let mut spec: ExperimentSpec = match (&args.spec, &args.preset) {
        (Some(path), _) => serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?,
        (None, Some(name)) => preset(name).with_context(|| format!("unknown preset {name}"))?,
        (None, None) => bail!("either --spec or --preset is required"),
    };
    if args.full_scale {
        spec = spec.full_scale();
    }
    let result = run_experiment(&spec)?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    result.write_to(&args.out).with_context(|| format!("writing into {}", args.out.display()))?;
    println!(
        "{}: {} nodes, {} edges, {} clusters, lambda {:.4}",
        spec.name, result.node_count, result.edge_count, result.cluster_count, result.lambda
    );
    for (method, sampler) in [
        (Method::Nlasso, Sampler::BoundaryGuided),
        (Method::Nlasso, Sampler::Uniform),
        (Method::LabelPropagation, Sampler::BoundaryGuided),
        (Method::LabelPropagation, Sampler::Uniform),
    ] {
        if let Some(v) = result.final_nmse(method, sampler) {
            println!("  {:<18} {:<15} NMSE {v:.4e}", method.as_str(), sampler.as_str());
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match cli.command {
        Command::Spectral(a) => spectral(a),
        Command::Certify(a) => certify(a),
        Command::Solve(a) => solve(a),
        Command::Experiment(a) => experiment(a),
    }
}
