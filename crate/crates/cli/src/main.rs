//! `graphbo`: enumeration, kernels, GP fitting, model export, exact
//! acquisition solving and optimization runs from the command line.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime errors.

mod config;

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use graphbo_core::enumerate::{enumerate_domain, sample_feasible_with, DEFAULT_SAMPLING_ATTEMPTS};
use graphbo_core::gp::GpModelFile;
use graphbo_core::io::{read_dataset, read_graph, read_graphs, GraphRecord};
use graphbo_core::mip::{encode_shortest_paths, encode_structure, export_model, ExportFormat};
use graphbo_core::solve::{count_feasible, DEFAULT_COUNT_CAP};
use graphbo_core::{
    bo, encode_acquisition, fit, k_combined, k_graph, lcb, posterior, solve, synthetic_oracle, AttributedGraph, Budget,
    DomainSpec, FitOptions, GpModel, KernelHyperparams, KernelVariant, SizeSpec, SolveOptions, Strategy,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use config::RunConfig;

#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Parser)]
#[command(name = "graphbo", version, about = "Bayesian optimization over small attributed graphs")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List every graph of a domain as JSON lines.
    Enumerate {
        #[command(flatten)]
        domain: DomainArgs,
        /// Print only the number of graphs.
        #[arg(long)]
        count: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw random feasible graphs.
    Sample {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a kernel between two graph files.
    Kernel {
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Fit hyperparameters to a dataset and write the conditioned model.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Posterior mean, variance and acquisition value for each graph in a file.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        graphs: PathBuf,
        #[arg(long)]
        beta_sqrt: Option<f64>,
    },
    /// Build the acquisition model and write it as MPS or LP.
    Encode {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long)]
        beta_sqrt: Option<f64>,
        #[arg(long, default_value = "mps")]
        format: String,
        #[arg(long, default_value_t = 64)]
        breakpoints: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Minimize the acquisition over a domain.
    Solve {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        domain: DomainArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        beta_sqrt: Option<f64>,
        /// Write the incumbent graph here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the feasible-assignment count of the shortest-path rows with
    /// the number of connected graphs.
    VerifyBijection {
        #[command(flatten)]
        domain: DomainArgs,
        /// Include the feature block, path-count indicators and domain rows.
        #[arg(long)]
        full: bool,
        #[arg(long, default_value_t = DEFAULT_COUNT_CAP)]
        cap: u64,
    },
    /// Run the optimization loop.
    Bo(LoopArgs),
    /// Run the random-sampling baseline.
    Baseline(LoopArgs),
}

#[derive(Args, Clone, Default)]
struct DomainArgs {
    /// Fixed number of nodes.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, requires = "max_n")]
    min_n: Option<usize>,
    #[arg(long, requires = "min_n")]
    max_n: Option<usize>,
    #[arg(long)]
    directed: bool,
    #[arg(long)]
    labels: Option<usize>,
    #[arg(long)]
    features: Option<usize>,
    /// Comma-separated degree cap per label.
    #[arg(long, value_delimiter = ',')]
    degree_caps: Option<Vec<usize>>,
    /// JSON domain description.
    #[arg(long)]
    domain: Option<PathBuf>,
}

#[derive(Args, Clone, Default)]
struct KernelArgs {
    #[arg(long)]
    variant: Option<KernelVariant>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    sigma_k_sq: Option<f64>,
}

#[derive(Args, Clone, Default)]
struct SolverArgs {
    #[arg(long)]
    strategy: Option<Strategy>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    max_nodes: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    gap_tol: Option<f64>,
    #[arg(long)]
    log_interval: Option<u64>,
}

#[derive(Args, Clone)]
struct LoopArgs {
    #[command(flatten)]
    domain: DomainArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    variant: Option<KernelVariant>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    initial_samples: Option<usize>,
    #[arg(long)]
    warm_start: Option<usize>,
    #[arg(long)]
    beta_sqrt: Option<f64>,
    /// Objective name; overrides the config file.
    #[arg(long)]
    oracle: Option<String>,
    /// Objective parameters as JSON.
    #[arg(long)]
    oracle_params: Option<String>,
    /// History CSV path.
    #[arg(long)]
    history: PathBuf,
    /// Proposed graphs, one JSON object per line.
    #[arg(long)]
    proposals: Option<PathBuf>,
}

struct Ctx {
    cfg: RunConfig,
    seed: u64,
}

impl Ctx {
    fn domain(&self, args: &DomainArgs) -> anyhow::Result<DomainSpec> {
        if let Some(path) = &args.domain {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            return serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()));
        }
        let size = match (args.n, args.min_n, args.max_n) {
            (Some(n), None, None) => Some(SizeSpec::Fixed(n)),
            (None, Some(min), Some(max)) => Some(SizeSpec::Bounded { min, max }),
            (None, None, None) => None,
            _ => return Err(usage("give either --n or both --min-n and --max-n")),
        };
        let mut domain = match (size, &self.cfg.domain) {
            (Some(size), _) => {
                let labels = args.labels.unwrap_or(1);
                let features = args.features.unwrap_or(labels);
                DomainSpec { size, ..DomainSpec::fixed(1, args.directed, labels, features) }
            }
            (None, Some(d)) => d.clone(),
            (None, None) => return Err(usage("no domain: pass --n/--min-n/--max-n, --domain or a [domain] config section")),
        };
        if let Some(caps) = &args.degree_caps {
            domain.degree_caps = Some(caps.clone());
        }
        domain.validate()?;
        Ok(domain)
    }

    fn hyper(&self, args: &KernelArgs, variant: KernelVariant) -> KernelHyperparams {
        let k = &self.cfg.kernel;
        let alpha = args.alpha.or(k.alpha).unwrap_or(1.0);
        let beta = args.beta.or(k.beta).unwrap_or(1.0);
        let var = args.sigma_k_sq.or(k.sigma_k_sq);
        match (variant.is_exponential(), var) {
            (true, v) => KernelHyperparams::with_variance(alpha, beta, v.unwrap_or(1.0)),
            (false, _) => KernelHyperparams::new(alpha, beta),
        }
    }

    fn variant(&self, flag: Option<KernelVariant>) -> KernelVariant {
        flag.or(self.cfg.kernel.variant).unwrap_or(KernelVariant::Ssp)
    }

    fn beta_sqrt(&self, flag: Option<f64>) -> anyhow::Result<f64> {
        let b = flag.or(self.cfg.solver.beta_sqrt).unwrap_or(1.0);
        if !(b >= 0.0) {
            return Err(usage("--beta-sqrt must be nonnegative"));
        }
        Ok(b)
    }

    fn solve_options(&self, args: &SolverArgs) -> SolveOptions {
        let s = &self.cfg.solver;
        let d = SolveOptions::default();
        SolveOptions {
            strategy: args.strategy.or(s.strategy).unwrap_or(d.strategy),
            budget: Budget {
                seconds: Some(args.time_limit.or(s.time_limit).unwrap_or(600.0)),
                max_nodes: args.max_nodes.or(s.max_nodes),
            },
            workers: args.workers.or(s.workers).unwrap_or(1),
            gap_tol: args.gap_tol.or(s.gap_tol).unwrap_or(d.gap_tol),
            log_interval: args.log_interval.or(s.log_interval).unwrap_or(d.log_interval),
            ..d
        }
    }
}

fn write_lines(out: Option<&Path>, lines: impl IntoIterator<Item = String>) -> anyhow::Result<()> {
    let mut text = String::new();
    for l in lines {
        text.push_str(&l);
        text.push('\n');
    }
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn graph_json(g: &AttributedGraph) -> anyhow::Result<String> {
    Ok(serde_json::to_string(&GraphRecord::from(g))?)
}

fn load_model(path: &Path) -> anyhow::Result<GpModel> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: GpModelFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(GpModel::from_file(&file)?)
}

fn run_loop(ctx: &Ctx, args: &LoopArgs, baseline: bool) -> anyhow::Result<()> {
    let domain = ctx.domain(&args.domain)?;
    let mut config = ctx.cfg.bo.clone().unwrap_or_default();
    config.seed = ctx.seed;
    config.variant = args.variant.or(ctx.cfg.kernel.variant).unwrap_or(config.variant);
    if let Some(r) = ctx.cfg.kernel.restarts {
        config.fit_restarts = r;
    }
    let opts = ctx.solve_options(&args.solver);
    if args.solver.strategy.is_some() || ctx.cfg.solver.strategy.is_some() {
        config.strategy = opts.strategy;
    }
    if let Some(t) = args.solver.time_limit.or(ctx.cfg.solver.time_limit) {
        config.solver_seconds = t;
    }
    if let Some(w) = args.solver.workers.or(ctx.cfg.solver.workers) {
        config.workers = w;
    }
    config.iterations = args.iterations.unwrap_or(config.iterations);
    config.initial_samples = args.initial_samples.unwrap_or(config.initial_samples);
    config.warm_start = args.warm_start.unwrap_or(config.warm_start);
    config.beta_sqrt = args.beta_sqrt.or(ctx.cfg.solver.beta_sqrt).unwrap_or(config.beta_sqrt);
    let (name, params) = match (&args.oracle, &ctx.cfg.oracle) {
        (Some(name), _) => {
            let params = match &args.oracle_params {
                Some(p) => serde_json::from_str(p).context("parsing --oracle-params")?,
                None => serde_json::json!({}),
            };
            (name.clone(), params)
        }
        (None, Some(o)) => (o.name.clone(), serde_json::to_value(&o.params)?),
        (None, None) => return Err(usage("no objective: pass --oracle or an [oracle] config section")),
    };
    let oracle = synthetic_oracle(&name, &params)?;
    let (history, failure) = if baseline {
        (bo::random_baseline(&oracle, &domain, &config)?, None)
    } else {
        match bo::run(&oracle, &domain, &config) {
            Ok(h) => (h, None),
            Err(f) => {
                let f = *f;
                (f.partial, Some(f.error))
            }
        }
    };
    history.save_csv(&args.history).with_context(|| format!("writing {}", args.history.display()))?;
    if let Some(p) = &args.proposals {
        history.save_proposals(p).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(e) = failure {
        bail!("run stopped after {} evaluations: {e}", history.len());
    }
    println!("evaluations={} best_y={}", history.len(), history.best_y().unwrap_or(f64::NAN));
    Ok(())
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let cfg = RunConfig::load(cli.config.as_deref()).map_err(|e| usage(format!("{e:#}")))?;
    let seed = cli.seed.or(cfg.seed).or(cfg.bo.as_ref().map(|b| b.seed)).unwrap_or(0);
    let ctx = Ctx { cfg, seed };
    match cli.command {
        Command::Enumerate { domain, count, out } => {
            let domain = ctx.domain(&domain)?;
            let graphs = enumerate_domain(&domain)?;
            if count {
                println!("{}", graphs.count());
            } else {
                let lines = graphs.map(|g| graph_json(&g)).collect::<anyhow::Result<Vec<_>>>()?;
                write_lines(out.as_deref(), lines)?;
            }
        }
        Command::Sample { domain, count, out } => {
            let domain = ctx.domain(&domain)?;
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
            let mut lines = Vec::with_capacity(count);
            for _ in 0..count {
                lines.push(graph_json(&sample_feasible_with(&domain, &mut rng, DEFAULT_SAMPLING_ATTEMPTS)?)?);
            }
            write_lines(out.as_deref(), lines)?;
        }
        Command::Kernel { kernel, a, b } => {
            let variant = ctx.variant(kernel.variant);
            let hyper = ctx.hyper(&kernel, variant);
            let (ga, gb) = (read_graph(&a)?, read_graph(&b)?);
            let value = if kernel.alpha.is_some() || kernel.beta.is_some() {
                k_combined(&ga, &gb, variant, &hyper)?
            } else {
                k_graph(&ga.summarize(), &gb.summarize(), variant, &hyper)?
            };
            println!("{value}");
        }
        Command::Fit { data, kernel, restarts, out } => {
            let variant = ctx.variant(kernel.variant);
            let (graphs, ys) = read_dataset(&data)?;
            let restarts = restarts.or(ctx.cfg.kernel.restarts).unwrap_or(FitOptions::default().restarts);
            let model = fit(&graphs, &ys, variant, &FitOptions { restarts, seed: ctx.seed, ..FitOptions::default() })?;
            fs::write(&out, serde_json::to_string_pretty(&model.to_file())?)
                .with_context(|| format!("writing {}", out.display()))?;
            let h = model.hyper();
            println!(
                "alpha={} beta={} sigma_k_sq={} lml={}",
                h.alpha,
                h.beta,
                h.sigma_k_sq.map_or("-".into(), |v| v.to_string()),
                model.log_marginal_likelihood()
            );
        }
        Command::Predict { model, graphs, beta_sqrt } => {
            let model = load_model(&model)?;
            let beta_sqrt = ctx.beta_sqrt(beta_sqrt)?;
            println!("index\tmu\tvar\tlcb");
            for (i, g) in read_graphs(&graphs)?.iter().enumerate() {
                let (mu, var) = posterior(&model, g)?;
                println!("{i}\t{mu}\t{var}\t{}", lcb(&model, g, beta_sqrt)?);
            }
        }
        Command::Encode { model, domain, beta_sqrt, format, breakpoints, out } => {
            let model = load_model(&model)?;
            let domain = ctx.domain(&domain)?;
            let format: ExportFormat = format.parse().map_err(|e| usage(format!("{e}")))?;
            let mip = encode_acquisition(&model, &domain, ctx.beta_sqrt(beta_sqrt)?)?;
            export_model(&mip, format, breakpoints, &out)?;
            println!("{mip}");
        }
        Command::Solve { model, domain, solver, beta_sqrt, out } => {
            let model = load_model(&model)?;
            let domain = ctx.domain(&domain)?;
            let r = solve(&model, &domain, ctx.beta_sqrt(beta_sqrt)?, &ctx.solve_options(&solver))?;
            println!(
                "status={} objective={} bound={} nodes={} time={:.3}",
                r.status, r.objective, r.bound, r.nodes_explored, r.wall_time
            );
            if let Some(g) = &r.incumbent {
                let line = graph_json(g)?;
                match &out {
                    Some(p) => fs::write(p, line + "\n").with_context(|| format!("writing {}", p.display()))?,
                    None => println!("{line}"),
                }
            }
        }
        Command::VerifyBijection { domain, full, cap } => {
            let domain = ctx.domain(&domain)?;
            let (model, reference) = if full {
                (encode_structure(&domain, true)?, domain.clone())
            } else {
                let plain = DomainSpec { size: domain.size, ..DomainSpec::fixed(1, domain.directed, 1, 1) };
                (encode_shortest_paths(&domain.size, domain.directed)?, plain)
            };
            let feasible = count_feasible(&model, cap)?;
            let connected = enumerate_domain(&reference)?.count() as u64;
            println!("feasible_assignments={feasible}");
            println!("connected_graphs={connected}");
            if feasible != connected {
                bail!("counts differ");
            }
            println!("bijection verified");
        }
        Command::Bo(args) => run_loop(&ctx, &args, false)?,
        Command::Baseline(args) => run_loop(&ctx, &args, true)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                eprintln!("run `graphbo --help` for usage");
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
