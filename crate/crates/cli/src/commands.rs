use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use tmc_core::completion::{CompletionConfig, RankChoice};
use tmc_core::error::CoreError;
use tmc_core::eval::{run_sweep, sweep_rows_to_csv, Methods, SweepSpec, SweptVariable};
use tmc_core::incsvd::IncSvdConfig;
use tmc_core::matrix::write_csv;
use tmc_core::observed::{mask_uniform, read_triplets, write_descriptor, write_triplets};
use tmc_core::pipeline::{SeparationMode, TargetedConfig};
use tmc_core::svp::{discover_all, separation_params, Estimator, SvpConfig};
use tmc_core::synth::{generate, BlockModel, Placement, PlantSpec, ScaleReference};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Compute(CoreError),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Compute(e)
    }
}

type CliResult = Result<(), CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Parser, Debug)]
#[command(
    name = "tmc",
    version,
    about = "Targeted matrix completion: discover low-rank submatrices, complete components separately"
)]
pub struct Cli {
    /// Seed for every random choice (masking, initialization, placement).
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Worker threads. Accepted for compatibility; this build runs single-threaded.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic benchmark instance (dense truth CSV, masked triplet file, descriptor files).
    Synth(SynthArgs),
    /// Run SVP submatrix discovery on a triplet file.
    Discover(DiscoverArgs),
    /// Low-rank completion of a triplet file.
    Complete(CompleteArgs),
    /// Full targeted pipeline: discover, separate, complete, reassemble.
    Targeted(TargetedArgs),
    /// Grid experiments over density / plant rank / plant size / background rank / pi.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 400)]
    pub n: usize,
    #[arg(long, default_value_t = 400)]
    pub m: usize,
    /// Background rank.
    #[arg(long, default_value_t = 30)]
    pub rank: usize,
    /// Plant spec rows:cols:rank:pi, repeatable.
    #[arg(long = "plant")]
    pub plants: Vec<String>,
    /// Observed fraction for the emitted triplet file.
    #[arg(long, default_value_t = 1.0)]
    pub density: f64,
    /// How plant blocks are drawn.
    #[arg(long, value_enum, default_value_t = BlockModelArg::Truncated)]
    pub block_model: BlockModelArg,
    /// Norm the pi target is measured against.
    #[arg(long, value_enum, default_value_t = PiRefArg::Complement)]
    pub pi_ref: PiRefArg,
    /// Output prefix; writes <prefix>.csv, <prefix>.triplet, <prefix>.S<i>.desc.
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum BlockModelArg {
    Truncated,
    Product,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum PiRefArg {
    Complement,
    Rest,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum EstimatorArg {
    Exact,
    Incremental,
    Zerofill,
}

#[derive(Args, Debug)]
pub struct DiscoverArgs {
    /// Input triplet file.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub n_vectors: usize,
    #[arg(long, default_value_t = 0.2)]
    pub delta_threshold: f64,
    /// Stop after this many submatrices (0 = unbounded).
    #[arg(long, default_value_t = 0)]
    pub max_submatrices: usize,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Zerofill)]
    pub estimator: EstimatorArg,
    /// Output prefix; writes <prefix>.S<i>.desc and <prefix>.reports.csv.
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Args, Debug)]
pub struct CompleteArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Dense CSV estimate.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON metadata {used_rank, iterations, final_residual}; stdout when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Factorization rank; automatic spectrum-gap estimate when omitted.
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long, default_value_t = 50)]
    pub max_rank: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
}

#[derive(Args, Debug)]
pub struct TargetedArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// JSON report (descriptors, per-component ranks/residuals, stage times).
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub n_vectors: usize,
    #[arg(long, default_value_t = 0.2)]
    pub delta_threshold: f64,
    #[arg(long, default_value_t = 0)]
    pub max_submatrices: usize,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Zerofill)]
    pub estimator: EstimatorArg,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long, default_value_t = 50)]
    pub max_rank: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    /// zero-fill keeps separated entries observed as zeros; delete drops them.
    #[arg(long, value_enum, default_value_t = SeparationArg::ZeroFill)]
    pub separation_mode: SeparationArg,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum SeparationArg {
    ZeroFill,
    Delete,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 400)]
    pub n: usize,
    #[arg(long, default_value_t = 400)]
    pub m: usize,
    #[arg(long, default_value_t = 30)]
    pub rank: usize,
    #[arg(long = "plant")]
    pub plants: Vec<String>,
    #[arg(long, value_enum)]
    pub variable: VariableArg,
    /// Comma-separated grid values.
    #[arg(long)]
    pub grid: String,
    #[arg(long, default_value_t = 5)]
    pub seeds: usize,
    #[arg(long, value_enum, default_value_t = MethodsArg::Both)]
    pub methods: MethodsArg,
    #[arg(long, default_value_t = 0.6)]
    pub density: f64,
    #[arg(long, default_value_t = 3)]
    pub n_vectors: usize,
    #[arg(long, default_value_t = 0.2)]
    pub delta_threshold: f64,
    #[arg(long, default_value_t = 0)]
    pub max_submatrices: usize,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Zerofill)]
    pub estimator: EstimatorArg,
    #[arg(long, default_value_t = 50)]
    pub max_rank: usize,
    #[arg(long, value_enum, default_value_t = BlockModelArg::Truncated)]
    pub block_model: BlockModelArg,
    #[arg(long, value_enum, default_value_t = PiRefArg::Complement)]
    pub pi_ref: PiRefArg,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum VariableArg {
    Density,
    Subrank,
    Subsize,
    Backrank,
    Pi,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum MethodsArg {
    Plain,
    Targeted,
    Both,
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Synth(args) => run_synth(args, cli.seed),
        Command::Discover(args) => run_discover(args, cli.seed),
        Command::Complete(args) => run_complete(args, cli.seed),
        Command::Targeted(args) => run_targeted(args, cli.seed),
        Command::Sweep(args) => run_sweep_cmd(args, cli.seed),
    }
}

fn parse_plant(text: &str, block: BlockModelArg, pi_ref: PiRefArg) -> Result<PlantSpec, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 4 {
        return Err(usage(format!(
            "--plant expects rows:cols:rank:pi, got `{text}`"
        )));
    }
    let rows: usize = parts[0]
        .parse()
        .map_err(|_| usage(format!("bad plant rows `{}`", parts[0])))?;
    let cols: usize = parts[1]
        .parse()
        .map_err(|_| usage(format!("bad plant cols `{}`", parts[1])))?;
    let rank: usize = parts[2]
        .parse()
        .map_err(|_| usage(format!("bad plant rank `{}`", parts[2])))?;
    let pi: f64 = parts[3]
        .parse()
        .map_err(|_| usage(format!("bad plant pi `{}`", parts[3])))?;
    Ok(PlantSpec {
        rows,
        cols,
        rank,
        pi_target: pi,
        placement: Placement::Random,
        block: match block {
            BlockModelArg::Truncated => BlockModel::TruncatedGaussian,
            BlockModelArg::Product => BlockModel::GaussianProduct,
        },
        scale_ref: match pi_ref {
            PiRefArg::Complement => ScaleReference::Complement,
            PiRefArg::Rest => ScaleReference::Rest,
        },
    })
}

fn require_input(path: &Path) -> Result<(), CliError> {
    if !path.exists() {
        return Err(usage(format!("input file not found: {}", path.display())));
    }
    Ok(())
}

fn svp_config(
    n_vectors: usize,
    delta_threshold: f64,
    max_submatrices: usize,
    estimator: EstimatorArg,
    seed: u64,
) -> SvpConfig {
    SvpConfig {
        n_vectors,
        delta_threshold,
        max_submatrices: (max_submatrices > 0).then_some(max_submatrices),
        estimator: match estimator {
            EstimatorArg::Exact => Estimator::Exact,
            EstimatorArg::Incremental => Estimator::Incremental(IncSvdConfig::default()),
            EstimatorArg::Zerofill => Estimator::ZeroFill,
        },
        seed,
        ..Default::default()
    }
}

fn completion_config(
    rank: Option<usize>,
    max_rank: usize,
    tol: f64,
    max_iter: usize,
) -> CompletionConfig {
    CompletionConfig {
        rank: rank.map_or(RankChoice::Auto, RankChoice::Fixed),
        max_rank,
        tol,
        max_iter,
    }
}

fn run_synth(args: SynthArgs, seed: u64) -> CliResult {
    if !(0.0..=1.0).contains(&args.density) {
        return Err(usage("--density must lie in [0, 1]"));
    }
    let plants: Vec<PlantSpec> = args
        .plants
        .iter()
        .map(|t| parse_plant(t, args.block_model, args.pi_ref))
        .collect::<Result<_, _>>()?;
    let inst = generate(args.n, args.m, args.rank, &plants, seed)?;
    let csv_path = args.out_prefix.with_extension("csv");
    write_csv(&inst.matrix, &csv_path)?;
    let masked = mask_uniform(&inst.matrix, args.density, seed ^ 0x00ff);
    let trip_path = args.out_prefix.with_extension("triplet");
    write_triplets(&masked, &trip_path)?;
    for (i, d) in inst.truth.iter().enumerate() {
        let p = args.out_prefix.with_extension(format!("S{}.desc", i + 1));
        write_descriptor(d, &p)?;
    }
    println!(
        "synth: {}x{} rank {} with {} plant(s), density {:.3}, wrote {} and {}",
        args.n,
        args.m,
        args.rank,
        inst.truth.len(),
        args.density,
        csv_path.display(),
        trip_path.display()
    );
    Ok(())
}

fn run_discover(args: DiscoverArgs, seed: u64) -> CliResult {
    require_input(&args.input)?;
    let mo = read_triplets(&args.input)?;
    let cfg = svp_config(
        args.n_vectors,
        args.delta_threshold,
        args.max_submatrices,
        args.estimator,
        seed,
    );
    let descriptors = discover_all(&mo, &cfg)?;
    let dense = tmc_core::observed::fill_zeros(&mo);
    let report_path = args.out_prefix.with_extension("reports.csv");
    let mut report = String::from("pi,gamma,delta_rows,delta_cols\n");
    for (i, d) in descriptors.iter().enumerate() {
        let p = args.out_prefix.with_extension(format!("S{}.desc", i + 1));
        write_descriptor(d, &p)?;
        let rep = separation_params(&dense, d)?;
        report.push_str(&format!(
            "{},{},{},{}\n",
            rep.pi, rep.gamma, rep.delta_rows, rep.delta_cols
        ));
    }
    std::fs::write(&report_path, report).map_err(CoreError::Io)?;
    if descriptors.is_empty() {
        println!("discover: no submatrix found");
    } else {
        println!(
            "discover: found {} submatrix(es), wrote {}.S*.desc and {}",
            descriptors.len(),
            args.out_prefix.display(),
            report_path.display()
        );
    }
    Ok(())
}

fn run_complete(args: CompleteArgs, seed: u64) -> CliResult {
    require_input(&args.input)?;
    let mo = read_triplets(&args.input)?;
    let cfg = completion_config(args.rank, args.max_rank, args.tol, args.max_iter);
    let out = tmc_core::completion::complete(&mo, &cfg, seed)?;
    write_csv(&out.estimate, &args.out)?;
    let meta = json!({
        "used_rank": out.used_rank,
        "iterations": out.iterations,
        "final_residual": out.final_residual,
    })
    .to_string();
    match &args.report {
        Some(p) => std::fs::write(p, meta + "\n").map_err(CoreError::Io)?,
        None => println!("{meta}"),
    }
    println!(
        "complete: rank {} in {} sweeps, residual {:.3e}, wrote {}",
        out.used_rank,
        out.iterations,
        out.final_residual,
        args.out.display()
    );
    Ok(())
}

fn run_targeted(args: TargetedArgs, seed: u64) -> CliResult {
    require_input(&args.input)?;
    let mo = read_triplets(&args.input)?;
    let cfg = TargetedConfig {
        svp: svp_config(
            args.n_vectors,
            args.delta_threshold,
            args.max_submatrices,
            args.estimator,
            seed,
        ),
        completion: completion_config(args.rank, args.max_rank, args.tol, args.max_iter),
        separation_mode: match args.separation_mode {
            SeparationArg::ZeroFill => SeparationMode::ZeroFill,
            SeparationArg::Delete => SeparationMode::Delete,
        },
    };
    let t0 = Instant::now();
    let descriptors = discover_all(&mo, &cfg.svp)?;
    let discover_s = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let result =
        tmc_core::pipeline::complete_with_descriptors(&mo, &cfg, seed, descriptors.clone())?;
    let complete_s = t1.elapsed().as_secs_f64();
    write_csv(&result.estimate, &args.out)?;
    let components: Vec<_> = result
        .per_component
        .iter()
        .map(|c| {
            json!({
                "used_rank": c.used_rank,
                "iterations": c.iterations,
                "final_residual": c.final_residual,
            })
        })
        .collect();
    let report = json!({
        "descriptors": result
            .descriptors
            .iter()
            .map(|d| json!({"rows": d.rows(), "cols": d.cols()}))
            .collect::<Vec<_>>(),
        "per_component": components,
        "time_discover_s": discover_s,
        "time_complete_s": complete_s,
    });
    if let Some(p) = &args.report {
        std::fs::write(p, report.to_string() + "\n").map_err(CoreError::Io)?;
    }
    println!(
        "targeted: {} submatrix(es), {} component(s), wrote {}",
        result.descriptors.len(),
        result.per_component.len(),
        args.out.display()
    );
    Ok(())
}

fn run_sweep_cmd(args: SweepArgs, seed: u64) -> CliResult {
    let plants: Vec<PlantSpec> = args
        .plants
        .iter()
        .map(|t| parse_plant(t, args.block_model, args.pi_ref))
        .collect::<Result<_, _>>()?;
    let grid: Vec<f64> = args
        .grid
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("bad grid value `{t}`")))
        })
        .collect::<Result<_, _>>()?;
    if grid.is_empty() {
        return Err(usage("--grid must contain at least one value"));
    }
    if args.seeds == 0 {
        return Err(usage("--seeds must be at least 1"));
    }
    let svp = svp_config(
        args.n_vectors,
        args.delta_threshold,
        args.max_submatrices,
        args.estimator,
        seed,
    );
    let completion = completion_config(None, args.max_rank, 1e-5, 500);
    let spec = SweepSpec {
        n: args.n,
        m: args.m,
        background_rank: args.rank,
        plants,
        variable: match args.variable {
            VariableArg::Density => SweptVariable::Density,
            VariableArg::Subrank => SweptVariable::SubRank,
            VariableArg::Subsize => SweptVariable::SubSize,
            VariableArg::Backrank => SweptVariable::BackRank,
            VariableArg::Pi => SweptVariable::Pi,
        },
        grid,
        seeds: args.seeds,
        methods: match args.methods {
            MethodsArg::Plain => Methods::Plain,
            MethodsArg::Targeted => Methods::Targeted,
            MethodsArg::Both => Methods::Both,
        },
        density: args.density,
        targeted: TargetedConfig {
            svp,
            completion: completion.clone(),
            separation_mode: SeparationMode::ZeroFill,
        },
        completion,
    };
    let rows = run_sweep(&spec, seed)?;
    let n_err = rows.iter().filter(|r| r.error.is_some()).count();
    std::fs::write(&args.out, sweep_rows_to_csv(&rows)).map_err(CoreError::Io)?;
    println!(
        "sweep: {} rows ({} with errors) -> {}",
        rows.len(),
        n_err,
        args.out.display()
    );
    Ok(())
}
