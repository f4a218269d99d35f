//! Command-line front end: reproducible experiment runs emitting JSON and
//! CSV reports. Every command is a pure function of (config, flags, input
//! files, seed); `--threads` never changes output bytes.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fefetsim::array::{optimize_array, ArrayError, OptTarget, Organization};
use fefetsim::config::ExperimentConfig;
use fefetsim::fault::{shmoo, FaultError, DEFAULT_DOMAIN_GRID};
use fefetsim::programming::{population_stats, ProgramError, SchemeKind};
use fefetsim::workloads::graph::{generate_clustered, generate_er, load_edge_list, Graph};
use fefetsim::workloads::{
    min_cell_size_sweep, minsize_to_csv, run_injection, WorkloadError, WorkloadKind,
};

const EXIT_CONFIG: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "fefetsim", version, about = "Multi-level-cell FeFET memory simulator")]
struct Cli {
    /// TOML experiment configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config's master_seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker thread count; falls back to the FEFETSIM_THREADS environment
    /// variable, then to all cores. Never changes output bytes.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-level programming population statistics with current histograms.
    ProgramStats {
        /// Cells simulated per level.
        #[arg(long)]
        cells: Option<usize>,
    },
    /// Fault-rate sweep over cell size x bits-per-cell x scheme (CSV).
    Shmoo(SweepArgs),
    /// Array cost model: organization sweep under an optimization target.
    Array {
        /// Optimization target: read_latency, read_energy, read_edp, area.
        #[arg(long, default_value = "read_edp")]
        opt: OptTarget,
    },
    /// Workload fault injection through the full store/readback pipeline.
    Inject(InjectArgs),
    /// Minimum cell size per (scheme, bits-per-cell) for a workload (CSV).
    Minsize(MinsizeArgs),
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Comma-separated domain counts.
    #[arg(long, value_delimiter = ',')]
    domains: Vec<usize>,
    /// Comma-separated bits-per-cell values.
    #[arg(long, value_delimiter = ',')]
    bpc: Vec<u32>,
    /// Comma-separated schemes: single, verify.
    #[arg(long, value_delimiter = ',')]
    schemes: Vec<SchemeKind>,
    /// Monte Carlo samples per level.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Debug, Args)]
struct InjectArgs {
    /// Workload: graph or classifier.
    #[arg(long)]
    workload: WorkloadKind,
    /// Graph input: edge-list path, "er:<nodes>:<p>", or
    /// "clustered:<nodes>:<clusters>:<p_in>:<p_out>". Overrides the config.
    #[arg(long)]
    input: Option<String>,
}

#[derive(Debug, Args)]
struct MinsizeArgs {
    #[command(flatten)]
    inject: InjectArgs,
    /// Comma-separated domain counts to sweep (ascending).
    #[arg(long, value_delimiter = ',')]
    domains: Vec<usize>,
    /// Comma-separated bits-per-cell values.
    #[arg(long, value_delimiter = ',')]
    bpc: Vec<u32>,
    /// Comma-separated schemes: single, verify.
    #[arg(long, value_delimiter = ',')]
    schemes: Vec<SchemeKind>,
    /// Relative-error threshold.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Seeded replicates averaged per grid point.
    #[arg(long)]
    replicates: Option<usize>,
}

/// Error carrying its process exit code.
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> CliError {
        CliError {
            code,
            message: message.into(),
        }
    }
}

impl From<fefetsim::config::ConfigError> for CliError {
    fn from(e: fefetsim::config::ConfigError) -> CliError {
        CliError::new(EXIT_CONFIG, e.to_string())
    }
}

impl From<ProgramError> for CliError {
    fn from(e: ProgramError) -> CliError {
        let code = match e {
            ProgramError::Unreachable { .. } => EXIT_INFEASIBLE,
            _ => EXIT_CONFIG,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<FaultError> for CliError {
    fn from(e: FaultError) -> CliError {
        match e {
            FaultError::Program(p) => p.into(),
            FaultError::EmptyGrid(_) => CliError::new(EXIT_CONFIG, e.to_string()),
        }
    }
}

impl From<ArrayError> for CliError {
    fn from(e: ArrayError) -> CliError {
        let code = match e {
            ArrayError::InvalidConfig(_) => EXIT_CONFIG,
            ArrayError::Infeasible(_) | ArrayError::NoFeasibleOrganization => EXIT_INFEASIBLE,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<WorkloadError> for CliError {
    fn from(e: WorkloadError) -> CliError {
        let code = match &e {
            WorkloadError::Program(ProgramError::Unreachable { .. }) => EXIT_INFEASIBLE,
            WorkloadError::Program(_) => EXIT_CONFIG,
            _ => EXIT_INPUT,
        };
        CliError::new(code, e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let threads = cli.threads.or_else(|| {
        std::env::var("FEFETSIM_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::new(EXIT_CONFIG, "--threads must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::new(EXIT_CONFIG, e.to_string()))?;
    }

    let cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::new(EXIT_CONFIG, format!("cannot read {}: {e}", path.display()))
            })?;
            ExperimentConfig::from_toml(&text)?
        }
        None => ExperimentConfig::from_toml("")?,
    };
    let seed = cli.seed.or(cfg.master_seed);

    let output = match &cli.command {
        Command::ProgramStats { cells } => {
            let mem = cfg.to_mem_config();
            let stats =
                population_stats(&mem, cells.unwrap_or(cfg.n_cells), seed.unwrap_or(0))?;
            to_json(&stats)
        }
        Command::Shmoo(args) => {
            let mem = cfg.to_mem_config();
            let domains = non_empty(&args.domains, &DEFAULT_DOMAIN_GRID);
            let bpc = non_empty(&args.bpc, &[1, 2, 3]);
            let schemes = non_empty(&args.schemes, &[SchemeKind::Single, SchemeKind::Verify]);
            let samples = args.samples.unwrap_or(cfg.samples_per_level);
            let table = shmoo(&mem, &domains, &bpc, &schemes, samples, seed.unwrap_or(0))?;
            table.to_csv()
        }
        Command::Array { opt } => {
            let mem = cfg.to_mem_config();
            let stats = population_stats(&mem, cfg.n_cells, seed.unwrap_or(0))?;
            let array_cfg = cfg.to_array_config(&stats)?;
            let (organization, metrics) = match array_cfg.organization {
                Some(org) => (org, fefetsim::array::evaluate_array(&array_cfg)?),
                None => optimize_array(&array_cfg, *opt)?,
            };
            to_json(&ArrayReport {
                target: *opt,
                organization,
                metrics,
            })
        }
        Command::Inject(args) => {
            let seed = require_seed(seed)?;
            let mem = cfg.to_mem_config();
            let graph = load_workload_graph(&cfg, args, seed)?;
            let report = run_injection(
                args.workload,
                graph.as_ref(),
                &mem,
                cfg.workload.n_queries,
                seed,
            )?;
            to_json(&report)
        }
        Command::Minsize(args) => {
            let seed = require_seed(seed)?;
            let mem = cfg.to_mem_config();
            let graph = load_workload_graph(&cfg, &args.inject, seed)?;
            let domains = non_empty(&args.domains, &DEFAULT_DOMAIN_GRID);
            let bpc = non_empty(&args.bpc, &[1, 2, 3]);
            let schemes = non_empty(&args.schemes, &[SchemeKind::Single, SchemeKind::Verify]);
            let rows = min_cell_size_sweep(
                args.inject.workload,
                graph.as_ref(),
                &mem,
                &domains,
                &schemes,
                &bpc,
                args.epsilon.unwrap_or(cfg.workload.epsilon),
                args.replicates.unwrap_or(cfg.replicates),
                cfg.workload.n_queries,
                seed,
            )?;
            minsize_to_csv(&rows)
        }
    };

    match &cli.out {
        Some(path) => fs::write(path, output).map_err(|e| {
            CliError::new(EXIT_INPUT, format!("cannot write {}: {e}", path.display()))
        })?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(output.as_bytes())
                .map_err(|e| CliError::new(EXIT_INPUT, e.to_string()))?;
        }
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct ArrayReport {
    target: OptTarget,
    organization: Organization,
    metrics: fefetsim::array::ArrayMetrics,
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

fn non_empty<T: Clone>(given: &[T], default: &[T]) -> Vec<T> {
    if given.is_empty() {
        default.to_vec()
    } else {
        given.to_vec()
    }
}

fn require_seed(seed: Option<u64>) -> Result<u64, CliError> {
    seed.ok_or_else(|| {
        CliError::new(
            EXIT_CONFIG,
            "--seed (or master_seed in the config) is required for injection commands",
        )
    })
}

/// Resolve the graph input for graph workloads: a generator spec
/// ("er:..." / "clustered:...") or an edge-list file.
fn load_workload_graph(
    cfg: &ExperimentConfig,
    args: &InjectArgs,
    seed: u64,
) -> Result<Option<Graph>, CliError> {
    if args.workload != WorkloadKind::Graph {
        return Ok(None);
    }
    let spec = args.input.as_deref().unwrap_or(&cfg.workload.graph);
    Ok(Some(parse_graph_spec(spec, cfg.workload.directed, seed)?))
}

fn parse_graph_spec(spec: &str, directed: bool, seed: u64) -> Result<Graph, CliError> {
    let bad = |msg: String| CliError::new(EXIT_INPUT, msg);
    if let Some(rest) = spec.strip_prefix("er:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 2 {
            return Err(bad(format!("expected er:<nodes>:<p>, got '{spec}'")));
        }
        let n: usize = parts[0]
            .parse()
            .map_err(|_| bad(format!("bad node count in '{spec}'")))?;
        let p: f64 = parts[1]
            .parse()
            .map_err(|_| bad(format!("bad edge probability in '{spec}'")))?;
        if n == 0 || !(0.0..=1.0).contains(&p) {
            return Err(bad(format!("out-of-range generator parameters in '{spec}'")));
        }
        return Ok(generate_er(n, p, seed));
    }
    if let Some(rest) = spec.strip_prefix("clustered:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 4 {
            return Err(bad(format!(
                "expected clustered:<nodes>:<clusters>:<p_in>:<p_out>, got '{spec}'"
            )));
        }
        let n: usize = parts[0]
            .parse()
            .map_err(|_| bad(format!("bad node count in '{spec}'")))?;
        let k: usize = parts[1]
            .parse()
            .map_err(|_| bad(format!("bad cluster count in '{spec}'")))?;
        let p_in: f64 = parts[2]
            .parse()
            .map_err(|_| bad(format!("bad p_in in '{spec}'")))?;
        let p_out: f64 = parts[3]
            .parse()
            .map_err(|_| bad(format!("bad p_out in '{spec}'")))?;
        if n == 0 || k == 0 || k > n {
            return Err(bad(format!("out-of-range generator parameters in '{spec}'")));
        }
        return Ok(generate_clustered(n, k, p_in, p_out, seed));
    }
    let file = fs::File::open(spec)
        .map_err(|e| bad(format!("cannot open graph input '{spec}': {e}")))?;
    load_edge_list(std::io::BufReader::new(file), directed).map_err(CliError::from)
}
