use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use supermetric::data::{calibrate_radius, calibrate_threshold_empirical, idim, ThresholdSpec};
use supermetric::index::Arity;
use supermetric::planar::PartitionStrategy;
use supermetric::{Exclusion, Metric, Variant};
use supermetric_bench::bench::{run_bench, write_rows, BenchConfig};
use supermetric_bench::overhead::{overhead, overhead_per_object, pivots_per_node};
use supermetric_bench::scatter::{render_svg, run_scatter, PivotMode, ScatterConfig};
use supermetric_bench::source::DataSource;
use supermetric_bench::sweep::{run_dim_sweep, run_scaling, DimSweepConfig, ScalingConfig};
use supermetric_bench::CliError;

#[derive(Parser)]
#[command(name = "supermetric", version, about = "Exact range search experiments in metric and supermetric spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Benchmark index structures with repeated shuffled builds.
    Bench(BenchArgs),
    /// Fraction of uniform data accessed per query across dimensions.
    DimSweep(DimSweepArgs),
    /// Project a sample against one pivot pair and label exclusive queries.
    Scatter(ScatterArgs),
    /// Proportion of data accessed as the dataset grows.
    Scaling(ScalingArgs),
    /// Pivot-table storage of a multi-way hyperplane tree.
    Overhead(OverheadArgs),
    /// Thresholds returning given fractions of the data.
    Calibrate(CalibrateArgs),
    /// Intrinsic dimensionality estimate of a dataset.
    Idim(IdimArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Dataset path (searched under $SUPERMETRIC_DATA_DIR when relative) or synth:n,dim.
    #[arg(long)]
    data: DataSource,
    #[arg(long, default_value = "euclidean")]
    metric: Metric,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long = "structure", required = true)]
    structures: Vec<Variant>,
    #[arg(long = "exclusion", required = true)]
    exclusions: Vec<Exclusion>,
    /// Absolute threshold, or frac:x for the threshold returning fraction x.
    #[arg(long = "threshold", required = true)]
    thresholds: Vec<ThresholdSpec>,
    #[arg(long, default_value_t = 0.10)]
    query_fraction: f64,
    #[arg(long, default_value_t = 0.01)]
    sem_target: f64,
    #[arg(long, default_value_t = 3)]
    min_repeats: usize,
    #[arg(long, default_value_t = 30)]
    max_repeats: usize,
    /// Use only the first N queries of the split.
    #[arg(long)]
    max_queries: Option<usize>,
    /// Cross-check 1% of queries per build against an exhaustive scan.
    #[arg(long)]
    verify: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DimSweepArgs {
    /// Inclusive range such as 2..14.
    #[arg(long, default_value = "2..14")]
    dims: String,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 1_000)]
    queries: usize,
    #[arg(long = "structure")]
    structures: Vec<Variant>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScatterArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "random")]
    pivot_mode: PivotMode,
    #[arg(long)]
    t: f64,
    #[arg(long, default_value = "split_x_median")]
    strategy: PartitionStrategy,
    #[arg(long, default_value_t = 500)]
    points: usize,
    /// Exclusion whose verdicts are drawn solid in the SVG.
    #[arg(long, default_value = "hilbert")]
    exclusion: Exclusion,
    #[arg(long)]
    svg_out: Option<PathBuf>,
    #[arg(long)]
    csv_out: Option<PathBuf>,
}

#[derive(Args)]
struct ScalingArgs {
    /// Dataset path or synth:n,dim; defaults to synthetic 8-dim data large enough for the sizes.
    #[arg(long)]
    data: Option<DataSource>,
    #[arg(long, default_value = "euclidean")]
    metric: Metric,
    #[arg(long, value_delimiter = ',', default_value = "10000,100000,1000000")]
    sizes: Vec<usize>,
    #[arg(long = "structure")]
    structures: Vec<Variant>,
    #[arg(long = "exclusion")]
    exclusions: Vec<Exclusion>,
    #[arg(long, value_delimiter = ',', default_value = "0.00001,0.0001,0.001")]
    fractions: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    queries: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OverheadArgs {
    #[arg(long)]
    n: f64,
    /// binary, fixed or log.
    #[arg(long, default_value = "log")]
    arity: String,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_delimiter = ',', default_value = "0.0001,0.001,0.01")]
    fractions: Vec<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    pairs: usize,
    /// Also report the ball radius with the same volume fraction in the unit cube.
    #[arg(long)]
    analytic: bool,
}

#[derive(Args)]
struct IdimArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 100_000)]
    pairs: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn parse_arity(s: &str) -> Result<Arity, CliError> {
    match s {
        "binary" => Ok(Arity::Binary),
        "fixed" => Ok(Arity::Fixed),
        "log" => Ok(Arity::Log),
        _ => Err(CliError::Usage(format!("unknown arity policy `{s}`; expected binary, fixed or log"))),
    }
}

fn parse_dims(s: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Usage(format!("bad dimension range `{s}`; expected a..b"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim_start_matches('=').trim().parse().map_err(|_| bad())?;
    if a == 0 || b < a {
        return Err(bad());
    }
    Ok((a..=b).collect())
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Bench(a) => {
            let mut config = BenchConfig::new(a.data.metric, a.structures, a.exclusions, a.thresholds);
            config.query_fraction = a.query_fraction;
            config.sem_target = a.sem_target;
            config.min_repeats = a.min_repeats;
            config.max_repeats = a.max_repeats;
            config.seed = a.data.seed;
            config.verify = a.verify;
            config.max_queries = a.max_queries;
            config.validate()?;
            let data = a.data.data.load(a.data.seed)?;
            let start = Instant::now();
            let rows = run_bench(&data, &config)?;
            for r in rows.iter().filter(|r| r.sem > config.sem_target) {
                eprintln!(
                    "warning: {} {} t={} stopped at {} repeats with relative SEM {:.4}",
                    r.structure, r.exclusion, r.threshold, r.repeats, r.sem
                );
            }
            write_rows(&rows, output(&a.out)?)?;
            eprintln!("elapsed {:.1}s", start.elapsed().as_secs_f64());
        }
        Command::DimSweep(a) => {
            let mut config = DimSweepConfig::desk_scale();
            config.dims = parse_dims(&a.dims)?;
            config.n = a.n;
            config.queries = a.queries;
            config.seed = a.seed;
            if !a.structures.is_empty() {
                config.structures = a.structures;
            }
            write_rows(&run_dim_sweep(&config)?, output(&a.out)?)?;
        }
        Command::Scatter(a) => {
            let data = a.data.data.load(a.data.seed)?;
            let config = ScatterConfig {
                metric: a.data.metric,
                points: a.points,
                pivot_mode: a.pivot_mode,
                t: a.t,
                strategy: a.strategy,
                seed: a.data.seed,
            };
            let result = run_scatter(&data, &config)?;
            if let Some(p) = &a.svg_out {
                std::fs::write(p, render_svg(&result, a.exclusion)).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            }
            if let Some(p) = &a.csv_out {
                write_rows(&result.points, output(&Some(p.clone()))?)?;
            }
            println!("pivots,{},{},delta,{}", result.pivots.p1, result.pivots.p2, result.pivots.delta);
            for e in Exclusion::ALL {
                println!("{},non_exclusive,{},of,{}", e.name(), result.non_exclusive(e), result.points.len());
            }
        }
        Command::Scaling(a) => {
            let largest = a.sizes.iter().copied().max().unwrap_or(0);
            let source = match &a.data {
                Some(d) => d.load(a.seed)?,
                None => DataSource::Synthetic { n: largest + a.queries, dim: 8 }.load(a.seed)?,
            };
            let config = ScalingConfig {
                sizes: a.sizes,
                structures: if a.structures.is_empty() {
                    vec![Variant::HptFftLog, Variant::BalancedMonptFar, Variant::LrtFar, Variant::Vpt]
                } else {
                    a.structures
                },
                exclusions: if a.exclusions.is_empty() { Exclusion::ALL.to_vec() } else { a.exclusions },
                fractions: a.fractions,
                queries: a.queries,
                metric: a.metric,
                seed: a.seed,
            };
            write_rows(&run_scaling(&source, &config)?, output(&a.out)?)?;
        }
        Command::Overhead(a) => {
            if !(a.n >= 1.0) {
                return Err(CliError::Usage("n must be at least 1".into()));
            }
            let arity = parse_arity(&a.arity)?;
            println!("n,arity,root_pivots,total_bytes,bytes_per_object");
            println!(
                "{},{},{},{},{}",
                a.n,
                arity.name(),
                pivots_per_node(a.n, arity),
                overhead(a.n, arity),
                overhead_per_object(a.n, arity)
            );
        }
        Command::Calibrate(a) => {
            let data = a.data.data.load(a.data.seed)?;
            println!("fraction,threshold{}", if a.analytic { ",ball_radius" } else { "" });
            for f in a.fractions {
                let pairs = a.pairs.max((100.0 / f).ceil() as usize);
                let t = calibrate_threshold_empirical(&data, &a.data.metric, f, pairs, a.data.seed)?;
                if a.analytic {
                    println!("{f},{t},{}", calibrate_radius(data.dim(), f));
                } else {
                    println!("{f},{t}");
                }
            }
        }
        Command::Idim(a) => {
            let data = a.data.data.load(a.data.seed)?;
            println!("{}", idim(&data, &a.data.metric, a.pairs, a.data.seed)?);
        }
    }
    Ok(())
}
