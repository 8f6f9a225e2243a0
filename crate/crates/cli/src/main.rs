use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gblobs::cloud::PointCloud;
use gblobs::descriptors::{encode_voxels, parse_d_mode, write_feature_csv, write_feature_set, EncoderSpec};
use gblobs::genbench::{self, ExperimentConfig, Report};
use gblobs::synthetic::{write_dataset, DomainSpec, SceneSpec};
use gblobs::voxel::{fraction_at_most, occupancy_histogram, voxelize, GridSpec, DEFAULT_MAX_POINTS};
use gblobs::{io, Error};

#[derive(Parser, Debug)]
#[command(name = "gblobs", version, about = "Gaussian-blob voxel features for lidar point clouds")]
struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Voxelize a cloud and write its feature set.
    Encode(EncodeArgs),
    /// Print the points-per-voxel histogram of a cloud.
    Stats(StatsArgs),
    /// Generate a labeled synthetic dataset.
    Synth(SynthArgs),
    /// Run a domain-generalization experiment.
    Dg(ExperimentArgs),
    /// Run a sparsity or voxel-size sweep.
    Sweep(SweepArgs),
    /// Measure voxelize+encode throughput on 1 and N threads.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    #[value(name = "kitti_bin")]
    KittiBin,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    /// Range ±75.2 m by −2..4 m, voxel 0.1 × 0.1 × 0.15 m.
    WaymoVoxel,
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Point cloud file
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "kitti_bin")]
    format: Format,
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Starting grid; --range, --voxel and --max-points override it.
    #[arg(long, value_enum, default_value = "waymo-voxel")]
    preset: Preset,
    /// xmin ymin zmin xmax ymax zmax
    #[arg(long, num_args = 6, allow_negative_numbers = true, value_names = ["XMIN", "YMIN", "ZMIN", "XMAX", "YMAX", "ZMAX"])]
    range: Option<Vec<f64>>,
    /// Voxel edge lengths x y z.
    #[arg(long, num_args = 3, value_names = ["DX", "DY", "DZ"])]
    voxel: Option<Vec<f64>>,
    /// Points kept per voxel (first K in input order).
    #[arg(long)]
    max_points: Option<usize>,
}

#[derive(Args, Debug)]
struct EncodeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Feature list with options, e.g. `gblobs` or `global+sigma;intensity=1`.
    #[arg(long, default_value = "gblobs")]
    encoder: String,
    /// literal, padded, padded:K or voxel_center.
    #[arg(long)]
    d_mode: Option<String>,
    /// Feature container output.
    #[arg(long)]
    out: PathBuf,
    /// Also write the rows as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Write `occupancy,count` rows here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// TOML scene recipe; defaults apply when omitted.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Preset name, `z=..;density=..;keep=..;noise=..`, or a TOML file.
    #[arg(long, default_value = "identity")]
    domain: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    scenes: usize,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Report directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SweepKind {
    Sparsity,
    Voxel,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_enum)]
    kind: SweepKind,
    #[command(flatten)]
    exp: ExperimentArgs,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Cloud to encode; a synthetic scan is generated when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "kitti_bin")]
    format: Format,
    /// Size of the generated scan.
    #[arg(long, default_value_t = 160_000)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long, default_value = "gblobs")]
    encoder: String,
}

fn load(input: &Path, format: Format) -> Result<PointCloud> {
    Ok(match format {
        Format::KittiBin => io::load_kitti_bin(input)?,
        Format::Csv => io::load_xyz_csv(input)?,
    })
}

fn resolve_grid(g: &GridArgs) -> Result<GridSpec> {
    let base = match g.preset {
        Preset::WaymoVoxel => GridSpec::waymo(DEFAULT_MAX_POINTS),
    };
    let range = match &g.range {
        Some(r) => [r[0], r[1], r[2], r[3], r[4], r[5]],
        None => {
            let (lo, hi) = (base.range_min(), base.range_max());
            [lo[0], lo[1], lo[2], hi[0], hi[1], hi[2]]
        }
    };
    let voxel = g.voxel.as_ref().map_or(base.voxel_size(), |v| [v[0], v[1], v[2]]);
    let k = g.max_points.unwrap_or(base.max_points_per_voxel());
    Ok(GridSpec::from_range(range, voxel, k)?)
}

fn echo_grid(grid: &GridSpec) {
    println!(
        "grid: range {:?}..{:?} voxel {:?} max_points {}",
        grid.range_min(),
        grid.range_max(),
        grid.voxel_size(),
        grid.max_points_per_voxel()
    );
}

fn cmd_encode(a: &EncodeArgs) -> Result<()> {
    let grid = resolve_grid(&a.grid)?;
    let mut enc: EncoderSpec = a.encoder.parse()?;
    if let Some(m) = &a.d_mode {
        let (mode, cap) = parse_d_mode(m)?;
        enc.d_mode = mode;
        enc.capacity = cap;
    }
    println!("input: {} ({:?})", a.input.input.display(), a.input.format);
    echo_grid(&grid);
    println!("encoder: {enc}");
    let cloud = load(&a.input.input, a.input.format)?;
    let vs = voxelize(&cloud, &grid);
    let fs = encode_voxels(&cloud, &vs, &enc)?;
    write_feature_set(&fs, &a.out)?;
    if let Some(csv) = &a.csv {
        write_feature_csv(&fs, csv)?;
    }
    if fs.is_empty() {
        eprintln!("warning: no point of {} falls inside the grid range", a.input.input.display());
    }
    println!("rows: {}", fs.len());
    println!("width: {}", fs.width());
    println!("dropped: {}", vs.dropped());
    println!("truncated: {}", vs.truncated());
    Ok(())
}

fn cmd_stats(a: &StatsArgs) -> Result<()> {
    let grid = resolve_grid(&a.grid)?;
    println!("input: {} ({:?})", a.input.input.display(), a.input.format);
    echo_grid(&grid);
    let cloud = load(&a.input.input, a.input.format)?;
    let vs = voxelize(&cloud, &grid);
    let hist = occupancy_histogram(&vs);
    println!("voxels: {}", vs.len());
    println!("occupancy count");
    for (n, c) in &hist {
        println!("{n} {c}");
    }
    println!("fraction_at_most_2: {}", fraction_at_most(&hist, 2));
    if let Some(path) = &a.csv {
        let mut s = String::from("occupancy,count\n");
        for (n, c) in &hist {
            s.push_str(&format!("{n},{c}\n"));
        }
        std::fs::write(path, s).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let spec = match &a.spec {
        Some(p) => SceneSpec::load(p)?,
        None => SceneSpec::default(),
    };
    let dom = DomainSpec::resolve(&a.domain)?;
    println!("seed: {}", a.seed);
    println!("domain: {dom}");
    println!("scenes: {}", a.scenes);
    println!("spec: {spec:?}");
    let m = write_dataset(&a.out_dir, &spec, &dom, a.seed, a.scenes)?;
    let points: usize = m.scenes.iter().map(|s| s.points).sum();
    println!("wrote {} scenes ({points} points) to {}", m.scenes.len(), a.out_dir.display());
    println!("spec_hash: {}", m.spec_hash);
    Ok(())
}

/// Echo the config, run, write the report; experiment failures map to exit 3
/// after the partial report is on disk.
fn run_experiment(a: &ExperimentArgs, run: fn(&ExperimentConfig) -> gblobs::Result<Report>) -> Result<()> {
    let cfg = ExperimentConfig::load(&a.config)?;
    println!("# config {} (hash {})", a.config.display(), cfg.hash());
    print!("{}", cfg.to_toml_string());
    println!("# seeds {:?}", cfg.seeds);
    let report = run(&cfg)?;
    report.write(&a.out)?;
    for c in &report.cells {
        let x = c.x.map(|v| format!(" x={v}")).unwrap_or_default();
        println!(
            "{:<16} {:<14}{x} width {:>3}  acc {:.3} ± {:.3}  (n={})",
            c.domain, c.feature_set, c.width, c.mean, c.std, c.n_seeds
        );
    }
    for o in &report.occupancy {
        println!("occupancy x={}  fraction_at_most_2 {:.3}", o.x, o.fraction_at_most_2);
    }
    println!("report: {}", a.out.join("report.json").display());
    if !report.failures.is_empty() {
        for f in &report.failures {
            eprintln!("failed: {f}");
        }
        return Err(Error::TrainingFailure(format!("{} of {} seeds failed", report.failures.len(), cfg.seeds.len())).into());
    }
    Ok(())
}

fn cmd_bench(a: &BenchArgs, threads: usize) -> Result<()> {
    let cloud = match &a.input {
        Some(p) => load(p, a.format)?,
        None => genbench::bench_cloud(a.points, a.seed)?,
    };
    let grid = GridSpec::waymo(DEFAULT_MAX_POINTS);
    let enc: EncoderSpec = a.encoder.parse()?;
    println!("points: {}  seed: {}  threads: {threads}  encoder: {enc}", cloud.len(), a.seed);
    echo_grid(&grid);
    let r = genbench::run_bench(&cloud, &grid, &enc, threads, a.reps)?;
    println!("rows: {}", r.rows);
    println!("1 thread: {:.3} s, {:.0} points/s", r.secs_single, r.points_per_sec_single());
    println!("{threads} threads: {:.3} s, {:.0} points/s", r.secs_multi, r.points_per_sec_multi());
    println!("speedup: {:.2}x", r.speedup);
    println!("identical output: {}", r.identical);
    if !r.identical {
        bail!("outputs differ between 1 and {threads} threads");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let threads = match cli.threads {
        Some(0) => return Err(Error::Config("--threads must be positive".into()).into()),
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .context("configuring the thread pool")?;
            n
        }
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    match &cli.command {
        Command::Encode(a) => cmd_encode(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Dg(a) => run_experiment(a, genbench::run_dg_experiment),
        Command::Sweep(a) => match a.kind {
            SweepKind::Sparsity => run_experiment(&a.exp, genbench::run_sparsity_sweep),
            SweepKind::Voxel => run_experiment(&a.exp, genbench::run_voxel_sweep),
        },
        Command::Bench(a) => cmd_bench(a, threads),
    }
}

/// 1 usage or config, 2 data, 3 experiment failure.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|c| c.downcast_ref::<Error>()) {
        Some(Error::Config(_) | Error::InvalidArgument(_) | Error::InvalidTransform(_)) => 1,
        Some(Error::GenerationFailure(_) | Error::TrainingFailure(_)) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
