//! Command-line front end: build networks to files, label frames with the
//! reference classifier or by simulation, verify constructions against the
//! reference, benchmark sizes and deployment rates, and render label grids.
//!
//! Exit codes: 0 success (and verification pass), 1 verification failure,
//! 2 usage or input errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use snn_dbscan::codec::{
    decode_flat_sequence, decode_systolic_stream, encode_flat, encode_systolic,
};
use snn_dbscan::netfmt::{deserialize, serialize};
use snn_dbscan::{
    build_flat, build_partial_flat, build_partial_systolic, build_systolic, classify,
    estimate_deployment, format_hz, format_seconds, parse_exact, plan_partitions, plan_to_text,
    systolic_reuse_interval, systolic_solution_steps, timing_contract, validate, BoundaryPolicy,
    Bottleneck, BuilderKind, DbscanParams, DeploymentModel, Error, EventFrame, LabelGrid, Network,
    Orientation, PartitionPlanOptions, Result, Simulator, SpikeSchedule, VerifyMode,
    VerifyOptions, FLAT_SOLUTION_STEPS,
};

#[derive(Parser)]
#[command(
    name = "snn-dbscan",
    version,
    about = "Compile grid density clustering into spiking networks, simulate, and verify"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a network and report its size
    Build(BuildArgs),
    /// Label a frame with the reference classifier
    Classify(ClassifyArgs),
    /// Simulate a network file on frame files and decode the labels
    Run(RunArgs),
    /// Check a construction end to end against the reference classifier
    Verify(VerifyArgs),
    /// Print size, timing, and deployment numbers for a construction
    Bench(BenchArgs),
    /// Render a label-grid file as bare glyph rows
    Render(RenderArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BuilderArg {
    Flat,
    Systolic,
    PartialFlat,
    PartialSystolic,
}

impl BuilderArg {
    fn kind(self) -> BuilderKind {
        match self {
            BuilderArg::Flat => BuilderKind::Flat,
            BuilderArg::Systolic => BuilderKind::Systolic,
            BuilderArg::PartialFlat => BuilderKind::PartialFlat,
            BuilderArg::PartialSystolic => BuilderKind::PartialSystolic,
        }
    }

    fn streams(self) -> bool {
        matches!(self, BuilderArg::Systolic | BuilderArg::PartialSystolic)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Delete,
    Retain,
}

impl PolicyArg {
    fn policy(self) -> BoundaryPolicy {
        match self {
            PolicyArg::Delete => BoundaryPolicy::Delete,
            PolicyArg::Retain => BoundaryPolicy::RetainFeedZero,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OrientationArg {
    Columns,
    Rows,
}

impl OrientationArg {
    fn orientation(self) -> Orientation {
        match self {
            OrientationArg::Columns => Orientation::Columns,
            OrientationArg::Rows => Orientation::Rows,
        }
    }
}

#[derive(Args)]
struct InstanceArgs {
    /// Grid rows
    #[arg(long)]
    rows: u32,
    /// Grid columns; optional for width-independent streaming networks
    #[arg(long)]
    cols: Option<u32>,
    /// Neighborhood radius
    #[arg(long)]
    epsilon: u32,
    /// Density threshold
    #[arg(long)]
    minpts: u32,
}

impl InstanceArgs {
    fn params(&self, width_free: bool) -> Result<DbscanParams> {
        let cols = match (self.cols, width_free) {
            (Some(c), _) => c,
            (None, true) => 1,
            (None, false) => {
                return Err(Error::InvalidParams(
                    "--cols is required for this builder".into(),
                ))
            }
        };
        DbscanParams::new(self.rows, cols, self.epsilon, self.minpts)
    }
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long, value_enum)]
    builder: BuilderArg,
    #[command(flatten)]
    instance: InstanceArgs,
    /// Stream orientation: transpose the grid before building
    #[arg(long, value_enum, default_value = "columns")]
    orientation: OrientationArg,
    /// Split into blocks of `R` or `R,C` output rows/cols and build one part
    #[arg(long, value_name = "R[,C]")]
    partition: Option<String>,
    /// Grid-border handling for partitioned builds
    #[arg(long, value_enum, default_value = "delete")]
    policy: PolicyArg,
    /// Which part of the partition plan to build
    #[arg(long, default_value_t = 0)]
    part: usize,
    /// Write the network here; without it only the summary is printed
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Frame file (sparse `r c` list or dense bitmap)
    frame: PathBuf,
    #[arg(long)]
    epsilon: u32,
    #[arg(long)]
    minpts: u32,
}

#[derive(Args)]
struct RunArgs {
    /// Network file produced by `build`
    network: PathBuf,
    /// One frame file, or several with --pipeline/--stream
    #[arg(required = true)]
    frames: Vec<PathBuf>,
    /// Feed one frame per timestep into a grid-shaped network
    #[arg(long, conflicts_with = "stream")]
    pipeline: bool,
    /// Feed frames at the reuse interval into a streaming network
    #[arg(long)]
    stream: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    builder: BuilderArg,
    #[command(flatten)]
    instance: InstanceArgs,
    /// Run every frame the grid can hold (16 cells at most)
    #[arg(long, conflicts_with = "random")]
    exhaustive: bool,
    /// Run N seeded random frames
    #[arg(long, value_name = "N")]
    random: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Event probability for random frames
    #[arg(long, default_value_t = snn_dbscan::DEFAULT_DENSITY)]
    density: f64,
    #[arg(long, value_enum, default_value = "columns")]
    orientation: OrientationArg,
    /// Block shape `R` or `R,C` for the partial builders
    #[arg(long, value_name = "R[,C]")]
    partition: Option<String>,
    #[arg(long, value_enum, default_value = "delete")]
    policy: PolicyArg,
    /// Delete one synapse first; verification must then fail
    #[arg(long)]
    inject_fault: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    builder: BuilderArg,
    #[command(flatten)]
    instance: InstanceArgs,
    /// Deployment model `clock_hz,io_slot_seconds,events` (exact decimals)
    #[arg(long, value_name = "CLOCK,IO,EVENTS")]
    deploy: Option<String>,
}

#[derive(Args)]
struct RenderArgs {
    /// Label-grid file as written by `classify` or `run`
    labels: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok((out, code)) => {
            // A reader that hangs up early (e.g. `| head`) is not an error.
            use std::io::Write;
            let _ = std::io::stdout().write_all(out.as_bytes());
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

type Output = (String, ExitCode);

fn dispatch(cli: Cli) -> Result<Output> {
    match cli.cmd {
        Cmd::Build(args) => build(args),
        Cmd::Classify(args) => run_classify(args),
        Cmd::Run(args) => run(args),
        Cmd::Verify(args) => run_verify(args),
        Cmd::Bench(args) => bench(args),
        Cmd::Render(args) => render(args),
    }
}

fn parse_blocks(s: &str) -> Result<(u32, Option<u32>)> {
    let bad = || Error::InvalidParams(format!("--partition expects `R` or `R,C`, got {s:?}"));
    match s.split_once(',') {
        Some((r, c)) => Ok((
            r.trim().parse().map_err(|_| bad())?,
            Some(c.trim().parse().map_err(|_| bad())?),
        )),
        None => Ok((s.trim().parse().map_err(|_| bad())?, None)),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::InvalidParams(format!("cannot read {}: {e}", path.display())))
}

fn build(args: BuildArgs) -> Result<Output> {
    let width_free = args.builder.streams();
    let params = args.instance.params(width_free)?;
    let mut out = String::new();

    let net = match &args.partition {
        None => match args.builder {
            BuilderArg::Flat => build_flat(&params, args.orientation.orientation()),
            BuilderArg::Systolic => build_systolic(&params, args.orientation.orientation()),
            _ => {
                return Err(Error::InvalidParams(
                    "use --builder flat|systolic with --partition to build parts".into(),
                ))
            }
        },
        Some(blocks) => {
            if args.orientation != OrientationArg::Columns {
                return Err(Error::InvalidParams(
                    "partitioned builds support the columns orientation only".into(),
                ));
            }
            let (block_rows, block_cols) = parse_blocks(blocks)?;
            if width_free && block_cols.is_some() {
                return Err(Error::InvalidParams(
                    "streaming blocks span the full width; give --partition R only".into(),
                ));
            }
            let plan = plan_partitions(&params, block_rows, block_cols, args.policy.policy())?;
            out.push_str(&plan_to_text(&plan));
            let spec = plan.get(args.part).ok_or_else(|| {
                Error::InvalidParams(format!(
                    "--part {} out of range, plan has {} parts",
                    args.part,
                    plan.len()
                ))
            })?;
            match args.builder {
                BuilderArg::Flat => build_partial_flat(spec, params.min_pts())?,
                BuilderArg::Systolic => build_partial_systolic(spec, params.min_pts())?,
                _ => unreachable!("partial builders rejected above"),
            }
        }
    };

    out.push_str(&format!(
        "{} neurons, {} synapses\n",
        net.neuron_count(),
        net.synapse_count()
    ));
    if let Some(path) = &args.output {
        fs::write(path, serialize(&net))
            .map_err(|e| Error::InvalidParams(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok((out, ExitCode::SUCCESS))
}

fn run_classify(args: ClassifyArgs) -> Result<Output> {
    let frame = EventFrame::parse(&read(&args.frame)?)?;
    let params = DbscanParams::new(frame.rows(), frame.cols(), args.epsilon, args.minpts)?;
    Ok((classify(&frame, &params)?.to_text(), ExitCode::SUCCESS))
}

fn run(args: RunArgs) -> Result<Output> {
    let net = deserialize(&read(&args.network)?)?;
    let frames: Vec<EventFrame> = args
        .frames
        .iter()
        .map(|p| Ok(EventFrame::parse(&read(p)?)?))
        .collect::<Result<_>>()?;

    let builder = net.meta().builder;
    let streaming = match builder {
        BuilderKind::Flat => false,
        BuilderKind::Systolic => true,
        other => {
            return Err(Error::InvalidParams(format!(
                "run supports flat and systolic networks; {} networks are driven by verify",
                other.token()
            )))
        }
    };
    if args.pipeline && streaming {
        return Err(Error::InvalidParams(
            "--pipeline needs a flat network; use --stream".into(),
        ));
    }
    if args.stream && !streaming {
        return Err(Error::InvalidParams(
            "--stream needs a systolic network; use --pipeline".into(),
        ));
    }
    if !args.pipeline && !args.stream && frames.len() != 1 {
        return Err(Error::InvalidParams(
            "multiple frames need --pipeline or --stream".into(),
        ));
    }

    // Networks built in rows orientation expect transposed frames.
    let transpose = net.meta().orientation == Orientation::Rows;
    let oriented: Vec<EventFrame> = frames
        .iter()
        .map(|f| if transpose { f.transposed() } else { f.clone() })
        .collect();

    let grids = simulate_frames(&net, &oriented, streaming)?;
    let mut out = String::new();
    for (i, grid) in grids.into_iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let grid = if transpose { grid.transposed() } else { grid };
        out.push_str(&grid.to_text());
    }
    Ok((out, ExitCode::SUCCESS))
}

fn simulate_frames(
    net: &Network,
    frames: &[EventFrame],
    streaming: bool,
) -> Result<Vec<LabelGrid>> {
    let sim = Simulator::new(net)?;
    let eps = net.meta().epsilon;
    let mut sched = SpikeSchedule::new();
    if streaming {
        let cols = frames[0].cols();
        let interval = systolic_reuse_interval(cols, eps);
        for (k, frame) in frames.iter().enumerate() {
            sched.extend(&encode_systolic(net, frame, k as u32 * interval)?);
        }
        let horizon =
            (frames.len() as u32 - 1) * interval + systolic_solution_steps(cols, eps);
        let raster = sim.run(&sched, horizon)?;
        decode_systolic_stream(net, &raster, 0, interval, frames)
    } else {
        for (k, frame) in frames.iter().enumerate() {
            sched.extend(&encode_flat(net, frame, k as u32)?);
        }
        let horizon = frames.len() as u32 - 1 + FLAT_SOLUTION_STEPS;
        let raster = sim.run(&sched, horizon)?;
        decode_flat_sequence(net, &raster, 0, 1, frames)
    }
}

fn run_verify(args: VerifyArgs) -> Result<Output> {
    let params = args.instance.params(false)?;
    let mode = match (args.exhaustive, args.random) {
        (true, None) => VerifyMode::Exhaustive,
        (false, Some(frames)) => VerifyMode::Random {
            frames,
            seed: args.seed,
            density: args.density,
        },
        _ => {
            return Err(Error::InvalidParams(
                "choose exactly one of --exhaustive or --random N".into(),
            ))
        }
    };
    let partition = args
        .partition
        .as_deref()
        .map(parse_blocks)
        .transpose()?
        .map(|(block_rows, block_cols)| PartitionPlanOptions {
            block_rows,
            block_cols,
            policy: args.policy.policy(),
        });
    let opts = VerifyOptions {
        orientation: args.orientation.orientation(),
        partition,
        inject_fault: args.inject_fault,
    };
    let report = snn_dbscan::verify(args.builder.kind(), &params, mode, &opts)?;
    let code = if report.pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    };
    Ok((report.render(), code))
}

fn bench(args: BenchArgs) -> Result<Output> {
    let width_free = args.builder.streams();
    let params = args.instance.params(width_free)?;
    let builder = args.builder.kind();
    let net = match builder {
        BuilderKind::Flat => build_flat(&params, Orientation::Columns),
        BuilderKind::Systolic => build_systolic(&params, Orientation::Columns),
        _ => {
            return Err(Error::InvalidParams(
                "bench covers the full constructions; partial sizes come from build".into(),
            ))
        }
    };
    let report = validate(&net);
    if !report.is_valid() {
        return Err(Error::Network(format!(
            "generated network fails validation: {}",
            report.violations.join("; ")
        )));
    }

    let mut rows: Vec<(String, String)> = vec![
        ("builder".into(), builder.token().into()),
        (
            "grid".into(),
            if width_free && args.instance.cols.is_none() {
                format!("{} rows, any width", params.rows())
            } else {
                format!("{}x{}", params.rows(), params.cols())
            },
        ),
        ("epsilon".into(), params.epsilon().to_string()),
        ("minpts".into(), params.min_pts().to_string()),
        ("neurons".into(), report.neurons.to_string()),
        ("synapses".into(), report.synapses.to_string()),
        ("max fan-in".into(), report.max_fan_in.to_string()),
        ("max fan-out".into(), report.max_fan_out.to_string()),
        ("max threshold".into(), report.max_threshold.to_string()),
        ("max delay".into(), report.max_delay.to_string()),
    ];
    if !width_free || args.instance.cols.is_some() {
        let (tts, reuse) = timing_contract(builder, &params)?;
        rows.push(("timesteps to solution".into(), tts.to_string()));
        rows.push(("reuse interval".into(), reuse.to_string()));
    }

    if let Some(spec) = &args.deploy {
        let fields: Vec<&str> = spec.split(',').collect();
        let [clock, io, events] = fields.as_slice() else {
            return Err(Error::InvalidParams(format!(
                "--deploy expects `clock_hz,io_slot_seconds,events`, got {spec:?}"
            )));
        };
        let events: u64 = events.trim().parse().map_err(|_| {
            Error::InvalidParams(format!("bad event count in --deploy: {events:?}"))
        })?;
        let model = DeploymentModel::new(parse_exact(clock)?, parse_exact(io)?, events)?;
        let dep = estimate_deployment(builder, &params, &model)?;
        rows.push(("compute time".into(), format_seconds(dep.compute_time)));
        rows.push(("input time".into(), format_seconds(dep.input_time)));
        rows.push(("rate".into(), format_hz(dep.rate_hz)));
        rows.push((
            "bottleneck".into(),
            match dep.bottleneck {
                Bottleneck::Io => "I/O".into(),
                Bottleneck::Compute => "compute".into(),
            },
        ));
    }

    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in rows {
        out.push_str(&format!("{k:width$}  {v}\n"));
    }
    Ok((out, ExitCode::SUCCESS))
}

fn render(args: RenderArgs) -> Result<Output> {
    let grid = LabelGrid::parse(&read(&args.labels)?)?;
    Ok((grid.render(), ExitCode::SUCCESS))
}
