//! End-to-end verification: build a network once, push frames through
//! encode, simulate, decode, and compare every cell against the reference
//! classifier. Mismatches land in a report instead of erroring, so a broken
//! network produces a FAIL line rather than a panic.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::codec::{
    decode_flat, decode_flat_sequence, decode_systolic, decode_systolic_stream, encode_flat,
    encode_systolic,
};
use crate::error::{Error, Result};
use crate::flat::{build_flat, FLAT_SOLUTION_STEPS};
use crate::grid::{classify, DbscanParams, EventFrame, Label, LabelGrid};
use crate::network::{BuilderKind, Network, Orientation};
use crate::partition::{
    build_partial_flat, build_partial_systolic, decode_partial_flat, decode_partial_systolic,
    encode_partial_flat, encode_partial_systolic, merge_partition_outputs, plan_partitions,
    BoundaryPolicy, PartitionSpec,
};
use crate::sim::{SimStats, Simulator, SpikeSchedule};
use crate::systolic::{build_systolic, systolic_reuse_interval, systolic_solution_steps};

/// Event probability used when no density is given.
pub const DEFAULT_DENSITY: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VerifyMode {
    /// Every frame the grid can hold; grids above 16 cells are rejected.
    Exhaustive,
    Random { frames: u32, seed: u64, density: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionPlanOptions {
    pub block_rows: u32,
    /// `None` streams whole rows (and is the only choice for the streaming
    /// construction).
    pub block_cols: Option<u32>,
    pub policy: BoundaryPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub orientation: Orientation,
    /// Required for the partial builders, ignored otherwise.
    pub partition: Option<PartitionPlanOptions>,
    /// Delete one synapse from the middle of the network before running.
    pub inject_fault: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            orientation: Orientation::Columns,
            partition: None,
            inject_fault: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mismatch {
    pub frame: u32,
    pub cell: (u32, u32),
    pub expected: Label,
    pub got: Label,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub params: DbscanParams,
    pub builder: BuilderKind,
    pub orientation: Orientation,
    pub frames_tested: u32,
    pub mismatches: Vec<Mismatch>,
    /// Decode refusals (off-contract spikes), one line per affected frame.
    pub violations: Vec<String>,
    pub stats: SimStats,
}

impl RunReport {
    pub fn pass(&self) -> bool {
        self.mismatches.is_empty() && self.violations.is_empty()
    }

    /// One machine-readable line:
    /// `PASS|FAIL builder R C eps minpts frames mismatches`.
    pub fn summary_line(&self) -> String {
        format!(
            "{} {} {} {} {} {} {} {}",
            if self.pass() { "PASS" } else { "FAIL" },
            self.builder.token(),
            self.params.rows(),
            self.params.cols(),
            self.params.epsilon(),
            self.params.min_pts(),
            self.frames_tested,
            self.mismatches.len()
        )
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{} on {}x{} eps={} minpts={} ({}): {} frames, {} mismatches, {} violations\n",
            self.builder.token(),
            self.params.rows(),
            self.params.cols(),
            self.params.epsilon(),
            self.params.min_pts(),
            self.orientation.token(),
            self.frames_tested,
            self.mismatches.len(),
            self.violations.len()
        ));
        out.push_str(&format!(
            "simulated {} timesteps, {} deliveries, {} fires\n",
            self.stats.timesteps, self.stats.deliveries, self.stats.fires
        ));
        for m in self.mismatches.iter().take(10) {
            out.push_str(&format!(
                "  frame {} cell ({}, {}): expected {}, got {}\n",
                m.frame, m.cell.0, m.cell.1, m.expected, m.got
            ));
        }
        if self.mismatches.len() > 10 {
            out.push_str(&format!("  ... {} more\n", self.mismatches.len() - 10));
        }
        for v in self.violations.iter().take(10) {
            out.push_str(&format!("  {v}\n"));
        }
        out.push_str(&self.summary_line());
        out.push('\n');
        out
    }
}

/// Reproducible random frames at the given event density.
pub fn random_frames(rows: u32, cols: u32, n: u32, seed: u64, density: f64) -> Vec<EventFrame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| EventFrame::random(rows, cols, density, &mut rng))
        .collect()
}

fn mode_frames(params: &DbscanParams, mode: VerifyMode) -> Result<Vec<EventFrame>> {
    match mode {
        VerifyMode::Exhaustive => {
            let cells = params.rows() * params.cols();
            if cells > 16 {
                return Err(Error::InvalidParams(format!(
                    "exhaustive verification of {cells} cells would take 2^{cells} frames"
                )));
            }
            Ok((0..1u64 << cells)
                .map(|code| EventFrame::from_code(params.rows(), params.cols(), code))
                .collect())
        }
        VerifyMode::Random { frames, seed, density } => {
            if !(0.0..=1.0).contains(&density) {
                return Err(Error::InvalidParams(format!(
                    "density must be in [0, 1], got {density}"
                )));
            }
            Ok(random_frames(params.rows(), params.cols(), frames, seed, density))
        }
    }
}

/// One full-construction network prepared for repeated frames.
struct FullRunner {
    net: Network,
    horizon: u32,
}

impl FullRunner {
    fn build(builder: BuilderKind, params: &DbscanParams, opts: &VerifyOptions) -> Result<Self> {
        let net = match builder {
            BuilderKind::Flat => build_flat(params, opts.orientation),
            BuilderKind::Systolic => build_systolic(params, opts.orientation),
            other => {
                return Err(Error::InvalidParams(format!(
                    "full runner cannot build {} networks",
                    other.token()
                )))
            }
        };
        // The first synapse feeds a neighborhood count (grid form) or the
        // first shift chain (streaming form); losing it flips labels.
        let net = if opts.inject_fault {
            net.with_synapse_removed(0)?
        } else {
            net
        };
        let streamed_cols = match opts.orientation {
            Orientation::Columns => params.cols(),
            Orientation::Rows => params.rows(),
        };
        let horizon = match builder {
            BuilderKind::Flat => FLAT_SOLUTION_STEPS,
            _ => systolic_solution_steps(streamed_cols, params.epsilon()),
        };
        Ok(Self { net, horizon })
    }

    /// Runs one frame (already in network orientation) and decodes it.
    fn run(&self, sim: &Simulator, frame: &EventFrame, stats: &mut SimStats) -> Result<LabelGrid> {
        let (sched, decode): (SpikeSchedule, _) = match self.net.meta().builder {
            BuilderKind::Flat => (encode_flat(&self.net, frame, 0)?, decode_flat as DecodeFn),
            _ => (encode_systolic(&self.net, frame, 0)?, decode_systolic as DecodeFn),
        };
        let (raster, s) = sim.run_with_stats(&sched, self.horizon)?;
        accumulate(stats, s);
        decode(&self.net, &raster, 0, frame)
    }
}

type DecodeFn = fn(&Network, &crate::sim::SpikeRaster, u32, &EventFrame) -> Result<LabelGrid>;

fn accumulate(total: &mut SimStats, s: SimStats) {
    total.timesteps += s.timesteps;
    total.deliveries += s.deliveries;
    total.fires += s.fires;
}

/// A partition plan with its networks built once. Blocks of equal retained
/// shape share one network.
pub struct PartitionRunner {
    base: BuilderKind,
    plan: Vec<(PartitionSpec, usize)>,
    nets: Vec<Network>,
    horizon_for: fn(&PartitionSpec, u32) -> u32,
}

impl PartitionRunner {
    /// `base` is the underlying construction: `Flat` or `Systolic`.
    pub fn build(
        base: BuilderKind,
        params: &DbscanParams,
        opts: PartitionPlanOptions,
    ) -> Result<Self> {
        let (build, horizon_for): (fn(&PartitionSpec, u32) -> Result<Network>, _) = match base {
            BuilderKind::Flat | BuilderKind::PartialFlat => (
                build_partial_flat,
                (|_, _| FLAT_SOLUTION_STEPS) as fn(&PartitionSpec, u32) -> u32,
            ),
            BuilderKind::Systolic | BuilderKind::PartialSystolic => (
                build_partial_systolic,
                (|spec: &PartitionSpec, eps| systolic_solution_steps(spec.grid_cols, eps))
                    as fn(&PartitionSpec, u32) -> u32,
            ),
            BuilderKind::Custom => {
                return Err(Error::InvalidParams(
                    "no partitioned form of custom networks".into(),
                ))
            }
        };
        let block_cols = match base {
            BuilderKind::Flat | BuilderKind::PartialFlat => opts.block_cols,
            _ => None,
        };
        let specs = plan_partitions(params, opts.block_rows, block_cols, opts.policy)?;

        // Retained blocks are position-free; build one network per shape.
        let mut plan = Vec::with_capacity(specs.len());
        let mut nets: Vec<Network> = Vec::new();
        let mut shapes: Vec<(u32, u32)> = Vec::new();
        for spec in specs {
            let shape = (spec.out_rows, spec.out_cols);
            let reuse = match spec.policy {
                BoundaryPolicy::RetainFeedZero => shapes.iter().position(|&s| s == shape),
                BoundaryPolicy::Delete => None,
            };
            let idx = match reuse {
                Some(i) => i,
                None => {
                    nets.push(build(&spec, params.min_pts())?);
                    shapes.push(match spec.policy {
                        BoundaryPolicy::RetainFeedZero => shape,
                        // Deleted blocks are position-bound; never reused.
                        BoundaryPolicy::Delete => (u32::MAX, u32::MAX),
                    });
                    nets.len() - 1
                }
            };
            plan.push((spec, idx));
        }
        let base = match base {
            BuilderKind::Flat | BuilderKind::PartialFlat => BuilderKind::PartialFlat,
            _ => BuilderKind::PartialSystolic,
        };
        Ok(Self {
            base,
            plan,
            nets,
            horizon_for,
        })
    }

    pub fn networks(&self) -> &[Network] {
        &self.nets
    }

    pub fn parts(&self) -> usize {
        self.plan.len()
    }

    /// Runs every block on one full-grid frame and stitches the labels.
    pub fn run(&self, frame: &EventFrame, stats: &mut SimStats) -> Result<LabelGrid> {
        let eps = self.plan[0].0.ring;
        let mut parts = Vec::with_capacity(self.plan.len());
        for &(spec, idx) in &self.plan {
            let net = &self.nets[idx];
            let sim = Simulator::new(net)?;
            let flat = self.base == BuilderKind::PartialFlat;
            let sched = if flat {
                encode_partial_flat(net, &spec, frame, 0)?
            } else {
                encode_partial_systolic(net, &spec, frame, 0)?
            };
            let (raster, s) = sim.run_with_stats(&sched, (self.horizon_for)(&spec, eps))?;
            accumulate(stats, s);
            let labels = if flat {
                decode_partial_flat(net, &spec, &raster, 0, frame)?
            } else {
                decode_partial_systolic(net, &spec, &raster, 0, frame)?
            };
            parts.push((spec, labels));
        }
        merge_partition_outputs(&parts)
    }
}

/// Builds once, then checks every frame of `mode` end to end against the
/// reference classifier.
pub fn verify(
    builder: BuilderKind,
    params: &DbscanParams,
    mode: VerifyMode,
    opts: &VerifyOptions,
) -> Result<RunReport> {
    let frames = mode_frames(params, mode)?;
    let mut report = RunReport {
        params: *params,
        builder,
        orientation: opts.orientation,
        frames_tested: 0,
        mismatches: Vec::new(),
        violations: Vec::new(),
        stats: SimStats::default(),
    };

    enum Engine {
        Full(FullRunner),
        Parts(PartitionRunner),
    }

    let engine = match builder {
        BuilderKind::Flat | BuilderKind::Systolic => {
            Engine::Full(FullRunner::build(builder, params, opts)?)
        }
        BuilderKind::PartialFlat | BuilderKind::PartialSystolic => {
            if opts.orientation != Orientation::Columns {
                return Err(Error::InvalidParams(
                    "partitioned runs support the columns orientation only".into(),
                ));
            }
            let popts = opts.partition.ok_or_else(|| {
                Error::InvalidParams("partial builders need a partition plan".into())
            })?;
            let mut runner = PartitionRunner::build(builder, params, popts)?;
            if opts.inject_fault {
                runner.nets[0] = runner.nets[0].with_synapse_removed(0)?;
            }
            Engine::Parts(runner)
        }
        BuilderKind::Custom => {
            return Err(Error::InvalidParams(
                "verification needs a generated builder".into(),
            ))
        }
    };

    let sim_holder;
    let sim = match &engine {
        Engine::Full(f) => {
            sim_holder = Simulator::new(&f.net)?;
            Some(&sim_holder)
        }
        Engine::Parts(_) => None,
    };

    for (k, frame) in frames.iter().enumerate() {
        let expected = classify(frame, params)?;
        let got = match &engine {
            Engine::Full(f) => {
                let oriented = match opts.orientation {
                    Orientation::Columns => frame.clone(),
                    Orientation::Rows => frame.transposed(),
                };
                f.run(sim.unwrap(), &oriented, &mut report.stats).map(|labels| {
                    match opts.orientation {
                        Orientation::Columns => labels,
                        Orientation::Rows => labels.transposed(),
                    }
                })
            }
            Engine::Parts(p) => p.run(frame, &mut report.stats),
        };
        report.frames_tested += 1;
        match got {
            Ok(labels) => {
                for (r, c, expected, got) in expected.diff(&labels) {
                    report.mismatches.push(Mismatch {
                        frame: k as u32,
                        cell: (r, c),
                        expected,
                        got,
                    });
                }
            }
            Err(e) => report.violations.push(format!("frame {k}: {e}")),
        }
    }
    Ok(report)
}

/// Feeds one frame per timestep into a single grid-shaped network and
/// decodes each frame's labels from its own contract slot.
pub fn run_pipelined_flat(frames: &[EventFrame], params: &DbscanParams) -> Result<Vec<LabelGrid>> {
    if frames.is_empty() {
        return Ok(Vec::new());
    }
    let net = build_flat(params, Orientation::Columns);
    let sim = Simulator::new(&net)?;
    let mut sched = SpikeSchedule::new();
    for (k, frame) in frames.iter().enumerate() {
        sched.extend(&encode_flat(&net, frame, k as u32)?);
    }
    let horizon = frames.len() as u32 - 1 + FLAT_SOLUTION_STEPS;
    let raster = sim.run(&sched, horizon)?;
    decode_flat_sequence(&net, &raster, 0, 1, frames)
}

/// Streams frames into one column-streaming network at the standard reuse
/// interval.
pub fn run_systolic_stream(frames: &[EventFrame], params: &DbscanParams) -> Result<Vec<LabelGrid>> {
    let interval = systolic_reuse_interval(params.cols(), params.epsilon());
    run_systolic_stream_with_interval(frames, params, interval)
}

/// Streaming runner with an explicit frame interval, for probing the reuse
/// boundary. Decoding requires `interval >= C` so column slots stay
/// unambiguous.
pub fn run_systolic_stream_with_interval(
    frames: &[EventFrame],
    params: &DbscanParams,
    interval: u32,
) -> Result<Vec<LabelGrid>> {
    if frames.is_empty() {
        return Ok(Vec::new());
    }
    let net = build_systolic(params, Orientation::Columns);
    let sim = Simulator::new(&net)?;
    let mut sched = SpikeSchedule::new();
    for (k, frame) in frames.iter().enumerate() {
        sched.extend(&encode_systolic(&net, frame, k as u32 * interval)?);
    }
    let horizon = (frames.len() as u32 - 1) * interval
        + systolic_solution_steps(params.cols(), params.epsilon());
    let raster = sim.run(&sched, horizon)?;
    decode_systolic_stream(&net, &raster, 0, interval, frames)
}

/// Partition a frame, run every block, and merge: one-shot convenience
/// around [`PartitionRunner`].
pub fn run_partitioned(
    frame: &EventFrame,
    params: &DbscanParams,
    base: BuilderKind,
    opts: PartitionPlanOptions,
) -> Result<LabelGrid> {
    let runner = PartitionRunner::build(base, params, opts)?;
    runner.run(frame, &mut SimStats::default())
}
