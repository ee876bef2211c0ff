//! Split a grid into blocks, build an independent network per block with
//! its surrounding context rings, and stitch per-block labels back together.
//!
//! A block's network covers three nested regions: the output block whose
//! labels it produces, an inner ring of width `ring` around it where counter
//! and core-detector neurons still influence the output (their core verdicts
//! reach the block, so those Core neurons exist but are not outputs), and an
//! outer ring of another `ring` where only input neurons matter. Everything
//! further away cannot affect the block and is never built.
//!
//! Where the rings would leave the grid, two policies apply. `Delete` clips
//! them, making each network's shape depend on its position. `RetainFeedZero`
//! keeps the out-of-grid rows as real neurons that simply never receive
//! events; every block of one output shape then shares a single network,
//! whatever its position.

use std::ops::Range;

use crate::codec::{
    systolic_border_latency, systolic_core_latency, FLAT_BORDER_LATENCY, FLAT_CORE_LATENCY,
};
use crate::error::{Error, Result};
use crate::flat::{build_flat_network, FlatExtents};
use crate::grid::{DbscanParams, EventFrame, Label, LabelGrid};
use crate::network::{
    BuilderKind, Collection, NetMeta, Network, Orientation, PartitionMeta, RolePos, RoleTag,
};
use crate::sim::{SpikeRaster, SpikeSchedule};
use crate::systolic::{build_systolic_network, SystolicExtents};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryPolicy {
    /// Clip context rings at the grid border; edge networks are smaller.
    Delete,
    /// Keep out-of-grid ring rows as neurons that never see events; all
    /// equally-shaped blocks share one network.
    RetainFeedZero,
}

impl BoundaryPolicy {
    pub fn token(&self) -> &'static str {
        match self {
            BoundaryPolicy::Delete => "delete",
            BoundaryPolicy::RetainFeedZero => "retain",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        match s {
            "delete" => Some(BoundaryPolicy::Delete),
            "retain" => Some(BoundaryPolicy::RetainFeedZero),
            _ => None,
        }
    }
}

/// One block of a partition plan: the output region within its grid, the
/// ring width (the instance's epsilon), and the boundary policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionSpec {
    pub grid_rows: u32,
    pub grid_cols: u32,
    pub out_r0: u32,
    pub out_rows: u32,
    pub out_c0: u32,
    pub out_cols: u32,
    pub ring: u32,
    pub policy: BoundaryPolicy,
}

impl PartitionSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid_rows == 0 || self.grid_cols == 0 {
            return Err(Error::Partition("grid must be non-empty".into()));
        }
        if self.ring == 0 {
            return Err(Error::Partition("ring width must be >= 1".into()));
        }
        if self.out_rows == 0 || self.out_cols == 0 {
            return Err(Error::Partition("output block must be non-empty".into()));
        }
        let row_end = self.out_r0 as u64 + self.out_rows as u64;
        let col_end = self.out_c0 as u64 + self.out_cols as u64;
        if row_end > self.grid_rows as u64 || col_end > self.grid_cols as u64 {
            return Err(Error::Partition(format!(
                "output block [{},{})x[{},{}) leaves the {}x{} grid",
                self.out_r0, row_end, self.out_c0, col_end, self.grid_rows, self.grid_cols
            )));
        }
        Ok(())
    }

    /// True when the output block is the whole grid.
    pub fn covers_grid(&self) -> bool {
        self.out_r0 == 0
            && self.out_c0 == 0
            && self.out_rows == self.grid_rows
            && self.out_cols == self.grid_cols
    }
}

/// Chops the grid into blocks of `block_rows` x `block_cols` (the last row
/// and column of blocks truncated), full grid width when `block_cols` is
/// `None` as column-streaming networks need whole columns.
pub fn plan_partitions(
    params: &DbscanParams,
    block_rows: u32,
    block_cols: Option<u32>,
    policy: BoundaryPolicy,
) -> Result<Vec<PartitionSpec>> {
    let (rows, cols) = (params.rows(), params.cols());
    if block_rows == 0 {
        return Err(Error::Partition("rows per block must be >= 1".into()));
    }
    if block_rows > rows {
        return Err(Error::Partition(format!(
            "rows per block {block_rows} exceeds grid rows {rows}"
        )));
    }
    let block_cols = block_cols.unwrap_or(cols);
    if block_cols == 0 {
        return Err(Error::Partition("cols per block must be >= 1".into()));
    }
    if block_cols > cols {
        return Err(Error::Partition(format!(
            "cols per block {block_cols} exceeds grid cols {cols}"
        )));
    }

    let mut plan = Vec::new();
    let mut r0 = 0;
    while r0 < rows {
        let out_rows = block_rows.min(rows - r0);
        let mut c0 = 0;
        while c0 < cols {
            let out_cols = block_cols.min(cols - c0);
            plan.push(PartitionSpec {
                grid_rows: rows,
                grid_cols: cols,
                out_r0: r0,
                out_rows,
                out_c0: c0,
                out_cols,
                ring: params.epsilon(),
                policy,
            });
            c0 += out_cols;
        }
        r0 += out_rows;
    }
    Ok(plan)
}

/// One text line per block: `part r0 rows c0 cols policy`.
pub fn plan_to_text(plan: &[PartitionSpec]) -> String {
    let mut out = String::new();
    for spec in plan {
        out.push_str(&format!(
            "part {} {} {} {} {}\n",
            spec.out_r0,
            spec.out_rows,
            spec.out_c0,
            spec.out_cols,
            spec.policy.token()
        ));
    }
    out
}

/// Parses a plan against its instance and checks it tiles the grid.
pub fn plan_from_text(text: &str, params: &DbscanParams) -> Result<Vec<PartitionSpec>> {
    let mut plan = Vec::new();
    for (line_no, raw) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let ["part", r0, rows, c0, cols, policy] = fields.as_slice() else {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected `part r0 rows c0 cols policy`, got {line:?}"),
            });
        };
        let num = |s: &str, what: &str| -> Result<u32> {
            s.parse::<u32>().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad {what}: {s:?}"),
            })
        };
        let policy = BoundaryPolicy::from_token(policy).ok_or_else(|| Error::Parse {
            line: line_no,
            msg: format!("unknown policy {policy:?}"),
        })?;
        let spec = PartitionSpec {
            grid_rows: params.rows(),
            grid_cols: params.cols(),
            out_r0: num(r0, "r0")?,
            out_rows: num(rows, "rows")?,
            out_c0: num(c0, "c0")?,
            out_cols: num(cols, "cols")?,
            ring: params.epsilon(),
            policy,
        };
        spec.validate().map_err(|e| Error::Parse {
            line: line_no,
            msg: e.to_string(),
        })?;
        plan.push(spec);
    }
    check_tiling(&plan)?;
    Ok(plan)
}

/// Errors unless the blocks cover their grid exactly once.
fn check_tiling(plan: &[PartitionSpec]) -> Result<()> {
    let Some(first) = plan.first() else {
        return Err(Error::Partition("empty plan".into()));
    };
    let (rows, cols) = (first.grid_rows, first.grid_cols);
    let mut covered = vec![false; (rows * cols) as usize];
    for spec in plan {
        if spec.grid_rows != rows || spec.grid_cols != cols {
            return Err(Error::Partition(format!(
                "blocks disagree on grid shape: {}x{} vs {rows}x{cols}",
                spec.grid_rows, spec.grid_cols
            )));
        }
        for r in spec.out_r0..spec.out_r0 + spec.out_rows {
            for c in spec.out_c0..spec.out_c0 + spec.out_cols {
                let i = (r * cols + c) as usize;
                if covered[i] {
                    return Err(Error::Partition(format!(
                        "cell ({r}, {c}) covered by more than one block"
                    )));
                }
                covered[i] = true;
            }
        }
    }
    if let Some(i) = covered.iter().position(|&b| !b) {
        let (r, c) = (i as u32 / cols, i as u32 % cols);
        return Err(Error::Partition(format!(
            "cell ({r}, {c}) not covered by any block"
        )));
    }
    Ok(())
}

/// Collection spans along one axis, local plus the absolute position of
/// local zero (negative under retain when the outer ring leaves the grid).
#[derive(Debug, Clone)]
struct AxisSpan {
    origin: i64,
    input: Range<u32>,
    cc: Range<u32>,
    bb: Range<u32>,
}

fn axis_span(out0: u32, out_len: u32, ring: u32, grid_len: u32, policy: BoundaryPolicy) -> AxisSpan {
    let out_lo = out0 as i64;
    let out_hi = out_lo + out_len as i64;
    let ring = ring as i64;
    let grid = grid_len as i64;
    let (in_lo, in_hi, cc_lo, cc_hi) = match policy {
        BoundaryPolicy::Delete => (
            (out_lo - 2 * ring).max(0),
            (out_hi + 2 * ring).min(grid),
            (out_lo - ring).max(0),
            (out_hi + ring).min(grid),
        ),
        BoundaryPolicy::RetainFeedZero => {
            (out_lo - 2 * ring, out_hi + 2 * ring, out_lo - ring, out_hi + ring)
        }
    };
    let local = |abs: i64| (abs - in_lo) as u32;
    AxisSpan {
        origin: in_lo,
        input: 0..local(in_hi),
        cc: local(cc_lo)..local(cc_hi),
        bb: local(out_lo)..local(out_hi),
    }
}

fn partition_meta(spec: &PartitionSpec, width_free: bool) -> PartitionMeta {
    match spec.policy {
        BoundaryPolicy::Delete => PartitionMeta::Delete {
            out_r0: spec.out_r0,
            out_rows: spec.out_rows,
            out_c0: if width_free { 0 } else { spec.out_c0 },
            out_cols: if width_free { 0 } else { spec.out_cols },
        },
        BoundaryPolicy::RetainFeedZero => PartitionMeta::Retain {
            out_rows: spec.out_rows,
            out_cols: if width_free { 0 } else { spec.out_cols },
        },
    }
}

/// Builds the grid-shaped network for one block.
pub fn build_partial_flat(spec: &PartitionSpec, min_pts: u32) -> Result<Network> {
    spec.validate()?;
    check_min_pts(spec.ring, min_pts)?;
    let rows = axis_span(spec.out_r0, spec.out_rows, spec.ring, spec.grid_rows, spec.policy);
    let cols = axis_span(spec.out_c0, spec.out_cols, spec.ring, spec.grid_cols, spec.policy);
    let ext = FlatExtents {
        in_rows: rows.input,
        in_cols: cols.input,
        cc_rows: rows.cc,
        cc_cols: cols.cc,
        bb_rows: rows.bb,
        bb_cols: cols.bb,
    };
    let meta = NetMeta {
        rows: spec.grid_rows,
        cols: spec.grid_cols,
        epsilon: spec.ring,
        min_pts,
        builder: BuilderKind::PartialFlat,
        orientation: Orientation::Columns,
        partition: Some(partition_meta(spec, false)),
    };
    Ok(build_flat_network(meta, &ext))
}

/// Builds the column-streaming network for one block. The block must span
/// the full grid width, since columns stream whole.
pub fn build_partial_systolic(spec: &PartitionSpec, min_pts: u32) -> Result<Network> {
    spec.validate()?;
    check_min_pts(spec.ring, min_pts)?;
    if spec.out_c0 != 0 || spec.out_cols != spec.grid_cols {
        return Err(Error::Partition(
            "column-streaming blocks must span the full grid width".into(),
        ));
    }
    let rows = axis_span(spec.out_r0, spec.out_rows, spec.ring, spec.grid_rows, spec.policy);
    let ext = SystolicExtents {
        in_rows: rows.input,
        cc_rows: rows.cc,
        bb_rows: rows.bb,
    };
    let meta = NetMeta {
        rows: spec.grid_rows,
        cols: 0,
        epsilon: spec.ring,
        min_pts,
        builder: BuilderKind::PartialSystolic,
        orientation: Orientation::Columns,
        partition: Some(partition_meta(spec, true)),
    };
    Ok(build_systolic_network(meta, &ext))
}

fn check_min_pts(ring: u32, min_pts: u32) -> Result<()> {
    let cap = (2 * ring + 1).pow(2);
    if min_pts == 0 || min_pts > cap {
        return Err(Error::Partition(format!(
            "min_pts must be in 1..={cap} for ring {ring}, got {min_pts}"
        )));
    }
    Ok(())
}

fn require_partial(net: &Network, wanted: BuilderKind, spec: &PartitionSpec, op: &str) -> Result<()> {
    if net.meta().builder != wanted {
        return Err(Error::Network(format!(
            "{op} expects a {} network, got {}",
            wanted.token(),
            net.meta().builder.token()
        )));
    }
    if net.meta().epsilon != spec.ring || net.meta().rows != spec.grid_rows {
        return Err(Error::Network(format!(
            "network was built for another block (ring {}, grid rows {})",
            net.meta().epsilon,
            net.meta().rows
        )));
    }
    Ok(())
}

fn require_frame(spec: &PartitionSpec, frame: &EventFrame) -> Result<()> {
    if frame.rows() != spec.grid_rows || frame.cols() != spec.grid_cols {
        return Err(Error::DimsMismatch {
            expected_rows: spec.grid_rows,
            expected_cols: spec.grid_cols,
            got_rows: frame.rows(),
            got_cols: frame.cols(),
        });
    }
    Ok(())
}

/// Schedules the block's share of a full-grid frame: every event inside the
/// dilated input region, at `t0`, in local coordinates.
pub fn encode_partial_flat(
    net: &Network,
    spec: &PartitionSpec,
    frame: &EventFrame,
    t0: u32,
) -> Result<SpikeSchedule> {
    require_partial(net, BuilderKind::PartialFlat, spec, "encode_partial_flat")?;
    require_frame(spec, frame)?;
    let rows = axis_span(spec.out_r0, spec.out_rows, spec.ring, spec.grid_rows, spec.policy);
    let cols = axis_span(spec.out_c0, spec.out_cols, spec.ring, spec.grid_cols, spec.policy);
    let mut sched = SpikeSchedule::new();
    for (r, c) in frame.events() {
        let (lr, lc) = (r as i64 - rows.origin, c as i64 - cols.origin);
        if lr < 0 || lc < 0 {
            continue;
        }
        let (lr, lc) = (lr as u32, lc as u32);
        if !rows.input.contains(&lr) || !cols.input.contains(&lc) {
            continue;
        }
        let id = net
            .id_of(RoleTag::cell(Collection::Input, lr, lc))
            .ok_or_else(|| Error::Network(format!("no input neuron for local cell ({lr}, {lc})")))?;
        sched.push(t0, id);
    }
    Ok(sched)
}

/// Schedules the block's share of a frame for a column-streaming network:
/// event `(r, c)` in the input rows forces the local chain head at `t0 + c`.
pub fn encode_partial_systolic(
    net: &Network,
    spec: &PartitionSpec,
    frame: &EventFrame,
    t0: u32,
) -> Result<SpikeSchedule> {
    require_partial(net, BuilderKind::PartialSystolic, spec, "encode_partial_systolic")?;
    require_frame(spec, frame)?;
    let rows = axis_span(spec.out_r0, spec.out_rows, spec.ring, spec.grid_rows, spec.policy);
    let eps = spec.ring as i32;
    let mut sched = SpikeSchedule::new();
    for (r, c) in frame.events() {
        let lr = r as i64 - rows.origin;
        if lr < 0 {
            continue;
        }
        let lr = lr as u32;
        if !rows.input.contains(&lr) {
            continue;
        }
        let id = net
            .id_of(RoleTag::offset(Collection::Input, lr, eps))
            .ok_or_else(|| Error::Network(format!("no input chain head for local row {lr}")))?;
        sched.push(t0 + c, id);
    }
    Ok(sched)
}

fn block_labels(spec: &PartitionSpec, frame: &EventFrame) -> LabelGrid {
    let mut labels = LabelGrid::new(spec.out_rows, spec.out_cols);
    for br in 0..spec.out_rows {
        for bc in 0..spec.out_cols {
            if frame.get(spec.out_r0 + br, spec.out_c0 + bc) {
                labels.set(br, bc, Label::Noise);
            }
        }
    }
    labels
}

fn promote_block(min_pts: u32, spec: &PartitionSpec, frame: &EventFrame, labels: &mut LabelGrid) {
    if min_pts != 1 {
        return;
    }
    for br in 0..spec.out_rows {
        for bc in 0..spec.out_cols {
            if frame.get(spec.out_r0 + br, spec.out_c0 + bc)
                && labels.get(br, bc) == Label::Noise
            {
                labels.set(br, bc, Label::Core);
            }
        }
    }
}

fn violation(id: u32, t: u32, detail: impl Into<String>) -> Error {
    Error::ContractViolation {
        neuron: id,
        t,
        detail: detail.into(),
    }
}

/// Decodes one block's raster into its `out_rows x out_cols` labels.
pub fn decode_partial_flat(
    net: &Network,
    spec: &PartitionSpec,
    raster: &SpikeRaster,
    t0: u32,
    frame: &EventFrame,
) -> Result<LabelGrid> {
    require_partial(net, BuilderKind::PartialFlat, spec, "decode_partial_flat")?;
    require_frame(spec, frame)?;
    let rows = axis_span(spec.out_r0, spec.out_rows, spec.ring, spec.grid_rows, spec.policy);
    let cols = axis_span(spec.out_c0, spec.out_cols, spec.ring, spec.grid_cols, spec.policy);

    let mut labels = block_labels(spec, frame);
    for &(t, id) in raster.entries() {
        let role = net
            .neuron(id)
            .ok_or_else(|| Error::Network(format!("raster references unknown neuron {id}")))?
            .role;
        let (label, latency) = match role.collection {
            Collection::Core => (Label::Core, FLAT_CORE_LATENCY),
            Collection::Border => (Label::Border, FLAT_BORDER_LATENCY),
            other => {
                return Err(violation(id, t, format!("collection {} is not an output", other.token())))
            }
        };
        if t != t0 + latency {
            return Err(violation(id, t, format!("expected fire at t={}", t0 + latency)));
        }
        let RolePos::Col(lc) = role.pos else {
            return Err(violation(id, t, "output neuron has no column coordinate"));
        };
        labels.set(role.row - rows.bb.start, lc - cols.bb.start, label);
    }
    promote_block(net.meta().min_pts, spec, frame, &mut labels);
    Ok(labels)
}

/// Decodes one block's streamed raster into its `out_rows x grid_cols`
/// labels.
pub fn decode_partial_systolic(
    net: &Network,
    spec: &PartitionSpec,
    raster: &SpikeRaster,
    t0: u32,
    frame: &EventFrame,
) -> Result<LabelGrid> {
    require_partial(net, BuilderKind::PartialSystolic, spec, "decode_partial_systolic")?;
    require_frame(spec, frame)?;
    let rows = axis_span(spec.out_r0, spec.out_rows, spec.ring, spec.grid_rows, spec.policy);
    let eps = spec.ring;
    let cols = frame.cols();

    let mut labels = block_labels(spec, frame);
    for &(t, id) in raster.entries() {
        let role = net
            .neuron(id)
            .ok_or_else(|| Error::Network(format!("raster references unknown neuron {id}")))?
            .role;
        let (label, latency) = match (role.collection, role.pos) {
            (Collection::Core, RolePos::Offset(e)) if e == eps as i32 => {
                (Label::Core, systolic_core_latency(eps))
            }
            (Collection::Border, RolePos::RowOnly) => {
                (Label::Border, systolic_border_latency(eps))
            }
            _ => {
                return Err(violation(
                    id,
                    t,
                    format!("collection {} is not an output", role.collection.token()),
                ))
            }
        };
        let c = t
            .checked_sub(t0 + latency)
            .ok_or_else(|| violation(id, t, format!("fired before latency {latency}")))?;
        if c >= cols {
            return Err(violation(id, t, format!("maps to column {c} of {cols}")));
        }
        labels.set(role.row - rows.bb.start, c, label);
    }
    promote_block(net.meta().min_pts, spec, frame, &mut labels);
    Ok(labels)
}

/// Stitches per-block labels into the full grid. The blocks must tile the
/// grid they were planned for.
pub fn merge_partition_outputs(parts: &[(PartitionSpec, LabelGrid)]) -> Result<LabelGrid> {
    let specs: Vec<PartitionSpec> = parts.iter().map(|(s, _)| *s).collect();
    check_tiling(&specs)?;
    let (rows, cols) = (specs[0].grid_rows, specs[0].grid_cols);
    let mut merged = LabelGrid::new(rows, cols);
    for (spec, labels) in parts {
        if labels.rows() != spec.out_rows || labels.cols() != spec.out_cols {
            return Err(Error::DimsMismatch {
                expected_rows: spec.out_rows,
                expected_cols: spec.out_cols,
                got_rows: labels.rows(),
                got_cols: labels.cols(),
            });
        }
        for br in 0..spec.out_rows {
            for bc in 0..spec.out_cols {
                merged.set(spec.out_r0 + br, spec.out_c0 + bc, labels.get(br, bc));
            }
        }
    }
    Ok(merged)
}
