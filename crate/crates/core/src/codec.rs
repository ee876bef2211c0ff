//! Translate between event frames and spikes: frames become forced input
//! schedules, output rasters become label grids.
//!
//! Decoding enforces each construction's timing contract: a core detector
//! may fire only at its fixed latency after a frame's injection (plus the
//! frame's column position for streaming networks), a border detector only
//! at its own, and nothing else may fire as an output. Any stray firing is
//! reported as a contract violation rather than silently dropped.
//!
//! With `min_pts == 1` every event cell is core by definition, but a fully
//! isolated event excites no counter (counts exclude the cell itself), so
//! the network stays silent about it. Decoders close that gap: event cells
//! left Noise are promoted to Core when the network's `min_pts` is 1.

use crate::error::{Error, Result};
use crate::grid::{EventFrame, Label, LabelGrid};
use crate::network::{BuilderKind, Collection, Network, RolePos, RoleTag};
use crate::sim::{SpikeRaster, SpikeSchedule};

/// Timesteps from a frame's injection to its core fires in the grid-shaped
/// construction.
pub const FLAT_CORE_LATENCY: u32 = 2;
/// Timesteps from a frame's injection to its border fires in the grid-shaped
/// construction.
pub const FLAT_BORDER_LATENCY: u32 = 4;

/// Core-detector latency after a column's injection in the streaming
/// construction.
pub fn systolic_core_latency(eps: u32) -> u32 {
    eps + 2
}

/// Border-detector latency after a column's injection in the streaming
/// construction.
pub fn systolic_border_latency(eps: u32) -> u32 {
    2 * eps + 4
}

fn require_builder(net: &Network, wanted: BuilderKind, op: &str) -> Result<()> {
    if net.meta().builder != wanted {
        return Err(Error::Network(format!(
            "{op} expects a {} network, got {}",
            wanted.token(),
            net.meta().builder.token()
        )));
    }
    Ok(())
}

fn require_dims(net_rows: u32, net_cols: u32, frame: &EventFrame) -> Result<()> {
    if frame.rows() != net_rows || (net_cols != 0 && frame.cols() != net_cols) {
        return Err(Error::DimsMismatch {
            expected_rows: net_rows,
            expected_cols: net_cols,
            got_rows: frame.rows(),
            got_cols: frame.cols(),
        });
    }
    Ok(())
}

/// Forces one input per event at `t0`.
pub fn encode_flat(net: &Network, frame: &EventFrame, t0: u32) -> Result<SpikeSchedule> {
    require_builder(net, BuilderKind::Flat, "encode_flat")?;
    require_dims(net.meta().rows, net.meta().cols, frame)?;
    let mut sched = SpikeSchedule::new();
    for (r, c) in frame.events() {
        let id = net
            .id_of(RoleTag::cell(Collection::Input, r, c))
            .ok_or_else(|| Error::Network(format!("no input neuron for cell ({r}, {c})")))?;
        sched.push(t0, id);
    }
    Ok(sched)
}

/// Forces the chain head of row `r` at `t0 + c` for each event `(r, c)`.
pub fn encode_systolic(net: &Network, frame: &EventFrame, t0: u32) -> Result<SpikeSchedule> {
    require_builder(net, BuilderKind::Systolic, "encode_systolic")?;
    require_dims(net.meta().rows, 0, frame)?;
    let eps = net.meta().epsilon as i32;
    let mut sched = SpikeSchedule::new();
    for (r, c) in frame.events() {
        let id = net
            .id_of(RoleTag::offset(Collection::Input, r, eps))
            .ok_or_else(|| Error::Network(format!("no input chain head for row {r}")))?;
        sched.push(t0 + c, id);
    }
    Ok(sched)
}

fn violation(id: u32, t: u32, detail: impl Into<String>) -> Error {
    Error::ContractViolation {
        neuron: id,
        t,
        detail: detail.into(),
    }
}

/// Splits a fire-time offset into `(frame, residue)` against the injection
/// interval, after subtracting the collection latency.
fn slot(
    rel: u32,
    latency: u32,
    interval: u32,
    n_frames: usize,
    id: u32,
    t: u32,
) -> Result<(usize, u32)> {
    let s = rel.checked_sub(latency).ok_or_else(|| {
        violation(id, t, format!("fired {rel} steps after start, before latency {latency}"))
    })?;
    let k = (s / interval) as usize;
    let residue = s % interval;
    if k >= n_frames {
        return Err(violation(
            id,
            t,
            format!("maps to frame {k}, only {n_frames} injected"),
        ));
    }
    Ok((k, residue))
}

fn fresh_labels(frames: &[EventFrame]) -> Vec<LabelGrid> {
    frames
        .iter()
        .map(|f| {
            let mut labels = LabelGrid::new(f.rows(), f.cols());
            for (r, c) in f.events() {
                labels.set(r, c, Label::Noise);
            }
            labels
        })
        .collect()
}

fn promote_isolated_cores(net: &Network, frames: &[EventFrame], labels: &mut [LabelGrid]) {
    if net.meta().min_pts != 1 {
        return;
    }
    for (frame, grid) in frames.iter().zip(labels.iter_mut()) {
        for (r, c) in frame.events() {
            if grid.get(r, c) == Label::Noise {
                grid.set(r, c, Label::Core);
            }
        }
    }
}

/// Decodes a pipelined run: frame `k` was injected at `t0 + k * interval`.
pub fn decode_flat_sequence(
    net: &Network,
    raster: &SpikeRaster,
    t0: u32,
    interval: u32,
    frames: &[EventFrame],
) -> Result<Vec<LabelGrid>> {
    require_builder(net, BuilderKind::Flat, "decode_flat_sequence")?;
    for f in frames {
        require_dims(net.meta().rows, net.meta().cols, f)?;
    }
    assert!(interval >= 1, "injection interval must be positive");

    let mut labels = fresh_labels(frames);
    for &(t, id) in raster.entries() {
        let role = net
            .neuron(id)
            .ok_or_else(|| Error::Network(format!("raster references unknown neuron {id}")))?
            .role;
        let rel = t.checked_sub(t0)
            .ok_or_else(|| violation(id, t, "fired before the first injection"))?;
        let (label, latency) = match role.collection {
            Collection::Core => (Label::Core, FLAT_CORE_LATENCY),
            Collection::Border => (Label::Border, FLAT_BORDER_LATENCY),
            other => {
                return Err(violation(id, t, format!("collection {} is not an output", other.token())))
            }
        };
        let (k, residue) = slot(rel, latency, interval, frames.len(), id, t)?;
        if residue != 0 {
            return Err(violation(
                id,
                t,
                format!("off the injection grid by {residue} steps"),
            ));
        }
        let RolePos::Col(c) = role.pos else {
            return Err(violation(id, t, "output neuron has no column coordinate"));
        };
        labels[k].set(role.row, c, label);
    }
    promote_isolated_cores(net, frames, &mut labels);
    Ok(labels)
}

/// Decodes a single-frame run injected at `t0`.
pub fn decode_flat(
    net: &Network,
    raster: &SpikeRaster,
    t0: u32,
    frame: &EventFrame,
) -> Result<LabelGrid> {
    let mut v = decode_flat_sequence(net, raster, t0, 1, std::slice::from_ref(frame))?;
    Ok(v.pop().expect("one frame in, one grid out"))
}

/// Decodes a streamed run: frame `k`'s column 0 entered at
/// `t0 + k * interval`. All frames must share one shape; the gap columns
/// between frames (`interval - cols` of them) must stay silent.
pub fn decode_systolic_stream(
    net: &Network,
    raster: &SpikeRaster,
    t0: u32,
    interval: u32,
    frames: &[EventFrame],
) -> Result<Vec<LabelGrid>> {
    require_builder(net, BuilderKind::Systolic, "decode_systolic_stream")?;
    let Some(first) = frames.first() else {
        return Ok(Vec::new());
    };
    let cols = first.cols();
    for f in frames {
        require_dims(net.meta().rows, cols, f)?;
    }
    assert!(interval >= 1, "injection interval must be positive");
    let eps = net.meta().epsilon;

    let mut labels = fresh_labels(frames);
    for &(t, id) in raster.entries() {
        let role = net
            .neuron(id)
            .ok_or_else(|| Error::Network(format!("raster references unknown neuron {id}")))?
            .role;
        let rel = t.checked_sub(t0)
            .ok_or_else(|| violation(id, t, "fired before the first injection"))?;
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
        let (k, c) = slot(rel, latency, interval, frames.len(), id, t)?;
        if c >= cols {
            return Err(violation(
                id,
                t,
                format!("maps to gap column {c} of frame {k} ({cols} columns)"),
            ));
        }
        labels[k].set(role.row, c, label);
    }
    promote_isolated_cores(net, frames, &mut labels);
    Ok(labels)
}

/// Decodes a single streamed frame injected from `t0`.
pub fn decode_systolic(
    net: &Network,
    raster: &SpikeRaster,
    t0: u32,
    frame: &EventFrame,
) -> Result<LabelGrid> {
    let interval = crate::systolic::systolic_reuse_interval(frame.cols(), net.meta().epsilon);
    let mut v = decode_systolic_stream(net, raster, t0, interval, std::slice::from_ref(frame))?;
    Ok(v.pop().expect("one frame in, one grid out"))
}
