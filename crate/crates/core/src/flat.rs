//! Grid-shaped construction: five neurons per cell, one per collection,
//! answering every frame in five timesteps regardless of grid size.
//!
//! Charge flow for a frame injected at `t0`: inputs fire at `t0`; each Count
//! neuron sums its neighborhood minus the cell itself and fires at `t0 + 1`
//! when that count reaches `min_pts - 1`; the Core neuron fires at `t0 + 2`
//! when its Count fired and its own cell held an event; relay neurons spread
//! core status at `t0 + 3`; the Border neuron fires at `t0 + 4` when the
//! cell held an event near some other core and a unit of inhibition from its
//! own Core did not cancel it. A fresh frame can enter every timestep.

use std::ops::Range;

use crate::grid::DbscanParams;
use crate::network::{
    BuilderKind, Collection, NetMeta, Network, Neuron, Orientation, RoleTag, Synapse,
};

/// Row/column spans of each collection, in network-local coordinates.
///
/// The input span covers everything; Count and Core cover a sub-block; the
/// relay and Border collections cover the block whose labels are produced.
/// Full networks use the whole grid for all three.
#[derive(Debug, Clone)]
pub(crate) struct FlatExtents {
    pub in_rows: Range<u32>,
    pub in_cols: Range<u32>,
    pub cc_rows: Range<u32>,
    pub cc_cols: Range<u32>,
    pub bb_rows: Range<u32>,
    pub bb_cols: Range<u32>,
}

impl FlatExtents {
    pub fn full(rows: u32, cols: u32) -> Self {
        Self {
            in_rows: 0..rows,
            in_cols: 0..cols,
            cc_rows: 0..rows,
            cc_cols: 0..cols,
            bb_rows: 0..rows,
            bb_cols: 0..cols,
        }
    }
}

fn span(r: &Range<u32>) -> u32 {
    r.end - r.start
}

/// `[center - eps, center + eps]` clipped to `range`; possibly empty.
fn win(center: u32, eps: u32, range: &Range<u32>) -> Range<u32> {
    let lo = center.saturating_sub(eps).max(range.start);
    let hi = (center + eps + 1).min(range.end);
    lo..hi.max(lo)
}

/// Id assignment: collections are contiguous blocks in the order
/// I, C, Core, B, Border, each row-major over its extent.
pub(crate) struct FlatLayout {
    ext: FlatExtents,
    base_count: u32,
    base_core: u32,
    base_relay: u32,
    base_border: u32,
}

impl FlatLayout {
    pub fn new(ext: FlatExtents) -> Self {
        let n_in = span(&ext.in_rows) * span(&ext.in_cols);
        let n_cc = span(&ext.cc_rows) * span(&ext.cc_cols);
        let n_bb = span(&ext.bb_rows) * span(&ext.bb_cols);
        Self {
            base_count: n_in,
            base_core: n_in + n_cc,
            base_relay: n_in + 2 * n_cc,
            base_border: n_in + 2 * n_cc + n_bb,
            ext,
        }
    }

    fn cell_id(base: u32, rows: &Range<u32>, cols: &Range<u32>, r: u32, c: u32) -> u32 {
        debug_assert!(rows.contains(&r) && cols.contains(&c));
        base + (r - rows.start) * span(cols) + (c - cols.start)
    }

    pub fn input(&self, r: u32, c: u32) -> u32 {
        Self::cell_id(0, &self.ext.in_rows, &self.ext.in_cols, r, c)
    }

    pub fn count(&self, r: u32, c: u32) -> u32 {
        Self::cell_id(self.base_count, &self.ext.cc_rows, &self.ext.cc_cols, r, c)
    }

    pub fn core(&self, r: u32, c: u32) -> u32 {
        Self::cell_id(self.base_core, &self.ext.cc_rows, &self.ext.cc_cols, r, c)
    }

    pub fn relay(&self, r: u32, c: u32) -> u32 {
        Self::cell_id(self.base_relay, &self.ext.bb_rows, &self.ext.bb_cols, r, c)
    }

    pub fn border(&self, r: u32, c: u32) -> u32 {
        Self::cell_id(self.base_border, &self.ext.bb_rows, &self.ext.bb_cols, r, c)
    }
}

fn cells(rows: &Range<u32>, cols: &Range<u32>) -> impl Iterator<Item = (u32, u32)> {
    let cols = cols.clone();
    rows.clone()
        .flat_map(move |r| cols.clone().map(move |c| (r, c)))
}

/// Shared constructor for full and partial grid-shaped networks.
pub(crate) fn build_flat_network(meta: NetMeta, ext: &FlatExtents) -> Network {
    let eps = meta.epsilon;
    let layout = FlatLayout::new(ext.clone());
    let count_threshold = 1u32.max(meta.min_pts - 1);

    let mut neurons = Vec::new();
    for (r, c) in cells(&ext.in_rows, &ext.in_cols) {
        neurons.push(Neuron {
            id: layout.input(r, c),
            threshold: 1,
            is_input: true,
            is_output: false,
            role: RoleTag::cell(Collection::Input, r, c),
        });
    }
    for (r, c) in cells(&ext.cc_rows, &ext.cc_cols) {
        neurons.push(Neuron {
            id: layout.count(r, c),
            threshold: count_threshold,
            is_input: false,
            is_output: false,
            role: RoleTag::cell(Collection::Count, r, c),
        });
    }
    for (r, c) in cells(&ext.cc_rows, &ext.cc_cols) {
        neurons.push(Neuron {
            id: layout.core(r, c),
            threshold: 2,
            is_input: false,
            is_output: ext.bb_rows.contains(&r) && ext.bb_cols.contains(&c),
            role: RoleTag::cell(Collection::Core, r, c),
        });
    }
    for (r, c) in cells(&ext.bb_rows, &ext.bb_cols) {
        neurons.push(Neuron {
            id: layout.relay(r, c),
            threshold: 1,
            is_input: false,
            is_output: false,
            role: RoleTag::cell(Collection::BorderCore, r, c),
        });
    }
    for (r, c) in cells(&ext.bb_rows, &ext.bb_cols) {
        neurons.push(Neuron {
            id: layout.border(r, c),
            threshold: 2,
            is_input: false,
            is_output: true,
            role: RoleTag::cell(Collection::Border, r, c),
        });
    }

    let mut synapses = Vec::new();
    let syn = |from: u32, to: u32, weight: i8, delay: u8| Synapse { from, to, weight, delay };

    // Neighborhood-minus-self into the counter.
    for (r, c) in cells(&ext.cc_rows, &ext.cc_cols) {
        for i in win(r, eps, &ext.in_rows) {
            for j in win(c, eps, &ext.in_cols) {
                if (i, j) != (r, c) {
                    synapses.push(syn(layout.input(i, j), layout.count(r, c), 1, 1));
                }
            }
        }
    }
    // Event gate into the core detector, aligned with the counter's fire.
    for (r, c) in cells(&ext.cc_rows, &ext.cc_cols) {
        synapses.push(syn(layout.input(r, c), layout.core(r, c), 1, 2));
    }
    for (r, c) in cells(&ext.cc_rows, &ext.cc_cols) {
        synapses.push(syn(layout.count(r, c), layout.core(r, c), 1, 1));
    }
    // Core status of the neighborhood minus self, via the relay.
    for (r, c) in cells(&ext.bb_rows, &ext.bb_cols) {
        for i in win(r, eps, &ext.cc_rows) {
            for j in win(c, eps, &ext.cc_cols) {
                if (i, j) != (r, c) {
                    synapses.push(syn(layout.core(i, j), layout.relay(r, c), 1, 1));
                }
            }
        }
    }
    // Border detector: event gate, inhibition from own core, relay input,
    // all arriving together four steps after injection.
    for (r, c) in cells(&ext.bb_rows, &ext.bb_cols) {
        synapses.push(syn(layout.input(r, c), layout.border(r, c), 1, 4));
    }
    for (r, c) in cells(&ext.bb_rows, &ext.bb_cols) {
        synapses.push(syn(layout.core(r, c), layout.border(r, c), -1, 2));
    }
    for (r, c) in cells(&ext.bb_rows, &ext.bb_cols) {
        synapses.push(syn(layout.relay(r, c), layout.border(r, c), 1, 1));
    }

    Network::new(meta, neurons, synapses).expect("construction is internally consistent")
}

/// Builds the full grid-shaped network for `params`.
///
/// With [`Orientation::Rows`] the network is laid out over the transposed
/// grid; callers then feed transposed frames and transpose labels back.
pub fn build_flat(params: &DbscanParams, orientation: Orientation) -> Network {
    let p = match orientation {
        Orientation::Columns => *params,
        Orientation::Rows => params.transposed(),
    };
    let meta = NetMeta {
        rows: p.rows(),
        cols: p.cols(),
        epsilon: p.epsilon(),
        min_pts: p.min_pts(),
        builder: BuilderKind::Flat,
        orientation,
        partition: None,
    };
    build_flat_network(meta, &FlatExtents::full(p.rows(), p.cols()))
}

/// Timesteps from frame injection to the last output fire.
pub const FLAT_SOLUTION_STEPS: u32 = 5;

/// Timesteps between frames; the pipeline accepts one frame per step.
pub const FLAT_REUSE_INTERVAL: u32 = 1;
