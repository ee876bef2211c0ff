//! Column-streaming construction: a fixed network per grid row, independent
//! of grid width. Columns enter one per timestep and shift through offset
//! chains, so each neighborhood column window is in flight exactly when its
//! center column's verdict is due.
//!
//! Per row the network holds `2*eps + 1` input-chain neurons (offsets
//! `-eps..=eps`, column `c` enters at offset `eps` at `t0 + c`), one counter,
//! a core-detector chain of the same width, one relay, and one border
//! detector. Timing for the cell in column `c` of a frame injected from
//! `t0`: the counter fires at `t0 + c + eps + 1`, the core detector at
//! `t0 + c + eps + 2`, the relay at `t0 + c + 2*eps + 3`, and the border
//! detector at `t0 + c + 2*eps + 4`. The network is ready for the next
//! frame `cols + 2*eps` steps after `t0`.

use std::ops::Range;

use crate::grid::DbscanParams;
use crate::network::{
    BuilderKind, Collection, NetMeta, Network, Neuron, Orientation, RoleTag, Synapse,
};

/// Row spans of each collection, in network-local coordinates. The input
/// span covers everything; counter and core chains cover a sub-span; relay
/// and border detectors cover the span whose labels are produced.
#[derive(Debug, Clone)]
pub(crate) struct SystolicExtents {
    pub in_rows: Range<u32>,
    pub cc_rows: Range<u32>,
    pub bb_rows: Range<u32>,
}

impl SystolicExtents {
    pub fn full(rows: u32) -> Self {
        Self {
            in_rows: 0..rows,
            cc_rows: 0..rows,
            bb_rows: 0..rows,
        }
    }
}

fn span(r: &Range<u32>) -> u32 {
    r.end - r.start
}

fn win(center: u32, eps: u32, range: &Range<u32>) -> Range<u32> {
    let lo = center.saturating_sub(eps).max(range.start);
    let hi = (center + eps + 1).min(range.end);
    lo..hi.max(lo)
}

/// Id assignment: contiguous blocks in the order I, C, Core, B, Border;
/// chain blocks are row-major with offsets `-eps..=eps` adjacent.
pub(crate) struct SystolicLayout {
    ext: SystolicExtents,
    eps: u32,
    base_count: u32,
    base_core: u32,
    base_relay: u32,
    base_border: u32,
}

impl SystolicLayout {
    pub fn new(ext: SystolicExtents, eps: u32) -> Self {
        let k = 2 * eps + 1;
        let n_in = span(&ext.in_rows) * k;
        let n_cc = span(&ext.cc_rows);
        Self {
            base_count: n_in,
            base_core: n_in + n_cc,
            base_relay: n_in + n_cc + n_cc * k,
            base_border: n_in + n_cc + n_cc * k + span(&ext.bb_rows),
            ext,
            eps,
        }
    }

    fn k(&self) -> u32 {
        2 * self.eps + 1
    }

    fn slot(&self, offset: i32) -> u32 {
        debug_assert!(offset.unsigned_abs() <= self.eps);
        (offset + self.eps as i32) as u32
    }

    pub fn input(&self, r: u32, offset: i32) -> u32 {
        debug_assert!(self.ext.in_rows.contains(&r));
        (r - self.ext.in_rows.start) * self.k() + self.slot(offset)
    }

    pub fn count(&self, r: u32) -> u32 {
        debug_assert!(self.ext.cc_rows.contains(&r));
        self.base_count + (r - self.ext.cc_rows.start)
    }

    pub fn core(&self, r: u32, offset: i32) -> u32 {
        debug_assert!(self.ext.cc_rows.contains(&r));
        self.base_core + (r - self.ext.cc_rows.start) * self.k() + self.slot(offset)
    }

    pub fn relay(&self, r: u32) -> u32 {
        debug_assert!(self.ext.bb_rows.contains(&r));
        self.base_relay + (r - self.ext.bb_rows.start)
    }

    pub fn border(&self, r: u32) -> u32 {
        debug_assert!(self.ext.bb_rows.contains(&r));
        self.base_border + (r - self.ext.bb_rows.start)
    }
}

/// Shared constructor for full and partial column-streaming networks.
pub(crate) fn build_systolic_network(meta: NetMeta, ext: &SystolicExtents) -> Network {
    let eps = meta.epsilon;
    let ieps = eps as i32;
    let layout = SystolicLayout::new(ext.clone(), eps);
    let count_threshold = 1u32.max(meta.min_pts - 1);

    let mut neurons = Vec::new();
    for r in ext.in_rows.clone() {
        for e in -ieps..=ieps {
            neurons.push(Neuron {
                id: layout.input(r, e),
                threshold: 1,
                is_input: e == ieps,
                is_output: false,
                role: RoleTag::offset(Collection::Input, r, e),
            });
        }
    }
    for r in ext.cc_rows.clone() {
        neurons.push(Neuron {
            id: layout.count(r),
            threshold: count_threshold,
            is_input: false,
            is_output: false,
            role: RoleTag::row(Collection::Count, r),
        });
    }
    for r in ext.cc_rows.clone() {
        for e in -ieps..=ieps {
            neurons.push(Neuron {
                id: layout.core(r, e),
                // The chain head at offset eps is the detector; the rest
                // just shift its verdict along.
                threshold: if e == ieps { 2 } else { 1 },
                is_input: false,
                is_output: e == ieps && ext.bb_rows.contains(&r),
                role: RoleTag::offset(Collection::Core, r, e),
            });
        }
    }
    for r in ext.bb_rows.clone() {
        neurons.push(Neuron {
            id: layout.relay(r),
            threshold: 1,
            is_input: false,
            is_output: false,
            role: RoleTag::row(Collection::BorderCore, r),
        });
    }
    for r in ext.bb_rows.clone() {
        neurons.push(Neuron {
            id: layout.border(r),
            threshold: 2,
            is_input: false,
            is_output: true,
            role: RoleTag::row(Collection::Border, r),
        });
    }

    let mut synapses = Vec::new();
    let syn = |from: u32, to: u32, weight: i8, delay: u8| Synapse { from, to, weight, delay };

    // Input shift chains, toward decreasing offset.
    for r in ext.in_rows.clone() {
        for e in -ieps..ieps {
            synapses.push(syn(layout.input(r, e + 1), layout.input(r, e), 1, 1));
        }
    }
    // Every in-flight column of every row within eps feeds the counter; the
    // offset-0 slot of the counter's own row is the cell itself, excluded.
    for r in ext.cc_rows.clone() {
        for i in win(r, eps, &ext.in_rows) {
            for e in -ieps..=ieps {
                if !(i == r && e == 0) {
                    synapses.push(syn(layout.input(i, e), layout.count(r), 1, 1));
                }
            }
        }
    }
    for r in ext.cc_rows.clone() {
        synapses.push(syn(layout.count(r), layout.core(r, ieps), 1, 1));
    }
    // Event gate: the cell's own bit sits at offset 0 when the counter
    // fires, two steps before the detector needs it.
    for r in ext.cc_rows.clone() {
        synapses.push(syn(layout.input(r, 0), layout.core(r, ieps), 1, 2));
    }
    // Core shift chains.
    for r in ext.cc_rows.clone() {
        for e in -ieps..ieps {
            synapses.push(syn(layout.core(r, e + 1), layout.core(r, e), 1, 1));
        }
    }
    // Core status of the neighborhood minus the cell itself.
    for r in ext.bb_rows.clone() {
        for i in win(r, eps, &ext.cc_rows) {
            for e in -ieps..=ieps {
                if !(i == r && e == 0) {
                    synapses.push(syn(layout.core(i, e), layout.relay(r), 1, 1));
                }
            }
        }
    }
    // Border detector gates, all landing 2*eps + 4 steps after the cell's
    // column entered: inhibition from the cell's own core verdict, the
    // event bit leaving the input chain, and the relay.
    for r in ext.bb_rows.clone() {
        synapses.push(syn(layout.core(r, 0), layout.border(r), -1, 2));
    }
    for r in ext.bb_rows.clone() {
        synapses.push(syn(layout.input(r, -ieps), layout.border(r), 1, 4));
    }
    for r in ext.bb_rows.clone() {
        synapses.push(syn(layout.relay(r), layout.border(r), 1, 1));
    }

    Network::new(meta, neurons, synapses).expect("construction is internally consistent")
}

/// Builds the full column-streaming network for `params`. The network
/// depends only on the row count; `meta.cols` is recorded as 0 (any width).
///
/// With [`Orientation::Rows`] the network streams the transposed grid:
/// it is sized for `params.cols()` rows and rows flow through it.
pub fn build_systolic(params: &DbscanParams, orientation: Orientation) -> Network {
    let rows = match orientation {
        Orientation::Columns => params.rows(),
        Orientation::Rows => params.cols(),
    };
    let meta = NetMeta {
        rows,
        cols: 0,
        epsilon: params.epsilon(),
        min_pts: params.min_pts(),
        builder: BuilderKind::Systolic,
        orientation,
        partition: None,
    };
    build_systolic_network(meta, &SystolicExtents::full(rows))
}

/// Timesteps from the first column's injection to the last output fire of a
/// `cols`-wide frame.
pub fn systolic_solution_steps(cols: u32, eps: u32) -> u32 {
    cols + 2 * eps + 4
}

/// Timesteps after which the next frame may start entering: the input
/// chains must have fully drained.
pub fn systolic_reuse_interval(cols: u32, eps: u32) -> u32 {
    cols + 2 * eps
}
