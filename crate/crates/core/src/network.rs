//! Network model: neurons with integer thresholds, synapses with signed unit
//! weights and small integer delays, plus role metadata tying each neuron
//! back to the grid cell or row it stands for.
//!
//! Construction enforces only structural integrity (unique ids, synapse
//! endpoints that exist) so that files produced elsewhere can be loaded and
//! inspected; `validate` reports everything else.

use std::collections::HashMap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

pub type NeuronId = u32;

pub const MIN_DELAY: u8 = 1;
pub const MAX_DELAY: u8 = 4;

/// The five functional groups a neuron can belong to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Collection {
    /// Event injection layer.
    Input,
    /// Neighborhood counters with threshold `min_pts - 1`.
    Count,
    /// Core detectors.
    Core,
    /// Relay layer spreading core status to neighbors.
    BorderCore,
    /// Border detectors.
    Border,
}

impl Collection {
    pub fn token(&self) -> &'static str {
        match self {
            Collection::Input => "I",
            Collection::Count => "C",
            Collection::Core => "Core",
            Collection::BorderCore => "B",
            Collection::Border => "Border",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        match s {
            "I" => Some(Collection::Input),
            "C" => Some(Collection::Count),
            "Core" => Some(Collection::Core),
            "B" => Some(Collection::BorderCore),
            "Border" => Some(Collection::Border),
            _ => None,
        }
    }
}

/// Second coordinate of a role: a grid column, a chain offset, or nothing
/// for per-row neurons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RolePos {
    Col(u32),
    Offset(i32),
    RowOnly,
}

/// What a neuron stands for: its collection plus grid coordinates. Rows and
/// columns are local to the network (partial networks reindex from zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RoleTag {
    pub collection: Collection,
    pub row: u32,
    pub pos: RolePos,
}

impl RoleTag {
    pub fn cell(collection: Collection, row: u32, col: u32) -> Self {
        Self {
            collection,
            row,
            pos: RolePos::Col(col),
        }
    }

    pub fn offset(collection: Collection, row: u32, offset: i32) -> Self {
        Self {
            collection,
            row,
            pos: RolePos::Offset(offset),
        }
    }

    pub fn row(collection: Collection, row: u32) -> Self {
        Self {
            collection,
            row,
            pos: RolePos::RowOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neuron {
    pub id: NeuronId,
    pub threshold: u32,
    pub is_input: bool,
    pub is_output: bool,
    pub role: RoleTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Synapse {
    pub from: NeuronId,
    pub to: NeuronId,
    pub weight: i8,
    pub delay: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuilderKind {
    Flat,
    Systolic,
    PartialFlat,
    PartialSystolic,
    Custom,
}

impl BuilderKind {
    pub fn token(&self) -> &'static str {
        match self {
            BuilderKind::Flat => "flat",
            BuilderKind::Systolic => "systolic",
            BuilderKind::PartialFlat => "partial-flat",
            BuilderKind::PartialSystolic => "partial-systolic",
            BuilderKind::Custom => "custom",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        match s {
            "flat" => Some(BuilderKind::Flat),
            "systolic" => Some(BuilderKind::Systolic),
            "partial-flat" => Some(BuilderKind::PartialFlat),
            "partial-systolic" => Some(BuilderKind::PartialSystolic),
            "custom" => Some(BuilderKind::Custom),
            _ => None,
        }
    }
}

/// Which grid axis streams through a systolic network (or how a flat network
/// was laid out). Columns is the native form; Rows means the instance was
/// transposed first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Columns,
    Rows,
}

impl Orientation {
    pub fn token(&self) -> &'static str {
        match self {
            Orientation::Columns => "columns",
            Orientation::Rows => "rows",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        match s {
            "columns" => Some(Orientation::Columns),
            "rows" => Some(Orientation::Rows),
            _ => None,
        }
    }
}

/// How a partial network sits inside the full grid.
///
/// `Delete` networks are position-dependent (halo regions clip at the grid
/// border), so they record where their output block lives. `Retain` networks
/// keep virtual halo rows and are position-free: equal shapes build equal
/// networks, so only the output block's shape is recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionMeta {
    Delete {
        out_r0: u32,
        out_rows: u32,
        out_c0: u32,
        out_cols: u32,
    },
    Retain {
        out_rows: u32,
        out_cols: u32,
    },
}

/// Instance parameters a network was built for. `cols == 0` means the
/// network handles any width (column-streaming networks are width-free).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetMeta {
    pub rows: u32,
    pub cols: u32,
    pub epsilon: u32,
    pub min_pts: u32,
    pub builder: BuilderKind,
    pub orientation: Orientation,
    pub partition: Option<PartitionMeta>,
}

/// An immutable network: metadata, neurons sorted by id, synapses in
/// construction order.
#[derive(Debug)]
pub struct Network {
    meta: NetMeta,
    neurons: Vec<Neuron>,
    synapses: Vec<Synapse>,
    role_index: OnceLock<HashMap<RoleTag, NeuronId>>,
}

impl Network {
    /// Builds a network, checking id uniqueness and synapse endpoints.
    pub fn new(meta: NetMeta, mut neurons: Vec<Neuron>, synapses: Vec<Synapse>) -> Result<Self> {
        neurons.sort_by_key(|n| n.id);
        for pair in neurons.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::Network(format!("duplicate neuron id {}", pair[0].id)));
            }
        }
        let net = Self {
            meta,
            neurons,
            synapses,
            role_index: OnceLock::new(),
        };
        for (i, s) in net.synapses.iter().enumerate() {
            for (end, id) in [("source", s.from), ("target", s.to)] {
                if net.neuron(id).is_none() {
                    return Err(Error::Network(format!(
                        "synapse {i} references undefined {end} neuron {id}"
                    )));
                }
            }
        }
        Ok(net)
    }

    pub fn meta(&self) -> &NetMeta {
        &self.meta
    }

    pub fn neurons(&self) -> &[Neuron] {
        &self.neurons
    }

    pub fn synapses(&self) -> &[Synapse] {
        &self.synapses
    }

    pub fn neuron_count(&self) -> usize {
        self.neurons.len()
    }

    pub fn synapse_count(&self) -> usize {
        self.synapses.len()
    }

    /// Position of `id` in the sorted neuron slice.
    pub(crate) fn neuron_index(&self, id: NeuronId) -> Option<usize> {
        self.neurons.binary_search_by_key(&id, |n| n.id).ok()
    }

    pub fn neuron(&self, id: NeuronId) -> Option<&Neuron> {
        self.neuron_index(id).map(|i| &self.neurons[i])
    }

    fn roles(&self) -> &HashMap<RoleTag, NeuronId> {
        self.role_index.get_or_init(|| {
            self.neurons.iter().map(|n| (n.role, n.id)).collect()
        })
    }

    /// Neuron standing for `role`, if the network has exactly that tag.
    pub fn id_of(&self, role: RoleTag) -> Option<NeuronId> {
        self.roles().get(&role).copied()
    }

    pub fn inputs(&self) -> impl Iterator<Item = &Neuron> {
        self.neurons.iter().filter(|n| n.is_input)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &Neuron> {
        self.neurons.iter().filter(|n| n.is_output)
    }

    /// Copy of the network with the synapse at `index` removed. Used to
    /// plant a structural fault for negative testing.
    pub fn with_synapse_removed(&self, index: usize) -> Result<Network> {
        if index >= self.synapses.len() {
            return Err(Error::Network(format!(
                "synapse index {index} out of range ({} synapses)",
                self.synapses.len()
            )));
        }
        let mut synapses = self.synapses.clone();
        synapses.remove(index);
        Network::new(self.meta, self.neurons.clone(), synapses)
    }

    /// Value equality: same metadata, same neuron set, same synapse multiset.
    pub fn structurally_equal(&self, other: &Network) -> bool {
        if self.meta != other.meta || self.neurons != other.neurons {
            return false;
        }
        let mut a = self.synapses.clone();
        let mut b = other.synapses.clone();
        a.sort_unstable();
        b.sort_unstable();
        a == b
    }
}

/// Structural statistics and rule violations found by [`validate`].
#[derive(Debug)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub neurons: usize,
    pub synapses: usize,
    pub max_fan_in: u32,
    pub max_fan_out: u32,
    pub max_threshold: u32,
    pub max_delay: u8,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the rules every built network obeys: unit weights, delays in
/// `[MIN_DELAY, MAX_DELAY]`, thresholds in `[1, max(2, min_pts - 1)]`, and
/// input/output flags consistent with each neuron's role.
pub fn validate(net: &Network) -> ValidationReport {
    let mut violations = Vec::new();
    let meta = net.meta();

    let threshold_cap = 2u32.max(meta.min_pts.saturating_sub(1));
    for n in net.neurons() {
        if n.threshold < 1 || n.threshold > threshold_cap {
            violations.push(format!(
                "neuron {}: threshold {} outside 1..={threshold_cap}",
                n.id, n.threshold
            ));
        }
        if n.is_input && n.role.collection != Collection::Input {
            violations.push(format!(
                "neuron {}: input flag on non-input collection {}",
                n.id,
                n.role.collection.token()
            ));
        }
        if n.is_output
            && !matches!(n.role.collection, Collection::Core | Collection::Border)
        {
            violations.push(format!(
                "neuron {}: output flag on collection {}",
                n.id,
                n.role.collection.token()
            ));
        }
    }

    let mut fan_in: HashMap<NeuronId, u32> = HashMap::new();
    let mut fan_out: HashMap<NeuronId, u32> = HashMap::new();
    for (i, s) in net.synapses().iter().enumerate() {
        if s.weight != 1 && s.weight != -1 {
            violations.push(format!("synapse {i}: weight {} not in {{-1, 1}}", s.weight));
        }
        if s.delay < MIN_DELAY || s.delay > MAX_DELAY {
            violations.push(format!(
                "synapse {i}: delay {} outside {MIN_DELAY}..={MAX_DELAY}",
                s.delay
            ));
        }
        *fan_out.entry(s.from).or_default() += 1;
        *fan_in.entry(s.to).or_default() += 1;
    }

    ValidationReport {
        violations,
        neurons: net.neuron_count(),
        synapses: net.synapse_count(),
        max_fan_in: fan_in.values().copied().max().unwrap_or(0),
        max_fan_out: fan_out.values().copied().max().unwrap_or(0),
        max_threshold: net.neurons().iter().map(|n| n.threshold).max().unwrap_or(0),
        max_delay: net.synapses().iter().map(|s| s.delay).max().unwrap_or(0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> NetMeta {
        NetMeta {
            rows: 2,
            cols: 2,
            epsilon: 1,
            min_pts: 3,
            builder: BuilderKind::Custom,
            orientation: Orientation::Columns,
            partition: None,
        }
    }

    fn neuron(id: NeuronId, threshold: u32) -> Neuron {
        Neuron {
            id,
            threshold,
            is_input: true,
            is_output: false,
            role: RoleTag::cell(Collection::Input, id, 0),
        }
    }

    #[test]
    fn rejects_duplicate_ids() {
        let err = Network::new(meta(), vec![neuron(3, 1), neuron(3, 1)], vec![]).unwrap_err();
        assert!(err.to_string().contains("duplicate neuron id 3"));
    }

    #[test]
    fn rejects_dangling_endpoints() {
        let syn = Synapse {
            from: 0,
            to: 9,
            weight: 1,
            delay: 1,
        };
        let err = Network::new(meta(), vec![neuron(0, 1)], vec![syn]).unwrap_err();
        assert!(err.to_string().contains("undefined target neuron 9"));
    }

    #[test]
    fn validate_flags_rule_breaks() {
        let neurons = vec![
            neuron(0, 1),
            Neuron {
                id: 1,
                threshold: 5, // cap for min_pts 3 is 2
                is_input: false,
                is_output: true, // output on Count collection
                role: RoleTag::cell(Collection::Count, 0, 0),
            },
        ];
        let synapses = vec![
            Synapse { from: 0, to: 1, weight: 1, delay: 5 },
            Synapse { from: 0, to: 1, weight: 2, delay: 1 },
        ];
        let net = Network::new(meta(), neurons, synapses).unwrap();
        let report = validate(&net);
        assert!(!report.is_valid());
        assert_eq!(report.violations.len(), 4);
        assert_eq!(report.max_delay, 5);
    }

    #[test]
    fn validate_reports_fan_stats() {
        let neurons = vec![neuron(0, 1), neuron(1, 1), neuron(2, 1)];
        let synapses = vec![
            Synapse { from: 0, to: 1, weight: 1, delay: 1 },
            Synapse { from: 0, to: 2, weight: 1, delay: 1 },
            Synapse { from: 1, to: 2, weight: 1, delay: 1 },
        ];
        let net = Network::new(meta(), neurons, synapses).unwrap();
        let report = validate(&net);
        assert_eq!(report.max_fan_out, 2);
        assert_eq!(report.max_fan_in, 2);
        assert_eq!(report.synapses, 3);
    }

    #[test]
    fn role_lookup_finds_neurons() {
        let net = Network::new(meta(), vec![neuron(0, 1), neuron(1, 1)], vec![]).unwrap();
        assert_eq!(net.id_of(RoleTag::cell(Collection::Input, 1, 0)), Some(1));
        assert_eq!(net.id_of(RoleTag::cell(Collection::Count, 1, 0)), None);
    }

    #[test]
    fn synapse_removal_is_bounds_checked() {
        let net = Network::new(meta(), vec![neuron(0, 1)], vec![]).unwrap();
        assert!(net.with_synapse_removed(0).is_err());
    }
}
