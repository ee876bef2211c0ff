//! Discrete-time simulator with exact integrate-and-fire semantics.
//!
//! Each timestep runs in three phases: every charge arriving now is added to
//! its target's potential; a neuron fires if it was forced by the schedule or
//! its potential reached its threshold; each firing neuron emits its outgoing
//! weights (arriving `delay` steps later) and resets to zero. Leak is total:
//! a neuron that does not fire also resets to zero, so potentials never
//! carry across timesteps and all state lives in the in-flight charges.

use crate::error::{Error, Result};
use crate::network::{Network, NeuronId, MAX_DELAY, MIN_DELAY};

/// Forced input firings: `(timestep, neuron)` pairs, any order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpikeSchedule {
    entries: Vec<(u32, NeuronId)>,
}

impl SpikeSchedule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t: u32, neuron: NeuronId) {
        self.entries.push((t, neuron));
    }

    pub fn extend(&mut self, other: &SpikeSchedule) {
        self.entries.extend_from_slice(&other.entries);
    }

    pub fn entries(&self) -> &[(u32, NeuronId)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Latest scheduled timestep, if any.
    pub fn last_timestep(&self) -> Option<u32> {
        self.entries.iter().map(|&(t, _)| t).max()
    }
}

impl FromIterator<(u32, NeuronId)> for SpikeSchedule {
    fn from_iter<I: IntoIterator<Item = (u32, NeuronId)>>(iter: I) -> Self {
        Self {
            entries: iter.into_iter().collect(),
        }
    }
}

/// Observed firings, sorted by `(timestep, neuron)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpikeRaster {
    entries: Vec<(u32, NeuronId)>,
}

impl SpikeRaster {
    pub fn from_entries(mut entries: Vec<(u32, NeuronId)>) -> Self {
        entries.sort_unstable();
        Self { entries }
    }

    pub fn entries(&self) -> &[(u32, NeuronId)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, t: u32, neuron: NeuronId) -> bool {
        self.entries.binary_search(&(t, neuron)).is_ok()
    }

    /// Firings at one timestep.
    pub fn at(&self, t: u32) -> impl Iterator<Item = NeuronId> + '_ {
        self.entries
            .iter()
            .filter(move |&&(time, _)| time == t)
            .map(|&(_, id)| id)
    }
}

/// Work counters for one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimStats {
    /// Timesteps stepped, i.e. the horizon.
    pub timesteps: u32,
    /// Charges delivered across all synapses.
    pub deliveries: u64,
    /// Total firings, hidden neurons included.
    pub fires: u64,
}

/// Result of a traced run: output firings, all firings, and work counters.
#[derive(Debug, Clone)]
pub struct Trace {
    pub outputs: SpikeRaster,
    pub all_fires: SpikeRaster,
    pub stats: SimStats,
}

// Delivery ring depth: charges land at most MAX_DELAY steps ahead.
const RING: usize = MAX_DELAY as usize + 1;

/// Reusable engine for one network: adjacency in compressed form, plus
/// per-run scratch buffers. Runs do not share state; each `run_*` call
/// starts from a silent network.
pub struct Simulator<'n> {
    net: &'n Network,
    // Outgoing synapses of neuron (by dense index): CSR layout.
    edge_start: Vec<u32>,
    edge_target: Vec<u32>,
    edge_weight: Vec<i8>,
    edge_delay: Vec<u8>,
    threshold: Vec<i64>,
    is_input: Vec<bool>,
    is_output: Vec<bool>,
    ids: Vec<NeuronId>,
}

impl<'n> Simulator<'n> {
    /// Prepares adjacency for `net`. Refuses networks whose synapses fall
    /// outside the supported weight/delay ranges, since the delivery ring
    /// cannot represent them.
    pub fn new(net: &'n Network) -> Result<Self> {
        for (i, s) in net.synapses().iter().enumerate() {
            if s.delay < MIN_DELAY || s.delay > MAX_DELAY {
                return Err(Error::Network(format!(
                    "synapse {i}: delay {} outside {MIN_DELAY}..={MAX_DELAY}",
                    s.delay
                )));
            }
            if s.weight != 1 && s.weight != -1 {
                return Err(Error::Network(format!(
                    "synapse {i}: weight {} not in {{-1, 1}}",
                    s.weight
                )));
            }
        }

        let n = net.neuron_count();
        let dense = |id: NeuronId| net.neuron_index(id).expect("endpoint checked at build") as u32;

        let mut degree = vec![0u32; n];
        for s in net.synapses() {
            degree[dense(s.from) as usize] += 1;
        }
        let mut edge_start = vec![0u32; n + 1];
        for i in 0..n {
            edge_start[i + 1] = edge_start[i] + degree[i];
        }
        let m = net.synapse_count();
        let mut edge_target = vec![0u32; m];
        let mut edge_weight = vec![0i8; m];
        let mut edge_delay = vec![0u8; m];
        let mut cursor = edge_start.clone();
        for s in net.synapses() {
            let from = dense(s.from) as usize;
            let slot = cursor[from] as usize;
            cursor[from] += 1;
            edge_target[slot] = dense(s.to);
            edge_weight[slot] = s.weight;
            edge_delay[slot] = s.delay;
        }

        Ok(Self {
            net,
            edge_start,
            edge_target,
            edge_weight,
            edge_delay,
            threshold: net.neurons().iter().map(|x| x.threshold as i64).collect(),
            is_input: net.neurons().iter().map(|x| x.is_input).collect(),
            is_output: net.neurons().iter().map(|x| x.is_output).collect(),
            ids: net.neurons().iter().map(|x| x.id).collect(),
        })
    }

    pub fn network(&self) -> &Network {
        self.net
    }

    /// Runs for `horizon` timesteps (`t` in `0..horizon`) and returns output
    /// firings.
    pub fn run(&self, schedule: &SpikeSchedule, horizon: u32) -> Result<SpikeRaster> {
        Ok(self.drive(schedule, horizon, false)?.outputs)
    }

    pub fn run_with_stats(
        &self,
        schedule: &SpikeSchedule,
        horizon: u32,
    ) -> Result<(SpikeRaster, SimStats)> {
        let trace = self.drive(schedule, horizon, false)?;
        Ok((trace.outputs, trace.stats))
    }

    /// Like [`run`](Self::run) but records every firing, hidden neurons
    /// included. Used to check internal timing, not just outputs.
    pub fn run_traced(&self, schedule: &SpikeSchedule, horizon: u32) -> Result<Trace> {
        self.drive(schedule, horizon, true)
    }

    fn drive(&self, schedule: &SpikeSchedule, horizon: u32, trace_all: bool) -> Result<Trace> {
        let n = self.ids.len();

        // Forced firings sorted by time; validated against the horizon and
        // the input flags up front.
        let mut forced: Vec<(u32, u32)> = Vec::with_capacity(schedule.len());
        for &(t, id) in schedule.entries() {
            let Some(idx) = self.net.neuron_index(id) else {
                return Err(Error::Schedule(format!("unknown neuron {id}")));
            };
            if !self.is_input[idx] {
                return Err(Error::Schedule(format!(
                    "neuron {id} is not an input and cannot be forced"
                )));
            }
            if t >= horizon {
                return Err(Error::Schedule(format!(
                    "entry at t={t} is outside horizon {horizon}"
                )));
            }
            forced.push((t, idx as u32));
        }
        forced.sort_unstable();

        let mut ring: Vec<Vec<(u32, i8)>> = (0..RING).map(|_| Vec::new()).collect();
        let mut potential = vec![0i64; n];
        let mut touched: Vec<u32> = Vec::new();
        let mut is_touched = vec![false; n];
        let mut fired: Vec<u32> = Vec::new();
        let mut has_fired = vec![false; n];

        let mut outputs: Vec<(u32, NeuronId)> = Vec::new();
        let mut all_fires: Vec<(u32, NeuronId)> = Vec::new();
        let mut stats = SimStats {
            timesteps: horizon,
            ..SimStats::default()
        };

        let mut next_forced = 0usize;
        for t in 0..horizon {
            let slot = (t as usize) % RING;
            let arrivals = std::mem::take(&mut ring[slot]);
            for (idx, w) in &arrivals {
                let i = *idx as usize;
                if !is_touched[i] {
                    is_touched[i] = true;
                    touched.push(*idx);
                }
                potential[i] += *w as i64;
                stats.deliveries += 1;
            }
            let mut reclaimed = arrivals;
            reclaimed.clear();
            ring[slot] = reclaimed;

            fired.clear();
            while next_forced < forced.len() && forced[next_forced].0 == t {
                let idx = forced[next_forced].1;
                next_forced += 1;
                if !has_fired[idx as usize] {
                    has_fired[idx as usize] = true;
                    fired.push(idx);
                }
            }
            for &idx in &touched {
                let i = idx as usize;
                if !has_fired[i] && potential[i] >= self.threshold[i] {
                    has_fired[i] = true;
                    fired.push(idx);
                }
            }

            for &idx in &fired {
                let i = idx as usize;
                stats.fires += 1;
                if self.is_output[i] {
                    outputs.push((t, self.ids[i]));
                }
                if trace_all {
                    all_fires.push((t, self.ids[i]));
                }
                let (lo, hi) = (self.edge_start[i] as usize, self.edge_start[i + 1] as usize);
                for e in lo..hi {
                    let land = (t as usize + self.edge_delay[e] as usize) % RING;
                    ring[land].push((self.edge_target[e], self.edge_weight[e]));
                }
            }

            // Total leak: every touched potential resets whether or not the
            // neuron fired.
            for &idx in &touched {
                potential[idx as usize] = 0;
                is_touched[idx as usize] = false;
            }
            touched.clear();
            for &idx in &fired {
                has_fired[idx as usize] = false;
            }
        }

        Ok(Trace {
            outputs: SpikeRaster::from_entries(outputs),
            all_fires: SpikeRaster::from_entries(all_fires),
            stats,
        })
    }
}

/// One-shot run over a fresh engine.
pub fn simulate(net: &Network, schedule: &SpikeSchedule, horizon: u32) -> Result<SpikeRaster> {
    Simulator::new(net)?.run(schedule, horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{
        BuilderKind, Collection, NetMeta, Network, Neuron, Orientation, RoleTag, Synapse,
    };

    fn meta() -> NetMeta {
        NetMeta {
            rows: 1,
            cols: 1,
            epsilon: 1,
            min_pts: 3,
            builder: BuilderKind::Custom,
            orientation: Orientation::Columns,
            partition: None,
        }
    }

    /// Chain-friendly test network: neuron 0 is input, last neuron is output.
    fn net(thresholds: &[u32], synapses: Vec<Synapse>) -> Network {
        let last = thresholds.len() - 1;
        let neurons = thresholds
            .iter()
            .enumerate()
            .map(|(i, &th)| Neuron {
                id: i as u32,
                threshold: th,
                is_input: i == 0,
                is_output: i == last,
                role: RoleTag::cell(
                    if i == 0 { Collection::Input } else { Collection::Core },
                    i as u32,
                    0,
                ),
            })
            .collect();
        Network::new(meta(), neurons, synapses).unwrap()
    }

    fn syn(from: u32, to: u32, weight: i8, delay: u8) -> Synapse {
        Synapse { from, to, weight, delay }
    }

    #[test]
    fn charge_arrives_after_delay() {
        // 0 -> 1 with weight 1 delay 2; forcing 0 at t=0 fires 1 at t=2.
        let net = net(&[1, 1], vec![syn(0, 1, 1, 2)]);
        let sched: SpikeSchedule = [(0, 0)].into_iter().collect();
        let raster = simulate(&net, &sched, 5).unwrap();
        assert_eq!(raster.entries(), &[(2, 1)]);
    }

    #[test]
    fn charges_sum_within_a_timestep() {
        // Two unit charges arriving together reach a threshold of 2.
        let net = net(&[1, 1, 2], vec![syn(0, 2, 1, 1), syn(1, 2, 1, 1)]);
        let mut neurons: Vec<Neuron> = net.neurons().to_vec();
        neurons[1].is_input = true;
        neurons[1].role = RoleTag::cell(Collection::Input, 1, 0);
        let net = Network::new(*net.meta(), neurons, net.synapses().to_vec()).unwrap();

        let sched: SpikeSchedule = [(0, 0), (0, 1)].into_iter().collect();
        assert_eq!(simulate(&net, &sched, 3).unwrap().entries(), &[(1, 2)]);

        // Arriving one step apart they leak away separately: no firing.
        let sched: SpikeSchedule = [(0, 0), (1, 1)].into_iter().collect();
        assert!(simulate(&net, &sched, 4).unwrap().is_empty());
    }

    #[test]
    fn sub_threshold_charge_leaks_fully() {
        let net = net(&[1, 2], vec![syn(0, 1, 1, 1)]);
        // Unit charges at t=1 and t=3 never overlap; threshold 2 unreached.
        let sched: SpikeSchedule = [(0, 0), (2, 0)].into_iter().collect();
        assert!(simulate(&net, &sched, 6).unwrap().is_empty());
    }

    #[test]
    fn inhibition_cancels_excitation() {
        let net = net(&[1, 1, 1], vec![syn(0, 2, 1, 1), syn(1, 2, -1, 1)]);
        let mut neurons: Vec<Neuron> = net.neurons().to_vec();
        neurons[1].is_input = true;
        neurons[1].role = RoleTag::cell(Collection::Input, 1, 0);
        let net = Network::new(*net.meta(), neurons, net.synapses().to_vec()).unwrap();
        let sched: SpikeSchedule = [(0, 0), (0, 1)].into_iter().collect();
        assert!(simulate(&net, &sched, 3).unwrap().is_empty());
    }

    #[test]
    fn firing_resets_before_next_arrival() {
        // 0 -> 1 twice (delay 1 and 2). Neuron 1 (threshold 1) fires at t=1,
        // resets, and fires again at t=2 from the second charge.
        let net = net(&[1, 1], vec![syn(0, 1, 1, 1), syn(0, 1, 1, 2)]);
        let sched: SpikeSchedule = [(0, 0)].into_iter().collect();
        let raster = simulate(&net, &sched, 4).unwrap();
        assert_eq!(raster.entries(), &[(1, 1), (2, 1)]);
    }

    #[test]
    fn max_delay_wraps_ring_correctly(){
        // Repeated forcing at the ring period must not collide with charges
        // still in flight at delay 4.
        let net = net(&[1, 2], vec![syn(0, 1, 1, 4), syn(0, 1, 1, 1)]);
        // Forcing at t=0 and t=3: charges land at (1, 4) and (4, 7).
        // At t=4 two unit charges coincide: fire.
        let sched: SpikeSchedule = [(0, 0), (3, 0)].into_iter().collect();
        let raster = simulate(&net, &sched, 8).unwrap();
        assert_eq!(raster.entries(), &[(4, 1)]);
    }

    #[test]
    fn forced_fire_wins_over_potential() {
        // An input forced at the same step a charge arrives fires once.
        let net = net(&[1, 1], vec![syn(0, 1, 1, 1), syn(1, 0, 1, 1)]);
        let sched: SpikeSchedule = [(0, 0), (2, 0)].into_iter().collect();
        let trace = Simulator::new(&net).unwrap().run_traced(&sched, 4).unwrap();
        // t=2: neuron 0 is both forced and charged (from 1's t=1 fire); it
        // fires exactly once.
        let fires_at_2: Vec<_> = trace.all_fires.at(2).collect();
        assert_eq!(fires_at_2, vec![0]);
    }

    #[test]
    fn schedule_validation() {
        let net = net(&[1, 1], vec![syn(0, 1, 1, 1)]);
        let sim = Simulator::new(&net).unwrap();

        let sched: SpikeSchedule = [(0, 1)].into_iter().collect();
        assert!(matches!(sim.run(&sched, 4), Err(Error::Schedule(_))));

        let sched: SpikeSchedule = [(0, 99)].into_iter().collect();
        assert!(matches!(sim.run(&sched, 4), Err(Error::Schedule(_))));

        let sched: SpikeSchedule = [(4, 0)].into_iter().collect();
        assert!(matches!(sim.run(&sched, 4), Err(Error::Schedule(_))));
        assert!(matches!(sim.run(&sched, 0), Err(Error::Schedule(_))));

        let empty = SpikeSchedule::new();
        assert!(sim.run(&empty, 0).unwrap().is_empty());
    }

    #[test]
    fn rejects_unsupported_synapses() {
        let bad_delay = net(&[1, 1], vec![syn(0, 1, 1, 5)]);
        assert!(Simulator::new(&bad_delay).is_err());
        let bad_weight = net(&[1, 1], vec![syn(0, 1, 2, 1)]);
        assert!(Simulator::new(&bad_weight).is_err());
    }

    #[test]
    fn runs_are_independent_and_deterministic() {
        let net = net(&[1, 2, 1], vec![
            syn(0, 1, 1, 1),
            syn(0, 1, 1, 2),
            syn(1, 2, 1, 1),
        ]);
        let sim = Simulator::new(&net).unwrap();
        let sched: SpikeSchedule = [(0, 0), (1, 0)].into_iter().collect();
        let first = sim.run(&sched, 6).unwrap();
        for _ in 0..3 {
            assert_eq!(sim.run(&sched, 6).unwrap(), first);
        }
        // A silent run in between must not perturb anything.
        assert!(sim.run(&SpikeSchedule::new(), 6).unwrap().is_empty());
        assert_eq!(sim.run(&sched, 6).unwrap(), first);
    }

    #[test]
    fn stats_count_work() {
        let net = net(&[1, 1], vec![syn(0, 1, 1, 1)]);
        let sim = Simulator::new(&net).unwrap();
        let sched: SpikeSchedule = [(0, 0)].into_iter().collect();
        let (_, stats) = sim.run_with_stats(&sched, 3).unwrap();
        assert_eq!(stats.timesteps, 3);
        assert_eq!(stats.fires, 2); // input forced + output at t=1
        assert_eq!(stats.deliveries, 1);
    }
}
