//! Compile grid density-clustering instances into spiking networks with
//! exact integrate-and-fire semantics, simulate them, and check the spike
//! output against a classical reference classifier.

pub mod codec;
pub mod deploy;
pub mod error;
pub mod flat;
pub mod grid;
pub mod harness;
pub mod netfmt;
pub mod network;
pub mod partition;
pub mod sim;
pub mod systolic;

pub use deploy::{
    estimate_deployment, format_hz, format_seconds, parse_exact, timing_contract, Bottleneck,
    DeploymentModel, DeploymentReport, Exact,
};
pub use error::{Error, Result};
pub use flat::{build_flat, FLAT_REUSE_INTERVAL, FLAT_SOLUTION_STEPS};
pub use grid::{classify, neighborhood_count, DbscanParams, EventFrame, Label, LabelGrid};
pub use harness::{
    random_frames, run_partitioned, run_pipelined_flat, run_systolic_stream,
    run_systolic_stream_with_interval, verify, Mismatch, PartitionPlanOptions, PartitionRunner,
    RunReport, VerifyMode, VerifyOptions, DEFAULT_DENSITY,
};
pub use network::{
    validate, BuilderKind, Collection, NetMeta, Network, Neuron, NeuronId, Orientation,
    PartitionMeta, RolePos, RoleTag, Synapse, ValidationReport, MAX_DELAY, MIN_DELAY,
};
pub use partition::{
    build_partial_flat, build_partial_systolic, decode_partial_flat, decode_partial_systolic,
    encode_partial_flat, encode_partial_systolic, merge_partition_outputs, plan_from_text,
    plan_partitions, plan_to_text, BoundaryPolicy, PartitionSpec,
};
pub use sim::{simulate, SimStats, Simulator, SpikeRaster, SpikeSchedule, Trace};
pub use systolic::{build_systolic, systolic_reuse_interval, systolic_solution_steps};
