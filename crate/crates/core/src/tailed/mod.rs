//! Tailed quantum circuits: ebit heads and tails, injection by measurement,
//! observable readout, contractions and topological diagrams.

pub mod circuit;
pub mod contract;
pub mod inject;
pub mod run;
pub mod topo;
pub mod topo_text;

pub use circuit::{
    simulate, CircuitGate, Endpoint, InjectionMode, InjectionSpec, ReadoutSpec, TailedCircuit,
};
pub use contract::{contract, Contraction};
pub use inject::{
    inject, inject_state, injection_branches, monolithic_toffoli, sample_tail_z, toffoli_cascade,
    Branch, BranchState, Injection, ReversibleCircuit, TailSample,
};
pub use run::{
    estimate, run_algorithm, AlgorithmInput, BranchStats, Estimate, Executor, RunRecord,
};
pub use topo::{circle, eval_topological, TopoDiagram, TopoEndpoint, TopoValue, TopoVertex};
pub use topo_text::parse_diagram;
