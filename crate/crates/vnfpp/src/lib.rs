//! Placement of virtual network function (VNF) chains in fat-tree data
//! centers.
//!
//! The crate models a data center as a network of finite-buffer M/M/1/B
//! queues, predicts per-service latency, packet loss, and total energy for a
//! given placement, and searches for Pareto-optimal placements with a
//! repair-based evolutionary algorithm. A discrete-event simulator provides
//! an independent cross-check of the analytical model, and a set of simpler
//! surrogate models and placement heuristics serve as baselines.

pub mod des;
pub mod encoding;
pub mod eval;
pub mod evo;
pub mod heuristics;
pub mod qos;
pub mod rng;
pub mod surrogates;
pub mod topology;
pub mod verify;
pub mod workload;

pub use encoding::{Genotype, Phenotype};
pub use topology::{Component, ComponentId, ComponentKind, Topology};
pub use workload::{ProblemInstance, Service, Vnf};
