//! Random digraphs with m edges conditioned on minimum in- and out-degree
//! at least one: near-uniform sampling via truncated-Poisson degree
//! sequences and switchings, a three-phase Hamilton cycle engine, exact
//! small-scale counting oracles and a Monte Carlo experiment harness.

pub mod engine;
pub mod experiments;
pub mod graph;
pub mod oracle;
pub mod params;
pub mod sampler;
mod treap;

pub use graph::{BipartiteGraph, CycleCover, Digraph, EdgeSequence};
pub use params::{Parameters, Profile};
