//! Symbolic reasoning scaffold: bounded reliability scores, aggregation
//! operators and their invariant checks, a scope lattice, an epistemic
//! state machine, a claim/evidence knowledge graph with reliability
//! propagation, and a hash-chained log of ratified decisions.

pub mod drr;
pub mod error;
pub mod fsm;
pub mod gamma;
pub mod graph;
pub mod harness;
pub mod model;
pub mod scope;
pub mod score;

pub use error::{Error, Result};
pub use score::{make_score, ReliabilityScore};
