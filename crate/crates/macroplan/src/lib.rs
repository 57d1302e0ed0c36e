//! Causal-graph planning toolkit.
//!
//! Classifies multi-valued planning problems by the structure of their causal
//! graphs (inverted-tree reducible, relaxed variants, acyclic with reversible
//! or partially reversible variables) and solves each class with a dedicated
//! macro-based planner. Plans are kept as DAGs of macros, so exponentially
//! long solutions have polynomial-size representations.

pub mod arena;
pub mod cli;
pub mod domains;
pub mod graph;
pub mod io;
pub mod model;
pub mod oracle;
pub mod planner;
