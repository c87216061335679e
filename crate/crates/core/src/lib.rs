//! Subgraph matching by backtracking enumeration with pluggable query-vertex
//! ordering: classic heuristics (RI, QuickSI, GraphQL, infrequent label) and a
//! graph-convolution policy trained with a clipped-surrogate policy gradient
//! to minimize the number of enumeration calls.

pub mod checkpoint;
pub mod cli;
pub mod enumerate;
pub mod error;
pub mod features;
pub mod filter;
pub mod graph;
pub mod linalg;
pub mod oracle;
pub mod order;
pub mod policy;
pub mod trainer;

pub use error::{Error, Result};
