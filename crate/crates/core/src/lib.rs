//! Elicit expert pairwise judgments over a catalog, encode them as
//! degree-labeled constraint graphs, unify several graphs by voting, and
//! derive scores and priorities from the result.

pub mod catalogs;
pub mod encoding;
pub mod graph;
pub mod metrics;
pub mod prioritization;
pub mod scoring;
pub mod service;
pub mod unification;

pub use graph::{ConstraintGraph, Degree, Edge, ElementId, Relation, RelationKind};
