//! Drill-down dashboards: charts organized into an aggregation hierarchy
//! that readers drill into and roll up, built by authors through merge
//! operators.

pub mod aggregation;
pub mod document;
pub mod fuzz;
pub mod hierarchy;
pub mod ingest;
pub mod layout;
pub mod model;
pub mod render;
pub mod script;
pub mod session;
