pub mod cli;
pub mod dataset;
pub mod eval;
pub mod features;
pub mod graph;
pub mod ir;
pub mod model;
pub mod source;
