pub mod detectors;
pub mod harness;
pub mod flop_model;
pub mod linalg;
