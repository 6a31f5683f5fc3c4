//! Cross-lingual DRS parsing.

pub mod autodiff;
pub mod cli;
pub mod corpus;
pub mod decoder;
pub mod drs;
pub mod encoders;
pub mod evaluator;
pub mod gradsuite;
pub mod model;
pub mod nn;
pub mod stages;
pub mod synth;
pub mod training;
pub mod tree;
