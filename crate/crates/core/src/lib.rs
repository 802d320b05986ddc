//! Program synthesis for a small list-manipulation DSL, driven by continuous
//! optimization. Real-valued genomes are decoded into token sequences through
//! one of five mapping schemes and scored against input-output examples; a
//! from-scratch CMA-ES minimizes the resulting error with optional restart
//! policies when the search stagnates.

pub mod cma;
pub mod corpus;
pub mod dsl;
pub mod mapping;
pub mod restart;
pub mod spec;
pub mod synth;
