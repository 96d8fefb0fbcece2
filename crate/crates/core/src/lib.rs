pub mod baselines;
pub mod dsl;
pub mod fitting;
pub mod geometry;
pub mod harness;
pub mod inference;
