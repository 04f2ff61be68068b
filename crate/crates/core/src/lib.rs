pub mod domain;
pub mod error;
pub mod mapf;
pub mod assignment;
pub mod decomp;
pub mod fixtures;
pub mod generate;
pub mod pp;
pub mod baselines;
pub mod io;
pub mod suite;
pub mod render;
