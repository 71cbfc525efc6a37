pub mod appendix;
pub mod cli;
pub mod config;
pub mod coupling;
pub mod error;
pub mod forward;
pub mod geometry;
pub mod graph2d;
pub mod herglotz;
pub mod highdim;
pub mod linalg;
pub mod recon;
pub mod region;
pub mod sampling;
pub mod selftest;
pub mod uniqueness3d;
