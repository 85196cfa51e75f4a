//! Simulator for location-aware dispersion: `k` colored robots on an
//! anonymous port-labeled graph must each reach a distinct node of their
//! own color.

pub mod algo_basic;
pub mod algo_multi;
pub mod algo_rooted;
pub mod cli;
pub mod engine;
pub mod graph;
pub mod verify;
