//! Config files, experiment runs, sweeps and trace files behind the binary.

pub mod config;
pub mod experiment;
pub mod trace_file;
