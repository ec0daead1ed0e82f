//! Library surface of the `logitest` command-line tool (the binary is a
//! thin wrapper; integration tests drive these modules directly).

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod idx;
