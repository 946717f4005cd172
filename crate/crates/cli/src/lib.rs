//! Driver for `steuler-core`: configuration files, parallel ensembles, CSV and
//! JSON output, and the verification battery behind `steuler verify`.

pub mod commands;
pub mod config;
pub mod ensemble;
pub mod manifest;
pub mod output;
pub mod verify;
