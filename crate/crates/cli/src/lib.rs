//! Library backing the `subsel` command-line driver: config parsing, CSV
//! ingestion, and the simulate / fit / diagnose entry points. The binary in
//! `main.rs` is a thin argument-parsing layer over these modules, which
//! keeps every behavior reachable from integration tests.

pub mod config;
pub mod diagnose;
pub mod fitcmd;
pub mod ingest;
pub mod simulate;
