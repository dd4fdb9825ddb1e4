//! Command-line front end, parallel executor and file formats for the
//! `pca-core` engine.

pub mod cli;
pub mod config;
pub mod parallel;
pub mod report;
pub mod table_io;
pub mod verify;
