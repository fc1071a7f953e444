//! Command-line pipeline and annotation service for semantic divergence
//! detection.

pub mod cli;
pub mod commands;
pub mod config;
pub mod service;
