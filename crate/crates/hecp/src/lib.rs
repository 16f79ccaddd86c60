//! Command-line driver, file formats and acceptance suite for `hecp-core`.

#![forbid(unsafe_code)]

pub mod circuit_text;
pub mod cli;
pub mod expansions;
pub mod export;
pub mod verify;
