//! Command-line and HTTP front ends for level-forge.

pub mod commands;
pub mod input;
pub mod output;
pub mod server;
