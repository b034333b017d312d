//! Command-line front end for qrt-core: monotones, bounds, trade-off programs, maps and
//! the sweeps behind the distillation figures.

pub mod cli;
pub mod config;
pub mod error;
pub mod figures;
pub mod spec;
pub mod table;
