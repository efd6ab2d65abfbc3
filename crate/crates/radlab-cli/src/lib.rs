//! Command-line front end and the named experiment presets.

pub mod commands;
pub mod output;
pub mod presets;
