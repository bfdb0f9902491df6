//! Parameter sweeps: solved instances, check runners, TOML configs and the run driver.

pub mod checks;
pub mod instance;
pub mod config;
pub mod plotdata;
pub mod runner;
pub mod summary;
