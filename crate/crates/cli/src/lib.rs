//! `tapkin` command-line front end: distance signals, cycles and features
//! from recordings, accuracy and reliability reports, synthetic datasets.

pub mod accuracy;
pub mod cli;
pub mod error;
pub mod featuredoc;
pub mod inputs;
pub mod kv;
pub mod output;
pub mod reliability;
pub mod settings;
pub mod svg;
pub mod synth;

pub use cli::run;
pub use error::{CliError, CliResult};
