//! Library side of the `forge` binary: configuration and the subcommands,
//! callable directly from tests.

pub mod commands;
pub mod config;

pub use commands::{cmd_compare, cmd_forecast, cmd_prepare, cmd_synth, cmd_train, cmd_tune, load_dataset, Dataset};
pub use config::{DataSource, RunConfig, SearchKind, SearchSpec, Seeds};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// Bad arguments, configuration or input data.
    pub const USAGE: i32 = 2;
    /// Failure while computing.
    pub const RUNTIME: i32 = 3;
}

/// Exit code for an error returned by a subcommand.
pub fn exit_code(err: &forge_core::Error) -> i32 {
    if err.is_input_error() {
        exit::USAGE
    } else {
        exit::RUNTIME
    }
}
