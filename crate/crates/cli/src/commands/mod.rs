//! One module per subcommand.

pub mod analyze;
pub mod calibrate;
pub mod common;
pub mod compare;
pub mod net;
pub mod simulate;

use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use crate::args::Command;
use crate::error::CliError;

/// Run a parsed command. `stop` is raised on interrupt.
pub fn dispatch(command: &Command, stop: Arc<AtomicBool>) -> Result<(), CliError> {
    match command {
        Command::Simulate(a) => simulate::run(a),
        Command::Stream(a) => net::stream(a, stop),
        Command::Collect(a) => net::collect(a, stop),
        Command::Analyze(a) => analyze::run(a),
        Command::Calibrate(a) => calibrate::run(a),
        Command::Compare(a) => compare::run(a),
    }
}
