//! Library surface of the experiment harness, so integration tests can
//! drive the commands directly.

pub mod commands;
pub mod config;

use uavtl::error::Error;

/// Process exit code per error class: 2 usage, 3 config, 4 data/input,
/// 5 training fault.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) => 2,
        Error::Config(_) => 3,
        Error::Parse { .. }
        | Error::Data(_)
        | Error::Domain(_)
        | Error::Validation(_)
        | Error::Load(_)
        | Error::Computation(_)
        | Error::Io(_) => 4,
        Error::Training(_) => 5,
    }
}
