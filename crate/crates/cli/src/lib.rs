//! Command-line front end for `audio-transport`: offline `render`, region
//! `analyze`, and a `live` engine steered over a WebSocket.
//!
//! Exit codes are stable: 0 success, 2 bad arguments, 3 I/O (files,
//! sockets, sample-rate or channel mismatch, output device), 4 engine fault.

pub mod args;
pub mod commands;
pub mod control;
pub mod error;
pub mod live;

pub use args::{Cli, Command};
pub use control::{parse_control, ControlMessage, Slot, StatusFrame};
pub use error::CliError;

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Render(args) => commands::cmd_render(args),
        Command::Analyze(args) => commands::cmd_analyze(args),
        Command::Live(args) => live::cmd_live(args),
    }
}
