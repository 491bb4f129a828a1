//! Library side of the `capcert` command: channel files, run reports and the
//! command pipelines, usable from tests without spawning the binary.

pub mod commands;
pub mod error;
pub mod report;
pub mod spec;

pub use commands::{
    cmd_capacity, cmd_certify, cmd_scan, Options, ScanDirection, ScanRow, ScanTable,
};
pub use error::{CliError, CliResult};
pub use report::RunReport;
pub use spec::ChannelSpecFile;

/// Exit code for a finished `certify` run: 1 when verification found a violation.
pub fn exit_code(report: &RunReport) -> i32 {
    match report.status {
        Some("fail") => 1,
        _ => 0,
    }
}
