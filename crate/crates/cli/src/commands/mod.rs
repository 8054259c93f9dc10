pub mod analytic;
pub mod sweep;
pub mod train;
pub mod validate;

use std::io::Write;
use std::path::Path;

use crate::error::CliError;

/// Writes `bytes` to `out`, or to stdout when no path is given.
pub(crate) fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| CliError::io(path, e)),
        None => std::io::stdout().write_all(bytes).map_err(|e| CliError::io("<stdout>", e)),
    }
}

pub(crate) fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    write(&mut buf).expect("writing CSV to memory cannot fail");
    buf
}
