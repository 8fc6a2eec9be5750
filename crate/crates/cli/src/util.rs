//! Small filesystem helpers shared by the subcommands.

use std::fs::File;
use std::path::Path;

use endotype_core::error::{Error, Result};

/// Open an input file, turning a missing path into a diagnostic that
/// names it.
pub fn open_input(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| {
        let message = if e.kind() == std::io::ErrorKind::NotFound {
            format!("file not found: {}", path.display())
        } else {
            format!("cannot open {}: {e}", path.display())
        };
        Error::Io(std::io::Error::new(e.kind(), message))
    })
}

/// Create the output directory (and parents) if needed.
pub fn ensure_out_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot create output directory {}: {e}", path.display()),
        ))
    })
}

/// Create an output file inside the run's directory.
pub fn create_output(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot write {}: {e}", path.display()),
        ))
    })
}
