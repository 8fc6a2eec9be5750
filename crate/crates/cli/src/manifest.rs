//! Run manifests: every subcommand records its effective configuration
//! and the SHA-256 digests of its inputs and outputs, so a run can be
//! replayed and verified bit for bit.

use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use endotype_core::error::Result;
use endotype_core::io::write_json;

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    /// The full effective configuration after flag overrides.
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub struct ManifestBuilder {
    subcommand: String,
    config: serde_json::Value,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

impl ManifestBuilder {
    pub fn new<C: Serialize>(subcommand: &str, config: &C) -> Result<Self> {
        Ok(ManifestBuilder {
            subcommand: subcommand.to_string(),
            config: serde_json::to_value(config)?,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(digest_file(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<()> {
        self.outputs.push(digest_file(path)?);
        Ok(())
    }

    /// Write `manifest.json` into the output directory and return its
    /// path.
    pub fn write(self, out_dir: &Path) -> Result<PathBuf> {
        let manifest = Manifest {
            tool: "endotype",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: self.subcommand,
            config: self.config,
            inputs: self.inputs,
            outputs: self.outputs,
        };
        let path = out_dir.join("manifest.json");
        write_json(File::create(&path)?, &manifest)?;
        announce(&manifest.outputs);
        Ok(path)
    }
}

/// List written artifacts on stderr when `ENDOTYPE_VERBOSE` is set.
pub fn announce(outputs: &[FileDigest]) {
    if std::env::var_os("ENDOTYPE_VERBOSE").is_some_and(|v| v != "0") {
        for file in outputs {
            eprintln!("wrote {}", file.path);
        }
    }
}

pub fn digest_file(path: &Path) -> Result<FileDigest> {
    let mut file = crate::util::open_input(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let read = file.read(&mut buf)?;
        if read == 0 {
            break;
        }
        hasher.update(&buf[..read]);
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: hex,
    })
}
