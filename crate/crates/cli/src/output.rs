use std::path::{Path, PathBuf};

use bsg_core::report::{Format, Table};
use sha2::{Digest, Sha256};

use crate::Failure;

/// One output file: a table rendered in each requested format, or raw text.
#[derive(Debug, Clone)]
pub struct Artifact {
    /// File stem, e.g. `audit`.
    pub stem: String,
    pub body: Body,
    /// One line per sub-result, printed after the files are written.
    pub summary: Vec<String>,
}

#[derive(Debug, Clone)]
pub enum Body {
    Table { table: Table, formats: Vec<Format> },
    Text { extension: String, text: String },
}

/// Hex SHA-256 of the config file bytes.
pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn io(path: &Path, e: std::io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

/// Writes every artifact to a temporary name first and renames afterwards,
/// so a failed run leaves no report behind.
pub(crate) fn write_all(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, Failure> {
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    for a in artifacts {
        match &a.body {
            Body::Table { table, formats } => {
                for f in formats {
                    files.push((dir.join(format!("{}.{}", a.stem, f.extension())), table.render(*f)));
                }
            }
            Body::Text { extension, text } => {
                files.push((dir.join(format!("{}.{extension}", a.stem)), text.clone()));
            }
        }
    }
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut staged = Vec::with_capacity(files.len());
    for (path, text) in &files {
        let mut tmp = path.clone().into_os_string();
        tmp.push(".partial");
        let tmp = PathBuf::from(tmp);
        if let Err(e) = std::fs::write(&tmp, text) {
            for t in &staged {
                let _ = std::fs::remove_file(t);
            }
            let _ = std::fs::remove_file(&tmp);
            return Err(io(&tmp, e));
        }
        staged.push(tmp);
    }
    for ((path, _), tmp) in files.iter().zip(&staged) {
        std::fs::rename(tmp, path).map_err(|e| io(path, e))?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}
