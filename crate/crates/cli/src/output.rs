use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::TempDir;

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// Files are written into a hidden staging directory next to the output
/// directory and only moved into place by [`Staging::commit`]; dropping an
/// uncommitted staging area deletes it.
pub struct Staging {
    dir: TempDir,
    target: PathBuf,
    files: Vec<String>,
}

impl Staging {
    pub fn new(target: &Path) -> CliResult<Self> {
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        std::fs::create_dir_all(&parent)
            .map_err(|e| CliError::data(format!("cannot create {}: {e}", parent.display())))?;
        let dir = tempfile::Builder::new()
            .prefix(".decorr-staging-")
            .tempdir_in(&parent)
            .map_err(|e| CliError::data(format!("cannot stage outputs in {}: {e}", parent.display())))?;
        Ok(Self {
            dir,
            target: target.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.path().join(name)
    }

    pub fn writer(&mut self, name: &str) -> CliResult<BufWriter<File>> {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| CliError::data(format!("cannot write {name}: {e}")))?;
        Ok(BufWriter::new(file))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut w = self.writer(name)?;
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::data(format!("cannot encode {name}: {e}")))?;
        writeln!(w)
            .and_then(|_| w.flush())
            .map_err(|e| CliError::data(format!("cannot write {name}: {e}")))
    }

    /// Writes already-encoded text verbatim.
    pub fn json_raw(&mut self, name: &str, text: &str) -> CliResult<()> {
        let mut w = self.writer(name)?;
        w.write_all(text.as_bytes())
            .and_then(|_| if text.ends_with('\n') { Ok(()) } else { writeln!(w) })
            .and_then(|_| w.flush())
            .map_err(|e| CliError::data(format!("cannot write {name}: {e}")))
    }

    /// Moves every staged file into the output directory, returning their final paths.
    pub fn commit(self) -> CliResult<Vec<PathBuf>> {
        std::fs::create_dir_all(&self.target)
            .map_err(|e| CliError::data(format!("cannot create {}: {e}", self.target.display())))?;
        let mut done = Vec::with_capacity(self.files.len());
        for name in &self.files {
            let to = self.target.join(name);
            std::fs::rename(self.dir.path().join(name), &to)
                .map_err(|e| CliError::data(format!("cannot move {name} into {}: {e}", self.target.display())))?;
            done.push(to);
        }
        Ok(done)
    }
}
