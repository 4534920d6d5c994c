//! Run directory layout:
//!
//! ```text
//! <run>/spec.txt        key = value run parameters
//! <run>/checkpoints/    model checkpoints
//! <run>/metrics.tsv     one line per optimizer step
//! <run>/summary.txt     written last; its presence marks a completed run
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunDirError {
    #[error("run directory {0} already holds a completed run (use --force to overwrite)")]
    Completed(PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub const SPEC: &'static str = "spec.txt";
    pub const METRICS: &'static str = "metrics.tsv";
    pub const SUMMARY: &'static str = "summary.txt";
    pub const CHECKPOINTS: &'static str = "checkpoints";

    /// Create (or reuse) `root`. A directory with a summary is only reused
    /// when `force` is set, in which case it is cleared first.
    pub fn create(root: &Path, force: bool) -> Result<RunDir, RunDirError> {
        if root.join(Self::SUMMARY).exists() {
            if !force {
                return Err(RunDirError::Completed(root.to_path_buf()));
            }
            fs::remove_dir_all(root)?;
        }
        fs::create_dir_all(root.join(Self::CHECKPOINTS))?;
        Ok(RunDir { root: root.to_path_buf() })
    }

    pub fn open(root: &Path) -> RunDir {
        RunDir { root: root.to_path_buf() }
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn join(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn checkpoint_path(&self, name: &str) -> PathBuf {
        self.root.join(Self::CHECKPOINTS).join(name)
    }

    pub fn is_complete(&self) -> bool {
        self.root.join(Self::SUMMARY).exists()
    }

    pub fn write_spec(&self, pairs: &[(&str, String)]) -> Result<(), RunDirError> {
        fs::write(self.join(Self::SPEC), key_values(pairs))?;
        Ok(())
    }

    pub fn write_metrics(&self, header: &[&str], rows: &[Vec<String>]) -> Result<(), RunDirError> {
        let mut s = header.join("\t");
        s.push('\n');
        for r in rows {
            s.push_str(&r.join("\t"));
            s.push('\n');
        }
        fs::write(self.join(Self::METRICS), s)?;
        Ok(())
    }

    pub fn write_summary(&self, pairs: &[(&str, String)]) -> Result<(), RunDirError> {
        fs::write(self.join(Self::SUMMARY), key_values(pairs))?;
        Ok(())
    }
}

pub fn key_values(pairs: &[(&str, String)]) -> String {
    let mut s = String::new();
    for (k, v) in pairs {
        let _ = writeln!(s, "{k} = {v}");
    }
    s
}
