//! Output staging: tracks every file written so a failed run leaves no
//! partial results behind.

use anyhow::{Context, Result};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub struct OutputWriter {
    root: PathBuf,
    written: Vec<PathBuf>,
    timestamp: Option<String>,
}

impl OutputWriter {
    /// `with_timestamp = false` suppresses the timestamped header line on
    /// CSVs (and the stamp in the report), making reruns byte-identical.
    pub fn new(root: &Path, with_timestamp: bool) -> Result<Self> {
        fs::create_dir_all(root.join("data"))
            .with_context(|| format!("creating output directory {}", root.display()))?;
        let timestamp = if with_timestamp {
            let now = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            Some(format!("# generated unix-epoch {now}\n"))
        } else {
            None
        };
        Ok(OutputWriter {
            root: root.to_path_buf(),
            written: Vec::new(),
            timestamp,
        })
    }

    pub fn write_csv(&mut self, rel: &str, body: &str) -> Result<()> {
        let mut content = String::new();
        if let Some(ts) = &self.timestamp {
            content.push_str(ts);
        }
        content.push_str(body);
        self.write_raw(rel, &content)
    }

    pub fn write_raw(&mut self, rel: &str, content: &str) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    pub fn stamp(&self) -> Option<&str> {
        self.timestamp.as_deref()
    }

    /// Remove everything written so far (failure path).
    pub fn discard(self) {
        for path in self.written.iter().rev() {
            let _ = fs::remove_file(path);
        }
        let _ = fs::remove_dir(self.root.join("data"));
        let _ = fs::remove_dir(&self.root);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discard_removes_partial_outputs() {
        let dir = std::env::temp_dir().join(format!("loglaw-out-test-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        let mut w = OutputWriter::new(&dir, false).unwrap();
        w.write_csv("data/a.csv", "x\n1\n").unwrap();
        w.write_raw("report.txt", "hello").unwrap();
        assert!(dir.join("data/a.csv").exists());
        w.discard();
        assert!(!dir.join("data/a.csv").exists());
        assert!(!dir.exists());
    }

    #[test]
    fn timestamp_header_is_optional() {
        let dir = std::env::temp_dir().join(format!("loglaw-ts-test-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        let mut w = OutputWriter::new(&dir, true).unwrap();
        w.write_csv("data/a.csv", "x\n").unwrap();
        let content = fs::read_to_string(dir.join("data/a.csv")).unwrap();
        assert!(content.starts_with("# generated unix-epoch "));
        fs::remove_dir_all(&dir).unwrap();
    }
}
