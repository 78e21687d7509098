//! Artifact writing: CSV with fixed 17-significant-digit floats and JSON
//! with run metadata. Identical configs must produce byte-identical CSV
//! bodies, so every float goes through one formatter and row order follows
//! the grid.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::{Format, RunConfig};

/// 17 significant decimal digits: enough to reproduce any f64 bit pattern.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub struct ArtifactWriter<'a> {
    pub dir: PathBuf,
    pub cfg: &'a RunConfig,
    pub command: &'static str,
    pub wall_start: std::time::Instant,
    pub written: Vec<PathBuf>,
}

impl<'a> ArtifactWriter<'a> {
    pub fn new(dir: &Path, cfg: &'a RunConfig, command: &'static str) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(ArtifactWriter {
            dir: dir.to_path_buf(),
            cfg,
            command,
            wall_start: std::time::Instant::now(),
            written: Vec::new(),
        })
    }

    pub fn wants(&self, format: Format) -> bool {
        self.cfg.formats.contains(&format)
    }

    pub fn write_csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> std::io::Result<()> {
        if !self.wants(Format::Csv) {
            return Ok(());
        }
        let path = self.dir.join(name);
        let mut f = fs::File::create(&path)?;
        writeln!(f, "{}", header.join(","))?;
        for row in rows {
            writeln!(f, "{}", row.join(","))?;
        }
        self.written.push(path);
        Ok(())
    }

    /// Wraps `results` with the config echo, version and wall time.
    pub fn write_json(&mut self, name: &str, results: serde_json::Value) -> std::io::Result<()> {
        if !self.wants(Format::Json) {
            return Ok(());
        }
        let path = self.dir.join(name);
        let body = serde_json::json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "wall_time_s": self.wall_start.elapsed().as_secs_f64(),
            "config": self.cfg.echo(),
            "results": results,
        });
        fs::write(&path, serde_json::to_string_pretty(&body)?)?;
        self.written.push(path);
        Ok(())
    }
}
