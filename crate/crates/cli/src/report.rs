//! Artifacts, pass/fail checks and the manifest.

use ebl_core::io::{fmt, write_csv, FlatField};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    /// Human-readable threshold, e.g. `<= 1e-10` or `in [1.2, 1.8]`.
    pub threshold: String,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, measured: f64, limit: f64) -> Check {
        Check { name: name.into(), measured, threshold: format!("<= {}", fmt(limit)), pass: measured <= limit }
    }

    pub fn below(name: &str, measured: f64, limit: f64) -> Check {
        Check { name: name.into(), measured, threshold: format!("< {}", fmt(limit)), pass: measured < limit }
    }

    pub fn at_least(name: &str, measured: f64, limit: f64) -> Check {
        Check { name: name.into(), measured, threshold: format!(">= {}", fmt(limit)), pass: measured >= limit }
    }

    pub fn within(name: &str, measured: f64, lo: f64, hi: f64) -> Check {
        Check { name: name.into(), measured, threshold: format!("in [{}, {}]", fmt(lo), fmt(hi)), pass: measured >= lo && measured <= hi }
    }

    pub fn flag(name: &str, ok: bool) -> Check {
        Check { name: name.into(), measured: if ok { 1.0 } else { 0.0 }, threshold: "= 1".into(), pass: ok }
    }
}

/// Output directory plus everything written so far.
pub struct Run {
    pub dir: PathBuf,
    artifacts: Vec<(String, String)>,
    pub checks: Vec<Check>,
}

impl Run {
    pub fn new(dir: &Path) -> std::io::Result<Run> {
        std::fs::create_dir_all(dir)?;
        Ok(Run { dir: dir.to_path_buf(), artifacts: Vec::new(), checks: Vec::new() })
    }

    pub fn csv(&mut self, name: &str, description: &str, header: &[&str], rows: &[Vec<String>]) -> ebl_core::Result<()> {
        write_csv(&self.dir.join(name), header, rows)?;
        self.artifacts.push((name.into(), description.into()));
        Ok(())
    }

    pub fn field(&mut self, name: &str, description: &str, f: &FlatField) -> ebl_core::Result<()> {
        f.write(&self.dir.join(name))?;
        self.artifacts.push((name.into(), description.into()));
        Ok(())
    }

    pub fn text(&mut self, name: &str, description: &str, body: &str) -> ebl_core::Result<()> {
        std::fs::write(self.dir.join(name), body)?;
        self.artifacts.push((name.into(), description.into()));
        Ok(())
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// `path<TAB>sha256<TAB>description` per artifact, then one `check:<name>` line per check
    /// with `-` in the hash column.
    pub fn write_manifest(&self) -> ebl_core::Result<PathBuf> {
        let mut out = String::new();
        for (name, desc) in &self.artifacts {
            let bytes = std::fs::read(self.dir.join(name))?;
            let hash = Sha256::digest(&bytes);
            let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
            out.push_str(&format!("{name}\t{hex}\t{desc}\n"));
        }
        for c in &self.checks {
            let status = if c.pass { "PASS" } else { "FAIL" };
            out.push_str(&format!("check:{}\t-\t{status} measured={} threshold={}\n", c.name, fmt(c.measured), c.threshold));
        }
        let path = self.dir.join("manifest.tsv");
        std::fs::write(&path, out)?;
        Ok(path)
    }
}
