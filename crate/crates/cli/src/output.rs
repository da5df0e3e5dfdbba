//! Line-oriented report and CSV writers.
//!
//! Reports are `key=value` lines; every floating-point number carries at
//! least ten significant digits. CSVs use `.` decimals and LF endings, no
//! locale handling anywhere.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub struct OutDir {
    dir: PathBuf,
}

impl OutDir {
    pub fn create(dir: &str) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(OutDir { dir: PathBuf::from(dir) })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn writer(&self, name: &str) -> std::io::Result<BufWriter<fs::File>> {
        Ok(BufWriter::new(fs::File::create(self.path(name))?))
    }
}

/// 13 significant digits in scientific notation.
pub fn num(v: f64) -> String {
    format!("{v:.12e}")
}

pub struct Report {
    lines: Vec<String>,
}

impl Report {
    pub fn new() -> Self {
        Report { lines: Vec::new() }
    }

    pub fn kv_str(&mut self, key: &str, value: &str) -> &mut Self {
        self.lines.push(format!("{key}={value}"));
        self
    }

    pub fn kv(&mut self, key: &str, value: f64) -> &mut Self {
        self.kv_str(key, &num(value))
    }

    pub fn kv_int(&mut self, key: &str, value: i64) -> &mut Self {
        self.kv_str(key, &value.to_string())
    }

    pub fn write(&self, dir: &OutDir, name: &str) -> std::io::Result<()> {
        let mut w = dir.writer(name)?;
        for line in &self.lines {
            writeln!(w, "{line}")?;
        }
        w.flush()
    }
}

pub fn write_csv<P: AsRef<Path>>(
    path: P,
    header: &str,
    rows: impl Iterator<Item = Vec<String>>,
) -> std::io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()
}
