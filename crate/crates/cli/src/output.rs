use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use regms_core::dataset::format_float;
use serde::Serialize;

pub fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    use std::io::Write;
    writeln!(w)?;
    w.flush()?;
    Ok(path)
}

/// CSV writer with a header; floats use round-trip formatting.
pub struct Table {
    path: PathBuf,
    wtr: csv::Writer<BufWriter<File>>,
}

impl Table {
    pub fn create(dir: &Path, name: &str, header: &[String]) -> Result<Self> {
        let path = dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut wtr = csv::Writer::from_writer(BufWriter::new(file));
        wtr.write_record(header)?;
        Ok(Self { path, wtr })
    }

    pub fn row(&mut self, cells: Vec<String>) -> Result<()> {
        self.wtr.write_record(&cells)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        self.wtr.flush()?;
        Ok(self.path)
    }
}

pub fn coord_header(prefix: &[&str], d: usize, suffix: &[&str]) -> Vec<String> {
    prefix
        .iter()
        .map(|s| s.to_string())
        .chain((1..=d).map(|c| format!("x{c}")))
        .chain(suffix.iter().map(|s| s.to_string()))
        .collect()
}

pub fn floats(v: &[f64]) -> impl Iterator<Item = String> + '_ {
    v.iter().map(|x| format_float(*x))
}
