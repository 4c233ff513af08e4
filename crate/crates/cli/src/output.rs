use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::Serialize;
use smectic_core::field_io::{data_path_for, encode_field};
use smectic_core::TorusField;
use tempfile::NamedTempFile;

use crate::config::RunConfig;

/// Single writer for one run's output directory.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
    phases: Vec<Phase>,
    started: Instant,
    started_unix: f64,
}

#[derive(Debug, Serialize)]
struct Phase {
    name: String,
    seconds: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a RunConfig,
    versions: Versions,
    threads: usize,
    outputs: &'a [String],
    exit_code: i32,
    started_unix: f64,
    wall_seconds: f64,
    phases: &'a [Phase],
}

#[derive(Serialize)]
struct Versions {
    smectic_cli: &'static str,
    smectic_core: &'static str,
}

impl OutputDir {
    pub fn create(root: &Path) -> anyhow::Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("creating output directory {}", root.display()))?;
        let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
        Ok(Self { root: root.to_path_buf(), written: Vec::new(), phases: Vec::new(), started: Instant::now(), started_unix })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Writes through a temporary file in the same directory, then renames.
    pub fn write_with(&mut self, name: &str, f: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>) -> anyhow::Result<()> {
        let mut tmp = NamedTempFile::new_in(&self.root).with_context(|| format!("creating temporary file in {}", self.root.display()))?;
        {
            let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
            f(&mut buf)?;
            buf.flush()?;
        }
        tmp.as_file().sync_all()?;
        let target = self.path(name);
        tmp.persist(&target).with_context(|| format!("renaming into {}", target.display()))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> anyhow::Result<()> {
        self.write_with(name, |w| Ok(w.write_all(bytes)?))
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            Ok(w.write_all(b"\n")?)
        })
    }

    pub fn write_csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> anyhow::Result<()> {
        self.write_with(name, |w| {
            let mut wtr = csv::Writer::from_writer(w);
            for r in rows {
                wtr.serialize(r)?;
            }
            Ok(wtr.flush()?)
        })
    }

    /// Header `name` plus its sibling sample block.
    pub fn write_field(&mut self, name: &str, field: &TorusField) -> anyhow::Result<()> {
        let data = data_path_for(Path::new(name));
        let data_name = data.to_str().expect("utf-8 name").to_string();
        let (header, bytes) = encode_field(field, &data_name)?;
        self.write_bytes(&data_name, &bytes)?;
        self.write_bytes(name, header.as_bytes())
    }

    pub fn timed<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.phases.push(Phase { name: name.into(), seconds: t.elapsed().as_secs_f64() });
        out
    }

    pub fn finish(mut self, config: &RunConfig, exit_code: i32) -> anyhow::Result<()> {
        let wall_seconds = self.started.elapsed().as_secs_f64();
        let phases = std::mem::take(&mut self.phases);
        let outputs = self.written.clone();
        let manifest = Manifest {
            config,
            versions: Versions { smectic_cli: env!("CARGO_PKG_VERSION"), smectic_core: smectic_core::VERSION },
            threads: rayon::current_num_threads(),
            outputs: &outputs,
            exit_code,
            started_unix: self.started_unix,
            wall_seconds,
            phases: &phases,
        };
        self.write_json("manifest.json", &manifest)
    }
}
