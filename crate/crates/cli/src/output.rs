//! Output directory: CSV files with a one-line header, a TOML manifest
//! listing every file written, and `error.json` on failure.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

pub struct OutputDir {
    root: PathBuf,
    files: Vec<ManifestFile>,
    notes: toml::Table,
}

#[derive(Debug, Clone, Serialize)]
struct ManifestFile {
    name: String,
    rows: usize,
    columns: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    experiment: &'a str,
    status: &'a str,
    seeds: SeedRule,
    notes: &'a toml::Table,
    files: &'a [ManifestFile],
    config: &'a ExperimentConfig,
}

#[derive(Serialize)]
struct SeedRule {
    base: u64,
    paths: usize,
    rule: &'static str,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> CliResult<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        let stale = root.join("error.json");
        if stale.exists() {
            fs::remove_file(&stale).map_err(io_err(&stale))?;
        }
        Ok(Self { root, files: Vec::new(), notes: toml::Table::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|f| f.name.as_str())
    }

    pub fn write_csv<R, I>(&mut self, name: &str, header: &[&str], rows: I) -> CliResult<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = Cell>,
    {
        let path = self.root.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
        w.write_record(header).map_err(|e| csv_err(&path, e))?;
        let mut count = 0;
        for row in rows {
            let cells: Vec<String> = row.into_iter().map(|c| c.to_string()).collect();
            w.write_record(&cells).map_err(|e| csv_err(&path, e))?;
            count += 1;
        }
        w.flush().map_err(io_err(&path))?;
        self.files.retain(|f| f.name != name);
        self.files.push(ManifestFile {
            name: name.to_string(),
            rows: count,
            columns: header.iter().map(|s| s.to_string()).collect(),
        });
        Ok(())
    }

    /// `metric, value` report.
    pub fn write_report(&mut self, name: &str, rows: &[(&str, Cell)]) -> CliResult<()> {
        self.write_csv(name, &["metric", "value"], rows.iter().map(|(k, v)| [Cell::Text(k.to_string()), v.clone()]))
    }

    /// Free-form key/value recorded in the manifest.
    pub fn note(&mut self, key: impl Into<String>, value: impl Into<toml::Value>) {
        self.notes.insert(key.into(), value.into());
    }

    pub fn write_manifest(&self, experiment: &str, status: &str, cfg: &ExperimentConfig) -> CliResult<()> {
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            experiment,
            status,
            seeds: SeedRule {
                base: cfg.ensemble.seed,
                paths: cfg.ensemble.n_paths,
                rule: "path i uses seed + i; Wiener driver 0 feeds the delay equation, driver 1 the amplitude equation, driver 2 the initial amplitude",
            },
            notes: &self.notes,
            files: &self.files,
            config: cfg,
        };
        let text = toml::to_string(&manifest).map_err(|e| CliError::Config(e.to_string()))?;
        let path = self.root.join("manifest.toml");
        fs::write(&path, text).map_err(io_err(&path))
    }

    pub fn write_error(&self, err: &CliError) -> CliResult<()> {
        let path = self.root.join("error.json");
        let text = serde_json::to_string_pretty(&err.record()).expect("record is serializable");
        fs::write(&path, text + "\n").map_err(io_err(&path))
    }
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::Io { path: path.to_path_buf(), source: e.into() }
}

/// One CSV field. Floats print in shortest round-trip form.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    B(bool),
    Text(String),
    Empty,
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::F(x) => write!(f, "{x}"),
            Cell::U(x) => write!(f, "{x}"),
            Cell::B(x) => write!(f, "{x}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Empty => Ok(()),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::U(x as u64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::U(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::B(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::F)
    }
}
