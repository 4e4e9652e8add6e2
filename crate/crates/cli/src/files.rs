//! File helpers that attach the offending path to errors.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use gtf_core::graph::Graph;
use gtf_core::{io, GtfError};
use serde::Serialize;

use crate::error::{CliError, CliResult};

fn at(path: &Path) -> impl FnOnce(GtfError) -> CliError + '_ {
    move |source| CliError::File { path: path.to_path_buf(), source }
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| at(path)(e.into()))
}

pub fn read_graph(path: &Path) -> CliResult<Graph> {
    Graph::read_edge_list(open(path)?).map_err(at(path))
}

pub fn read_signal(path: &Path, n: usize) -> CliResult<Vec<f64>> {
    io::read_signal(open(path)?, Some(n)).map_err(at(path))
}

pub fn read_labels(path: &Path, n: usize) -> CliResult<Vec<(usize, usize)>> {
    io::read_labels(open(path)?, n).map_err(at(path))
}

pub fn read_features(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    io::read_features(open(path)?).map_err(at(path))
}

/// Writes through a buffer, creating parent directories as needed.
pub fn write_with<F>(path: &Path, f: F) -> CliResult<()>
where
    F: FnOnce(&mut BufWriter<File>) -> gtf_core::Result<()>,
{
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| at(path)(e.into()))?;
    }
    let file = File::create(path).map_err(|e| at(path)(e.into()))?;
    let mut w = BufWriter::new(file);
    f(&mut w).map_err(at(path))?;
    w.flush().map_err(|e| at(path)(e.into()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    write_with(path, |w| io::write_json(w, value))
}

/// Metadata sidecar next to `output`: same stem, `.json` extension.
pub fn sidecar(output: &Path) -> PathBuf {
    output.with_extension("json")
}
