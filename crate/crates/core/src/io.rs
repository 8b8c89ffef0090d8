//! File-level helpers: atomic writes, JSON artifacts and dataset loading.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::cmos::SimulatorConfig;
use crate::error::{Error, Result};
use crate::rf::{
    parse_touchstone, read_dataset_csv, write_dataset_csv, CsvOptions, LabeledDataset, RfError, TraceMeta,
    DEFAULT_Z_REF,
};

/// Writes `bytes` to a temporary file next to `path`, then renames it over
/// `path`, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact types serialize");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json_string(value).as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: path.to_path_buf(), source })
}

/// Reads a JSON configuration file; parse failures are configuration errors.
pub fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Companion file of a dataset CSV carrying what the CSV cannot: the
/// reference impedance, the class roster and, for simulated corpora, the
/// resolved simulator configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSidecar {
    pub z_ref: f64,
    pub classes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulator: Option<SimulatorConfig>,
}

pub fn sidecar_path(csv: &Path) -> std::path::PathBuf {
    csv.with_extension("json")
}

/// Writes `dataset` as CSV plus its sidecar JSON.
pub fn save_dataset(path: &Path, dataset: &LabeledDataset, simulator: Option<&SimulatorConfig>) -> Result<()> {
    let z_ref = dataset.traces().first().map_or(DEFAULT_Z_REF, |t| t.z_ref());
    if dataset.traces().iter().any(|t| t.z_ref() != z_ref) {
        return Err(Error::Config("dataset CSV needs one reference impedance for all traces".into()));
    }
    write_atomic(path, write_dataset_csv(dataset)?.as_bytes())?;
    let sidecar = DatasetSidecar { z_ref, classes: dataset.classes().to_vec(), simulator: simulator.cloned() };
    write_json(&sidecar_path(path), &sidecar)
}

/// Loads a dataset from
///
/// * a directory holding `manifest.csv` (`file,label` rows) and the listed
///   one-port Touchstone files,
/// * a single Touchstone file (one unlabeled trace), or
/// * a dataset CSV, with `z_ref` and roster taken from the sidecar JSON when
///   one exists.
pub fn load_dataset(path: &Path) -> Result<LabeledDataset> {
    if path.is_dir() {
        return load_manifest_dir(path);
    }
    let is_touchstone = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("s1p"));
    if is_touchstone {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let trace = parse_touchstone(&bytes)?.with_meta(TraceMeta { source: path.display().to_string(), seed: None });
        return Ok(LabeledDataset::new(vec![trace], Vec::new())?);
    }
    let text = read_text(path)?;
    let side = sidecar_path(path);
    let opts = if side.is_file() {
        let s: DatasetSidecar = read_json(&side)?;
        CsvOptions { z_ref: s.z_ref, classes: Some(s.classes), ..Default::default() }
    } else {
        CsvOptions::default()
    };
    Ok(read_dataset_csv(&text, &opts)?)
}

fn load_manifest_dir(dir: &Path) -> Result<LabeledDataset> {
    let manifest = dir.join("manifest.csv");
    let text = read_text(&manifest)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim().replace(' ', "") == "file,label" => {}
        _ => {
            return Err(RfError::MalformedCsv { line: 1, msg: "manifest header must be `file,label`".into() }.into())
        }
    }
    let mut traces = Vec::new();
    for (i, line) in lines {
        let (file, label) = line
            .split_once(',')
            .ok_or_else(|| RfError::MalformedCsv { line: i + 1, msg: "expected `file,label`".into() })?;
        let p = dir.join(file.trim());
        let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
        let mut t = parse_touchstone(&bytes)?.with_meta(TraceMeta { source: file.trim().to_string(), seed: None });
        if !label.trim().is_empty() {
            t = t.with_label(label.trim());
        }
        traces.push(t);
    }
    if traces.is_empty() {
        return Err(RfError::MalformedCsv { line: 2, msg: "manifest lists no files".into() }.into());
    }
    Ok(LabeledDataset::from_traces(traces)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rf::SweepTrace;
    use num_complex::Complex64;

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn csv_and_sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid: std::sync::Arc<[f64]> = vec![1e6, 2e6].into();
        let t = |g: f64, l: &str| {
            SweepTrace::new(grid.clone(), vec![Complex64::new(g, 0.1); 2], 75.0, false).unwrap().with_label(l)
        };
        let ds = LabeledDataset::new(vec![t(0.2, "b"), t(0.3, "a")], vec!["a".into(), "b".into()]).unwrap();
        let p = dir.path().join("d.csv");
        save_dataset(&p, &ds, None).unwrap();
        let back = load_dataset(&p).unwrap();
        assert_eq!(back.classes(), ds.classes());
        assert_eq!(back.traces()[0].z_ref(), 75.0);
        assert_eq!(back.traces()[1].gamma(), ds.traces()[1].gamma());
    }

    #[test]
    fn manifest_directory() {
        let dir = tempfile::tempdir().unwrap();
        let s1p = "# Hz S RI R 50\n1000 0.1 0.0\n2000 0.2 -0.1\n";
        fs::write(dir.path().join("x.s1p"), s1p).unwrap();
        fs::write(dir.path().join("y.s1p"), s1p).unwrap();
        fs::write(dir.path().join("manifest.csv"), "file,label\nx.s1p,idle\ny.s1p,aes\n").unwrap();
        let ds = load_dataset(dir.path()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.classes(), ["idle", "aes"]);
        assert_eq!(ds.grid(), [1000.0, 2000.0]);
        let single = load_dataset(&dir.path().join("x.s1p")).unwrap();
        assert_eq!(single.len(), 1);
        assert!(single.traces()[0].label.is_none());
    }

    #[test]
    fn missing_file_is_io() {
        let e = load_dataset(Path::new("/nonexistent/zz.csv")).unwrap_err();
        assert_eq!(e.exit_code(), crate::error::EXIT_IO);
    }
}
