use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;

use super::{check_grid, RfError, SweepTrace, TraceMeta, DEFAULT_Z_REF};

/// Traces sharing one frequency grid, each tagged with a class from an
/// ordered roster.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    grid: Arc<[f64]>,
    traces: Vec<SweepTrace>,
    classes: Vec<String>,
}

fn same_grid(a: &Arc<[f64]>, b: &Arc<[f64]>) -> bool {
    Arc::ptr_eq(a, b)
        || (a.len() == b.len() && a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()))
}

impl LabeledDataset {
    /// Checks that all traces share a bitwise-identical grid and carry a label
    /// from `classes` (unlabeled traces are allowed).
    pub fn new(traces: Vec<SweepTrace>, classes: Vec<String>) -> Result<Self, RfError> {
        let first = traces.first().ok_or(RfError::TooFewPoints { min: 1, got: 0 })?;
        let grid = first.grid().clone();
        let mut traces = traces;
        for (i, t) in traces.iter_mut().enumerate() {
            if !same_grid(&grid, t.grid()) {
                return Err(RfError::GridMismatch { trace: i });
            }
            // share one allocation
            t.frequencies = grid.clone();
            if let Some(label) = &t.label {
                if !classes.iter().any(|c| c == label) {
                    return Err(RfError::UnknownLabel(label.clone()));
                }
            }
        }
        Ok(Self { grid, traces, classes })
    }

    /// Like [`LabeledDataset::new`] with the class roster taken from the
    /// labels in order of first appearance.
    pub fn from_traces(traces: Vec<SweepTrace>) -> Result<Self, RfError> {
        let mut classes: Vec<String> = Vec::new();
        for t in &traces {
            if let Some(l) = &t.label {
                if !classes.contains(l) {
                    classes.push(l.clone());
                }
            }
        }
        Self::new(traces, classes)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn traces(&self) -> &[SweepTrace] {
        &self.traces
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == name)
    }

    /// Class index of every trace; fails on the first unlabeled trace.
    pub fn label_indices(&self) -> Result<Vec<usize>, RfError> {
        self.traces
            .iter()
            .map(|t| {
                let l = t.label.as_deref().ok_or_else(|| RfError::UnknownLabel(String::new()))?;
                self.class_index(l).ok_or_else(|| RfError::UnknownLabel(l.to_string()))
            })
            .collect()
    }

    /// Observations per class, in roster order.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for t in &self.traces {
            if let Some(i) = t.label.as_deref().and_then(|l| self.class_index(l)) {
                counts[i] += 1;
            }
        }
        counts
    }

    /// Copy with every label removed; the roster is kept.
    pub fn without_labels(&self) -> Self {
        let mut out = self.clone();
        for t in &mut out.traces {
            t.label = None;
        }
        out
    }

    /// Copy with the class roster replaced; labels must still resolve.
    pub fn with_classes(self, classes: Vec<String>) -> Result<Self, RfError> {
        Self::new(self.traces, classes)
    }
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    /// Reference impedance applied to every row (the CSV does not carry it).
    pub z_ref: f64,
    /// Expected roster; labels outside it are rejected. When absent the
    /// roster is built from the labels in order of first appearance.
    pub classes: Option<Vec<String>>,
    pub passive: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self { z_ref: DEFAULT_Z_REF, classes: None, passive: false }
    }
}

/// Parses the dataset CSV layout:
///
/// ```text
/// label,f_0,f_1,...,f_{m-1}
/// <class>,<re>:<im>,<re>:<im>,...
/// ```
///
/// An empty label cell yields an unlabeled trace.
pub fn read_dataset_csv(text: &str, opts: &CsvOptions) -> Result<LabeledDataset, RfError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| RfError::MalformedCsv { line: 1, msg: "empty input".into() })?;
    let mut cells = header.split(',');
    if cells.next().map(str::trim) != Some("label") {
        return Err(RfError::MalformedCsv { line: 1, msg: "first header cell must be `label`".into() });
    }
    let grid: Vec<f64> = cells
        .map(|c| {
            c.trim().parse::<f64>().map_err(|_| RfError::InvalidNumber { line: 1, token: c.to_string() })
        })
        .collect::<Result<_, _>>()?;
    if grid.is_empty() {
        return Err(RfError::TooFewPoints { min: 1, got: 0 });
    }
    check_grid(&grid).map_err(|_| RfError::NonMonotoneFrequencies { line: 1 })?;
    let grid: Arc<[f64]> = grid.into();

    let mut traces = Vec::new();
    for (row, (i, line)) in lines.enumerate() {
        let line_no = i + 1;
        let mut cells = line.split(',');
        let label = cells.next().unwrap_or("").trim();
        let mut gamma = Vec::with_capacity(grid.len());
        for cell in cells {
            gamma.push(parse_complex(cell, line_no)?);
        }
        if gamma.len() != grid.len() {
            return Err(RfError::GridMismatch { trace: row });
        }
        let mut trace = SweepTrace::new(grid.clone(), gamma, opts.z_ref, opts.passive)?
            .with_meta(TraceMeta { source: format!("csv:{row}"), seed: None });
        if !label.is_empty() {
            if let Some(classes) = &opts.classes {
                if !classes.iter().any(|c| c == label) {
                    return Err(RfError::UnknownLabel(label.to_string()));
                }
            }
            trace = trace.with_label(label);
        }
        traces.push(trace);
    }
    if traces.is_empty() {
        return Err(RfError::MalformedCsv { line: 2, msg: "no data rows".into() });
    }
    match &opts.classes {
        Some(classes) => LabeledDataset::new(traces, classes.clone()),
        None => LabeledDataset::from_traces(traces),
    }
}

fn parse_complex(cell: &str, line: usize) -> Result<Complex64, RfError> {
    let bad = || RfError::InvalidNumber { line, token: cell.to_string() };
    let (re, im) = cell.trim().split_once(':').ok_or_else(bad)?;
    let re: f64 = re.parse().map_err(|_| bad())?;
    let im: f64 = im.parse().map_err(|_| bad())?;
    Ok(Complex64::new(re, im))
}

/// Serializes a dataset with shortest round-trip decimal formatting.
pub fn write_dataset_csv(dataset: &LabeledDataset) -> Result<String, RfError> {
    let mut out = String::with_capacity(dataset.len() * dataset.grid().len() * 40 + 64);
    out.push_str("label");
    for f in dataset.grid() {
        write!(out, ",{f}").expect("writing to String");
    }
    out.push('\n');
    for t in dataset.traces() {
        let label = t.label.as_deref().unwrap_or("");
        if label.contains([',', '\n', '\r']) {
            return Err(RfError::UnknownLabel(label.to_string()));
        }
        out.push_str(label);
        for g in t.gamma() {
            write!(out, ",{}:{}", g.re, g.im).expect("writing to String");
        }
        out.push('\n');
    }
    Ok(out)
}
