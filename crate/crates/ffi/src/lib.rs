//! C ABI for zscan.
//!
//! Every fallible function returns a [`ZscanStatus`]. On failure the message
//! is kept per thread and read with [`zscan_last_error`]. Handles are opaque
//! and must be released with their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use zscan::classify::{ClassifyError, TrainedClassifier};
use zscan::cmos::{synthesize_dataset, SimulatorConfig};
use zscan::rf::{
    impedance_to_reflection, read_dataset_csv, reflection_to_impedance, CsvOptions, Impedance, LabeledDataset,
    ReflectionCoefficient,
};
use zscan::Error;

/// Status codes. Values 2 to 4 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZscanStatus {
    Ok = 0,
    /// Null pointer, invalid UTF-8 or an undersized output buffer.
    InvalidArgument = 1,
    /// Invalid data or configuration.
    Config = 2,
    Io = 3,
    NonConvergence = 4,
    /// A panic was caught at the boundary.
    Internal = 5,
}

/// Opaque labeled dataset.
pub struct ZscanDataset {
    inner: LabeledDataset,
}

/// Opaque trained classifier bundle.
pub struct ZscanModel {
    inner: TrainedClassifier,
    class_names: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

struct Failure(ZscanStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } | Error::Json { .. } => ZscanStatus::Io,
            Error::Classify(ClassifyError::NonConvergence { .. }) => ZscanStatus::NonConvergence,
            _ => ZscanStatus::Config,
        };
        Failure(status, e.to_string())
    }
}

impl From<zscan::rf::RfError> for Failure {
    fn from(e: zscan::rf::RfError) -> Self {
        Error::from(e).into()
    }
}

fn invalid(msg: &str) -> Failure {
    Failure(ZscanStatus::InvalidArgument, msg.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ZscanStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ZscanStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ZscanStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(invalid(&format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(&format!("{name} is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| invalid(&format!("{name} is null")))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn zscan_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn zscan_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Converts a reflection coefficient to impedance.
///
/// # Safety
/// `out_re` and `out_im` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn zscan_reflection_to_impedance(
    tau_re: f64,
    tau_im: f64,
    z_ref: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> ZscanStatus {
    guard(|| {
        let (re, im) = (out_arg(out_re, "out_re")?, out_arg(out_im, "out_im")?);
        let z = reflection_to_impedance(ReflectionCoefficient::new(tau_re, tau_im)?, z_ref)?;
        (*re, *im) = (z.0.re, z.0.im);
        Ok(())
    })
}

/// Converts an impedance to a reflection coefficient.
///
/// # Safety
/// `out_re` and `out_im` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn zscan_impedance_to_reflection(
    z_re: f64,
    z_im: f64,
    z_ref: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> ZscanStatus {
    guard(|| {
        let (re, im) = (out_arg(out_re, "out_re")?, out_arg(out_im, "out_im")?);
        let t = impedance_to_reflection(Impedance::new(z_re, z_im)?, z_ref)?;
        (*re, *im) = (t.0.re, t.0.im);
        Ok(())
    })
}

fn emit_dataset(out: &mut *mut ZscanDataset, inner: LabeledDataset) {
    *out = Box::into_raw(Box::new(ZscanDataset { inner }));
}

/// Parses dataset CSV text with one reference impedance for all rows.
///
/// # Safety
/// `csv` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn zscan_dataset_from_csv(
    csv: *const c_char,
    z_ref: f64,
    out: *mut *mut ZscanDataset,
) -> ZscanStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let text = str_arg(csv, "csv")?;
        let opts = CsvOptions { z_ref, ..Default::default() };
        emit_dataset(out, read_dataset_csv(text, &opts)?);
        Ok(())
    })
}

/// Loads a dataset from a CSV (with optional sidecar), a `.s1p` file or a
/// manifest directory.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn zscan_dataset_load(path: *const c_char, out: *mut *mut ZscanDataset) -> ZscanStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        emit_dataset(out, zscan::io::load_dataset(Path::new(path))?);
        Ok(())
    })
}

/// Synthesizes a corpus from a simulator configuration in JSON. A null or
/// empty string selects the defaults.
///
/// # Safety
/// `config_json` must be null or NUL-terminated; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn zscan_dataset_simulate(
    config_json: *const c_char,
    out: *mut *mut ZscanDataset,
) -> ZscanStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let cfg: SimulatorConfig = if config_json.is_null() {
            SimulatorConfig::default()
        } else {
            match str_arg(config_json, "config_json")?.trim() {
                "" => SimulatorConfig::default(),
                text => serde_json::from_str(text)
                    .map_err(|e| Failure(ZscanStatus::Config, format!("simulator config: {e}")))?,
            }
        };
        emit_dataset(out, synthesize_dataset(&cfg).map_err(Error::from)?);
        Ok(())
    })
}

/// Number of traces, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn zscan_dataset_len(ds: *const ZscanDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.len())
}

/// Number of sweep points per trace, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn zscan_dataset_n_points(ds: *const ZscanDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.grid().len())
}

/// # Safety
/// `ds` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn zscan_dataset_free(ds: *mut ZscanDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

fn emit_model(out: &mut *mut ZscanModel, inner: TrainedClassifier) -> Result<(), Failure> {
    inner.validate()?;
    let class_names = inner
        .classes()
        .iter()
        .map(|c| CString::new(c.as_str()).map_err(|_| Failure(ZscanStatus::Config, "class name holds NUL".into())))
        .collect::<Result<_, _>>()?;
    *out = Box::into_raw(Box::new(ZscanModel { inner, class_names }));
    Ok(())
}

/// Loads a model bundle from a JSON file.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn zscan_model_load(path: *const c_char, out: *mut *mut ZscanModel) -> ZscanStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        emit_model(out, zscan::io::read_json(Path::new(path))?)
    })
}

/// Loads a model bundle from JSON text.
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn zscan_model_from_json(json: *const c_char, out: *mut *mut ZscanModel) -> ZscanStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let model = serde_json::from_str(str_arg(json, "json")?)
            .map_err(|e| Failure(ZscanStatus::Io, format!("model bundle: {e}")))?;
        emit_model(out, model)
    })
}

/// Number of classes, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn zscan_model_n_classes(model: *const ZscanModel) -> usize {
    model.as_ref().map_or(0, |m| m.class_names.len())
}

/// Name of class `index`, or null when out of range. Owned by the model.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn zscan_model_class_name(model: *const ZscanModel, index: usize) -> *const c_char {
    model.as_ref().and_then(|m| m.class_names.get(index)).map_or(ptr::null(), |s| s.as_ptr())
}

/// Predicts a class index for every trace of `ds`. `out_labels` must hold
/// at least `zscan_dataset_len(ds)` entries.
///
/// # Safety
/// Handles must be live; `out_labels` must be valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn zscan_model_predict(
    model: *const ZscanModel,
    ds: *const ZscanDataset,
    out_labels: *mut usize,
    capacity: usize,
) -> ZscanStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| invalid("model is null"))?;
        let ds = ds.as_ref().ok_or_else(|| invalid("dataset is null"))?;
        if out_labels.is_null() {
            return Err(invalid("out_labels is null"));
        }
        if capacity < ds.inner.len() {
            return Err(invalid(&format!("out_labels holds {capacity}, need {}", ds.inner.len())));
        }
        let pred = model.inner.predict_dataset(&ds.inner, None)?;
        std::slice::from_raw_parts_mut(out_labels, pred.len()).copy_from_slice(&pred);
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn zscan_model_free(model: *mut ZscanModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
