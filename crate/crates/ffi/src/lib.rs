//! C ABI over the foldwise core.
//!
//! Every fallible call returns an [`FwStatus`]; on failure the message is
//! available from [`fw_last_error`] on the same thread. Objects cross the
//! boundary as opaque handles and must be released with their `_free`
//! function. Strings returned by this library are released with
//! [`fw_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::slice;

use foldwise::ensemble::{rf_predict, rf_train, FeatureTable, RandomForestModel, RfParams};
use foldwise::metrics::{auc, roc_curve, RocCurve};
use foldwise::predictions::load_predictions;
use foldwise::xai::{grad_cam, read_tensor, upsample_bilinear, write_tensor, Heatmap, Tensor32};
use foldwise::{ClassVocabulary, Error, PredictionMatrix};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Schema = 3,
    Validation = 4,
    Alignment = 5,
    Degenerate = 6,
    Format = 7,
    Io = 8,
    BufferTooSmall = 9,
    Panic = 10,
    Other = 11,
}

impl From<&Error> for FwStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Schema { .. } | Error::Vocabulary { .. } => FwStatus::Schema,
            Error::Validation { .. } => FwStatus::Validation,
            Error::Argument(_) | Error::Config(_) => FwStatus::InvalidArgument,
            Error::Alignment(_) => FwStatus::Alignment,
            Error::Degenerate(_) => FwStatus::Degenerate,
            Error::Format(_) | Error::Image(_) => FwStatus::Format,
            Error::Io { .. } => FwStatus::Io,
            _ => FwStatus::Other,
        }
    }
}

/// Prediction matrix loaded from a prediction CSV.
pub struct FwPredictions(PredictionMatrix);

/// ROC curve for one positive class.
pub struct FwRoc(RocCurve);

/// Trained random forest.
pub struct FwForest(RandomForestModel);

/// Normalised 2-D heatmap with values in `[0, 1]`.
pub struct FwHeatmap(Heatmap);

/// f32 tensor in TNSR v1 layout.
pub struct FwTensor(Tensor32);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: FwStatus, msg: impl Into<String>) -> FwStatus {
    set_error(msg.into());
    status
}

fn guard(f: impl FnOnce() -> Result<(), FwStatus>) -> FwStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FwStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(FwStatus::Panic, "internal panic"),
    }
}

fn core(e: Error) -> FwStatus {
    let status = FwStatus::from(&e);
    fail(status, e.to_string())
}

unsafe fn cstr<'a>(p: *const c_char, what: &str) -> Result<&'a str, FwStatus> {
    if p.is_null() {
        return Err(fail(FwStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        fail(
            FwStatus::InvalidArgument,
            format!("{what} is not valid UTF-8"),
        )
    })
}

unsafe fn slice_in<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], FwStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(FwStatus::NullPointer, format!("{what} is null")));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, FwStatus> {
    p.as_ref()
        .ok_or_else(|| fail(FwStatus::NullPointer, "handle is null"))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), FwStatus> {
    if out.is_null() {
        return Err(fail(FwStatus::NullPointer, "output pointer is null"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), FwStatus> {
    if out.is_null() {
        return Err(fail(FwStatus::NullPointer, "output pointer is null"));
    }
    *out = value;
    Ok(())
}

unsafe fn numbered_vocab(n_classes: usize) -> Result<ClassVocabulary, FwStatus> {
    ClassVocabulary::new((0..n_classes).map(|c| format!("class{c}"))).map_err(core)
}

unsafe fn matrix_rows(
    data: *const f64,
    n_rows: usize,
    n_cols: usize,
) -> Result<Vec<Vec<f64>>, FwStatus> {
    let len = n_rows
        .checked_mul(n_cols)
        .ok_or_else(|| fail(FwStatus::InvalidArgument, "matrix size overflows"))?;
    let flat = slice_in(data, len, "matrix data")?;
    Ok(flat
        .chunks(n_cols.max(1))
        .take(n_rows)
        .map(<[f64]>::to_vec)
        .collect())
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn fw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn fw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---- predictions ----

/// Load and validate a prediction CSV against `n_classes` class names.
///
/// # Safety
/// `path` and each of the `n_classes` entries of `class_names` must be
/// NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fw_predictions_load(
    path: *const c_char,
    class_names: *const *const c_char,
    n_classes: usize,
    out: *mut *mut FwPredictions,
) -> FwStatus {
    guard(|| {
        let path = cstr(path, "path")?;
        let names = slice_in(class_names, n_classes, "class_names")?
            .iter()
            .map(|&p| cstr(p, "class name"))
            .collect::<Result<Vec<_>, _>>()?;
        let vocab = ClassVocabulary::new(names).map_err(core)?;
        let m = load_predictions(&PathBuf::from(path), &vocab).map_err(core)?;
        put(out, FwPredictions(m))
    })
}

/// # Safety
/// `h` must be a live handle; `rows` and `cols` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fw_predictions_dims(
    h: *const FwPredictions,
    rows: *mut usize,
    cols: *mut usize,
) -> FwStatus {
    guard(|| {
        let m = &handle(h)?.0;
        write_out(rows, m.len())?;
        write_out(cols, m.n_classes())
    })
}

/// # Safety
/// `h` must be a live handle; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fw_predictions_get(
    h: *const FwPredictions,
    row: usize,
    col: usize,
    value: *mut f64,
) -> FwStatus {
    guard(|| {
        let m = &handle(h)?.0;
        let v = m.rows().get(row).and_then(|r| r.get(col)).ok_or_else(|| {
            fail(
                FwStatus::InvalidArgument,
                format!("cell ({row}, {col}) out of range"),
            )
        })?;
        write_out(value, *v)
    })
}

/// Sample id of `row` as a new string, or null when out of range.
///
/// # Safety
/// `h` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fw_predictions_sample_id(
    h: *const FwPredictions,
    row: usize,
) -> *mut c_char {
    let Some(m) = h.as_ref() else {
        return ptr::null_mut();
    };
    m.0.sample_ids()
        .get(row)
        .and_then(|id| CString::new(id.as_str()).ok())
        .map_or(ptr::null_mut(), CString::into_raw)
}

/// # Safety
/// `h` must be null or a handle from [`fw_predictions_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fw_predictions_free(h: *mut FwPredictions) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

// ---- ROC ----

/// ROC curve from scores and 0/1 truth flags (non-zero means positive).
///
/// # Safety
/// `scores` and `truth` must each hold `n` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fw_roc_new(
    scores: *const f64,
    truth: *const u8,
    n: usize,
    out: *mut *mut FwRoc,
) -> FwStatus {
    guard(|| {
        let scores = slice_in(scores, n, "scores")?;
        let truth: Vec<bool> = slice_in(truth, n, "truth")?
            .iter()
            .map(|&t| t != 0)
            .collect();
        let curve = roc_curve(scores, &truth, 1).map_err(core)?;
        put(out, FwRoc(curve))
    })
}

/// # Safety
/// `h` must be a live handle; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fw_roc_auc(h: *const FwRoc, value: *mut f64) -> FwStatus {
    guard(|| write_out(value, auc(&handle(h)?.0)))
}

/// Number of points on the curve, 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fw_roc_len(h: *const FwRoc) -> usize {
    h.as_ref().map_or(0, |r| r.0.points.len())
}

/// Copy the curve into `fpr`, `tpr` and optionally `thresholds` (may be
/// null), each with room for `capacity` values.
///
/// # Safety
/// Non-null buffers must hold `capacity` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fw_roc_points(
    h: *const FwRoc,
    fpr: *mut f64,
    tpr: *mut f64,
    thresholds: *mut f64,
    capacity: usize,
) -> FwStatus {
    guard(|| {
        let curve = &handle(h)?.0;
        let n = curve.points.len();
        if capacity < n {
            return Err(fail(
                FwStatus::BufferTooSmall,
                format!("need {n} points, have {capacity}"),
            ));
        }
        if fpr.is_null() || tpr.is_null() {
            return Err(fail(FwStatus::NullPointer, "fpr/tpr buffer is null"));
        }
        for (i, &(x, y)) in curve.points.iter().enumerate() {
            *fpr.add(i) = x;
            *tpr.add(i) = y;
        }
        if !thresholds.is_null() {
            for i in 0..n {
                *thresholds.add(i) = curve.thresholds.as_ref().map_or(f64::NAN, |t| t[i]);
            }
        }
        Ok(())
    })
}

/// # Safety
/// `h` must be null or a handle from [`fw_roc_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fw_roc_free(h: *mut FwRoc) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

// ---- random forest ----

/// Train a forest on a row-major `n_samples x n_features` matrix with labels
/// in `0..n_classes`. `mtry == 0` selects the default, `max_depth == 0`
/// means unlimited.
///
/// # Safety
/// `features` must hold `n_samples * n_features` doubles and `labels`
/// `n_samples` values; `out` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn fw_forest_train(
    features: *const f64,
    labels: *const u32,
    n_samples: usize,
    n_features: usize,
    n_classes: usize,
    n_trees: usize,
    mtry: usize,
    max_depth: usize,
    seed: u64,
    out: *mut *mut FwForest,
) -> FwStatus {
    guard(|| {
        let rows = matrix_rows(features, n_samples, n_features)?;
        let labels: Vec<usize> = slice_in(labels, n_samples, "labels")?
            .iter()
            .map(|&l| l as usize)
            .collect();
        if let Some(bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(fail(
                FwStatus::InvalidArgument,
                format!("label {bad} out of range for {n_classes} classes"),
            ));
        }
        let vocab = numbered_vocab(n_classes)?;
        let ids = (0..n_samples).map(|i| i.to_string()).collect();
        let table = FeatureTable::new(ids, rows, Some(labels), vocab).map_err(core)?;
        let params = RfParams {
            n_trees,
            mtry: (mtry > 0).then_some(mtry),
            max_depth: (max_depth > 0).then_some(max_depth),
            ..RfParams::default()
        };
        let model = rf_train(&table, &params, seed).map_err(core)?;
        put(out, FwForest(model))
    })
}

/// Predict hard labels (ties to the lowest class) and, when `votes` is not
/// null, per-class vote fractions (`n_samples * n_classes`, row-major).
///
/// # Safety
/// `features` must hold `n_samples * n_features` doubles, `labels_out`
/// `n_samples` writable values and `votes` (if non-null) room for
/// `n_samples * n_classes` doubles.
#[no_mangle]
pub unsafe extern "C" fn fw_forest_predict(
    h: *const FwForest,
    features: *const f64,
    n_samples: usize,
    n_features: usize,
    labels_out: *mut u32,
    votes: *mut f64,
) -> FwStatus {
    guard(|| {
        let model = &handle(h)?.0;
        if labels_out.is_null() && n_samples > 0 {
            return Err(fail(FwStatus::NullPointer, "labels_out is null"));
        }
        let rows = matrix_rows(features, n_samples, n_features)?;
        let ids = (0..n_samples).map(|i| i.to_string()).collect();
        let table = FeatureTable::new(ids, rows, None, model.vocab.clone()).map_err(core)?;
        let (labels, fractions) = rf_predict(model, &table).map_err(core)?;
        for (i, l) in labels.iter().enumerate() {
            *labels_out.add(i) = *l as u32;
        }
        if !votes.is_null() {
            for (i, v) in fractions.rows().iter().flatten().enumerate() {
                *votes.add(i) = *v;
            }
        }
        Ok(())
    })
}

/// Number of classes the forest predicts, 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fw_forest_n_classes(h: *const FwForest) -> usize {
    h.as_ref().map_or(0, |f| f.0.vocab.len())
}

/// Serialised model as a new JSON string, or null on failure.
///
/// # Safety
/// `h` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fw_forest_to_json(h: *const FwForest) -> *mut c_char {
    let Some(f) = h.as_ref() else {
        return ptr::null_mut();
    };
    CString::new(f.0.to_json()).map_or(ptr::null_mut(), CString::into_raw)
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fw_forest_from_json(
    json: *const c_char,
    out: *mut *mut FwForest,
) -> FwStatus {
    guard(|| {
        let text = cstr(json, "json")?;
        let model = RandomForestModel::from_json(text).map_err(core)?;
        put(out, FwForest(model))
    })
}

/// # Safety
/// `h` must be null or a forest handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fw_forest_free(h: *mut FwForest) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

// ---- Grad-CAM ----

/// Grad-CAM heatmap from `[channels, height, width]` activation and
/// gradient buffers.
///
/// # Safety
/// Both buffers must hold `channels * height * width` floats; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn fw_gradcam(
    activations: *const f32,
    gradients: *const f32,
    channels: usize,
    height: usize,
    width: usize,
    out: *mut *mut FwHeatmap,
) -> FwStatus {
    guard(|| {
        let len = channels
            .checked_mul(height)
            .and_then(|v| v.checked_mul(width))
            .ok_or_else(|| fail(FwStatus::InvalidArgument, "tensor size overflows"))?;
        let shape = vec![channels, height, width];
        let act = Tensor32::new(
            shape.clone(),
            slice_in(activations, len, "activations")?.to_vec(),
        )
        .map_err(core)?;
        let grad =
            Tensor32::new(shape, slice_in(gradients, len, "gradients")?.to_vec()).map_err(core)?;
        put(out, FwHeatmap(grad_cam(&act, &grad).map_err(core)?))
    })
}

/// # Safety
/// `h` must be a live handle; `height` and `width` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fw_heatmap_dims(
    h: *const FwHeatmap,
    height: *mut usize,
    width: *mut usize,
) -> FwStatus {
    guard(|| {
        let m = &handle(h)?.0;
        write_out(height, m.height())?;
        write_out(width, m.width())
    })
}

/// Copy the row-major values into `values`, which has room for `capacity`.
///
/// # Safety
/// `values` must hold `capacity` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fw_heatmap_values(
    h: *const FwHeatmap,
    values: *mut f64,
    capacity: usize,
) -> FwStatus {
    guard(|| {
        let m = &handle(h)?.0;
        let src = m.values();
        if capacity < src.len() {
            return Err(fail(
                FwStatus::BufferTooSmall,
                format!("need {} values, have {capacity}", src.len()),
            ));
        }
        if values.is_null() {
            return Err(fail(FwStatus::NullPointer, "values is null"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), values, src.len());
        Ok(())
    })
}

/// Corner-aligned bilinear resize to `out_width x out_height`.
///
/// # Safety
/// `h` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fw_heatmap_upsample(
    h: *const FwHeatmap,
    out_width: usize,
    out_height: usize,
    out: *mut *mut FwHeatmap,
) -> FwStatus {
    guard(|| {
        let m = &handle(h)?.0;
        put(
            out,
            FwHeatmap(upsample_bilinear(m, out_width, out_height).map_err(core)?),
        )
    })
}

/// # Safety
/// `h` must be null or a heatmap handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fw_heatmap_free(h: *mut FwHeatmap) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

// ---- TNSR ----

/// Build a tensor from a shape and row-major data.
///
/// # Safety
/// `shape` must hold `rank` values and `data` their product.
#[no_mangle]
pub unsafe extern "C" fn fw_tensor_new(
    shape: *const usize,
    rank: usize,
    data: *const f32,
    out: *mut *mut FwTensor,
) -> FwStatus {
    guard(|| {
        let shape = slice_in(shape, rank, "shape")?.to_vec();
        let len = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| fail(FwStatus::InvalidArgument, "tensor size overflows"))?;
        let data = slice_in(data, len, "data")?.to_vec();
        put(out, FwTensor(Tensor32::new(shape, data).map_err(core)?))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fw_tensor_read(path: *const c_char, out: *mut *mut FwTensor) -> FwStatus {
    guard(|| {
        let path = cstr(path, "path")?;
        put(
            out,
            FwTensor(read_tensor(&PathBuf::from(path)).map_err(core)?),
        )
    })
}

/// # Safety
/// `h` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fw_tensor_write(h: *const FwTensor, path: *const c_char) -> FwStatus {
    guard(|| {
        let t = &handle(h)?.0;
        let path = cstr(path, "path")?;
        write_tensor(&PathBuf::from(path), t).map_err(core)
    })
}

/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fw_tensor_rank(h: *const FwTensor) -> usize {
    h.as_ref().map_or(0, |t| t.0.rank())
}

/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fw_tensor_len(h: *const FwTensor) -> usize {
    h.as_ref().map_or(0, |t| t.0.data().len())
}

/// # Safety
/// `h` must be a live handle; `shape` must have room for `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn fw_tensor_shape(
    h: *const FwTensor,
    shape: *mut usize,
    capacity: usize,
) -> FwStatus {
    guard(|| {
        let t = &handle(h)?.0;
        if capacity < t.rank() {
            return Err(fail(
                FwStatus::BufferTooSmall,
                format!("need {} dims, have {capacity}", t.rank()),
            ));
        }
        if shape.is_null() {
            return Err(fail(FwStatus::NullPointer, "shape is null"));
        }
        ptr::copy_nonoverlapping(t.shape().as_ptr(), shape, t.rank());
        Ok(())
    })
}

/// Borrowed pointer to the tensor data, valid while the handle lives.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fw_tensor_data(h: *const FwTensor) -> *const f32 {
    h.as_ref().map_or(ptr::null(), |t| t.0.data().as_ptr())
}

/// # Safety
/// `h` must be null or a tensor handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fw_tensor_free(h: *mut FwTensor) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}
