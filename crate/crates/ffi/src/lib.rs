//! C ABI for the ssdbcodi library.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_load`
//! functions and released by the matching `*_free`. Every fallible call
//! returns an [`SsdbcodiStatus`]; on failure a description is kept per
//! thread and can be read with [`ssdbcodi_last_error`]. Panics never unwind
//! into C: they are caught and reported as `SSDBCODI_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ssdbcodi::dataset::{sample_labels, DEFAULT_LABEL_COLUMN, DEFAULT_OUTLIER_SENTINEL};
use ssdbcodi::pipeline::{self, PipelineParams, ReliableCount};
use ssdbcodi::{metrics, Class, Dataset, Error, LabelSet, PipelineResult, ScoreParams};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SsdbcodiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Precondition = 5,
    IndexOutOfRange = 6,
    Internal = 7,
}

/// Loaded or constructed dataset.
pub struct SsdbcodiDataset(Dataset);

/// User labels for one run.
pub struct SsdbcodiLabels(LabelSet);

/// Output of [`ssdbcodi_run`].
pub struct SsdbcodiResult(PipelineResult);

/// Run parameters. `k_reliable < 0` selects the automatic reliable-outlier count.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SsdbcodiParams {
    pub alpha: f64,
    pub beta: f64,
    pub min_pts: usize,
    pub k_reliable: i64,
    pub knn_k: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SsdbcodiStatus {
    match e {
        Error::Io { .. } => SsdbcodiStatus::Io,
        Error::Csv(_)
        | Error::Empty(_)
        | Error::Header(_)
        | Error::BadCell { .. }
        | Error::RaggedRow { .. }
        | Error::Json(_) => SsdbcodiStatus::Parse,
        Error::InvalidParameter { .. } | Error::LengthMismatch { .. } => {
            SsdbcodiStatus::InvalidArgument
        }
        Error::IndexOutOfRange { .. } => SsdbcodiStatus::IndexOutOfRange,
        Error::Precondition(_) => SsdbcodiStatus::Precondition,
    }
}

struct Fail(SsdbcodiStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SsdbcodiStatus::NullPointer, format!("{what} is NULL"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SsdbcodiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SsdbcodiStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            SsdbcodiStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(
    p: *const c_char,
    what: &str,
    default: &'a str,
) -> Result<std::borrow::Cow<'a, str>, Fail> {
    if p.is_null() {
        return Ok(default.into());
    }
    CStr::from_ptr(p)
        .to_str()
        .map(|s| s.to_owned().into())
        .map_err(|_| {
            Fail(
                SsdbcodiStatus::InvalidArgument,
                format!("{what} is not UTF-8"),
            )
        })
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        Ok(&[])
    } else if p.is_null() {
        Err(null(what))
    } else {
        Ok(std::slice::from_raw_parts(p, len))
    }
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread, or NULL if none failed.
/// Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ssdbcodi_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ssdbcodi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a CSV file. NULL `label_column`/`outlier_sentinel` select
/// "label" and "o".
///
/// # Safety
/// String arguments must be NULL or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ssdbcodi_dataset_load_csv(
    path: *const c_char,
    label_column: *const c_char,
    outlier_sentinel: *const c_char,
    out: *mut *mut SsdbcodiDataset,
) -> SsdbcodiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if path.is_null() {
            return Err(null("path"));
        }
        let path = str_arg(path, "path", "")?;
        let column = str_arg(label_column, "label_column", DEFAULT_LABEL_COLUMN)?;
        let sentinel = str_arg(
            outlier_sentinel,
            "outlier_sentinel",
            DEFAULT_OUTLIER_SENTINEL,
        )?;
        let ds = Dataset::load_csv(path.as_ref(), &column, &sentinel)?;
        *out = Box::into_raw(Box::new(SsdbcodiDataset(ds)));
        Ok(())
    })
}

/// Builds a dataset from `n * dim` row-major values and `n` truth labels
/// (cluster id, or a negative value for an outlier).
///
/// # Safety
/// `values` must hold `n * dim` doubles and `truth` `n` integers; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ssdbcodi_dataset_new(
    values: *const f64,
    n: usize,
    dim: usize,
    truth: *const i64,
    out: *mut *mut SsdbcodiDataset,
) -> SsdbcodiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let len = n
            .checked_mul(dim)
            .ok_or_else(|| Fail(SsdbcodiStatus::InvalidArgument, "n * dim overflows".into()))?;
        let values = slice_arg(values, len, "values")?;
        let truth = slice_arg(truth, n, "truth")?;
        let truth = truth
            .iter()
            .map(|&c| {
                if c < 0 {
                    Ok(Class::Outlier)
                } else {
                    u32::try_from(c).map(Class::Cluster).map_err(|_| {
                        Fail(
                            SsdbcodiStatus::InvalidArgument,
                            format!("cluster id {c} too large"),
                        )
                    })
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        let ds = Dataset::new("ffi", dim, values.to_vec(), truth)?;
        *out = Box::into_raw(Box::new(SsdbcodiDataset(ds)));
        Ok(())
    })
}

/// Number of points; 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn ssdbcodi_dataset_len(ds: *const SsdbcodiDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.len())
}

/// Number of features; 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn ssdbcodi_dataset_dim(ds: *const SsdbcodiDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.dim())
}

/// Number of ground-truth outliers; 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn ssdbcodi_dataset_outlier_count(ds: *const SsdbcodiDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.outlier_count())
}

/// Number of ground-truth clusters; 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn ssdbcodi_dataset_cluster_count(ds: *const SsdbcodiDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.cluster_count())
}

/// # Safety
/// `ds` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ssdbcodi_dataset_free(ds: *mut SsdbcodiDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Explicit labels: `normal_points[i]` carries cluster `normal_clusters[i]`;
/// `outlier_points` are labeled outliers. Indices refer to a dataset of `n` points.
///
/// # Safety
/// Arrays must hold the stated number of elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ssdbcodi_labels_new(
    n: usize,
    normal_points: *const usize,
    normal_clusters: *const u32,
    normal_len: usize,
    outlier_points: *const usize,
    outlier_len: usize,
    out: *mut *mut SsdbcodiLabels,
) -> SsdbcodiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let points = slice_arg(normal_points, normal_len, "normal_points")?;
        let clusters = slice_arg(normal_clusters, normal_len, "normal_clusters")?;
        let outliers = slice_arg(outlier_points, outlier_len, "outlier_points")?;
        let normal: BTreeMap<usize, u32> = points
            .iter()
            .copied()
            .zip(clusters.iter().copied())
            .collect();
        if normal.len() != normal_len {
            return Err(Fail(
                SsdbcodiStatus::InvalidArgument,
                "duplicate normal point".into(),
            ));
        }
        let outliers: BTreeSet<usize> = outliers.iter().copied().collect();
        let labels = LabelSet::new(n, normal, outliers)?;
        *out = Box::into_raw(Box::new(SsdbcodiLabels(labels)));
        Ok(())
    })
}

/// Labels `round(fraction * n)` points drawn with `seed` from the ground truth.
///
/// # Safety
/// `ds` must be a live dataset handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ssdbcodi_labels_sample(
    ds: *const SsdbcodiDataset,
    fraction: f64,
    seed: u64,
    out: *mut *mut SsdbcodiLabels,
) -> SsdbcodiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let ds = handle(ds, "ds")?;
        *out = Box::into_raw(Box::new(SsdbcodiLabels(sample_labels(
            &ds.0, fraction, seed,
        )?)));
        Ok(())
    })
}

/// Number of labeled points; 0 for NULL.
///
/// # Safety
/// `labels` must be NULL or a live labels handle.
#[no_mangle]
pub unsafe extern "C" fn ssdbcodi_labels_len(labels: *const SsdbcodiLabels) -> usize {
    labels.as_ref().map_or(0, |l| l.0.len())
}

/// # Safety
/// `labels` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ssdbcodi_labels_free(labels: *mut SsdbcodiLabels) {
    if !labels.is_null() {
        drop(Box::from_raw(labels));
    }
}

/// Library defaults: alpha 0.4, beta 0.3, MinPts 3, automatic k, 5 classifier neighbors.
#[no_mangle]
pub extern "C" fn ssdbcodi_params_default() -> SsdbcodiParams {
    let p = PipelineParams::default();
    SsdbcodiParams {
        alpha: p.score.alpha,
        beta: p.score.beta,
        min_pts: p.score.min_pts,
        k_reliable: -1,
        knn_k: p.k_c,
    }
}

fn to_params(p: &SsdbcodiParams) -> Result<PipelineParams, Fail> {
    let score = ScoreParams::new(p.alpha, p.beta, p.min_pts)?;
    let k = if p.k_reliable < 0 {
        ReliableCount::Auto
    } else {
        ReliableCount::Fixed(p.k_reliable as usize)
    };
    Ok(PipelineParams {
        score,
        k,
        k_c: p.knn_k,
    })
}

/// Runs the full pipeline. NULL `params` uses the defaults.
///
/// # Safety
/// Handles must be live; `params` NULL or valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ssdbcodi_run(
    ds: *const SsdbcodiDataset,
    labels: *const SsdbcodiLabels,
    params: *const SsdbcodiParams,
    out: *mut *mut SsdbcodiResult,
) -> SsdbcodiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let ds = handle(ds, "ds")?;
        let labels = handle(labels, "labels")?;
        let params = match params.as_ref() {
            Some(p) => to_params(p)?,
            None => PipelineParams::default(),
        };
        let result = pipeline::run(&ds.0, &labels.0, &params)?;
        *out = Box::into_raw(Box::new(SsdbcodiResult(result)));
        Ok(())
    })
}

/// Number of points in the result; 0 for NULL.
///
/// # Safety
/// `res` must be NULL or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn ssdbcodi_result_len(res: *const SsdbcodiResult) -> usize {
    res.as_ref().map_or(0, |r| r.0.outlier_score.len())
}

fn checked<T: Copy>(xs: &[T], i: usize) -> Result<T, Fail> {
    xs.get(i).copied().ok_or_else(|| {
        Fail(
            SsdbcodiStatus::IndexOutOfRange,
            format!("point {i} out of range for {} points", xs.len()),
        )
    })
}

/// Predicted cluster of point `i`, or -1 when it is predicted an outlier.
///
/// # Safety
/// `res` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ssdbcodi_result_cluster(
    res: *const SsdbcodiResult,
    i: usize,
    out: *mut i64,
) -> SsdbcodiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let res = handle(res, "res")?;
        *out = checked(&res.0.clusters, i)?.map_or(-1, i64::from);
        Ok(())
    })
}

/// Outlier score of point `i`, in [0, 1].
///
/// # Safety
/// `res` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ssdbcodi_result_outlier_score(
    res: *const SsdbcodiResult,
    i: usize,
    out: *mut f64,
) -> SsdbcodiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let res = handle(res, "res")?;
        *out = checked(&res.0.outlier_score, i)?;
        Ok(())
    })
}

/// Copies all outlier scores into `buf`, which must hold `len` >= point count doubles.
///
/// # Safety
/// `res` must be live; `buf` must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ssdbcodi_result_copy_scores(
    res: *const SsdbcodiResult,
    buf: *mut f64,
    len: usize,
) -> SsdbcodiStatus {
    guard(|| {
        let res = handle(res, "res")?;
        let scores = &res.0.outlier_score;
        if len < scores.len() {
            return Err(Fail(
                SsdbcodiStatus::InvalidArgument,
                format!("buffer holds {len} values, need {}", scores.len()),
            ));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(scores.as_ptr(), buf, scores.len());
        Ok(())
    })
}

/// Number of reliable outliers the classifier was trained on; 0 for NULL.
///
/// # Safety
/// `res` must be NULL or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn ssdbcodi_result_reliable_outliers(res: *const SsdbcodiResult) -> usize {
    res.as_ref()
        .map_or(0, |r| r.0.training.reliable_outliers().count())
}

/// # Safety
/// `res` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ssdbcodi_result_free(res: *mut SsdbcodiResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// ROC AUC of `scores` against `positive` flags (nonzero = outlier).
///
/// # Safety
/// Both arrays must hold `n` elements; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ssdbcodi_auc(
    scores: *const f64,
    positive: *const u8,
    n: usize,
    out: *mut f64,
) -> SsdbcodiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let scores = slice_arg(scores, n, "scores")?;
        let positive: Vec<bool> = slice_arg(positive, n, "positive")?
            .iter()
            .map(|&p| p != 0)
            .collect();
        *out = metrics::auc(scores, &positive)?;
        Ok(())
    })
}
