//! C ABI over `apk-core`.
//!
//! Every fallible function returns an `ApkStatus` and writes its result
//! through an out-pointer. On failure, `apk_last_error_message` describes
//! the most recent error on the calling thread. Distributions and reports are
//! opaque handles owned by the caller and released with their `_free`
//! function. Normalization and baseline kinds are passed as plain integers
//! taking the values of `ApkNorm` and `ApkBaselineKind`; anything else is
//! rejected with `APK_STATUS_INVALID_ARGUMENT`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use apk_core::evaluation::{parse_qrels, parse_run};
use apk_core::{
    baseline, evaluate, exact_wor, exact_wr, monte_carlo, BaselineChoice, Cutoff, Error, EvaluationReport,
    ExactDistribution, ModelSpec, Normalization, RelevanceVector,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Capacity = 3,
    Parse = 4,
    Io = 5,
    Validation = 6,
    Panic = 7,
}

/// Normalization codes accepted by the `norm` parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApkNorm {
    /// Divide by the cutoff `k`.
    ByK = 0,
    /// Divide by `min(m, k)`, with `m` the relevant count.
    ByMin = 1,
}

/// Baseline selection codes for `ApkBaseline::kind`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApkBaselineKind {
    /// WOR over `items` documents with each query's own relevant count.
    AutoWor = 0,
    /// WR with `p` pooled from the observed top-k prevalence.
    AutoWr = 1,
    /// Fixed WOR(`items`, `relevant`) for every query.
    Wor = 2,
    /// Fixed WR(`p`) for every query.
    Wr = 3,
}

/// Baseline choice for `apk_evaluate_files`; fields not used by `kind` are
/// ignored.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ApkBaseline {
    pub kind: u32,
    pub items: usize,
    pub relevant: usize,
    pub p: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ApkMoments {
    pub mean: f64,
    pub variance: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ApkSampleMoments {
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    pub n: u64,
}

/// Headline numbers of an evaluation. `z_score` is NaN when the baseline
/// variance is zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ApkReportSummary {
    pub map_at_k: f64,
    pub baseline_mean: f64,
    pub baseline_variance_of_map: f64,
    pub z_score: f64,
    pub user_count: usize,
    pub k: usize,
}

/// Exact AP@k distribution.
pub struct ApkDistribution(ExactDistribution);

/// Evaluation report.
pub struct ApkReport(EvaluationReport);

struct Failure {
    status: ApkStatus,
    message: String,
}

impl Failure {
    fn new(status: ApkStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn null(name: &str) -> Self {
        Self::new(ApkStatus::NullPointer, format!("`{name}` is null"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Capacity { .. } => ApkStatus::Capacity,
            Error::Parse { .. } | Error::Json(_) => ApkStatus::Parse,
            Error::Io { .. } | Error::Csv(_) => ApkStatus::Io,
            Error::Validation(_) | Error::NormalizationMismatch { .. } => ApkStatus::Validation,
            _ => ApkStatus::InvalidArgument,
        };
        Self::new(status, e.to_string())
    }
}

type FfiResult<T> = Result<T, Failure>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn ffi_call(f: impl FnOnce() -> FfiResult<()>) -> ApkStatus {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ApkStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(_) => {
            set_last_error("internal panic");
            ApkStatus::Panic
        }
    }
}

/// # Safety
/// `p` must be null or valid for writes of `T`.
unsafe fn out<'a, T>(p: *mut T, name: &str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or_else(|| Failure::null(name))
}

/// # Safety
/// `p` must be null or point to `len` readable elements.
unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> FfiResult<&'a [T]> {
    if p.is_null() {
        return Err(Failure::null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// # Safety
/// `p` must be null or a NUL-terminated string.
unsafe fn path(p: *const c_char, name: &str) -> FfiResult<PathBuf> {
    if p.is_null() {
        return Err(Failure::null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| Failure::new(ApkStatus::InvalidArgument, format!("`{name}` is not valid UTF-8")))
}

fn norm(code: u32) -> FfiResult<Normalization> {
    match code {
        c if c == ApkNorm::ByK as u32 => Ok(Normalization::ByK),
        c if c == ApkNorm::ByMin as u32 => Ok(Normalization::ByMinMK),
        c => Err(Failure::new(
            ApkStatus::InvalidArgument,
            format!("unknown normalization code {c}"),
        )),
    }
}

fn moments(m: apk_core::BaselineMoments) -> ApkMoments {
    ApkMoments {
        mean: m.mean,
        variance: m.variance,
    }
}

/// Message for the last failed call on this thread, or null if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn apk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// AP@k of one ranking given as `len` bytes, each 0 or 1.
///
/// # Safety
/// `relevance` must point to `len` bytes and `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn apk_ap_at_k(
    relevance: *const u8,
    len: usize,
    k: usize,
    norm_code: u32,
    result: *mut f64,
) -> ApkStatus {
    ffi_call(|| {
        let result = out(result, "result")?;
        let rv = RelevanceVector::from_bits(slice(relevance, len, "relevance")?)?;
        *result = apk_core::ap_at_k(&rv, Cutoff::new(k)?, norm(norm_code)?)?;
        Ok(())
    })
}

/// MAP@k over `users` rankings stored back to back in `relevance`; ranking
/// `u` has `lengths[u]` entries.
///
/// # Safety
/// `lengths` must point to `users` values and `relevance` to their sum in
/// bytes; `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn apk_map_at_k(
    relevance: *const u8,
    lengths: *const usize,
    users: usize,
    k: usize,
    norm_code: u32,
    result: *mut f64,
) -> ApkStatus {
    ffi_call(|| {
        let result = out(result, "result")?;
        let lengths = slice(lengths, users, "lengths")?;
        let total = lengths
            .iter()
            .try_fold(0usize, |acc, &l| acc.checked_add(l))
            .ok_or_else(|| Failure::new(ApkStatus::InvalidArgument, "ranking lengths overflow"))?;
        let bits = slice(relevance, total, "relevance")?;
        let mut offset = 0;
        let mut vectors = Vec::with_capacity(users);
        for &l in lengths {
            vectors.push(RelevanceVector::from_bits(&bits[offset..offset + l])?);
            offset += l;
        }
        *result = apk_core::map_at_k(&vectors, Cutoff::new(k)?, norm(norm_code)?)?;
        Ok(())
    })
}

/// Closed-form mean and variance of AP@k (normalized by `min(m,k)`) under
/// WOR(`items`, `relevant`).
///
/// # Safety
/// `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn apk_baseline_wor(
    items: usize,
    relevant: usize,
    k: usize,
    result: *mut ApkMoments,
) -> ApkStatus {
    ffi_call(|| {
        let result = out(result, "result")?;
        *result = moments(baseline(&ModelSpec::wor(items, relevant)?, k)?);
        Ok(())
    })
}

/// Closed-form mean and variance of AP@k (normalized by `k`) under WR(`p`).
///
/// # Safety
/// `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn apk_baseline_wr(p: f64, k: usize, result: *mut ApkMoments) -> ApkStatus {
    ffi_call(|| {
        let result = out(result, "result")?;
        *result = moments(baseline(&ModelSpec::wr(p)?, k)?);
        Ok(())
    })
}

/// `H_k` and `H_k^(2)`.
///
/// # Safety
/// `h1` and `h2` must be writable.
#[no_mangle]
pub unsafe extern "C" fn apk_harmonic(k: usize, h1: *mut f64, h2: *mut f64) -> ApkStatus {
    ffi_call(|| {
        let (h1, h2) = (out(h1, "h1")?, out(h2, "h2")?);
        let pair = apk_core::baseline::harmonic_numbers(k)?;
        *h1 = pair.h1;
        *h2 = pair.h2;
        Ok(())
    })
}

unsafe fn simulate(
    model: FfiResult<ModelSpec>,
    k: usize,
    norm_code: u32,
    samples: u64,
    seed: u64,
    result: *mut ApkSampleMoments,
) -> ApkStatus {
    ffi_call(|| {
        let result = out(result, "result")?;
        let s = monte_carlo(&model?, k, norm(norm_code)?, samples, seed)?;
        *result = ApkSampleMoments {
            mean: s.mean,
            variance: s.variance,
            std_error: s.std_error,
            n: s.n,
        };
        Ok(())
    })
}

/// Seeded Monte Carlo moments under WOR. Identical inputs give identical
/// results regardless of thread count.
///
/// # Safety
/// `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn apk_simulate_wor(
    items: usize,
    relevant: usize,
    k: usize,
    norm_code: u32,
    samples: u64,
    seed: u64,
    result: *mut ApkSampleMoments,
) -> ApkStatus {
    simulate(
        ModelSpec::wor(items, relevant).map_err(Failure::from),
        k,
        norm_code,
        samples,
        seed,
        result,
    )
}

/// Seeded Monte Carlo moments under WR.
///
/// # Safety
/// `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn apk_simulate_wr(
    p: f64,
    k: usize,
    norm_code: u32,
    samples: u64,
    seed: u64,
    result: *mut ApkSampleMoments,
) -> ApkStatus {
    simulate(
        ModelSpec::wr(p).map_err(Failure::from),
        k,
        norm_code,
        samples,
        seed,
        result,
    )
}

unsafe fn distribution(dist: FfiResult<ExactDistribution>, result: *mut *mut ApkDistribution) -> ApkStatus {
    ffi_call(|| {
        let result = out(result, "result")?;
        *result = ptr::null_mut();
        *result = Box::into_raw(Box::new(ApkDistribution(dist?)));
        Ok(())
    })
}

/// Exact AP@k distribution under WOR. Release with
/// `apk_distribution_free`.
///
/// # Safety
/// `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn apk_exact_wor(
    items: usize,
    relevant: usize,
    k: usize,
    norm_code: u32,
    result: *mut *mut ApkDistribution,
) -> ApkStatus {
    let dist = norm(norm_code).and_then(|n| exact_wor(items, relevant, k, n).map_err(Failure::from));
    distribution(dist, result)
}

/// Exact AP@k distribution under WR. Release with `apk_distribution_free`.
///
/// # Safety
/// `result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn apk_exact_wr(
    p: f64,
    k: usize,
    norm_code: u32,
    result: *mut *mut ApkDistribution,
) -> ApkStatus {
    let dist = norm(norm_code).and_then(|n| exact_wr(p, k, n).map_err(Failure::from));
    distribution(dist, result)
}

/// Number of support points; 0 for a null handle.
///
/// # Safety
/// `dist` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn apk_distribution_len(dist: *const ApkDistribution) -> usize {
    dist.as_ref().map_or(0, |d| d.0.support.len())
}

/// Support point `index` in ascending order of value.
///
/// # Safety
/// `dist` must be a live handle; `value` and `probability` must be writable.
#[no_mangle]
pub unsafe extern "C" fn apk_distribution_get(
    dist: *const ApkDistribution,
    index: usize,
    value: *mut f64,
    probability: *mut f64,
) -> ApkStatus {
    ffi_call(|| {
        let d = dist.as_ref().ok_or_else(|| Failure::null("dist"))?;
        let (value, probability) = (out(value, "value")?, out(probability, "probability")?);
        let &(v, w) = d.0.support.get(index).ok_or_else(|| {
            Failure::new(
                ApkStatus::InvalidArgument,
                format!("index {index} outside support of size {}", d.0.support.len()),
            )
        })?;
        *value = v;
        *probability = w;
        Ok(())
    })
}

/// Mean and variance of the distribution.
///
/// # Safety
/// `dist` must be a live handle and `result` writable.
#[no_mangle]
pub unsafe extern "C" fn apk_distribution_moments(dist: *const ApkDistribution, result: *mut ApkMoments) -> ApkStatus {
    ffi_call(|| {
        let d = dist.as_ref().ok_or_else(|| Failure::null("dist"))?;
        *out(result, "result")? = ApkMoments {
            mean: d.0.mean,
            variance: d.0.variance,
        };
        Ok(())
    })
}

/// Releases a distribution; null is ignored.
///
/// # Safety
/// `dist` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn apk_distribution_free(dist: *mut ApkDistribution) {
    if !dist.is_null() {
        drop(Box::from_raw(dist));
    }
}

fn baseline_choice(b: &ApkBaseline) -> FfiResult<BaselineChoice> {
    let kind = match b.kind {
        k if k == ApkBaselineKind::AutoWor as u32 => ApkBaselineKind::AutoWor,
        k if k == ApkBaselineKind::AutoWr as u32 => ApkBaselineKind::AutoWr,
        k if k == ApkBaselineKind::Wor as u32 => ApkBaselineKind::Wor,
        k if k == ApkBaselineKind::Wr as u32 => ApkBaselineKind::Wr,
        k => {
            return Err(Failure::new(
                ApkStatus::InvalidArgument,
                format!("unknown baseline kind {k}"),
            ))
        }
    };
    Ok(match kind {
        ApkBaselineKind::AutoWor => BaselineChoice::AutoWor { items: b.items },
        ApkBaselineKind::AutoWr => BaselineChoice::AutoWr,
        ApkBaselineKind::Wor => BaselineChoice::Explicit(ModelSpec::wor(b.items, b.relevant)?),
        ApkBaselineKind::Wr => BaselineChoice::Explicit(ModelSpec::wr(b.p)?),
    })
}

/// Scores a six-column run file against a four-column qrels file at cutoff
/// `k`, using the normalization that matches the chosen baseline. Release
/// the report with `apk_report_free`.
///
/// # Safety
/// `run_path` and `qrels_path` must be NUL-terminated strings and `result`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn apk_evaluate_files(
    run_path: *const c_char,
    qrels_path: *const c_char,
    k: usize,
    baseline_choice_in: ApkBaseline,
    result: *mut *mut ApkReport,
) -> ApkStatus {
    ffi_call(|| {
        let result = out(result, "result")?;
        *result = ptr::null_mut();
        let choice = baseline_choice(&baseline_choice_in)?;
        let norm = match choice {
            BaselineChoice::AutoWor { .. } => Normalization::ByMinMK,
            BaselineChoice::AutoWr => Normalization::ByK,
            BaselineChoice::Explicit(m) => m.natural_normalization(),
        };
        let run = parse_run(path(run_path, "run_path")?)?;
        let qrels = parse_qrels(path(qrels_path, "qrels_path")?)?;
        let report = evaluate(&run, &qrels, k, norm, choice)?;
        *result = Box::into_raw(Box::new(ApkReport(report)));
        Ok(())
    })
}

/// # Safety
/// `report` must be a live handle and `result` writable.
#[no_mangle]
pub unsafe extern "C" fn apk_report_summary(report: *const ApkReport, result: *mut ApkReportSummary) -> ApkStatus {
    ffi_call(|| {
        let r = &report.as_ref().ok_or_else(|| Failure::null("report"))?.0;
        *out(result, "result")? = ApkReportSummary {
            map_at_k: r.map_at_k,
            baseline_mean: r.baseline_mean,
            baseline_variance_of_map: r.baseline_variance_of_map,
            z_score: r.z_score.unwrap_or(f64::NAN),
            user_count: r.user_count,
            k: r.k,
        };
        Ok(())
    })
}

/// Full report, including per-query AP, as a JSON string. Release with
/// `apk_string_free`.
///
/// # Safety
/// `report` must be a live handle and `result` writable.
#[no_mangle]
pub unsafe extern "C" fn apk_report_to_json(report: *const ApkReport, result: *mut *mut c_char) -> ApkStatus {
    ffi_call(|| {
        let result = out(result, "result")?;
        *result = ptr::null_mut();
        let r = &report.as_ref().ok_or_else(|| Failure::null("report"))?.0;
        let text = serde_json::to_string(r).map_err(Error::from)?;
        let c = CString::new(text).map_err(|_| Failure::new(ApkStatus::Validation, "report contains a NUL byte"))?;
        *result = c.into_raw();
        Ok(())
    })
}

/// Releases a report; null is ignored.
///
/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn apk_report_free(report: *mut ApkReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn apk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
