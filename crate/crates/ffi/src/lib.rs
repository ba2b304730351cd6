//! C ABI over `citefit`.
//!
//! Every fallible function returns a [`CfStatus`] and writes its result
//! through an out-pointer. On failure a message is kept per thread and can be
//! read with [`cf_last_error_message`]. Handles returned by `*_new` or
//! [`cf_fit`] are owned by the caller and released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use citefit::distributions::{log_likelihood, pointwise_log_likelihood, ModelId, ModelParams, Support};
use citefit::fitting::{fit, FitOptions, FitResult};
use citefit::model_selection::{vuong_test_with, VuongOptions, Winner};
use citefit::stability::spearman;
use citefit::synthetic::{sample, SampleSpec};
use citefit::{CountDataset, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Divergence = 3,
    TruncationFailure = 4,
    EmptyData = 5,
    InsufficientData = 6,
    DegenerateData = 7,
    Alignment = 8,
    MixedMeasures = 9,
    Parse = 10,
    Io = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfModel {
    Dlnorm = 0,
    Hooked = 1,
    NormalLog = 2,
}

impl From<CfModel> for ModelId {
    fn from(m: CfModel) -> Self {
        match m {
            CfModel::Dlnorm => ModelId::Dlnorm,
            CfModel::Hooked => ModelId::Hooked,
            CfModel::NormalLog => ModelId::NormalLog,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfWinner {
    Indistinguishable = 0,
    A = 1,
    B = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfFitOptions {
    pub offset: u32,
    pub exclude_uncited: bool,
    pub rel_ll_tol: f64,
    pub max_iters: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfComparison {
    pub statistic: f64,
    pub p_value: f64,
    pub winner: CfWinner,
    pub significant: bool,
}

/// Opaque set of citation counts.
pub struct CfDataset(CountDataset);

/// Opaque fitted model.
pub struct CfFit(FitResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> CfStatus {
    match err {
        Error::Domain(_) | Error::Config(_) => CfStatus::InvalidArgument,
        Error::Divergence { .. } => CfStatus::Divergence,
        Error::TruncationFailure { .. } => CfStatus::TruncationFailure,
        Error::EmptyData => CfStatus::EmptyData,
        Error::InsufficientData { .. } => CfStatus::InsufficientData,
        Error::DegenerateData(_) => CfStatus::DegenerateData,
        Error::Alignment { .. } => CfStatus::Alignment,
        Error::MixedMeasures { .. } => CfStatus::MixedMeasures,
        Error::Parse { .. } | Error::NegativeCount { .. } => CfStatus::Parse,
        Error::Io(_) => CfStatus::Io,
    }
}

enum Fail {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> CfStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CfStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            CfStatus::NullPointer
        }
        Ok(Err(Fail::Core(err))) => {
            set_error(err.to_string());
            status_of(&err)
        }
        Err(_) => {
            set_error("internal panic".into());
            CfStatus::Panic
        }
    }
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

fn params(model: CfModel, p0: f64, p1: f64) -> Result<ModelParams, Error> {
    ModelParams::from_values(model.into(), [p0, p1])
}

/// Last error message on this thread, or NULL. Valid until the next call
/// into this library from the same thread.
#[no_mangle]
pub extern "C" fn cf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// NUL-terminated library version.
#[no_mangle]
pub extern "C" fn cf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn cf_fit_options_default() -> CfFitOptions {
    let d = FitOptions::default();
    CfFitOptions {
        offset: d.offset,
        exclude_uncited: d.exclude_uncited,
        rel_ll_tol: d.rel_ll_tol,
        max_iters: d.max_iters as u64,
    }
}

/// Copies `len` raw citation counts into a new dataset.
///
/// # Safety
/// `counts` must point to `len` readable values; `out_ds` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_dataset_new(counts: *const u64, len: usize, out_ds: *mut *mut CfDataset) -> CfStatus {
    guard(|| {
        let slot = out(out_ds, "out")?;
        let counts = input(counts, len, "counts")?;
        *slot = Box::into_raw(Box::new(CfDataset(CountDataset::new("", 0, counts.to_vec()))));
        Ok(())
    })
}

/// # Safety
/// `ds` must come from [`cf_dataset_new`] and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn cf_dataset_free(ds: *mut CfDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Number of counts in `ds`, or 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn cf_dataset_len(ds: *const CfDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.len())
}

/// Fits `model` to `ds`. `opts` may be NULL for defaults.
///
/// # Safety
/// Pointers must be NULL or valid; `out_fit` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_fit(
    model: CfModel,
    ds: *const CfDataset,
    opts: *const CfFitOptions,
    out_fit: *mut *mut CfFit,
) -> CfStatus {
    guard(|| {
        let slot = out(out_fit, "out_fit")?;
        let ds = handle(ds, "dataset")?;
        let mut options = FitOptions::default();
        if let Some(o) = opts.as_ref() {
            options.offset = o.offset;
            options.exclude_uncited = o.exclude_uncited;
            options.rel_ll_tol = o.rel_ll_tol;
            options.max_iters = usize::try_from(o.max_iters).unwrap_or(usize::MAX);
        }
        let result = fit(model.into(), &ds.0, &options)?;
        *slot = Box::into_raw(Box::new(CfFit(result)));
        Ok(())
    })
}

/// # Safety
/// `f` must come from [`cf_fit`] and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn cf_fit_free(f: *mut CfFit) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Writes the two fitted parameters in model order: (mu, sigma), (alpha, b)
/// or (mean, sd).
///
/// # Safety
/// `f` must be a live fit; `out_params` must have room for two values.
#[no_mangle]
pub unsafe extern "C" fn cf_fit_params(f: *const CfFit, out_params: *mut f64) -> CfStatus {
    guard(|| {
        let f = handle(f, "fit")?;
        if out_params.is_null() {
            return Err(Fail::Null("out_params"));
        }
        let v = f.0.params.values();
        slice::from_raw_parts_mut(out_params, 2).copy_from_slice(&v);
        Ok(())
    })
}

/// # Safety
/// `f` must be a live fit; `out_ll` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_fit_log_likelihood(f: *const CfFit, out_ll: *mut f64) -> CfStatus {
    guard(|| {
        *out(out_ll, "out_ll")? = handle(f, "fit")?.0.log_lik;
        Ok(())
    })
}

/// True when the optimizer met its tolerance before the iteration cap.
///
/// # Safety
/// `f` must be NULL or a live fit.
#[no_mangle]
pub unsafe extern "C" fn cf_fit_converged(f: *const CfFit) -> bool {
    f.as_ref().is_some_and(|f| f.0.converged)
}

/// Observations used by the fit, or 0 for NULL.
///
/// # Safety
/// `f` must be NULL or a live fit.
#[no_mangle]
pub unsafe extern "C" fn cf_fit_n(f: *const CfFit) -> usize {
    f.as_ref().map_or(0, |f| f.0.n)
}

/// Vuong comparison of two fits of the same data. Positive statistics favour `a`.
///
/// # Safety
/// `a` and `b` must be live fits; `out_cmp` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_vuong(
    a: *const CfFit,
    b: *const CfFit,
    level: f64,
    out_cmp: *mut CfComparison,
) -> CfStatus {
    guard(|| {
        let slot = out(out_cmp, "out_cmp")?;
        let a = handle(a, "a")?;
        let b = handle(b, "b")?;
        let opts = VuongOptions {
            level,
            allow_mixed_measures: false,
        };
        let r = vuong_test_with(&a.0, &b.0, &opts)?;
        *slot = CfComparison {
            statistic: r.vuong_stat,
            p_value: r.p_value,
            winner: match r.winner {
                Winner::A => CfWinner::A,
                Winner::B => CfWinner::B,
                Winner::Indistinguishable => CfWinner::Indistinguishable,
            },
            significant: r.significant,
        };
        Ok(())
    })
}

/// Probability of a raw count under the default support (count + 1), or the
/// density of `ln(count + 1)` for the normal-on-log model.
///
/// # Safety
/// `out_p` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_probability(model: CfModel, p0: f64, p1: f64, count: u64, out_p: *mut f64) -> CfStatus {
    guard(|| {
        let slot = out(out_p, "out_p")?;
        let m = params(model, p0, p1)?;
        *slot = log_likelihood(&m, &[count], &Default::default())?.exp();
        Ok(())
    })
}

/// Total log-likelihood of raw counts under the default support.
///
/// # Safety
/// `counts` must point to `len` values; `out_ll` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_log_likelihood(
    model: CfModel,
    p0: f64,
    p1: f64,
    counts: *const u64,
    len: usize,
    out_ll: *mut f64,
) -> CfStatus {
    guard(|| {
        let slot = out(out_ll, "out_ll")?;
        let counts = input(counts, len, "counts")?;
        *slot = log_likelihood(&params(model, p0, p1)?, counts, &Default::default())?;
        Ok(())
    })
}

/// Per-observation log-likelihoods, in input order, into `out_ll[0..len]`.
///
/// # Safety
/// `counts` must point to `len` values and `out_ll` to room for `len`.
#[no_mangle]
pub unsafe extern "C" fn cf_pointwise_log_likelihood(
    model: CfModel,
    p0: f64,
    p1: f64,
    counts: *const u64,
    len: usize,
    out_ll: *mut f64,
) -> CfStatus {
    guard(|| {
        let counts = input(counts, len, "counts")?;
        if out_ll.is_null() && len > 0 {
            return Err(Fail::Null("out_ll"));
        }
        let pw = pointwise_log_likelihood(&params(model, p0, p1)?, counts, Support::default(), &Default::default())?;
        if len > 0 {
            slice::from_raw_parts_mut(out_ll, len).copy_from_slice(&pw);
        }
        Ok(())
    })
}

/// Spearman rank correlation with average ranks for ties.
///
/// # Safety
/// `x` and `y` must point to `len` values; `out_r` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_spearman(x: *const f64, y: *const f64, len: usize, out_r: *mut f64) -> CfStatus {
    guard(|| {
        let slot = out(out_r, "out_r")?;
        *slot = spearman(input(x, len, "x")?, input(y, len, "y")?)?;
        Ok(())
    })
}

/// Draws `n` raw counts (support value minus one) from a discrete model.
///
/// # Safety
/// `out_counts` must have room for `n` values.
#[no_mangle]
pub unsafe extern "C" fn cf_sample(
    model: CfModel,
    p0: f64,
    p1: f64,
    n: usize,
    seed: u64,
    out_counts: *mut u64,
) -> CfStatus {
    guard(|| {
        if out_counts.is_null() && n > 0 {
            return Err(Fail::Null("out_counts"));
        }
        let data = sample(&SampleSpec::new(params(model, p0, p1)?, n, seed))?;
        if n > 0 {
            slice::from_raw_parts_mut(out_counts, n).copy_from_slice(&data.counts);
        }
        Ok(())
    })
}
