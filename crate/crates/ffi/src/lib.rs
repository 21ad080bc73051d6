//! C interface to `rmlab`.
//!
//! Every fallible function returns an [`RmlabStatus`] and writes its result through an
//! out-pointer. On failure the message is available from [`rmlab_last_error`] on the
//! same thread. Objects are opaque handles released with their `_free` function;
//! strings returned by the library are released with [`rmlab_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_traits::ToPrimitive;
use rmlab::anticoncentration::{build_atoms, levy_exact, threshold_from_atoms, AtomSet};
use rmlab::campaign::{run, CampaignReport, ReportFormat, RunOptions};
use rmlab::error::Error;
use rmlab::linalg::{exact_rank, is_singular, singularity_polynomial, zero_line_probability};
use rmlab::model::{Config, Matrix01, Probability, WeightModel};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RmlabStatus {
    Ok = 0,
    InvalidParameter = 1,
    BudgetExceeded = 2,
    Degenerate = 3,
    ModelError = 4,
    ValidationFailed = 5,
    Internal = 6,
    Io = 7,
    Parse = 8,
    NullPointer = 9,
    Panic = 10,
}

/// Selects the distribution of the weight vector `b`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RmlabModelKind {
    /// Independent Bernoulli(p_num/p_den).
    Iid = 0,
    /// Uniform on vectors with exactly `m` ones.
    Slice = 1,
    /// Bernoulli(p) conditioned on the sum lying within `gamma·n` of `p·n`.
    SliceWindow = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct RmlabWeightModel {
    pub kind: RmlabModelKind,
    pub p_num: u64,
    pub p_den: u64,
    pub m: usize,
    pub gamma: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RmlabFormat {
    Csv = 0,
    Text = 1,
}

/// A 0/1 matrix.
pub struct RmlabMatrix(Matrix01);

/// The atoms of `Σ bᵢxᵢ`.
pub struct RmlabAtoms(AtomSet);

/// A parsed experiment configuration.
pub struct RmlabConfig(Config);

/// The result of running a configuration.
pub struct RmlabReport(CampaignReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RmlabStatus {
    match e {
        Error::Parameter(_) => RmlabStatus::InvalidParameter,
        Error::Budget { .. } => RmlabStatus::BudgetExceeded,
        Error::Degenerate(_) => RmlabStatus::Degenerate,
        Error::Model(_) => RmlabStatus::ModelError,
        Error::Validation(_) => RmlabStatus::ValidationFailed,
        Error::Internal(_) => RmlabStatus::Internal,
        Error::Io(_) => RmlabStatus::Io,
        Error::Parse(_) => RmlabStatus::Parse,
    }
}

/// Runs `f`, mapping errors and panics to a status and recording the message.
fn guard(f: impl FnOnce() -> Result<(), Error>) -> RmlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RmlabStatus::Ok,
        Ok(Err(e)) => {
            let status = status_of(&e);
            set_error(e.to_string());
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            RmlabStatus::Panic
        }
    }
}

macro_rules! require {
    ($($p:expr),+) => {
        if $($p.is_null())||+ {
            set_error("null pointer argument".into());
            return RmlabStatus::NullPointer;
        }
    };
}

fn probability(num: u64, den: u64) -> Result<Probability, Error> {
    Probability::new(num, den)
}

fn weight_model(m: &RmlabWeightModel) -> Result<WeightModel, Error> {
    Ok(match m.kind {
        RmlabModelKind::Iid => WeightModel::IidBernoulli {
            p: probability(m.p_num, m.p_den)?,
        },
        RmlabModelKind::Slice => WeightModel::Slice { m: m.m },
        RmlabModelKind::SliceWindow => WeightModel::SliceWindow {
            p: probability(m.p_num, m.p_den)?,
            gamma: m.gamma,
        },
    })
}

unsafe fn slice<'a, T>(data: *const T, len: usize) -> &'a [T] {
    if len == 0 {
        &[]
    } else {
        std::slice::from_raw_parts(data, len)
    }
}

/// The message of the last failed call on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn rmlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn rmlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn rmlab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a matrix from `n_rows * n_cols` row-major entries, each 0 or 1.
#[no_mangle]
pub unsafe extern "C" fn rmlab_matrix_new(
    n_rows: usize,
    n_cols: usize,
    entries: *const u8,
    out: *mut *mut RmlabMatrix,
) -> RmlabStatus {
    require!(out);
    if n_rows.checked_mul(n_cols).is_none_or(|len| len > 0 && entries.is_null()) {
        set_error("null or oversized entry buffer".into());
        return RmlabStatus::NullPointer;
    }
    guard(|| {
        let data = slice(entries, n_rows * n_cols).to_vec();
        let m = Matrix01::new(n_rows, n_cols, data)?;
        *out = Box::into_raw(Box::new(RmlabMatrix(m)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn rmlab_matrix_free(m: *mut RmlabMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

#[no_mangle]
pub unsafe extern "C" fn rmlab_matrix_rank(m: *const RmlabMatrix, out: *mut usize) -> RmlabStatus {
    require!(m, out);
    guard(|| {
        *out = exact_rank(&(*m).0);
        Ok(())
    })
}

/// Exact singularity test of a square matrix.
#[no_mangle]
pub unsafe extern "C" fn rmlab_is_singular(m: *const RmlabMatrix, out: *mut bool) -> RmlabStatus {
    require!(m, out);
    guard(|| {
        *out = is_singular(&(*m).0)?;
        Ok(())
    })
}

/// `q_n(p)` from the exhaustive singularity polynomial, as a double.
#[no_mangle]
pub unsafe extern "C" fn rmlab_singularity_probability(
    n: usize,
    p_num: u64,
    p_den: u64,
    out: *mut f64,
) -> RmlabStatus {
    require!(out);
    guard(|| {
        let p = probability(p_num, p_den)?;
        let q = singularity_polynomial(n)?.evaluate_prob(p);
        *out = q.to_f64().unwrap_or(f64::NAN);
        Ok(())
    })
}

/// Probability that an n×n Bernoulli(p) matrix has a zero row or column.
#[no_mangle]
pub unsafe extern "C" fn rmlab_zero_line_probability(
    n: usize,
    p_num: u64,
    p_den: u64,
    out: *mut f64,
) -> RmlabStatus {
    require!(out);
    guard(|| {
        let z = zero_line_probability(n, probability(p_num, p_den)?)?;
        *out = z.exact.to_f64().unwrap_or(f64::NAN);
        Ok(())
    })
}

/// Enumerates the atoms of `Σ bᵢxᵢ`, refusing when more than `budget` weight vectors
/// would be visited.
#[no_mangle]
pub unsafe extern "C" fn rmlab_atoms_build(
    x: *const f64,
    len: usize,
    model: *const RmlabWeightModel,
    budget: f64,
    out: *mut *mut RmlabAtoms,
) -> RmlabStatus {
    require!(model, out);
    if len > 0 && x.is_null() {
        set_error("null coefficient buffer".into());
        return RmlabStatus::NullPointer;
    }
    guard(|| {
        let model = weight_model(&*model)?;
        let atoms = build_atoms(slice(x, len), &model, budget, false)?;
        *out = Box::into_raw(Box::new(RmlabAtoms(atoms)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn rmlab_atoms_free(a: *mut RmlabAtoms) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

#[no_mangle]
pub unsafe extern "C" fn rmlab_atoms_len(a: *const RmlabAtoms) -> usize {
    if a.is_null() {
        0
    } else {
        (*a).0.len()
    }
}

/// `L(Σ bᵢxᵢ, r)`.
#[no_mangle]
pub unsafe extern "C" fn rmlab_levy_exact(a: *const RmlabAtoms, r: f64, out: *mut f64) -> RmlabStatus {
    require!(a, out);
    guard(|| {
        *out = levy_exact(&(*a).0, r)?.value;
        Ok(())
    })
}

/// The threshold `T(x, L)` for the law the atoms were built from.
#[no_mangle]
pub unsafe extern "C" fn rmlab_threshold(a: *const RmlabAtoms, l: f64, out: *mut f64) -> RmlabStatus {
    require!(a, out);
    guard(|| {
        *out = threshold_from_atoms(&(*a).0, l)?;
        Ok(())
    })
}

/// Parses a TOML configuration from a nul-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn rmlab_config_from_toml(text: *const c_char, out: *mut *mut RmlabConfig) -> RmlabStatus {
    require!(text, out);
    guard(|| {
        let s = CStr::from_ptr(text).to_str().map_err(|e| Error::Parse(e.to_string()))?;
        *out = Box::into_raw(Box::new(RmlabConfig(Config::from_toml_str(s)?)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn rmlab_config_free(c: *mut RmlabConfig) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Runs the configured experiment on `workers` threads (0 = one per core).
#[no_mangle]
pub unsafe extern "C" fn rmlab_run(
    config: *const RmlabConfig,
    workers: usize,
    out: *mut *mut RmlabReport,
) -> RmlabStatus {
    require!(config, out);
    guard(|| {
        let report = run(&(*config).0, &RunOptions::with_workers(workers))?;
        *out = Box::into_raw(Box::new(RmlabReport(report)));
        Ok(())
    })
}

/// Renders a report; release the string with [`rmlab_string_free`].
#[no_mangle]
pub unsafe extern "C" fn rmlab_report_render(
    report: *const RmlabReport,
    format: RmlabFormat,
    out: *mut *mut c_char,
) -> RmlabStatus {
    require!(report, out);
    guard(|| {
        let fmt = match format {
            RmlabFormat::Csv => ReportFormat::Csv,
            RmlabFormat::Text => ReportFormat::Text,
        };
        let text = (*report).0.render(fmt)?;
        *out = CString::new(text).map_err(|e| Error::Parse(e.to_string()))?.into_raw();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn rmlab_report_free(r: *mut RmlabReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
