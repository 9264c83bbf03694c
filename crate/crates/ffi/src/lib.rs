//! C ABI over the chain parser, judge, structure auditor and scorer.
//!
//! Every fallible function returns a [`VsStatus`]; on failure a message is
//! available from [`vs_last_error`] on the same thread. Strings returned by
//! this library must be released with [`vs_string_free`], chains with
//! [`vs_chain_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use veristruct::chain::{parse_chain_with, serialize, ParseOptions, ReasoningChain};
use veristruct::{audit, eval, judge, AuditPolicy, Verdict};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseFailed = 3,
    InvalidArgument = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VsVerdict {
    Supported = 0,
    Refuted = 1,
}

impl From<Verdict> for VsVerdict {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Supported => VsVerdict::Supported,
            Verdict::Refuted => VsVerdict::Refuted,
        }
    }
}

/// Opaque parsed chain.
pub struct VsChain {
    inner: ReasoningChain,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: VsStatus, msg: impl Into<String>) -> VsStatus {
    set_error(msg);
    status
}

fn guarded(f: impl FnOnce() -> VsStatus) -> VsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(VsStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, VsStatus> {
    if p.is_null() {
        return Err(fail(VsStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| fail(VsStatus::InvalidUtf8, e.to_string()))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .expect("nul bytes removed")
        .into_raw()
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn vs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses a chain. `lenient` accepts list markers and bold keywords.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vs_chain_parse(text: *const c_char, lenient: bool, out: *mut *mut VsChain) -> VsStatus {
    guarded(|| {
        if out.is_null() {
            return fail(VsStatus::NullPointer, "null out pointer");
        }
        *out = ptr::null_mut();
        let text = match read_str(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let opts = if lenient {
            ParseOptions::lenient()
        } else {
            ParseOptions::strict()
        };
        match parse_chain_with(text, opts) {
            Ok(chain) => {
                *out = Box::into_raw(Box::new(VsChain { inner: chain }));
                VsStatus::Ok
            }
            Err(e) => fail(VsStatus::ParseFailed, e.to_string()),
        }
    })
}

/// # Safety
/// `chain` must come from [`vs_chain_parse`] and not be freed yet, or be null.
#[no_mangle]
pub unsafe extern "C" fn vs_chain_free(chain: *mut VsChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

/// Number of subclaim blocks; 0 for a null handle.
///
/// # Safety
/// `chain` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn vs_chain_block_count(chain: *const VsChain) -> usize {
    chain.as_ref().map_or(0, |c| c.inner.blocks.len())
}

/// Status of block `index` (0-based).
///
/// # Safety
/// `chain` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vs_chain_block_status(chain: *const VsChain, index: usize, out: *mut VsVerdict) -> VsStatus {
    guarded(|| {
        let (Some(c), false) = (chain.as_ref(), out.is_null()) else {
            return fail(VsStatus::NullPointer, "null argument");
        };
        match c.inner.blocks.get(index) {
            Some(b) => {
                *out = b.status.into();
                VsStatus::Ok
            }
            None => fail(
                VsStatus::InvalidArgument,
                format!("block index {index} out of range ({} blocks)", c.inner.blocks.len()),
            ),
        }
    })
}

/// Chain verdict: Refuted if any block is Refuted.
///
/// # Safety
/// `chain` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vs_chain_judge(chain: *const VsChain, out: *mut VsVerdict) -> VsStatus {
    guarded(|| {
        let (Some(c), false) = (chain.as_ref(), out.is_null()) else {
            return fail(VsStatus::NullPointer, "null argument");
        };
        *out = judge(&c.inner).into();
        VsStatus::Ok
    })
}

/// Canonical text of the chain, or null for a null handle.
///
/// # Safety
/// `chain` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn vs_chain_serialize(chain: *const VsChain) -> *mut c_char {
    match chain.as_ref() {
        Some(c) => into_c_string(serialize(&c.inner)),
        None => ptr::null_mut(),
    }
}

/// Audits `text` against `evidence_count` evidence pieces under the default
/// policy. Writes the pass flag and, if `out_json` is non-null, the report
/// as a JSON string.
///
/// # Safety
/// `text` must be NUL-terminated, `out_passed` valid, `out_json` valid or null.
#[no_mangle]
pub unsafe extern "C" fn vs_audit(
    text: *const c_char,
    evidence_count: usize,
    out_passed: *mut bool,
    out_json: *mut *mut c_char,
) -> VsStatus {
    guarded(|| {
        if out_passed.is_null() {
            return fail(VsStatus::NullPointer, "null out pointer");
        }
        let text = match read_str(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let report = audit(text, evidence_count, &AuditPolicy::default());
        *out_passed = report.passed;
        if !out_json.is_null() {
            *out_json = into_c_string(serde_json::to_string(&report).expect("report serializes"));
        }
        VsStatus::Ok
    })
}

/// # Safety
/// `s` must come from this library and not be freed yet, or be null.
#[no_mangle]
pub unsafe extern "C" fn vs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Macro-averaged F1 over the two verdicts. Labels are 0 (Supported) or 1
/// (Refuted).
///
/// # Safety
/// `gold` and `pred` must point to `n` readable `int32_t`s; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn vs_macro_f1(gold: *const i32, pred: *const i32, n: usize, out: *mut f64) -> VsStatus {
    guarded(|| {
        if gold.is_null() || pred.is_null() || out.is_null() {
            return fail(VsStatus::NullPointer, "null argument");
        }
        let to_verdicts = |p: *const i32| -> Result<Vec<Verdict>, VsStatus> {
            std::slice::from_raw_parts(p, n)
                .iter()
                .map(|&v| match v {
                    0 => Ok(Verdict::Supported),
                    1 => Ok(Verdict::Refuted),
                    other => Err(fail(VsStatus::InvalidArgument, format!("label {other} is not 0 or 1"))),
                })
                .collect()
        };
        let (g, p) = match (to_verdicts(gold), to_verdicts(pred)) {
            (Ok(g), Ok(p)) => (g, p),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        match eval::score(&g, &p) {
            Ok(r) => {
                *out = r.macro_f1;
                VsStatus::Ok
            }
            Err(e) => fail(VsStatus::InvalidArgument, e.to_string()),
        }
    })
}
