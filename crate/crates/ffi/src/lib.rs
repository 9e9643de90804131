//! C ABI over `cpgir`.
//!
//! Graphs are handed out as opaque `CpgirGraph` pointers that the caller
//! releases with `cpgir_graph_free`. Every entry point returns a
//! `CpgirStatus`; the message for the last failure on the calling thread is
//! available from `cpgir_last_error`. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cpgir::analysis::run_rule;
use cpgir::export::export_json;
use cpgir::passes::PassPipeline;
use cpgir::Translation;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpgirStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    /// Unbalanced braces; the only fatal parse outcome.
    ParseError = 3,
    UnknownPass = 4,
    UnknownRule = 5,
    /// The buffer was too small; the required size has been written back.
    BufferTooSmall = 6,
    Panic = 7,
}

/// Opaque translated graph.
pub struct CpgirGraph {
    inner: Translation,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CpgirStats {
    pub node_count: u64,
    pub function_count: u64,
    pub problem_node_count: u64,
    /// Sum of the recorded phase times.
    pub total_ms: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: CpgirStatus, msg: impl Into<String>) -> CpgirStatus {
    let msg = CString::new(msg.into().replace('\0', "\\0")).expect("nul bytes replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
    status
}

fn guard(f: impl FnOnce() -> CpgirStatus) -> CpgirStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(CpgirStatus::Panic, "internal panic"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, CpgirStatus> {
    if p.is_null() {
        return Err(fail(CpgirStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|e| fail(CpgirStatus::InvalidUtf8, format!("{what}: {e}")))
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

/// Translates NUL-terminated LLVM-IR text. `passes` takes the same syntax as
/// the CLI (`default`, `all`, `none` or a comma list) and may be null for the
/// default pipeline. On success `*out` owns a new graph.
///
/// # Safety
/// `source`, `name` and a non-null `passes` must be valid C strings; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn cpgir_translate(
    source: *const c_char,
    name: *const c_char,
    passes: *const c_char,
    out: *mut *mut CpgirGraph,
) -> CpgirStatus {
    guard(|| {
        if out.is_null() {
            return fail(CpgirStatus::NullArgument, "out is null");
        }
        *out = ptr::null_mut();
        let source = tri!(text(source, "source"));
        let name = tri!(text(name, "name"));
        let pipeline = if passes.is_null() {
            PassPipeline::default()
        } else {
            match PassPipeline::parse(tri!(text(passes, "passes"))) {
                Ok(p) => p,
                Err(e) => return fail(CpgirStatus::UnknownPass, e.to_string()),
            }
        };
        match cpgir::translate(source, name, &pipeline) {
            Ok(t) => {
                *out = Box::into_raw(Box::new(CpgirGraph { inner: t }));
                CpgirStatus::Ok
            }
            Err(e) => fail(CpgirStatus::ParseError, e.to_string()),
        }
    })
}

/// Releases a graph. Null is ignored.
///
/// # Safety
/// `graph` must come from `cpgir_translate` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cpgir_graph_free(graph: *mut CpgirGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// # Safety
/// `graph` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cpgir_stats(graph: *const CpgirGraph, out: *mut CpgirStats) -> CpgirStatus {
    guard(|| {
        let (Some(g), false) = (graph.as_ref(), out.is_null()) else {
            return fail(CpgirStatus::NullArgument, "graph or out is null");
        };
        let s = g.inner.graph.stats();
        *out = CpgirStats {
            node_count: s.node_count as u64,
            function_count: s.function_count as u64,
            problem_node_count: s.problem_node_count as u64,
            total_ms: s.total_millis(),
        };
        CpgirStatus::Ok
    })
}

/// Writes the JSON export into `buf`, without a terminating NUL. `*len` always
/// receives the full size, so a call with a null `buf` sizes the buffer.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cpgir_export_json(
    graph: *const CpgirGraph,
    buf: *mut u8,
    cap: usize,
    len: *mut usize,
) -> CpgirStatus {
    guard(|| {
        let (Some(g), false) = (graph.as_ref(), len.is_null()) else {
            return fail(CpgirStatus::NullArgument, "graph or len is null");
        };
        let bytes = export_json(&g.inner.graph);
        *len = bytes.len();
        if buf.is_null() || cap < bytes.len() {
            return fail(CpgirStatus::BufferTooSmall, format!("need {} bytes", bytes.len()));
        }
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
        CpgirStatus::Ok
    })
}

/// Counts the findings of one detector, e.g. `crypto-misuse`.
///
/// # Safety
/// `graph` must be a live handle, `rule` a C string and `count` writable.
#[no_mangle]
pub unsafe extern "C" fn cpgir_count_findings(
    graph: *const CpgirGraph,
    rule: *const c_char,
    count: *mut usize,
) -> CpgirStatus {
    guard(|| {
        let (Some(g), false) = (graph.as_ref(), count.is_null()) else {
            return fail(CpgirStatus::NullArgument, "graph or count is null");
        };
        let rule = tri!(text(rule, "rule"));
        match run_rule(&g.inner.graph, rule) {
            Some(f) => {
                *count = f.len();
                CpgirStatus::Ok
            }
            None => fail(CpgirStatus::UnknownRule, format!("unknown rule `{rule}`")),
        }
    })
}

/// Message for the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cpgir_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static C string.
#[no_mangle]
pub extern "C" fn cpgir_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
