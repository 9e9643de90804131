use std::ffi::{CStr, CString};
use std::ptr;

use cpgir::passes::PassPipeline;
use cpgir_ffi::*;

const MD5: &str = include_str!("../../core/tests/fixtures/cipher_md5.ll");

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(cpgir_last_error()) }.to_string_lossy().into_owned()
}

fn translate(src: &str, passes: Option<&str>) -> Result<*mut CpgirGraph, CpgirStatus> {
    let (src, name) = (c(src), c("t.ll"));
    let passes = passes.map(c);
    let mut g = ptr::null_mut();
    let status = unsafe { cpgir_translate(src.as_ptr(), name.as_ptr(), passes.as_ref().map_or(ptr::null(), |p| p.as_ptr()), &mut g) };
    match status {
        CpgirStatus::Ok => Ok(g),
        s => {
            assert!(g.is_null());
            Err(s)
        }
    }
}

#[test]
fn stats_match_the_library() {
    let expected = cpgir::translate(MD5, "t.ll", &PassPipeline::default()).unwrap().graph;
    let g = translate(MD5, None).unwrap();
    let mut s = CpgirStats::default();
    assert_eq!(unsafe { cpgir_stats(g, &mut s) }, CpgirStatus::Ok);
    assert_eq!(s.node_count as usize, expected.stats().node_count);
    assert_eq!(s.function_count as usize, expected.stats().function_count);
    assert_eq!(s.problem_node_count, 0);
    assert!(s.total_ms >= 0.0);
    unsafe { cpgir_graph_free(g) };
}

#[test]
fn json_export_sizes_then_fills() {
    let expected = cpgir::export::export_json(&cpgir::translate(MD5, "t.ll", &PassPipeline::all()).unwrap().graph);
    let g = translate(MD5, Some("all")).unwrap();
    let mut len = 0usize;
    assert_eq!(unsafe { cpgir_export_json(g, ptr::null_mut(), 0, &mut len) }, CpgirStatus::BufferTooSmall);
    assert_eq!(len, expected.len());
    let mut small = vec![0u8; len - 1];
    assert_eq!(unsafe { cpgir_export_json(g, small.as_mut_ptr(), small.len(), &mut len) }, CpgirStatus::BufferTooSmall);
    let mut buf = vec![0u8; len];
    assert_eq!(unsafe { cpgir_export_json(g, buf.as_mut_ptr(), buf.len(), &mut len) }, CpgirStatus::Ok);
    assert_eq!(buf, expected);
    unsafe { cpgir_graph_free(g) };
}

#[test]
fn findings_and_unknown_rule() {
    let g = translate(MD5, None).unwrap();
    let mut n = 0usize;
    let rule = c("crypto-misuse");
    assert_eq!(unsafe { cpgir_count_findings(g, rule.as_ptr(), &mut n) }, CpgirStatus::Ok);
    assert_eq!(n, 1);
    let bogus = c("nope");
    assert_eq!(unsafe { cpgir_count_findings(g, bogus.as_ptr(), &mut n) }, CpgirStatus::UnknownRule);
    assert!(last_error().contains("nope"));
    unsafe { cpgir_graph_free(g) };
}

#[test]
fn error_codes() {
    assert_eq!(translate("define void @f() {\n", None), Err(CpgirStatus::ParseError));
    assert!(!last_error().is_empty());
    assert_eq!(translate("", Some("eog,mem2reg")), Err(CpgirStatus::UnknownPass));
    assert!(last_error().contains("mem2reg"));
    let mut g = ptr::null_mut();
    let name = c("t.ll");
    assert_eq!(unsafe { cpgir_translate(ptr::null(), name.as_ptr(), ptr::null(), &mut g) }, CpgirStatus::NullArgument);
    assert_eq!(unsafe { cpgir_translate(name.as_ptr(), name.as_ptr(), ptr::null(), ptr::null_mut()) }, CpgirStatus::NullArgument);
    let bad = [0xffu8, 0];
    assert_eq!(unsafe { cpgir_translate(bad.as_ptr().cast(), name.as_ptr(), ptr::null(), &mut g) }, CpgirStatus::InvalidUtf8);
    let mut s = CpgirStats::default();
    assert_eq!(unsafe { cpgir_stats(ptr::null(), &mut s) }, CpgirStatus::NullArgument);
    unsafe { cpgir_graph_free(ptr::null_mut()) };
}

#[test]
fn version_is_the_package_version() {
    let v = unsafe { CStr::from_ptr(cpgir_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
