use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use toridimer_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = td_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn graph(name: &str) -> *mut TdGraph {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { td_graph_builtin(cstr(name).as_ptr(), &mut g) }, TdStatus::Ok);
    g
}

fn torus(g: *const TdGraph, n: usize) -> *mut TdTorus {
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { td_torus_new(g, n, &mut t) }, TdStatus::Ok);
    t
}

fn read_string(mut f: impl FnMut(*mut c_char, usize, *mut usize) -> TdStatus) -> String {
    let mut needed = 0usize;
    assert_eq!(f(ptr::null_mut(), 0, &mut needed), TdStatus::BufferTooSmall);
    let mut buf = vec![0 as c_char; needed];
    assert_eq!(f(buf.as_mut_ptr(), needed, &mut needed), TdStatus::Ok);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_string()
}

#[test]
fn charpoly_and_partition_function() {
    let g = graph("uniform");
    let t = torus(g, 1);
    assert_eq!(read_string(|b, c, n| unsafe { td_torus_charpoly(t, b, c, n) }), "-z^-1 - w^-1 + 4 - w - z");
    assert_eq!(read_string(|b, c, n| unsafe { td_torus_partition_function(t, b, c, n) }), "8");
    unsafe {
        td_torus_free(t);
        td_graph_free(g);
    }
}

#[test]
fn graph_from_json_and_errors() {
    let spec = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/drifted_1234.json")).unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { td_graph_from_json(cstr(&spec).as_ptr(), &mut g) }, TdStatus::Ok);
    let t = torus(g, 1);
    assert_eq!(read_string(|b, c, n| unsafe { td_torus_charpoly(t, b, c, n) }), "-4*z^-1 - 3*w^-1 + 10 - w - 2*z");

    let mut bad = ptr::null_mut();
    assert_eq!(unsafe { td_graph_from_json(cstr("{\"name\": 1}").as_ptr(), &mut bad) }, TdStatus::Schema);
    assert!(bad.is_null());
    assert!(last_error().contains("graph spec"));
    assert_eq!(unsafe { td_graph_builtin(ptr::null(), &mut bad) }, TdStatus::NullPointer);
    assert_eq!(unsafe { td_graph_builtin(cstr("drifted:1,2").as_ptr(), &mut bad) }, TdStatus::InvalidInput);
    let mut t0 = ptr::null_mut();
    assert_eq!(unsafe { td_torus_new(g, 0, &mut t0) }, TdStatus::InvalidInput);
    td_clear_last_error();
    assert!(td_last_error_message().is_null());
    unsafe {
        td_torus_free(t);
        td_graph_free(g);
        td_graph_free(ptr::null_mut());
    }
}

#[test]
fn torus_statistics() {
    let g = graph("drifted");
    let t = torus(g, 2);
    let mut s0 = TdStats::default();
    let mut s1 = TdStats::default();
    unsafe {
        assert_eq!(td_torus_stats(t, 0.0, 0.0, &mut s0), TdStatus::Ok);
        assert_eq!(td_torus_stats(t, 0.0, 2.0, &mut s1), TdStatus::Ok);
        assert_eq!(td_torus_stats(t, f64::NAN, 0.0, &mut s1), TdStatus::InvalidInput);
    }
    assert!((s0.e_hx - 36.0 / 155.0).abs() < 1e-12 && (s0.e_hy - 28.0 / 155.0).abs() < 1e-12);
    assert!(s1.p_connect < s0.p_connect);
    unsafe {
        td_torus_free(t);
        td_graph_free(g);
    }
}

#[test]
fn wired_sampling_and_probabilities() {
    let g = graph("drifted");
    let mut w = ptr::null_mut();
    assert_eq!(unsafe { td_wired_new(g, 3, &mut w) }, TdStatus::Ok);
    let nv = unsafe { td_wired_vertex_count(w) };
    let nh = unsafe { td_wired_half_edge_count(w) };
    let mut a = vec![0i64; nv];
    let mut b = vec![0i64; nv];
    unsafe {
        assert_eq!(td_wired_wilson(w, 5, 0, a.as_mut_ptr(), nv), TdStatus::Ok);
        assert_eq!(td_wired_wilson(w, 5, 0, b.as_mut_ptr(), nv), TdStatus::Ok);
        assert_eq!(td_wired_wilson(w, 5, 0, b.as_mut_ptr(), nv - 1), TdStatus::BufferTooSmall);
    }
    assert_eq!(a, b);
    assert_eq!(a.iter().filter(|&&h| h < 0).count(), 1);
    // Every non-root vertex leaves by exactly one half-edge, so the probabilities of the
    // half-edges leaving a vertex sum to 1 over all vertices: total = nv - 1.
    let mut total = 0.0;
    for h in 0..nh {
        let mut p = -1.0;
        assert_eq!(unsafe { td_wired_edge_probability(w, &h, 1, &mut p) }, TdStatus::Ok);
        assert!((0.0..=1.0).contains(&p));
        total += p;
    }
    assert!((total - (nv - 1) as f64).abs() < 1e-12);
    let mut p = 0.0;
    assert_eq!(unsafe { td_wired_edge_probability(w, &nh, 1, &mut p) }, TdStatus::InvalidInput);
    unsafe {
        td_wired_free(w);
        td_graph_free(g);
    }
}

#[test]
fn verify_report() {
    let g = graph("uniform");
    let mut passed = -1;
    let json = read_string(|b, c, n| unsafe { td_graph_verify(g, true, &mut passed, b, c, n) });
    assert_eq!(passed, 1);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["passed"], true);
    unsafe { td_graph_free(g) };
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(td_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

/// Builds the static library into a separate target dir so the outer build lock is not contended.
fn static_lib() -> PathBuf {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let target = manifest.join("../../target/ffi-c");
    let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".into());
    let status = Command::new(cargo)
        .args(["build", "-p", "toridimer-ffi", "--lib", "--target-dir"])
        .arg(&target)
        .current_dir(manifest)
        .status()
        .expect("cargo available");
    assert!(status.success());
    target.join("debug/libtoridimer_ffi.a")
}

#[test]
fn c_program_links_against_header() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    assert!(include.join("toridimer.h").exists());
    let lib = static_lib();
    assert!(lib.exists(), "missing {}", lib.display());
    let exe = std::env::temp_dir().join(format!("toridimer_smoke_{}", std::process::id()));
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("cc available");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    let _ = std::fs::remove_file(&exe);
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), format!("{} ok\n", env!("CARGO_PKG_VERSION")));
}
