//! C ABI for the toridimer library.
//!
//! Objects are opaque handles created by `td_*_new`/`td_graph_*` and released with the
//! matching `td_*_free`. Every fallible call returns a [`TdStatus`]; on failure the message is
//! available from [`td_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use toridimer::cli::builtin_graph;
use toridimer::cli::verify::run_suite;
use toridimer::kasteleyn::{char_poly, partition_function};
use toridimer::laplacian::kernel::EdgeKernel;
use toridimer::lattice::{parse_graph_spec, PeriodicGraph, TorusInstance, WiredInstance};
use toridimer::numeric::{format_rational, rat_to_f64, Rat};
use toridimer::sampler::{wilson_sample, Network, ScanOrder, TorusEnsemble};
use toridimer::temperley::DEFAULT_CAP;
use toridimer::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Schema = 3,
    InvalidInput = 4,
    Numeric = 5,
    CapExceeded = 6,
    Invariant = 7,
    Io = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Connectivity and height statistics of a torus in a magnetic field.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TdStats {
    pub e_k: f64,
    pub e_hx: f64,
    pub e_hy: f64,
    pub p_connect: f64,
}

pub struct TdGraph {
    inner: PeriodicGraph,
}

pub struct TdTorus {
    inner: TorusInstance,
    ensemble: Option<TorusEnsemble>,
}

pub struct TdWired {
    inner: WiredInstance,
    net: Network,
    kernel: Option<EdgeKernel<Rat>>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> TdStatus {
    match e {
        Error::Schema(_) | Error::NegativeWeight { .. } | Error::NonPlanar { .. } | Error::Disconnected(_) => {
            TdStatus::Schema
        }
        Error::InvalidSize(_) | Error::InvalidInput(_) | Error::Dimension(_) => TdStatus::InvalidInput,
        Error::Singular | Error::Interpolation(_) | Error::ZeroPolynomial => TdStatus::Numeric,
        Error::CapExceeded(_) => TdStatus::CapExceeded,
        Error::Io(_) => TdStatus::Io,
        Error::Json(_) => TdStatus::Schema,
        _ => TdStatus::Invariant,
    }
}

struct Fail(TdStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

type FfiResult<T> = std::result::Result<T, Fail>;

/// Runs `f`, converting errors and panics into a status plus last-error message.
fn guard(f: impl FnOnce() -> FfiResult<()>) -> TdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TdStatus::Ok,
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            TdStatus::Panic
        }
    }
}

fn null() -> Fail {
    Fail(TdStatus::NullPointer, "null pointer argument".into())
}

unsafe fn str_arg<'a>(p: *const c_char) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(TdStatus::InvalidUtf8, "argument is not UTF-8".into()))
}

unsafe fn obj<'a, T>(p: *const T) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(null)
}

unsafe fn obj_mut<'a, T>(p: *mut T) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or_else(null)
}

unsafe fn put<T>(out: *mut T, v: T) -> FfiResult<()> {
    if out.is_null() {
        return Err(null());
    }
    out.write(v);
    Ok(())
}

/// Copies `s` with a terminating NUL into `buf`; `needed` receives the full size in bytes.
unsafe fn write_str(s: &str, buf: *mut c_char, cap: usize, needed: *mut usize) -> FfiResult<()> {
    let len = s.len() + 1;
    if !needed.is_null() {
        needed.write(len);
    }
    if buf.is_null() || cap < len {
        return Err(Fail(TdStatus::BufferTooSmall, format!("buffer of {cap} bytes, {len} needed")));
    }
    ptr::copy_nonoverlapping(s.as_ptr() as *const c_char, buf, s.len());
    buf.add(s.len()).write(0);
    Ok(())
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn td_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the last failed call on this thread, or NULL. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn td_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn td_clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Parses a JSON graph spec.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn td_graph_from_json(json: *const c_char, out: *mut *mut TdGraph) -> TdStatus {
    guard(|| {
        let g = parse_graph_spec(str_arg(json)?)?;
        put(out, boxed(TdGraph { inner: g }))
    })
}

/// Built-in graph: `uniform`, `drifted` or `drifted:a,b,c,d`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn td_graph_builtin(name: *const c_char, out: *mut *mut TdGraph) -> TdStatus {
    guard(|| {
        let g = builtin_graph(str_arg(name)?)?;
        put(out, boxed(TdGraph { inner: g }))
    })
}

/// # Safety
/// `g` must come from a `td_graph_*` constructor (or be NULL) and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn td_graph_free(g: *mut TdGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Runs the identity suite; `passed` receives 1 or 0 and `buf` the JSON report.
///
/// # Safety
/// `g` and `passed` must be valid; `buf` may be NULL to query `needed`.
#[no_mangle]
pub unsafe extern "C" fn td_graph_verify(
    g: *const TdGraph,
    exact: bool,
    passed: *mut i32,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> TdStatus {
    guard(|| {
        let r = run_suite(&obj(g)?.inner, exact);
        put(passed, r.passed as i32)?;
        let text = serde_json::to_string(&r).map_err(Error::from)?;
        write_str(&text, buf, cap, needed)
    })
}

/// # Safety
/// `g` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn td_torus_new(g: *const TdGraph, n: usize, out: *mut *mut TdTorus) -> TdStatus {
    guard(|| {
        let t = TorusInstance::new(&obj(g)?.inner, n)?;
        put(out, boxed(TdTorus { inner: t, ensemble: None }))
    })
}

/// # Safety
/// `t` must come from `td_torus_new` (or be NULL) and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn td_torus_free(t: *mut TdTorus) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Characteristic polynomial as text, e.g. `-z^-1 - w^-1 + 4 - w - z`.
///
/// # Safety
/// `t` must be valid; `buf` may be NULL to query `needed`.
#[no_mangle]
pub unsafe extern "C" fn td_torus_charpoly(t: *const TdTorus, buf: *mut c_char, cap: usize, needed: *mut usize) -> TdStatus {
    guard(|| {
        let p = char_poly(&obj(t)?.inner)?.poly;
        write_str(&p.to_string(), buf, cap, needed)
    })
}

/// Partition function as an exact rational `p/q` (or integer) string.
///
/// # Safety
/// `t` must be valid; `buf` may be NULL to query `needed`.
#[no_mangle]
pub unsafe extern "C" fn td_torus_partition_function(
    t: *const TdTorus,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> TdStatus {
    guard(|| {
        let pf = partition_function(&obj(t)?.inner, DEFAULT_CAP)?;
        write_str(&format_rational(&pf.value), buf, cap, needed)
    })
}

/// Exhaustive statistics at field `(bx, by)`; the ensemble is enumerated on first use.
///
/// # Safety
/// `t` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn td_torus_stats(t: *mut TdTorus, bx: f64, by: f64, out: *mut TdStats) -> TdStatus {
    guard(|| {
        let t = obj_mut(t)?;
        if !(bx.is_finite() && by.is_finite()) {
            return Err(Fail(TdStatus::InvalidInput, "field must be finite".into()));
        }
        if t.ensemble.is_none() {
            t.ensemble = Some(TorusEnsemble::new(&t.inner, DEFAULT_CAP)?);
        }
        let s = t.ensemble.as_ref().expect("ensemble").stats([bx, by]);
        put(out, TdStats { e_k: s.e_k, e_hx: s.e_h[0], e_hy: s.e_h[1], p_connect: s.p_connect })
    })
}

/// # Safety
/// `g` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn td_wired_new(g: *const TdGraph, n: usize, out: *mut *mut TdWired) -> TdStatus {
    guard(|| {
        let w = WiredInstance::new(&obj(g)?.inner, n)?;
        let net = Network::from_wired(&w)?;
        put(out, boxed(TdWired { inner: w, net, kernel: None }))
    })
}

/// # Safety
/// `w` must come from `td_wired_new` (or be NULL) and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn td_wired_free(w: *mut TdWired) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// Number of vertices including the root; the length of a parent array.
///
/// # Safety
/// `w` must be valid.
#[no_mangle]
pub unsafe extern "C" fn td_wired_vertex_count(w: *const TdWired) -> usize {
    w.as_ref().map_or(0, |w| w.net.vertex_count())
}

/// Number of directed half-edges; valid half-edge ids are `0..count`.
///
/// # Safety
/// `w` must be valid.
#[no_mangle]
pub unsafe extern "C" fn td_wired_half_edge_count(w: *const TdWired) -> usize {
    w.as_ref().map_or(0, |w| 2 * w.inner.primal().edge_count())
}

/// Wilson spanning tree for `(seed, stream)`: `parent[v]` is the outgoing half-edge of `v`,
/// `-1` at the root.
///
/// # Safety
/// `w` must be valid and `parent` hold `len` entries.
#[no_mangle]
pub unsafe extern "C" fn td_wired_wilson(
    w: *const TdWired,
    seed: u64,
    stream: u64,
    parent: *mut i64,
    len: usize,
) -> TdStatus {
    guard(|| {
        let w = obj(w)?;
        if parent.is_null() {
            return Err(null());
        }
        let nv = w.net.vertex_count();
        if len < nv {
            return Err(Fail(TdStatus::BufferTooSmall, format!("parent array of {len}, {nv} needed")));
        }
        let t = wilson_sample(&w.net, seed, stream, ScanOrder::LowestFirst)?;
        let out = std::slice::from_raw_parts_mut(parent, nv);
        for (slot, h) in out.iter_mut().zip(&t.parent) {
            *slot = h.map_or(-1, |h| h as i64);
        }
        Ok(())
    })
}

/// Probability that all listed directed half-edges lie in the wired spanning tree.
///
/// # Safety
/// `w` must be valid, `halves` hold `count` entries and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn td_wired_edge_probability(
    w: *mut TdWired,
    halves: *const usize,
    count: usize,
    out: *mut f64,
) -> TdStatus {
    guard(|| {
        let w = obj_mut(w)?;
        if halves.is_null() && count > 0 {
            return Err(null());
        }
        let hs: &[usize] = if count == 0 { &[] } else { std::slice::from_raw_parts(halves, count) };
        let nh = 2 * w.inner.primal().edge_count();
        if let Some(&h) = hs.iter().find(|&&h| h >= nh) {
            return Err(Fail(TdStatus::InvalidInput, format!("half-edge {h} out of range 0..{nh}")));
        }
        if w.kernel.is_none() {
            w.kernel = Some(EdgeKernel::wired(&w.inner)?);
        }
        let p = w.kernel.as_ref().expect("kernel").directed_probability(&w.inner.double, hs)?;
        put(out, rat_to_f64(&p))
    })
}
