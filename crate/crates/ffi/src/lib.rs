//! C ABI over `bethe-loops`.
//!
//! Graphs and message sets are opaque heap handles released with their
//! `*_free` function. Every fallible call returns a [`BlStatus`]; on failure
//! [`bl_last_error`] describes the most recent error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bethe_loops::bethe::bethe_free_energy;
use bethe_loops::bp::{bp_solve, BpOptions, MessageSet};
use bethe_loops::channel::half_llr;
use bethe_loops::exact::{log_partition, ExactCaps};
use bethe_loops::loops::loop_series_sum;
use bethe_loops::polymer::exponent_c;
use bethe_loops::tanner::{generate_regular, load_alist, solve_lambda0};
use bethe_loops::{Error, TannerGraph};

/// Opaque Tanner graph.
pub struct BlGraph(TannerGraph);

/// Opaque set of BP messages on the edges of one graph.
pub struct BlMessages(MessageSet);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Infeasible = 3,
    CapExceeded = 4,
    Parse = 5,
    NoRoot = 6,
    Singular = 7,
    Inconsistent = 8,
    Panic = 9,
    Other = 10,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> BlStatus {
    match e {
        Error::InvalidParameter(_) | Error::Config(_) => BlStatus::InvalidArgument,
        Error::Infeasible(_) | Error::RejectionBudget(_) => BlStatus::Infeasible,
        Error::CapExceeded { .. } => BlStatus::CapExceeded,
        Error::Alist { .. } => BlStatus::Parse,
        Error::NoRoot(_) => BlStatus::NoRoot,
        Error::Singular(_) => BlStatus::Singular,
        Error::Inconsistent(_) => BlStatus::Inconsistent,
        _ => BlStatus::Other,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> BlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BlStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            BlStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("panic inside bethe-loops".into());
            BlStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failed call on this thread; empty if none. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Draws a uniformly random simple `(l, r)`-biregular graph on `n` variables.
///
/// # Safety
/// `out_graph` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bl_graph_generate(
    n: usize,
    l: usize,
    r: usize,
    seed: u64,
    out_graph: *mut *mut BlGraph,
) -> BlStatus {
    guard(|| {
        let slot = out(out_graph, "out_graph")?;
        *slot = Box::into_raw(Box::new(BlGraph(generate_regular(n, l, r, seed)?)));
        Ok(())
    })
}

/// Parses a graph in alist format from a NUL-terminated string.
///
/// # Safety
/// `text` must be NUL-terminated and `out_graph` valid.
#[no_mangle]
pub unsafe extern "C" fn bl_graph_from_alist(
    text: *const c_char,
    out_graph: *mut *mut BlGraph,
) -> BlStatus {
    guard(|| {
        if text.is_null() {
            return Err(Fail::Null("text"));
        }
        let slot = out(out_graph, "out_graph")?;
        let s = CStr::from_ptr(text).to_str().map_err(|_| Error::Alist {
            line: 0,
            msg: "input is not UTF-8".into(),
        })?;
        *slot = Box::into_raw(Box::new(BlGraph(load_alist(s)?)));
        Ok(())
    })
}

/// # Safety
/// `graph` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn bl_graph_free(graph: *mut BlGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Writes the numbers of variables, checks and edges; any output may be null.
///
/// # Safety
/// `graph` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bl_graph_sizes(
    graph: *const BlGraph,
    num_vars: *mut usize,
    num_checks: *mut usize,
    num_edges: *mut usize,
) -> BlStatus {
    guard(|| {
        let g = &deref(graph, "graph")?.0;
        for (p, v) in [
            (num_vars, g.num_vars()),
            (num_checks, g.num_checks()),
            (num_edges, g.num_edges()),
        ] {
            if let Some(slot) = p.as_mut() {
                *slot = v;
            }
        }
        Ok(())
    })
}

/// GF(2) rank of the parity-check matrix.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bl_graph_rank(graph: *const BlGraph, rank: *mut usize) -> BlStatus {
    guard(|| {
        let g = &deref(graph, "graph")?.0;
        *out(rank, "rank")? = g.parity_check_matrix().rank();
        Ok(())
    })
}

/// `½ ln((1−p)/p)`.
///
/// # Safety
/// `h` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bl_half_llr(p: f64, h: *mut f64) -> BlStatus {
    guard(|| {
        *out(h, "h")? = half_llr(p)?;
        Ok(())
    })
}

/// Runs BP from the default start. Non-convergence is reported through
/// `converged`, not as an error. Zero `tol`/`max_iter` select the defaults.
///
/// # Safety
/// `fields` must hold `n_fields` values; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bl_bp_solve(
    graph: *const BlGraph,
    fields: *const f64,
    n_fields: usize,
    tol: f64,
    max_iter: usize,
    damping: f64,
    out_messages: *mut *mut BlMessages,
    converged: *mut bool,
    iterations: *mut usize,
) -> BlStatus {
    guard(|| {
        let g = &deref(graph, "graph")?.0;
        let fields = slice(fields, n_fields, "fields")?;
        let slot = out(out_messages, "out_messages")?;
        let mut opts = BpOptions {
            damping,
            ..BpOptions::default()
        };
        if tol > 0.0 {
            opts.tol = tol;
        }
        if max_iter > 0 {
            opts.max_iter = max_iter;
        }
        let sol = bp_solve(g, fields, &opts)?;
        if let Some(c) = converged.as_mut() {
            *c = sol.converged;
        }
        if let Some(it) = iterations.as_mut() {
            *it = sol.iterations;
        }
        *slot = Box::into_raw(Box::new(BlMessages(sol.messages)));
        Ok(())
    })
}

/// Copies `η` and `η̂` (one value per edge each); either output may be null.
///
/// # Safety
/// Non-null outputs must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn bl_messages_get(
    messages: *const BlMessages,
    eta: *mut f64,
    eta_hat: *mut f64,
    len: usize,
) -> BlStatus {
    guard(|| {
        let m = &deref(messages, "messages")?.0;
        if len != m.len() {
            return Err(
                Error::InvalidParameter(format!("{len} slots for {} edges", m.len())).into(),
            );
        }
        if !eta.is_null() {
            ptr::copy_nonoverlapping(m.eta.as_ptr(), eta, len);
        }
        if !eta_hat.is_null() {
            ptr::copy_nonoverlapping(m.eta_hat.as_ptr(), eta_hat, len);
        }
        Ok(())
    })
}

/// # Safety
/// `messages` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn bl_messages_free(messages: *mut BlMessages) {
    if !messages.is_null() {
        drop(Box::from_raw(messages));
    }
}

/// Bethe free energy per variable of a message set.
///
/// # Safety
/// Pointers must be valid and `fields` hold `n_fields` values.
#[no_mangle]
pub unsafe extern "C" fn bl_bethe_free_energy(
    graph: *const BlGraph,
    fields: *const f64,
    n_fields: usize,
    messages: *const BlMessages,
    value: *mut f64,
) -> BlStatus {
    guard(|| {
        let g = &deref(graph, "graph")?.0;
        let m = &deref(messages, "messages")?.0;
        let fields = slice(fields, n_fields, "fields")?;
        *out(value, "value")? = bethe_free_energy(g, fields, m)?;
        Ok(())
    })
}

/// Exact `ln Z` by codeword enumeration; `max_kernel_dim` 0 selects the default cap.
///
/// # Safety
/// Pointers must be valid and `fields` hold `n_fields` values.
#[no_mangle]
pub unsafe extern "C" fn bl_log_partition(
    graph: *const BlGraph,
    fields: *const f64,
    n_fields: usize,
    max_kernel_dim: usize,
    value: *mut f64,
) -> BlStatus {
    guard(|| {
        let g = &deref(graph, "graph")?.0;
        let fields = slice(fields, n_fields, "fields")?;
        let mut caps = ExactCaps::default();
        if max_kernel_dim > 0 {
            caps.max_kernel_dim = max_kernel_dim;
        }
        *out(value, "value")? = log_partition(g, fields, &caps)?;
        Ok(())
    })
}

/// Sum of all generalized-loop activities, empty loop included.
///
/// # Safety
/// Pointers must be valid and `fields` hold `n_fields` values.
#[no_mangle]
pub unsafe extern "C" fn bl_loop_series_sum(
    graph: *const BlGraph,
    fields: *const f64,
    n_fields: usize,
    messages: *const BlMessages,
    value: *mut f64,
) -> BlStatus {
    guard(|| {
        let g = &deref(graph, "graph")?.0;
        let m = &deref(messages, "messages")?.0;
        let fields = slice(fields, n_fields, "fields")?;
        *out(value, "value")? = loop_series_sum(g, fields, m)?;
        Ok(())
    })
}

/// Smallest positive root `λ0` of the expansion exponent and its residual.
///
/// # Safety
/// `lambda0` must be valid; `residual` may be null.
#[no_mangle]
pub unsafe extern "C" fn bl_solve_lambda0(
    l: usize,
    r: usize,
    kappa: f64,
    lambda0: *mut f64,
    residual: *mut f64,
) -> BlStatus {
    guard(|| {
        let slot = out(lambda0, "lambda0")?;
        let sol = solve_lambda0(l, r, kappa)?;
        *slot = sol.lambda0;
        if let Some(res) = residual.as_mut() {
            *res = sol.residual;
        }
        Ok(())
    })
}

/// Polymer-bound exponent `c(l, r, κ)`.
///
/// # Safety
/// `c` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bl_exponent_c(l: usize, r: usize, kappa: f64, c: *mut f64) -> BlStatus {
    guard(|| {
        *out(c, "c")? = exponent_c(l, r, kappa)?;
        Ok(())
    })
}
