use std::ffi::{CStr, CString};
use std::ptr;

use bethe_loops_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(bl_last_error()) }
        .to_string_lossy()
        .into_owned()
}

fn graph(n: usize, l: usize, r: usize, seed: u64) -> *mut BlGraph {
    let mut g = ptr::null_mut();
    assert_eq!(
        unsafe { bl_graph_generate(n, l, r, seed, &mut g) },
        BlStatus::Ok
    );
    g
}

#[test]
fn pipeline_matches_library() {
    let g = graph(8, 3, 6, 2);
    let (mut n, mut m, mut e, mut rank) = (0, 0, 0, 0);
    unsafe {
        assert_eq!(bl_graph_sizes(g, &mut n, &mut m, &mut e), BlStatus::Ok);
        assert_eq!(bl_graph_rank(g, &mut rank), BlStatus::Ok);
    }
    assert_eq!((n, m, e), (8, 4, 24));
    assert!(rank <= 4);

    let mut h = 0.0;
    assert_eq!(unsafe { bl_half_llr(0.3, &mut h) }, BlStatus::Ok);
    let fields: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { -h } else { h }).collect();
    let mut msgs = ptr::null_mut();
    let (mut converged, mut iters) = (false, 0);
    let status = unsafe {
        bl_bp_solve(
            g,
            fields.as_ptr(),
            n,
            0.0,
            0,
            0.5,
            &mut msgs,
            &mut converged,
            &mut iters,
        )
    };
    assert_eq!(status, BlStatus::Ok);
    assert!(converged && iters > 0);

    let mut eta = vec![0.0; e];
    assert_eq!(
        unsafe { bl_messages_get(msgs, eta.as_mut_ptr(), ptr::null_mut(), e) },
        BlStatus::Ok
    );
    assert!(eta.iter().all(|x| x.is_finite()));

    let (mut f, mut ln_z, mut sum) = (0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(
            bl_bethe_free_energy(g, fields.as_ptr(), n, msgs, &mut f),
            BlStatus::Ok
        );
        assert_eq!(
            bl_log_partition(g, fields.as_ptr(), n, 0, &mut ln_z),
            BlStatus::Ok
        );
        assert_eq!(
            bl_loop_series_sum(g, fields.as_ptr(), n, msgs, &mut sum),
            BlStatus::Ok
        );
    }
    assert!((ln_z / n as f64 - f - sum.ln() / n as f64).abs() < 1e-9);
    unsafe {
        bl_messages_free(msgs);
        bl_graph_free(g);
    }
}

#[test]
fn errors_set_status_and_message() {
    let mut g = ptr::null_mut();
    assert_eq!(
        unsafe { bl_graph_generate(7, 3, 6, 1, &mut g) },
        BlStatus::Infeasible
    );
    assert!(g.is_null());
    assert!(!last_error().is_empty());

    let mut h = 0.0;
    assert_eq!(
        unsafe { bl_half_llr(1.5, &mut h) },
        BlStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { bl_half_llr(0.3, ptr::null_mut()) },
        BlStatus::NullPointer
    );
    assert!(last_error().contains("null pointer"));

    let mut rank = 0;
    assert_eq!(
        unsafe { bl_graph_rank(ptr::null(), &mut rank) },
        BlStatus::NullPointer
    );

    let g = graph(6, 3, 6, 1);
    let mut msgs = ptr::null_mut();
    let short = [0.1; 3];
    let status = unsafe {
        bl_bp_solve(
            g,
            short.as_ptr(),
            3,
            0.0,
            0,
            0.5,
            &mut msgs,
            ptr::null_mut(),
            ptr::null_mut(),
        )
    };
    assert_eq!(status, BlStatus::InvalidArgument);
    assert!(msgs.is_null());
    unsafe {
        bl_graph_free(g);
        bl_graph_free(ptr::null_mut());
        bl_messages_free(ptr::null_mut());
    }
}

#[test]
fn alist_round_trip() {
    let g = graph(8, 3, 4, 3);
    let (mut n, mut m) = (0, 0);
    unsafe { bl_graph_sizes(g, &mut n, &mut m, ptr::null_mut()) };
    let lib = bethe_loops::tanner::generate_regular(8, 3, 4, 3).unwrap();
    let text = CString::new(bethe_loops::tanner::save_alist(&lib)).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { bl_graph_from_alist(text.as_ptr(), &mut h) },
        BlStatus::Ok
    );
    let (mut n2, mut m2) = (0, 0);
    unsafe { bl_graph_sizes(h, &mut n2, &mut m2, ptr::null_mut()) };
    assert_eq!((n, m), (n2, m2));
    let bad = CString::new("not an alist").unwrap();
    let mut k = ptr::null_mut();
    assert_eq!(
        unsafe { bl_graph_from_alist(bad.as_ptr(), &mut k) },
        BlStatus::Parse
    );
    unsafe {
        bl_graph_free(g);
        bl_graph_free(h);
    }
}

#[test]
fn expansion_constants() {
    let (mut lambda0, mut residual, mut c) = (0.0, 1.0, 0.0);
    unsafe {
        assert_eq!(
            bl_solve_lambda0(3, 6, 0.5, &mut lambda0, &mut residual),
            BlStatus::Ok
        );
        assert_eq!(bl_exponent_c(3, 6, 0.5, &mut c), BlStatus::Ok);
    }
    assert!(lambda0 > 5e-4 && residual < 1e-8);
    assert!((c - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(
        unsafe { bl_solve_lambda0(3, 6, 0.9, &mut lambda0, ptr::null_mut()) },
        BlStatus::NoRoot
    );
}
