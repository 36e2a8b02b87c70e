use std::ffi::{CStr, CString};
use std::ptr;

use kronmix_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(km_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn generate(spec: &str) -> *mut KmGraph {
    let spec = CString::new(spec).unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(
        unsafe { km_graph_generate(spec.as_ptr(), &mut g) },
        KmStatus::Ok
    );
    g
}

fn walk(spec: &str) -> *mut KmMatrix {
    let g = generate(spec);
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(km_matrix_equal_weight(g, &mut m), KmStatus::Ok);
        km_graph_free(g);
    }
    m
}

#[test]
fn graph_round_trip() {
    let g = generate("cycle:n=7");
    unsafe {
        assert_eq!(km_graph_node_count(g), 7);
        assert_eq!(km_graph_edge_count(g), 14);
        km_graph_free(g);
        assert_eq!(km_graph_node_count(ptr::null()), 0);
        km_graph_free(ptr::null_mut());
    }
}

#[test]
fn edges_and_largest_component() {
    let src = [0usize, 1, 1, 3];
    let dst = [1usize, 0, 2, 4];
    let mut g = ptr::null_mut();
    let mut sub = ptr::null_mut();
    unsafe {
        assert_eq!(
            km_graph_from_edges(5, src.as_ptr(), dst.as_ptr(), 4, true, &mut g),
            KmStatus::Ok
        );
        assert_eq!(km_graph_largest_scc(g, &mut sub), KmStatus::Ok);
        assert_eq!(km_graph_node_count(sub), 2);
        km_graph_free(sub);
        km_graph_free(g);
    }
}

#[test]
fn bad_spec_sets_message() {
    let spec = CString::new("nosuchfamily:n=3").unwrap();
    let mut g = ptr::null_mut();
    let status = unsafe { km_graph_generate(spec.as_ptr(), &mut g) };
    assert_eq!(status, KmStatus::SpecError);
    assert!(g.is_null());
    assert!(!last_error().is_empty());
    let status = unsafe { km_graph_generate(ptr::null(), &mut g) };
    assert_eq!(status, KmStatus::NullPointer);
}

#[test]
fn out_of_range_edge_is_rejected() {
    let src = [0usize];
    let dst = [9usize];
    let mut g = ptr::null_mut();
    let status = unsafe { km_graph_from_edges(3, src.as_ptr(), dst.as_ptr(), 1, true, &mut g) };
    assert_eq!(status, KmStatus::InvalidArgument);
    assert!(last_error().contains("out of range"));
}

#[test]
fn missing_file_is_io_error() {
    let path = CString::new("/nonexistent/edges.txt").unwrap();
    let mut g = ptr::null_mut();
    let status = unsafe { km_graph_load_edgelist(path.as_ptr(), true, &mut g) };
    assert_eq!(status, KmStatus::IoError);
}

#[test]
fn matrix_queries() {
    let m = walk("cycle:n=5");
    unsafe {
        assert_eq!(km_matrix_dim(m), 5);
        let mut pi = [0.0; 5];
        assert_eq!(km_matrix_stationary(m, pi.as_mut_ptr(), 5), KmStatus::Ok);
        for p in pi {
            assert!((p - 0.2).abs() < 1e-12);
        }
        let mut short = [0.0; 2];
        assert_eq!(
            km_matrix_stationary(m, short.as_mut_ptr(), 2),
            KmStatus::BufferTooSmall
        );

        let mut t = 0usize;
        assert_eq!(km_matrix_mixing_time(m, 0.25, &mut t), KmStatus::Ok);
        assert!(t > 0);
        assert_eq!(
            km_matrix_mixing_time(m, 1.5, &mut t),
            KmStatus::InvalidArgument
        );

        // eigenvalues cos(2πk/5); the largest nontrivial modulus is cos(π/5)
        let (mut l2, mut lo, mut hi) = (0.0, 0.0, 0.0);
        assert_eq!(
            km_matrix_eigen_bounds(m, 0.25, &mut l2, &mut lo, &mut hi),
            KmStatus::Ok
        );
        assert!((l2 - (std::f64::consts::PI / 5.0).cos()).abs() < 1e-6);
        assert!(lo <= t as f64 && t as f64 <= hi);
        km_matrix_free(m);
    }
}

#[test]
fn periodic_chain_reports_not_ergodic() {
    let m = walk("cycle:n=4");
    let mut t = 0usize;
    let status = unsafe { km_matrix_mixing_time(m, 0.25, &mut t) };
    assert_eq!(status, KmStatus::NotErgodic);
    unsafe { km_matrix_free(m) };
}

#[test]
fn dense_matrix_input() {
    let vals = [0.5, 0.5, 0.25, 0.75];
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(km_matrix_from_dense(vals.as_ptr(), 2, &mut m), KmStatus::Ok);
        let mut pi = [0.0; 2];
        assert_eq!(km_matrix_stationary(m, pi.as_mut_ptr(), 2), KmStatus::Ok);
        assert!((pi[0] - 1.0 / 3.0).abs() < 1e-12);
        km_matrix_free(m);
        let bad = [0.5, 0.4, 0.0, 1.0];
        assert_eq!(
            km_matrix_from_dense(bad.as_ptr(), 2, &mut m),
            KmStatus::InvalidArgument
        );
    }
}

#[test]
fn belief_system_limits_match_simulation() {
    let a = walk("cycle:n=5");
    let c = walk("path:n=3,lazy=0.5");
    let lambda = [1.0, 0.5, 1.0, 1.0, 0.8];
    let x0: Vec<f64> = (0..15).map(|k| (k as f64 * 0.37).fract()).collect();
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(
            km_system_assemble(a, c, lambda.as_ptr(), 5, x0.as_ptr(), 15, &mut s),
            KmStatus::Ok
        );
        let mut ok = false;
        assert_eq!(km_system_converges(s, &mut ok), KmStatus::Ok);
        assert!(ok);
        let mut lim = [0.0; 15];
        assert_eq!(km_system_limits(s, lim.as_mut_ptr(), 15), KmStatus::Ok);
        let mut sim = [0.0; 15];
        let mut iters = 0usize;
        assert_eq!(
            km_system_simulate(s, 1e-13, 1_000_000, sim.as_mut_ptr(), 15, &mut iters),
            KmStatus::Ok
        );
        assert!(iters > 0);
        for (x, y) in lim.iter().zip(&sim) {
            assert!((x - y).abs() < 1e-8, "{x} vs {y}");
        }
        km_system_free(s);
        km_matrix_free(a);
        km_matrix_free(c);
    }
}

#[test]
fn system_rejects_wrong_lengths() {
    let a = walk("cycle:n=3");
    let c = walk("cycle:n=3");
    let lambda = [1.0; 2];
    let x0 = [0.5; 9];
    let mut s = ptr::null_mut();
    unsafe {
        let status = km_system_assemble(a, c, lambda.as_ptr(), 2, x0.as_ptr(), 9, &mut s);
        assert_ne!(status, KmStatus::Ok);
        assert!(s.is_null());
        km_matrix_free(a);
        km_matrix_free(c);
    }
}

#[test]
fn header_declares_every_entry_point() {
    let header = include_str!("../include/kronmix.h");
    for name in [
        "km_last_error_message",
        "km_graph_generate",
        "km_graph_from_edges",
        "km_graph_load_edgelist",
        "km_graph_largest_scc",
        "km_graph_free",
        "km_matrix_equal_weight",
        "km_matrix_from_dense",
        "km_matrix_stationary",
        "km_matrix_mixing_time",
        "km_matrix_eigen_bounds",
        "km_system_assemble",
        "km_system_converges",
        "km_system_simulate",
        "km_system_limits",
        "KM_STATUS_BUFFER_TOO_SMALL",
        "typedef struct KmGraph KmGraph",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let dir = tempdir();
    let src = dir.join("use_header.c");
    std::fs::write(
        &src,
        "#include \"kronmix.h\"\nint main(void) { KmGraph *g = 0; KmStatus s = km_graph_generate(\"cycle:n=3\", &g); km_graph_free(g); return s == KM_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let out = std::process::Command::new(cc)
        .args([
            "-std=c99",
            "-Wall",
            "-Werror",
            "-fsyntax-only",
            "-I",
            include,
        ])
        .arg(&src)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn which_cc() -> Result<&'static str, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if std::process::Command::new(cc)
            .arg("--version")
            .output()
            .is_ok()
        {
            return Ok(cc);
        }
    }
    Err(())
}

fn tempdir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("kronmix-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
