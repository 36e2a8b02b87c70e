//! C ABI over `kronmix`.
//!
//! Objects are opaque handles created by `km_*` constructors and released
//! with the matching `*_free`. Every fallible call returns a [`KmStatus`];
//! the message of the last failure on the calling thread is available from
//! [`km_last_error_message`]. Output parameters are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use kronmix::belief::{simulate, SimulateOptions};
use kronmix::experiment::GraphSource;
use kronmix::limits::structural_limit;
use kronmix::mixing::{eigen_bounds, measure_mixing_time, StartPolicy};
use kronmix::netio::{largest_scc, load_edgelist};
use kronmix::stochastic::{equal_weight_matrix, stationary};
use kronmix::{BeliefSystem, DirectedGraph, Error, StochasticMatrix};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SpecError = 3,
    ParseError = 4,
    IoError = 5,
    NotErgodic = 6,
    NonConvergent = 7,
    FailedToConverge = 8,
    StructuralError = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

pub struct KmGraph(DirectedGraph);

pub struct KmMatrix(StochasticMatrix);

pub struct KmBeliefSystem(BeliefSystem);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> KmStatus {
    match err {
        Error::Spec(_) | Error::Config(_) => KmStatus::SpecError,
        Error::Parse { .. } | Error::EmptyGraph(_) | Error::Csv(_) => KmStatus::ParseError,
        Error::Io(_) => KmStatus::IoError,
        Error::NotErgodic(_) => KmStatus::NotErgodic,
        Error::NonConvergent(_) | Error::NoUniqueFixedPoint(_) => KmStatus::NonConvergent,
        Error::FailedToConverge(_) | Error::AllTrialsCapped { .. } => KmStatus::FailedToConverge,
        Error::Structural(_) | Error::Ordering(_) => KmStatus::StructuralError,
        _ => KmStatus::InvalidArgument,
    }
}

struct Fail(KmStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(KmStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> KmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            KmStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            KmStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(KmStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, need: usize) -> Result<&'a mut [f64], Fail> {
    if len < need {
        return Err(Fail(
            KmStatus::BufferTooSmall,
            format!("buffer holds {len} values, {need} needed"),
        ));
    }
    if need == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null("output buffer"));
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next `km_*` call on the same thread.
#[no_mangle]
pub extern "C" fn km_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a graph from a source string such as `cycle:n=11` or
/// `grid:n=5,k=2,lazy=0.5`.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn km_graph_generate(
    spec: *const c_char,
    out: *mut *mut KmGraph,
) -> KmStatus {
    guard(|| {
        let src: GraphSource = str_arg(spec, "spec")?.parse()?;
        put(out, KmGraph(src.build(None)?))
    })
}

/// Builds a graph from `len` edges `sources[k] -> targets[k]`. Undirected
/// graphs get both directions.
///
/// # Safety
/// `sources` and `targets` must hold `len` entries; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn km_graph_from_edges(
    node_count: usize,
    sources: *const usize,
    targets: *const usize,
    len: usize,
    directed: bool,
    out: *mut *mut KmGraph,
) -> KmStatus {
    guard(|| {
        let s = slice_arg(sources, len, "sources")?;
        let t = slice_arg(targets, len, "targets")?;
        let edges = s.iter().copied().zip(t.iter().copied());
        let g = if directed {
            DirectedGraph::from_edges(node_count, edges)?
        } else {
            DirectedGraph::undirected(node_count, edges)?
        };
        put(out, KmGraph(g))
    })
}

/// Reads a whitespace-separated edge list (`#` comments).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn km_graph_load_edgelist(
    path: *const c_char,
    directed: bool,
    out: *mut *mut KmGraph,
) -> KmStatus {
    guard(|| {
        let p = str_arg(path, "path")?;
        put(out, KmGraph(load_edgelist(Path::new(p), directed)?.graph))
    })
}

/// Induced subgraph on the largest strongly connected component.
///
/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn km_graph_largest_scc(
    graph: *const KmGraph,
    out: *mut *mut KmGraph,
) -> KmStatus {
    guard(|| {
        let g = handle(graph, "graph")?;
        put(out, KmGraph(largest_scc(&g.0).0))
    })
}

/// # Safety
/// `graph` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn km_graph_free(graph: *mut KmGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Node count, or 0 for a null handle.
///
/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn km_graph_node_count(graph: *const KmGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.node_count())
}

/// Edge count, or 0 for a null handle.
///
/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn km_graph_edge_count(graph: *const KmGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.edge_count())
}

/// Equal-weight random walk on `graph`.
///
/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn km_matrix_equal_weight(
    graph: *const KmGraph,
    out: *mut *mut KmMatrix,
) -> KmStatus {
    guard(|| {
        let g = handle(graph, "graph")?;
        put(out, KmMatrix(equal_weight_matrix(&g.0)?))
    })
}

/// Row-stochastic matrix from a dense row-major `dim × dim` array.
///
/// # Safety
/// `values` must hold `dim * dim` entries; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn km_matrix_from_dense(
    values: *const f64,
    dim: usize,
    out: *mut *mut KmMatrix,
) -> KmStatus {
    guard(|| {
        let v = slice_arg(values, dim * dim, "values")?;
        let rows: Vec<Vec<f64>> = v.chunks(dim.max(1)).map(<[f64]>::to_vec).collect();
        put(out, KmMatrix(StochasticMatrix::from_dense(&rows)?))
    })
}

/// # Safety
/// `matrix` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn km_matrix_free(matrix: *mut KmMatrix) {
    if !matrix.is_null() {
        drop(Box::from_raw(matrix));
    }
}

/// Number of states, or 0 for a null handle.
///
/// # Safety
/// `matrix` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn km_matrix_dim(matrix: *const KmMatrix) -> usize {
    matrix.as_ref().map_or(0, |m| m.0.dim())
}

/// Writes the stationary distribution into `out[0..dim]`.
///
/// # Safety
/// `matrix` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn km_matrix_stationary(
    matrix: *const KmMatrix,
    out: *mut f64,
    len: usize,
) -> KmStatus {
    guard(|| {
        let m = handle(matrix, "matrix")?;
        let buf = out_slice(out, len, m.0.dim())?;
        buf.copy_from_slice(stationary(&m.0)?.as_slice());
        Ok(())
    })
}

/// Mixing time `t_mix(epsilon)` over all starts (sampled above 2000 states).
///
/// # Safety
/// `matrix` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn km_matrix_mixing_time(
    matrix: *const KmMatrix,
    epsilon: f64,
    out: *mut usize,
) -> KmStatus {
    guard(|| {
        let m = handle(matrix, "matrix")?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Fail(
                KmStatus::InvalidArgument,
                format!("epsilon {epsilon} not in (0, 1)"),
            ));
        }
        *out = measure_mixing_time(&m.0, epsilon, &StartPolicy::default())?.t_mix;
        Ok(())
    })
}

/// Second eigenvalue modulus and the spectral bounds on `t_mix(epsilon)`.
///
/// # Safety
/// `matrix` must be a live handle; the three outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn km_matrix_eigen_bounds(
    matrix: *const KmMatrix,
    epsilon: f64,
    lambda2: *mut f64,
    lower: *mut f64,
    upper: *mut f64,
) -> KmStatus {
    guard(|| {
        let m = handle(matrix, "matrix")?;
        if lambda2.is_null() || lower.is_null() || upper.is_null() {
            return Err(null("output"));
        }
        let b = eigen_bounds(&m.0, epsilon)?;
        *lambda2 = b.lambda2_abs;
        *lower = b.lower;
        *upper = b.upper;
        Ok(())
    })
}

/// Assembles a belief system. `lambda` has `agents` entries and `x0`
/// `agents * topics` entries, row-major by agent. The matrices are copied.
///
/// # Safety
/// Handles must be live; arrays must hold the stated number of entries.
#[no_mangle]
pub unsafe extern "C" fn km_system_assemble(
    influence: *const KmMatrix,
    constraints: *const KmMatrix,
    lambda: *const f64,
    lambda_len: usize,
    x0: *const f64,
    x0_len: usize,
    out: *mut *mut KmBeliefSystem,
) -> KmStatus {
    guard(|| {
        let a = handle(influence, "influence")?;
        let c = handle(constraints, "constraints")?;
        let l = slice_arg(lambda, lambda_len, "lambda")?.to_vec();
        let x = slice_arg(x0, x0_len, "x0")?.to_vec();
        put(
            out,
            KmBeliefSystem(BeliefSystem::assemble(a.0.clone(), c.0.clone(), l, x)?),
        )
    })
}

/// # Safety
/// `system` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn km_system_free(system: *mut KmBeliefSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Whether the beliefs converge for every initial condition.
///
/// # Safety
/// `system` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn km_system_converges(
    system: *const KmBeliefSystem,
    out: *mut bool,
) -> KmStatus {
    guard(|| {
        let s = handle(system, "system")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = s.0.converges().converges;
        Ok(())
    })
}

/// Iterates the dynamics and writes the final beliefs (`agents * topics`
/// values) into `out`.
///
/// # Safety
/// `system` must be a live handle; `out` must hold `len` doubles and
/// `iterations` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn km_system_simulate(
    system: *const KmBeliefSystem,
    stop_delta: f64,
    max_iter: usize,
    out: *mut f64,
    len: usize,
    iterations: *mut usize,
) -> KmStatus {
    guard(|| {
        let s = handle(system, "system")?;
        let nm = s.0.agents() * s.0.topics();
        let buf = out_slice(out, len, nm)?;
        let opts = SimulateOptions {
            stop_delta,
            max_iter,
            ..SimulateOptions::default()
        };
        let sim = simulate(&s.0, &opts)?;
        buf.copy_from_slice(&sim.beliefs);
        if !iterations.is_null() {
            *iterations = sim.iterations;
        }
        Ok(())
    })
}

/// Writes the limiting beliefs (`agents * topics` values) into `out`.
///
/// # Safety
/// `system` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn km_system_limits(
    system: *const KmBeliefSystem,
    out: *mut f64,
    len: usize,
) -> KmStatus {
    guard(|| {
        let s = handle(system, "system")?;
        let buf = out_slice(out, len, s.0.agents() * s.0.topics())?;
        buf.copy_from_slice(structural_limit(&s.0)?.beliefs());
        Ok(())
    })
}
