//! Linear solves on transient blocks `(I − Z) x = b`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::stochastic::CsrMatrix;

/// Blocks up to this size are factored densely; larger ones use Gauss–Seidel.
pub(crate) const DENSE_LIMIT: usize = 2000;

const GS_TOL: f64 = 1e-13;
const GS_MAX_SWEEPS: usize = 200_000;

/// Solves `(I − Z) X = B` where `Z` is `matrix` restricted to `nodes`
/// (sorted ascending) and every column of `rhs` is indexed like `nodes`.
///
/// The caller guarantees that every node in the block can leave it, so
/// `I − Z` is nonsingular; a numerically singular block is still reported.
pub(crate) fn solve_block(
    matrix: &CsrMatrix,
    nodes: &[usize],
    rhs: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    let k = nodes.len();
    if rhs.iter().any(|b| b.len() != k) {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: rhs.iter().map(Vec::len).find(|&l| l != k).unwrap_or(0),
        });
    }
    if k == 0 || rhs.is_empty() {
        return Ok(rhs.to_vec());
    }
    if k <= DENSE_LIMIT {
        dense_solve(matrix, nodes, rhs)
    } else {
        gauss_seidel(matrix, nodes, rhs)
    }
}

fn local(nodes: &[usize], v: usize) -> Option<usize> {
    nodes.binary_search(&v).ok()
}

fn dense_solve(matrix: &CsrMatrix, nodes: &[usize], rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let k = nodes.len();
    let mut m = DMatrix::<f64>::identity(k, k);
    for (a, &v) in nodes.iter().enumerate() {
        let (idx, val) = matrix.row(v);
        for (&c, &w) in idx.iter().zip(val) {
            if let Some(b) = local(nodes, c) {
                m[(a, b)] -= w;
            }
        }
    }
    let lu = m.lu();
    rhs.iter()
        .map(|b| {
            let x = lu
                .solve(&DVector::from_column_slice(b))
                .ok_or_else(|| Error::Structural("transient block (I - Z) is singular".into()))?;
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Structural(
                    "transient block (I - Z) is singular".into(),
                ));
            }
            Ok(x.as_slice().to_vec())
        })
        .collect()
}

fn gauss_seidel(matrix: &CsrMatrix, nodes: &[usize], rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let k = nodes.len();
    let mut rows: Vec<(f64, Vec<(usize, f64)>)> = Vec::with_capacity(k);
    for &v in nodes {
        let (idx, val) = matrix.row(v);
        let mut diag = 0.0;
        let mut off = Vec::new();
        for (&c, &w) in idx.iter().zip(val) {
            match local(nodes, c) {
                Some(_) if c == v => diag += w,
                Some(b) => off.push((b, w)),
                None => {}
            }
        }
        let pivot = 1.0 - diag;
        if pivot <= 0.0 {
            return Err(Error::Structural(format!(
                "state {v} cannot leave its transient block"
            )));
        }
        rows.push((pivot, off));
    }
    let mut out = Vec::with_capacity(rhs.len());
    for b in rhs {
        let mut x = vec![0.0; k];
        let mut converged = false;
        for _ in 0..GS_MAX_SWEEPS {
            let mut change = 0.0f64;
            let mut scale = 0.0f64;
            for (a, (pivot, off)) in rows.iter().enumerate() {
                let s: f64 = off.iter().map(|&(j, w)| w * x[j]).sum();
                let new = (b[a] + s) / pivot;
                change = change.max((new - x[a]).abs());
                scale = scale.max(new.abs());
                x[a] = new;
            }
            if change <= GS_TOL * (1.0 + scale) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::FailedToConverge(format!(
                "Gauss-Seidel on {k} transient states did not settle in {GS_MAX_SWEEPS} sweeps"
            )));
        }
        out.push(x);
    }
    Ok(out)
}
