//! Row-stochastic sparse matrices and probability distributions.

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::scc::scc_decompose;

/// Tolerance on row sums accepted by [`StochasticMatrix`].
pub const ROW_SUM_TOL: f64 = 1e-9;

/// Rows whose sums drift by less than this are rescaled by
/// [`StochasticMatrix::from_csr_renormalized`].
pub const RENORMALIZE_TOL: f64 = 1e-6;

/// Compressed sparse row matrix with non-negative entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from per-row `(column, value)` lists. Duplicate columns
    /// are summed and explicit zeros dropped.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        offsets.push(0);
        for (r, mut row) in rows.into_iter().enumerate() {
            row.sort_unstable_by_key(|e| e.0);
            let start = indices.len();
            for (c, v) in row {
                if c >= cols {
                    return Err(Error::DimensionMismatch {
                        expected: cols,
                        found: c + 1,
                    });
                }
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::NotStochastic {
                        row: r,
                        reason: format!("entry ({r},{c}) = {v} is negative or not finite"),
                    });
                }
                if indices.len() > start && *indices.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                }
            }
            let mut k = start;
            for i in start..indices.len() {
                if values[i] != 0.0 {
                    indices[k] = indices[i];
                    values[k] = values[i];
                    k += 1;
                }
            }
            indices.truncate(k);
            values.truncate(k);
            offsets.push(indices.len());
        }
        Ok(CsrMatrix {
            rows: offsets.len() - 1,
            cols,
            offsets,
            indices,
            values,
        })
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let sparse = rows
            .iter()
            .map(|r| {
                if r.len() != cols {
                    return Err(Error::DimensionMismatch {
                        expected: cols,
                        found: r.len(),
                    });
                }
                Ok(r.iter()
                    .copied()
                    .enumerate()
                    .filter(|e| e.1 != 0.0)
                    .collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(cols, sparse)
    }

    pub(crate) fn from_raw_parts(
        rows: usize,
        cols: usize,
        offsets: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(offsets.len(), rows + 1);
        CsrMatrix {
            rows,
            cols,
            offsets,
            indices,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let range = self.offsets[r]..self.offsets[r + 1];
        (&self.indices[range.clone()], &self.values[range])
    }

    pub(crate) fn row_range(&self, r: usize) -> std::ops::Range<usize> {
        self.offsets[r]..self.offsets[r + 1]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (idx, val) = self.row(r);
        idx.binary_search(&c).map_or(0.0, |k| val[k])
    }

    pub fn row_sum(&self, r: usize) -> f64 {
        self.row(r).1.iter().sum()
    }

    /// `out = x' M`.
    pub fn left_mul_into(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (r, &xr) in x.iter().enumerate() {
            if xr == 0.0 {
                continue;
            }
            let (idx, val) = self.row(r);
            for (&c, &v) in idx.iter().zip(val) {
                out[c] += xr * v;
            }
        }
    }

    /// `out = M x`.
    pub fn right_mul_into(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let (idx, val) = self.row(r);
            *o = idx.iter().zip(val).map(|(&c, &v)| v * x[c]).sum();
        }
    }

    /// Square block on `nodes` (rows and columns), relabelled in the given order.
    pub fn submatrix(&self, nodes: &[usize]) -> CsrMatrix {
        let mut local = vec![usize::MAX; self.cols];
        for (k, &v) in nodes.iter().enumerate() {
            local[v] = k;
        }
        let mut offsets = Vec::with_capacity(nodes.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        offsets.push(0);
        for &r in nodes {
            let (idx, val) = self.row(r);
            let mut entries: Vec<(usize, f64)> = idx
                .iter()
                .zip(val)
                .filter(|(c, _)| local[**c] != usize::MAX)
                .map(|(&c, &v)| (local[c], v))
                .collect();
            entries.sort_unstable_by_key(|e| e.0);
            for (c, v) in entries {
                indices.push(c);
                values.push(v);
            }
            offsets.push(indices.len());
        }
        CsrMatrix {
            rows: nodes.len(),
            cols: nodes.len(),
            offsets,
            indices,
            values,
        }
    }

    /// Nonzero pattern as a weighted graph (edge `i -> j` iff entry `(i,j) > 0`).
    pub fn graph(&self) -> DirectedGraph {
        DirectedGraph::from_weighted_edges(
            self.rows.max(self.cols),
            (0..self.rows).flat_map(|r| {
                let (idx, val) = self.row(r);
                idx.iter().zip(val).map(move |(&c, &v)| (r, c, v))
            }),
        )
        .expect("csr entries are valid edges")
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.cols]; self.rows];
        for (r, row) in d.iter_mut().enumerate() {
            let (idx, val) = self.row(r);
            for (&c, &v) in idx.iter().zip(val) {
                row[c] = v;
            }
        }
        d
    }
}

/// Checks that every entry is non-negative and every row sums to 1 within `tol`.
pub fn validate_stochastic(matrix: &CsrMatrix, tol: f64) -> Result<()> {
    if matrix.rows() != matrix.cols() {
        return Err(Error::DimensionMismatch {
            expected: matrix.rows(),
            found: matrix.cols(),
        });
    }
    for r in 0..matrix.rows() {
        let (_, val) = matrix.row(r);
        if let Some(v) = val.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::NotStochastic {
                row: r,
                reason: format!("entry {v} is negative or not finite"),
            });
        }
        let sum: f64 = val.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::NotStochastic {
                row: r,
                reason: format!("row sums to {sum}"),
            });
        }
    }
    Ok(())
}

/// Square row-stochastic sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix(CsrMatrix);

impl StochasticMatrix {
    pub fn from_csr(csr: CsrMatrix) -> Result<Self> {
        validate_stochastic(&csr, ROW_SUM_TOL)?;
        Ok(StochasticMatrix(csr))
    }

    /// Like [`from_csr`](Self::from_csr) but first rescales rows whose sums
    /// are within [`RENORMALIZE_TOL`] of 1, absorbing float drift.
    pub fn from_csr_renormalized(mut csr: CsrMatrix) -> Result<Self> {
        for r in 0..csr.rows {
            let range = csr.offsets[r]..csr.offsets[r + 1];
            let sum: f64 = csr.values[range.clone()].iter().sum();
            if sum > 0.0 && (sum - 1.0).abs() < RENORMALIZE_TOL {
                csr.values[range].iter_mut().for_each(|v| *v /= sum);
            }
        }
        Self::from_csr(csr)
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_csr(CsrMatrix::from_dense(rows)?)
    }

    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n = rows.len();
        Self::from_csr(CsrMatrix::from_rows(n, rows)?)
    }

    pub fn identity(n: usize) -> Self {
        StochasticMatrix(CsrMatrix::from_raw_parts(
            n,
            n,
            (0..=n).collect(),
            (0..n).collect(),
            vec![1.0; n],
        ))
    }

    pub(crate) fn from_csr_unchecked(csr: CsrMatrix) -> Self {
        debug_assert!(validate_stochastic(&csr, ROW_SUM_TOL).is_ok());
        StochasticMatrix(csr)
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn csr(&self) -> &CsrMatrix {
        &self.0
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        self.0.row(r)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.0.get(r, c)
    }

    pub fn nnz(&self) -> usize {
        self.0.nnz()
    }

    pub fn graph(&self) -> DirectedGraph {
        self.0.graph()
    }

    /// Block on a closed set of states; errors if the block loses mass.
    pub fn restrict(&self, nodes: &[usize]) -> Result<StochasticMatrix> {
        StochasticMatrix::from_csr(self.0.submatrix(nodes))
    }
}

/// Equal-weight random walk on `graph`: entry `(i, j)` is `1 / outdeg(i)`.
///
/// Weighted graphs (for instance the output of
/// [`lazify`](crate::generators::lazify)) are normalized by their row weight
/// sums instead.
pub fn equal_weight_matrix(graph: &DirectedGraph) -> Result<StochasticMatrix> {
    let n = graph.node_count();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let targets = graph.out_neighbors(i);
        if targets.is_empty() {
            return Err(Error::DanglingNode { node: i });
        }
        let row: Vec<(usize, f64)> = match graph.out_weights(i) {
            Some(w) => {
                let total: f64 = w.iter().sum();
                targets
                    .iter()
                    .zip(w)
                    .map(|(&t, &wt)| (t, wt / total))
                    .collect()
            }
            None => {
                let p = 1.0 / targets.len() as f64;
                targets.iter().map(|&t| (t, p)).collect()
            }
        };
        rows.push(row);
    }
    StochasticMatrix::from_csr(CsrMatrix::from_rows(n, rows)?)
}

/// Dense probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    /// Mass tolerance: `1e-12`, widened for long vectors by the worst-case
    /// rounding of a length-`n` sum.
    pub fn mass_tolerance(n: usize) -> f64 {
        1e-12_f64.max(n as f64 * 4.0 * f64::EPSILON)
    }

    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::Structural(format!(
                "distribution entry {i} = {v} is negative or not finite"
            )));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > Self::mass_tolerance(values.len()) {
            return Err(Error::Structural(format!(
                "distribution sums to {sum}, expected 1"
            )));
        }
        Ok(Distribution(values))
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        let mut v = vec![0.0; n];
        v[at] = 1.0;
        Distribution(v)
    }

    pub fn uniform(n: usize) -> Self {
        Distribution(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Kronecker product `self ⊗ other` under pair index `i * m + u`.
    pub fn kron(&self, other: &Distribution) -> Distribution {
        let mut v = Vec::with_capacity(self.len() * other.len());
        for &a in &self.0 {
            v.extend(other.0.iter().map(|&b| a * b));
        }
        Distribution(v)
    }
}

/// `dist' M^steps`.
pub fn evolve(
    dist: &Distribution,
    matrix: &StochasticMatrix,
    steps: usize,
) -> Result<Distribution> {
    if dist.len() != matrix.dim() {
        return Err(Error::DimensionMismatch {
            expected: matrix.dim(),
            found: dist.len(),
        });
    }
    let mut cur = dist.0.clone();
    let mut next = vec![0.0; cur.len()];
    for _ in 0..steps {
        matrix.csr().left_mul_into(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(Distribution(cur))
}

/// Half the L1 distance.
pub fn tv_distance(p: &Distribution, q: &Distribution) -> Result<f64> {
    tv_slices(p.as_slice(), q.as_slice())
}

pub(crate) fn tv_slices(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: q.len(),
        });
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

#[derive(Debug, Clone, Copy)]
pub struct StationaryOptions {
    /// Stop once `‖π'P − π'‖₁` falls to this value.
    pub tol: f64,
    pub max_iter: u64,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        StationaryOptions {
            tol: 1e-12,
            max_iter: 10_000_000,
        }
    }
}

/// Fails unless the chain has exactly one closed class and that class is aperiodic.
pub fn check_ergodic(matrix: &StochasticMatrix) -> Result<()> {
    let decomp = scc_decompose(&matrix.graph());
    let closed: Vec<usize> = decomp.closed_components().collect();
    if closed.len() != 1 {
        return Err(Error::NotErgodic(format!(
            "{} closed classes, stationary distribution is not unique",
            closed.len()
        )));
    }
    let p = decomp.period(closed[0]);
    if !p.is_aperiodic() {
        return Err(Error::NotErgodic(format!(
            "closed class has period {}",
            p.value
        )));
    }
    Ok(())
}

/// Stationary distribution by left power iteration from the uniform vector.
pub fn stationary(matrix: &StochasticMatrix) -> Result<Distribution> {
    stationary_with(matrix, StationaryOptions::default())
}

pub fn stationary_with(matrix: &StochasticMatrix, opts: StationaryOptions) -> Result<Distribution> {
    check_ergodic(matrix)?;
    let n = matrix.dim();
    let mut cur = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iter {
        matrix.csr().left_mul_into(&cur, &mut next);
        let sum: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= sum);
        residual = cur.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut cur, &mut next);
        if residual <= opts.tol {
            return Ok(Distribution(cur));
        }
    }
    Err(Error::FailedToConverge(format!(
        "power iteration residual {residual:e} after {} steps",
        opts.max_iter
    )))
}
