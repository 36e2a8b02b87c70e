//! Kronecker products of stochastic matrices and of graphs.
//!
//! Pair `(i, u)` of an `n`-state left factor and an `m`-state right factor is
//! always stored at index `i * m + u`. The belief state, the system matrix
//! and every product below share this layout.

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::scc::{scc_decompose, SccDecomposition};
use crate::stochastic::{CsrMatrix, StochasticMatrix};

/// Default cap on the nonzeros of a materialized product.
pub const DEFAULT_MATERIALIZE_CAP: usize = 10_000_000;

/// Implicit `left ⊗ right`; never stores the product.
#[derive(Debug, Clone)]
pub struct ProductOperator {
    left: StochasticMatrix,
    right: StochasticMatrix,
}

impl ProductOperator {
    pub fn new(left: StochasticMatrix, right: StochasticMatrix) -> Self {
        ProductOperator { left, right }
    }

    pub fn left(&self) -> &StochasticMatrix {
        &self.left
    }

    pub fn right(&self) -> &StochasticMatrix {
        &self.right
    }

    pub fn dim(&self) -> usize {
        self.left.dim() * self.right.dim()
    }

    pub fn nnz(&self) -> usize {
        self.left.nnz() * self.right.nnz()
    }

    /// Entries of row `(i, u)` as `(column, value)` pairs.
    pub fn row(&self, index: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let m = self.right.dim();
        let (i, u) = (index / m, index % m);
        let (li, lv) = self.left.row(i);
        let (ri, rv) = self.right.row(u);
        li.iter()
            .zip(lv)
            .flat_map(move |(&j, &a)| ri.iter().zip(rv).map(move |(&v, &c)| (j * m + v, a * c)))
    }

    /// `out = x' (L ⊗ R)`, i.e. `Lᵀ X R` on the `n × m` reshaping of `x`.
    pub fn left_mul_into(&self, x: &[f64], out: &mut [f64]) {
        let (n, m) = (self.left.dim(), self.right.dim());
        let mut tmp = vec![0.0; m];
        out.iter_mut().for_each(|o| *o = 0.0);
        for i in 0..n {
            let xi = &x[i * m..(i + 1) * m];
            if xi.iter().all(|&v| v == 0.0) {
                continue;
            }
            self.right.csr().left_mul_into(xi, &mut tmp);
            let (li, lv) = self.left.row(i);
            for (&j, &a) in li.iter().zip(lv) {
                let oj = &mut out[j * m..(j + 1) * m];
                for (o, t) in oj.iter_mut().zip(&tmp) {
                    *o += a * t;
                }
            }
        }
    }

    /// `out = (L ⊗ R) x`, i.e. `L X Rᵀ` on the `n × m` reshaping of `x`.
    pub fn right_mul_into(&self, x: &[f64], out: &mut [f64]) {
        let (n, m) = (self.left.dim(), self.right.dim());
        let mut xr = vec![0.0; n * m];
        for i in 0..n {
            self.right
                .csr()
                .right_mul_into(&x[i * m..(i + 1) * m], &mut xr[i * m..(i + 1) * m]);
        }
        for i in 0..n {
            let oi = &mut out[i * m..(i + 1) * m];
            oi.iter_mut().for_each(|o| *o = 0.0);
            let (li, lv) = self.left.row(i);
            for (&j, &a) in li.iter().zip(lv) {
                for (o, v) in oi.iter_mut().zip(&xr[j * m..(j + 1) * m]) {
                    *o += a * v;
                }
            }
        }
    }

    /// Materializes the product regardless of size.
    pub fn materialize(&self) -> StochasticMatrix {
        StochasticMatrix::from_csr_unchecked(kron_csr(self.left.csr(), self.right.csr()))
    }
}

/// Kronecker product of two non-negative matrices.
pub fn kron_csr(left: &CsrMatrix, right: &CsrMatrix) -> CsrMatrix {
    let (rows, cols) = (left.rows() * right.rows(), left.cols() * right.cols());
    let mut offsets = Vec::with_capacity(rows + 1);
    let mut indices = Vec::with_capacity(left.nnz() * right.nnz());
    let mut values = Vec::with_capacity(left.nnz() * right.nnz());
    offsets.push(0);
    for i in 0..left.rows() {
        let (li, lv) = left.row(i);
        for u in 0..right.rows() {
            let (ri, rv) = right.row(u);
            for (&j, &a) in li.iter().zip(lv) {
                for (&v, &c) in ri.iter().zip(rv) {
                    indices.push(j * right.cols() + v);
                    values.push(a * c);
                }
            }
            offsets.push(indices.len());
        }
    }
    CsrMatrix::from_raw_parts(rows, cols, offsets, indices, values)
}

#[derive(Debug, Clone)]
pub enum KronProduct {
    Materialized(StochasticMatrix),
    Implicit(ProductOperator),
}

impl KronProduct {
    pub fn dim(&self) -> usize {
        match self {
            KronProduct::Materialized(m) => m.dim(),
            KronProduct::Implicit(op) => op.dim(),
        }
    }
}

/// `left ⊗ right`. With `materialize` set the product is stored when it has
/// at most `cap` nonzeros and [`Error::TooLarge`] is returned otherwise;
/// without it an implicit operator is returned.
pub fn kron(
    left: &StochasticMatrix,
    right: &StochasticMatrix,
    materialize: bool,
    cap: usize,
) -> Result<KronProduct> {
    let op = ProductOperator::new(left.clone(), right.clone());
    if !materialize {
        return Ok(KronProduct::Implicit(op));
    }
    let nonzeros = op.nnz();
    if nonzeros > cap {
        return Err(Error::TooLarge { nonzeros, cap });
    }
    Ok(KronProduct::Materialized(op.materialize()))
}

/// Stores the product when it fits under `cap`, otherwise keeps it implicit.
pub fn kron_auto(left: &StochasticMatrix, right: &StochasticMatrix, cap: usize) -> KronProduct {
    kron(left, right, true, cap).unwrap_or_else(|_| {
        KronProduct::Implicit(ProductOperator::new(left.clone(), right.clone()))
    })
}

/// Graph product: `(u,u') -> (v,v')` iff `u -> v` and `u' -> v'`.
pub fn kron_graph(g1: &DirectedGraph, g2: &DirectedGraph) -> DirectedGraph {
    let m = g2.node_count();
    let n = g1.node_count() * m;
    let edges = g1.edges().flat_map(|(u, v, w1)| {
        g2.edges()
            .map(move |(u2, v2, w2)| (u * m + u2, v * m + v2, w1 * w2))
    });
    if g1.is_weighted() || g2.is_weighted() {
        DirectedGraph::from_weighted_edges(n, edges).expect("product indices in range")
    } else {
        DirectedGraph::from_edges(n, edges.map(|(s, t, _)| (s, t)))
            .expect("product indices in range")
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProductSccViolation {
    /// A product component spans more than one pair of factor components.
    SpansFactorPairs { component: usize },
    /// Wrong number of nontrivial product components inside `S1 × S2`.
    ComponentCount {
        factor_components: (usize, usize),
        expected: u64,
        found: u64,
    },
    /// A product component inside `S1 × S2` has the wrong period.
    ComponentPeriod {
        component: usize,
        expected: u64,
        found: u64,
    },
}

#[derive(Debug, Clone, Default)]
pub struct ProductSccReport {
    pub factor_pairs_checked: usize,
    pub violations: Vec<ProductSccViolation>,
}

impl ProductSccReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Verifies the component structure of `g1 ⊗ g2` against its factors.
///
/// Every product component must sit inside `S1 × S2` for a single pair of
/// factor components. For every pair of nontrivial factor components with
/// periods `d1` and `d2`, `S1 × S2` must split into exactly `gcd(d1, d2)`
/// components, each of period `lcm(d1, d2)`; if either factor is a trivial
/// single node, every product node is a trivial component of its own.
pub fn product_scc_check(
    g1: &DirectedGraph,
    g2: &DirectedGraph,
    product_decomp: &SccDecomposition,
) -> ProductSccReport {
    let d1 = scc_decompose(g1);
    let d2 = scc_decompose(g2);
    let m = g2.node_count();
    let mut report = ProductSccReport::default();

    // (component of g1, component of g2) per product component
    let mut pair_of: Vec<(usize, usize)> = Vec::with_capacity(product_decomp.component_count());
    for (id, comp) in product_decomp.components().iter().enumerate() {
        let pair = |x: usize| (d1.component_of(x / m), d2.component_of(x % m));
        let first = pair(comp[0]);
        if comp.iter().any(|&x| pair(x) != first) {
            report
                .violations
                .push(ProductSccViolation::SpansFactorPairs { component: id });
        }
        pair_of.push(first);
    }

    let mut by_pair: std::collections::HashMap<(usize, usize), Vec<usize>> = Default::default();
    for (id, &p) in pair_of.iter().enumerate() {
        by_pair.entry(p).or_default().push(id);
    }

    for c1 in 0..d1.component_count() {
        for c2 in 0..d2.component_count() {
            report.factor_pairs_checked += 1;
            let (p1, p2) = (d1.period(c1), d2.period(c2));
            let ids = by_pair.get(&(c1, c2)).map_or(&[][..], Vec::as_slice);
            if p1.trivial || p2.trivial {
                let size = d1.component(c1).len() * d2.component(c2).len();
                let trivial = ids
                    .iter()
                    .filter(|&&id| product_decomp.period(id).trivial)
                    .count();
                if trivial != size || ids.len() != size {
                    report.violations.push(ProductSccViolation::ComponentCount {
                        factor_components: (c1, c2),
                        expected: size as u64,
                        found: ids.len() as u64,
                    });
                }
                continue;
            }
            let g = gcd(p1.value, p2.value);
            let lcm = p1.value / g * p2.value;
            let found = ids.len() as u64;
            if found != g {
                report.violations.push(ProductSccViolation::ComponentCount {
                    factor_components: (c1, c2),
                    expected: g,
                    found,
                });
            }
            for &id in ids {
                let p = product_decomp.period(id);
                if p.trivial || p.value != lcm {
                    report
                        .violations
                        .push(ProductSccViolation::ComponentPeriod {
                            component: id,
                            expected: lcm,
                            found: p.value,
                        });
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::equal_weight_matrix;

    fn directed_cycle(n: usize) -> DirectedGraph {
        DirectedGraph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
    }

    #[test]
    fn dimension_rule() {
        let a = StochasticMatrix::from_dense(&[vec![0.5, 0.5], vec![1.0, 0.0]]).unwrap();
        let c = StochasticMatrix::identity(3);
        let KronProduct::Materialized(p) = kron(&a, &c, true, DEFAULT_MATERIALIZE_CAP).unwrap()
        else {
            panic!("expected materialized product");
        };
        assert_eq!(p.dim(), 6);
        assert_eq!(p.get(1, 4), 0.5);
        assert_eq!(p.get(2, 2), 0.5);
    }

    #[test]
    fn identity_product_is_identity() {
        let p = ProductOperator::new(StochasticMatrix::identity(3), StochasticMatrix::identity(4))
            .materialize();
        assert_eq!(p, StochasticMatrix::identity(12));
    }

    #[test]
    fn cap_enforced_only_when_materializing() {
        let a = StochasticMatrix::from_dense(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!(matches!(
            kron(&a, &a, true, 15),
            Err(Error::TooLarge {
                nonzeros: 16,
                cap: 15
            })
        ));
        assert!(matches!(
            kron(&a, &a, false, 15).unwrap(),
            KronProduct::Implicit(_)
        ));
        assert!(matches!(kron_auto(&a, &a, 15), KronProduct::Implicit(_)));
    }

    #[test]
    fn c2_times_c3_is_one_component() {
        let p = kron_graph(&directed_cycle(2), &directed_cycle(3));
        assert_eq!(p.node_count(), 6);
        assert_eq!(p.edge_count(), 6);
        assert_eq!(scc_decompose(&p).component_count(), 1);
    }

    #[test]
    fn c2_times_c2_splits() {
        let p = kron_graph(&directed_cycle(2), &directed_cycle(2));
        let d = scc_decompose(&p);
        assert_eq!(d.component_count(), 2);
        assert!((0..2).all(|c| d.period(c).value == 2));
    }

    #[test]
    fn product_with_empty_graph_is_empty() {
        let p = kron_graph(&directed_cycle(4), &DirectedGraph::empty(0));
        assert_eq!(p.node_count(), 0);
    }

    #[test]
    fn mcandrew_small_cycles() {
        for (a, b, count, period) in [(3, 5, 1, 15), (4, 6, 2, 12)] {
            let (g1, g2) = (directed_cycle(a), directed_cycle(b));
            let p = kron_graph(&g1, &g2);
            let d = scc_decompose(&p);
            assert_eq!(d.component_count(), count);
            assert!((0..count).all(|c| d.period(c).value == period));
            assert!(product_scc_check(&g1, &g2, &d).is_clean());
        }
    }

    #[test]
    fn graph_and_matrix_products_agree() {
        let g1 = DirectedGraph::from_edges(3, [(0, 1), (1, 2), (2, 0), (2, 2)]).unwrap();
        let g2 = directed_cycle(2);
        let pm = ProductOperator::new(
            equal_weight_matrix(&g1).unwrap(),
            equal_weight_matrix(&g2).unwrap(),
        )
        .materialize();
        let pg = kron_graph(&g1, &g2);
        let from_matrix: Vec<_> = pm.graph().edges().map(|(s, t, _)| (s, t)).collect();
        let from_graph: Vec<_> = pg.edges().map(|(s, t, _)| (s, t)).collect();
        assert_eq!(from_matrix, from_graph);
    }

    #[test]
    fn implicit_row_matches_materialized() {
        let a = StochasticMatrix::from_dense(&[vec![0.25, 0.75], vec![1.0, 0.0]]).unwrap();
        let c = StochasticMatrix::from_dense(&[
            vec![0.5, 0.5, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![0.2, 0.3, 0.5],
        ])
        .unwrap();
        let op = ProductOperator::new(a, c);
        let m = op.materialize();
        for r in 0..op.dim() {
            let mut row: Vec<_> = op.row(r).collect();
            row.sort_by_key(|e| e.0);
            let (idx, val) = m.row(r);
            let expected: Vec<_> = idx.iter().copied().zip(val.iter().copied()).collect();
            assert_eq!(row, expected);
        }
    }
}
