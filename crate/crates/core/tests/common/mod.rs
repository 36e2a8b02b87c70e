#![allow(dead_code)]

use kronmix::rng::{stream_rng, StreamRng};
use kronmix::{BeliefSystem, DirectedGraph, StochasticMatrix};
use rand::Rng;

pub fn rng(stream: u64) -> StreamRng {
    stream_rng(0x5eed_0f7e57, stream)
}

/// Random digraph; with probability `layered` the nodes are split into `d`
/// cyclic layers and edges only go from one layer to the next, which forces
/// periods that are multiples of `d`.
pub fn random_digraph(rng: &mut StreamRng, n: usize, p: f64, layered: f64) -> DirectedGraph {
    let mut edges = Vec::new();
    if rng.random::<f64>() < layered && n >= 2 {
        let d = rng.random_range(2..=n.min(4));
        let layer: Vec<usize> = (0..n).map(|i| i % d).collect();
        for i in 0..n {
            for j in 0..n {
                if layer[j] == (layer[i] + 1) % d && rng.random::<f64>() < p.max(0.5) {
                    edges.push((i, j));
                }
            }
        }
    } else {
        for i in 0..n {
            for j in 0..n {
                if rng.random::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
    }
    DirectedGraph::from_edges(n, edges).unwrap()
}

/// Row-stochastic matrix on `graph` with random weights in `[0.1, 1]`;
/// rows without out-edges get a self-loop.
pub fn weighted_walk(rng: &mut StreamRng, graph: &DirectedGraph) -> StochasticMatrix {
    let n = graph.node_count();
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| {
            let nb = graph.out_neighbors(i);
            let raw: Vec<(usize, f64)> = if nb.is_empty() {
                vec![(i, 1.0)]
            } else {
                nb.iter()
                    .map(|&j| (j, rng.random_range(0.1..1.0)))
                    .collect()
            };
            let s: f64 = raw.iter().map(|e| e.1).sum();
            raw.into_iter().map(|(j, w)| (j, w / s)).collect()
        })
        .collect();
    StochasticMatrix::from_rows(rows).unwrap()
}

/// Random chain with a Hamiltonian cycle and a self-loop, hence ergodic.
pub fn ergodic_matrix(rng: &mut StreamRng, n: usize, p: f64) -> StochasticMatrix {
    let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    edges.push((0, 0));
    for i in 0..n {
        for j in 0..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    let g = DirectedGraph::from_edges(n, edges).unwrap();
    weighted_walk(rng, &g)
}

/// Influence or constraint matrix drawn from a mix of shapes that hit both
/// convergent and periodic cases.
pub fn mixed_matrix(rng: &mut StreamRng, n: usize) -> StochasticMatrix {
    match rng.random_range(0..5) {
        0 => {
            let g = DirectedGraph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap();
            weighted_walk(rng, &g)
        }
        1 => {
            let g = DirectedGraph::undirected(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap();
            weighted_walk(rng, &g)
        }
        2 => {
            let g = random_digraph(rng, n, 0.5, 1.0);
            weighted_walk(rng, &g)
        }
        _ => {
            let p = rng.random_range(0.2..0.7);
            let g = random_digraph(rng, n, p, 0.0);
            weighted_walk(rng, &g)
        }
    }
}

/// Random system with `n, m ≤ max`; about a third fully oblivious, the rest
/// mixing oblivious, partly and fully stubborn agents.
pub fn random_system(rng: &mut StreamRng, max: usize) -> BeliefSystem {
    let n = rng.random_range(1..=max);
    let m = rng.random_range(1..=max);
    let a = mixed_matrix(rng, n);
    let c = mixed_matrix(rng, m);
    let oblivious = rng.random::<f64>() < 0.35;
    let lambda: Vec<f64> = (0..n)
        .map(|_| {
            if oblivious {
                return 1.0;
            }
            match rng.random_range(0..6) {
                0 => 0.0,
                1 | 2 => rng.random_range(0.05..0.95),
                _ => 1.0,
            }
        })
        .collect();
    let x0: Vec<f64> = (0..n * m).map(|_| rng.random::<f64>()).collect();
    BeliefSystem::assemble(a, c, lambda, x0).unwrap()
}

pub fn dense(m: &StochasticMatrix) -> Vec<Vec<f64>> {
    let n = m.dim();
    (0..n)
        .map(|i| (0..n).map(|j| m.get(i, j)).collect())
        .collect()
}

pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (n, k, m) = (a.len(), b.len(), b.first().map_or(0, Vec::len));
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for t in 0..k {
            let x = a[i][t];
            if x != 0.0 {
                for j in 0..m {
                    out[i][j] += x * b[t][j];
                }
            }
        }
    }
    out
}

pub fn vecmat(v: &[f64], a: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; a.first().map_or(0, Vec::len)];
    for (i, &x) in v.iter().enumerate() {
        for (o, &w) in out.iter_mut().zip(&a[i]) {
            *o += x * w;
        }
    }
    out
}

pub fn dense_kron(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (n, m) = (a.len(), b.len());
    let mut out = vec![vec![0.0; n * m]; n * m];
    for i in 0..n {
        for j in 0..n {
            for u in 0..m {
                for v in 0..m {
                    out[i * m + u][j * m + v] = a[i][j] * b[u][v];
                }
            }
        }
    }
    out
}

/// One step of `X ← ΛAXCᵀ + (I − Λ)X0` on dense row-major `n × m` data.
pub fn dense_update(
    a: &[Vec<f64>],
    c: &[Vec<f64>],
    lambda: &[f64],
    x: &[f64],
    x0: &[f64],
) -> Vec<f64> {
    let (n, m) = (a.len(), c.len());
    let mut xc = vec![0.0; n * m];
    for j in 0..n {
        for u in 0..m {
            xc[j * m + u] = (0..m).map(|v| c[u][v] * x[j * m + v]).sum();
        }
    }
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        for u in 0..m {
            let s: f64 = (0..n).map(|j| a[i][j] * xc[j * m + u]).sum();
            out[i * m + u] = lambda[i] * s + (1.0 - lambda[i]) * x0[i * m + u];
        }
    }
    out
}

pub fn max_abs_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Boolean reachability (reflexive) by Floyd–Warshall.
pub fn reachability(g: &DirectedGraph) -> Vec<Vec<bool>> {
    let n = g.node_count();
    let mut r = vec![vec![false; n]; n];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = true;
        for &j in g.out_neighbors(i) {
            row[j] = true;
        }
    }
    for k in 0..n {
        for i in 0..n {
            if r[i][k] {
                for j in 0..n {
                    if r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
    }
    r
}

/// Components as sorted node lists, ordered by smallest member.
pub fn oracle_components(g: &DirectedGraph) -> Vec<Vec<usize>> {
    let r = reachability(g);
    let n = g.node_count();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let comp: Vec<usize> = (0..n).filter(|&j| r[i][j] && r[j][i]).collect();
        for &j in &comp {
            seen[j] = true;
        }
        out.push(comp);
    }
    out
}

pub fn sorted_components(comps: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = comps
        .iter()
        .map(|c| {
            let mut c = c.clone();
            c.sort_unstable();
            c
        })
        .collect();
    out.sort();
    out
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Period of a component as the gcd of closed-walk lengths up to `2n²`,
/// from boolean powers of the induced adjacency matrix; 0 when the
/// component has no closed walk.
pub fn oracle_period(g: &DirectedGraph, comp: &[usize]) -> u64 {
    let s = comp.len();
    let idx = |v: usize| comp.iter().position(|&c| c == v);
    let mut adj = vec![vec![false; s]; s];
    for (a, &u) in comp.iter().enumerate() {
        for &v in g.out_neighbors(u) {
            if let Some(b) = idx(v) {
                adj[a][b] = true;
            }
        }
    }
    let mut pow = adj.clone();
    let mut d = 0u64;
    for len in 1..=(2 * s * s).max(2) as u64 {
        if (0..s).any(|i| pow[i][i]) {
            d = gcd(d, len);
        }
        let mut next = vec![vec![false; s]; s];
        for i in 0..s {
            for k in 0..s {
                if pow[i][k] {
                    for j in 0..s {
                        if adj[k][j] {
                            next[i][j] = true;
                        }
                    }
                }
            }
        }
        pow = next;
    }
    d
}

pub fn equal_walk(g: &DirectedGraph) -> StochasticMatrix {
    kronmix::equal_weight_matrix(g).unwrap()
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        assert!(d.abs() > 1e-14, "singular system");
        for r in col + 1..n {
            let f = a[r][col] / d;
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Chain with `classes` closed classes (ergodic blocks of 1 to 3 states)
/// followed by transient states that always have a path onward.
/// Returns the matrix and the transient states.
pub fn transient_structure(rng: &mut StreamRng) -> (StochasticMatrix, Vec<usize>) {
    let classes = rng.random_range(1..=3);
    let mut edges = Vec::new();
    let mut class_nodes = Vec::new();
    let mut next = 0;
    for _ in 0..classes {
        let size = rng.random_range(1..=3);
        let nodes: Vec<usize> = (next..next + size).collect();
        for (k, &u) in nodes.iter().enumerate() {
            edges.push((u, nodes[(k + 1) % size]));
        }
        edges.push((nodes[0], nodes[0]));
        next += size;
        class_nodes.extend(nodes);
    }
    let t = rng.random_range(2..=9);
    let transient: Vec<usize> = (next..next + t).collect();
    let n = next + t;
    for (k, &u) in transient.iter().enumerate() {
        let onward = if k + 1 < t && rng.random::<f64>() < 0.6 {
            transient[k + 1]
        } else {
            class_nodes[rng.random_range(0..class_nodes.len())]
        };
        edges.push((u, onward));
        for _ in 0..rng.random_range(0..3) {
            edges.push((u, rng.random_range(next..n)));
        }
        if rng.random::<f64>() < 0.3 {
            edges.push((u, class_nodes[rng.random_range(0..class_nodes.len())]));
        }
    }
    let g = DirectedGraph::from_edges(n, edges).unwrap();
    (weighted_walk(rng, &g), transient)
}
