//! Classic topologies and seeded random graph models.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Cycle,
    Path,
    Star,
    TwoStar,
    Complete,
    Dumbbell,
    Lollipop,
    Bolas,
    BinaryTree,
    Hypercube,
    Grid,
    Torus,
    EulerianRing,
    ErdosRenyi,
    NewmanWatts,
    Geometric,
}

impl Family {
    pub const ALL: [Family; 16] = [
        Family::Cycle,
        Family::Path,
        Family::Star,
        Family::TwoStar,
        Family::Complete,
        Family::Dumbbell,
        Family::Lollipop,
        Family::Bolas,
        Family::BinaryTree,
        Family::Hypercube,
        Family::Grid,
        Family::Torus,
        Family::EulerianRing,
        Family::ErdosRenyi,
        Family::NewmanWatts,
        Family::Geometric,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Cycle => "cycle",
            Family::Path => "path",
            Family::Star => "star",
            Family::TwoStar => "two-star",
            Family::Complete => "complete",
            Family::Dumbbell => "dumbbell",
            Family::Lollipop => "lollipop",
            Family::Bolas => "bolas",
            Family::BinaryTree => "binary-tree",
            Family::Hypercube => "hypercube",
            Family::Grid => "grid",
            Family::Torus => "torus",
            Family::EulerianRing => "eulerian-ring",
            Family::ErdosRenyi => "erdos-renyi",
            Family::NewmanWatts => "newman-watts",
            Family::Geometric => "geometric",
        }
    }

    fn stream(self) -> u64 {
        Family::ALL.iter().position(|&f| f == self).unwrap() as u64 + 1
    }

    fn supports_direction(self) -> bool {
        matches!(
            self,
            Family::Cycle | Family::Path | Family::Star | Family::ErdosRenyi
        )
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        let alias = match key.as_str() {
            "grid-kd" => "grid",
            "torus-kd" => "torus",
            "er" | "gnp" => "erdos-renyi",
            "nw" | "small-world" => "newman-watts",
            "tree" => "binary-tree",
            "eulerian" => "eulerian-ring",
            "twostar" => "two-star",
            other => other,
        };
        Family::ALL
            .iter()
            .copied()
            .find(|f| f.name() == alias)
            .ok_or_else(|| Error::Spec(format!("unknown topology family '{s}'")))
    }
}

/// Parameters of a generated topology.
///
/// `n` is the node count for most families. For `grid` and `torus` it is the
/// side length and `k` the dimension; for `hypercube` only `k` is used. For
/// `newman-watts` `k` is the number of ring neighbours per side and for
/// `eulerian-ring` the out-degree. `bridge` is the path length of a bolas
/// graph (default `⌈n/3⌉`).
#[derive(Debug, Clone, PartialEq)]
pub struct TopologySpec {
    pub family: Family,
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub r: f64,
    pub bridge: Option<usize>,
    pub directed: bool,
    pub seed: u64,
}

impl TopologySpec {
    pub fn new(family: Family, n: usize) -> Self {
        TopologySpec {
            family,
            n,
            k: match family {
                Family::Grid | Family::Torus => 2,
                Family::Hypercube => 3,
                _ => 1,
            },
            p: 0.0,
            r: 0.0,
            bridge: None,
            directed: false,
            seed: 0,
        }
    }

    pub fn cycle(n: usize) -> Self {
        Self::new(Family::Cycle, n)
    }

    pub fn path(n: usize) -> Self {
        Self::new(Family::Path, n)
    }

    pub fn star(n: usize) -> Self {
        Self::new(Family::Star, n)
    }

    pub fn complete(n: usize) -> Self {
        Self::new(Family::Complete, n)
    }

    pub fn binary_tree(n: usize) -> Self {
        Self::new(Family::BinaryTree, n)
    }

    pub fn hypercube(k: usize) -> Self {
        TopologySpec {
            k,
            ..Self::new(Family::Hypercube, 1 << k.min(30))
        }
    }

    pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Self {
        TopologySpec {
            p,
            seed,
            ..Self::new(Family::ErdosRenyi, n)
        }
    }

    pub fn newman_watts(n: usize, k: usize, p: f64, seed: u64) -> Self {
        TopologySpec {
            k,
            p,
            seed,
            ..Self::new(Family::NewmanWatts, n)
        }
    }

    pub fn geometric(n: usize, r: f64, seed: u64) -> Self {
        TopologySpec {
            r,
            seed,
            ..Self::new(Family::Geometric, n)
        }
    }

    pub fn directed(mut self, directed: bool) -> Self {
        self.directed = directed;
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_bridge(mut self, bridge: usize) -> Self {
        self.bridge = Some(bridge);
        self
    }

    /// Sets the size parameter swept by experiments (`n`, or `k` for hypercubes).
    pub fn with_size(mut self, size: usize) -> Self {
        if self.family == Family::Hypercube {
            self.k = size;
            self.n = 1 << size.min(30);
        } else {
            self.n = size;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Spec(format!("{}: {msg}", self.family.name())));
        if self.directed && !self.family.supports_direction() {
            return fail("no directed variant".into());
        }
        let min_n = match self.family {
            Family::Cycle if self.directed => 1,
            Family::Cycle => 2,
            Family::Path => 1,
            Family::Star => 2,
            Family::TwoStar => 4,
            Family::Complete => 2,
            Family::Dumbbell => 4,
            Family::Lollipop => 3,
            Family::Bolas => 4,
            Family::BinaryTree => 1,
            Family::Hypercube => 0,
            Family::Grid => 2,
            Family::Torus => 3,
            Family::EulerianRing => 2,
            Family::ErdosRenyi => 1,
            Family::NewmanWatts => 3,
            Family::Geometric => 1,
        };
        if self.family != Family::Hypercube && self.n < min_n {
            return fail(format!("n = {} below minimum {min_n}", self.n));
        }
        match self.family {
            Family::Hypercube if self.k == 0 || self.k > 24 => {
                fail(format!("k = {} not in 1..=24", self.k))
            }
            Family::Grid | Family::Torus if self.k == 0 => {
                fail("dimension k must be positive".into())
            }
            Family::Grid | Family::Torus if (self.n as f64).powi(self.k as i32) > 1e8 => {
                fail("grid too large".into())
            }
            Family::EulerianRing if self.k == 0 || self.k >= self.n => {
                fail(format!("out-degree k = {} not in 1..n", self.k))
            }
            Family::NewmanWatts if self.k == 0 || 2 * self.k >= self.n => {
                fail(format!("ring degree k = {} needs 1 <= 2k < n", self.k))
            }
            Family::ErdosRenyi | Family::NewmanWatts if !(0.0..=1.0).contains(&self.p) => {
                fail(format!("p = {} not in [0, 1]", self.p))
            }
            Family::Geometric if !(self.r > 0.0 && self.r <= 2f64.sqrt()) => {
                fail(format!("r = {} not in (0, sqrt 2]", self.r))
            }
            Family::Bolas => {
                let b = self.bolas_bridge();
                if self.n < b + 4 {
                    fail(format!("bridge {b} leaves cliques smaller than 2"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    fn bolas_bridge(&self) -> usize {
        self.bridge.unwrap_or(self.n.div_ceil(3))
    }
}

impl fmt::Display for TopologySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:n={}", self.family.name(), self.n)?;
        match self.family {
            Family::Grid | Family::Torus | Family::Hypercube | Family::EulerianRing => {
                write!(f, ",k={}", self.k)?
            }
            Family::NewmanWatts => write!(f, ",k={},p={},seed={}", self.k, self.p, self.seed)?,
            Family::ErdosRenyi => write!(f, ",p={},seed={}", self.p, self.seed)?,
            Family::Geometric => write!(f, ",r={},seed={}", self.r, self.seed)?,
            Family::Bolas => write!(f, ",bridge={}", self.bolas_bridge())?,
            _ => {}
        }
        if self.directed {
            write!(f, ",directed=true")?;
        }
        Ok(())
    }
}

/// Parses `family[:key=value,...]`, e.g. `erdos-renyi:n=50,p=0.1,seed=7`.
impl FromStr for TopologySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (family, rest) = s.split_once(':').unwrap_or((s, ""));
        let family: Family = family.parse()?;
        let mut spec = TopologySpec::new(family, 0);
        let mut saw_n = false;
        for kv in rest.split(',').map(str::trim).filter(|kv| !kv.is_empty()) {
            let (key, value) = kv
                .split_once('=')
                .ok_or_else(|| Error::Spec(format!("expected key=value, got '{kv}'")))?;
            let bad = |_| Error::Spec(format!("bad value for {key}: '{value}'"));
            match key.trim() {
                "n" => {
                    spec.n = value.trim().parse().map_err(bad)?;
                    saw_n = true;
                }
                "k" => spec.k = value.trim().parse().map_err(bad)?,
                "p" => {
                    spec.p = value
                        .trim()
                        .parse()
                        .map_err(|_| Error::Spec(format!("bad p '{value}'")))?
                }
                "r" => {
                    spec.r = value
                        .trim()
                        .parse()
                        .map_err(|_| Error::Spec(format!("bad r '{value}'")))?
                }
                "bridge" => spec.bridge = Some(value.trim().parse().map_err(bad)?),
                "seed" => spec.seed = value.trim().parse().map_err(bad)?,
                "directed" => {
                    spec.directed = value
                        .trim()
                        .parse()
                        .map_err(|_| Error::Spec(format!("bad directed flag '{value}'")))?
                }
                other => return Err(Error::Spec(format!("unknown parameter '{other}'"))),
            }
        }
        if family == Family::Hypercube {
            spec.n = 1 << spec.k.min(30);
        } else if !saw_n {
            return Err(Error::Spec(format!("{}: missing n", family.name())));
        }
        Ok(spec)
    }
}

fn clique(offset: usize, size: usize, edges: &mut Vec<(usize, usize)>) {
    for i in 0..size {
        for j in i + 1..size {
            edges.push((offset + i, offset + j));
        }
    }
}

/// Builds the graph described by `spec`. Deterministic for a fixed spec.
pub fn generate(spec: &TopologySpec) -> Result<DirectedGraph> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = stream_rng(spec.seed, spec.family.stream());
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let node_count;
    match spec.family {
        Family::Cycle => {
            node_count = n;
            edges.extend((0..n).map(|i| (i, (i + 1) % n)));
        }
        Family::Path => {
            node_count = n;
            edges.extend((0..n.saturating_sub(1)).map(|i| (i, i + 1)));
            if spec.directed {
                edges.push((n - 1, n - 1));
            }
        }
        Family::Star => {
            node_count = n;
            edges.extend((1..n).map(|leaf| (leaf, 0)));
            if spec.directed {
                edges.push((0, 0));
            }
        }
        Family::TwoStar => {
            node_count = n;
            let second = n.div_ceil(2);
            edges.extend((1..second).map(|leaf| (leaf, 0)));
            edges.extend((second + 1..n).map(|leaf| (leaf, second)));
            edges.push((0, second));
        }
        Family::Complete => {
            node_count = n;
            clique(0, n, &mut edges);
        }
        Family::Dumbbell => {
            node_count = n;
            let a = n.div_ceil(2);
            clique(0, a, &mut edges);
            clique(a, n - a, &mut edges);
            edges.push((a - 1, a));
        }
        Family::Lollipop => {
            node_count = n;
            let a = n.div_ceil(2);
            clique(0, a, &mut edges);
            edges.extend((a - 1..n - 1).map(|i| (i, i + 1)));
        }
        Family::Bolas => {
            node_count = n;
            let b = spec.bolas_bridge();
            let a = (n - b).div_ceil(2);
            clique(0, a, &mut edges);
            clique(a + b, n - a - b, &mut edges);
            edges.extend((a - 1..a + b).map(|i| (i, i + 1)));
        }
        Family::BinaryTree => {
            node_count = n;
            edges.extend((1..n).map(|child| ((child - 1) / 2, child)));
        }
        Family::Hypercube => {
            node_count = 1usize << spec.k;
            for v in 0..node_count {
                for bit in 0..spec.k {
                    let w = v ^ (1 << bit);
                    if v < w {
                        edges.push((v, w));
                    }
                }
            }
        }
        Family::Grid | Family::Torus => {
            let (side, dims) = (n, spec.k);
            node_count = side.pow(dims as u32);
            let wrap = spec.family == Family::Torus;
            for v in 0..node_count {
                let mut stride = 1;
                for _ in 0..dims {
                    let coord = (v / stride) % side;
                    if coord + 1 < side {
                        edges.push((v, v + stride));
                    } else if wrap {
                        edges.push((v, v + stride - side * stride));
                    }
                    stride *= side;
                }
            }
        }
        Family::EulerianRing => {
            let list: Vec<_> = (0..n)
                .flat_map(|i| (1..=spec.k).map(move |d| (i, (i + d) % n)))
                .collect();
            return DirectedGraph::from_edges(n, list);
        }
        Family::ErdosRenyi => {
            node_count = n;
            for i in 0..n {
                let start = if spec.directed { 0 } else { i + 1 };
                for j in start..n {
                    if i != j && rng.random::<f64>() < spec.p {
                        edges.push((i, j));
                    }
                }
            }
        }
        Family::NewmanWatts => {
            node_count = n;
            for u in 0..n {
                for d in 1..=spec.k {
                    edges.push((u, (u + d) % n));
                    if rng.random::<f64>() < spec.p {
                        let mut w = rng.random_range(0..n - 1);
                        if w >= u {
                            w += 1;
                        }
                        edges.push((u, w));
                    }
                }
            }
        }
        Family::Geometric => {
            node_count = n;
            let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random(), rng.random())).collect();
            let r2 = spec.r * spec.r;
            for i in 0..n {
                for j in i + 1..n {
                    let (dx, dy) = (pts[i].0 - pts[j].0, pts[i].1 - pts[j].1);
                    if dx * dx + dy * dy <= r2 {
                        edges.push((i, j));
                    }
                }
            }
        }
    }
    if spec.directed {
        DirectedGraph::from_edges(node_count, edges)
    } else {
        DirectedGraph::undirected(node_count, edges)
    }
}

/// Gives every node a self-loop of weight `alpha` and rescales its other
/// out-edges to share `1 - alpha`. A node with no other out-edge keeps a
/// loop of weight 1.
pub fn lazify(graph: &DirectedGraph, alpha: f64) -> Result<DirectedGraph> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Spec(format!("laziness {alpha} not in [0, 1)")));
    }
    let mut edges = Vec::with_capacity(graph.edge_count() + graph.node_count());
    for i in 0..graph.node_count() {
        let targets = graph.out_neighbors(i);
        let weights = graph.out_weights(i);
        let others: Vec<(usize, f64)> = targets
            .iter()
            .enumerate()
            .filter(|(_, &t)| t != i)
            .map(|(e, &t)| (t, weights.map_or(1.0, |w| w[e])))
            .collect();
        let total: f64 = others.iter().map(|e| e.1).sum();
        if others.is_empty() || total == 0.0 {
            edges.push((i, i, 1.0));
            continue;
        }
        edges.push((i, i, alpha));
        edges.extend(
            others
                .into_iter()
                .map(|(t, w)| (i, t, (1.0 - alpha) * w / total)),
        );
    }
    Ok(
        DirectedGraph::from_weighted_edges(graph.node_count(), edges)?
            .with_directed(graph.is_directed()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scc::scc_decompose;
    use crate::stochastic::equal_weight_matrix;

    #[test]
    fn directed_cycle_counts() {
        let g = generate(&TopologySpec::cycle(5).directed(true)).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (5, 5));
    }

    #[test]
    fn hypercube_is_regular() {
        let g = generate(&TopologySpec::hypercube(3)).unwrap();
        assert_eq!(g.node_count(), 8);
        assert!((0..8).all(|v| g.out_degree(v) == 3));
    }

    #[test]
    fn erdos_renyi_degenerate_probabilities() {
        let full = generate(&TopologySpec::erdos_renyi(50, 1.0, 3)).unwrap();
        assert_eq!(full.edge_count(), 50 * 49);
        let none = generate(&TopologySpec::erdos_renyi(50, 0.0, 3)).unwrap();
        assert_eq!(none.edge_count(), 0);
    }

    #[test]
    fn geometric_full_radius_is_complete() {
        let g = generate(&TopologySpec::geometric(30, 2f64.sqrt(), 11)).unwrap();
        assert_eq!(g.edge_count(), 30 * 29);
    }

    #[test]
    fn newman_watts_without_shortcuts_is_ring() {
        let g = generate(&TopologySpec::newman_watts(12, 2, 0.0, 5)).unwrap();
        assert!((0..12).all(|v| g.out_degree(v) == 4));
        assert!(g.has_edge(0, 2) && g.has_edge(0, 10) && !g.has_edge(0, 3));
    }

    #[test]
    fn random_families_are_seed_deterministic() {
        for spec in [
            TopologySpec::erdos_renyi(40, 0.2, 9),
            TopologySpec::newman_watts(40, 2, 0.3, 9),
            TopologySpec::geometric(40, 0.3, 9),
        ] {
            let a: Vec<_> = generate(&spec).unwrap().edges().collect();
            let b: Vec<_> = generate(&spec).unwrap().edges().collect();
            assert_eq!(a, b);
            let other = TopologySpec { seed: 10, ..spec };
            let c: Vec<_> = generate(&other).unwrap().edges().collect();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn directed_path_and_star_have_no_dangling_nodes() {
        for spec in [
            TopologySpec::path(6).directed(true),
            TopologySpec::star(6).directed(true),
        ] {
            let g = generate(&spec).unwrap();
            assert!((0..g.node_count()).all(|v| g.out_degree(v) >= 1));
        }
    }

    #[test]
    fn composite_shapes() {
        let d = generate(&TopologySpec::new(Family::Dumbbell, 10)).unwrap();
        assert_eq!(d.edge_count(), 2 * (2 * 10 + 1));
        let b = generate(&TopologySpec::new(Family::Bolas, 12).with_bridge(4)).unwrap();
        // two K4 (6 edges each) joined by a path through 4 nodes (5 edges)
        assert_eq!(b.edge_count(), 2 * (6 + 6 + 5));
        let s = generate(&TopologySpec::new(Family::TwoStar, 8)).unwrap();
        assert_eq!(s.edge_count(), 2 * 7);
        assert!(s.has_edge(0, 4));
        let l = generate(&TopologySpec::new(Family::Lollipop, 8)).unwrap();
        assert_eq!(l.edge_count(), 2 * (6 + 4));
        let t = generate(&TopologySpec::new(Family::Torus, 4)).unwrap();
        assert!((0..16).all(|v| t.out_degree(v) == 4));
        let grid = generate(&TopologySpec::new(Family::Grid, 3).with_k(3)).unwrap();
        assert_eq!(grid.node_count(), 27);
        assert_eq!(grid.out_degree(13), 6);
        let e = generate(&TopologySpec::new(Family::EulerianRing, 7).with_k(2)).unwrap();
        assert!((0..7).all(|v| e.out_degree(v) == 2));
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(generate(&TopologySpec::erdos_renyi(10, 1.5, 0)).is_err());
        assert!(generate(&TopologySpec::geometric(10, 0.0, 0)).is_err());
        assert!(generate(&TopologySpec::complete(5).directed(true)).is_err());
        assert!(generate(&TopologySpec::newman_watts(6, 3, 0.1, 0)).is_err());
    }

    #[test]
    fn spec_round_trips_through_text() {
        let spec: TopologySpec = "erdos-renyi:n=50,p=0.1,seed=7".parse().unwrap();
        assert_eq!(spec, TopologySpec::erdos_renyi(50, 0.1, 7));
        assert_eq!(spec.to_string().parse::<TopologySpec>().unwrap(), spec);
        assert!("cycle".parse::<TopologySpec>().is_err());
        assert!("blob:n=3".parse::<TopologySpec>().is_err());
    }

    #[test]
    fn lazify_makes_aperiodic_with_half_diagonal() {
        let c2 = generate(&TopologySpec::cycle(2).directed(true)).unwrap();
        let lazy = lazify(&c2, 0.5).unwrap();
        let d = scc_decompose(&lazy);
        assert!((0..d.component_count()).all(|c| d.period(c).value == 1));

        let g = generate(&TopologySpec::binary_tree(15)).unwrap();
        let m = equal_weight_matrix(&lazify(&g, 0.5).unwrap()).unwrap();
        for i in 0..15 {
            assert!((m.get(i, i) - 0.5).abs() < 1e-15);
            assert!((m.csr().row_sum(i) - 1.0).abs() < 1e-12);
        }
    }
}
